"""Complete spectrum: brute-force oracle, discrete system, SoV eigenvectors.

Spectrum candidates are degree-N polynomials with leading coefficient tr(K),
parametrized by their values x_a at the top grid nodes xi_a^(0). A candidate
is on-shell iff, for every site n, the (2s_n+1)-dimensional tridiagonal
scalar matrix with diagonal t(xi_n^(0))..t(xi_n^(2s_n)), superdiagonal
-k1 a(node) and subdiagonal -k2 d(node) is singular. Determinants and their
x-derivatives are evaluated by the three-term recurrence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ChainSpec, multi_indices
from .errors import CountMismatch, NearDegenerateSpectrum, NonConvergence, ResidualTooLarge
from .numerics import CDTYPE, frob, lagrange_cardinal, random_complex
from .transfer import TransferEvaluator

__all__ = [
    "TransferPolynomial",
    "EigenRecord",
    "brute_force_spectrum",
    "discrete_matrix",
    "discrete_residuals",
    "jacobian_smallest_sv",
    "solve_discrete_system",
    "closed_form_solutions",
    "match_to_oracle",
    "fused_eigenvalues",
    "trailing_minors",
    "leading_minor",
    "site_q_values",
    "wavefunction_sov1",
    "wavefunction_sov2",
    "wavefunction_action_report",
    "eigenvector_from_sov",
]


@dataclass
class TransferPolynomial:
    """Degree-N polynomial with leading coefficient tr(K), stored by its
    values x_a at the top grid nodes."""

    chain: ChainSpec
    x: np.ndarray
    _fused_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=CDTYPE)
        if self.x.shape != (self.chain.n_sites,):
            raise ValueError(f"expected {self.chain.n_sites} node values, got {self.x.shape}")

    def __call__(self, lam: complex) -> complex:
        chain = self.chain
        nodes0 = [chain.node(a, 0) for a in range(chain.n_sites)]
        out = chain.twist.trace
        for z in nodes0:
            out *= lam - z
        for a in range(chain.n_sites):
            out += lagrange_cardinal(nodes0, a, lam) * self.x[a]
        return complex(out)

    def fused_value(self, level: int, lam: complex) -> complex:
        """Scalar fusion recursion t^(level)(lam); level 0 gives 1."""
        if level < 0:
            raise ValueError(f"level must be >= 0, got {level}")
        key = (level, complex(lam))
        if key in self._fused_cache:
            return self._fused_cache[key]
        if level == 0:
            out = 1.0 + 0.0j
        elif level == 1:
            out = self(lam)
        else:
            shift = lam + (level - 1) * self.chain.eta
            out = (self(shift) * self.fused_value(level - 1, lam)
                   - self.chain.det_q(shift) * self.fused_value(level - 2, lam))
        self._fused_cache[key] = out
        return out


@dataclass
class EigenRecord:
    """One spectrum point from the brute-force oracle."""

    t: TransferPolynomial
    vector: np.ndarray
    left: np.ndarray
    lam0: complex
    value_at_lam0: complex


def brute_force_spectrum(chain: ChainSpec, lam0=None, evaluator=None):
    """Independent oracle: dense diagonalization of T at one generic point.

    Node values are read off each eigenpair as left . T(node) . right. Raises
    NearDegenerateSpectrum when the eigenvalue gap at the probe point falls
    under tolerance (re-seed the chain in that case).
    """
    evaluator = evaluator or TransferEvaluator(chain)
    if lam0 is None:
        lam0 = complex(random_complex(chain.rng(10), box=2.0)) + 0.25j
    t0 = evaluator.transfer(lam0)
    vals, vecs = np.linalg.eig(t0)
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    scale = 1.0 + float(np.max(np.abs(vals)))
    gaps = np.abs(vals[:, None] - vals[None, :]) + np.eye(len(vals)) * scale
    if gaps.min() < chain.tolerances.zero * scale:
        raise NearDegenerateSpectrum(
            f"min eigenvalue gap {gaps.min():.3e} at probe point {lam0}")
    left = np.linalg.inv(vecs)
    records = []
    for i in range(chain.dim):
        x = np.array([left[i] @ evaluator.transfer(chain.node(a, 0)) @ vecs[:, i]
                      for a in range(chain.n_sites)], dtype=CDTYPE)
        records.append(EigenRecord(
            t=TransferPolynomial(chain, x),
            vector=vecs[:, i].copy(),
            left=left[i].copy(),
            lam0=complex(lam0),
            value_at_lam0=complex(vals[i]),
        ))
    return records


# ---------------------------------------------------------------------------
# the discrete characterization
# ---------------------------------------------------------------------------

def discrete_matrix(t: TransferPolynomial, n: int) -> np.ndarray:
    """Site-n tridiagonal matrix whose singularity characterizes the spectrum."""
    chain = t.chain
    site = chain.sites[n]
    m = site.two_s + 1
    out = np.zeros((m, m), dtype=CDTYPE)
    for k in range(m):
        node = chain.node(n, k)
        out[k, k] = t(node)
        if k + 1 < m:
            out[k, k + 1] = -chain.twist.k1 * chain.a(node)
        if k > 0:
            out[k, k - 1] = -chain.twist.k2 * chain.d(node)
    return out


def _site_data(chain: ChainSpec, n: int):
    """Nodes and off-diagonal entries for site n's tridiagonal matrix."""
    site = chain.sites[n]
    nodes = [chain.node(n, k) for k in range(site.two_s + 1)]
    sup = [-chain.twist.k1 * chain.a(z) for z in nodes[:-1]]
    sub = [-chain.twist.k2 * chain.d(z) for z in nodes[1:]]
    return nodes, sup, sub


def _leading_minors(diag, sup, sub):
    """Principal minors f_0..f_m (f_0 = 1) of a scalar tridiagonal matrix."""
    m = len(diag)
    f = [1.0 + 0.0j, diag[0]]
    for j in range(2, m + 1):
        f.append(diag[j - 1] * f[j - 1] - sup[j - 2] * sub[j - 2] * f[j - 2])
    return f


def _magnitude_scale(diag, sup, sub) -> float:
    """Same recurrence on absolute values; bounds the determinant magnitude."""
    m = len(diag)
    f = [1.0, abs(diag[0])]
    for j in range(2, m + 1):
        f.append(abs(diag[j - 1]) * f[j - 1] + abs(sup[j - 2] * sub[j - 2]) * f[j - 2])
    return max(1.0, f[m])


def discrete_residuals(t: TransferPolynomial, chain=None) -> np.ndarray:
    """Per-site determinants of the discrete system, scale-normalized."""
    chain = chain or t.chain
    out = np.zeros(chain.n_sites, dtype=CDTYPE)
    for n in range(chain.n_sites):
        nodes, sup, sub = _site_data(chain, n)
        diag = [t(z) for z in nodes]
        f = _leading_minors(diag, sup, sub)
        out[n] = f[-1] / _magnitude_scale(diag, sup, sub)
    return out


class _DiscreteSystem:
    """Residual and Jacobian of the discrete system in the unknowns x_a."""

    def __init__(self, chain: ChainSpec):
        self.chain = chain
        nodes0 = [chain.node(a, 0) for a in range(chain.n_sites)]
        self.sites = []
        for n in range(chain.n_sites):
            nodes, sup, sub = _site_data(chain, n)
            base = np.array([chain.twist.trace * np.prod([z - w for w in nodes0])
                             for z in nodes], dtype=CDTYPE)
            coeff = np.array([[lagrange_cardinal(nodes0, a, z)
                               for a in range(chain.n_sites)] for z in nodes], dtype=CDTYPE)
            self.sites.append((base, coeff, sup, sub))

    def residual(self, x):
        """(raw determinants, per-site magnitude scales)."""
        res = np.zeros(self.chain.n_sites, dtype=CDTYPE)
        scales = np.zeros(self.chain.n_sites)
        for n, (base, coeff, sup, sub) in enumerate(self.sites):
            diag = base + coeff @ x
            f = _leading_minors(diag, sup, sub)
            res[n] = f[-1]
            scales[n] = _magnitude_scale(diag, sup, sub)
        return res, scales

    def jacobian(self, x):
        n_sites = self.chain.n_sites
        jac = np.zeros((n_sites, n_sites), dtype=CDTYPE)
        for n, (base, coeff, sup, sub) in enumerate(self.sites):
            diag = base + coeff @ x
            m = len(diag)
            f = [1.0 + 0.0j, diag[0]]
            df = [np.zeros(n_sites, dtype=CDTYPE), coeff[0].copy()]
            for j in range(2, m + 1):
                off = sup[j - 2] * sub[j - 2]
                f.append(diag[j - 1] * f[j - 1] - off * f[j - 2])
                df.append(coeff[j - 1] * f[j - 1] + diag[j - 1] * df[j - 1] - off * df[j - 2])
            jac[n] = df[-1]
        return jac


def jacobian_smallest_sv(t: TransferPolynomial) -> float:
    """Smallest singular value of the system Jacobian at t, relative to the largest."""
    system = _DiscreteSystem(t.chain)
    sv = np.linalg.svd(system.jacobian(t.x), compute_uv=False)
    return float(sv[-1] / max(1.0, sv[0]))


def closed_form_solutions(chain: ChainSpec):
    """Spectrum for a twist with one vanishing eigenvalue.

    With k2 = 0 (resp. k1 = 0) every solution is k prod_n (lam - xi_n^(h_n))
    over a multi-index h, k being the nonzero eigenvalue.
    """
    twist = chain.twist
    k = twist.k1 if abs(twist.k2) <= abs(twist.k1) else twist.k2
    sols = []
    for h in multi_indices(chain):
        hnodes = [chain.node(n, hn) for n, hn in enumerate(h)]
        x = np.array([k * np.prod([chain.node(a, 0) - z for z in hnodes])
                      for a in range(chain.n_sites)], dtype=CDTYPE)
        sols.append(TransferPolynomial(chain, x))
    return sols


def solve_discrete_system(chain: ChainSpec, seeds=None, max_iter=50,
                          newton_tol=1e-13, dedup_tol=1e-6):
    """All solutions of the discrete system, refined by damped Newton.

    Seeds default to the brute-force oracle node values (the honest check is
    that Newton converges from them and the refined set is complete). With a
    non-invertible twist the closed-form branch is returned with zero Newton
    iterations. Returns (solutions, diagnostics); raises CountMismatch when
    the number of distinct converged solutions differs from dim(H).
    """
    if not chain.twist.invertible:
        sols = closed_form_solutions(chain)
        diag = {"branch": "closed-form", "newton_iterations": 0, "failures": []}
        if len(sols) != chain.dim:
            raise CountMismatch(f"{len(sols)} solutions != dim {chain.dim}")
        return sols, diag

    if seeds is None:
        seeds = [rec.t.x for rec in brute_force_spectrum(chain)]
    system = _DiscreteSystem(chain)
    solutions = []
    failures = []
    total_iters = 0
    for idx, seed in enumerate(seeds):
        x = np.asarray(seed, dtype=CDTYPE).copy()
        converged = False
        for _ in range(max_iter):
            res, scales = system.residual(x)
            err = float(np.max(np.abs(res) / scales))
            if err < newton_tol:
                converged = True
                break
            try:
                step = np.linalg.solve(system.jacobian(x), res)
            except np.linalg.LinAlgError:
                break
            factor = 1.0
            norm0 = np.linalg.norm(res / scales)
            for _ in range(8):
                x_try = x - factor * step
                res_try, scales_try = system.residual(x_try)
                if np.linalg.norm(res_try / scales_try) <= norm0:
                    break
                factor *= 0.5
            x = x - factor * step
            total_iters += 1
        if converged:
            solutions.append(x)
        else:
            failures.append(NonConvergence(f"seed {idx} did not converge"))
    distinct = _dedup(solutions, dedup_tol)
    diag = {
        "branch": "newton",
        "newton_iterations": total_iters,
        "failures": [str(f) for f in failures],
        "duplicates_collapsed": len(solutions) - len(distinct),
    }
    if len(distinct) != chain.dim:
        raise CountMismatch(
            f"found {len(distinct)} distinct solutions, expected {chain.dim}")
    sols = [TransferPolynomial(chain, x) for x in distinct]
    sols.sort(key=lambda t: (t.x[0].real, t.x[0].imag))
    return sols, diag


def _dedup(xs, tol_rel):
    kept = []
    for x in xs:
        scale = 1.0 + float(np.max(np.abs(x)))
        if all(np.max(np.abs(x - y)) >= tol_rel * scale for y in kept):
            kept.append(x)
    return kept


def match_to_oracle(solutions, records):
    """Greedy nearest-match of discrete solutions to oracle records.

    Returns (indices, distances, is_bijection): indices[i] is the solution
    matched to records[i]; distances are max-norm gaps scaled by 1+max|x|.
    """
    used = set()
    indices = []
    distances = []
    for rec in records:
        scale = 1.0 + float(np.max(np.abs(rec.t.x)))
        dists = [float(np.max(np.abs(sol.x - rec.t.x))) / scale for sol in solutions]
        j = int(np.argmin(dists))
        indices.append(j)
        distances.append(dists[j])
        used.add(j)
    return indices, distances, len(used) == len(records)


# ---------------------------------------------------------------------------
# fused eigenvalues, wavefunctions, eigenvectors
# ---------------------------------------------------------------------------

def fused_eigenvalues(t: TransferPolynomial, chain=None) -> dict:
    """Values t^(l) at each site's bottom node for l = 0..2s_n+1.

    Computed by the scalar fusion recursion; equal to the trailing principal
    minors of the site's tridiagonal matrix (checked in the tests), and zero
    at l = 2s_n + 1 exactly when t is on-shell.
    """
    chain = chain or t.chain
    out = {}
    for n, site in enumerate(chain.sites):
        bottom = chain.node(n, site.two_s)
        for level in range(site.two_s + 2):
            out[(n, level)] = t.fused_value(level, bottom)
    return out


def trailing_minors(t: TransferPolynomial, n: int):
    """Determinants of the trailing l x l blocks of site n's matrix, l = 0..m."""
    chain = t.chain
    nodes, sup, sub = _site_data(chain, n)
    diag = [t(z) for z in nodes]
    m = len(diag)
    g = [1.0 + 0.0j, diag[-1]]
    for l in range(2, m + 1):
        j = m - l  # top row of the trailing block
        g.append(diag[j] * g[l - 1] - sup[j] * sub[j] * g[l - 2])
    return g


def leading_minor(t: TransferPolynomial, n: int) -> complex:
    """Determinant of site n's matrix with its last row and column removed."""
    chain = t.chain
    nodes, sup, sub = _site_data(chain, n)
    diag = [t(z) for z in nodes]
    return complex(_leading_minors(diag, sup, sub)[-2])


def site_q_values(t: TransferPolynomial, n: int) -> np.ndarray:
    """Ratios Q(xi_n^(h)) / Q(xi_n^(2s_n)) for h = 0..2s_n.

    Closed form: the (2s_n - h)-th fused value at the bottom node over
    k2^(2s_n-h) times the partial product of d above level h.
    """
    chain = t.chain
    site = chain.sites[n]
    twist = chain.twist
    bottom = chain.node(n, site.two_s)
    vals = np.zeros(site.two_s + 1, dtype=CDTYPE)
    for h in range(site.two_s + 1):
        level = site.two_s - h
        denom = twist.k2 ** level
        for k in range(level):
            denom *= chain.d(chain.node(n, site.two_s - k))
        vals[h] = t.fused_value(level, bottom) / denom
    return vals


def wavefunction_sov1(t: TransferPolynomial) -> dict:
    """Coordinates of the eigenvector in the first SoV basis.

    Product over sites of the site's next-to-bottom fused value raised to h_n
    (equivalently the leading minor of the discrete matrix).
    """
    chain = t.chain
    charges = [t.fused_value(site.two_s, chain.node(n, site.two_s - 1))
               for n, site in enumerate(chain.sites)]
    out = {}
    for h in multi_indices(chain):
        val = 1.0 + 0.0j
        for n, hn in enumerate(h):
            val *= charges[n] ** hn
        out[h] = val
    return out


def wavefunction_sov2(t: TransferPolynomial) -> dict:
    """Coordinates in the second SoV basis, normalized to 1 at h = (2s..2s)."""
    chain = t.chain
    per_site = [site_q_values(t, n) for n in range(chain.n_sites)]
    out = {}
    for h in multi_indices(chain):
        val = 1.0 + 0.0j
        for n, hn in enumerate(h):
            val *= per_site[n][hn]
        out[h] = val
    return out


def wavefunction_action_report(t: TransferPolynomial) -> float:
    """Pointwise eigen-relation residual of the factorized wavefunction.

    Checks k1 a(node) psi(h+e_n) + k2 d(node) psi(h-e_n) = t(node) psi(h)
    for every h and n, with out-of-range entries treated as zero.
    """
    chain = t.chain
    twist = chain.twist
    psi = wavefunction_sov2(t)
    worst = 0.0
    for h in multi_indices(chain):
        for n in range(chain.n_sites):
            node = chain.node(n, h[n])
            up = list(h)
            up[n] += 1
            down = list(h)
            down[n] -= 1
            lhs = (twist.k1 * chain.a(node) * _get_or_zero(psi, up, chain)
                   + twist.k2 * chain.d(node) * _get_or_zero(psi, down, chain))
            rhs = t(node) * psi[h]
            scale = max(1.0, abs(lhs), abs(rhs))
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def _get_or_zero(psi, h, chain):
    for hn, d in zip(h, chain.dims):
        if not 0 <= hn < d:
            return 0.0 + 0.0j
    return psi[tuple(h)]


def eigenvector_from_sov(t: TransferPolynomial, basis, evaluator=None,
                         n_checks=3, check_tol=1e-7):
    """Solve rows(basis) . v = wavefunction for the eigenvector v.

    Verifies T(mu) v = t(mu) v at ``n_checks`` random points; raises
    ResidualTooLarge beyond ``check_tol``. Returns (v, residual).
    """
    chain = t.chain
    evaluator = evaluator or TransferEvaluator(chain)
    psi = wavefunction_sov2(t)
    rhs = np.array([psi[h] for h in multi_indices(chain)], dtype=CDTYPE)
    v = np.linalg.solve(basis.rows, rhs)
    rng = chain.rng(17)
    worst = 0.0
    for _ in range(n_checks):
        mu = complex(random_complex(rng, box=2.0))
        lhs = evaluator.transfer(mu) @ v
        worst = max(worst, frob(lhs - t(mu) * v) / max(1.0, frob(lhs), abs(t(mu)) * frob(v)))
    if worst > check_tol:
        raise ResidualTooLarge(f"eigen-relation residual {worst:.3e} > {check_tol:.1e}")
    return v, worst
