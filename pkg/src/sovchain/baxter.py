"""Quantum spectral curve: Q-polynomials, their uniqueness, the Q-operator.

For an on-shell transfer eigenvalue t the finite-difference equation

    alpha(lam) Q(lam - 2 eta) - beta(lam) t(lam - eta) Q(lam - eta)
        + detq(lam) Q(lam) = 0,     beta = k1 a,  alpha(lam) = beta(lam) beta(lam - eta)

has a unique polynomial solution of degree at most 2*sum(s_n) with no root
on a bottom grid node. Its values on the grid are fixed ratios built from
the fused eigenvalues; the one remaining degree of freedom per site (the
bottom-node values) is pinned by interpolating through the grid plus one
auxiliary point zeta and enforcing the left-out top-node conditions, an
N x N linear system solved here both directly and through its Cramer
determinants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ChainSpec, index_of, multi_indices
from .errors import NonInvertibleQ, RootOnForbiddenNode, SingularCZeta
from .numerics import (CDTYPE, frob, lagrange_cardinal, poly_coeffs_from_samples,
                       poly_eval, random_complex, trim_trailing)
from .sov_bases import CovectorBasis, sklyanin_basis
from .spectrum import (TransferPolynomial, brute_force_spectrum, site_q_values,
                       wavefunction_sov2)
from .transfer import TransferEvaluator

__all__ = [
    "q_values",
    "QPolynomial",
    "CZetaSystem",
    "default_zeta",
    "solve_q_polynomial",
    "tq_residual",
    "tq_residual_shifted",
    "degenerate_q_closed_form",
    "wronskian_values",
    "QOperator",
    "build_q_operator",
    "q_operator_commutation_residual",
    "q_operator_tq_residual",
    "q_operator_invertibility",
    "sov_from_q",
    "sov_q_factorization",
]


def q_values(t: TransferPolynomial, cross_check=True, tol=1e-9) -> dict:
    """Grid ratios Q(xi_n^(h)) / Q(xi_n^(2s_n)) keyed by (n, h).

    Closed form from the fused eigenvalues; when ``cross_check`` is set the
    values are re-derived by the backward two-term recursion

        Qr(h-1) = [t(xi^(h)) Qr(h) - k1 a(xi^(h)) Qr(h+1)] / (k2 d(xi^(h)))

    and the two routes must agree.
    """
    chain = t.chain
    twist = chain.twist
    out = {}
    for n, site in enumerate(chain.sites):
        closed = site_q_values(t, n)
        if cross_check:
            m = site.two_s
            rec = np.zeros(m + 1, dtype=CDTYPE)
            rec[m] = 1.0
            node_m = chain.node(n, m)
            rec[m - 1] = t(node_m) / (twist.k2 * chain.d(node_m))
            for h in range(m - 1, 0, -1):
                node = chain.node(n, h)
                rec[h - 1] = (t(node) * rec[h] - twist.k1 * chain.a(node) * rec[h + 1]) \
                    / (twist.k2 * chain.d(node))
            scale = max(1.0, float(np.max(np.abs(closed))))
            if np.max(np.abs(rec - closed)) > tol * scale:
                raise ValueError(
                    f"site {n}: recursion and closed-form Q values disagree by "
                    f"{np.max(np.abs(rec - closed)):.3e}")
        for h in range(site.two_s + 1):
            out[(n, h)] = complex(closed[h])
    return out


@dataclass
class QPolynomial:
    """Monic Q-polynomial for one spectrum point.

    ``coeffs`` are monic ascending coefficients after trailing-coefficient
    truncation; ``node_values`` hold the zeta-normalized (Q(zeta) = 1)
    solution values on the full grid.
    """

    chain: ChainSpec
    coeffs: np.ndarray
    node_values: dict
    zeta: complex
    leftout_residual: float

    def __call__(self, lam: complex) -> complex:
        return complex(poly_eval(self.coeffs, lam))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def roots(self) -> np.ndarray:
        if self.degree == 0:
            return np.zeros(0, dtype=CDTYPE)
        return np.roots(self.coeffs[::-1])


@dataclass
class CZetaSystem:
    """The N x N interpolation-closure system and its Cramer data."""

    matrix: np.ndarray
    rhs: np.ndarray
    det: complex
    column_dets: np.ndarray
    q_grid: dict = field(repr=False)
    zeta: complex = 0j


class _Interpolation:
    """Lagrange grid: nodes xi_a^(h), h = 1..2s_a, plus the auxiliary zeta."""

    def __init__(self, chain: ChainSpec, zeta: complex):
        self.chain = chain
        self.zeta = complex(zeta)
        self.pairs = [(a, h) for a, site in enumerate(chain.sites)
                      for h in range(1, site.two_s + 1)]
        self.nodes = np.array([chain.node(a, h) for a, h in self.pairs] + [self.zeta],
                              dtype=CDTYPE)

    def cardinal(self, j, lam):
        return lagrange_cardinal(self.nodes, j, lam)

    def zeta_cardinal(self, lam):
        return lagrange_cardinal(self.nodes, len(self.pairs), lam)

    def site_sum(self, b, lam, q_grid):
        """F_b(lam): cardinal-weighted grid ratios of site b."""
        out = 0.0 + 0.0j
        for j, (a, h) in enumerate(self.pairs):
            if a == b:
                out += self.cardinal(j, lam) * q_grid[(a, h)]
        return out


def _closure_system(interp: _Interpolation, q_grid) -> CZetaSystem:
    chain = interp.chain
    n = chain.n_sites
    c = np.zeros((n, n), dtype=CDTYPE)
    rhs = np.zeros(n, dtype=CDTYPE)
    for a in range(n):
        top = chain.node(a, 0)
        rhs[a] = -interp.zeta_cardinal(top)
        for b in range(n):
            c[a, b] = interp.site_sum(b, top, q_grid)
        c[a, a] -= q_grid[(a, 0)]
    det = complex(np.linalg.det(c))
    col_dets = np.zeros(n, dtype=CDTYPE)
    for j in range(n):
        cj = c.copy()
        cj[:, j] = rhs
        col_dets[j] = np.linalg.det(cj)
    return CZetaSystem(matrix=c, rhs=rhs, det=det, column_dets=col_dets,
                       q_grid=q_grid, zeta=interp.zeta)


def default_zeta(chain: ChainSpec, salt=20, min_dist=1.0, max_tries=32) -> complex:
    """Seeded auxiliary point at least ``min_dist * |eta|`` from every grid node."""
    rng = chain.rng(salt)
    nodes = [node for _, _, node in chain.all_nodes()]
    floor = min_dist * abs(chain.eta)
    for _ in range(max_tries):
        cand = complex(random_complex(rng, box=6.0))
        if all(abs(cand - z) > floor for z in nodes):
            return cand
    raise SingularCZeta("could not place the auxiliary interpolation point")


def solve_q_polynomial(t: TransferPolynomial, zeta=None, det_floor=1e-10,
                       trim_tol=1e-9, root_floor=1e-6) -> QPolynomial:
    """Unique monic Q-polynomial paired with the eigenvalue t.

    Sets Q(zeta) = 1, solves the closure system for the bottom-node values,
    interpolates through the full node set, verifies the N left-out top-node
    conditions, and strips the result to monic coefficients. Raises
    SingularCZeta for an unlucky auxiliary point and RootOnForbiddenNode if
    a root lands on a bottom grid node.
    """
    chain = t.chain
    if zeta is None:
        zeta = default_zeta(chain)
    q_grid = q_values(t)
    interp = _Interpolation(chain, zeta)
    system = _closure_system(interp, q_grid)
    scale = max(1.0, float(np.prod(np.linalg.norm(system.matrix, axis=1))))
    if abs(system.det) < det_floor * scale:
        raise SingularCZeta(f"closure system determinant {abs(system.det):.3e} "
                            f"below floor at zeta={zeta}")
    q_bottom = np.linalg.solve(system.matrix, system.rhs)

    node_values = {}
    for (a, h), val in q_grid.items():
        node_values[(a, h)] = complex(val * q_bottom[a])
    sample_values = np.array(
        [node_values[pair] for pair in interp.pairs] + [1.0], dtype=CDTYPE)

    # the N conditions at the top nodes were not used in the interpolation
    worst = 0.0
    for a in range(chain.n_sites):
        top = chain.node(a, 0)
        direct = interp.zeta_cardinal(top) + sum(
            interp.cardinal(j, top) * sample_values[j] for j in range(len(interp.pairs)))
        target = node_values[(a, 0)]
        worst = max(worst, abs(direct - target) / max(1.0, abs(target)))

    coeffs = poly_coeffs_from_samples(interp.nodes, sample_values)
    coeffs = trim_trailing(coeffs, trim_tol)
    coeffs = coeffs / coeffs[-1]
    qpoly = QPolynomial(chain=chain, coeffs=coeffs, node_values=node_values,
                        zeta=complex(zeta), leftout_residual=float(worst))
    forbidden = [chain.node(b, chain.sites[b].two_s) for b in range(chain.n_sites)]
    for root in qpoly.roots():
        if any(abs(root - z) < root_floor for z in forbidden):
            raise RootOnForbiddenNode(f"Q root {root} collides with a bottom node")
    return qpoly


def tq_residual(t: TransferPolynomial, q, n_samples=None, rng=None) -> float:
    """Max relative residual of the finite-difference equation on random points."""
    chain = t.chain
    eta = chain.eta
    k1 = chain.twist.k1
    if n_samples is None:
        n_samples = 3 * chain.n_sites
    rng = rng or chain.rng(21)
    worst = 0.0
    for _ in range(n_samples):
        lam = complex(random_complex(rng, box=3.0))
        beta = k1 * chain.a(lam)
        alpha = beta * k1 * chain.a(lam - eta)
        terms = np.array([
            alpha * q(lam - 2 * eta),
            -beta * t(lam - eta) * q(lam - eta),
            chain.det_q(lam) * q(lam),
        ])
        worst = max(worst, abs(terms.sum()) / max(1.0, np.abs(terms).sum()))
    return worst


def tq_residual_shifted(t: TransferPolynomial, q, n_samples=None, rng=None) -> float:
    """Residual of the first-order-normalized form of the spectral curve.

    Checks k1 a(lam) Q(lam-eta) - t(lam) Q(lam) + k2 d(lam) Q(lam+eta) = 0,
    which stays nontrivial in the k1 = 0 degeneration where every term of
    the second-order form carries a k1 factor.
    """
    chain = t.chain
    eta = chain.eta
    if n_samples is None:
        n_samples = 3 * chain.n_sites
    rng = rng or chain.rng(22)
    worst = 0.0
    for _ in range(n_samples):
        lam = complex(random_complex(rng, box=3.0))
        terms = np.array([
            chain.twist.k1 * chain.a(lam) * q(lam - eta),
            -t(lam) * q(lam),
            chain.twist.k2 * chain.d(lam) * q(lam + eta),
        ])
        worst = max(worst, abs(terms.sum()) / max(1.0, np.abs(terms).sum()))
    return worst


def degenerate_q_closed_form(chain: ChainSpec, h) -> np.ndarray:
    """Monic Q coefficients for the k1 = 0 degeneration, label h.

    The eigenvalue k2 prod_n (lam - xi_n^(h_n)) pairs with the polynomial
    whose roots are the top h_n grid nodes of each site, i.e.
    prod_n prod_{k=0}^{h_n - 1} (lam - xi_n^(k)).
    """
    coeffs = np.array([1.0], dtype=CDTYPE)
    for n, hn in enumerate(h):
        for k in range(hn):
            root = chain.node(n, k)
            coeffs = np.convolve(coeffs, np.array([-root, 1.0], dtype=CDTYPE))
    return coeffs


def wronskian_values(p, q, chain: ChainSpec, lams) -> float:
    """Max of |Q(lam) P(lam-eta) - P(lam) Q(lam-eta)| over the sample points."""
    worst = 0.0
    for lam in lams:
        w = q(lam) * p(lam - chain.eta) - p(lam) * q(lam - chain.eta)
        scale = max(1.0, abs(q(lam) * p(lam - chain.eta)) + abs(p(lam) * q(lam - chain.eta)))
        worst = max(worst, abs(w) / scale)
    return worst


# ---------------------------------------------------------------------------
# Q-operator
# ---------------------------------------------------------------------------

@dataclass
class QOperator:
    """Commuting operator family with eigenvalues Q_t(lam) / Q_t(zeta).

    Normalized so the family is the identity at zeta; the normalization
    cancels in commutation and spectral-curve identities and in the inverse
    products used for basis generation.
    """

    chain: ChainSpec
    zeta: complex
    method: str
    vectors: np.ndarray
    left: np.ndarray
    _eigen_fns: list

    def eigenvalues(self, lam: complex) -> np.ndarray:
        return np.array([fn(lam) for fn in self._eigen_fns], dtype=CDTYPE)

    def __call__(self, lam: complex) -> np.ndarray:
        return (self.vectors * self.eigenvalues(lam)) @ self.left


def build_q_operator(chain: ChainSpec, method="eigenbasis", zeta=None,
                     records=None, evaluator=None) -> QOperator:
    """Assemble the Q-operator from the simultaneous transfer eigenbasis.

    ``method='eigenbasis'`` uses each record's interpolated Q-polynomial.
    ``method='determinant'`` evaluates, per joint eigenvalue, the ratio
    det[C + Delta(lam)] / det[C] times the node-ratio prefactor, where Delta
    is the rank-one update whose column space is the scaled closure
    right-hand side; every entry is a polynomial in the commuting transfer
    values, so operator entries reduce to these scalars in the eigenbasis.
    """
    twist = chain.twist
    if not twist.invertible or abs(twist.k1 - twist.k2) < 1e-12 * (1 + abs(twist.k1)):
        raise ValueError("Q-operator requires invertible twist with distinct eigenvalues")
    evaluator = evaluator or TransferEvaluator(chain)
    if records is None:
        records = brute_force_spectrum(chain, evaluator=evaluator)
    if zeta is None:
        zeta = default_zeta(chain)
    eigen_fns = []
    for rec in records:
        if method == "eigenbasis":
            qpoly = solve_q_polynomial(rec.t, zeta=zeta)
            norm = qpoly(zeta)
            eigen_fns.append(lambda lam, qp=qpoly, nz=norm: qp(lam) / nz)
        elif method == "determinant":
            eigen_fns.append(_determinant_eigen_fn(rec.t, zeta))
        else:
            raise ValueError(f"unknown method {method!r}")
    vectors = np.column_stack([rec.vector for rec in records])
    left = np.vstack([rec.left for rec in records])
    return QOperator(chain=chain, zeta=complex(zeta), method=method,
                     vectors=vectors, left=left, _eigen_fns=eigen_fns)


def _determinant_eigen_fn(t: TransferPolynomial, zeta: complex):
    chain = t.chain
    q_grid = q_values(t)
    interp = _Interpolation(chain, zeta)
    system = _closure_system(interp, q_grid)
    scale = max(1.0, float(np.prod(np.linalg.norm(system.matrix, axis=1))))
    if abs(system.det) < 1e-10 * scale:
        raise SingularCZeta("closure system is singular; pick another zeta")

    def evaluate(lam: complex) -> complex:
        g = interp.zeta_cardinal(lam)
        f = np.array([interp.site_sum(b, lam, q_grid) for b in range(chain.n_sites)],
                     dtype=CDTYPE)
        if abs(g) > 1e-8:
            delta = np.outer(system.rhs / g, f)
            return complex(np.linalg.det(system.matrix + delta) / system.det * g)
        # lam sits on (or hugs) a grid node: use the rank-one expansion of the
        # same determinant, which stays finite there
        adj_r = np.linalg.solve(system.matrix, system.rhs)
        return complex(g + f @ adj_r)

    return evaluate


def q_operator_commutation_residual(qop: QOperator, evaluator, lams, mus) -> float:
    worst = 0.0
    for lam in lams:
        q = qop(lam)
        for mu in mus:
            tm = evaluator.transfer(mu)
            worst = max(worst, frob(q @ tm - tm @ q) / max(1.0, frob(q) * frob(tm)))
    return worst


def q_operator_tq_residual(qop: QOperator, evaluator, lams) -> float:
    """Operator-level spectral-curve residual at the sample points."""
    chain = qop.chain
    eta = chain.eta
    k1 = chain.twist.k1
    worst = 0.0
    for lam in lams:
        beta = k1 * chain.a(lam)
        alpha = beta * k1 * chain.a(lam - eta)
        op = (alpha * qop(lam - 2 * eta)
              - beta * evaluator.transfer(lam - eta) @ qop(lam - eta)
              + chain.det_q(lam) * qop(lam))
        scale = max(1.0, abs(alpha) * frob(qop(lam - 2 * eta)),
                    abs(beta) * frob(evaluator.transfer(lam - eta)) * frob(qop(lam - eta)),
                    abs(chain.det_q(lam)) * frob(qop(lam)))
        worst = max(worst, frob(op) / scale)
    return worst


def q_operator_invertibility(qop: QOperator, cond_limit=1e8) -> dict:
    """Condition numbers of Q at each bottom grid node; raises when singular."""
    chain = qop.chain
    out = {}
    for n, site in enumerate(chain.sites):
        node = chain.node(n, site.two_s)
        cond = float(np.linalg.cond(qop(node)))
        out[(n, site.two_s)] = cond
        if not np.isfinite(cond) or cond > cond_limit:
            raise NonInvertibleQ(f"Q at bottom node of site {n} has cond {cond:.3e}")
    return out


def sov_from_q(chain: ChainSpec, qop: QOperator, source=None, validate=True) -> CovectorBasis:
    """Covector basis generated by Q-operator products on a left covector.

    Row h applies prod_a Q(xi_a^(h_a)) to the source. The default source is
    the top Sklyanin row hit by the inverse Q at every bottom node, for which
    the family reproduces the Sklyanin basis row by row.
    """
    cache = {}

    def q_at(n, h):
        key = (n, h)
        if key not in cache:
            cache[key] = qop(chain.node(n, h))
        return cache[key]

    if source is None:
        skl = sklyanin_basis(chain)
        top = tuple(site.two_s for site in chain.sites)
        source = skl.row(top).copy()
        for n, site in enumerate(chain.sites):
            source = source @ np.linalg.inv(q_at(n, site.two_s))
    source = np.asarray(source, dtype=CDTYPE)

    d = chain.dim
    rows = np.zeros((d, d), dtype=CDTYPE)
    partial = {(): source}
    for h in multi_indices(chain):
        vec = partial[()]
        for n in range(chain.n_sites):
            key = h[: n + 1]
            if key not in partial:
                partial[key] = partial[h[:n]] @ q_at(n, h[n])
            vec = partial[key]
        rows[index_of(chain, h)] = vec
    basis = CovectorBasis(rows=rows, kind="q_generated", chain=chain, source=source)
    if validate:
        from .sov_bases import _require_full_rank

        _require_full_rank(basis)
    return basis


def sov_q_factorization(t: TransferPolynomial, qpoly) -> float:
    """Spread of wavefunction(h) around c * prod_n Q(xi_n^(h_n)).

    Fits the single global constant in least squares and reports the max
    deviation relative to the largest wavefunction coordinate.
    """
    chain = t.chain
    psi = wavefunction_sov2(t)
    hs = multi_indices(chain)
    prod_q = np.array([np.prod([qpoly(chain.node(n, hn)) for n, hn in enumerate(h)])
                       for h in hs], dtype=CDTYPE)
    target = np.array([psi[h] for h in hs], dtype=CDTYPE)
    denom = np.vdot(prod_q, prod_q)
    if abs(denom) == 0.0:
        return float(np.max(np.abs(target)))
    c = np.vdot(prod_q, target) / denom
    return float(np.max(np.abs(target - c * prod_q)) / max(1.0, np.max(np.abs(target))))
