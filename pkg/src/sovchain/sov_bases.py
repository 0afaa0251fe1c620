"""The three covector separation-of-variables bases and their verifiers.

Three constructions of a covector basis indexed by h = (h_1..h_N),
h_n in 0..2s_n:

* ``sklyanin_basis``: repeated action of the twisted A-operator at grid
  points on the tensor-product reference covector. The rows are
  eigencovectors of the twisted B-family (of its W-conjugate when the
  twist's b entry vanishes).
* ``sov_basis_1``: powers of the site-local fundamental fused transfer
  matrices acting on a generic covector.
* ``sov_basis_2``: the full fused tower evaluated at the bottom grid nodes;
  with the generating covector set to the top Sklyanin row the two bases
  coincide row by row.

Out-of-range shifted multi-indices denote the zero covector throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec, index_of, multi_indices
from .errors import DegenerateBasis
from .numerics import CDTYPE, frob, lagrange_cardinal
from .transfer import (TransferEvaluator, global_fused_twist_product,
                       monodromy_blocks, reference_covector)

__all__ = [
    "CovectorBasis",
    "sklyanin_norm",
    "sklyanin_basis",
    "sov_basis_1",
    "sov_basis_2",
    "tensor_generating_covector",
    "gram_rank",
    "b_eigen_report",
    "shift_action_report",
    "separate_action_report",
]


@dataclass
class CovectorBasis:
    """Ordered family of dim(H) covectors; row order is lexicographic in h."""

    rows: np.ndarray
    kind: str
    chain: ChainSpec
    source: np.ndarray

    def row(self, h) -> np.ndarray:
        return self.rows[index_of(self.chain, h)]

    def row_or_zero(self, h) -> np.ndarray:
        """Row for h, or the zero covector when h is out of range."""
        for hn, d in zip(h, self.chain.dims):
            if not 0 <= hn < d:
                return np.zeros(self.chain.dim, dtype=CDTYPE)
        return self.row(h)


def sklyanin_norm(chain: ChainSpec) -> complex:
    """Overall normalization prod_{b<a} (xi_a^(0) - xi_b^(0))^(1/2).

    Principal square-root branch; this is a single global scalar on the
    basis, so the branch choice washes out of every identification test.
    """
    out = 1.0 + 0.0j
    for a in range(chain.n_sites):
        for b in range(a):
            out *= complex(chain.node(a, 0) - chain.node(b, 0)) ** 0.5
    return out


def _build_rows_from_site_factors(chain, start, factor):
    """Rows <h| = start @ prod_n factor(n, h_n), filled in lexicographic order.

    ``factor(n, k)`` must return the operator advancing slot n from k-1 to k;
    factors at different sites are assumed to commute in effect, so each row
    is derived from the predecessor with one slot decremented.
    """
    d = chain.dim
    rows = np.zeros((d, d), dtype=CDTYPE)
    order = multi_indices(chain)
    rows[0] = start
    for h in order[1:]:
        m = max(n for n, hn in enumerate(h) if hn > 0)
        parent = list(h)
        parent[m] -= 1
        rows[index_of(chain, h)] = rows[index_of(chain, tuple(parent))] @ factor(m, h[m])
    return rows


def sklyanin_basis(chain: ChainSpec, validate=True) -> CovectorBasis:
    """Covector eigenbasis of the twisted B-family.

    Row h is the reference covector hit by A^(K)(xi_n^(k)) / (k1 a(xi_n^(k)))
    for k = 0..h_n-1 at every site, divided by the global normalization.
    When the twist has b = 0 the W-conjugated twist drives the products and
    the rows are multiplied by the inverse of the fused conjugator.
    """
    twist = chain.twist
    if not twist.invertible:
        raise ValueError("Sklyanin construction requires an invertible twist")
    conj = twist.needs_conjugation
    k_build = twist.conjugated() if conj else twist.matrix

    a_ops = {}
    for n, site in enumerate(chain.sites):
        for k in range(site.two_s):
            node = chain.node(n, k)
            blocks = monodromy_blocks(chain, node, twist_matrix=k_build)
            a_ops[(n, k)] = blocks.a / (twist.k1 * chain.a(node))

    norm = sklyanin_norm(chain)
    if abs(norm) < 1e-150:
        # coinciding top nodes; keep rows finite so the rank check can report
        norm = 1.0
    start = reference_covector(chain) / norm
    rows = _build_rows_from_site_factors(chain, start, lambda n, k: a_ops[(n, k - 1)])
    if conj:
        w_glob = global_fused_twist_product(chain, twist.w)
        rows = rows @ np.linalg.inv(w_glob)
    basis = CovectorBasis(rows=rows, kind="sklyanin", chain=chain,
                          source=reference_covector(chain))
    if validate:
        _require_full_rank(basis)
    return basis


def sov_basis_1(chain: ChainSpec, source=None, evaluator=None, validate=True) -> CovectorBasis:
    """Basis from powers of the fundamental fused charges.

    Row h applies (T^(2s_n) at the next-to-bottom node of site n)^(h_n) to the
    generating covector. Default source: seeded complex-Gaussian covector.
    """
    twist = chain.twist
    if not twist.invertible:
        raise ValueError("this construction requires an invertible twist")
    evaluator = evaluator or TransferEvaluator(chain)
    charges = [evaluator.fused(site.two_s, chain.node(n, site.two_s - 1))
               for n, site in enumerate(chain.sites)]
    if source is None:
        source = _gaussian_covector(chain, salt=1)
    rows = _build_rows_from_site_factors(chain, source, lambda n, k: charges[n])
    basis = CovectorBasis(rows=rows, kind="sov1", chain=chain, source=np.asarray(source))
    if validate:
        _require_full_rank(basis)
    return basis


def sov_basis_2(chain: ChainSpec, source=None, evaluator=None, validate=True) -> CovectorBasis:
    """Basis from the fused tower at the bottom grid nodes.

    Row h multiplies the generating covector by, per site,
    k2^(h_n - 2s_n) T^(2s_n - h_n)(bottom node) over the partial product of
    d at the nodes above h_n. Row h = (2s_1..2s_N) is the source itself.
    """
    twist = chain.twist
    if not twist.invertible:
        raise ValueError("this construction requires an invertible twist")
    evaluator = evaluator or TransferEvaluator(chain)
    if source is None:
        source = _gaussian_covector(chain, salt=2)
    factors = []
    for n, site in enumerate(chain.sites):
        per_site = []
        bottom = chain.node(n, site.two_s)
        for hn in range(site.two_s + 1):
            denom = 1.0 + 0.0j
            for k in range(site.two_s - hn):
                denom *= chain.d(chain.node(n, site.two_s - k))
            coeff = twist.k2 ** (hn - site.two_s) / denom
            per_site.append(coeff * evaluator.fused(site.two_s - hn, bottom))
        factors.append(per_site)

    d = chain.dim
    rows = np.zeros((d, d), dtype=CDTYPE)
    partial = {(): np.asarray(source, dtype=CDTYPE)}
    for h in multi_indices(chain):
        vec = partial[()]
        for n in range(chain.n_sites):
            key = h[: n + 1]
            if key not in partial:
                partial[key] = partial[h[:n]] @ factors[n][h[n]]
            vec = partial[key]
        rows[index_of(chain, h)] = vec
    basis = CovectorBasis(rows=rows, kind="sov2", chain=chain, source=np.asarray(source))
    if validate:
        _require_full_rank(basis)
    return basis


def tensor_generating_covector(chain: ChainSpec, salt=3, max_tries=16) -> np.ndarray:
    """Tensor-product generating covector with per-site orbit validation.

    Each local covector is re-drawn until its orbit under powers of the
    site's fused twist spans the local space.
    """
    from .chain import fused_twist
    from .numerics import random_complex

    rng = chain.rng(salt)
    locals_ = []
    for site in chain.sites:
        k_loc = fused_twist(chain.twist, site.two_s)
        for _ in range(max_tries):
            cand = random_complex(rng, size=site.dim, box=1.0)
            orbit = np.zeros((site.dim, site.dim), dtype=CDTYPE)
            vec = cand.copy()
            for h in range(site.dim):
                orbit[h] = vec
                vec = vec @ k_loc
            sv = np.linalg.svd(orbit, compute_uv=False)
            if sv[-1] > 1e-8 * sv[0]:
                locals_.append(cand)
                break
        else:
            raise DegenerateBasis("no spanning local covector found; twist "
                                  "orbit is degenerate")
    out = locals_[0]
    for vec in locals_[1:]:
        out = np.kron(out, vec)
    return out


def gram_rank(basis: CovectorBasis, precision="double"):
    """Numerical rank and smallest singular value of the row family.

    Rows are norm-equilibrated before the SVD so the rank decision is not
    distorted by the widely different row magnitudes of the raw products.
    ``precision='extended'`` reruns the decision with 30-digit arithmetic.
    """
    rows = basis.rows
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0.0):
        return 0, 0.0
    eq = rows / norms[:, None]
    tol = basis.chain.tolerances.gram
    if precision == "extended":
        import mpmath

        with mpmath.workdps(30):
            m = mpmath.matrix([[mpmath.mpc(z) for z in row] for row in eq])
            sv = mpmath.svd_c(m, compute_uv=False)
            svals = sorted((float(s) for s in sv), reverse=True)
    elif precision == "double":
        svals = np.linalg.svd(eq, compute_uv=False)
    else:
        raise ValueError(f"unknown precision {precision!r}")
    rank = int(np.sum(np.asarray(svals) > tol * svals[0]))
    return rank, float(svals[-1])


def _require_full_rank(basis: CovectorBasis):
    rank, smallest = gram_rank(basis)
    if rank < basis.chain.dim:
        raise DegenerateBasis(
            f"{basis.kind} covector family has rank {rank} < {basis.chain.dim} "
            f"(smallest singular value {smallest:.3e}); re-seed the chain or source")


def _gaussian_covector(chain: ChainSpec, salt: int) -> np.ndarray:
    rng = chain.rng(salt)
    return (rng.standard_normal(chain.dim) + 1j * rng.standard_normal(chain.dim)).astype(CDTYPE)


# ---------------------------------------------------------------------------
# verification reports
# ---------------------------------------------------------------------------

def _acting_blocks(chain: ChainSpec, lam: complex):
    """Blocks whose actions the Sklyanin rows diagonalize/shift.

    For b != 0 these are the plain twisted blocks. For b = 0 they are the
    conjugated family W_glob . block(K_bar) . W_glob^-1, with the eigenvalue
    prefactors read off the conjugated twist.
    """
    twist = chain.twist
    if not twist.needs_conjugation:
        blocks = monodromy_blocks(chain, lam)
        return blocks, twist.a, twist.b, twist.d
    kbar = twist.conjugated()
    blocks = monodromy_blocks(chain, lam, twist_matrix=kbar)
    w_glob = global_fused_twist_product(chain, twist.w)
    w_inv = np.linalg.inv(w_glob)
    conj = lambda mat: w_glob @ mat @ w_inv
    from .transfer import MonodromyBlocks

    blocks = MonodromyBlocks(a=conj(blocks.a), b=conj(blocks.b),
                             c=conj(blocks.c), d=conj(blocks.d))
    return blocks, complex(kbar[0, 0]), complex(kbar[0, 1]), complex(kbar[1, 1])


def b_eigen_report(basis: CovectorBasis, lams) -> float:
    """Max relative residual of the B-eigenvalue relation over rows and lams."""
    chain = basis.chain
    worst = 0.0
    for lam in lams:
        blocks, _, b_entry, _ = _acting_blocks(chain, lam)
        acted = basis.rows @ blocks.b
        for h in multi_indices(chain):
            i = index_of(chain, h)
            eig = b_entry
            for n, hn in enumerate(h):
                eig *= lam - chain.node(n, hn)
            resid = acted[i] - eig * basis.rows[i]
            scale = max(1.0, abs(eig) * frob(basis.rows[i]), frob(acted[i]))
            worst = max(worst, frob(resid) / scale)
    return worst


def shift_action_report(basis: CovectorBasis, lams=None) -> dict:
    """Residuals of the A/D raising/lowering actions on the Sklyanin rows.

    At a spectral parameter equal to a grid value of site a the action
    collapses to the single shifted row; at general lam it is the
    interpolation sum plus the diagonal term carrying the twist's own
    diagonal entry times prod_n (lam - xi_n^(h_n)).
    """
    chain = basis.chain
    twist = chain.twist
    if lams is None:
        lams = [node for _, _, node in chain.all_nodes()]
    worst_a = 0.0
    worst_d = 0.0
    for lam in lams:
        blocks, a_entry, _, d_entry = _acting_blocks(chain, lam)
        acted_a = basis.rows @ blocks.a
        acted_d = basis.rows @ blocks.d
        for h in multi_indices(chain):
            i = index_of(chain, h)
            hnodes = [chain.node(n, hn) for n, hn in enumerate(h)]
            diag = np.prod([lam - z for z in hnodes]) if hnodes else 1.0
            rhs_a = a_entry * diag * basis.rows[i]
            rhs_d = d_entry * diag * basis.rows[i]
            for n in range(chain.n_sites):
                card = lagrange_cardinal(hnodes, n, lam)
                up = list(h)
                up[n] += 1
                down = list(h)
                down[n] -= 1
                rhs_a = rhs_a + card * twist.k1 * chain.a(hnodes[n]) * basis.row_or_zero(up)
                rhs_d = rhs_d + card * twist.k2 * chain.d(hnodes[n]) * basis.row_or_zero(down)
            scale_a = max(1.0, frob(acted_a[i]), frob(rhs_a))
            scale_d = max(1.0, frob(acted_d[i]), frob(rhs_d))
            worst_a = max(worst_a, frob(acted_a[i] - rhs_a) / scale_a)
            worst_d = max(worst_d, frob(acted_d[i] - rhs_d) / scale_d)
    return {"a_action": worst_a, "d_action": worst_d}


def separate_action_report(basis: CovectorBasis, evaluator=None) -> float:
    """Residual of the transfer-matrix separate action on the tower basis.

    Checks row(h) T(xi_n^(h_n)) = k1 a row(h+e_n) + k2 d row(h-e_n) for every
    h and n; boundary terms vanish through a (top node) and d (bottom node).
    """
    chain = basis.chain
    twist = chain.twist
    evaluator = evaluator or TransferEvaluator(chain)
    worst = 0.0
    for h in multi_indices(chain):
        row = basis.row(h)
        for n in range(chain.n_sites):
            node = chain.node(n, h[n])
            lhs = row @ evaluator.transfer(node)
            up = list(h)
            up[n] += 1
            down = list(h)
            down[n] -= 1
            rhs = (twist.k1 * chain.a(node) * basis.row_or_zero(up)
                   + twist.k2 * chain.d(node) * basis.row_or_zero(down))
            scale = max(1.0, frob(lhs), frob(rhs))
            worst = max(worst, frob(lhs - rhs) / scale)
    return worst
