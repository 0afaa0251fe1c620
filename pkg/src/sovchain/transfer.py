"""Global operators: monodromy blocks, transfer matrix, fused hierarchy.

The fused transfer matrices are produced by the three-term recursion

    T^(l+1)(lam) = T(lam + l eta) T^(l)(lam) - detq(lam + l eta) T^(l-1)(lam)

with T^(0) = Id, which is the closed solution of the fusion hierarchy. The
symmetrized-projector construction (trace of the projected product of
shifted monodromies over the (a+1)-dimensional symmetric auxiliary space) is
kept as an independent route and used as the test oracle for the recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec
from .local_ops import kron_embed, lax, r_matrix, symmetric_basis
from .numerics import CDTYPE, commutator_residual, frob, lagrange_cardinal

__all__ = [
    "MonodromyBlocks",
    "monodromy_matrix",
    "monodromy_blocks",
    "transfer",
    "TransferEvaluator",
    "fused_transfer_projector",
    "global_fused_twist_product",
    "tridiagonal_operator_det",
    "rtt_residual",
    "quantum_det_residual",
    "symmetry_residual",
    "central_zero_residual",
    "polynomiality_residual",
    "reference_covector",
]


@dataclass(frozen=True)
class MonodromyBlocks:
    """The four dim(H) x dim(H) operator blocks of the twisted monodromy."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @property
    def transfer(self) -> np.ndarray:
        return self.a + self.d


def monodromy_matrix(chain: ChainSpec, lam: complex, twist_matrix=None) -> np.ndarray:
    """Full 2D x 2D monodromy K_0 L_0N(lam - xi_N) ... L_01(lam - xi_1).

    The auxiliary C^2 is the slowest Kronecker factor. ``twist_matrix``
    overrides the chain twist (used for identity-twist and conjugated runs).
    """
    k = chain.twist.matrix if twist_matrix is None else np.asarray(twist_matrix, dtype=CDTYPE)
    dims = [2] + list(chain.dims)
    mat = kron_embed(k, [0], dims)
    for n in range(chain.n_sites - 1, -1, -1):
        site = chain.sites[n]
        l_local = lax(lam - site.xi, site.two_s, chain.eta)
        mat = mat @ kron_embed(l_local, [0, n + 1], dims)
    return mat


def monodromy_blocks(chain: ChainSpec, lam: complex, twist_matrix=None) -> MonodromyBlocks:
    m = monodromy_matrix(chain, lam, twist_matrix)
    d = chain.dim
    return MonodromyBlocks(a=m[:d, :d], b=m[:d, d:], c=m[d:, :d], d=m[d:, d:])


def transfer(chain: ChainSpec, lam: complex, twist_matrix=None) -> np.ndarray:
    """Transfer matrix: auxiliary-space trace of the monodromy."""
    blocks = monodromy_blocks(chain, lam, twist_matrix)
    return blocks.a + blocks.d


class TransferEvaluator:
    """Memoizing evaluator for the transfer matrix and its fused tower.

    Cache keys are the exact complex bit patterns of the requested points;
    no fuzzy matching. Returned arrays are owned by the cache and must be
    treated as read-only. Instances are safe for concurrent reads once
    warmed; interleaved first-time insertions need external locking.
    """

    def __init__(self, chain: ChainSpec, twist_matrix=None):
        self.chain = chain
        self._twist_matrix = twist_matrix
        self._plain = {}
        self._fused = {}

    def transfer(self, lam: complex) -> np.ndarray:
        key = complex(lam)
        if key not in self._plain:
            self._plain[key] = transfer(self.chain, key, self._twist_matrix)
        return self._plain[key]

    def fused(self, level: int, lam: complex) -> np.ndarray:
        """T^(level)(lam) by the fusion recursion; level 0 is the identity."""
        if level < 0:
            raise ValueError(f"level must be >= 0, got {level}")
        key = (level, complex(lam))
        if key in self._fused:
            return self._fused[key]
        if level == 0:
            out = np.eye(self.chain.dim, dtype=CDTYPE)
        elif level == 1:
            out = self.transfer(lam)
        else:
            lcur = level - 1
            shift = lam + lcur * self.chain.eta
            out = (self.transfer(shift) @ self.fused(lcur, lam)
                   - self.chain.det_q(shift) * self.fused(lcur - 1, lam))
        self._fused[key] = out
        return out


def fused_transfer_projector(chain: ChainSpec, level: int, lam: complex) -> np.ndarray:
    """Fused transfer matrix via the symmetrized auxiliary-space product.

    Independent of the recursion: embeds ``level`` shifted monodromies on
    (C^2)^{x level} (x) H, multiplies them, and traces against the
    orthonormal symmetric-subspace basis.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    d = chain.dim
    dims = [2] * level + [d]
    prod = np.eye(int(np.prod(dims)), dtype=CDTYPE)
    for i in range(level):
        shift = lam + (level - 1 - i) * chain.eta
        m_i = monodromy_matrix(chain, shift)
        prod = prod @ kron_embed(m_i, [i, level], dims)
    u = symmetric_basis(level)
    aux = 2 ** level
    tensor = prod.reshape(aux, d, aux, d)
    return np.einsum("ak,aibj,bk->ij", u.conj(), tensor, u)


def global_fused_twist_product(chain: ChainSpec, k_matrix=None) -> np.ndarray:
    """Tensor product over sites of the fused twist, acting on H."""
    from .chain import fused_twist
    from .local_ops import kron_chain

    mat = chain.twist.matrix if k_matrix is None else k_matrix
    return kron_chain([fused_twist(mat, site.two_s) for site in chain.sites])


def tridiagonal_operator_det(diag, sup, sub) -> np.ndarray:
    """Determinant of a tridiagonal matrix with commuting operator entries.

    Expanded by trailing principal minors (last row), which is a different
    traversal from the fusion recursion's leading expansion. ``diag`` is a
    list of m operators; ``sup``/``sub`` are the m-1 scalar off-diagonals.
    """
    m = len(diag)
    dim = diag[0].shape[0]
    prev2 = np.eye(dim, dtype=CDTYPE)
    prev1 = diag[0]
    for j in range(1, m):
        cur = diag[j] @ prev1 - sup[j - 1] * sub[j - 1] * prev2
        prev2, prev1 = prev1, cur
    return prev1


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def rtt_residual(chain: ChainSpec, lam: complex, mu: complex) -> float:
    """Exchange-relation residual for the monodromy on C^2 x C^2 x H."""
    d = chain.dim
    dims = [2, 2, d]
    r12 = kron_embed(r_matrix(lam - mu, chain.eta), [0, 1], dims)
    m1 = kron_embed(monodromy_matrix(chain, lam), [0, 2], dims)
    m2 = kron_embed(monodromy_matrix(chain, mu), [1, 2], dims)
    lhs = r12 @ m1 @ m2
    rhs = m2 @ m1 @ r12
    return frob(lhs - rhs) / max(1.0, frob(lhs))


def quantum_det_residual(chain: ChainSpec, lam: complex) -> float:
    """Residual of A(lam) D(lam-eta) - B(lam) C(lam-eta) = detq(lam) Id."""
    blocks_lam = monodromy_blocks(chain, lam)
    blocks_shift = monodromy_blocks(chain, lam - chain.eta)
    op = blocks_lam.a @ blocks_shift.d - blocks_lam.b @ blocks_shift.c
    target = chain.det_q(lam) * np.eye(chain.dim, dtype=CDTYPE)
    return frob(op - target) / max(1.0, frob(target), frob(op))


def symmetry_residual(chain: ChainSpec, lam: complex, k_matrix=None) -> float:
    """Residual of [M^(I)(lam), K_0 (x) prod_n K^(2s_n)] = 0."""
    k = chain.twist.matrix if k_matrix is None else np.asarray(k_matrix, dtype=CDTYPE)
    m_id = monodromy_matrix(chain, lam, twist_matrix=np.eye(2, dtype=CDTYPE))
    big_k = np.kron(k, global_fused_twist_product(chain, k))
    return commutator_residual(m_id, big_k)


def central_zero_residual(chain: ChainSpec, evaluator: TransferEvaluator,
                          level: int, n: int, lam_ref: complex) -> float:
    """Norm of T^(level) at the bottom node of site n, relative to a generic point.

    The fused transfer matrix at level > 2s_n carries the central divisor
    vanishing at xi_n - eta/2 - s_n eta.
    """
    site = chain.sites[n]
    bottom = chain.node(n, site.two_s)
    val = evaluator.fused(level, bottom)
    ref = evaluator.fused(level, lam_ref)
    return frob(val) / max(1.0, frob(ref))


def polynomiality_residual(chain: ChainSpec, rng) -> float:
    """Degree-N certificate: interpolate T from N+1 samples, test a held-out point."""
    from .numerics import random_complex

    n = chain.n_sites
    pts = random_complex(rng, size=n + 2, box=2.5)
    nodes, probe = pts[:-1], pts[-1]
    samples = [transfer(chain, z) for z in nodes]
    recon = np.zeros((chain.dim, chain.dim), dtype=CDTYPE)
    for j in range(n + 1):
        recon += lagrange_cardinal(nodes, j, probe) * samples[j]
    direct = transfer(chain, probe)
    return frob(recon - direct) / max(1.0, frob(direct))


def reference_covector(chain: ChainSpec) -> np.ndarray:
    """Tensor product of local highest-weight covectors (1, 0, ..., 0)."""
    vec = np.zeros(chain.dim, dtype=CDTYPE)
    vec[0] = 1.0
    return vec
