"""Local building blocks: spin matrices, R-matrix, Lax operators, symmetrizers.

Conventions. A spin-s site carries the (2s+1)-dimensional irreducible sl(2)
representation with Sz = diag(s, s-1, ..., -s) and raising entries
sqrt(j*(2s+1-j)). Two-space operators are laid out as (first space) x
(second space) in Kronecker order, so the fundamental Lax operator at
two_s=1 literally equals the 4x4 rational 6-vertex R-matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .numerics import CDTYPE

__all__ = [
    "SpinOperators",
    "spin_matrices",
    "r_matrix",
    "permutation_4x4",
    "lax",
    "symmetrizer",
    "symmetric_basis",
    "fuse_2x2",
    "kron_embed",
    "kron_chain",
]


@dataclass(frozen=True)
class SpinOperators:
    """Dense spin-s matrices; dimension two_s + 1."""

    two_s: int
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray

    @property
    def dim(self) -> int:
        return self.two_s + 1


def spin_matrices(two_s: int) -> SpinOperators:
    """Spin matrices for the (two_s+1)-dimensional representation.

    Raising entries are sqrt(j*(two_s+1-j)) for j = 1..two_s, placed on the
    superdiagonal; sm is the transpose of sp.
    """
    if two_s < 1:
        raise ValueError(f"two_s must be a positive integer, got {two_s}")
    s = two_s / 2.0
    sz = np.diag(np.arange(s, -s - 0.5, -1.0)).astype(CDTYPE)
    x = np.sqrt(np.arange(1, two_s + 1) * (two_s + 1 - np.arange(1, two_s + 1)))
    sp = np.diag(x.astype(CDTYPE), 1)
    return SpinOperators(two_s=two_s, sz=sz, sp=sp, sm=sp.T.copy())


def r_matrix(lam: complex, eta: complex) -> np.ndarray:
    """Rational 6-vertex R-matrix on C^2 x C^2: lam*Id + eta*Permutation."""
    r = np.zeros((4, 4), dtype=CDTYPE)
    r[0, 0] = r[3, 3] = lam + eta
    r[1, 1] = r[2, 2] = lam
    r[1, 2] = r[2, 1] = eta
    return r


def permutation_4x4() -> np.ndarray:
    """Swap operator on C^2 x C^2."""
    p = np.zeros((4, 4), dtype=CDTYPE)
    p[0, 0] = p[3, 3] = p[1, 2] = p[2, 1] = 1.0
    return p


def lax(lam: complex, two_s: int, eta: complex) -> np.ndarray:
    """Lax operator on (auxiliary C^2) x (spin-s site), size 2(two_s+1).

    Block form [[lam + eta(1/2 + Sz), eta Sm], [eta Sp, lam + eta(1/2 - Sz)]].
    """
    ops = spin_matrices(two_s)
    eye = np.eye(ops.dim, dtype=CDTYPE)
    a = lam * eye + eta * (0.5 * eye + ops.sz)
    d = lam * eye + eta * (0.5 * eye - ops.sz)
    return np.block([[a, eta * ops.sm], [eta * ops.sp, d]])


def _permutation_matrix(perm, m):
    """Matrix of v_1 x ... x v_m -> v_perm(1) x ... x v_perm(m) on (C^2)^m."""
    dim = 2 ** m
    mat = np.zeros((dim, dim), dtype=CDTYPE)
    for idx in range(dim):
        bits = [(idx >> (m - 1 - k)) & 1 for k in range(m)]
        # output leg k carries the vector from input leg perm[k]
        out_bits = [bits[perm[k]] for k in range(m)]
        out = 0
        for b in out_bits:
            out = (out << 1) | b
        mat[out, idx] = 1.0
    return mat


def symmetrizer(m: int) -> np.ndarray:
    """Symmetric projector on (C^2)^m, built as the mean of all m! permutations."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    dim = 2 ** m
    total = np.zeros((dim, dim), dtype=CDTYPE)
    for perm in itertools.permutations(range(m)):
        total += _permutation_matrix(perm, m)
    return total / math.factorial(m)


def symmetric_basis(m: int) -> np.ndarray:
    """Orthonormal basis of the symmetric subspace of (C^2)^m, shape (2^m, m+1).

    Column k is the normalized sum of basis states with exactly k ones,
    ordered k = 0..m. This matches the spin-(m/2) convention: the symmetric
    realization of sum(sigma_z)/2 is diagonal with entries m/2 - k, so fused
    2x2 operators expressed in these columns act with the spin matrices of
    :func:`spin_matrices`.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    dim = 2 ** m
    basis = np.zeros((dim, m + 1), dtype=CDTYPE)
    for idx in range(dim):
        k = bin(idx).count("1")
        basis[idx, k] = 1.0
    basis /= np.sqrt(np.sum(np.abs(basis) ** 2, axis=0))
    return basis


def fuse_2x2(k: np.ndarray, m: int) -> np.ndarray:
    """Restriction of k^{x m} to the symmetric subspace, as an (m+1) matrix."""
    if m == 1:
        return np.asarray(k, dtype=CDTYPE).copy()
    u = symmetric_basis(m)
    full = np.ones((1, 1), dtype=CDTYPE)
    for _ in range(m):
        full = np.kron(full, np.asarray(k, dtype=CDTYPE))
    return u.conj().T @ full @ u


def kron_embed(op: np.ndarray, legs, dims) -> np.ndarray:
    """Embed ``op`` acting on the listed legs into the full tensor product.

    ``dims`` are the local dimensions of all legs; ``op`` must act on the
    product of the leg dimensions in the order given by ``legs``. Identity is
    inserted on the remaining legs.
    """
    dims = list(dims)
    legs = list(legs)
    if len(set(legs)) != len(legs):
        raise ValueError(f"legs must be distinct, got {legs}")
    op = np.asarray(op, dtype=CDTYPE)
    leg_dims = [dims[leg] for leg in legs]
    sub = int(np.prod(leg_dims))
    if op.shape != (sub, sub):
        raise ValueError(f"operator shape {op.shape} does not match legs {legs} of dims {dims}")
    rest = [k for k in range(len(dims)) if k not in legs]
    rest_dims = [dims[k] for k in rest]
    big = np.kron(op, np.eye(int(np.prod(rest_dims)), dtype=CDTYPE))
    # big acts on legs ordered (legs..., rest...); permute the axes back
    order = legs + rest
    tensor = big.reshape([dims[k] for k in order] * 2)
    n = len(dims)
    inv = [order.index(k) for k in range(n)]
    tensor = tensor.transpose(inv + [n + j for j in inv])
    full = int(np.prod(dims))
    return np.ascontiguousarray(tensor.reshape(full, full))


def kron_chain(mats) -> np.ndarray:
    """Kronecker product of a sequence of matrices (left factor slowest)."""
    out = np.ones((1, 1), dtype=CDTYPE)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=CDTYPE))
    return out
