"""Chain definition: twist handling, inhomogeneity grid, scalar functions.

The spectral-parameter grid attached to site n consists of the 2s_n + 1
points ``xi_n - eta/2 + (s_n - k) eta`` for k = 0..2s_n; consecutive nodes
differ by -eta. The scalar polynomials

    a(lam) = prod_n (lam - xi_n + eta/2 + s_n eta)
    d(lam) = prod_n (lam - xi_n + eta/2 - s_n eta)

vanish respectively at the bottom node (k = 2s_n) and the top node (k = 0)
of each site, which drives every separation-of-variables formula below.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GenericityViolation, SimpleSpectrumViolation, SingularTwistWarning
from .local_ops import fuse_2x2
from .numerics import CDTYPE, random_complex

__all__ = [
    "Tolerances",
    "Twist",
    "normalize_twist",
    "fused_twist",
    "Site",
    "ChainSpec",
    "make_chain",
    "random_chain",
    "genericity_check",
    "multi_indices",
    "index_of",
]

_MIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=CDTYPE) / np.sqrt(2.0)


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-10
    zero: float = 1e-8
    gram: float = 1e-10


@dataclass
class Twist:
    """2x2 boundary twist with a fixed eigenvalue ordering.

    ``k1``, ``k2`` are sorted by (real, imag) descending. When the upper-right
    entry vanishes, ``w`` holds a conjugator such that w^-1 K w has nonzero
    off-diagonal entries; otherwise ``w`` is the identity.
    """

    matrix: np.ndarray
    k1: complex
    k2: complex
    w: np.ndarray

    @property
    def a(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def b(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def c(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def d(self) -> complex:
        return complex(self.matrix[1, 1])

    @property
    def det(self) -> complex:
        return self.k1 * self.k2

    @property
    def trace(self) -> complex:
        return self.k1 + self.k2

    @property
    def invertible(self) -> bool:
        return abs(self.k1 * self.k2) > 1e-14 * max(1.0, abs(self.k1) + abs(self.k2)) ** 2

    @property
    def needs_conjugation(self) -> bool:
        """True when b = 0 and the W-conjugated construction must be used."""
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return abs(self.b) <= 1e-14 * scale

    def conjugated(self) -> np.ndarray:
        """w^-1 K w, guaranteed to have nonzero b and c entries."""
        return np.linalg.solve(self.w, self.matrix @ self.w)


def normalize_twist(k_matrix) -> Twist:
    """Validate a twist matrix and fix its eigenvalue ordering and conjugator.

    Raises SimpleSpectrumViolation for K proportional to the identity and
    warns (SingularTwistWarning) when an eigenvalue vanishes.
    """
    k = np.asarray(k_matrix, dtype=CDTYPE)
    if k.shape != (2, 2):
        raise ValueError(f"twist must be 2x2, got shape {k.shape}")
    scale = max(1.0, float(np.max(np.abs(k))))
    if np.max(np.abs(k - 0.5 * np.trace(k) * np.eye(2))) < 1e-12 * scale:
        raise SimpleSpectrumViolation("twist matrix is proportional to the identity")
    evals, evecs = np.linalg.eig(k)
    order = sorted(range(2), key=lambda i: (evals[i].real, evals[i].imag), reverse=True)
    k1, k2 = complex(evals[order[0]]), complex(evals[order[1]])
    if abs(k1 * k2) <= 1e-14 * scale * scale:
        warnings.warn("twist has a vanishing eigenvalue; invertibility-gated "
                      "constructions are unavailable", SingularTwistWarning, stacklevel=2)
    if abs(k[0, 1]) > 1e-14 * scale:
        w = np.eye(2, dtype=CDTYPE)
    else:
        w = _b_zero_conjugator(k, evals[order], evecs[:, order], scale)
    return Twist(matrix=k, k1=k1, k2=k2, w=w)


def _b_zero_conjugator(k, evals, evecs, scale):
    """Conjugator making both off-diagonal entries of w^-1 k w nonzero.

    The fixed rotation _MIX works for diagonal twists (off-diagonals become
    (k1-k2)/2) and for the non-diagonalizable lower-triangular ones; the
    eigenvector-mixing fallback covers the remaining lower-triangular cases.
    """
    floor = 1e-12 * scale
    kbar = _MIX @ k @ _MIX  # _MIX is involutive
    if min(abs(kbar[0, 1]), abs(kbar[1, 0])) > floor:
        return _MIX.copy()
    v = evecs.astype(CDTYPE)
    for col in range(2):
        j = int(np.argmax(np.abs(v[:, col])))
        v[:, col] *= np.exp(-1j * np.angle(v[j, col]))
        v[:, col] /= np.linalg.norm(v[:, col])
    det = np.linalg.det(v)
    if abs(det) > 1e-8:
        w = v @ _MIX
        w = w / (np.linalg.det(w) + 0j) ** 0.5
        kbar = np.linalg.solve(w, k @ w)
        if min(abs(kbar[0, 1]), abs(kbar[1, 0])) > floor:
            return w
    raise SimpleSpectrumViolation(
        "could not build a conjugator with nonzero off-diagonal entries")


def fused_twist(twist, level: int) -> np.ndarray:
    """(level+1)-dimensional symmetric-subspace restriction of K^{x level}."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    mat = twist.matrix if isinstance(twist, Twist) else np.asarray(twist, dtype=CDTYPE)
    return fuse_2x2(mat, level)


@dataclass(frozen=True)
class Site:
    two_s: int
    xi: complex

    def __post_init__(self):
        if self.two_s < 1:
            raise ValueError(f"two_s must be a positive integer, got {self.two_s}")

    @property
    def dim(self) -> int:
        return self.two_s + 1

    @property
    def spin(self) -> float:
        return self.two_s / 2.0


@dataclass(frozen=True)
class ChainSpec:
    """Full model definition; immutable after construction."""

    eta: complex
    sites: tuple
    twist: Twist
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dims(self) -> tuple:
        return tuple(site.dim for site in self.sites)

    @property
    def dim(self) -> int:
        out = 1
        for d in self.dims:
            out *= d
        return out

    @property
    def n_s(self) -> int:
        """Total 2*sum(s_n) = degree budget for Q-polynomials."""
        return sum(site.two_s for site in self.sites)

    def node(self, n: int, k: int) -> complex:
        """Grid point xi_n - eta/2 + (s_n - k) eta, k = 0..2s_n."""
        site = self.sites[n]
        return site.xi - self.eta / 2 + (site.spin - k) * self.eta

    def nodes(self, n: int) -> np.ndarray:
        site = self.sites[n]
        return np.array([self.node(n, k) for k in range(site.two_s + 1)], dtype=CDTYPE)

    def all_nodes(self):
        """Iterate (site, k, node value) over the whole grid."""
        for n, site in enumerate(self.sites):
            for k in range(site.two_s + 1):
                yield n, k, self.node(n, k)

    def a(self, lam: complex) -> complex:
        out = 1.0 + 0.0j
        for site in self.sites:
            out *= lam - site.xi + self.eta / 2 + site.spin * self.eta
        return out

    def d(self, lam: complex) -> complex:
        out = 1.0 + 0.0j
        for site in self.sites:
            out *= lam - site.xi + self.eta / 2 - site.spin * self.eta
        return out

    def det_q(self, lam: complex) -> complex:
        """Quantum determinant scalar det(K) a(lam) d(lam - eta)."""
        return self.twist.det * self.a(lam) * self.d(lam - self.eta)

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng((self.seed, salt))


def make_chain(eta, sites, twist, tolerances=None, seed=0, check=True) -> ChainSpec:
    """Assemble a ChainSpec from raw data.

    ``sites`` is a sequence of (two_s, xi) pairs or Site objects; ``twist``
    may be a raw 2x2 matrix or an already-normalized Twist.
    """
    site_objs = tuple(
        site if isinstance(site, Site) else Site(int(site[0]), complex(site[1]))
        for site in sites
    )
    if not site_objs:
        raise ValueError("a chain needs at least one site")
    twist_obj = twist if isinstance(twist, Twist) else normalize_twist(twist)
    chain = ChainSpec(
        eta=complex(eta),
        sites=site_objs,
        twist=twist_obj,
        tolerances=tolerances or Tolerances(),
        seed=int(seed),
    )
    if check:
        genericity_check(chain)
    return chain


def random_chain(two_s_list, eta, twist, seed=0, box=5.0, tolerances=None,
                 max_tries=64) -> ChainSpec:
    """Chain with seeded random inhomogeneities, re-drawn until generic."""
    rng = np.random.default_rng((int(seed), 0x5EED))
    for _ in range(max_tries):
        xis = random_complex(rng, size=len(two_s_list), box=box)
        try:
            return make_chain(eta, list(zip(two_s_list, xis)), twist,
                              tolerances=tolerances, seed=seed)
        except GenericityViolation:
            continue
    raise GenericityViolation(f"no generic draw found in {max_tries} tries")


def genericity_check(chain: ChainSpec) -> dict:
    """Verify xi_a != xi_b mod eta over the protected shift window.

    The window covers every node coincidence any fused formula can probe:
    |k| up to twice the largest two_s plus one. Also checks that all grid
    nodes are pairwise distinct across sites. Raises GenericityViolation
    naming the offending pair.
    """
    tol = chain.tolerances.zero
    window = 2 * max(site.two_s for site in chain.sites) + 1
    min_sep = np.inf
    pairs = 0
    for a in range(chain.n_sites):
        for b in range(chain.n_sites):
            if a == b:
                continue
            diff = chain.sites[a].xi - chain.sites[b].xi
            for k in range(-window, window + 1):
                sep = abs(diff - k * chain.eta)
                pairs += 1
                min_sep = min(min_sep, sep)
                if sep <= tol:
                    raise GenericityViolation(
                        f"xi_{a} - xi_{b} = {k} * eta within tolerance "
                        f"({sep:.3e} <= {tol:.1e})")
    all_nodes = [(n, k, v) for n, k, v in chain.all_nodes()]
    for (n1, k1, v1), (n2, k2, v2) in itertools.combinations(all_nodes, 2):
        if n1 != n2 and abs(v1 - v2) <= tol:
            raise GenericityViolation(
                f"grid nodes collide: site {n1} node {k1} vs site {n2} node {k2}")
    return {"ok": True, "pairs_checked": pairs, "min_separation": float(min_sep)}


def multi_indices(chain: ChainSpec):
    """All multi-indices h = (h_1..h_N), h_n in 0..2s_n, lexicographic order."""
    return list(itertools.product(*[range(d) for d in chain.dims]))


def index_of(chain: ChainSpec, h) -> int:
    """Row index of a multi-index in the lexicographic ordering."""
    idx = 0
    for hn, d in zip(h, chain.dims):
        if not 0 <= hn < d:
            raise IndexError(f"component {hn} outside 0..{d - 1}")
        idx = idx * d + hn
    return idx
