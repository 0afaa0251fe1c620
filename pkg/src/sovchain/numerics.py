"""Small numeric helpers shared by the verification routines.

All residuals reported by this library follow one convention:
``||x||_F / max(1, ||reference||_F)``, so identities between large operators
are judged on the scale of the operators involved.
"""

from __future__ import annotations

import numpy as np

CDTYPE = np.complex128


def frob(x) -> float:
    return float(np.linalg.norm(np.asarray(x)))


def commutator_residual(a, b) -> float:
    """||[a, b]|| relative to ||a||*||b||."""
    return frob(a @ b - b @ a) / max(1.0, frob(a) * frob(b))


def random_complex(rng, size=None, box=3.0):
    """Uniform complex samples in a centered square of half-side ``box``."""
    re = rng.uniform(-box, box, size=size)
    im = rng.uniform(-box, box, size=size)
    return re + 1j * im


def lagrange_cardinal(nodes, j, lam):
    """j-th Lagrange cardinal polynomial over ``nodes`` evaluated at ``lam``."""
    nodes = np.asarray(nodes)
    num = 1.0 + 0.0j
    den = 1.0 + 0.0j
    for m, node in enumerate(nodes):
        if m == j:
            continue
        num *= lam - node
        den *= nodes[j] - node
    return num / den


def poly_coeffs_from_samples(nodes, values, rcond=None):
    """Coefficients (ascending) of the degree len(nodes)-1 interpolant.

    Solved as a column-scaled Vandermonde least-squares problem; with
    len(values) == len(nodes) the fit is exact up to roundoff.
    """
    nodes = np.asarray(nodes, dtype=CDTYPE)
    values = np.asarray(values, dtype=CDTYPE)
    deg = len(nodes) - 1
    v = np.vander(nodes, deg + 1, increasing=True)
    col_scale = np.maximum(np.abs(v).max(axis=0), 1e-300)
    coeffs, *_ = np.linalg.lstsq(v / col_scale, values, rcond=rcond)
    return coeffs / col_scale


def poly_eval(coeffs, lam):
    """Horner evaluation; ``coeffs`` ascending."""
    result = 0.0 + 0.0j
    for c in reversed(coeffs):
        result = result * lam + c
    return result


def trim_trailing(coeffs, rel_tol=1e-9):
    """Drop high-order coefficients below rel_tol * max|coeff|."""
    coeffs = np.asarray(coeffs, dtype=CDTYPE)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return np.zeros(1, dtype=CDTYPE)
    keep = len(coeffs)
    while keep > 1 and abs(coeffs[keep - 1]) < rel_tol * scale:
        keep -= 1
    return coeffs[:keep].copy()
