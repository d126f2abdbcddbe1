"""Distances, inner products and Lie group operations on the SPD manifold."""
from dataclasses import dataclass

import numpy as np

from .linalg import (
    _eigvalsh,
    _floor_spectrum,
    as_spd,
    as_symmetric,
    frob_norm,
    matrix_exp,
    matrix_log,
    matrix_pow,
    symmetrize,
    trace_product,
)

BASE_POINT_ATOL = 1e-12


@dataclass(frozen=True)
class TangentVector:
    """A symmetric direction ``vec`` attached to the SPD base point ``at``."""

    at: np.ndarray
    vec: np.ndarray

    def __post_init__(self):
        at = as_spd(self.at)
        vec = as_symmetric(self.vec)
        if at.shape != vec.shape or at.ndim != 2:
            raise ValueError(
                f"base point {at.shape} and direction {vec.shape} must be matching matrices"
            )
        at.setflags(write=False)
        vec.setflags(write=False)
        object.__setattr__(self, "at", at)
        object.__setattr__(self, "vec", vec)


def airm_inner(u, v):
    """Affine-invariant inner product ``tr(P^-1 u P^-1 v)`` of two tangent vectors at ``P``."""
    if u.at.shape != v.at.shape:
        raise ValueError(f"dimension mismatch: {u.at.shape} vs {v.at.shape}")
    if np.max(np.abs(u.at - v.at)) > BASE_POINT_ATOL:
        raise ValueError("tangent vectors are attached to different base points")
    p = u.at
    a = np.linalg.solve(p, u.vec)
    b = np.linalg.solve(p, v.vec)
    return float(trace_product(a, b))


def airm_distance(x, y):
    """Affine-invariant Riemannian distance ``||log(x^-1/2 y x^-1/2)||_F``.

    Costs one eigendecomposition of ``x`` (for the inverse square root) and
    one eigenvalue solve of the congruence product.
    """
    x, y = _pair(x, y)
    x_isqrt = matrix_pow(x, -0.5)
    w = _eigvalsh(symmetrize(x_isqrt @ y @ x_isqrt))
    w = _floor_spectrum(w, "clamp")
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def lem_distance(x, y):
    """Log-Euclidean distance ``||log x - log y||_F``."""
    x, y = _pair(x, y)
    return float(frob_norm(matrix_log(x) - matrix_log(y)))


def lie_multiply(x, y):
    """Log-Euclidean group product ``exp(log x + log y)``."""
    x, y = _pair(x, y)
    return matrix_exp(matrix_log(x) + matrix_log(y))


def lie_scale(t, x):
    """Log-Euclidean scalar multiplication ``exp(t log x) = x**t``."""
    return matrix_pow(x, t)


def loge_inner(x, y):
    """Log-Euclidean inner product ``tr(log x log y)``."""
    x, y = _pair(x, y)
    return float(trace_product(matrix_log(x), matrix_log(y)))


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y
