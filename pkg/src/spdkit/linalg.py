"""Dense symmetric linear algebra: eigendecomposition and spectral matrix functions.

Every function accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``.
Matrix functions are evaluated through the symmetric eigendecomposition
``m = V diag(w) V^T`` as ``f(m) = V diag(f(w)) V^T``.
"""
from typing import NamedTuple

import numpy as np

from .exceptions import ExpOverflowError, NotSPDError, NumericalError

RECONSTRUCTION_TOL = 1e-10
ORTH_TOL = 1e-10
ROUNDTRIP_TOL = 1e-8
# relative to the largest eigenvalue of each matrix
EIG_CLAMP_FLOOR = 1e-12
EXP_ARG_CAP = 700.0
# asymmetry accepted (and removed) on input, relative to max |entry|
SYMMETRY_TOL = 1e-8


class EigenDecomposition(NamedTuple):
    """Eigenvalues in ascending order and orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        return _compose(self.eigenvalues, self.eigenvectors)


def symmetrize(m):
    """Return ``(m + m^T) / 2`` over the last two axes."""
    m = np.asarray(m, dtype=float)
    return (m + np.swapaxes(m, -1, -2)) / 2.0


def as_symmetric(m, tol=SYMMETRY_TOL):
    """Validate a real symmetric matrix (or stack) and return it exactly symmetrized.

    Parameters
    ----------
    m : array_like, shape (..., n, n)
        Candidate matrix.
    tol : float
        Largest tolerated ``|m - m^T|`` relative to ``max(1, max|m|)``.

    Returns
    -------
    ndarray, shape (..., n, n)
        Float64 copy with ``out[i, j] == out[j, i]`` bit for bit.

    Raises
    ------
    ValueError
        If ``m`` is not square, contains non-finite values, or is visibly
        asymmetric.
    """
    m = np.array(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2] or m.shape[-1] == 0:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    asym = float(np.max(np.abs(m - np.swapaxes(m, -1, -2))))
    if asym > tol * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return symmetrize(m)


def certify_spd(m):
    """Return the smallest eigenvalue of ``m``; raise `NotSPDError` unless it is > 0."""
    m = as_symmetric(m)
    w = _eigvalsh(m)
    min_eig = w[..., 0]
    if np.any(min_eig <= 0.0):
        raise NotSPDError(
            f"matrix is not positive definite (smallest eigenvalue {np.min(min_eig):.3g})"
        )
    return float(min_eig) if np.ndim(min_eig) == 0 else min_eig


def as_spd(m):
    """Validate an SPD matrix (or stack) by eigendecomposition and return it symmetrized."""
    m = as_symmetric(m)
    certify_spd(m)
    return m


def sym_eig(m):
    """Eigendecomposition of a real symmetric matrix.

    Backed by LAPACK's symmetric driver (tridiagonal reduction followed by a
    divide and conquer solve); eigenvalues come back ascending.
    """
    m = as_symmetric(m)
    w, v = _eigh(m)
    return EigenDecomposition(w, v)


def matrix_log(p, on_small="clamp"):
    """Principal matrix logarithm of an SPD matrix.

    Parameters
    ----------
    p : array_like, shape (..., n, n)
        SPD matrix or stack of SPD matrices.
    on_small : {"clamp", "raise"}
        What to do with eigenvalues within ``EIG_CLAMP_FLOOR * max(eig)`` of
        zero. ``"clamp"`` lifts them to that floor; ``"raise"`` rejects the
        input. Eigenvalues further below zero are always rejected.

    Returns
    -------
    ndarray, shape (..., n, n)
        Symmetric logarithm.
    """
    w, v = _eigh(as_symmetric(p))
    w = _floor_spectrum(w, on_small)
    return _compose(np.log(w), v)


def matrix_exp(m):
    """Matrix exponential of a symmetric matrix; the result is SPD.

    Raises `ExpOverflowError` when an eigenvalue exceeds ``EXP_ARG_CAP``.
    """
    w, v = _eigh(as_symmetric(m))
    if np.any(w > EXP_ARG_CAP):
        raise ExpOverflowError(
            f"eigenvalue {np.max(w):.6g} exceeds the exponential cap {EXP_ARG_CAP}"
        )
    return _compose(np.exp(w), v)


def matrix_pow(p, t, on_small="clamp"):
    """Real power ``p**t`` of an SPD matrix, with the same eigenvalue policy as `matrix_log`."""
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("exponent must be finite")
    w, v = _eigh(as_symmetric(p))
    w = _floor_spectrum(w, on_small)
    return _compose(w**t, v)


def frob_norm(m):
    """Frobenius norm of a matrix (or of each matrix in a stack)."""
    m = np.asarray(m, dtype=float)
    return np.sqrt(np.sum(m * m, axis=(-2, -1)))


def trace_product(a, b):
    """``tr(a @ b)`` without forming the product."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.einsum("...ij,...ji->...", a, b)


def _eigh(m):
    try:
        return np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigensolver did not converge for a {m.shape[-1]}x{m.shape[-1]} matrix"
        ) from exc


def _eigvalsh(m):
    try:
        return np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigensolver did not converge for a {m.shape[-1]}x{m.shape[-1]} matrix"
        ) from exc


def _floor_spectrum(w, on_small):
    if on_small not in ("clamp", "raise"):
        raise ValueError(f"on_small must be 'clamp' or 'raise', got {on_small!r}")
    top = w[..., -1:]
    if np.any(top <= 0.0):
        raise NotSPDError("matrix has no positive eigenvalue")
    floor = EIG_CLAMP_FLOOR * top
    if np.any(w < -floor):
        raise NotSPDError(
            f"matrix is not positive definite (smallest eigenvalue {np.min(w):.3g})"
        )
    small = w <= floor
    if np.any(small):
        if on_small == "raise":
            raise NotSPDError(
                f"eigenvalue {np.min(w):.3g} is at or below the floor "
                f"{EIG_CLAMP_FLOOR:g} x largest eigenvalue"
            )
        w = np.where(small, floor, w)
    return w


def _compose(w, v):
    out = (v * w[..., None, :]) @ np.swapaxes(v, -1, -2)
    return symmetrize(out)
