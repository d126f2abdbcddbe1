"""Log-Euclidean kernels and certified Gram matrices.

Four kernels built on ``<x, y> = tr(log x log y)``:

* ``loge_linear``: ``<x, y>``
* ``loge_poly``: ``p(<x, y>)``
* ``loge_exp``: ``exp(p(<x, y>))``
* ``loge_gauss``: ``exp(-beta ||log x - log y||_F^2)``

where ``p(t) = c_1 t + c_2 t^2 + ... + c_n t^n`` with every ``c_k > 0``.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ExpOverflowError, PSDCertificationError
from .linalg import EXP_ARG_CAP, _eigvalsh, matrix_log

KINDS = ("loge_linear", "loge_poly", "loge_exp", "loge_gauss")
PSD_TOL = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice and parameters.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    coeffs : tuple of float, optional
        Coefficients ``(c_1, ..., c_n)`` of the polynomial for ``loge_poly``
        and ``loge_exp``; the degree is ``len(coeffs)``. Defaults to
        ``(1.0, 1.0)``, i.e. ``p(t) = t + t^2``.
    beta : float, optional
        Bandwidth of ``loge_gauss``. ``None`` leaves it to be resolved from
        training data with `median_heuristic_beta`.
    """

    kind: str = "loge_linear"
    coeffs: tuple = None
    beta: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("loge_poly", "loge_exp"):
            coeffs = (1.0, 1.0) if self.coeffs is None else tuple(float(c) for c in self.coeffs)
            if not coeffs or not all(np.isfinite(c) and c > 0 for c in coeffs):
                raise ValueError("polynomial coefficients must be finite and > 0")
            object.__setattr__(self, "coeffs", coeffs)
        if self.beta is not None:
            beta = float(self.beta)
            if not (np.isfinite(beta) and beta > 0):
                raise ValueError("beta must be finite and > 0")
            object.__setattr__(self, "beta", beta)

    @property
    def degree(self):
        return len(self.coeffs) if self.coeffs is not None else 1

    def with_beta(self, beta):
        return KernelSpec(self.kind, self.coeffs, beta)

    def params_string(self):
        """Compact ``key=value`` encoding without whitespace, for file headers."""
        if self.kind in ("loge_poly", "loge_exp"):
            return "coeffs=" + ",".join(repr(c) for c in self.coeffs)
        if self.kind == "loge_gauss":
            return f"beta={self.beta!r}"
        return "-"

    @classmethod
    def from_params_string(cls, kind, params):
        if params in ("", "-"):
            return cls(kind)
        key, _, value = params.partition("=")
        if key == "coeffs":
            return cls(kind, coeffs=tuple(float(c) for c in value.split(",")))
        if key == "beta":
            return cls(kind, beta=None if value == "None" else float(value))
        raise ValueError(f"cannot parse kernel parameters {params!r}")


@dataclass(frozen=True)
class GramMatrix:
    """Kernel matrix over a point collection, certified positive semidefinite."""

    entries: np.ndarray
    point_ids: tuple
    kernel: KernelSpec
    min_eig: float = field(default=None)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"Gram matrix must be square, got {entries.shape}")
        if not np.array_equal(entries, entries.T):
            raise ValueError("Gram matrix must be exactly symmetric")
        if len(self.point_ids) != entries.shape[0]:
            raise ValueError("need one point id per row")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "point_ids", tuple(str(i) for i in self.point_ids))
        if self.min_eig is None:
            object.__setattr__(self, "min_eig", certify_psd(entries, self.kernel))


def log_features(points):
    """Matrix logarithms of a stack of SPD points, shape ``(m, n, n)``."""
    points = _as_stack(points)
    return matrix_log(points)


def kernel_eval(spec, x, y):
    """Evaluate the kernel ``spec`` on a single pair of SPD matrices."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    logs = log_features(np.stack([x, y]))
    return float(kernel_from_logs(spec, logs[:1], logs[1:])[0, 0])


def gram_matrix(spec, points, ids=None):
    """Certified Gram matrix of ``spec`` over ``points``.

    Each matrix logarithm is computed once; the result is symmetrized exactly
    and its smallest eigenvalue recorded. Raises `PSDCertificationError` if
    that eigenvalue is below ``-PSD_TOL * max|eigenvalue|``.
    """
    points = _as_stack(points)
    if ids is None:
        ids = [str(i) for i in range(len(points))]
    if len(ids) != len(points):
        raise ValueError("need one id per point")
    logs = log_features(points)
    k = kernel_from_logs(spec, logs, logs, same=True)
    return GramMatrix(k, tuple(ids), spec)


def cross_gram(spec, train, test):
    """Kernel values between every training point (rows) and test point (columns)."""
    train = _as_stack(train)
    test = _as_stack(test)
    if train.shape[1:] != test.shape[1:]:
        raise ValueError(f"dimension mismatch: {train.shape[1:]} vs {test.shape[1:]}")
    return kernel_from_logs(spec, log_features(train), log_features(test))


def kernel_from_logs(spec, logs_a, logs_b, same=False):
    """Kernel block between two stacks of precomputed matrix logarithms.

    With ``same=True`` the two stacks are the same collection: the diagonal of
    distance-based kernels is pinned to zero distance and the output is
    symmetrized exactly.
    """
    if spec.kind == "loge_gauss":
        if spec.beta is None:
            raise ValueError("loge_gauss needs beta; resolve it with median_heuristic_beta")
        out = np.exp(-spec.beta * pairwise_sq_log_distances(logs_a, logs_b, same))
    else:
        t = _trace_products(logs_a, logs_b)
        if spec.kind == "loge_linear":
            out = t
        else:
            out = _poly(spec.coeffs, t)
            if spec.kind == "loge_exp":
                if np.any(out > EXP_ARG_CAP):
                    raise ExpOverflowError(
                        f"loge_exp argument {np.max(out):.6g} exceeds {EXP_ARG_CAP}"
                    )
                out = np.exp(out)
    if same:
        out = (out + out.T) / 2.0
    return out


def pairwise_sq_log_distances(logs_a, logs_b, same=False):
    """Squared Frobenius distances between two stacks of log matrices."""
    out = np.empty((len(logs_a), len(logs_b)))
    for i, la in enumerate(logs_a):
        diff = logs_b - la
        out[i] = np.sum(diff * diff, axis=(1, 2))
    if same:
        np.fill_diagonal(out, 0.0)
    return out


def median_heuristic_beta(points):
    """``1 / median`` of the pairwise squared Log-Euclidean distances (upper triangle)."""
    logs = log_features(points)
    if len(logs) < 2:
        return 1.0
    d2 = pairwise_sq_log_distances(logs, logs, same=True)
    med = float(np.median(d2[np.triu_indices(len(logs), k=1)]))
    return 1.0 / med if med > 0 else 1.0


def certify_psd(k, spec=None, tol=PSD_TOL):
    """Smallest eigenvalue of a symmetric kernel matrix, or raise if it is not PSD."""
    w = _eigvalsh(np.asarray(k, dtype=float))
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    min_eig = float(w[0])
    if min_eig < -tol * scale:
        raise PSDCertificationError(
            f"kernel matrix for {spec} is not PSD: min eigenvalue {min_eig:.6g}, "
            f"max |eigenvalue| {scale:.6g}"
        )
    return min_eig


def _trace_products(logs_a, logs_b):
    # tr(A B) = sum_ij A_ij B_ji
    a = logs_a.reshape(len(logs_a), -1)
    b = np.swapaxes(logs_b, -1, -2).reshape(len(logs_b), -1)
    return a @ b.T


def _poly(coeffs, t):
    out = np.zeros_like(t)
    for c in reversed(coeffs):
        out = (out + c) * t
    return out


def _as_stack(points):
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[None]
    if points.ndim != 3 or points.shape[1] != points.shape[2] or len(points) == 0:
        raise ValueError(f"expected a nonempty stack of square matrices, got {points.shape}")
    return points
