"""Image-set classifiers on SPD descriptors.

All estimators take ``X`` as an array of shape ``(n_sets, p, p)`` holding one
SPD descriptor per image set.

* `SPDNearestNeighbor` with ``metric="airm"`` or ``"logeuclid"``.
* `CDLClassifier`: kernel linear discriminant analysis under a
  Log-Euclidean kernel, nearest class mean in discriminant space.
* `LogEKSRClassifier`: kernel sparse representation against the training
  set as dictionary, solved by kernel orthogonal matching pursuit, with the
  class of minimum RKHS reconstruction residual.

Ties resolve to the lowest index (training point, atom, or sorted class).
"""
import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_labels, check_spd_stack
from .exceptions import DegenerateTrainingError
from .kernels import (
    KernelSpec,
    certify_psd,
    kernel_from_logs,
    log_features,
    median_heuristic_beta,
)
from .linalg import _eigvalsh, _floor_spectrum, matrix_pow, symmetrize

VARIANTS = ("nn_airm", "nn_loged", "cdl_lda", "logeksr")


class _SPDClassifier(ClassifierMixin, BaseEstimator):
    # names of fitted attributes that fully determine predictions
    _state = ()

    def _fit_common(self, X, y):
        X = check_spd_stack(X)
        self.classes_, self.y_idx_ = check_labels(X, y)
        self.n_features_ = X.shape[1]
        return X

    def _check_predict(self, X):
        check_is_fitted(self, "classes_")
        return check_spd_stack(X, self.n_features_)


class SPDNearestNeighbor(_SPDClassifier):
    """1-nearest-neighbour classifier under an SPD metric.

    Parameters
    ----------
    metric : {"airm", "logeuclid"}
        Affine-invariant Riemannian distance or Log-Euclidean distance.
    """

    def __init__(self, metric="airm"):
        self.metric = metric

    @property
    def _state(self):
        return ("X_fit_", "y_idx_", "n_features_") + (
            ("isqrt_fit_",) if self.metric == "airm" else ("logs_fit_",)
        )

    def fit(self, X, y):
        if self.metric not in ("airm", "logeuclid"):
            raise ValueError(f"metric must be 'airm' or 'logeuclid', got {self.metric!r}")
        X = self._fit_common(X, y)
        self.X_fit_ = X
        if self.metric == "airm":
            self.isqrt_fit_ = matrix_pow(X, -0.5)
        else:
            self.logs_fit_ = log_features(X)
        return self

    def pairwise_distances(self, X):
        """Distances from each query (rows) to each training point (columns)."""
        X = self._check_predict(X)
        out = np.empty((len(X), len(self.X_fit_)))
        if self.metric == "airm":
            for i, q in enumerate(X):
                congr = symmetrize(self.isqrt_fit_ @ q @ self.isqrt_fit_)
                w = _floor_spectrum(_eigvalsh(congr), "clamp")
                out[i] = np.sqrt(np.sum(np.log(w) ** 2, axis=1))
        else:
            logs = log_features(X)
            for i, lq in enumerate(logs):
                diff = self.logs_fit_ - lq
                out[i] = np.sqrt(np.sum(diff * diff, axis=(1, 2)))
        return out

    def predict(self, X):
        nearest = np.argmin(self.pairwise_distances(X), axis=1)
        return self.classes_[self.y_idx_[nearest]]


class CDLClassifier(_SPDClassifier):
    """Kernel LDA on the Log-Euclidean kernel with nearest-class-mean decisions.

    The training Gram matrix is double centred; the discriminant directions
    solve ``B a = mu (W + gamma I) a`` with between-class scatter ``B`` and
    within-class scatter ``W`` in dual coordinates, keeping the top
    ``n_classes - 1`` directions.

    Parameters
    ----------
    kernel : KernelSpec, optional
        Defaults to ``KernelSpec("loge_linear")``.
    ridge : float
        ``gamma = ridge * tr(W) / m``. When ``W`` vanishes (every class a
        single point) the trace of the total scatter is used instead.
    """

    _state = ("logs_fit_", "y_idx_", "n_features_", "kernel_", "col_means_",
              "grand_mean_", "directions_", "class_means_")

    def __init__(self, kernel=None, ridge=1e-4):
        self.kernel = kernel
        self.ridge = ridge

    def fit(self, X, y):
        X = self._fit_common(X, y)
        spec = self.kernel or KernelSpec("loge_linear")
        self.logs_fit_ = log_features(X)
        if spec.kind == "loge_gauss" and spec.beta is None:
            spec = spec.with_beta(median_heuristic_beta(X))
        self.kernel_ = spec
        k = kernel_from_logs(spec, self.logs_fit_, self.logs_fit_, same=True)
        certify_psd(k, spec)

        m = len(k)
        self.col_means_ = k.mean(axis=0)
        self.grand_mean_ = float(k.mean())
        kc = k - self.col_means_[None, :] - self.col_means_[:, None] + self.grand_mean_
        kc = symmetrize(kc)

        between = np.zeros((m, m))
        for c in range(len(self.classes_)):
            cols = kc[:, self.y_idx_ == c]
            mu = cols.mean(axis=1)
            between += cols.shape[1] * np.outer(mu, mu)
        total = kc @ kc
        within = symmetrize(total - between)

        gamma = self.ridge * np.trace(within) / m
        if not gamma > 0:
            gamma = self.ridge * np.trace(total) / m
        if not gamma > 0:
            raise DegenerateTrainingError(
                "centred training Gram matrix is zero; all training points coincide in feature space"
            )
        w, v = scipy.linalg.eigh(symmetrize(between), within + gamma * np.eye(m))
        r = len(self.classes_) - 1
        self.directions_ = v[:, ::-1][:, :r]
        z = kc @ self.directions_
        self.class_means_ = np.stack(
            [z[self.y_idx_ == c].mean(axis=0) for c in range(len(self.classes_))]
        )
        return self

    def transform(self, X):
        """Coordinates of ``X`` in discriminant space, shape ``(n, n_classes - 1)``."""
        X = self._check_predict(X)
        k = kernel_from_logs(self.kernel_, self.logs_fit_, log_features(X))
        kc = k - self.col_means_[:, None] - k.mean(axis=0)[None, :] + self.grand_mean_
        return kc.T @ self.directions_

    def predict(self, X):
        z = self.transform(X)
        d2 = np.sum((z[:, None, :] - self.class_means_[None, :, :]) ** 2, axis=2)
        return self.classes_[np.argmin(d2, axis=1)]


class LogEKSRClassifier(_SPDClassifier):
    """Sparse representation classification in a Log-Euclidean RKHS.

    The dictionary is the training set. A query ``x`` is coded by kernel
    orthogonal matching pursuit over unit-normalized atoms with at most
    ``n_nonzero_coefs`` atoms, and assigned to the class whose restricted
    code leaves the smallest residual ``||phi(x) - Phi a_c||^2``.

    Parameters
    ----------
    kernel : KernelSpec, optional
        Defaults to ``KernelSpec("loge_poly")``, i.e. ``p(t) = t + t^2``.
        A ``loge_gauss`` spec without ``beta`` gets the median heuristic.
    n_nonzero_coefs : int, optional
        Sparsity budget; defaults to ``min(10, n_train - 1)``.
    """

    _state = ("logs_fit_", "y_idx_", "n_features_", "kernel_", "gram_", "n_nonzero_coefs_")

    # atoms with squared RKHS norm below this fraction of the largest are degenerate
    degenerate_tol = 1e-12

    def __init__(self, kernel=None, n_nonzero_coefs=None):
        self.kernel = kernel
        self.n_nonzero_coefs = n_nonzero_coefs

    def fit(self, X, y):
        X = self._fit_common(X, y)
        spec = self.kernel or KernelSpec("loge_poly")
        self.logs_fit_ = log_features(X)
        if spec.kind == "loge_gauss" and spec.beta is None:
            spec = spec.with_beta(median_heuristic_beta(X))
        self.kernel_ = spec
        g = kernel_from_logs(spec, self.logs_fit_, self.logs_fit_, same=True)
        certify_psd(g, spec)
        diag = np.diag(g)
        top = float(np.max(np.abs(g)))
        if top == 0.0 or np.any(diag <= self.degenerate_tol * top):
            raise DegenerateTrainingError(
                f"training Gram matrix under {spec.kind} has zero-norm atoms; "
                "sparse coding is undefined"
            )
        self.gram_ = g
        m = len(g)
        t = self.n_nonzero_coefs if self.n_nonzero_coefs is not None else min(10, m - 1)
        if t < 1:
            raise ValueError("n_nonzero_coefs must be >= 1")
        self.n_nonzero_coefs_ = int(min(t, m))
        return self

    def _query_kernels(self, X):
        logs = log_features(X)
        kx = kernel_from_logs(self.kernel_, self.logs_fit_, logs)
        kxx = np.array(
            [kernel_from_logs(self.kernel_, l[None], l[None], same=True)[0, 0] for l in logs]
        )
        return kx, kxx

    def sparse_code(self, X):
        """Kernel OMP codes; returns a list of ``(support, coefficients)`` per query."""
        X = self._check_predict(X)
        kx, kxx = self._query_kernels(X)
        return [self._omp(kx[:, i], kxx[i]) for i in range(len(X))]

    def _omp(self, kx, kxx):
        norms = np.sqrt(np.diag(self.gram_))
        gn = self.gram_ / np.outer(norms, norms)
        kn = kx / norms
        support = []
        a = np.zeros(0)
        scale = np.sqrt(max(kxx, 0.0))
        for _ in range(self.n_nonzero_coefs_):
            corr = kn - gn[:, support] @ a
            corr = np.abs(corr)
            corr[support] = -1.0
            j = int(np.argmax(corr))
            if corr[j] <= 1e-12 * scale:
                break
            support.append(j)
            a = np.linalg.lstsq(gn[np.ix_(support, support)], kn[support], rcond=None)[0]
            if kxx - a @ kn[support] <= 1e-12 * kxx:
                break
        support = np.array(support, dtype=int)
        return support, a / norms[support]

    def rkhs_residual(self, x, support, coeffs):
        """``k(x,x) - 2 sum a_i k(x, d_i) + sum a_i a_j k(d_i, d_j)`` for a code on ``support``."""
        x = self._check_predict(x)
        kx, kxx = self._query_kernels(x)
        return self._residual(kx[:, 0], kxx[0], np.asarray(support, dtype=int),
                              np.asarray(coeffs, dtype=float))

    def _residual(self, kx, kxx, support, coeffs):
        if len(support) == 0:
            return float(kxx)
        g = self.gram_[np.ix_(support, support)]
        return float(kxx - 2.0 * coeffs @ kx[support] + coeffs @ g @ coeffs)

    def class_residuals(self, X):
        """Residual of each class-restricted code, shape ``(n, n_classes)``."""
        X = self._check_predict(X)
        kx, kxx = self._query_kernels(X)
        out = np.empty((len(X), len(self.classes_)))
        for i in range(len(X)):
            support, coeffs = self._omp(kx[:, i], kxx[i])
            owner = self.y_idx_[support]
            for c in range(len(self.classes_)):
                keep = owner == c
                out[i, c] = self._residual(kx[:, i], kxx[i], support[keep], coeffs[keep])
        return out

    def predict(self, X):
        return self.classes_[np.argmin(self.class_residuals(X), axis=1)]


def make_classifier(variant, kernel=None, **params):
    """Build the estimator for one of ``VARIANTS``."""
    if variant == "nn_airm":
        return SPDNearestNeighbor("airm")
    if variant == "nn_loged":
        return SPDNearestNeighbor("logeuclid")
    if variant == "cdl_lda":
        return CDLClassifier(kernel=kernel, **params)
    if variant == "logeksr":
        return LogEKSRClassifier(kernel=kernel, **params)
    raise ValueError(f"unknown classifier variant {variant!r}; expected one of {VARIANTS}")


def variant_of(model):
    """Inverse of `make_classifier`: the variant name of an estimator."""
    if isinstance(model, SPDNearestNeighbor):
        return "nn_airm" if model.metric == "airm" else "nn_loged"
    if isinstance(model, CDLClassifier):
        return "cdl_lda"
    if isinstance(model, LogEKSRClassifier):
        return "logeksr"
    raise TypeError(f"not an spdkit classifier: {type(model).__name__}")
