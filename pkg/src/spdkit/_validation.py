"""Input checks shared by the estimators."""
import numpy as np

from .linalg import as_symmetric


def check_spd_stack(X, n_features=None):
    """Validate ``X`` as a stack ``(n, p, p)`` of finite symmetric matrices.

    A single ``(p, p)`` matrix is promoted to a stack of one. Positive
    definiteness is verified later by the eigendecompositions that every
    consumer performs anyway.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(f"expected an array of shape (n_matrices, p, p), got {X.shape}")
    if len(X) == 0:
        raise ValueError("found an empty stack of matrices")
    X = as_symmetric(X)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"matrices are {X.shape[1]}x{X.shape[2]}, but the model was fitted on "
            f"{n_features}x{n_features}"
        )
    return X


def check_labels(X, y, min_classes=2):
    """Return ``(classes, y_index)`` after checking ``y`` against ``X``."""
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(X):
        raise ValueError(f"need one label per matrix: {len(X)} matrices, labels {y.shape}")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < min_classes:
        raise ValueError(f"need at least {min_classes} distinct classes, got {len(classes)}")
    return classes, y_idx
