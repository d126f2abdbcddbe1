"""Covariance (SPD) and block-kernel (CSPD) descriptors of image sets."""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .linalg import certify_spd, matrix_log

DEFAULT_LAMBDA = 1e-3
DEFAULT_ABS_FLOOR = 1e-6


@dataclass(frozen=True)
class ImageSet:
    """An ordered stack of equal-sized grayscale images with values in [0, 1]."""

    images: np.ndarray
    label: object = None
    set_id: str = ""

    def __post_init__(self):
        images = np.array(self.images, dtype=float)
        if images.ndim != 3:
            raise ValueError(f"images must have shape (n, h, w), got {images.shape}")
        if images.shape[0] < 2:
            raise ValueError("an image set needs at least 2 images")
        if images.shape[1] == 0 or images.shape[2] == 0:
            raise ValueError("images must be non-empty")
        if not np.all(np.isfinite(images)):
            raise ValueError("image set contains non-finite pixels")
        if images.min() < 0.0 or images.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        images.setflags(write=False)
        object.__setattr__(self, "images", images)

    def __len__(self):
        return self.images.shape[0]

    @property
    def shape(self):
        return self.images.shape[1:]

    def vectors(self):
        """Row-major flattened images, shape ``(n, h*w)``."""
        return self.images.reshape(len(self), -1)


@dataclass(frozen=True)
class BlockGrid:
    """A ``d x d`` partition of ``h x w`` images into equal blocks, indexed row-major."""

    d: int
    block_h: int
    block_w: int

    @classmethod
    def for_shape(cls, d, h, w):
        if d < 1:
            raise ValueError("block count per side must be >= 1")
        if h % d or w % d:
            raise ValueError(f"{d}x{d} blocks do not evenly divide {h}x{w} images")
        return cls(d, h // d, w // d)


@dataclass(frozen=True)
class DescriptorConfig:
    """Regularization and optional block count.

    ``lam`` scales the trace-proportional ridge ``lam * tr(C) * I``;
    ``abs_floor`` replaces the descriptor by ``abs_floor * I`` when
    ``tr(C) == 0``. ``blocks=None`` selects the plain covariance descriptor,
    an integer ``d`` the CSPD descriptor over ``d x d`` blocks.
    """

    lam: float = DEFAULT_LAMBDA
    abs_floor: float = DEFAULT_ABS_FLOOR
    blocks: int = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if not self.abs_floor > 0:
            raise ValueError("abs_floor must be > 0")
        if self.blocks is not None and self.blocks < 1:
            raise ValueError("blocks must be >= 1")


def regularize(c, lam, abs_floor):
    """``c + lam * tr(c) * I``, or ``abs_floor * I`` when the trace is zero."""
    c = np.asarray(c, dtype=float)
    tr = float(np.trace(c))
    eye = np.eye(c.shape[0])
    if tr <= 0.0:
        return abs_floor * eye
    return c + lam * tr * eye


def sample_covariance(vectors):
    """``(1/n) sum (s_i - mean)(s_i - mean)^T`` for samples in the rows of ``vectors``."""
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need an (n, D) array with n >= 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    xc = x - x.mean(axis=0)
    c = xc.T @ xc / x.shape[0]
    return (c + c.T) / 2.0


def covariance_descriptor(image_set, cfg=DescriptorConfig()):
    """Regularized covariance of the row-major flattened images.

    Returns the certified SPD ``D x D`` matrix ``C + lam * tr(C) * I``, where
    ``C`` is the `sample_covariance` (divisor ``n``) of the images.
    """
    c = sample_covariance(_as_image_set(image_set).vectors())
    out = regularize(c, cfg.lam, cfg.abs_floor)
    certify_spd(out)
    return out


def partition(image_set, grid):
    """Split an image set into ``d*d`` sub-sets, one per block, in row-major block order."""
    image_set = _as_image_set(image_set)
    h, w = image_set.shape
    if grid.block_h * grid.d != h or grid.block_w * grid.d != w:
        raise ValueError(f"{grid} does not evenly divide {h}x{w} images")
    subsets = []
    for r in range(grid.d):
        for c in range(grid.d):
            block = image_set.images[
                :,
                r * grid.block_h : (r + 1) * grid.block_h,
                c * grid.block_w : (c + 1) * grid.block_w,
            ]
            subsets.append(
                ImageSet(block, image_set.label, f"{image_set.set_id}#{r * grid.d + c}")
            )
    return subsets


def block_log_gram(image_set, cfg):
    """Unregularized CSPD matrix: ``M[i, j] = tr(log C_i log C_j)`` over the blocks."""
    image_set = _as_image_set(image_set)
    if cfg.blocks is None:
        raise ValueError("DescriptorConfig.blocks must be set for CSPD descriptors")
    grid = BlockGrid.for_shape(cfg.blocks, *image_set.shape)
    covs = np.stack([covariance_descriptor(b, cfg) for b in partition(image_set, grid)])
    logs = matrix_log(covs)
    m = len(logs)
    a = logs.reshape(m, -1)
    b = np.swapaxes(logs, -1, -2).reshape(m, -1)
    g = a @ b.T
    return (g + g.T) / 2.0


def cspd_descriptor(image_set, cfg):
    """Component SPD descriptor: regularized Log-Euclidean Gram matrix of the block covariances."""
    out = regularize(block_log_gram(image_set, cfg), cfg.lam, cfg.abs_floor)
    certify_spd(out)
    return out


def describe(image_set, cfg):
    """Dispatch to `covariance_descriptor` or `cspd_descriptor` according to ``cfg.blocks``."""
    if cfg.blocks is None:
        return covariance_descriptor(image_set, cfg)
    return cspd_descriptor(image_set, cfg)


def descriptor_dim(image_h, image_w, blocks=None):
    """Side length of the descriptor: ``h*w`` for SPD, ``d*d`` for CSPD."""
    if blocks is None:
        return image_h * image_w
    grid = BlockGrid.for_shape(blocks, image_h, image_w)
    return grid.d * grid.d


class CovarianceDescriptor(TransformerMixin, BaseEstimator):
    """Map image sets to regularized covariance matrices.

    ``transform`` accepts a sequence of `ImageSet` objects or of ``(n, h, w)``
    arrays and returns an array of shape ``(n_sets, h*w, h*w)``.
    """

    def __init__(self, lam=DEFAULT_LAMBDA, abs_floor=DEFAULT_ABS_FLOOR):
        self.lam = lam
        self.abs_floor = abs_floor

    def _config(self):
        return DescriptorConfig(self.lam, self.abs_floor, None)

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X):
        cfg = self._config()
        return np.stack([describe(s, cfg) for s in X])


class CSPDDescriptor(CovarianceDescriptor):
    """Map image sets to ``d^2 x d^2`` CSPD matrices."""

    def __init__(self, blocks=6, lam=DEFAULT_LAMBDA, abs_floor=DEFAULT_ABS_FLOOR):
        self.blocks = blocks
        self.lam = lam
        self.abs_floor = abs_floor

    def _config(self):
        return DescriptorConfig(self.lam, self.abs_floor, self.blocks)


def _as_image_set(s):
    return s if isinstance(s, ImageSet) else ImageSet(s)
