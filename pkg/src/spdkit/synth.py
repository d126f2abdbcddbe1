"""Synthetic image-set datasets written as PGM trees.

Each class owns a mean intensity and a handful of smooth spatial modes. An
image of class ``c`` is::

    mean_c + sum_k a_k * s_k * amplitude * mode_ck + noise * eps

with ``eps ~ N(0, 1)`` per pixel and ``s_k ~ U(0.9, 1.1)`` per set. The
coefficients ``a_k`` are Gaussian draws whitened within each set (zero mean,
unit sample covariance) when the set has more than ``N_MODES`` images, which
keeps the trace of every set's covariance close to its class value.

Covariance descriptors ignore the mean, so class identity is carried by the
span of the class modes. The means are still spaced so that neighbouring
classes differ by at least ``mean_gap`` intra-class pixel standard
deviations.
"""
from pathlib import Path

import numpy as np

from .ingestion import resize_bilinear, write_pgm

N_MODES = 6
AMPLITUDE = 0.012
NOISE = 0.004


def _smooth_mode(rng, size):
    coarse = rng.standard_normal((4, 4))
    mode = resize_bilinear(coarse, (size, size))
    mode -= mode.mean()
    return mode / np.sqrt(np.mean(mode**2))


def _coefficients(rng, n):
    a = rng.standard_normal((n, N_MODES))
    if n <= N_MODES:
        return a
    a -= a.mean(axis=0)
    q, r = np.linalg.qr(a)
    # fix column signs so the draw, not the QR convention, decides orientation
    q *= np.sign(np.diag(r))
    return q * np.sqrt(n)


def class_means(n_classes, mean_gap=5.0):
    """Mean intensity per class, spaced ``mean_gap`` pixel standard deviations apart."""
    std = np.sqrt(N_MODES * (1.1 * AMPLITUDE) ** 2 + NOISE**2)
    step = mean_gap * std * 1.05
    centre = 0.5
    offsets = (np.arange(n_classes) - (n_classes - 1) / 2.0) * step
    means = centre + offsets
    if means.min() - 4 * std < 0 or means.max() + 4 * std > 1:
        raise ValueError(f"{n_classes} classes do not fit in [0, 1] at gap {mean_gap}")
    return means


def generate(n_classes, sets_per_class, images_per_set, size=24, seed=0, mean_gap=5.0):
    """Return ``{(class_name, set_name): uint8 array (n, size, size)}``."""
    if n_classes < 1 or sets_per_class < 1 or images_per_set < 2 or size < 1:
        raise ValueError("need >= 1 class, >= 1 set per class, >= 2 images per set")
    rng = np.random.default_rng(seed)
    means = class_means(n_classes, mean_gap)
    out = {}
    for c in range(n_classes):
        modes = np.stack([_smooth_mode(rng, size) for _ in range(N_MODES)])
        for s in range(sets_per_class):
            scales = rng.uniform(0.9, 1.1, N_MODES)
            coef = _coefficients(rng, images_per_set) * scales * AMPLITUDE
            eps = rng.standard_normal((images_per_set, size, size)) * NOISE
            imgs = means[c] + np.einsum("nk,khw->nhw", coef, modes) + eps
            pixels = np.clip(np.rint(imgs * 255.0), 0, 255).astype(np.uint8)
            out[(f"class{c:02d}", f"set{s:03d}")] = pixels
    return out


def write_dataset(out, n_classes, sets_per_class, images_per_set, size=24, seed=0,
                  mean_gap=5.0):
    """Write a synthetic dataset as ``out/<class>/<set>/imgNNNN.pgm``; returns the root path."""
    out = Path(out)
    data = generate(n_classes, sets_per_class, images_per_set, size, seed, mean_gap)
    for (cls, s), pixels in data.items():
        d = out / cls / s
        d.mkdir(parents=True, exist_ok=True)
        for i, img in enumerate(pixels):
            write_pgm(d / f"img{i:04d}.pgm", img)
    return out
