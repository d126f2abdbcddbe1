"""Dataset loading: PGM/PPM decoding, grayscale conversion, bilinear resize, splits.

Datasets are laid out as ``root/<class>/<set>/<image files>``; classes, sets
and images are enumerated in lexicographic order.

Random splits use SplitMix64 so that a (seed, layout) pair gives the same
plan on every platform. With 64-bit wrap-around arithmetic the generator is::

    state = state + 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output z ^ (z >> 31)

Bounded integers in ``[0, n)`` are drawn by rejection
(``r < 2**64 - 2**64 % n``, then ``r % n``), and each class's set list is
shuffled with a Fisher-Yates pass from the last position down.
"""
import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .descriptors import ImageSet

PNM_EXTENSIONS = (".pgm", ".ppm", ".pnm")
OTHER_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
LUMA = (0.299, 0.587, 0.114)
_MASK64 = (1 << 64) - 1


# --- decoding -------------------------------------------------------------

def read_pnm(path):
    """Decode a PGM (P2/P5) or PPM (P3/P6) file.

    Returns
    -------
    pixels : ndarray, shape (h, w) or (h, w, 3)
        Raw integer sample values as float64.
    maxval : int
    """
    data = Path(path).read_bytes()
    tokens, offset = _pnm_header(data, path)
    magic, width, height, maxval = tokens
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: zero-sized image")
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid maxval {maxval}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels
    if magic in (b"P5", b"P6"):
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[offset:offset + count * dtype.itemsize]
        if len(raw) < count * dtype.itemsize:
            raise ValueError(f"{path}: truncated pixel data")
        pixels = np.frombuffer(raw, dtype=dtype).astype(float)
    else:
        values = data[offset:].split()
        if len(values) < count:
            raise ValueError(f"{path}: truncated pixel data")
        pixels = np.array([int(v) for v in values[:count]], dtype=float)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return pixels.reshape(shape), maxval


def _pnm_header(data, path):
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ValueError(f"{path}: unsupported image format (magic {magic!r})")
    fields = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i >= len(data):
            raise ValueError(f"{path}: truncated header")
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        try:
            fields.append(int(data[i:j]))
        except ValueError:
            raise ValueError(f"{path}: malformed header") from None
        i = j
    # exactly one whitespace byte separates the header from binary data
    return (magic, *fields), i + 1


def write_pgm(path, pixels):
    """Write an 8-bit binary PGM (P5) from integer values in [0, 255]."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if pixels.min() < 0 or pixels.max() > 255:
        raise ValueError("PGM pixel values must lie in [0, 255]")
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.asarray(pixels, dtype=np.uint8).tobytes())


def decode_image(path):
    """Grayscale intensities in [0, 1] for a PNM file, or any format Pillow can open."""
    path = Path(path)
    if path.suffix.lower() in PNM_EXTENSIONS:
        pixels, maxval = read_pnm(path)
    else:
        pixels, maxval = _decode_with_pillow(path)
    if pixels.ndim == 3:
        pixels = pixels[..., :3] @ np.array(LUMA)
    if pixels.size == 0:
        raise ValueError(f"{path}: zero-sized image")
    return pixels / maxval


def _decode_with_pillow(path):
    try:
        from PIL import Image
    except ImportError:
        raise ValueError(f"{path}: only PGM/PPM can be decoded without Pillow") from None
    try:
        with Image.open(path) as img:
            img = img.convert("RGB") if img.mode not in ("L", "RGB") else img
            return np.asarray(img, dtype=float), 255
    except OSError as exc:
        raise ValueError(f"{path}: cannot decode image ({exc})") from None


# --- resizing -------------------------------------------------------------

def _bilinear_weights(n_src, n_dst):
    # half-pixel centres: src = (dst + 0.5) * n_src / n_dst - 0.5, clamped to the edge
    pos = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    pos = np.clip(pos, 0.0, n_src - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = pos - lo
    w = np.zeros((n_dst, n_src))
    w[np.arange(n_dst), lo] += 1.0 - frac
    w[np.arange(n_dst), hi] += frac
    return w


def resize_bilinear(img, shape):
    """Bilinear resize of a 2-D image to ``shape = (h, w)`` with half-pixel-centred sampling."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    h, w = shape
    if (h, w) == img.shape:
        return img.copy()
    return _bilinear_weights(img.shape[0], h) @ img @ _bilinear_weights(img.shape[1], w).T


def load_image_set(paths, target=(24, 24), label=None, set_id=""):
    """Decode, convert to grayscale, resize and normalize a list of image files."""
    images = [resize_bilinear(decode_image(p), target) for p in paths]
    return ImageSet(np.clip(np.stack(images), 0.0, 1.0), label, set_id)


# --- dataset layout -------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    """Classes, their sets and each set's image files, all in lexicographic order."""

    root: Path
    classes: tuple
    sets_per_class: dict
    images: dict = field(repr=False)

    def set_ids(self, cls):
        return [f"{cls}/{s}" for s in self.sets_per_class[cls]]

    def image_count(self, set_id):
        return len(self.images[set_id])

    def load(self, set_id, target=(24, 24)):
        cls = set_id.split("/", 1)[0]
        return load_image_set(self.images[set_id], target, label=cls, set_id=set_id)


def _is_image(path):
    ext = path.suffix.lower()
    return path.is_file() and (ext in PNM_EXTENSIONS or ext in OTHER_EXTENSIONS)


def scan_dataset(root):
    """Enumerate ``root/<class>/<set>/<images>`` into a `DatasetManifest`."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise ValueError(f"{root}: found 0 classes")
    sets_per_class = {}
    images = {}
    for cls in classes:
        sets = sorted(p.name for p in (root / cls).iterdir() if p.is_dir())
        if not sets:
            raise ValueError(f"{root}: class {cls!r} has no image sets")
        sets_per_class[cls] = tuple(sets)
        for s in sets:
            files = sorted((p for p in (root / cls / s).iterdir() if _is_image(p)),
                           key=lambda p: p.name)
            if not files:
                raise ValueError(f"{root}: image set {cls}/{s} is empty")
            for f in files:
                if not os.access(f, os.R_OK):
                    raise ValueError(f"{f}: unreadable")
            images[f"{cls}/{s}"] = tuple(files)
    return DatasetManifest(root, tuple(classes), sets_per_class, images)


# --- splits ---------------------------------------------------------------

class SplitMix64:
    """SplitMix64 pseudo-random generator (see module docstring)."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n):
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items):
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


@dataclass(frozen=True)
class SplitPlan:
    """Per-fold train/test assignment of image sets.

    ``assignments[fold][cls]`` is a pair ``(train_ids, test_ids)``, each in
    lexicographic order.
    """

    seed: int
    folds: int
    train_per_class: int
    assignments: tuple

    def train_ids(self, fold):
        return [s for cls in sorted(self.assignments[fold]) for s in self.assignments[fold][cls][0]]

    def test_ids(self, fold):
        return [s for cls in sorted(self.assignments[fold]) for s in self.assignments[fold][cls][1]]

    def to_csv(self):
        """``fold,class,set_id,role`` lines, header first."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["fold", "class", "set_id", "role"])
        for fold, per_class in enumerate(self.assignments):
            for cls in sorted(per_class):
                train, test = per_class[cls]
                for s in train:
                    writer.writerow([fold, cls, s, "train"])
                for s in test:
                    writer.writerow([fold, cls, s, "test"])
        return buf.getvalue()


def make_splits(manifest, train_per_class, folds, seed):
    """Random set-level train/test splits, ``train_per_class`` training sets per class per fold."""
    if folds < 1:
        raise ValueError("folds must be >= 1")
    if train_per_class < 1:
        raise ValueError("train_per_class must be >= 1")
    for cls in manifest.classes:
        n = len(manifest.sets_per_class[cls])
        if train_per_class >= n:
            raise ValueError(
                f"class {cls!r} has {n} sets; cannot keep {train_per_class} for training "
                "and at least one for testing"
            )
    rng = SplitMix64(seed)
    assignments = []
    for _ in range(folds):
        per_class = {}
        for cls in manifest.classes:
            ids = rng.shuffle(manifest.set_ids(cls))
            per_class[cls] = (tuple(sorted(ids[:train_per_class])),
                              tuple(sorted(ids[train_per_class:])))
        assignments.append(per_class)
    return SplitPlan(int(seed), int(folds), int(train_per_class), tuple(assignments))
