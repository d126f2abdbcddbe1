"""Line-oriented text formats for descriptors, Gram matrices and trained models.

Every matrix is written as one line per row of space-separated ``%.17g``
values, which round-trips IEEE doubles exactly.

Descriptor::

    SPDDESC v1 <dim> <set_id> <label>
    <dim rows>

Gram matrix::

    GRAM v1 <m> <kernel-kind> <params>
    <m rows>
    IDS <id_1> ... <id_m>

Model::

    SPDMODEL v1 <variant>
    PARAMS <json>
    CLASSES <json list>
    ARRAY <name> <dim_1>,<dim_2>,...
    <rows of the array reshaped to (-1, dim_last)>
    SCALAR <name> <json value>
    END
"""
import json

import numpy as np

from .classifiers import make_classifier, variant_of
from .kernels import GramMatrix, KernelSpec
from .linalg import SYMMETRY_TOL

_FMT = "%.17g"


def format_matrix(m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "".join(" ".join(_FMT % v for v in row) + "\n" for row in m)


def parse_rows(lines, n_rows, n_cols):
    rows = []
    for line in lines[:n_rows]:
        vals = line.split()
        if len(vals) != n_cols:
            raise ValueError(f"expected {n_cols} values per row, got {len(vals)}")
        rows.append([float(v) for v in vals])
    if len(rows) != n_rows:
        raise ValueError(f"expected {n_rows} rows, got {len(rows)}")
    return np.array(rows, dtype=float).reshape(n_rows, n_cols)


def _token(value):
    text = str(value)
    if not text or any(ch.isspace() for ch in text):
        raise ValueError(f"header token {text!r} must be non-empty and free of whitespace")
    return text


def write_descriptor(path, matrix, set_id, label):
    """Write one descriptor in the ``SPDDESC v1`` format."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"descriptor must be square, got {matrix.shape}")
    with open(path, "w") as fh:
        fh.write(f"SPDDESC v1 {matrix.shape[0]} {_token(set_id)} {_token(label)}\n")
        fh.write(format_matrix(matrix))


def read_descriptor(path):
    """Read an ``SPDDESC v1`` file; returns ``(matrix, set_id, label)``.

    The matrix must be symmetric (up to ``SYMMETRY_TOL`` relative); it is
    returned exactly symmetrized.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 5 or head[:2] != ["SPDDESC", "v1"]:
        raise ValueError(f"{path}: not an SPDDESC v1 file")
    dim = int(head[2])
    m = parse_rows(lines[1:], dim, dim)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise ValueError(f"{path}: descriptor is not symmetric")
    return (m + m.T) / 2.0, head[3], head[4]


def write_gram(path, gram):
    """Write a `GramMatrix` in the ``GRAM v1`` format."""
    m = gram.entries.shape[0]
    with open(path, "w") as fh:
        fh.write(f"GRAM v1 {m} {gram.kernel.kind} {gram.kernel.params_string()}\n")
        fh.write(format_matrix(gram.entries))
        fh.write("IDS " + " ".join(_token(i) for i in gram.point_ids) + "\n")


def read_gram(path):
    """Read a ``GRAM v1`` file back into a (re-certified) `GramMatrix`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 5 or head[:2] != ["GRAM", "v1"]:
        raise ValueError(f"{path}: not a GRAM v1 file")
    m = int(head[2])
    spec = KernelSpec.from_params_string(head[3], head[4])
    entries = parse_rows(lines[1:], m, m)
    ids = lines[m + 1].split()[1:] if len(lines) > m + 1 else [str(i) for i in range(m)]
    return GramMatrix(entries, tuple(ids), spec)


def _encode_param(value):
    if isinstance(value, KernelSpec):
        return {"__kernel__": [value.kind, value.coeffs, value.beta]}
    return value


def _decode_param(value):
    if isinstance(value, dict) and "__kernel__" in value:
        kind, coeffs, beta = value["__kernel__"]
        return KernelSpec(kind, None if coeffs is None else tuple(coeffs), beta)
    return value


def save_model(path, model):
    """Serialize a fitted spdkit classifier; `load_model` restores identical predictions."""
    variant = variant_of(model)
    params = {k: _encode_param(v) for k, v in model.get_params().items()}
    with open(path, "w") as fh:
        fh.write(f"SPDMODEL v1 {variant}\n")
        fh.write("PARAMS " + json.dumps(params, sort_keys=True) + "\n")
        fh.write("CLASSES " + json.dumps(np.asarray(model.classes_).tolist()) + "\n")
        for name in model._state:
            value = getattr(model, name)
            if isinstance(value, np.ndarray):
                shape = ",".join(str(s) for s in value.shape) or "-"
                fh.write(f"ARRAY {name} {value.dtype.kind} {shape}\n")
                flat = value.reshape(-1, value.shape[-1]) if value.ndim else value.reshape(1, 1)
                fh.write(format_matrix(flat) if flat.size else "")
            else:
                fh.write(f"SCALAR {name} {json.dumps(_encode_param(value))}\n")
        fh.write("END\n")


def load_model(path):
    """Inverse of `save_model`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[:2] != ["SPDMODEL", "v1"]:
        raise ValueError(f"{path}: not an SPDMODEL v1 file")
    params = {k: _decode_param(v) for k, v in json.loads(lines[1][len("PARAMS "):]).items()}
    variant = head[2]
    kernel = params.pop("kernel", None)
    model = make_classifier(variant, kernel=kernel, **{
        k: v for k, v in params.items() if k != "metric"
    })
    model.classes_ = np.array(json.loads(lines[2][len("CLASSES "):]))
    i = 3
    while lines[i] != "END":
        parts = lines[i].split(maxsplit=2)
        if parts[0] == "SCALAR":
            setattr(model, parts[1], _decode_param(json.loads(parts[2])))
            i += 1
            continue
        _, name, rest = parts
        kind, shape_text = rest.split()
        shape = () if shape_text == "-" else tuple(int(s) for s in shape_text.split(","))
        size = int(np.prod(shape))
        cols = shape[-1] if shape else 1
        n_rows = size // cols if cols else 0
        flat = parse_rows(lines[i + 1:], n_rows, cols) if size else np.zeros(0)
        arr = flat.reshape(shape)
        if kind in "iu":
            arr = arr.astype(np.int64)
        setattr(model, name, arr)
        i += 1 + n_rows
    return model
