"""Cross-validated benchmark of descriptor x classifier combinations.

For every fold of a `SplitPlan` each classifier is fitted on the training
sets and scored on the test sets, once per descriptor kind. Descriptors are
extracted once per image set per kind before the folds run, so extraction
time and classification time are reported separately.

Accuracy is the percentage of test image sets classified correctly; the
spread across folds is the population standard deviation (divisor N).
Timings use ``time.perf_counter`` and are measured sequentially.
"""
import csv
import io
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import make_classifier
from .descriptors import DEFAULT_ABS_FLOOR, DEFAULT_LAMBDA, DescriptorConfig, describe
from .ingestion import make_splits, scan_dataset
from .kernels import KernelSpec

logger = logging.getLogger(__name__)

# display name, CLI name, estimator variant; the order is the table column order
CLASSIFIERS = (
    ("NN-AIRM", "nn-airm", "nn_airm"),
    ("NN-LogED", "nn-loged", "nn_loged"),
    ("CDL", "cdl", "cdl_lda"),
    ("LogEKSR", "logeksr", "logeksr"),
)
CLI_TO_VARIANT = {cli: variant for _, cli, variant in CLASSIFIERS}
VARIANT_TO_DISPLAY = {variant: name for name, _, variant in CLASSIFIERS}
GRIDS = (0, 2, 3, 4, 6, 8, 12)


def descriptor_name(grid):
    return "SPD^OR" if grid == 0 else f"CSPD^{grid}x{grid}"


def std_dev(values):
    """Population standard deviation (divisor N)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("std_dev of an empty list")
    return float(np.sqrt(np.mean((values - values.mean()) ** 2)))


@dataclass
class ExperimentConfig:
    root: Path
    grids: tuple = (0, 6)
    classifiers: tuple = ("nn_airm", "nn_loged", "cdl_lda", "logeksr")
    kernels: dict = field(default_factory=lambda: {
        "cdl_lda": KernelSpec("loge_linear"),
        "logeksr": KernelSpec("loge_poly", (1.0, 1.0)),
    })
    train_per_class: int = 2
    folds: int = 10
    seed: int = 0
    image_size: tuple = (24, 24)
    lam: float = DEFAULT_LAMBDA
    abs_floor: float = DEFAULT_ABS_FLOOR
    sparsity: int = None

    def __post_init__(self):
        self.grids = tuple(sorted(set(int(g) for g in self.grids)))
        if not self.grids:
            raise ValueError("need at least one descriptor grid (0 = SPD baseline)")
        if not self.classifiers:
            raise ValueError("need at least one classifier")
        order = [v for _, _, v in CLASSIFIERS]
        for v in self.classifiers:
            if v not in order:
                raise ValueError(f"unknown classifier variant {v!r}")
        self.classifiers = tuple(v for v in order if v in self.classifiers)
        for g in self.grids:
            if g < 0:
                raise ValueError(f"invalid grid {g}")

    def metadata(self):
        return {
            "root": str(self.root),
            "grids": list(self.grids),
            "classifiers": list(self.classifiers),
            "kernels": {k: {"kind": s.kind, "params": s.params_string()}
                        for k, s in sorted(self.kernels.items())},
            "train_per_class": self.train_per_class,
            "folds": self.folds,
            "seed": self.seed,
            "image_size": list(self.image_size),
            "lambda": self.lam,
            "abs_floor": self.abs_floor,
            "sparsity": self.sparsity,
            "accuracy": "percent of test image sets, per fold",
            "std_convention": "population (divisor N)",
            "timing": "sequential, time.perf_counter; classification = fit + predict per fold, "
                      "mean over folds in ms; extraction = whole dataset in s",
        }


@dataclass
class CellResult:
    fold_accuracies: list = field(default_factory=list)
    classify_ms: list = field(default_factory=list)
    error: str = None

    @property
    def mean(self):
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self):
        return std_dev(self.fold_accuracies)

    @property
    def mean_ms(self):
        return float(np.mean(self.classify_ms))


@dataclass
class ExperimentReport:
    descriptors: list = field(default_factory=list)
    classifiers: list = field(default_factory=list)
    dims: dict = field(default_factory=dict)
    cells: dict = field(default_factory=dict)
    extraction_seconds: dict = field(default_factory=dict)
    extraction_counts: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def cell(self, descriptor, classifier):
        return self.cells[(descriptor, classifier)]


def run_experiment(cfg, manifest=None, plan=None):
    """Run the full benchmark described by ``cfg`` and return an `ExperimentReport`."""
    if manifest is None:
        manifest = scan_dataset(cfg.root)
    if plan is None:
        plan = make_splits(manifest, cfg.train_per_class, cfg.folds, cfg.seed)
    set_ids = [s for cls in manifest.classes for s in manifest.set_ids(cls)]
    image_sets = {sid: manifest.load(sid, cfg.image_size) for sid in set_ids}
    labels = {sid: image_sets[sid].label for sid in set_ids}

    report = ExperimentReport(
        descriptors=[descriptor_name(g) for g in cfg.grids],
        classifiers=[VARIANT_TO_DISPLAY[v] for v in cfg.classifiers],
        metadata=cfg.metadata(),
    )
    descriptors = {}
    for g in cfg.grids:
        name = descriptor_name(g)
        dcfg = DescriptorConfig(cfg.lam, cfg.abs_floor, None if g == 0 else g)
        start = time.perf_counter()
        try:
            out = {}
            for sid in set_ids:
                out[sid] = describe(image_sets[sid], dcfg)
                report.extraction_counts[name] = report.extraction_counts.get(name, 0) + 1
            descriptors[name] = out
            report.dims[name] = out[set_ids[0]].shape[0]
        except Exception as exc:  # recorded per cell, never fatal
            logger.warning("descriptor %s failed: %s", name, exc)
            descriptors[name] = exc
        report.extraction_seconds[name] = time.perf_counter() - start

    for name in report.descriptors:
        for variant in cfg.classifiers:
            report.cells[(name, VARIANT_TO_DISPLAY[variant])] = CellResult()

    for fold in range(plan.folds):
        train, test = plan.train_ids(fold), plan.test_ids(fold)
        y_train = np.array([labels[s] for s in train])
        y_test = np.array([labels[s] for s in test])
        for name in report.descriptors:
            desc = descriptors[name]
            for variant in cfg.classifiers:
                cell = report.cells[(name, VARIANT_TO_DISPLAY[variant])]
                if cell.error is not None:
                    continue
                if isinstance(desc, Exception):
                    cell.error = f"descriptor: {desc}"
                    continue
                x_train = np.stack([desc[s] for s in train])
                x_test = np.stack([desc[s] for s in test])
                params = {"n_nonzero_coefs": cfg.sparsity} if variant == "logeksr" else {}
                start = time.perf_counter()
                try:
                    model = make_classifier(variant, kernel=cfg.kernels.get(variant), **params)
                    pred = model.fit(x_train, y_train).predict(x_test)
                except Exception as exc:  # recorded per cell, never fatal
                    logger.warning("%s / %s failed on fold %d: %s", name, variant, fold, exc)
                    cell.error = f"{type(exc).__name__}: {exc}"
                    continue
                cell.classify_ms.append((time.perf_counter() - start) * 1e3)
                cell.fold_accuracies.append(100.0 * float(np.mean(pred == y_test)))
    return report


def _fmt_cell(cell, kind):
    if cell.error is not None or not cell.fold_accuracies:
        return "ERR"
    if kind == "acc":
        return f"{cell.mean:.2f} ± {cell.std:.2f}"
    return f"{cell.mean_ms:.1f}"


def render_report(report, fmt="markdown"):
    """Render a report as ``"csv"`` or ``"markdown"`` text.

    Rows follow the descriptor order of the report (SPD baseline first, then
    increasing block counts); columns follow NN-AIRM, NN-LogED, CDL, LogEKSR.
    Timing lives in the ``extract_s`` and ``*_ms`` CSV columns and in the
    markdown ``## Timing`` section, which comes last.
    """
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise ValueError(f"unknown report format {fmt!r}")


def _render_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["descriptor", "dim", "extract_s"]
    for c in report.classifiers:
        header += [f"{c}_mean", f"{c}_std", f"{c}_ms"]
    w.writerow(header)
    for d in report.descriptors:
        row = [d, report.dims.get(d, ""), f"{report.extraction_seconds.get(d, 0.0):.4f}"]
        for c in report.classifiers:
            cell = report.cells[(d, c)]
            if cell.error is not None or not cell.fold_accuracies:
                row += ["ERR", "ERR", "ERR"]
            else:
                row += [f"{cell.mean:.4f}", f"{cell.std:.4f}", f"{cell.mean_ms:.3f}"]
        w.writerow(row)
    return buf.getvalue()


def _table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(v) for v in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def _render_markdown(report):
    out = ["# spdkit benchmark\n"]
    if report.metadata:
        out.append(_table(["parameter", "value"],
                          [[k, v] for k, v in report.metadata.items()]))
    out.append("## Accuracy (mean ± std, %)\n")
    out.append(_table(
        ["Models", "dim"] + report.classifiers,
        [[d, report.dims.get(d, "")] + [_fmt_cell(report.cells[(d, c)], "acc")
                                          for c in report.classifiers]
         for d in report.descriptors],
    ))
    errors = [(d, c, cell.error) for (d, c), cell in report.cells.items() if cell.error]
    if errors:
        out.append("## Failures\n")
        out.append(_table(["Models", "classifier", "error"], errors))
    out.append("## Timing\n")
    out.append(_table(
        ["Models", "extract (s)"] + [f"{c} (ms)" for c in report.classifiers],
        [[d, f"{report.extraction_seconds.get(d, 0.0):.3f}"]
         + [_fmt_cell(report.cells[(d, c)], "ms") for c in report.classifiers]
         for d in report.descriptors],
    ))
    return "\n".join(out)


def render_folds(report):
    """Per-fold accuracies as ``descriptor,classifier,fold,accuracy`` CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["descriptor", "classifier", "fold", "accuracy"])
    for d in report.descriptors:
        for c in report.classifiers:
            for i, acc in enumerate(report.cells[(d, c)].fold_accuracies):
                w.writerow([d, c, i, repr(acc)])
    return buf.getvalue()
