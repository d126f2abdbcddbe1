"""Command line interface: ``spdkit extract | bench | synth``."""
import argparse
import json
import logging
import sys
from pathlib import Path

from .descriptors import DEFAULT_ABS_FLOOR, DEFAULT_LAMBDA, DescriptorConfig, describe
from .exceptions import SPDKitError
from .harness import (
    CLI_TO_VARIANT,
    GRIDS,
    ExperimentConfig,
    render_folds,
    render_report,
    run_experiment,
)
from .ingestion import make_splits, scan_dataset
from .kernels import KINDS, KernelSpec
from .synth import write_dataset
from .textio import write_descriptor

logger = logging.getLogger("spdkit")


def _grid(text):
    try:
        g = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if g not in GRIDS:
        raise argparse.ArgumentTypeError(f"grid must be one of {GRIDS}")
    return g


def _grid_list(text):
    return [_grid(v) for v in text.split(",") if v.strip()]


def _size(text):
    parts = [int(v) for v in text.lower().split("x")]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or min(parts) < 1:
        raise argparse.ArgumentTypeError("size must be N or HxW")
    return tuple(parts)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spdkit", description="SPD / CSPD image-set descriptors and benchmarks"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute one descriptor file per image set")
    p.add_argument("--root", required=True, type=Path)
    p.add_argument("--grid", required=True, type=_grid, help="blocks per side, 0 = plain SPD")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--size", type=_size, default=(24, 24))
    p.add_argument("--lam", type=float, default=DEFAULT_LAMBDA)

    p = sub.add_parser("bench", help="cross-validated descriptor x classifier benchmark")
    p.add_argument("--root", required=True, type=Path)
    p.add_argument("--grids", type=_grid_list, default=[0, 6])
    p.add_argument("--classifiers", default="nn-airm,nn-loged,cdl,logeksr")
    p.add_argument("--train-per-class", type=int, default=2)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--size", type=_size, default=(24, 24))
    p.add_argument("--lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--logeksr-kernel", choices=KINDS, default="loge_poly")
    p.add_argument("--poly-coeffs", default="1,1",
                   help="coefficients c_1,...,c_n of p(t) = c_1 t + ... + c_n t^n")
    p.add_argument("--gauss-beta", type=float, default=None,
                   help="loge_gauss bandwidth; default is the median heuristic")
    p.add_argument("--sparsity", type=int, default=None,
                   help="LogEKSR atom budget; default min(10, n_train - 1)")

    p = sub.add_parser("synth", help="write a synthetic PGM image-set dataset")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--sets-per-class", type=int, default=5)
    p.add_argument("--images-per-set", type=int, default=20)
    p.add_argument("--size", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean-gap", type=float, default=5.0)
    p.add_argument("--out", required=True, type=Path)
    return parser


def cmd_extract(args):
    manifest = scan_dataset(args.root)
    cfg = DescriptorConfig(args.lam, DEFAULT_ABS_FLOOR, None if args.grid == 0 else args.grid)
    n = 0
    for cls in manifest.classes:
        (args.out / cls).mkdir(parents=True, exist_ok=True)
        for set_id in manifest.set_ids(cls):
            desc = describe(manifest.load(set_id, args.size), cfg)
            name = set_id.split("/", 1)[1]
            write_descriptor(args.out / cls / f"{name}.spddesc", desc, set_id, cls)
            n += 1
    print(f"wrote {n} descriptors to {args.out}")


def cmd_bench(args):
    unknown = [c for c in args.classifiers.split(",") if c not in CLI_TO_VARIANT]
    if unknown:
        raise ValueError(f"unknown classifiers {unknown}; choose from {sorted(CLI_TO_VARIANT)}")
    coeffs = tuple(float(c) for c in args.poly_coeffs.split(","))
    kind = args.logeksr_kernel
    if kind in ("loge_poly", "loge_exp"):
        logeksr_kernel = KernelSpec(kind, coeffs)
    elif kind == "loge_gauss":
        logeksr_kernel = KernelSpec(kind, beta=args.gauss_beta)
    else:
        logeksr_kernel = KernelSpec(kind)
    cfg = ExperimentConfig(
        root=args.root,
        grids=tuple(args.grids),
        classifiers=tuple(CLI_TO_VARIANT[c] for c in args.classifiers.split(",")),
        kernels={"cdl_lda": KernelSpec("loge_linear"), "logeksr": logeksr_kernel},
        train_per_class=args.train_per_class,
        folds=args.folds,
        seed=args.seed,
        image_size=args.size,
        lam=args.lam,
        sparsity=args.sparsity,
    )
    manifest = scan_dataset(args.root)
    plan = make_splits(manifest, cfg.train_per_class, cfg.folds, cfg.seed)
    report = run_experiment(cfg, manifest, plan)

    args.out.mkdir(parents=True, exist_ok=True)
    text = render_report(report, args.format)
    ext = "csv" if args.format == "csv" else "md"
    (args.out / f"report.{ext}").write_text(text)
    (args.out / "folds.csv").write_text(render_folds(report))
    (args.out / "splits.csv").write_text(plan.to_csv())
    meta = dict(report.metadata, format=args.format, out=str(args.out))
    (args.out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(text, end="")


def cmd_synth(args):
    root = write_dataset(args.out, args.classes, args.sets_per_class, args.images_per_set,
                         args.size, args.seed, args.mean_gap)
    print(f"wrote {args.classes} classes x {args.sets_per_class} sets x "
          f"{args.images_per_set} images to {root}")


COMMANDS = {"extract": cmd_extract, "bench": cmd_bench, "synth": cmd_synth}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (SPDKitError, ValueError, OSError) as exc:
        print(f"spdkit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
