"""Command line entry point: ``dcshs {run,inspect,fit,predict}``.

Exit codes: 0 success, 1 failure (every dataset failed, unreadable input or
model), 2 configuration or usage error.
"""
import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, with_overrides
from .data import DatasetError, load_dataset
from .ensemble import fit_dcshs, load_model, save_model
from .evaluation import METRICS, evaluate_predictions
from .experiment import run_experiment

log = logging.getLogger("dcshs")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _load_cfg(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    return with_overrides(
        cfg,
        datasets=tuple(args.datasets) if getattr(args, "datasets", None) else None,
        methods=tuple(args.methods) if getattr(args, "methods", None) else None,
        folds=getattr(args, "folds", None), rounds=getattr(args, "rounds", None),
        seed=args.seed, output=getattr(args, "output", None),
        label_column=getattr(args, "label_column", None))


def cmd_run(args):
    cfg = _load_cfg(args)
    if not cfg.datasets:
        raise ConfigError("no datasets given (config [run] datasets or positional paths)")
    report = run_experiment(cfg)
    for name, msg in report.failures.items():
        print(f"FAILED {name}: {msg}", file=sys.stderr)
    if not report.ok:
        return EXIT_FAIL
    print(f"{'dataset':<16}{'method':<16}" + "".join(f"{k:>8}" for k in METRICS))
    for (name, method), s in report.summary.items():
        cells = "".join(f"{'-' if s[k] is None else format(s[k], '.3f'):>8}" for k in METRICS)
        print(f"{name:<16}{method:<16}{cells}")
    print(f"reports written to {report.out_dir}")
    return EXIT_OK


def cmd_inspect(args):
    status = EXIT_OK
    print(f"{'dataset':<20}{'instances':>10}{'features':>10}{'IR':>8}  notes")
    for path in args.paths:
        try:
            ds = load_dataset(path, label_column=args.label_column)
        except (OSError, DatasetError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = EXIT_FAIL
            continue
        s = ds.summary()
        notes = []
        if ds.relabeled:
            notes.append("relabeled")
        if ds.dropped_rows:
            notes.append(f"{ds.dropped_rows} rows dropped")
        print(f"{s.name:<20}{s.instances:>10}{s.features:>10}{s.imbalance_ratio:>8.2f}  "
              + ", ".join(notes))
    return status


def cmd_fit(args):
    cfg = _load_cfg(args)
    ds = load_dataset(args.dataset, label_column=cfg.label_column)
    model = fit_dcshs(ds.X, ds.y, cfg.model, seed=cfg.seed)
    out = Path(args.output or f"{ds.name}.dcshs.npz")
    save_model(model, out)
    print(f"{ds.name}: {len(model.members)} members, d_t={model.d_t}, "
          f"NC=({model.nc_maj},{model.nc_min}); model saved to {out}")
    return EXIT_OK


def cmd_predict(args):
    model = load_model(args.model)
    ds = load_dataset(args.dataset, label_column=args.label_column)
    labels, scores = model.predict(ds.X)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "score", "predicted", "truth"])
        for i, (lab, sc, t) in enumerate(zip(labels, scores, ds.y)):
            w.writerow([i, f"{sc:.6f}", ds.class_names[lab], ds.class_names[t]])
    finally:
        if fh is not sys.stdout:
            fh.close()
    m = evaluate_predictions(ds.y, labels, scores)
    print("  ".join(f"{k}={'-' if m[k] is None else format(m[k], '.4f')}" for k in METRICS),
          file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="dcshs", description="Imbalanced, overlapping binary classification "
                "by dual clustering and stage-wise hybrid sampling.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="repeated cross-validation benchmark")
    r.add_argument("datasets", nargs="*", help="KEEL .dat or CSV files (added to config)")
    r.add_argument("--config", help="INI run configuration")
    r.add_argument("--methods", nargs="+", help="subset of: dcshs smote_baseline raw")
    r.add_argument("--folds", type=int)
    r.add_argument("--rounds", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--output", help="output root directory")
    r.add_argument("--label-column", dest="label_column")
    r.set_defaults(func=cmd_run)

    i = sub.add_parser("inspect", help="dataset summary (instances, features, IR)")
    i.add_argument("paths", nargs="+")
    i.add_argument("--label-column", dest="label_column")
    i.set_defaults(func=cmd_inspect)

    f = sub.add_parser("fit", help="train a model on a whole dataset and save it")
    f.add_argument("dataset")
    f.add_argument("--config")
    f.add_argument("--seed", type=int)
    f.add_argument("--output", help="model file (default <dataset>.dcshs.npz)")
    f.add_argument("--label-column", dest="label_column")
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("predict", help="score a dataset with a saved model")
    q.add_argument("model")
    q.add_argument("dataset")
    q.add_argument("--output", help="predictions CSV (default stdout)")
    q.add_argument("--label-column", dest="label_column")
    q.set_defaults(func=cmd_predict)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, DatasetError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
