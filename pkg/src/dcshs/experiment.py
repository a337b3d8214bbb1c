"""Repeated cross-validation benchmark over datasets and methods.

Files written to ``<output>/<run id>/`` (the id is a digest of the config,
so identical configs reuse the same directory):

    datasets.csv   name, instances, features, imbalance ratio
    records.jsonl  one line per (dataset, method, round, fold)
    summary.csv    per (dataset, method) metric means and within-dataset ranks
    ranks.csv      per method mean rank of every metric over datasets
    holm.csv       Holm-adjusted comparison against dcshs (5+ datasets only)
    series.csv     per-round means, long format for plotting

Every number is written with fixed formatting and every random stream is
derived from (seed, dataset, round, fold), so reruns are byte-identical.
"""
import csv
import hashlib
import json
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import load_dataset
from .ensemble import fit_method
from .evaluation import METRICS, evaluate_predictions, holm_test, rank_methods, stratified_cv

log = logging.getLogger(__name__)

CONTROL = "dcshs"


def derive_seed(*parts):
    """Stable 32-bit seed from a tuple of nonnegative integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def dataset_key(name):
    return zlib.crc32(name.encode("utf-8"))


def run_id(cfg):
    blob = json.dumps({"datasets": list(cfg.datasets), "methods": list(cfg.methods),
                       "folds": cfg.folds, "rounds": cfg.rounds, "seed": cfg.seed,
                       "label_column": cfg.label_column, "model": cfg.model.to_dict()},
                      sort_keys=True)
    return "run-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


@dataclass
class ExperimentReport:
    out_dir: Path
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)      # (dataset, method) -> metric means
    ranks: dict = field(default_factory=dict)        # (dataset, method) -> metric ranks
    holm: dict = field(default_factory=dict)         # metric -> HolmResult
    datasets: list = field(default_factory=list)     # DatasetSummary of successful datasets
    failures: dict = field(default_factory=dict)     # dataset -> error message
    seconds: dict = field(default_factory=dict)      # (dataset, method) -> fit+predict time

    @property
    def ok(self):
        return bool(self.datasets)


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def evaluate_dataset(ds, methods, cfg, report):
    """Cross-validate every method on one dataset; returns its records."""
    key = dataset_key(ds.name)
    plan = stratified_cv(ds.y, cfg.folds, cfg.rounds, seed=derive_seed(cfg.seed, key))
    records = []
    for method in methods:
        t0 = time.perf_counter()
        for fold in plan:
            seed = derive_seed(cfg.seed, key, fold.round, fold.fold)
            model = fit_method(method, ds.X[fold.train], ds.y[fold.train], cfg.model, seed)
            labels, scores = model.predict(ds.X[fold.test])
            m = evaluate_predictions(ds.y[fold.test], labels, scores)
            records.append({"dataset": ds.name, "method": method, "round": fold.round,
                            "fold": fold.fold, **{k: m[k] for k in METRICS}})
        report.seconds[(ds.name, method)] = time.perf_counter() - t0
        log.info("%s/%s done in %.1fs", ds.name, method, report.seconds[(ds.name, method)])
    return records


def _aggregate(report, methods):
    names = [d.name for d in report.datasets]
    for name in names:
        for method in methods:
            rows = [r for r in report.records if r["dataset"] == name and r["method"] == method]
            report.summary[(name, method)] = {k: _mean(r[k] for r in rows) for k in METRICS}
        for k in METRICS:
            row = [report.summary[(name, m)][k] for m in methods]
            row = [np.nan if v is None else v for v in row]
            ranks = rank_methods([np.nan_to_num(row, nan=-1.0)])[0]
            for m, r in zip(methods, ranks):
                report.ranks.setdefault((name, m), {})[k] = float(r)
    if len(names) >= 5 and len(methods) >= 2 and CONTROL in methods:
        for k in METRICS:
            table = [[report.summary[(n, m)][k] or 0.0 for m in methods] for n in names]
            report.holm[k] = holm_test(table, methods, CONTROL)
    elif len(methods) >= 2:
        log.info("Holm comparison skipped: needs dcshs and at least 5 datasets (have %d)",
                 len(names))


def _write(report, methods, rounds):
    out = report.out_dir
    with open(out / "datasets.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "instances", "features", "imbalance_ratio"])
        for d in report.datasets:
            w.writerow([d.name, d.instances, d.features, f"{d.imbalance_ratio:.4f}"])
    with open(out / "records.jsonl", "w") as fh:
        for r in report.records:
            fh.write(json.dumps({k: (round(v, 10) if isinstance(v, float) else v)
                                 for k, v in r.items()}) + "\n")
    names = [d.name for d in report.datasets]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "method", *METRICS, *(f"{k}_rank" for k in METRICS)])
        for n in names:
            for m in methods:
                s, r = report.summary[(n, m)], report.ranks[(n, m)]
                w.writerow([n, m, *(_fmt(s[k]) for k in METRICS),
                            *(f"{r[k]:.1f}" for k in METRICS)])
    with open(out / "ranks.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *METRICS])
        for m in methods:
            w.writerow([m, *(_fmt(np.mean([report.ranks[(n, m)][k] for n in names]))
                             for k in METRICS)])
    holm_path = out / "holm.csv"
    if report.holm:
        with open(holm_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "control", "method", "control_rank", "method_rank",
                        "z", "p_raw", "p_holm"])
            for k, res in report.holm.items():
                ranks = dict(zip(methods, res.mean_ranks))
                for m, z, p, ph in zip(res.methods, res.z, res.p_raw, res.p_holm):
                    w.writerow([k, CONTROL, m, _fmt(ranks[CONTROL]), _fmt(ranks[m]),
                                _fmt(z), _fmt(p), _fmt(ph)])
    elif holm_path.exists():
        holm_path.unlink()
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "method", "metric", "round", "value"])
        for n in names:
            for m in methods:
                for k in METRICS:
                    for rd in range(rounds):
                        vals = [r[k] for r in report.records if r["dataset"] == n
                                and r["method"] == m and r["round"] == rd]
                        w.writerow([n, m, k, rd, _fmt(_mean(vals))])


def run_experiment(cfg, out_dir=None):
    """Evaluate ``cfg.methods`` on ``cfg.datasets``; returns an ExperimentReport.

    A dataset that fails to load or to train is logged and left out of the
    report; the caller decides the exit status from ``report.ok``.
    """
    out = Path(out_dir) if out_dir is not None else Path(cfg.output) / run_id(cfg)
    out.mkdir(parents=True, exist_ok=True)
    report = ExperimentReport(out_dir=out)
    methods = list(cfg.methods)
    seen = set()
    for path in cfg.datasets:
        try:
            ds = load_dataset(path, label_column=cfg.label_column)
            if ds.name in seen:
                raise ValueError(f"duplicate dataset name {ds.name!r}")
            seen.add(ds.name)
            recs = evaluate_dataset(ds, methods, cfg, report)
        except Exception as exc:  # isolate the dataset, keep going
            log.error("dataset %s failed: %s", path, exc)
            report.failures[str(path)] = str(exc)
            continue
        report.records.extend(recs)
        report.datasets.append(ds.summary())
    if report.ok:
        _aggregate(report, methods)
        _write(report, methods, cfg.rounds)
    return report
