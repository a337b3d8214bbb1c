"""Metrics, repeated stratified cross-validation and rank-based comparison.

The minority class (label 1) is the positive class for every metric.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

log = logging.getLogger(__name__)

METRICS = ("rec", "f1", "gmean", "auc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    tn: int
    fp: int

    @classmethod
    def from_labels(cls, truth, pred):
        truth = np.asarray(truth, dtype=int)
        pred = np.asarray(pred, dtype=int)
        return cls(tp=int(((truth == 1) & (pred == 1)).sum()),
                   fn=int(((truth == 1) & (pred == 0)).sum()),
                   tn=int(((truth == 0) & (pred == 0)).sum()),
                   fp=int(((truth == 0) & (pred == 1)).sum()))


def _ratio(a, b):
    return a / b if b else 0.0


def auc_score(truth, scores):
    """Mann-Whitney AUC with ties counted one half; None if a class is absent."""
    truth = np.asarray(truth, dtype=int)
    scores = np.asarray(scores, dtype=float)
    n_pos = int((truth == 1).sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    u = ranks[truth == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def metrics(counts, scores=None, truth=None):
    """Recall, F1, G-mean and (when scores are given) AUC."""
    c = counts
    recall = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    f1 = _ratio(2 * precision * recall, precision + recall)
    specificity = _ratio(c.tn, c.tn + c.fp)
    out = {"rec": recall, "f1": f1, "gmean": math.sqrt(recall * specificity),
           "auc": None}
    if scores is not None:
        out["auc"] = auc_score(truth, scores)
    return out


def evaluate_predictions(truth, labels, scores):
    return metrics(ConfusionCounts.from_labels(truth, labels), scores, truth)


@dataclass(frozen=True)
class Fold:
    round: int
    fold: int
    train: np.ndarray
    test: np.ndarray


def stratified_cv(y, folds=5, rounds=10, seed=0):
    """Repeated stratified k-fold plan.

    Each round shuffles every class independently and deals its rows to the
    folds in turn, so each fold's class counts are within one of the global
    proportion. ``folds`` is clamped (with a warning) to the smallest class.
    """
    y = np.asarray(y, dtype=int)
    sizes = [int((y == c).sum()) for c in np.unique(y)]
    if min(sizes) < 2:
        raise ValueError("every class needs at least 2 samples")
    if folds > min(sizes):
        log.warning("folds reduced from %d to %d (smallest class)", folds, min(sizes))
        folds = min(sizes)
    plan = []
    for r in range(rounds):
        rng = np.random.default_rng([seed, r])
        assign = np.empty(y.size, dtype=int)
        offset = 0
        for c in np.unique(y):
            rows = rng.permutation(np.flatnonzero(y == c))
            assign[rows] = (np.arange(rows.size) + offset) % folds
            offset += rows.size
        for f in range(folds):
            test = np.flatnonzero(assign == f)
            train = np.flatnonzero(assign != f)
            plan.append(Fold(r, f, train, test))
    return plan


def rank_methods(table):
    """Per-row ranks (1 = best, higher metric is better, ties averaged).

    ``table`` is datasets x methods.
    """
    table = np.asarray(table, dtype=float)
    return np.vstack([rankdata(-row) for row in table])


def holm_adjust(pvalues):
    """Holm step-down adjusted p-values, returned in input order."""
    p = np.asarray(pvalues, dtype=float)
    k = p.size
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(k)
    running = 0.0
    for i, idx in enumerate(order):
        running = max(running, (k - i) * p[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted


def holm_reject(pvalues, alpha=0.05):
    """Which hypotheses the Holm procedure rejects at level ``alpha``."""
    p = np.asarray(pvalues, dtype=float)
    k = p.size
    reject = np.zeros(k, dtype=bool)
    for i, idx in enumerate(np.argsort(p, kind="stable")):
        if p[idx] < alpha / (k - i):
            reject[idx] = True
        else:
            break
    return reject


@dataclass(frozen=True)
class HolmResult:
    methods: tuple
    mean_ranks: np.ndarray
    z: np.ndarray
    p_raw: np.ndarray
    p_holm: np.ndarray
    degenerate: bool


def holm_test(table, methods, control):
    """Friedman mean-rank post-hoc comparison of ``control`` against the rest.

    ``table`` is datasets x methods (higher is better). Returns raw two-sided
    p-values of the rank z-statistics and their Holm adjustment, for every
    non-control method in column order.
    """
    table = np.asarray(table, dtype=float)
    n, k = table.shape
    if k < 2:
        raise ValueError("need at least 2 methods")
    if n < 5:
        raise ValueError("need at least 5 datasets")
    methods = list(methods)
    ci = methods.index(control)
    degenerate = bool(np.all(table == table[:, :1]))
    if degenerate:
        log.warning("metric is constant across methods on every dataset")
    ranks = rank_methods(table).mean(axis=0)
    se = math.sqrt(k * (k + 1) / (6.0 * n))
    others = [j for j in range(k) if j != ci]
    z = np.array([(ranks[j] - ranks[ci]) / se for j in others])
    p_raw = 2.0 * norm.sf(np.abs(z))
    return HolmResult(methods=tuple(methods[j] for j in others), mean_ranks=ranks,
                      z=z, p_raw=p_raw, p_holm=holm_adjust(p_raw), degenerate=degenerate)
