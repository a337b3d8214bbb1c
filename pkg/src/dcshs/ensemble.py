"""End-to-end DCSHS model plus the two reference pipelines.

Training: min-max scaling -> projective clustering -> cross-complete subsets
-> per subset: overlap search, undersampling, filtered oversampling,
condensation, transfer mapping and a linear classifier on the embedding.
Prediction: every member embeds the scaled input and scores it; scores are
fused at decision level.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import LinearSVM, train_base
from .ctm import CtmConfig, CtmModel, condense, ctm_fit, ctm_transform
from .data import MAJORITY, MINORITY, MinMaxScaler
from .pcc import build_ccs, select_clustering
from .shs import ifo, lords, smote, undersample

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
FUSION_RULES = ("mean", "vote")


@dataclass(frozen=True)
class DcshsConfig:
    R1: int = 5
    R2: int = 5
    R3: int = 5
    nc_grid_maj: tuple = (2, 3)
    nc_grid_min: tuple = (2, 3)
    pcc_restarts: int = 10
    ctm: CtmConfig = field(default_factory=CtmConfig)
    C: float = 1.0
    svm_iter: int = 600
    fusion: str = "mean"

    def __post_init__(self):
        for name in ("R1", "R2", "R3"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.fusion not in FUSION_RULES:
            raise ValueError(f"fusion must be one of {FUSION_RULES}")
        if not self.nc_grid_maj or not self.nc_grid_min:
            raise ValueError("cluster-count grids must be nonempty")
        if self.C <= 0:
            raise ValueError("C must be positive")

    def to_dict(self):
        d = asdict(self)
        d["nc_grid_maj"] = list(self.nc_grid_maj)
        d["nc_grid_min"] = list(self.nc_grid_min)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["ctm"] = CtmConfig(**d.get("ctm", {}))
        d["nc_grid_maj"] = tuple(d.get("nc_grid_maj", (2, 3)))
        d["nc_grid_min"] = tuple(d.get("nc_grid_min", (2, 3)))
        return cls(**d)


@dataclass(frozen=True)
class Member:
    ctm: CtmModel
    clf: LinearSVM
    info: dict = field(default_factory=dict)

    def decision(self, Xs):
        return self.clf.decision_function(ctm_transform(self.ctm, Xs))


def fuse(decisions, rule="mean"):
    """Combine a (members x samples) array of decision values into one score."""
    decisions = np.atleast_2d(np.asarray(decisions, dtype=float))
    if rule == "mean":
        return np.tanh(decisions).mean(axis=0)
    if rule == "vote":
        return np.sign(decisions).mean(axis=0)
    raise ValueError(f"unknown fusion rule {rule!r}")


@dataclass(frozen=True)
class TrainedEnsemble:
    scaler: MinMaxScaler
    members: tuple
    config: DcshsConfig
    d_t: int = 0
    nc_maj: int = 1
    nc_min: int = 1
    db_score: float = 0.0
    T: np.ndarray = None
    subsets: tuple = ()

    @property
    def n_features(self):
        return self.scaler.lo.shape[0]

    def decisions(self, X):
        Xs = self.scaler.transform(X)
        return np.stack([m.decision(Xs) for m in self.members])

    def predict(self, X):
        """Fused ``(labels, scores)``; a positive score predicts the minority."""
        scores = fuse(self.decisions(X), self.config.fusion)
        return (scores > 0).astype(int), scores


def _cap_rows(y, limit, rng):
    """Class-stratified random subsample of at most ``limit`` rows (sorted)."""
    n = y.shape[0]
    if n <= limit:
        return np.arange(n)
    keep = []
    for c in (MAJORITY, MINORITY):
        rows = np.flatnonzero(y == c)
        take = int(round(limit * rows.size / n))
        take = min(rows.size, max(1, take)) if rows.size else 0
        keep.append(rng.choice(rows, size=take, replace=False))
    return np.sort(np.concatenate(keep))


def fit_member(X, y, cfg, seed):
    """Sampling, transfer mapping and classifier for one subset."""
    labeling = lords(X, y, cfg.R1, cfg.R2)
    keep = undersample(y, labeling)
    bal = ifo(X[keep], y[keep], cfg.R3, seed=[*seed, 1])
    rows = _cap_rows(bal.y, cfg.ctm.max_target, np.random.default_rng([*seed, 2]))
    X_t, y_t = bal.X[rows], bal.y[rows]
    X_s, y_s = condense(X_t, y_t, cfg.ctm.cluster_ratio, seed=[*seed, 3])
    ctm = ctm_fit(X_s, X_t, cfg.ctm)
    Z = ctm_transform(ctm, ctm.anchors)
    clf = train_base(Z, np.concatenate([y_s, y_t]), C=cfg.C, n_iter=cfg.svm_iter)
    info = {
        "n_input": int(y.shape[0]),
        "n_overlap": labeling.n_overlap,
        "n_removed": int((~keep).sum()),
        "all_majority_overlap": labeling.all_majority_overlap,
        "n_synthetic": bal.n_synthetic,
        "stalled": bal.stalled,
        "n_target": int(rows.size),
        "n_source": int(y_s.shape[0]),
        "ctm_flags": list(ctm.flags),
    }
    return Member(ctm=ctm, clf=clf, info=info)


def fit_dcshs(X, y, cfg=DcshsConfig(), seed=0):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    for c in (MAJORITY, MINORITY):
        if (y == c).sum() < 2:
            raise ValueError("each class needs at least 2 training samples")
    scaler = MinMaxScaler().fit(X)
    Xs = scaler.transform(X)
    pc = select_clustering(Xs, y, cfg.nc_grid_maj, cfg.nc_grid_min,
                           seed=[seed, 0], n_init=cfg.pcc_restarts)
    subsets = build_ccs(pc)
    members = []
    for i, sub in enumerate(subsets):
        Xsub, ysub = sub.take(Xs, y)
        try:
            members.append(fit_member(Xsub, ysub, cfg, seed=[seed, 10 + i]))
        except Exception as exc:
            raise RuntimeError(f"subset {i} (majority cluster {sub.maj_cluster}, "
                               f"minority cluster {sub.min_cluster}): {exc}") from exc
    return TrainedEnsemble(scaler=scaler, members=tuple(members), config=cfg, d_t=pc.d_t,
                           nc_maj=pc.nc_maj, nc_min=pc.nc_min, db_score=pc.db_score,
                           T=pc.T, subsets=tuple(subsets))


def predict(model, X):
    return model.predict(X)


@dataclass(frozen=True)
class LinearPipeline:
    """Scaled features, optional SMOTE, then the linear classifier."""

    scaler: MinMaxScaler
    clf: LinearSVM

    def predict(self, X):
        scores = np.tanh(self.clf.decision_function(self.scaler.transform(X)))
        return (scores > 0).astype(int), scores


def fit_raw(X, y, cfg=DcshsConfig(), seed=0):
    scaler = MinMaxScaler().fit(X)
    clf = train_base(scaler.transform(X), y, C=cfg.C, n_iter=cfg.svm_iter)
    return LinearPipeline(scaler, clf)


def fit_smote_baseline(X, y, cfg=DcshsConfig(), seed=0):
    scaler = MinMaxScaler().fit(X)
    bal = smote(scaler.transform(X), y, k=cfg.R3, seed=[seed, 1])
    clf = train_base(bal.X, bal.y, C=cfg.C, n_iter=cfg.svm_iter)
    return LinearPipeline(scaler, clf)


METHODS = {"dcshs": fit_dcshs, "smote_baseline": fit_smote_baseline, "raw": fit_raw}


def fit_method(name, X, y, cfg=DcshsConfig(), seed=0):
    try:
        fit = METHODS[name]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {sorted(METHODS)}") from None
    return fit(X, y, cfg, seed)


# --- serialization -------------------------------------------------------
#
# A model file is an uncompressed ``.npz`` archive. The entry ``meta`` holds
# a UTF-8 JSON document (format version, package version, config, summary
# fields, per-member info); every other entry is a float64/int64 array:
#   scaler_lo, scaler_span, T
#   m{i}_anchors, m{i}_W, m{i}_eig, m{i}_w, m{i}_b, m{i}_mean, m{i}_scale

def save_model(model, path):
    arrays = {"scaler_lo": model.scaler.lo, "scaler_span": model.scaler.span,
              "T": model.T if model.T is not None else np.zeros((0, 0))}
    members = []
    for i, m in enumerate(model.members):
        arrays[f"m{i}_anchors"] = m.ctm.anchors
        arrays[f"m{i}_W"] = m.ctm.W
        arrays[f"m{i}_eig"] = m.ctm.eigenvalues
        arrays[f"m{i}_w"] = m.clf.weights
        arrays[f"m{i}_b"] = np.array([m.clf.bias])
        arrays[f"m{i}_mean"] = m.clf.mean
        arrays[f"m{i}_scale"] = m.clf.scale
        members.append({"n_source": m.ctm.n_source, "flags": list(m.ctm.flags),
                        "C": m.clf.C, "n_iter": m.clf.n_iter,
                        "constant": m.clf.constant, "info": m.info})
    meta = {"format": "dcshs-model", "format_version": FORMAT_VERSION,
            "package_version": __version__, "config": model.config.to_dict(),
            "d_t": model.d_t, "nc_maj": model.nc_maj, "nc_min": model.nc_min,
            "db_score": model.db_score, "members": members}
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(bytes(z["meta"]).decode("utf-8"))
        if meta.get("format") != "dcshs-model":
            raise ValueError(f"{path}: not a DCSHS model file")
        if meta["format_version"] > FORMAT_VERSION:
            raise ValueError(f"{path}: format version {meta['format_version']} is newer "
                             f"than supported ({FORMAT_VERSION})")
        cfg = DcshsConfig.from_dict(meta["config"])
        scaler = MinMaxScaler(lo=z["scaler_lo"], span=z["scaler_span"])
        members = []
        for i, mm in enumerate(meta["members"]):
            ctm = CtmModel(anchors=z[f"m{i}_anchors"], W=z[f"m{i}_W"], config=cfg.ctm,
                           n_source=mm["n_source"], eigenvalues=z[f"m{i}_eig"],
                           flags=tuple(mm["flags"]))
            clf = LinearSVM(weights=z[f"m{i}_w"], bias=float(z[f"m{i}_b"][0]),
                            mean=z[f"m{i}_mean"], scale=z[f"m{i}_scale"], C=mm["C"],
                            n_iter=mm["n_iter"], constant=mm["constant"])
            members.append(Member(ctm=ctm, clf=clf, info=mm["info"]))
        T = z["T"]
    return TrainedEnsemble(scaler=scaler, members=tuple(members), config=cfg,
                           d_t=meta["d_t"], nc_maj=meta["nc_maj"], nc_min=meta["nc_min"],
                           db_score=meta["db_score"], T=T if T.size else None)
