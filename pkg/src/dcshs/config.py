"""Run configuration read from an INI file.

Grammar (every key optional; unknown sections or keys are errors)::

    [run]
    datasets = data/glass1.dat, data/ionosphere.dat   ; comma or newline separated
    methods = dcshs, smote_baseline, raw
    folds = 5
    rounds = 10
    seed = 0
    label_column =                                     ; CSV only, default last column
    output = runs

    [dcshs]
    R1 = 5
    R2 = 5
    R3 = 5
    nc_grid_maj = 2, 3
    nc_grid_min = 2, 3
    pcc_restarts = 10
    C = 1.0
    svm_iter = 600
    fusion = mean                                      ; mean | vote

    [ctm]
    cluster_ratio = 0.5
    embed_dim = 8
    lambda = 0.01
    kernel_gamma = 100
    affinity_mode = simple                             ; simple | heat
    heat_f = 1.0
    knn_k = 5
    max_target = 1000

Relative dataset paths resolve against the config file's directory.
"""
import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .ctm import CtmConfig
from .ensemble import METHODS, DcshsConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple = ()
    methods: tuple = ("dcshs", "smote_baseline", "raw")
    folds: int = 5
    rounds: int = 10
    seed: int = 0
    label_column: str = None
    output: str = "runs"
    model: DcshsConfig = field(default_factory=DcshsConfig)

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {sorted(METHODS)}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.rounds < 1:
            raise ConfigError("rounds must be at least 1")


def _list(text):
    return tuple(p.strip() for p in text.replace("\n", ",").split(",") if p.strip())


def _int_list(text, key):
    try:
        vals = tuple(int(v) for v in _list(text))
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise ConfigError(f"{key}: cluster counts must be positive integers")
    return vals


_RUN_KEYS = {"datasets", "methods", "folds", "rounds", "seed", "label_column", "output"}
_DCSHS_TYPES = {"R1": int, "R2": int, "R3": int, "pcc_restarts": int, "C": float,
                "svm_iter": int, "fusion": str}
_CTM_TYPES = {"cluster_ratio": float, "embed_dim": int, "lambda": float,
              "kernel_gamma": float, "affinity_mode": str, "heat_f": float,
              "knn_k": int, "max_target": int}


def _convert(section, key, raw, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {kind.__name__}") from None


def _section(parser, name, allowed):
    if not parser.has_section(name):
        return {}
    items = dict(parser.items(name))
    unknown = set(items) - set(allowed)
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(unknown))}")
    return items


def parse_config(text, base_dir="."):
    """Build a RunConfig from INI text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keys are case-sensitive (R1, C)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(parser.sections()) - {"run", "dcshs", "ctm"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    run = _section(parser, "run", _RUN_KEYS)
    kw = {}
    if "datasets" in run:
        base = Path(base_dir)
        kw["datasets"] = tuple(str(p if Path(p).is_absolute() else base / p)
                               for p in _list(run["datasets"]))
    if "methods" in run:
        kw["methods"] = _list(run["methods"])
    for key in ("folds", "rounds", "seed"):
        if key in run:
            kw[key] = _convert("run", key, run[key], int)
    if run.get("label_column"):
        kw["label_column"] = run["label_column"]
    if run.get("output"):
        kw["output"] = run["output"]

    dc = _section(parser, "dcshs", set(_DCSHS_TYPES) | {"nc_grid_maj", "nc_grid_min"})
    model_kw = {k: _convert("dcshs", k, v, _DCSHS_TYPES[k])
                for k, v in dc.items() if k in _DCSHS_TYPES}
    for key in ("nc_grid_maj", "nc_grid_min"):
        if key in dc:
            model_kw[key] = _int_list(dc[key], key)

    ct = _section(parser, "ctm", _CTM_TYPES)
    ctm_kw = {("lam" if k == "lambda" else k): _convert("ctm", k, v, _CTM_TYPES[k])
              for k, v in ct.items()}
    try:
        model = DcshsConfig(ctm=CtmConfig(**ctm_kw), **model_kw)
        return RunConfig(model=model, **kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


def with_overrides(cfg, **kw):
    """Copy of ``cfg`` with the non-None keyword values replaced."""
    known = {f.name for f in fields(RunConfig)}
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None and k in known})
