"""Run configuration: a flat ``key = value`` file plus command-line overrides.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines
are ignored; keys are case-sensitive; repeated keys are an error. Values
are parsed according to the key (see ``FIELDS``). Example::

    model = complete
    vertices = 10
    weights = uniform
    sampler = compare
    chains = 20
    steps = 50000
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError
from .samplers import KINDS

MODELS = ("matrix", "complete", "barabasi-albert", "edge-list")
SAMPLER_CHOICES = KINDS + ("compare",)
COMPARE_DEFAULT = ("basis-exchange", "vol-zonotope")


@dataclass(frozen=True)
class RunConfig:
    model: str = ""
    matrix_path: Optional[str] = None
    edge_list_path: Optional[str] = None
    vertices: Optional[int] = None
    ba_k: int = 2
    graph_seed: int = 0
    jitter: float = 0.0
    jitter_seed: int = 0
    weights: str = "none"
    weight_seed: int = 0
    base_measure: str = "q-scaled"
    sampler: str = "vol-zonotope"
    compare: tuple = COMPARE_DEFAULT
    chains: int = 1
    steps: Optional[int] = None
    seconds: Optional[float] = None
    seed: int = 0
    tiling_seed: int = 0
    laziness: float = 0.5
    burn_in: float = 0.1
    subset: str = "seeded"
    subset_size: int = 3
    subset_seed: int = 0
    reference_draws: int = 0
    checkpoints: int = 100
    out: str = "run"
    parallelism: int = 1
    record_time: Optional[bool] = None
    trace_format: str = "csv"
    debug: bool = False
    enumeration_guard: int = 10**6
    base_dir: str = "."

    @property
    def samplers(self) -> tuple[str, ...]:
        return tuple(self.compare) if self.sampler == "compare" else (self.sampler,)

    @property
    def timing(self) -> bool:
        """Record per-step timestamps (default: only under a wall-clock budget)."""
        return self.seconds is not None if self.record_time is None else self.record_time

    def resolve(self, path: Optional[str]) -> Optional[Path]:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def as_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["compare"] = list(self.compare)
        d.pop("base_dir")
        return d


def _int(v: str) -> int:
    return int(v, 0)


def _float(v: str) -> float:
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _opt_bool(v: str) -> Optional[bool]:
    return None if v.lower() == "auto" else _bool(v)


def _list(v: str) -> tuple:
    return tuple(s.strip() for s in v.split(",") if s.strip())


FIELDS = {
    "model": str, "matrix_path": str, "edge_list_path": str, "vertices": _int,
    "ba_k": _int, "graph_seed": _int, "jitter": _float, "jitter_seed": _int,
    "weights": str, "weight_seed": _int, "base_measure": str, "sampler": str,
    "compare": _list, "chains": _int, "steps": _int, "seconds": _float, "seed": _int,
    "tiling_seed": _int, "laziness": _float, "burn_in": _float, "subset": str,
    "subset_size": _int, "subset_seed": _int, "reference_draws": _int,
    "checkpoints": _int, "out": str, "parallelism": _int, "record_time": _opt_bool,
    "trace_format": str, "debug": _bool, "enumeration_guard": _int,
}


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = FIELDS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: invalid value {value!r} ({exc})") from None
    return values


def load(path: Optional[str], overrides: Mapping[str, Any] = ()) -> RunConfig:
    values: dict[str, Any] = {}
    base = "."
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values = parse_text(text, str(p))
        base = str(p.parent)
    values.update({k: v for k, v in dict(overrides).items() if v is not None})
    cfg = RunConfig(base_dir=base, **values)
    validate(cfg)
    return cfg


def _fail(field: str, msg: str):
    raise ConfigError(f"{field}: {msg}")


def validate(cfg: RunConfig) -> None:
    """Field-level checks; raises ConfigError naming the offending key."""
    if not cfg.model:
        _fail("model", f"missing feature source; set one of {', '.join(MODELS)}")
    if cfg.model not in MODELS:
        _fail("model", f"unknown model {cfg.model!r}; choose from {', '.join(MODELS)}")
    if cfg.model == "matrix" and not cfg.matrix_path:
        _fail("matrix_path", "required when model = matrix")
    if cfg.model == "edge-list" and not cfg.edge_list_path:
        _fail("edge_list_path", "required when model = edge-list")
    if cfg.model in ("complete", "barabasi-albert"):
        if cfg.vertices is None or cfg.vertices < 2:
            _fail("vertices", "needs an integer >= 2")
        if cfg.model == "barabasi-albert" and not 1 <= cfg.ba_k < cfg.vertices:
            _fail("ba_k", "needs 1 <= ba_k < vertices")
    if cfg.sampler not in SAMPLER_CHOICES:
        _fail("sampler", f"unknown sampler {cfg.sampler!r}; choose from {', '.join(SAMPLER_CHOICES)}")
    for s in cfg.compare:
        if s not in KINDS:
            _fail("compare", f"unknown sampler {s!r}")
    if cfg.steps is None and cfg.seconds is None:
        _fail("steps", "set steps or seconds (a run needs a budget)")
    if cfg.steps is not None and cfg.steps <= 0:
        _fail("steps", f"must be positive, got {cfg.steps}")
    if cfg.seconds is not None and cfg.seconds <= 0:
        _fail("seconds", f"must be positive, got {cfg.seconds}")
    if cfg.chains < 1:
        _fail("chains", f"must be at least 1, got {cfg.chains}")
    if cfg.parallelism < 1:
        _fail("parallelism", f"must be at least 1, got {cfg.parallelism}")
    if cfg.seed < 0 or cfg.tiling_seed < 0:
        _fail("seed", "seeds must be non-negative")
    if not 0.0 <= cfg.laziness < 1.0:
        _fail("laziness", "must lie in [0, 1)")
    if not 0.0 <= cfg.burn_in < 1.0:
        _fail("burn_in", "must lie in [0, 1)")
    if cfg.jitter < 0:
        _fail("jitter", "must be non-negative")
    if cfg.base_measure not in ("sqrt-q", "q-scaled"):
        _fail("base_measure", "must be sqrt-q or q-scaled")
    if cfg.weights not in ("none", "uniform", "file"):
        try:
            w = [float(v) for v in cfg.weights.split(",")]
        except ValueError:
            _fail("weights", "none, uniform, file, or a comma-separated list of positive reals")
        if any(not x > 0 for x in w):
            _fail("weights", "weights must be positive")
    if cfg.subset != "seeded":
        try:
            [int(v) for v in cfg.subset.split(",")]
        except ValueError:
            _fail("subset", "'seeded' or comma-separated column indices")
    if cfg.subset_size < 1:
        _fail("subset_size", "must be positive")
    if cfg.checkpoints < 1:
        _fail("checkpoints", "must be positive")
    if cfg.reference_draws < 0:
        _fail("reference_draws", "must be non-negative")
    if cfg.trace_format not in ("csv", "jsonl", "both"):
        _fail("trace_format", "csv, jsonl or both")
    if "aldous-broder" in cfg.samplers and cfg.model not in ("complete", "barabasi-albert",
                                                             "edge-list"):
        _fail("sampler", "aldous-broder needs a graph model")
    if "aldous-broder" in cfg.samplers and cfg.weights != "none":
        _fail("sampler", "aldous-broder samples unweighted spanning trees only")
