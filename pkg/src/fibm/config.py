"""Run configuration: flat ``key = value`` files overridden by command-line flags."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``A:B:STEP`` (inclusive) or a comma list into a sorted beta grid."""
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad beta grid {text!r}, expected A:B:STEP") from None
        if step <= 0:
            raise ConfigError("beta grid step must be > 0")
        if stop < start:
            raise ConfigError("beta grid stop is below start")
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 10) for i in range(count)]
        values = [v for v in values if v <= stop + 1e-9]
    else:
        try:
            values = [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"bad beta grid {text!r}") from None
    if not values:
        raise ConfigError("empty beta grid")
    if min(values) < 0 or max(values) > 1:
        raise ConfigError("beta grid values must lie in [0, 1]")
    return sorted(set(values))


@dataclass(frozen=True)
class RunConfig:
    graph: str | None = None
    communities: str | None = None
    out: str = "runs"
    directed: bool = False
    weight_mode: str = "uniform-in-degree"
    negative_seeds: str = "top-degree:50"
    k: int = 100
    mu: float = 1.0
    alpha: float = 0.5
    beta: float = 0.0
    beta_grid: str = "0:1:0.01"
    samples_per_root: int = 1000
    mc_runs: int = 10000
    rng_seed: int = 0
    selector: str = "celf-r"
    objective: str = "fibm"
    repetitions: int = 5
    index: str | None = None

    # config-file spelling of dotted keys
    ALIASES = {"vrr.samples_per_root": "samples_per_root", "mc.runs": "mc_runs", "seed": "rng_seed"}

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie strictly inside (0, 1)")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigError("mu must lie in [0, 1]")
        if self.samples_per_root < 1 or self.mc_runs < 1 or self.repetitions < 1:
            raise ConfigError("sample counts and repetitions must be >= 1")
        if self.selector not in ("celf-r", "celf", "fc"):
            raise ConfigError(f"unknown selector {self.selector!r}")
        if self.objective not in ("fibm", "maxmin", "wf", "cff"):
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.weight_mode not in ("uniform-in-degree", "explicit"):
            raise ConfigError(f"unknown weight mode {self.weight_mode!r}")
        parse_grid(self.beta_grid)
        self.seed_spec()

    def seed_spec(self) -> tuple[str, object]:
        spec = self.negative_seeds.strip()
        kind, _, value = spec.partition(":")
        if kind == "top-degree":
            try:
                size = int(value)
            except ValueError:
                raise ConfigError(f"bad negative seed spec {spec!r}") from None
            if size < 1:
                raise ConfigError("negative seed set must be nonempty")
            return "top-degree", size
        if kind == "ids":
            ids = [x for x in value.replace(",", " ").split() if x]
            if not ids:
                raise ConfigError("negative seed set must be nonempty")
            return "ids", ids
        raise ConfigError(f"negative seeds must be 'top-degree:N' or 'ids:a,b,...', got {spec!r}")

    def grid(self) -> list[float]:
        return parse_grid(self.beta_grid)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls(**read_config_file(path))


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    t = str(types[name])
    if "bool" in t:
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return low in ("true", "1", "yes")
    try:
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def read_config_file(path: str | Path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = RunConfig.ALIASES.get(key, key.replace("-", "_"))
        values[key] = _coerce(key, raw)
    return values


def thread_cap() -> int:
    raw = os.environ.get("FIBM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
