"""Run configuration: a flat TOML-style key-value file mirrored 1:1 by the
command-line flags; flags override file values."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .model import Variant


@dataclass(frozen=True)
class RunConfig:
    """Everything a fit needs; defaults are the paper-scale settings."""

    data: str = ""
    K: int = 10
    L: int = 4
    phi_b: float = 0.5
    phi_w: float = 0.1
    e0: float = 0.001
    nu: float = 10.0
    variant: str = Variant.HIERARCHICAL.value
    burnin: int = 4000
    iterations: int = 4000
    thin: int = 1
    seeds: tuple = (0,)
    out: str = "smm-out"

    def __post_init__(self):
        Variant(self.variant)  # raises on unknown value
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def variant_enum(self) -> Variant:
        return Variant(self.variant)


_INT_KEYS = {"K", "L", "burnin", "iterations", "thin"}
_FLOAT_KEYS = {"phi_b", "phi_w", "e0", "nu"}


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def serialize_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {_toml_value(getattr(cfg, f.name))}"
             for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    raw = tomllib.loads(text)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config key(s): {sorted(unknown)}")
    for k in list(raw):
        if k in _INT_KEYS:
            raw[k] = int(raw[k])
        elif k in _FLOAT_KEYS:
            raw[k] = float(raw[k])
    return RunConfig(**raw)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["seeds"] = list(d["seeds"])
    return d
