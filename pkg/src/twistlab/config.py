"""Scenario configuration: a dataclass plus a small versioned TOML dialect.

Example file::

    version = 1

    [scenario]
    kind = "circle_crossed"
    N = 128
    K = 1024
    beta = 0.3
    seed = 0

    [params]
    sweep_N = [64, 128, 256, 512, 1024]

    [tolerances]
    numeric = 1e-8
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigInvalid

CONFIG_VERSION = 1
KINDS = ("circle", "circle_crossed", "q_laurent", "finite_random", "geometric_scaling")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "finite_random"
    N: int = 128
    K: int = 1024
    beta: float = 0.3
    q: str = "3/2"
    s: float = 1.0
    dim: int = 4
    seed: int = 0
    backends: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        validate(self)

    @property
    def q_value(self) -> Fraction:
        return Fraction(self.q)

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def param(self, key: str, default=None):
        return self.params.get(key, default)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = CONFIG_VERSION
        return d

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def validate(cfg: ScenarioConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigInvalid(f"unknown scenario kind {cfg.kind!r}; expected one of {KINDS}")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigInvalid("seed must be a nonnegative integer")
    if cfg.N < 4:
        raise ConfigInvalid("N must be >= 4")
    if cfg.kind == "circle_crossed" and cfg.K < 2 * cfg.N + 1:
        raise ConfigInvalid("K must exceed 2N for the crossed circle quadrature")
    if not abs(cfg.beta) < 1:
        raise ConfigInvalid("|beta| < 1 is needed for a diffeomorphism")
    try:
        q = Fraction(cfg.q)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigInvalid(f"q must be a rational like '3/2': {e}") from None
    if q <= 0 or q == 1:
        raise ConfigInvalid("q must be positive and different from 1")
    if not 1 <= cfg.dim <= 64:
        raise ConfigInvalid("dim (half dimension) must lie in 1..64")
    for k, v in cfg.tolerances.items():
        if not isinstance(v, (int, float)) or v < 0:
            raise ConfigInvalid(f"tolerance {k!r} must be a nonnegative number")


def from_mapping(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    data = dict(data)
    version = data.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigInvalid(f"config version {version} is not supported (expected {CONFIG_VERSION})")
    scen = dict(data.pop("scenario", {}))
    extra = set(data) - {"backends", "tolerances", "params"}
    if extra:
        raise ConfigInvalid(f"unknown config sections {sorted(extra)}")
    fields = {"kind", "N", "K", "beta", "q", "s", "dim", "seed"}
    bad = set(scen) - fields
    if bad:
        raise ConfigInvalid(f"unknown scenario keys {sorted(bad)}")
    if "q" in scen:
        scen["q"] = str(scen["q"])
    base = base or ScenarioConfig()
    kw = {**{k: getattr(base, k) for k in fields}, **scen}
    return ScenarioConfig(
        **kw,
        backends={**base.backends, **data.get("backends", {})},
        tolerances={**base.tolerances, **data.get("tolerances", {})},
        params={**base.params, **data.get("params", {})},
    )


def load_config(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigInvalid(f"config file {path}: {e}") from None
    return from_mapping(data, base)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def dump_config(cfg: ScenarioConfig) -> str:
    lines = [f"version = {CONFIG_VERSION}", "", "[scenario]"]
    for k in ("kind", "N", "K", "beta", "q", "s", "dim", "seed"):
        lines.append(f"{k} = {_toml_value(getattr(cfg, k))}")
    for sect in ("backends", "tolerances", "params"):
        d = getattr(cfg, sect)
        if d:
            lines += ["", f"[{sect}]"] + [f"{k} = {_toml_value(d[k])}" for k in sorted(d)]
    return "\n".join(lines) + "\n"
