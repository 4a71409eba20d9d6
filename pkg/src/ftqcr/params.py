"""Hardware parameter model for silicon spin-qubit processors.

All values are stored in SI units (seconds, meters, meters/second, and
probabilities as fractions). Config files may use unit-suffixed strings such
as ``"225 ns"`` or ``"0.1 %"``; they are normalized on load.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

ENV_PREFIX = "FTQCR_"

# SI value = number / divisor. Dividing by an exact power of ten rounds
# correctly ("100 ns" -> 1e-07), multiplying by 1e-9 does not.
_UNIT_DIVISOR = {
    "s": 1.0,
    "ms": 1e3,
    "us": 1e6,
    "µs": 1e6,
    "μs": 1e6,
    "ns": 1e9,
    "m": 1.0,
    "mm": 1e3,
    "um": 1e6,
    "µm": 1e6,
    "μm": 1e6,
    "nm": 1e9,
    "m/s": 1.0,
    "%": 1e2,
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\d\s].*)?\s*$")


class ConfigError(ValueError):
    """Raised for unparsable or physically invalid parameter sets."""


def parse_quantity(value: Any) -> float:
    """Convert ``1.5``, ``"1.5"``, ``"225 ns"`` or ``"0.1 %"`` to an SI float."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"expected a number or quantity string, got {value!r}")
    match = _QUANTITY.match(value)
    if match is None:
        raise ConfigError(f"cannot parse quantity {value!r}")
    number, unit = match.groups()
    unit = (unit or "").strip()
    if not unit:
        return float(number)
    if unit not in _UNIT_DIVISOR:
        raise ConfigError(f"unknown unit {unit!r} in {value!r}")
    return float(number) / _UNIT_DIVISOR[unit]


@dataclass(frozen=True)
class HardwareParams:
    t1: float = 0.1
    t2_star: float = 100e-6
    t_gate1: float = 50e-9
    t_gate2: float = 225e-9
    t_readout: float = 1e-6
    t_init: float = 0.1e-6
    eps_defect: float = 1e-3
    v_shuttle: float = 8.0
    n_hops: int = 10
    d_dot: float = 100e-9
    eps_readout: float = 1e-4
    eps_shuttle_per_dot: float = 1e-5
    corner_factor: float = 4.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ConfigError(f"{f.name} must be strictly positive, got {value!r}")
        for name in ("eps_defect", "eps_readout", "eps_shuttle_per_dot"):
            if getattr(self, name) > 1:
                raise ConfigError(f"{name} is a probability and must be <= 1")
        if self.t2_star > 2 * self.t1:
            raise ConfigError(
                f"t2_star={self.t2_star:g} s exceeds 2*t1={2 * self.t1:g} s"
            )
        if int(self.n_hops) != self.n_hops:
            raise ConfigError("n_hops must be an integer")

    @property
    def t_step(self) -> float:
        """Shuttle time across one dot."""
        return self.d_dot / self.v_shuttle

    @property
    def t_lane(self) -> float:
        """Shuttle time across one lane of ``n_hops`` dots."""
        return self.n_hops * self.t_step

    def replace(self, **changes) -> "HardwareParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], base: "HardwareParams | None" = None):
        base = base or cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        values = base.to_dict()
        for key, raw in data.items():
            values[key] = parse_quantity(raw)
        values["n_hops"] = _as_int(values["n_hops"])
        return cls(**values)


def _as_int(x: float) -> int:
    if int(x) != x:
        raise ConfigError(f"n_hops must be an integer, got {x!r}")
    return int(x)


@dataclass(frozen=True)
class Scenario:
    name: str
    params: HardwareParams

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "params": self.params.to_dict()}


# Endpoints of the published parameter ranges. Presets take the favourable end of every range
# for "optimistic" and the unfavourable end for "pessimistic"; parameters
# without a published range stay at their defaults.
_OPTIMISTIC = dict(
    t1=1.0, t2_star=1000e-6, t_gate1=1e-9, t_gate2=10e-9,
    t_readout=0.1e-6, t_init=0.01e-6, eps_defect=1e-4, n_hops=10,
)
_PESSIMISTIC = dict(
    t1=0.01, t2_star=10e-6, t_gate1=100e-9, t_gate2=1000e-9,
    t_readout=10e-6, t_init=1e-6, eps_defect=1e-2, n_hops=100,
)

PRESETS = ("optimistic", "default", "pessimistic")


def preset(name: str) -> Scenario:
    if name == "default":
        return Scenario("default", HardwareParams())
    if name == "optimistic":
        return Scenario("optimistic", HardwareParams(**_OPTIMISTIC))
    if name == "pessimistic":
        return Scenario("pessimistic", HardwareParams(**_PESSIMISTIC))
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    """Collect ``FTQCR_<FIELD>`` variables, e.g. ``FTQCR_T2_STAR="50 us"``."""
    environ = os.environ if environ is None else environ
    known = {f.name for f in fields(HardwareParams)}
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in known:
                out[name] = value
    return out


def load_config(path: str | Path, environ: Mapping[str, str] | None = None) -> Scenario:
    """Load a JSON scenario file.

    The file holds either a flat mapping of parameter overrides or
    ``{"name": ..., "base": <preset>, "params": {...}}``. Missing keys fall back
    to the base preset (the reference defaults unless ``base`` says otherwise).
    Environment overrides apply last. Pass ``environ={}`` to ignore them.
    """
    path = Path(path)
    try:
        text = path.read_text()
        data = json.loads(text) if text.strip() else {}
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    if "params" in data:
        extra = set(data) - {"name", "base", "params"}
        if extra:
            raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(extra))}")
        name = data.get("name", path.stem)
        base = preset(data.get("base", "default")).params
        overrides = dict(data["params"])
    else:
        name, base, overrides = path.stem, HardwareParams(), dict(data)
    overrides.update(env_overrides(environ))
    return Scenario(str(name), HardwareParams.from_mapping(overrides, base))


def resolve_scenario(spec: str | None, environ: Mapping[str, str] | None = None) -> Scenario:
    """Accept a preset name or a path to a JSON config."""
    if spec is None:
        spec = "default"
    if spec in PRESETS:
        scenario = preset(spec)
        env = env_overrides(environ)
        if env:
            scenario = Scenario(scenario.name, HardwareParams.from_mapping(env, scenario.params))
        return scenario
    return load_config(spec, environ)


def dump_config(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True))
