"""Flat ``key = value`` experiment files.

Blank lines and ``#`` comments are allowed; there are no sections. Unknown
keys are rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from ..errors import InvalidInput
from ..geometry import Circle, Disk, TubularChart, default_delta

_SECTION = "experiment"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "radial"
    beta: float = 1.0
    R0: float = 1.0
    R_out: float = 2.0
    delta: float | None = None
    eps_list: tuple = (0.08, 0.04, 0.02)
    T: float = 0.05
    per_eps: int = 8
    eval_per_eps: int = 16
    n_t: int = 16
    snapshots: int = 11
    profile_half_width: float = 20.0
    profile_nodes: int = 4001
    samples: int = 1000
    seed: int = 0
    out: str = field(default="out", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        self.validate()

    @property
    def chart_delta(self):
        return default_delta(self.R0, self.R_out) if self.delta is None else self.delta

    def validate(self):
        if self.scenario != "radial":
            raise InvalidInput(f"unsupported scenario {self.scenario!r}; only 'radial' is available")
        for name in ("beta", "R0", "R_out", "T", "profile_half_width"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")
        if not self.R0 < self.R_out:
            raise InvalidInput("R0 must be smaller than R_out")
        eps = self.eps_list
        if len(eps) < 3:
            raise InvalidInput("eps_list needs at least three values for order fits")
        if any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
            raise InvalidInput("eps_list must be positive and strictly decreasing")
        for name in ("per_eps", "eval_per_eps", "n_t", "snapshots", "samples"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be at least 1")
        if self.snapshots < 2:
            raise InvalidInput("snapshots must be at least 2")
        if self.profile_nodes < 5 or self.profile_nodes % 2 == 0:
            raise InvalidInput("profile_nodes must be odd and at least 5")
        # raises SeparationViolated naming the broken constraint
        TubularChart(Circle(self.R0), self.chart_delta, Disk(self.R_out))

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("out")
        d["eps_list"] = list(self.eps_list)
        return d

    def digest(self):
        """SHA-256 of the canonical JSON form (output directory excluded)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def dumps(self):
        lines = []
        for k, v in self.to_dict().items():
            if k == "eps_list":
                v = ", ".join(repr(e) for e in v)
            lines.append(f"{k} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key, raw):
    raw = raw.strip()
    if key == "scenario" or key == "out":
        return raw
    if key == "delta":
        return None if raw in ("", "auto", "none") else float(raw)
    if key == "eps_list":
        return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
    if _FIELDS[key].type in ("int", int):
        return int(raw)
    return float(raw)


def parse_config(text, **overrides):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise InvalidInput(f"malformed config: {exc}") from exc
    values = {}
    for key, raw in parser[_SECTION].items():
        if key not in _FIELDS:
            raise InvalidInput(f"unknown config key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise InvalidInput(f"bad value for {key}: {raw!r}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path=None, **overrides):
    """Read a config file (or start from defaults) and apply overrides."""
    text = ""
    if path is not None:
        with open(path) as fh:
            text = fh.read()
    return parse_config(text, **overrides)
