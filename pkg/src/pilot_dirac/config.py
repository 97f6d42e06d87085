"""Run configuration: flat ``key = value`` text with dotted sections.

Example::

    scenario = gaussian_packet
    scenario.width = 3
    grid.nx = 1024
    solver.mode = coupled
    solver.dt = 0.005
    particle.x0 = 0.5
    output.dir = out/coupled

Blank lines and ``#`` comments are ignored. Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .solver import SCENARIOS, Mode

_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _to_bool(s):
    try:
        return _BOOL[s.lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {s!r}") from None


def _to_pos_int(s):
    v = int(s)
    if v <= 0:
        raise ValueError("must be a positive integer")
    return v


def _to_nonneg_int(s):
    v = int(s)
    if v < 0:
        raise ValueError("must be a non-negative integer")
    return v


def _to_pos_float(s):
    v = float(s)
    if not v > 0 or v == float("inf"):
        raise ValueError("must be a positive finite number")
    return v


def _to_float(s):
    v = float(s)
    if v != v or abs(v) == float("inf"):
        raise ValueError("must be finite")
    return v


def _to_nonneg_float(s):
    v = _to_float(s)
    if v < 0:
        raise ValueError("must be non-negative")
    return v


def _choice(*options):
    def conv(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return conv


# key -> (converter, default)
SCHEMA = {
    "scenario": (_choice(*SCENARIOS), "gaussian_packet"),
    "scenario.x0": (_to_float, 0.0),
    "scenario.width": (_to_pos_float, 3.0),
    "scenario.p": (_to_float, 1.0),
    "scenario.p1": (_to_float, 1.0),
    "scenario.p2": (_to_float, -1.0),
    "scenario.w1": (_to_float, 1.0),
    "scenario.w2": (_to_float, 1.0),
    "grid.nx": (_to_pos_int, 1024),
    "grid.dx": (_to_pos_float, 0.1),
    "solver.mode": (_choice(*(m.value for m in Mode)), "free"),
    "solver.dt": (_to_pos_float, 0.01),
    "solver.steps": (_to_pos_int, 100),
    "solver.m": (_to_nonneg_float, 1.0),
    "solver.k": (_to_float, 1.0),
    "solver.eps": (_to_pos_float, None),
    "solver.record_every": (_to_pos_int, 1),
    "phase.kind": (_choice("zero", "rate", "oscillatory"), "oscillatory"),
    "phase.c": (_to_float, 1.0),
    "phase.a": (_to_float, 0.1),
    "phase.omega": (_to_float, 1.0),
    "potential.a0": (_to_float, 0.0),
    "potential.a1": (_to_float, 0.0),
    "particle.x0": (_to_float, 0.0),
    "ensemble.n": (_to_nonneg_int, 0),
    "ensemble.seed": (_to_nonneg_int, 0),
    "ensemble.trajectories": (_to_nonneg_int, 50),
    "output.dir": (str, "pilot_dirac_out"),
    "emit.fields": (_to_bool, True),
    "emit.trajectories": (_to_bool, True),
    "emit.energy": (_to_bool, True),
    "emit.plots": (_to_bool, False),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    source: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    @property
    def mode(self) -> Mode:
        return Mode(self.values["solver.mode"])

    @property
    def scenario_params(self) -> dict:
        return {k.split(".", 1)[1]: v for k, v in self.values.items()
                if k.startswith("scenario.")}

    def output_dir(self, base: Path | None = None) -> Path:
        out = Path(self.values["output.dir"])
        if base is not None and not out.is_absolute():
            out = base / out
        return out

    def error(self, key, message) -> ConfigError:
        return ConfigError(message, line=self.lines.get(key), key=key, source=self.source)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    values = {k: d for k, (_, d) in SCHEMA.items()}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno, source=source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", line=lineno, key=key, source=source)
        if key in lines:
            raise ConfigError(f"duplicate key (first on line {lines[key]})",
                              line=lineno, key=key, source=source)
        conv, _ = SCHEMA[key]
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", line=lineno, key=key, source=source) from None
        lines[key] = lineno
    cfg = RunConfig(values=values, lines=lines, source=source)
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def validate(cfg: RunConfig) -> None:
    """Cross-key checks mirroring the module preconditions."""
    v = cfg.values
    nx = v["grid.nx"]
    if nx < 8 or nx & (nx - 1):
        raise cfg.error("grid.nx", f"grid.nx must be a power of two >= 8, got {nx}")
    length = nx * v["grid.dx"]
    if v["scenario"] == "gaussian_packet":
        w = v["scenario.width"]
        if w < 2 * v["grid.dx"] or w > length / 8:
            raise cfg.error("scenario.width",
                            f"scenario.width {w} outside [2 dx, L/8] = [{2 * v['grid.dx']}, {length / 8}]")
    eps = v["solver.eps"]
    if eps is not None and (eps < 2 * v["grid.dx"] or eps > length / 8):
        raise cfg.error("solver.eps", f"solver.eps {eps} outside [2 dx, L/8]")
    if cfg.mode is Mode.COUPLED and v["solver.k"] == 0:
        raise cfg.error("solver.k", "coupled mode needs solver.k != 0")
    if v["ensemble.n"] and cfg.mode is Mode.COUPLED:
        raise cfg.error("ensemble.n", "ensembles are guided by linear-mode fields only")
    if v["solver.record_every"] > v["solver.steps"]:
        raise cfg.error("solver.record_every", "solver.record_every exceeds solver.steps")
