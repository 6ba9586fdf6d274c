"""Line-oriented ``section.key = value`` experiment configuration."""
import hashlib
import json
import math
import re
from dataclasses import dataclass, field

from .evolution import MODELS, TIME_SCHEMES, EvolutionConfig, InitialData
from .grid import SCHEMES, Grid
from .potentials import Potential

EXPERIMENTS = ("simulate", "converge", "hbar_sweep", "periodicity")


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.key = key


def _float(text):
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"(?:([-+]?[0-9.eE+-]+)\*?)?pi(?:/([0-9.eE+-]+))?", t)
    if m:
        scale = float(m.group(1)) if m.group(1) else 1.0
        div = float(m.group(2)) if m.group(2) else 1.0
        return scale * math.pi / div
    return float(t)


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _bool(text):
    t = text.strip().lower()
    if t not in ("true", "false"):
        raise ValueError(f"{text!r} is not true/false")
    return t == "true"


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"{t!r} is not one of {', '.join(options)}")
        return t

    return parse


def _list(item):
    def parse(text):
        return tuple(item(p) for p in text.split(",") if p.strip())

    return parse


def _str(text):
    return text.strip()


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key -> (parser, default, check, description); default None + required handled below
SCHEMA = {
    "potential.kind": (_choice("harmonic", "quartic"), None, None, "harmonic | quartic"),
    "potential.chi": (_float, 0.5, _nonneg, "quartic coupling chi >= 0"),
    "grid.x_min": (_float, -4.0, None, "left end of the periodic domain"),
    "grid.x_max": (_float, 4.0, None, "right end of the periodic domain"),
    "grid.nx": (_int, 512, lambda v: v >= 8, "number of grid points (>= 8)"),
    "grid.scheme": (_choice(*SCHEMES), "central4", None, "x-derivative scheme"),
    "basis.n_modes": (_int, 40, _nonneg, "highest Hermite mode N"),
    "evolution.model": (_choice(*MODELS), "von_neumann", None, "von_neumann | semiclassical"),
    "evolution.scheme": (_choice(*TIME_SCHEMES), "rk4", None, "rk4 | implicit_midpoint"),
    "evolution.dt": (_float, 5e-4, _positive, "time step"),
    "evolution.t_final": (_float, 2 * math.pi, _nonneg, "final time (accepts e.g. 2pi)"),
    "evolution.hbar": (_float, 0.1, lambda v: 0 < v <= 2, "semiclassical parameter in (0, 2]"),
    "evolution.snapshot_every": (_int, 100, _positive, "steps between snapshots"),
    "evolution.safety_factor": (_float, 0.5, lambda v: 0 < v <= 1, "RK4 step safety factor"),
    "evolution.check_stability": (_bool, True, None, "reject rk4 steps above the estimate"),
    "evolution.solver_tol": (_float, 1e-12, _positive, "implicit midpoint relative residual"),
    "initial.kind": (_choice("coherent_state"), "coherent_state", None, "initial datum"),
    "initial.sigma_x": (_float, 0.6, _positive, "coherent state width"),
    "diagnostics.nm_max": (_int, 0, lambda v: 0 <= v <= 3, "emit n1..n<nm_max> columns (0-3)"),
    "output.directory": (_str, "weylherm_out", None, "output directory"),
    "output.formats": (_list(_choice("csv", "dat", "snapshot")), ("csv", "dat"), None, "csv, dat, snapshot"),
    "converge.mode_list": (_list(_int), (8, 16, 24, 32, 40), None, "test mode counts"),
    "converge.reference_modes": (_int, 100, _positive, "reference mode count"),
    "converge.cache": (_bool, True, None, "reuse a cached reference run"),
    "sweep.hbar_list": (_list(_float), (0.4, 0.2, 0.1), None, "hbar values (>= 3)"),
    "sweep.t_final": (_float, 1.0, _positive, "comparison time"),
    "periodicity.periods": (_int, 1, _positive, "number of 2pi periods"),
}

REQUIRED = {
    "simulate": ("potential.kind",),
    "converge": ("potential.kind",),
    "hbar_sweep": ("potential.kind",),
    "periodicity": (),
}

FULL_SCALE = {
    "evolution.dt": 1e-4,
    "evolution.t_final": 2 * math.pi,
    "converge.reference_modes": 500,
    "converge.mode_list": (20, 30, 40, 50, 60, 70),
}


@dataclass
class ExperimentConfig:
    experiment: str
    values: dict
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def potential(self):
        if self["potential.kind"] == "harmonic":
            return Potential.harmonic()
        return Potential.quartic(self["potential.chi"])

    def grid(self):
        return Grid(self["grid.x_min"], self["grid.x_max"], self["grid.nx"], self["grid.scheme"])

    def evolution(self, **overrides):
        kw = dict(
            model=self["evolution.model"],
            scheme=self["evolution.scheme"],
            dt=self["evolution.dt"],
            t_final=self["evolution.t_final"],
            hbar=self["evolution.hbar"],
            safety_factor=self["evolution.safety_factor"],
            snapshot_every=self["evolution.snapshot_every"],
            check_stability=self["evolution.check_stability"],
            solver_tol=self["evolution.solver_tol"],
        )
        kw.update(overrides)
        return EvolutionConfig(**kw)

    def initial(self):
        return InitialData("coherent_state", sigma_x=self["initial.sigma_x"])

    def checksum(self, keys=None):
        """SHA-256 over the canonical JSON of the selected (default: all) values."""
        keys = sorted(keys if keys is not None else self.values)
        payload = json.dumps({k: self.values[k] for k in keys}, sort_keys=True, default=list)
        return hashlib.sha256(payload.encode()).hexdigest()


def _validate(values, lines, experiment):
    for key in REQUIRED.get(experiment, ()):
        if values.get(key) is None:
            raise ConfigError(f"missing required key {key}", key=key)
    if not values["grid.x_max"] > values["grid.x_min"]:
        raise ConfigError("grid.x_max must exceed grid.x_min", lines.get("grid.x_max"), "grid.x_max")
    if values["grid.scheme"] == "spectral_fourier" and values["grid.nx"] % 2:
        raise ConfigError("grid.nx must be even for spectral_fourier", lines.get("grid.nx"), "grid.nx")
    modes = values["converge.mode_list"]
    if experiment == "converge":
        if not modes or any(b <= a for a, b in zip(modes, modes[1:])) or modes[0] < 0:
            raise ConfigError("converge.mode_list must be strictly increasing", lines.get("converge.mode_list"))
        if values["converge.reference_modes"] <= max(modes):
            raise ConfigError(
                "converge.reference_modes must exceed every entry of converge.mode_list",
                lines.get("converge.reference_modes") or lines.get("converge.mode_list"),
                "converge.reference_modes",
            )
    if experiment == "hbar_sweep":
        hl = values["sweep.hbar_list"]
        if len(hl) < 3 or any(not 0 < h <= 2 for h in hl):
            raise ConfigError("sweep.hbar_list needs >= 3 values in (0, 2]", lines.get("sweep.hbar_list"))
    if experiment == "periodicity" and values.get("potential.kind") not in (None, "harmonic"):
        raise ConfigError("periodicity requires potential.kind = harmonic", lines.get("potential.kind"))


def parse_text(text, experiment="simulate", full_scale=False):
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key}", lineno, key)
        if key in lines:
            raise ConfigError(f"duplicate key {key} (first on line {lines[key]})", lineno, key)
        parser, _, check, desc = SCHEMA[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key} ({desc}): {exc}", lineno, key) from None
        if check is not None and not check(parsed):
            raise ConfigError(f"{key} = {value} violates: {desc}", lineno, key)
        values[key] = parsed
        lines[key] = lineno
    if full_scale:
        for key, value in FULL_SCALE.items():
            values[key] = value
        values["grid.nx"] = int(round((values["grid.x_max"] - values["grid.x_min"]) / 1e-3))
    if experiment == "periodicity" and values["potential.kind"] is None:
        values["potential.kind"] = "harmonic"
    _validate(values, lines, experiment)
    return ExperimentConfig(experiment, values, lines)


def parse_config(path, experiment="simulate", full_scale=False):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), experiment, full_scale)


def describe_keys():
    """Help text listing every key, its default and the required keys per experiment."""
    out = []
    for key, (_, default, _, desc) in SCHEMA.items():
        shown = "(required)" if default is None else default
        if isinstance(shown, tuple):
            shown = ", ".join(map(str, shown))
        out.append(f"  {key:28s} {desc} [default: {shown}]")
    out.append("required keys: " + "; ".join(f"{e}: {', '.join(r) or 'none'}" for e, r in REQUIRED.items()))
    return "\n".join(out)
