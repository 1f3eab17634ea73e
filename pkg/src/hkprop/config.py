"""Declarative experiment configuration: flat INI files with typed sections.

A config file looks like::

    [experiment]
    name = harmonic_longtime
    output_dir = runs/harmonic
    sampler = qmc
    samples = 8192
    seed = 7

    [model]
    potential = harmonic
    dimension = 1
    epsilon = 0.1, 0.01, 0.001
    q0 = 1.0
    p0 = 0.0

    [integrator]
    order = 4
    tau = 0.05

    [time]
    t_final = 20.0
    snapshot_stride = 5

    [grid]
    lower = -3.141592653589793
    upper = 3.141592653589793
    points = 512

Comma-separated values express parameter sweeps where an experiment
supports them (epsilon, samples, order, tau).  ``validate`` returns
field-level messages; the resolved configuration round-trips through
``to_text``/``from_text`` unchanged and is echoed into ``run.json``.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from typing import Optional

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "from_text",
    "from_file",
    "load_preset",
    "preset_names",
    "PRESETS",
]

EXPERIMENTS = (
    "initial_sampling",
    "harmonic_longtime",
    "torsional_wavefunction",
    "timestep_study",
    "torsional_expectation",
    "henon_heiles_expectation",
)

_ORDERS = (2, 4, 6, 8)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists field messages."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output_dir: str = "runs/out"
    seed: int = 0
    sampler: str = "qmc"
    samples: tuple = (1024,)
    n_seeds: int = 10
    potential: str = "harmonic"
    dimension: int = 1
    sigma: Optional[float] = None
    epsilon: tuple = (0.1,)
    q0: tuple = (1.0,)
    p0: tuple = (0.0,)
    orders: tuple = (4,)
    taus: tuple = (0.05,)
    t_final: float = 1.0
    snapshot_stride: int = 1
    grid_lower: Optional[tuple] = None
    grid_upper: Optional[tuple] = None
    grid_points: Optional[tuple] = None
    fields: str = "none"
    ensembles: bool = False
    plots: bool = True
    cutoff: float = 0.0
    workers: int = 0
    ref_tau: float = 1e-3
    lsc_samples: int = 65536

    def validate(self) -> None:
        errors = _validate(self)
        if errors:
            raise ConfigError(errors)

    def to_text(self) -> str:
        return _to_text(self)

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


# ----------------------------------------------------------------- parsing

_SCHEMA = {
    # section -> key -> (attribute, parser)
    "experiment": {
        "name": ("experiment", "str"),
        "output_dir": ("output_dir", "str"),
        "seed": ("seed", "int"),
        "sampler": ("sampler", "str"),
        "samples": ("samples", "int_list"),
        "n_seeds": ("n_seeds", "int"),
    },
    "model": {
        "potential": ("potential", "str"),
        "dimension": ("dimension", "int"),
        "sigma": ("sigma", "float"),
        "epsilon": ("epsilon", "float_list"),
        "q0": ("q0", "float_list"),
        "p0": ("p0", "float_list"),
    },
    "integrator": {
        "order": ("orders", "int_list"),
        "tau": ("taus", "float_list"),
    },
    "time": {
        "t_final": ("t_final", "float"),
        "snapshot_stride": ("snapshot_stride", "int"),
    },
    "grid": {
        "lower": ("grid_lower", "float_list"),
        "upper": ("grid_upper", "float_list"),
        "points": ("grid_points", "int_list"),
    },
    "output": {
        "fields": ("fields", "str"),
        "ensembles": ("ensembles", "bool"),
        "plots": ("plots", "bool"),
        "cutoff": ("cutoff", "float"),
        "workers": ("workers", "int"),
    },
    "reference": {
        "tau": ("ref_tau", "float"),
        "lsc_samples": ("lsc_samples", "int"),
    },
}

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_value(kind: str, raw: str, where: str, errors: list):
    raw = raw.strip()
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _BOOL[raw.lower()]
        if kind == "int_list":
            return tuple(int(tok) for tok in raw.replace(",", " ").split())
        if kind == "float_list":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except (ValueError, KeyError):
        errors.append(f"{where}: cannot parse {raw!r} as {kind}")
        return None
    raise AssertionError(f"unknown kind {kind}")


def from_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errors: list[str] = []
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            errors.append(f"{section}: unknown section")
            continue
        for key, raw in parser[section].items():
            if key not in _SCHEMA[section]:
                errors.append(f"{section}.{key}: unknown key")
                continue
            attr, kind = _SCHEMA[section][key]
            parsed = _parse_value(kind, raw, f"{section}.{key}", errors)
            if parsed is not None:
                values[attr] = parsed
    if "experiment" not in values:
        errors.append("experiment.name: required")
    if errors:
        raise ConfigError(errors)
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def from_file(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config file: {exc}"]) from None
    return from_text(text)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _to_text(cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        lines = []
        for key, (attr, _) in keys.items():
            v = getattr(cfg, attr)
            if v is None:
                continue
            lines.append(f"{key} = {_fmt(v)}")
        if lines:
            out.write(f"[{section}]\n")
            out.write("\n".join(lines) + "\n\n")
    return out.getvalue()


# -------------------------------------------------------------- validation

def _validate(cfg: ExperimentConfig) -> list[str]:
    e: list[str] = []
    if cfg.experiment not in EXPERIMENTS:
        e.append(f"experiment.name: unknown experiment {cfg.experiment!r}; "
                 f"known: {', '.join(EXPERIMENTS)}")
        return e
    if cfg.sampler not in ("mc", "qmc"):
        e.append(f"experiment.sampler: must be 'mc' or 'qmc', got {cfg.sampler!r}")
    if cfg.seed < 0:
        e.append(f"experiment.seed: must be non-negative, got {cfg.seed}")
    if not cfg.samples or any(m < 1 for m in cfg.samples):
        e.append(f"experiment.samples: every entry must be at least 1, got {cfg.samples}")
    if cfg.n_seeds < 1:
        e.append(f"experiment.n_seeds: must be at least 1, got {cfg.n_seeds}")
    if cfg.potential not in ("harmonic", "torsional", "henon_heiles"):
        e.append(f"model.potential: unknown potential {cfg.potential!r}")
    if cfg.dimension < 1:
        e.append(f"model.dimension: must be at least 1, got {cfg.dimension}")
    if not cfg.epsilon or any(x <= 0 for x in cfg.epsilon):
        e.append(f"model.epsilon: every entry must be positive, got {cfg.epsilon}")
    if len(cfg.q0) not in (1, cfg.dimension) or len(cfg.p0) not in (1, cfg.dimension):
        e.append("model.q0/p0: must have one entry or one per dimension")
    if cfg.potential == "henon_heiles":
        if cfg.sigma is None:
            e.append("model.sigma: required for the henon_heiles potential")
        if cfg.dimension < 2:
            e.append("model.dimension: henon_heiles requires dimension >= 2")
    if not cfg.orders or any(o not in _ORDERS for o in cfg.orders):
        e.append(f"integrator.order: entries must be in {_ORDERS}, got {cfg.orders}")
    if not cfg.taus or any(t <= 0 for t in cfg.taus):
        e.append(f"integrator.tau: every entry must be positive, got {cfg.taus}")
    if cfg.t_final < 0:
        e.append(f"time.t_final: must be non-negative, got {cfg.t_final}")
    if cfg.snapshot_stride < 1:
        e.append(f"time.snapshot_stride: must be at least 1, got {cfg.snapshot_stride}")
    if cfg.fields not in ("none", "final", "snapshots"):
        e.append(f"output.fields: must be none|final|snapshots, got {cfg.fields!r}")
    if cfg.cutoff < 0:
        e.append(f"output.cutoff: must be non-negative, got {cfg.cutoff}")
    if cfg.workers < 0:
        e.append(f"output.workers: must be non-negative, got {cfg.workers}")
    if cfg.ref_tau <= 0:
        e.append(f"reference.tau: must be positive, got {cfg.ref_tau}")
    if cfg.lsc_samples < 1:
        e.append(f"reference.lsc_samples: must be at least 1, got {cfg.lsc_samples}")

    grid_given = [cfg.grid_lower, cfg.grid_upper, cfg.grid_points]
    if any(g is not None for g in grid_given) and any(g is None for g in grid_given):
        e.append("grid: lower, upper and points must be given together")
    elif cfg.grid_lower is not None:
        nl = {len(cfg.grid_lower), len(cfg.grid_upper), len(cfg.grid_points)}
        if not nl <= {1, cfg.dimension}:
            e.append("grid: entries must have one value or one per dimension")
        else:
            lo = _broadcast(cfg.grid_lower, cfg.dimension)
            hi = _broadcast(cfg.grid_upper, cfg.dimension)
            np_ = _broadcast(cfg.grid_points, cfg.dimension)
            if any(h <= l for l, h in zip(lo, hi)):
                e.append("grid: upper must exceed lower componentwise")
            if any(n < 2 for n in np_):
                e.append("grid: need at least 2 points per axis")

    name = cfg.experiment
    needs_grid = name in (
        "initial_sampling", "harmonic_longtime", "torsional_wavefunction",
        "timestep_study", "torsional_expectation",
    )
    if needs_grid and name != "initial_sampling" and cfg.grid_lower is None:
        e.append(f"grid: required for experiment {name}")

    def single(attr, label):
        if len(getattr(cfg, attr)) != 1:
            e.append(f"{label}: experiment {name} takes a single value, got {getattr(cfg, attr)}")

    if name == "initial_sampling":
        if cfg.sampler != "mc":
            e.append("experiment.sampler: initial_sampling is a seeded mc study")
    elif name == "harmonic_longtime":
        if cfg.potential != "harmonic" or cfg.dimension != 1:
            e.append("model: harmonic_longtime requires the 1-d harmonic potential")
        single("samples", "experiment.samples")
        single("orders", "integrator.order")
        single("taus", "integrator.tau")
    elif name in ("torsional_wavefunction", "timestep_study", "torsional_expectation"):
        if cfg.potential != "torsional" or cfg.dimension != 2:
            e.append(f"model: {name} requires the 2-d torsional potential")
        single("epsilon", "model.epsilon")
        if name == "timestep_study":
            if len(cfg.taus) < 2:
                e.append("integrator.tau: timestep_study needs at least two step sizes")
        else:
            single("orders", "integrator.order")
            single("taus", "integrator.tau")
        if name == "torsional_expectation":
            single("samples", "experiment.samples")
    elif name == "henon_heiles_expectation":
        if cfg.potential != "henon_heiles":
            e.append("model: henon_heiles_expectation requires the henon_heiles potential")
        single("samples", "experiment.samples")
        single("epsilon", "model.epsilon")
        single("orders", "integrator.order")
        single("taus", "integrator.tau")

    # time-stepped experiments need t_final commensurate with every tau
    if name != "initial_sampling" and cfg.t_final > 0:
        for tau in cfg.taus:
            n = round(cfg.t_final / tau)
            if abs(n * tau - cfg.t_final) > 1e-9 * max(1.0, cfg.t_final):
                e.append(f"time.t_final: {cfg.t_final} is not an integer multiple of tau={tau}")
    return e


def _broadcast(values: tuple, d: int) -> tuple:
    return values * d if len(values) == 1 else values


def broadcast_vector(values: tuple, d: int) -> tuple:
    """Expand a single-entry tuple to length d (config convenience)."""
    if len(values) == 1:
        return values * d
    if len(values) != d:
        raise ValueError(f"expected 1 or {d} entries, got {len(values)}")
    return values


# ----------------------------------------------------------------- presets

_PI = "3.141592653589793"

PRESETS: dict[str, str] = {
    "initial_sampling_1d-ci": f"""
[experiment]
name = initial_sampling
output_dir = runs/initial_sampling_1d
seed = 1
sampler = mc
samples = 2048, 8192, 32768
n_seeds = 4
[model]
potential = harmonic
dimension = 1
epsilon = 0.1, 0.01, 0.001
q0 = 1.0
p0 = 0.0
""",
    "initial_sampling_1d-paper": f"""
[experiment]
name = initial_sampling
output_dir = runs/initial_sampling_1d
seed = 1
sampler = mc
samples = 2048, 4096, 8192, 16384, 32768, 65536, 131072
n_seeds = 10
[model]
potential = harmonic
dimension = 1
epsilon = 0.1, 0.01, 0.001
q0 = 1.0
p0 = 0.0
""",
    "initial_sampling_2d-ci": f"""
[experiment]
name = initial_sampling
output_dir = runs/initial_sampling_2d
seed = 1
sampler = mc
samples = 2048, 8192, 32768
n_seeds = 4
[model]
potential = harmonic
dimension = 2
epsilon = 0.1, 0.01, 0.001
q0 = 1.0, 0.0
p0 = 0.0
""",
    "initial_sampling_2d-paper": f"""
[experiment]
name = initial_sampling
output_dir = runs/initial_sampling_2d
seed = 1
sampler = mc
samples = 2048, 4096, 8192, 16384, 32768, 65536, 131072
n_seeds = 10
[model]
potential = harmonic
dimension = 2
epsilon = 0.1, 0.01, 0.001
q0 = 1.0, 0.0
p0 = 0.0
""",
    "harmonic_longtime-ci": f"""
[experiment]
name = harmonic_longtime
output_dir = runs/harmonic_longtime
seed = 0
sampler = qmc
samples = 8192
[model]
potential = harmonic
dimension = 1
epsilon = 0.1, 0.01, 0.001
q0 = 1.0
p0 = 0.0
[integrator]
order = 4
tau = 0.05
[time]
t_final = 20.0
snapshot_stride = 5
[grid]
lower = -{_PI}
upper = {_PI}
points = 512
""",
    "harmonic_longtime-paper": f"""
[experiment]
name = harmonic_longtime
output_dir = runs/harmonic_longtime
seed = 0
sampler = qmc
samples = 8192
[model]
potential = harmonic
dimension = 1
epsilon = 0.1, 0.01, 0.001
q0 = 1.0
p0 = 0.0
[integrator]
order = 4
tau = 0.05
[time]
t_final = 100.0
snapshot_stride = 10
[grid]
lower = -{_PI}
upper = {_PI}
points = 512
""",
    "torsional_wavefunction-ci": f"""
[experiment]
name = torsional_wavefunction
output_dir = runs/torsional_wavefunction
seed = 0
sampler = qmc
samples = 2048, 8192
[model]
potential = torsional
dimension = 2
epsilon = 0.1
q0 = 1.0, 0.0
p0 = 0.0
[integrator]
order = 8
tau = 0.05
[time]
t_final = 5.0
snapshot_stride = 5
[grid]
lower = -{_PI}
upper = {_PI}
points = 256
[reference]
tau = 0.001
""",
    "torsional_wavefunction-paper": f"""
[experiment]
name = torsional_wavefunction
output_dir = runs/torsional_wavefunction
seed = 0
sampler = qmc
samples = 2048, 8192, 32768
[model]
potential = torsional
dimension = 2
epsilon = 0.1
q0 = 1.0, 0.0
p0 = 0.0
[integrator]
order = 8
tau = 0.05
[time]
t_final = 20.0
snapshot_stride = 5
[grid]
lower = -{_PI}
upper = {_PI}
points = 256
[reference]
tau = 0.001
""",
    "timestep_study-ci": f"""
[experiment]
name = timestep_study
output_dir = runs/timestep_study
seed = 0
sampler = qmc
samples = 8192
[model]
potential = torsional
dimension = 2
epsilon = 0.1
q0 = 1.0, 0.0
p0 = 0.0
[integrator]
order = 2, 4
tau = 0.4, 0.2, 0.1, 0.05, 0.025
[time]
t_final = 20.0
[grid]
lower = -{_PI}
upper = {_PI}
points = 256
[reference]
tau = 0.001
""",
    "timestep_study-paper": f"""
[experiment]
name = timestep_study
output_dir = runs/timestep_study
seed = 0
sampler = qmc
samples = 8192, 32768
[model]
potential = torsional
dimension = 2
epsilon = 0.1
q0 = 1.0, 0.0
p0 = 0.0
[integrator]
order = 2, 4
tau = 0.4, 0.2, 0.1, 0.05, 0.025
[time]
t_final = 20.0
[grid]
lower = -{_PI}
upper = {_PI}
points = 256
[reference]
tau = 0.001
""",
    "torsional_expectation-ci": f"""
[experiment]
name = torsional_expectation
output_dir = runs/torsional_expectation
seed = 0
sampler = qmc
samples = 4096
[model]
potential = torsional
dimension = 2
epsilon = 0.1
q0 = 1.0, 0.0
p0 = 0.0
[integrator]
order = 4
tau = 0.25
[time]
t_final = 5.0
snapshot_stride = 1
[grid]
lower = -{_PI}
upper = {_PI}
points = 256
[reference]
tau = 0.001
""",
    "torsional_expectation-paper": f"""
[experiment]
name = torsional_expectation
output_dir = runs/torsional_expectation
seed = 0
sampler = qmc
samples = 8192
[model]
potential = torsional
dimension = 2
epsilon = 0.01
q0 = 1.0, 0.0
p0 = 0.0
[integrator]
order = 4
tau = 0.25
[time]
t_final = 20.0
snapshot_stride = 1
[grid]
lower = -{_PI}
upper = {_PI}
points = 512
[reference]
tau = 0.0005
""",
    "henon_heiles-ci": """
[experiment]
name = henon_heiles_expectation
output_dir = runs/henon_heiles
seed = 0
sampler = qmc
samples = 65536
[model]
potential = henon_heiles
dimension = 6
sigma = 0.11180339887498948
epsilon = 0.01
q0 = 2.0
p0 = 0.0
[integrator]
order = 4
tau = 0.01
[time]
t_final = 5.0
snapshot_stride = 20
[reference]
lsc_samples = 65536
""",
    "henon_heiles-paper": """
[experiment]
name = henon_heiles_expectation
output_dir = runs/henon_heiles
seed = 0
sampler = qmc
samples = 4194304
[model]
potential = henon_heiles
dimension = 6
sigma = 0.11180339887498948
epsilon = 0.01
q0 = 2.0
p0 = 0.0
[integrator]
order = 4
tau = 0.01
[time]
t_final = 20.0
snapshot_stride = 20
[reference]
lsc_samples = 1048576
""",
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def load_preset(name: str) -> ExperimentConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(
            [f"preset: unknown preset {name!r}; available: {', '.join(preset_names())}"]
        ) from None
    return from_text(text)
