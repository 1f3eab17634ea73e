"""Experiment drivers: sample -> propagate -> synthesise/measure -> artifacts.

Each experiment has a pure computational core returning in-memory curves
(reused directly by the test suite) and a driver that writes the
delimited outputs, ``run.json`` metadata, figure-ready plot data and
(optionally) rendered figures into the output directory.
"""

from __future__ import annotations

import json
import platform
import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, broadcast_vector
from .model import GaussianPacket, PhasePoint, make_potential
from .observables import Observable, expectation, potential_observable
from .propagation import IntegratorSpec, propagate_plan
from .reference import (
    SplitStepConfig,
    analytic_harmonic,
    field_energies,
    lsc_ivr_energies,
    split_step_snapshots,
)
from .sampling import decompose_gaussian_initial, sample_mc, sample_pairs, sample_qmc
from .synthesis import GridSpec, WaveField, l2_error, packet_field, synthesize
from .synthesis import _accumulate, _axis_factors
from .wfio import EnsembleWriter, write_csv, write_wavefield

__all__ = [
    "RunResult",
    "MissingArtifactsError",
    "run_experiment",
    "emit_plotdata",
    "initial_sampling_grid",
    "initial_sampling_errors",
    "harmonic_error_curve",
    "torsional_reference_fields",
    "torsional_error_curve",
    "timestep_final_errors",
    "expectation_curves",
]


class MissingArtifactsError(RuntimeError):
    """The run directory lacks the artifacts needed for plot data."""


@dataclass(frozen=True)
class RunResult:
    output_dir: Path
    artifacts: tuple
    wall_time: float


def _sample(dec, sampler: str, m: int, seed: int):
    return sample_qmc(dec, m) if sampler == "qmc" else sample_mc(dec, m, seed)


def _eps_label(eps: float) -> str:
    return f"{eps:g}"


# ------------------------------------------------------- initial sampling

def initial_sampling_grid(dimension: int, eps: float, q0) -> GridSpec:
    """Evaluation box adapted to the sampling spread (4 sigma) plus packet tails."""
    q0 = np.asarray(q0, dtype=float)
    half = 4.0 * np.sqrt(2.0 * eps) + 6.0 * np.sqrt(eps)
    n = 512 if dimension == 1 else 128
    return GridSpec(q0 - half, q0 + half, np.full(dimension, n))


def initial_sampling_errors(
    dimension: int,
    epsilons,
    m_values,
    n_seeds: int,
    q0,
    p0,
    base_seed: int = 1,
    grid: GridSpec = None,
):
    """Mean-over-seeds L2 error of the t=0 estimator versus the initial packet.

    Sample streams are prefix-nested: one maximal draw per seed is consumed
    incrementally, accumulating partial sums at each requested M, so the
    sweep costs as much as its largest member.

    Returns
    -------
    dict mapping eps -> array of mean errors aligned with ``m_values``.
    """
    m_values = sorted(int(m) for m in m_values)
    q0 = np.asarray(broadcast_vector(tuple(np.atleast_1d(q0)), dimension), dtype=float)
    p0 = np.asarray(broadcast_vector(tuple(np.atleast_1d(p0)), dimension), dtype=float)
    z0 = PhasePoint(q0, p0)
    out = {}
    for eps in epsilons:
        g = grid if grid is not None else initial_sampling_grid(dimension, eps, q0)
        vol = g.volume_element
        psi0 = packet_field(GaussianPacket(z0, eps), g).values
        dec = decompose_gaussian_initial(z0, eps)
        pref = (np.pi * eps) ** (-dimension / 4.0)
        errs = np.zeros(len(m_values))
        for s in range(n_seeds):
            plan = sample_mc(dec, m_values[-1], base_seed + s)
            coeffs = plan.r0_values * pref
            qs = plan.points[:, :dimension]
            ps = plan.points[:, dimension:]
            factors = _axis_factors(qs, ps, eps, g.axes(), None)
            acc = np.zeros(g.shape, dtype=complex)
            prev = 0
            for j, m in enumerate(m_values):
                blk = slice(prev, m)
                acc += _accumulate(coeffs[blk], [f[blk] for f in factors], g.shape)
                prev = m
                diff = acc / m - psi0
                errs[j] += np.sqrt(np.sum(diff.real**2 + diff.imag**2) * vol)
        out[eps] = errs / n_seeds
    return out


def _run_initial_sampling(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    grid = _config_grid(cfg)
    errors = initial_sampling_errors(
        cfg.dimension, cfg.epsilon, cfg.samples, cfg.n_seeds,
        cfg.q0, cfg.p0, base_seed=max(1, cfg.seed), grid=grid,
    )
    ms = np.asarray(sorted(cfg.samples), dtype=float)
    clt = np.sqrt((1.0 - 4.0 ** (-cfg.dimension)) / ms)
    header = ["M"] + [f"err_eps{_eps_label(e)}" for e in cfg.epsilon] + ["clt_line"]
    rows = np.column_stack([ms] + [errors[e] for e in cfg.epsilon] + [clt])
    write_csv(outdir / "initial_sampling.csv", header, rows)
    return ["initial_sampling.csv"]


# ----------------------------------------------------- harmonic long time

def harmonic_error_curve(
    eps: float, m: int, sampler: str, seed: int,
    order: int, tau: float, t_final: float, stride: int,
    grid: GridSpec, x0: float = 1.0, xi0: float = 0.0,
    workers: int = 1,
):
    """L2 error of the synthesised wave function against the analytic solution."""
    z0 = PhasePoint([x0], [xi0])
    dec = decompose_gaussian_initial(z0, eps)
    plan = _sample(dec, sampler, m, seed)
    spec = IntegratorSpec(order, tau)
    ham = make_potential("harmonic", 1)
    times, errors = [], []
    for ens in propagate_plan(plan, spec, ham, t_final, stride, workers=workers):
        psi = synthesize(ens, grid)
        ref = analytic_harmonic(x0, xi0, eps, ens.time, grid)
        times.append(ens.time)
        errors.append(l2_error(psi, ref))
    return np.asarray(times), np.asarray(errors)


def _run_harmonic_longtime(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    grid = _config_grid(cfg)
    curves = []
    times = None
    for eps in cfg.epsilon:
        t, e = harmonic_error_curve(
            eps, cfg.samples[0], cfg.sampler, cfg.seed,
            cfg.orders[0], cfg.taus[0], cfg.t_final, cfg.snapshot_stride,
            grid, cfg.q0[0], cfg.p0[0], workers=_workers(cfg),
        )
        times = t
        curves.append(e)
    header = ["t"] + [f"err_eps{_eps_label(e)}" for e in cfg.epsilon]
    write_csv(outdir / "errors.csv", header, np.column_stack([times] + curves))
    artifacts = ["errors.csv"]
    if cfg.fields != "none":
        for eps in cfg.epsilon:
            z0 = PhasePoint([cfg.q0[0]], [cfg.p0[0]])
            dec = decompose_gaussian_initial(z0, eps)
            plan = _sample(dec, cfg.sampler, cfg.samples[0], cfg.seed)
            spec = IntegratorSpec(cfg.orders[0], cfg.taus[0])
            ham = make_potential("harmonic", 1)
            last = None
            for ens in propagate_plan(plan, spec, ham, cfg.t_final,
                                      max(1, round(cfg.t_final / cfg.taus[0]))):
                last = ens
            name = f"field_eps{_eps_label(eps)}.hkwf"
            write_wavefield(outdir / name, synthesize(last, grid))
            artifacts.append(name)
    return artifacts


# -------------------------------------------------- torsional wave function

def torsional_reference_fields(
    eps: float, grid: GridSpec, ref_tau: float, t_final: float, dt_snapshot: float,
    q0, p0,
) -> dict:
    """Split-step reference fields keyed by rounded snapshot time."""
    z0 = PhasePoint(q0, p0)
    ham = make_potential("torsional", grid.dimension)
    pgrid = GridSpec(grid.lower, grid.upper, grid.n, np.ones(grid.dimension, dtype=bool))
    cfg = SplitStepConfig(pgrid, ref_tau, ham, eps)
    stride = int(round(dt_snapshot / ref_tau))
    if abs(stride * ref_tau - dt_snapshot) > 1e-9:
        raise ValueError(
            f"snapshot interval {dt_snapshot} is not a multiple of the reference step {ref_tau}"
        )
    psi0 = packet_field(GaussianPacket(z0, eps), pgrid)
    return {
        round(f.time, 9): f
        for f in split_step_snapshots(psi0, cfg, t_final, stride)
    }


def torsional_error_curve(
    eps: float, m: int, sampler: str, seed: int,
    order: int, tau: float, t_final: float, stride: int,
    grid: GridSpec, reference: dict,
    q0, p0, cutoff: float = 0.0, workers: int = 1,
):
    """Error of the synthesised torsional wave function against the grid reference."""
    z0 = PhasePoint(q0, p0)
    dec = decompose_gaussian_initial(z0, eps)
    plan = _sample(dec, sampler, m, seed)
    spec = IntegratorSpec(order, tau)
    ham = make_potential("torsional", grid.dimension)
    cut = cutoff * np.sqrt(eps) if cutoff > 0 else None
    times, errors = [], []
    for ens in propagate_plan(plan, spec, ham, t_final, stride, workers=workers):
        key = round(ens.time, 9)
        if key not in reference:
            raise KeyError(f"no reference field at t={ens.time}")
        psi = synthesize(ens, grid, cutoff=cut)
        times.append(ens.time)
        errors.append(l2_error(psi, reference[key]))
    return np.asarray(times), np.asarray(errors)


def _reference_grid(cfg: ExperimentConfig) -> GridSpec:
    grid = _config_grid(cfg)
    return GridSpec(grid.lower, grid.upper, grid.n, np.ones(grid.dimension, dtype=bool))


def _run_torsional_wavefunction(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    eps = cfg.epsilon[0]
    grid = _reference_grid(cfg)
    q0 = broadcast_vector(cfg.q0, cfg.dimension)
    p0 = broadcast_vector(cfg.p0, cfg.dimension)
    dt_snap = cfg.snapshot_stride * cfg.taus[0]
    reference = torsional_reference_fields(eps, grid, cfg.ref_tau, cfg.t_final, dt_snap, q0, p0)
    curves, times = [], None
    for m in cfg.samples:
        t, e = torsional_error_curve(
            eps, m, cfg.sampler, cfg.seed, cfg.orders[0], cfg.taus[0],
            cfg.t_final, cfg.snapshot_stride, grid, reference, q0, p0,
            cutoff=cfg.cutoff, workers=_workers(cfg),
        )
        times = t
        curves.append(e)
    header = ["t"] + [f"err_M{m}" for m in cfg.samples]
    write_csv(outdir / "errors.csv", header, np.column_stack([times] + curves))
    return ["errors.csv"]


# ------------------------------------------------------- time step study

def timestep_final_errors(
    eps: float, m: int, sampler: str, seed: int,
    orders, taus, t_final: float,
    grid: GridSpec, ref_tau: float, q0, p0, workers: int = 1,
):
    """Final-time wave-function error per (order, tau), plus the t=0 sampling error.

    Returns
    -------
    (errors, sampling_error) with ``errors[order]`` an array aligned with ``taus``.
    """
    reference = torsional_reference_fields(eps, grid, ref_tau, t_final, t_final, q0, p0)
    ref_final = reference[round(t_final, 9)]
    ref_initial = reference[0.0]
    z0 = PhasePoint(q0, p0)
    dec = decompose_gaussian_initial(z0, eps)
    plan = _sample(dec, sampler, m, seed)
    ham = make_potential("torsional", grid.dimension)
    ens0 = next(propagate_plan(plan, IntegratorSpec(2, taus[0]), ham, 0.0))
    sampling_error = l2_error(synthesize(ens0, grid), ref_initial)
    errors = {}
    for order in orders:
        errs = []
        for tau in taus:
            spec = IntegratorSpec(order, tau)
            n_steps = max(1, round(t_final / tau))
            last = None
            for ens in propagate_plan(plan, spec, ham, t_final, n_steps, workers=workers):
                last = ens
            errs.append(l2_error(synthesize(last, grid), ref_final))
        errors[order] = np.asarray(errs)
    return errors, sampling_error


def _run_timestep_study(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    eps = cfg.epsilon[0]
    grid = _reference_grid(cfg)
    q0 = broadcast_vector(cfg.q0, cfg.dimension)
    p0 = broadcast_vector(cfg.p0, cfg.dimension)
    header = ["tau"]
    columns = [np.asarray(cfg.taus, dtype=float)]
    for m in cfg.samples:
        errors, sampling = timestep_final_errors(
            eps, m, cfg.sampler, cfg.seed, cfg.orders, cfg.taus,
            cfg.t_final, grid, cfg.ref_tau, q0, p0, workers=_workers(cfg),
        )
        for order in cfg.orders:
            header.append(f"err_M{m}_order{order}")
            columns.append(errors[order])
        header.append(f"sampling_M{m}")
        columns.append(np.full(len(cfg.taus), sampling))
    write_csv(outdir / "plateau.csv", header, np.column_stack(columns))
    return ["plateau.csv"]


# ------------------------------------------------------ expectation values

def expectation_curves(
    ham, eps: float, m: int, sampler: str, seed: int,
    order: int, tau: float, t_final: float, stride: int,
    q0, p0, workers: int = 1, ensemble_sink=None,
):
    """Kinetic/potential/norm curves of the pair estimator along the propagation.

    Returns
    -------
    dict with arrays: t, kinetic, potential, total, norm, imag_residue.
    """
    z0 = PhasePoint(q0, p0)
    dec = decompose_gaussian_initial(z0, eps)
    plan = sample_pairs(dec, m, sampler, seed if sampler == "mc" else seed or 0)
    spec = IntegratorSpec(order, tau)
    kin = Observable.kinetic()
    pot = potential_observable(ham)
    ident = Observable.identity()
    rows = {k: [] for k in ("t", "kinetic", "potential", "total", "norm", "imag_residue")}
    for pair in propagate_plan(plan, spec, ham, t_final, stride, workers=workers):
        ek = expectation(pair, kin)
        ev = expectation(pair, pot)
        nn = expectation(pair, ident)
        rows["t"].append(pair.time)
        rows["kinetic"].append(ek.value)
        rows["potential"].append(ev.value)
        rows["total"].append(ek.value + ev.value)
        rows["norm"].append(nn.value)
        rows["imag_residue"].append(ek.imag_residue + ev.imag_residue)
        if ensemble_sink is not None:
            ensemble_sink(pair)
    return {k: np.asarray(v) for k, v in rows.items()}


def _run_torsional_expectation(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    eps = cfg.epsilon[0]
    grid = _reference_grid(cfg)
    q0 = broadcast_vector(cfg.q0, cfg.dimension)
    p0 = broadcast_vector(cfg.p0, cfg.dimension)
    ham = make_potential("torsional", cfg.dimension)
    curves = expectation_curves(
        ham, eps, cfg.samples[0], cfg.sampler, cfg.seed,
        cfg.orders[0], cfg.taus[0], cfg.t_final, cfg.snapshot_stride,
        q0, p0, workers=_workers(cfg),
    )
    dt_snap = cfg.snapshot_stride * cfg.taus[0]
    reference = torsional_reference_fields(eps, grid, cfg.ref_tau, cfg.t_final, dt_snap, q0, p0)
    ref_kin, ref_pot = [], []
    for t in curves["t"]:
        f = reference[round(float(t), 9)]
        ek, ev = field_energies(f, ham)
        ref_kin.append(ek)
        ref_pot.append(ev)
    ref_kin = np.asarray(ref_kin)
    ref_pot = np.asarray(ref_pot)
    header = ["t", "E_kin", "E_pot", "E_tot", "norm", "imag_residue",
              "ref_kin", "ref_pot", "ref_tot"]
    rows = np.column_stack([
        curves["t"], curves["kinetic"], curves["potential"], curves["total"],
        curves["norm"], curves["imag_residue"], ref_kin, ref_pot, ref_kin + ref_pot,
    ])
    write_csv(outdir / "energies.csv", header, rows)
    return ["energies.csv"]


def _run_henon_heiles(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    eps = cfg.epsilon[0]
    q0 = broadcast_vector(cfg.q0, cfg.dimension)
    p0 = broadcast_vector(cfg.p0, cfg.dimension)
    ham = make_potential("henon_heiles", cfg.dimension, sigma=cfg.sigma)
    sink = None
    writer = None
    if cfg.ensembles:
        writer = EnsembleWriter(outdir / "ensembles.hkes", cfg.dimension,
                                cfg.samples[0], eps)
        sink = lambda pair: writer.append(pair.z)
    try:
        curves = expectation_curves(
            ham, eps, cfg.samples[0], cfg.sampler, cfg.seed,
            cfg.orders[0], cfg.taus[0], cfg.t_final, cfg.snapshot_stride,
            q0, p0, workers=_workers(cfg), ensemble_sink=sink,
        )
    finally:
        if writer is not None:
            writer.close()
    spec = IntegratorSpec(cfg.orders[0], cfg.taus[0])
    _, lsc_kin, lsc_pot = lsc_ivr_energies(
        PhasePoint(q0, p0), eps, ham, spec, cfg.lsc_samples,
        cfg.t_final, cfg.snapshot_stride, seed=cfg.seed + 1,
    )
    header = ["t", "E_kin", "E_pot", "E_tot", "norm", "imag_residue",
              "ref_kin", "ref_pot", "ref_tot"]
    rows = np.column_stack([
        curves["t"], curves["kinetic"], curves["potential"], curves["total"],
        curves["norm"], curves["imag_residue"], lsc_kin, lsc_pot, lsc_kin + lsc_pot,
    ])
    write_csv(outdir / "energies.csv", header, rows)
    artifacts = ["energies.csv"]
    if cfg.ensembles:
        artifacts.append("ensembles.hkes")
    return artifacts


# ------------------------------------------------------------- dispatcher

_RUNNERS = {
    "initial_sampling": _run_initial_sampling,
    "harmonic_longtime": _run_harmonic_longtime,
    "torsional_wavefunction": _run_torsional_wavefunction,
    "timestep_study": _run_timestep_study,
    "torsional_expectation": _run_torsional_expectation,
    "henon_heiles_expectation": _run_henon_heiles,
}


def _workers(cfg: ExperimentConfig) -> int:
    import os

    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def _config_grid(cfg: ExperimentConfig):
    if cfg.grid_lower is None:
        return None
    lo = broadcast_vector(cfg.grid_lower, cfg.dimension)
    hi = broadcast_vector(cfg.grid_upper, cfg.dimension)
    n = broadcast_vector(cfg.grid_points, cfg.dimension)
    return GridSpec(np.asarray(lo), np.asarray(hi), np.asarray(n))


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> RunResult:
    """Validate, execute and archive one experiment."""
    cfg.validate()
    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = _time.perf_counter()
    artifacts = _RUNNERS[cfg.experiment](cfg, outdir)
    wall = _time.perf_counter() - start
    meta = {
        "config": cfg.to_json_dict(),
        "artifacts": artifacts,
        "wall_time_seconds": wall,
        "versions": {
            "hkprop": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    with open(outdir / "run.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    plot_files = emit_plotdata(outdir)
    if cfg.plots:
        from . import plotting

        plotting.render_run(outdir)
    return RunResult(outdir, tuple(artifacts) + tuple(p.name for p in plot_files), wall)


# -------------------------------------------------------------- plot data

def _read_csv(path: Path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def emit_plotdata(run_dir) -> list[Path]:
    """Derive one figure-axis CSV per result table of a completed run.

    Log scaling is left to the plotting consumer; the tables carry plain
    values on the documented axes.
    """
    run_dir = Path(run_dir)
    meta_path = run_dir / "run.json"
    if not meta_path.exists():
        raise MissingArtifactsError(f"{run_dir}: no run.json (experiment not completed)")
    meta = json.loads(meta_path.read_text())
    experiment = meta["config"]["experiment"]
    missing = [a for a in meta["artifacts"] if not (run_dir / a).exists()]
    if missing:
        raise MissingArtifactsError(f"{run_dir}: missing artifacts {missing}")
    plotdir = run_dir / "plotdata"
    plotdir.mkdir(exist_ok=True)
    out: list[Path] = []

    def emit(name: str, header, rows):
        path = plotdir / name
        write_csv(path, header, rows)
        out.append(path)

    if experiment == "initial_sampling":
        header, data = _read_csv(run_dir / "initial_sampling.csv")
        emit("fig_initial_sampling.csv", header, data)
    elif experiment == "harmonic_longtime":
        header, data = _read_csv(run_dir / "errors.csv")
        emit("fig_longtime_error.csv", header, data)
    elif experiment == "torsional_wavefunction":
        header, data = _read_csv(run_dir / "errors.csv")
        emit("fig_wavefunction_error.csv", header, data)
    elif experiment == "timestep_study":
        header, data = _read_csv(run_dir / "plateau.csv")
        emit("fig_timestep_plateau.csv", header, data)
    else:
        header, data = _read_csv(run_dir / "energies.csv")
        cols = [header.index(c) for c in
                ("t", "E_kin", "E_pot", "E_tot", "ref_kin", "ref_pot", "ref_tot")]
        emit("fig_energies.csv",
             [header[c] for c in cols], data[:, cols])
        rcols = [header.index(c) for c in ("t", "norm", "imag_residue")]
        emit("fig_norm_residue.csv", [header[c] for c in rcols], data[:, rcols])
    return out
