"""Scenario pipelines: wire configs through the library and write bundles."""

from __future__ import annotations

import math

import numpy as np

from . import __version__
from .bundle import (
    BundleWriter,
    time_tag,
    write_density_csv,
    write_gq_csv,
    write_localization_csv,
    write_momentum_csv,
    write_purity_csv,
    write_ratio_csv,
    write_tmax_csv,
)
from .config import ScenarioConfig
from .continuum import (
    coherent_state,
    gaussian_state,
    harmonic_revival_check,
    linear_dephasing_check,
    offset_ratio,
)
from .disorder import GaussianCorrelated, correlation, disorder_label_fields
from .ensemble import ensemble_average
from .errors import ConfigError, DisordynError
from .kernels import resolve_backend_name
from .lindblad import (
    boonpan_localization_function,
    default_q_grid,
    localization_function,
    momentum_transfer_distribution,
    propagate_master_equation,
    tmax_estimate,
)
from .model import DensityMatrix, double_slit_state, gaussian_wavepacket
from .observables import (
    ComparisonReport,
    bz_grid,
    coherence_ratio_map,
    edge_leakage,
    fringe_period,
    fringe_window,
    momentum_distribution,
    purity_series,
    visibility,
)

EDGE_MARGIN = 10


def build_initial_state(config: ScenarioConfig):
    state = config.initial_state
    if state.kind == "gaussian":
        return gaussian_wavepacket(config.lattice, state.center, state.width, state.momentum)
    if state.kind == "double_slit":
        return double_slit_state(config.lattice, state.separation, state.width, state.phase)
    raise ConfigError(f"cannot build lattice state of kind {state.kind!r}")


def _loss_key(t: float) -> str:
    return f"purity_loss_at_{t:g}"


def _compare_pipeline(config, writer, threads, backend):
    """Runs the exact-ensemble and master-equation pipelines; each may fail
    independently, and the surviving pipeline's artifacts are still written."""
    lattice, disorder, times = config.lattice, config.disorder, config.times
    psi0 = build_initial_state(config)
    rho0 = DensityMatrix.from_pure(psi0)

    ens = me = None
    try:
        ens = ensemble_average(
            lattice, disorder, psi0, times, config.k_realizations, config.master_seed,
            threads=threads,
        )
        writer.pipeline_ok("ensemble")
    except DisordynError as exc:
        writer.pipeline_failed("ensemble", exc)
    try:
        me = propagate_master_equation(
            lattice, disorder, rho0, times, step=config.solver.step, backend=backend
        )
        writer.pipeline_ok("master_equation")
    except DisordynError as exc:
        writer.pipeline_failed("master_equation", exc)

    p_ens = purity_series(ens.states) if ens else None
    p_me = purity_series(me.states) if me else None
    ratio = p_me / p_ens if ens and me else None
    tmax = (
        tmax_estimate(times, p_me, p_ens, config.solver.tmax_threshold)
        if ens and me
        else math.inf
    )

    write_purity_csv(writer.path("purity.csv"), times.times, p_ens, p_me, ratio)
    writer.register("purity", "purity.csv")

    q = bz_grid(lattice.n_sites)
    momentum_blocks = []
    ratio_stats = {}
    comparison = None
    for t in config.solver.density_times:
        i = times.index_of(t)
        tag = time_tag(t)
        if ens:
            write_density_csv(writer.path("states_ens", f"{tag}.csv"), ens.states[i])
            writer.register("states_ens", f"states_ens/{tag}.csv", append=True)
        if me:
            write_density_csv(writer.path("states_me", f"{tag}.csv"), me.states[i])
            writer.register("states_me", f"states_me/{tag}.csv", append=True)
        momentum_blocks.append(
            (
                t,
                q,
                momentum_distribution(ens.states[i]) if ens else None,
                momentum_distribution(me.states[i]) if me else None,
            )
        )
        if ens and me:
            floor = config.solver.ratio_floor * float(np.max(np.abs(ens.states[i].elements)))
            rmap = coherence_ratio_map(me.states[i], ens.states[i], floor)
            comparison = ComparisonReport(
                ratio_map=rmap,
                purity_ratio_times=times.times,
                purity_ratio_values=ratio,
                tmax=tmax,
                meta={"ratio_map_time": t},
            )
            unmasked = rmap.unmasked()
            ratio_stats[f"{t:g}"] = {
                "masked_count": rmap.masked_count,
                "floor": rmap.floor,
                "mean_abs_deviation": float(np.mean(np.abs(unmasked - 1.0))) if unmasked.size else None,
                "max_abs_deviation": float(np.max(np.abs(unmasked - 1.0))) if unmasked.size else None,
            }
    write_momentum_csv(writer.path("momentum.csv"), momentum_blocks)
    writer.register("momentum", "momentum.csv")
    _write_profile_files(writer, [disorder], lattice)

    if comparison is not None:
        tmax = comparison.tmax
    report = {
        "scenario": config.scenario,
        "t_max": (tmax if math.isfinite(tmax) else "inf") if ens and me else None,
        "tmax_threshold": config.solver.tmax_threshold,
        "purity_final": {
            "p_ens": float(p_ens[-1]) if ens else None,
            "p_me": float(p_me[-1]) if me else None,
        },
        "masked_ratio_stats": ratio_stats,
        "edge_leakage_final": edge_leakage(ens.states[-1], EDGE_MARGIN) if ens else None,
        "invariants": {
            "max_trace_error": me.invariants.max_trace_error,
            "max_hermiticity_defect": me.invariants.max_hermiticity_defect,
            "min_eigenvalue": me.invariants.min_eigenvalue,
        }
        if me
        else None,
    }
    if ens:
        for t in config.solver.density_times:
            report[_loss_key(t)] = float(1.0 - p_ens[times.index_of(t)])
    return report


def _double_slit_pipeline(config, writer, threads, backend) -> dict:
    lattice, times = config.lattice, config.times
    psi0 = build_initial_state(config)
    ens = ensemble_average(
        lattice, config.disorder, psi0, times, config.k_realizations, config.master_seed,
        threads=threads,
    )
    p_ens = purity_series(ens.states)
    write_purity_csv(writer.path("purity.csv"), times.times, p_ens, None, None)
    writer.register("purity", "purity.csv")

    separation = config.initial_state.separation
    window = fringe_window(separation)
    q = bz_grid(lattice.n_sites)
    min_shift = max(2, int(separation) // 2)

    vis = [visibility(momentum_distribution(s), q, window) for s in ens.states]
    momentum_blocks = []
    periods = {}
    for t in config.solver.density_times:
        i = times.index_of(t)
        n_q = momentum_distribution(ens.states[i])
        momentum_blocks.append((t, q, n_q, None))
        period, shift = fringe_period(n_q, min_shift=min_shift)
        periods[f"{t:g}"] = {"period": period, "separation": shift}
        tag = time_tag(t)
        write_density_csv(writer.path("states_ens", f"{tag}.csv"), ens.states[i])
        writer.register("states_ens", f"states_ens/{tag}.csv", append=True)
    write_momentum_csv(writer.path("momentum.csv"), momentum_blocks)
    writer.register("momentum", "momentum.csv")
    _write_profile_files(writer, [config.disorder], lattice)

    return {
        "scenario": config.scenario,
        "visibility": {
            "times": [float(t) for t in times.times],
            "values": [float(v) for v in vis],
            "window": list(window),
        },
        "fringe_periods": periods,
        "edge_leakage_final": edge_leakage(ens.states[-1], EDGE_MARGIN),
    }


def _write_profile_files(writer, specs, lattice) -> None:
    """localization.csv and gq.csv for the disorder models in a bundle."""
    q_profile = default_q_grid(256)
    max_dj = min(lattice.n_sites - 1, 32)
    loc_rows, gq_rows = [], []
    for spec in specs:
        label, _ = disorder_label_fields(spec)
        for dj in range(0, max_dj + 1):
            fb = None
            if isinstance(spec, GaussianCorrelated):
                fb = boonpan_localization_function(spec.strength, spec.corr_length, float(dj))
            loc_rows.append(
                (label, dj, correlation(spec, dj), localization_function(spec, dj), fb)
            )
        g = momentum_transfer_distribution(spec, q_profile)
        gq_rows.extend((label, qv, gv) for qv, gv in zip(q_profile, g))
    write_localization_csv(writer.path("localization.csv"), loc_rows)
    writer.register("localization", "localization.csv")
    write_gq_csv(writer.path("gq.csv"), gq_rows)
    writer.register("gq", "gq.csv")


def _sweep_pipeline(config, writer, threads, backend) -> dict:
    lattice, times = config.lattice, config.times
    psi0 = build_initial_state(config)
    rho0 = DensityMatrix.from_pure(psi0)
    _write_profile_files(writer, config.sweep, lattice)

    tmax_rows = []
    summary = {}
    for spec in config.sweep:
        label, strength = disorder_label_fields(spec)
        ens = ensemble_average(
            lattice, spec, psi0, times, config.k_realizations, config.master_seed,
            threads=threads,
        )
        me = propagate_master_equation(
            lattice, spec, rho0, times, step=config.solver.step, backend=backend
        )
        p_ens = purity_series(ens.states)
        p_me = purity_series(me.states)
        tmax = tmax_estimate(times, p_me, p_ens, config.solver.tmax_threshold)
        if math.isfinite(tmax):
            loss = float(1.0 - np.interp(tmax, times.times, p_ens))
        else:
            loss = float(1.0 - p_ens[-1])
        tmax_rows.append((label, strength, tmax, loss))
        summary[label] = {"tmax": tmax if math.isfinite(tmax) else "inf", "purity_loss_at_tmax": loss}

    write_tmax_csv(writer.path("tmax_vs_w.csv"), tmax_rows)
    writer.register("tmax_vs_w", "tmax_vs_w.csv")
    return {"scenario": config.scenario, "sweep": summary}


def _continuum_linear_pipeline(config, writer, threads, backend) -> dict:
    grid, lin = config.grid, config.linear
    psi0 = gaussian_state(grid, center=0.0, width=lin.width)
    report = linear_dephasing_check(
        grid, lin.sigma, psi0, lin.time, config.k_realizations, config.master_seed,
        include_kinetic=lin.include_kinetic, step=config.solver.step,
    )
    offsets = report.meta["offsets"]
    expected = report.meta["expected_damping"]
    observed = report.meta["observed_damping"]
    write_ratio_csv(writer.path("ratio.csv"), offsets, observed, expected)
    writer.register("ratio", "ratio.csv")

    per_offset = {}
    for dx in lin.offsets:
        per_offset[f"{dx:g}"] = {
            "observed": offset_ratio(report, grid, dx),
            "expected": float(np.exp(-0.5 * lin.sigma**2 * lin.time**2 * dx**2)),
        }
    return {
        "scenario": config.scenario,
        "k_realizations": config.k_realizations,
        "sigma": lin.sigma,
        "time": lin.time,
        "include_kinetic": lin.include_kinetic,
        "coherence_ratio": per_offset,
        "masked_count": report.ratio_map.masked_count,
    }


def _continuum_harmonic_pipeline(config, writer, threads, backend) -> dict:
    grid, har = config.grid, config.harmonic
    psi0 = coherent_state(grid, har.omega)
    series = harmonic_revival_check(
        grid, har.omega, har.sigma, psi0, config.k_realizations, config.master_seed,
        samples=har.samples,
    )
    write_purity_csv(writer.path("purity.csv"), series.times, series.values, None, None)
    writer.register("purity", "purity.csv")
    interior = series.values[1:-1]
    return {
        "scenario": config.scenario,
        "omega": har.omega,
        "sigma": har.sigma,
        "k_realizations": config.k_realizations,
        "purity_at_period": float(series.values[-1]),
        "min_purity": float(series.values.min()),
        "interior_dip": float(1.0 - interior.min()) if interior.size else 0.0,
    }


_PIPELINES = {
    "compare": _compare_pipeline,
    "double_slit": _double_slit_pipeline,
    "correlation_sweep": _sweep_pipeline,
    "continuum_linear": _continuum_linear_pipeline,
    "continuum_harmonic": _continuum_harmonic_pipeline,
}


def run_scenario(
    config: ScenarioConfig, out_dir: str, threads: int = 1, backend: str = "auto"
) -> int:
    """Run one scenario and write its bundle; returns the process exit code
    (0 ok, 3 a pipeline failed numerically). Partial failures still emit
    the manifest with an error record."""
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    writer = BundleWriter(out_dir)
    name = config.scenario
    try:
        report = _PIPELINES[name](config, writer, threads, backend)
        if not writer.pipelines:  # pipelines that don't track sub-statuses
            writer.pipeline_ok(name)
        writer.write_report(report)
    except DisordynError as exc:
        writer.pipeline_failed(name, exc)
    writer.write_manifest(config, threads, resolve_backend_name(backend), __version__)
    failed = any(p["status"] == "error" for p in writer.pipelines.values())
    return 3 if failed else 0
