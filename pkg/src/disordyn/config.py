"""Scenario configuration: JSON (de)serialization, defaults, validation.

A ScenarioConfig is fully explicit after loading (every default is
resolved), round-trips losslessly through to_dict/from_dict, and carries
everything needed to reproduce a run bitwise: specs, time grid, K,
master_seed, and solver settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .continuum import GridSpec
from .disorder import AndersonBox, CustomCovariance, DisorderSpec, GaussianCorrelated
from .ensemble import TimeGrid
from .errors import ConfigError
from .model import LatticeSpec

SCENARIOS = (
    "compare",
    "double_slit",
    "correlation_sweep",
    "continuum_linear",
    "continuum_harmonic",
)
LATTICE_SCENARIOS = ("compare", "double_slit", "correlation_sweep")

# Declared figure-style defaults: a 128-site lattice keeps the ballistic
# light cone (group speed 2 J a / hbar) away from the edges over the
# simulated windows.
DEFAULT_LATTICE = {"n_sites": 128, "hopping": 1.0, "spacing": 1.0, "boundary": "open"}
DEFAULT_GAUSSIAN = {"width": 4.0, "momentum": 0.0}  # center defaults to the midpoint
DEFAULT_DOUBLE_SLIT = {"separation": 24.0, "width": 3.0, "phase": 0.0}


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str  # gaussian | double_slit | coherent
    center: float = 0.0
    width: float = 0.0
    momentum: float = 0.0
    separation: float = 0.0
    phase: float = 0.0

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {
                "kind": "gaussian",
                "center": self.center,
                "width": self.width,
                "momentum": self.momentum,
            }
        if self.kind == "double_slit":
            return {
                "kind": "double_slit",
                "separation": self.separation,
                "width": self.width,
                "phase": self.phase,
            }
        return {"kind": "coherent", "center": self.center, "momentum": self.momentum}


@dataclass(frozen=True)
class SolverSettings:
    step: float = 0.005
    tmax_threshold: float = 0.05
    ratio_floor: float = 1e-4  # relative to max |rho_ens|
    density_times: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "tmax_threshold": self.tmax_threshold,
            "ratio_floor": self.ratio_floor,
            "density_times": list(self.density_times),
        }


@dataclass(frozen=True)
class ContinuumLinearParams:
    sigma: float = 1.0
    time: float = 1.0
    include_kinetic: bool = False
    offsets: tuple[float, ...] = (0.5, 1.0)
    width: float = 1.0  # initial Gaussian width

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "time": self.time,
            "include_kinetic": self.include_kinetic,
            "offsets": list(self.offsets),
            "width": self.width,
        }


@dataclass(frozen=True)
class ContinuumHarmonicParams:
    omega: float = 1.0
    sigma: float = 0.5
    samples: int = 65

    def to_dict(self) -> dict:
        return {"omega": self.omega, "sigma": self.sigma, "samples": self.samples}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    master_seed: int
    k_realizations: int
    solver: SolverSettings
    lattice: LatticeSpec | None = None
    disorder: DisorderSpec | None = None
    sweep: tuple[DisorderSpec, ...] = ()
    initial_state: InitialStateSpec | None = None
    times: TimeGrid | None = None
    grid: GridSpec | None = None
    linear: ContinuumLinearParams | None = None
    harmonic: ContinuumHarmonicParams | None = None
    output_dir: str | None = None

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        out: dict = {
            "scenario": self.scenario,
            "master_seed": self.master_seed,
            "k_realizations": self.k_realizations,
            "solver": self.solver.to_dict(),
            "output_dir": self.output_dir,
        }
        if self.lattice is not None:
            out["lattice"] = {
                "n_sites": self.lattice.n_sites,
                "hopping": self.lattice.hopping,
                "spacing": self.lattice.spacing,
                "boundary": self.lattice.boundary,
            }
        if self.disorder is not None:
            out["disorder"] = disorder_to_dict(self.disorder)
        if self.sweep:
            out["sweep"] = [disorder_to_dict(s) for s in self.sweep]
        if self.initial_state is not None:
            out["initial_state"] = self.initial_state.to_dict()
        if self.times is not None:
            out["times"] = {"times": [float(t) for t in self.times.times]}
        if self.grid is not None:
            out["grid"] = {
                "n_points": self.grid.n_points,
                "extent": self.grid.extent,
                "mass": self.grid.mass,
            }
        if self.linear is not None:
            out["continuum_linear"] = self.linear.to_dict()
        if self.harmonic is not None:
            out["continuum_harmonic"] = self.harmonic.to_dict()
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = unwrap_manifest(raw)
        known = {
            "scenario",
            "master_seed",
            "k_realizations",
            "solver",
            "lattice",
            "disorder",
            "sweep",
            "initial_state",
            "times",
            "grid",
            "continuum_linear",
            "continuum_harmonic",
            "output_dir",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        scenario = raw.get("scenario")
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
        if "master_seed" not in raw:
            raise ConfigError("master_seed is required (reproducibility contract)")
        master_seed = _as_int(raw["master_seed"], "master_seed", minimum=0)

        if scenario in LATTICE_SCENARIOS:
            return _lattice_config(cls, scenario, master_seed, raw)
        return _continuum_config(cls, scenario, master_seed, raw)


def unwrap_manifest(raw: dict) -> dict:
    """Accept a bundle manifest wherever a config is expected (closure)."""
    if isinstance(raw, dict) and isinstance(raw.get("config"), dict):
        if str(raw.get("schema", "")).startswith("disordyn-bundle") or "scenario" not in raw:
            return raw["config"]
    return raw


def disorder_to_dict(spec: DisorderSpec) -> dict:
    if isinstance(spec, AndersonBox):
        return {"type": "anderson_box", "W": spec.strength}
    if isinstance(spec, GaussianCorrelated):
        return {"type": "gaussian_correlated", "xi": spec.strength, "L": spec.corr_length}
    if isinstance(spec, CustomCovariance):
        return {"type": "custom", "sigma": spec.matrix.tolist()}
    raise ConfigError(f"unknown disorder spec {type(spec).__name__}")


def disorder_from_dict(raw: dict) -> DisorderSpec:
    if not isinstance(raw, dict) or "type" not in raw:
        raise ConfigError("disorder must be an object with a 'type' field")
    kind = raw["type"]
    try:
        if kind == "anderson_box":
            return AndersonBox(strength=float(raw["W"]))
        if kind == "gaussian_correlated":
            return GaussianCorrelated(strength=float(raw["xi"]), corr_length=float(raw["L"]))
        if kind == "custom":
            return CustomCovariance(matrix=np.asarray(raw["sigma"], dtype=float))
    except KeyError as exc:
        raise ConfigError(f"disorder spec missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid disorder spec: {exc}") from exc
    raise ConfigError(f"unknown disorder type {kind!r}")


def _as_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _times_from_dict(raw, default_stop: float, default_step: float) -> TimeGrid:
    if raw is None:
        return TimeGrid.regular(0.0, default_stop, default_step)
    if "times" in raw:
        return TimeGrid(np.asarray(raw["times"], dtype=float))
    start = float(raw.get("start", 0.0))
    stop = float(raw["stop"])
    step = float(raw.get("step", default_step))
    return TimeGrid.regular(start, stop, step)


def _solver_from_dict(raw, default_density: tuple[float, ...], grid: TimeGrid) -> SolverSettings:
    raw = raw or {}
    density = raw.get("density_times")
    if density is None:
        density = default_density
    # snap to the nearest grid times actually present
    density = sorted({float(grid.times[grid.nearest_index(float(t))]) for t in density})
    return SolverSettings(
        step=float(raw.get("step", 0.005)),
        tmax_threshold=float(raw.get("tmax_threshold", 0.05)),
        ratio_floor=float(raw.get("ratio_floor", 1e-4)),
        density_times=tuple(float(t) for t in density),
    )


def _lattice_config(cls, scenario: str, master_seed: int, raw: dict) -> "ScenarioConfig":
    lat_raw = {**DEFAULT_LATTICE, **(raw.get("lattice") or {})}
    try:
        lattice = LatticeSpec(
            n_sites=_as_int(lat_raw["n_sites"], "lattice.n_sites", minimum=2),
            hopping=float(lat_raw["hopping"]),
            spacing=float(lat_raw["spacing"]),
            boundary=str(lat_raw["boundary"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid lattice: {exc}") from exc

    sweep: tuple[DisorderSpec, ...] = ()
    disorder = None
    if scenario == "correlation_sweep":
        entries = raw.get("sweep")
        if not entries:
            raise ConfigError("correlation_sweep requires a non-empty 'sweep' list")
        sweep = tuple(disorder_from_dict(e) for e in entries)
    else:
        default_w = 10.0 if scenario == "compare" else 5.0
        disorder = disorder_from_dict(raw.get("disorder") or {"type": "anderson_box", "W": default_w})

    mid = (lattice.n_sites - 1) / 2.0
    state_raw = raw.get("initial_state") or {}
    kind = state_raw.get("kind", "double_slit" if scenario == "double_slit" else "gaussian")
    try:
        if kind == "gaussian":
            initial = InitialStateSpec(
                kind="gaussian",
                center=float(state_raw.get("center", mid)),
                width=float(state_raw.get("width", DEFAULT_GAUSSIAN["width"])),
                momentum=float(state_raw.get("momentum", DEFAULT_GAUSSIAN["momentum"])),
            )
        elif kind == "double_slit":
            initial = InitialStateSpec(
                kind="double_slit",
                separation=float(state_raw.get("separation", DEFAULT_DOUBLE_SLIT["separation"])),
                width=float(state_raw.get("width", DEFAULT_DOUBLE_SLIT["width"])),
                phase=float(state_raw.get("phase", DEFAULT_DOUBLE_SLIT["phase"])),
            )
        else:
            raise ConfigError(f"initial_state.kind {kind!r} not valid for lattice scenarios")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid initial_state: {exc}") from exc

    default_stop = 0.8 if scenario == "double_slit" else 2.0
    times = _times_from_dict(raw.get("times"), default_stop=default_stop, default_step=0.02)
    if scenario == "double_slit":
        default_density = (0.0, 0.2, 0.4, 0.8)
    elif scenario == "compare":
        default_density = (0.0, 0.2, 0.5, 1.0, 2.0)
    else:
        default_density = ()
    solver = _solver_from_dict(raw.get("solver"), default_density, times)
    k_default = {"compare": 200, "double_slit": 100, "correlation_sweep": 200}[scenario]
    return cls(
        scenario=scenario,
        master_seed=master_seed,
        k_realizations=_as_int(raw.get("k_realizations", k_default), "k_realizations", minimum=1),
        solver=solver,
        lattice=lattice,
        disorder=disorder,
        sweep=sweep,
        initial_state=initial,
        times=times,
        output_dir=raw.get("output_dir"),
    )


def _continuum_config(cls, scenario: str, master_seed: int, raw: dict) -> "ScenarioConfig":
    default_extent = 32.0 if scenario == "continuum_linear" else 16.0
    grid_raw = {"n_points": 512, "extent": default_extent, "mass": 1.0, **(raw.get("grid") or {})}
    try:
        grid = GridSpec(
            n_points=_as_int(grid_raw["n_points"], "grid.n_points", minimum=64),
            extent=float(grid_raw["extent"]),
            mass=float(grid_raw["mass"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc

    linear = None
    harmonic = None
    if scenario == "continuum_linear":
        p = raw.get("continuum_linear") or {}
        linear = ContinuumLinearParams(
            sigma=float(p.get("sigma", 1.0)),
            time=float(p.get("time", 1.0)),
            include_kinetic=bool(p.get("include_kinetic", False)),
            offsets=tuple(float(v) for v in p.get("offsets", (0.5, 1.0))),
            width=float(p.get("width", 1.0)),
        )
        if not linear.time > 0:
            raise ConfigError(f"continuum_linear.time must be > 0, got {linear.time}")
        if linear.sigma < 0 or not linear.width > 0:
            raise ConfigError("continuum_linear requires sigma >= 0 and width > 0")
        k_default = 4096
        initial = InitialStateSpec(kind="gaussian", center=0.0, width=linear.width)
        times = TimeGrid(np.array([0.0, linear.time]))
    else:
        p = raw.get("continuum_harmonic") or {}
        harmonic = ContinuumHarmonicParams(
            omega=float(p.get("omega", 1.0)),
            sigma=float(p.get("sigma", 0.5)),
            samples=_as_int(p.get("samples", 65), "samples", minimum=3),
        )
        k_default = 64
        initial = InitialStateSpec(kind="coherent", center=0.0, momentum=0.0)
        times = TimeGrid(np.linspace(0.0, 2.0 * math.pi / harmonic.omega, harmonic.samples))
    solver = _solver_from_dict(raw.get("solver"), (), times)
    return cls(
        scenario=scenario,
        master_seed=master_seed,
        k_realizations=_as_int(raw.get("k_realizations", k_default), "k_realizations", minimum=1),
        solver=solver,
        grid=grid,
        linear=linear,
        harmonic=harmonic,
        initial_state=initial,
        times=times,
        output_dir=raw.get("output_dir"),
    )


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    code: str
    message: str


def validate(config_or_raw) -> list[Diagnostic]:
    """Static checks (lattice sizing vs. light cone, aliasing risk, seed
    presence); never runs a simulation."""
    if isinstance(config_or_raw, dict):
        try:
            config = ScenarioConfig.from_dict(config_or_raw)
        except ConfigError as exc:
            return [Diagnostic("error", "config", str(exc))]
    else:
        config = config_or_raw

    diags: list[Diagnostic] = []
    if config.scenario in LATTICE_SCENARIOS:
        lat = config.lattice
        state = config.initial_state
        t_final = float(config.times.times[-1])
        half_packet = 4.0 * state.width + (
            state.separation / 2.0 if state.kind == "double_slit" else 0.0
        )
        # group speed 2 J a / hbar, plus a safety margin of 4 sites
        reach = half_packet + 2.0 * lat.hopping * lat.spacing * t_final + 4.0
        mid = (lat.n_sites - 1) / 2.0
        if mid + reach > lat.n_sites - 1:
            diags.append(
                Diagnostic(
                    "warning",
                    "light_cone",
                    f"ballistic wavefront ({reach:.1f} sites from midpoint) may reach "
                    f"the edge of the {lat.n_sites}-site lattice by t={t_final}",
                )
            )
    else:
        grid = config.grid
        k_max = math.pi / grid.dx
        if config.scenario == "continuum_harmonic":
            h = config.harmonic
            p_needed = grid.mass * h.omega * grid.extent / 4.0 + 5.0 * math.sqrt(
                grid.mass * h.omega / 2.0
            )
        else:
            lin = config.linear
            p_needed = 3.0 * lin.sigma * lin.time + 2.5 / lin.width
        if p_needed > 0.7 * k_max:
            diags.append(
                Diagnostic(
                    "warning",
                    "aliasing",
                    f"estimated momentum reach {p_needed:.1f} approaches the grid "
                    f"Nyquist momentum {k_max:.1f}; increase n_points or extent",
                )
            )
    return diags
