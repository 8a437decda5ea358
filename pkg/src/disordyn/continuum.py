"""Continuum checks: random-linear-potential dephasing and the
random-harmonic-center purity revival.

States live on a periodic grid with a spectral kinetic term (split-step
Fourier propagation); wavefunctions are normalized with the dx-weighted
inner product, dx * sum |psi|^2 = 1. Ensembles use the same counter-based
seeding and fixed-order pairwise reductions as the lattice module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disorder import _realization_rng
from .errors import DimensionError, NumericalError, ResolutionError
from .model import _readonly
from .observables import ComparisonReport, RatioMap

NYQUIST_BAND = 0.875  # |k| >= NYQUIST_BAND * k_max counts as the Nyquist band
ALIAS_LIMIT = 1e-6
NORM_TOL = 1e-9
EDGE_BAND = 1.0 / 16.0
EDGE_LIMIT = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Periodic 1D grid on [-extent/2, extent/2); n_points a power of two."""

    n_points: int
    extent: float
    mass: float = 1.0

    def __post_init__(self):
        n = self.n_points
        if n < 64 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 64, got {n}")
        if not self.extent > 0:
            raise ValueError("extent must be > 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")

    @property
    def dx(self) -> float:
        return self.extent / self.n_points

    def x(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points / 2) * self.dx

    def k(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.dx)


@dataclass(frozen=True)
class LinearForce:
    """Random constant force: H = p^2/2m + eps x, eps ~ Normal(0, sigma^2)."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class HarmonicCenter:
    """Random trap center: H = p^2/2m + (m omega^2/2)(x - eps)^2."""

    omega: float
    sigma: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def grid_normalize(grid: GridSpec, psi: np.ndarray) -> np.ndarray:
    norm = math.sqrt(grid.dx * float(np.sum(np.abs(psi) ** 2)))
    return psi / norm


def gaussian_state(
    grid: GridSpec, center: float = 0.0, width: float = 1.0, momentum: float = 0.0
) -> np.ndarray:
    x = grid.x()
    psi = np.exp(-((x - center) ** 2) / (4.0 * width**2) + 1j * momentum * x)
    return grid_normalize(grid, psi)


def coherent_state(
    grid: GridSpec, omega: float, center: float = 0.0, momentum: float = 0.0
) -> np.ndarray:
    """Ground state of the omega-trap, displaced to (center, momentum)."""
    width = math.sqrt(1.0 / (2.0 * grid.mass * omega))
    return gaussian_state(grid, center, width, momentum)


def _check_alias(grid: GridSpec, psis: np.ndarray):
    phi2 = np.abs(np.fft.fft(psis, axis=-1)) ** 2
    k = grid.k()
    band = np.abs(k) >= NYQUIST_BAND * float(np.max(np.abs(k)))
    frac = float(np.max(phi2[..., band].sum(axis=-1) / phi2.sum(axis=-1)))
    if frac > ALIAS_LIMIT:
        raise ResolutionError(
            f"momentum population {frac:.2e} in the Nyquist band (limit {ALIAS_LIMIT})"
        )


def _check_norm(grid: GridSpec, psis: np.ndarray):
    norms = grid.dx * np.sum(np.abs(psis) ** 2, axis=-1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_TOL:
        raise NumericalError(f"norm drift {drift:.2e} exceeds {NORM_TOL}")


def _check_edges(grid: GridSpec, psis: np.ndarray):
    band = int(round(grid.n_points * EDGE_BAND))
    prob = np.abs(psis) ** 2 * grid.dx
    leak = float(np.max(prob[..., :band].sum(axis=-1) + prob[..., -band:].sum(axis=-1)))
    if leak > EDGE_LIMIT:
        raise ResolutionError(
            f"probability {leak:.2e} within the domain edge band (clipping)"
        )


def _split_step_batch(
    grid: GridSpec, v: np.ndarray, psis: np.ndarray, duration: float, step: float
) -> np.ndarray:
    """Strang splitting exp(-iV h/2) exp(-iT h) exp(-iV h/2), batched over rows."""
    if duration == 0.0:
        return psis.copy()
    n_sub = max(1, int(math.ceil(duration / step - 1e-12)))
    h = duration / n_sub
    half_v = np.exp(-0.5j * h * v)
    kinetic = np.exp(-1j * h * grid.k() ** 2 / (2.0 * grid.mass))
    out = psis
    for _ in range(n_sub):
        out = out * half_v
        out = np.fft.ifft(np.fft.fft(out, axis=-1) * kinetic, axis=-1)
        out = out * half_v
    return out


def split_step_evolve(
    grid: GridSpec, potential, psi0: np.ndarray, t: float, step: float
) -> np.ndarray:
    """Evolve one state under H = p^2/2m + V(x) for time t."""
    if not step > 0:
        raise ValueError("step must be > 0")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (grid.n_points,):
        raise DimensionError(f"psi0 must have shape ({grid.n_points},)")
    norm = grid.dx * float(np.sum(np.abs(psi0) ** 2))
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"psi0 not normalized on the grid (norm^2 = {norm!r})")
    v = potential(grid.x()) if callable(potential) else np.asarray(potential, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential must be finite on the domain")
    psi = _split_step_batch(grid, v, psi0[None, :], t, step)[0]
    _check_norm(grid, psi)
    _check_alias(grid, psi)
    return psi


def _pairwise_rows(x: np.ndarray) -> np.ndarray:
    """Fixed-tree sum over axis 0 (schedule-independent reduction)."""
    k = x.shape[0]
    if k == 1:
        return x[0].copy()
    mid = k // 2
    return _pairwise_rows(x[:mid]) + _pairwise_rows(x[mid:])


def _projector_sum(psis: np.ndarray, chunk: int = 64) -> np.ndarray:
    """sum_k |psi_k><psi_k| accumulated chunkwise in fixed index order
    (never materializes the K x n x n stack)."""
    parts = [
        np.einsum("ki,kj->ij", psis[s : s + chunk], psis[s : s + chunk].conj())
        for s in range(0, psis.shape[0], chunk)
    ]
    return _pairwise_rows(np.stack(parts)) if len(parts) > 1 else parts[0]


def _draw_normals(sigma: float, k_samples: int, seed: int, cap: float | None = None) -> np.ndarray:
    """eps_k ~ Normal(0, sigma^2), one counter-based stream per index.

    With `cap`, redraws within the realization's own stream until
    |eps| <= cap (rejection keeps the draw deterministic per index).
    """
    eps = np.empty(k_samples)
    for i in range(k_samples):
        rng = _realization_rng(seed, i)
        e = rng.normal(0.0, sigma)
        if cap is not None:
            while abs(e) > cap:
                e = rng.normal(0.0, sigma)
        eps[i] = e
    return eps


def linear_dephasing_check(
    grid: GridSpec,
    sigma: float,
    psi0: np.ndarray,
    t: float,
    k_samples: int,
    seed: int,
    include_kinetic: bool = False,
    step: float = 0.005,
    floor: float | None = None,
) -> ComparisonReport:
    """Monte-Carlo average under a random linear potential vs. the
    closed-form Gaussian coherence damping exp(-sigma^2 t^2 (x-x')^2 / 2).

    With the kinetic term off, evolution under eps*x alone is a pure
    position-dependent phase, so the ensemble-averaged coherence damping
    is exactly the empirical characteristic function of eps at u =
    t (x - x'); the identity holds at all t. With the kinetic term on, the
    closed form is a short-time statement only.
    """
    if k_samples < 2:
        raise ValueError("need K >= 2 realizations")
    psi0 = np.asarray(psi0, dtype=complex)
    x = grid.x()
    n = grid.n_points
    eps = _draw_normals(sigma, k_samples, seed)
    offsets = np.arange(n) * grid.dx
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])

    observed_damping = None
    if include_kinetic:
        v = eps[:, None] * x[None, :]
        psis = _split_step_batch(grid, v, np.broadcast_to(psi0, (k_samples, n)), t, step)
        _check_norm(grid, psis)
        _check_alias(grid, psis)
        rho_mc = _projector_sum(psis) * (grid.dx / k_samples)
        psi_free = _split_step_batch(grid, np.zeros(n), psi0[None, :], t, step)[0]
        ref_abs = np.abs(np.outer(psi_free, psi_free.conj())) * grid.dx
    else:
        # Evolution under eps*x alone is the exact phase exp(-i eps x t), so
        # the averaged coherence damping is the empirical characteristic
        # function M(u) = (1/K) sum_k exp(-i eps_k u) at u = t (x - x').
        m = _pairwise_rows(np.exp(-1j * np.outer(eps, t * offsets))) / k_samples
        factor = np.where(idx[:, None] >= idx[None, :], m[sep], m[sep].conj())
        rho_mc = (np.outer(psi0, psi0.conj()) * grid.dx) * factor
        ref_abs = np.abs(np.outer(psi0, psi0.conj())) * grid.dx
        observed_damping = np.abs(m)

    abs_floor = 1e-4 * float(ref_abs.max()) if floor is None else floor
    mask = ref_abs < abs_floor
    values = np.zeros_like(ref_abs)
    np.divide(np.abs(rho_mc), ref_abs, out=values, where=~mask)
    ratio_map = RatioMap(
        values=_readonly(values),
        mask=_readonly(mask),
        floor=abs_floor,
        masked_count=int(mask.sum()),
        degenerate=bool(mask.all()),
    )
    meta = {
        "offsets": offsets,
        "expected_damping": np.exp(-0.5 * sigma**2 * t**2 * offsets**2),
        "observed_damping": observed_damping,
        "sigma": sigma,
        "time": t,
        "k_samples": k_samples,
        "include_kinetic": include_kinetic,
    }
    return ComparisonReport(ratio_map=ratio_map, meta=meta)


def offset_ratio(report: ComparisonReport, grid: GridSpec, dx_value: float) -> float:
    """Mean unmasked coherence ratio at spatial offset dx_value."""
    d = int(round(dx_value / grid.dx))
    if abs(d * grid.dx - dx_value) > 1e-9:
        raise ValueError(f"offset {dx_value} is not a multiple of dx={grid.dx}")
    values = report.ratio_map.values.diagonal(d)
    mask = report.ratio_map.mask.diagonal(d)
    if mask.all():
        raise ValueError(f"all entries masked at offset {dx_value}")
    return float(values[~mask].mean())


@dataclass(frozen=True)
class PuritySeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", _readonly(np.asarray(self.times, dtype=float)))
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=float)))
        if self.times.shape != self.values.shape:
            raise DimensionError("times and values must have equal length")


def _gram_purity_batch(grid: GridSpec, psis: np.ndarray) -> float:
    overlaps = (psis.conj() @ psis.T) * grid.dx
    k = psis.shape[0]
    return float(np.sum(np.abs(overlaps) ** 2)) / k**2


def harmonic_revival_check(
    grid: GridSpec,
    omega: float,
    sigma: float,
    psi0: np.ndarray,
    k_samples: int,
    seed: int,
    samples: int = 65,
    step: float | None = None,
) -> PuritySeries:
    """Ensemble purity over one trap period T = 2 pi / omega.

    All realizations share the frequency, so every state recurs at T and
    the ensemble regains the purity lost at intermediate times. Sampled
    trap centers are rejected beyond extent/8 so displaced packets stay
    resolved (checked against the domain edge band during evolution).
    """
    if k_samples < 2:
        raise ValueError("need K >= 2 realizations")
    period = 2.0 * math.pi / omega
    if step is None:
        step = period / 4096.0
    x = grid.x()
    eps = _draw_normals(sigma, k_samples, seed, cap=grid.extent / 8.0)
    v = 0.5 * grid.mass * omega**2 * (x[None, :] - eps[:, None]) ** 2
    psis = np.broadcast_to(np.asarray(psi0, dtype=complex), (k_samples, grid.n_points)).copy()
    times = np.linspace(0.0, period, samples)
    purities = np.empty(samples)
    purities[0] = _gram_purity_batch(grid, psis)
    for i in range(1, samples):
        psis = _split_step_batch(grid, v, psis, times[i] - times[i - 1], step)
        _check_norm(grid, psis)
        _check_edges(grid, psis)
        purities[i] = _gram_purity_batch(grid, psis)
    _check_alias(grid, psis)
    return PuritySeries(times, purities)
