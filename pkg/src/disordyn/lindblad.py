"""Short-time master equation for the disorder-averaged state.

The dissipator acts elementwise in the site basis with a rate that grows
linearly in time:

    d rho / dt = -i [Hbar, rho] + 2 t (Sigma_{jj'} - (Sigma_jj + Sigma_j'j')/2) rho_{jj'}

where Sigma is the disorder covariance. For translation-invariant
(homogeneous) disorder this reduces to -2 t F(j-j') rho_{jj'} with the
localization function F(dj) = C(0) - C(dj), and is equivalent to a
collisional-decoherence equation whose momentum kicks are weighted by
G(q), the Fourier transform of C. Neglecting the commutator gives the
closed-form dephasing solution rho_{jj'}(t) = exp(-t^2 F(j-j')) rho_{jj'}(0).

Everything here is in natural units (hbar = 1, a = 1); energies carry the
same unit as the hopping constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disorder import DisorderSpec, correlation, covariance_matrix, is_homogeneous
from .ensemble import TimeGrid
from .errors import DimensionError, InvariantViolation, UnsupportedVariantError
from .kernels import get_rk4_propagate, resolve_backend_name
from .model import (
    HERMITICITY_TOL,
    MIN_EIGENVALUE,
    TRACE_TOL,
    DensityMatrix,
    LatticeSpec,
    _readonly,
)

DEFAULT_STEP = 0.005
DEFAULT_Q_POINTS = 1024
CORRELATION_CUTOFF = 1e-12


@dataclass(frozen=True)
class DissipatorSpec:
    """Covariance-driven dissipator. `energy_scale` is bookkeeping only:
    it cancels between the Lindblad operators and their rates and never
    enters the dynamics."""

    covariance: np.ndarray
    energy_scale: float = 1.0

    def __post_init__(self):
        sigma = np.asarray(self.covariance, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DimensionError("covariance must be a square matrix")
        if not np.allclose(sigma, sigma.T, atol=1e-10, rtol=0.0):
            raise ValueError("covariance must be symmetric")
        eigs = np.linalg.eigvalsh(sigma)
        scale = max(float(eigs[-1]), 1.0)
        if eigs[0] < -1e-10 * scale:
            raise ValueError(f"covariance not PSD: min eigenvalue {eigs[0]:.3e}")
        if not self.energy_scale > 0:
            raise ValueError("energy_scale must be > 0")
        object.__setattr__(self, "covariance", _readonly(sigma))

    @property
    def n_sites(self) -> int:
        return self.covariance.shape[0]


@dataclass(frozen=True)
class LocalizationProfile:
    """F(dj) on dj in [-(n-1), n-1] and G(q) on a uniform BZ grid."""

    deltas: np.ndarray
    f_values: np.ndarray
    q_grid: np.ndarray
    g_values: np.ndarray

    def __post_init__(self):
        for name in ("deltas", "f_values", "q_grid", "g_values"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name))))
        if self.deltas.shape != self.f_values.shape:
            raise DimensionError("deltas and f_values must have equal length")
        if self.q_grid.shape != self.g_values.shape:
            raise DimensionError("q_grid and g_values must have equal length")

    def f_at(self, dj: int) -> float:
        i = int(dj) - int(self.deltas[0])
        return float(self.f_values[i])


def localization_function(spec: DisorderSpec, dj: int) -> float:
    """F(dj) = C(0) - C(dj): decay exponent scale for coherences at separation dj."""
    if not is_homogeneous(spec):
        raise UnsupportedVariantError(
            "localization function requires translation-invariant disorder"
        )
    return correlation(spec, 0) - correlation(spec, dj)


def _correlation_support(spec: DisorderSpec) -> int:
    """Largest |dj| with C(dj) above the summability cutoff."""
    c0 = correlation(spec, 0)
    if c0 == 0.0:
        return 0
    cutoff = CORRELATION_CUTOFF * c0
    dj = 0
    while abs(correlation(spec, dj + 1)) >= cutoff:
        dj += 1
        if dj > 10**6:
            raise ValueError("correlation function is not summable (cutoff never reached)")
    return dj


def default_q_grid(points: int = DEFAULT_Q_POINTS) -> np.ndarray:
    """Uniform half-open Brillouin-zone grid on [-pi, pi)."""
    return -math.pi + 2.0 * math.pi * np.arange(points) / points


def momentum_transfer_distribution(spec: DisorderSpec, q_grid: np.ndarray) -> np.ndarray:
    """G(q) = (1/2pi) sum_dj exp(-i q dj) C(dj), evaluated on q_grid.

    The sum is truncated where C drops below 1e-12 * C(0). G is real and
    (for the models in scope) nonnegative; the Brillouin-zone integral of
    G recovers C(0).
    """
    if not is_homogeneous(spec):
        raise UnsupportedVariantError(
            "momentum transfer distribution requires translation-invariant disorder"
        )
    q = np.asarray(q_grid, dtype=float)
    support = _correlation_support(spec)
    g = np.full(q.shape, correlation(spec, 0) / (2.0 * math.pi))
    for dj in range(1, support + 1):
        g += (correlation(spec, dj) / math.pi) * np.cos(q * dj)
    return g


def bz_integral(values: np.ndarray, q_grid: np.ndarray) -> float:
    """Integral over the Brillouin zone on a uniform half-open grid.

    Equals the trapezoid rule under periodic continuation of the integrand.
    """
    q = np.asarray(q_grid, dtype=float)
    if q.size < 2:
        raise ValueError("q_grid must have at least 2 points")
    dq = np.diff(q)
    if not np.allclose(dq, dq[0], rtol=1e-12, atol=1e-12):
        raise ValueError("q_grid must be uniform")
    return float(np.sum(values) * dq[0])


def localization_profile(
    spec: DisorderSpec, n_sites: int, q_points: int = DEFAULT_Q_POINTS
) -> LocalizationProfile:
    deltas = np.arange(-(n_sites - 1), n_sites)
    f_values = np.array([localization_function(spec, int(d)) for d in deltas])
    q_grid = default_q_grid(q_points)
    g_values = momentum_transfer_distribution(spec, q_grid)
    return LocalizationProfile(deltas, f_values, q_grid, g_values)


def boonpan_localization_function(xi: float, corr_length: float, dx: float) -> float:
    """Path-integral localization function xi (1 - (1 + 2 (dx/L)^2)^(-1/2)).

    Comparison curve for the Gaussian-correlation F; agrees in the
    short-range region |dx| < L/2 and deviates at long range.
    """
    if not corr_length > 0:
        raise ValueError("corr_length must be > 0")
    return xi * (1.0 - 1.0 / math.sqrt(1.0 + 2.0 * (dx / corr_length) ** 2))


def _homogeneous_damping_matrix(spec: DisorderSpec, n: int, t: float) -> np.ndarray:
    f_row = np.array([localization_function(spec, dj) for dj in range(n)])
    idx = np.arange(n)
    return np.exp(-(t**2) * f_row[np.abs(idx[:, None] - idx[None, :])])


def dephasing_closed_form(rho0: DensityMatrix, spec: DisorderSpec, t: float) -> DensityMatrix:
    """Commutator-free solution: rho_{jj'}(t) = exp(-t^2 F(j-j')) rho0_{jj'}.

    Populations are untouched (the diagonal damping factor is exactly 1).
    """
    damp = _homogeneous_damping_matrix(spec, rho0.n_sites, t)
    return DensityMatrix(rho0.elements * damp)


def rate_matrix(sigma: np.ndarray) -> np.ndarray:
    """R_{jj'} = Sigma_{jj'} - (Sigma_{jj} + Sigma_{j'j'})/2; exactly zero diagonal."""
    d = np.diag(sigma)
    return sigma - 0.5 * (d[:, None] + d[None, :])


def second_moment_dissipator(d: DissipatorSpec, rho, t: float) -> np.ndarray:
    """Dissipative d rho/dt contribution D(rho) = 2 t R o rho.

    Hermitian for Hermitian rho, traceless (zero diagonal factor), and
    vanishes at t = 0: the decoherence rates grow linearly in time.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    mat = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if mat.shape != (d.n_sites, d.n_sites):
        raise DimensionError(
            f"rho is {mat.shape}, dissipator expects ({d.n_sites}, {d.n_sites})"
        )
    return (2.0 * t) * rate_matrix(d.covariance) * mat


def dissipator_from_momentum_transfer(
    q_grid: np.ndarray, g_values: np.ndarray, rho: np.ndarray, t: float
) -> np.ndarray:
    """Rebuild D(rho) from G(q): D_{jj'} = 2 t (C(j-j') - C(0)) rho_{jj'}.

    C is recovered by inverse Fourier transform of G over the uniform BZ
    grid; used to verify the equivalence of the position-basis and
    momentum-kick representations.
    """
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    q = np.asarray(q_grid, dtype=float)
    dq = float(q[1] - q[0])
    deltas = np.arange(n)
    c = (np.exp(1j * np.outer(deltas, q)) @ np.asarray(g_values, dtype=complex)).real * dq
    idx = np.arange(n)
    c_matrix = c[np.abs(idx[:, None] - idx[None, :])]
    return (2.0 * t) * (c_matrix - c[0]) * rho


@dataclass(frozen=True)
class CptpReport:
    """Worst-case invariant defects observed along a propagation."""

    max_trace_error: float
    max_hermiticity_defect: float
    min_eigenvalue: float


@dataclass(frozen=True)
class MasterEquationResult:
    times: TimeGrid
    states: tuple[DensityMatrix, ...]
    invariants: CptpReport
    backend: str

    def state_at(self, t: float) -> DensityMatrix:
        return self.states[self.times.index_of(t)]

    @property
    def states_by_time(self) -> dict[float, DensityMatrix]:
        return {float(t): s for t, s in zip(self.times.times, self.states)}


def propagate_master_equation(
    lattice: LatticeSpec,
    disorder: DisorderSpec | DissipatorSpec,
    rho0: DensityMatrix,
    times: TimeGrid,
    step: float = DEFAULT_STEP,
    include_commutator: bool = True,
    backend: str = "auto",
) -> MasterEquationResult:
    """Integrate the master equation from t = 0 with classic RK4.

    The time-dependent rate (proportional to t) is evaluated at the RK4
    stage times. `include_commutator=False` sets Hbar = 0 (an explicitly
    zero-hopping average Hamiltonian), leaving the pure dephasing channel.
    Invariants (trace, hermiticity, positivity) are checked at every grid
    time; violations abort with time and magnitude.
    """
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    n = lattice.n_sites
    if rho0.n_sites != n:
        raise DimensionError(f"rho0 is {rho0.n_sites}x{rho0.n_sites}, lattice has {n}")
    if isinstance(disorder, DissipatorSpec):
        if disorder.n_sites != n:
            raise DimensionError("dissipator covariance does not match the lattice")
        sigma = disorder.covariance
    else:
        sigma = covariance_matrix(disorder, n)
    rate = np.ascontiguousarray(rate_matrix(sigma))
    hop = lattice.hopping if include_commutator else 0.0
    periodic = lattice.boundary == "periodic"
    propagate = get_rk4_propagate(backend)

    rho = np.array(rho0.elements, dtype=complex, order="C")
    t_now = 0.0
    max_trace_err = 0.0
    max_herm = 0.0
    min_eig = math.inf
    states: list[DensityMatrix] = []
    for t_target in times.times:
        span = t_target - t_now
        if span > 0:
            n_sub = max(1, int(math.ceil(span / step - 1e-12)))
            rho = propagate(rho, t_now, span / n_sub, n_sub, hop, rate, periodic)
            t_now = t_target
        trace_err = abs(complex(np.trace(rho)) - 1.0)
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        max_trace_err = max(max_trace_err, trace_err)
        max_herm = max(max_herm, herm)
        min_eig = min(min_eig, eig)
        if trace_err > TRACE_TOL:
            raise InvariantViolation(
                f"trace error {trace_err:.3e} at t={t_target}", t_target, trace_err
            )
        if herm > HERMITICITY_TOL:
            raise InvariantViolation(
                f"hermiticity defect {herm:.3e} at t={t_target}", t_target, herm
            )
        if eig < MIN_EIGENVALUE:
            raise InvariantViolation(
                f"negative eigenvalue {eig:.3e} at t={t_target}", t_target, eig
            )
        states.append(DensityMatrix(rho.copy()))
    return MasterEquationResult(
        times=times,
        states=tuple(states),
        invariants=CptpReport(max_trace_err, max_herm, min_eig),
        backend=resolve_backend_name(backend),
    )


def tmax_estimate(
    times: TimeGrid | np.ndarray,
    purities_me: np.ndarray,
    purities_ens: np.ndarray,
    threshold: float = 0.05,
) -> float:
    """Validity horizon: first time |p_me/p_ens - 1| exceeds `threshold`.

    Linearly interpolated between grid points; returns math.inf if the
    ratio never leaves the band.
    """
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    t = times.times if isinstance(times, TimeGrid) else np.asarray(times, dtype=float)
    p_me = np.asarray(purities_me, dtype=float)
    p_ens = np.asarray(purities_ens, dtype=float)
    if p_me.shape != t.shape or p_ens.shape != t.shape:
        raise DimensionError("purity series must live on the same time grid")
    dev = np.abs(p_me / p_ens - 1.0)
    over = np.nonzero(dev > threshold)[0]
    if over.size == 0:
        return math.inf
    i = int(over[0])
    if i == 0:
        return float(t[0])
    frac = (threshold - dev[i - 1]) / (dev[i] - dev[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))
