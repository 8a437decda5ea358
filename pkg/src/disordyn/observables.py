"""Scalar and array diagnostics: purity, momentum distribution, visibility,
coherence ratio maps, and the finite-lattice edge guard."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UndefinedVisibilityError
from .model import DensityMatrix, _readonly


def purity(rho: DensityMatrix) -> float:
    """tr[rho^2], computed as the squared Frobenius norm (Hermitian identity)."""
    r = rho.elements
    return float(np.vdot(r, r).real)


def purity_series(states) -> np.ndarray:
    return np.array([purity(s) for s in states])


def bz_grid(n: int) -> np.ndarray:
    """n-point Brillouin-zone grid q_k = 2 pi k / n - pi on [-pi, pi)."""
    return 2.0 * math.pi * np.arange(n) / n - math.pi


def momentum_distribution(rho: DensityMatrix) -> np.ndarray:
    """n(q_k) = (1/n) sum_{jj'} exp(-i q_k (j-j')) rho_{jj'} on bz_grid(n).

    Nonnegative (rho is PSD) and sums to 1 (it samples tr[rho] on the
    discrete grid).
    """
    n = rho.n_sites
    u = np.exp(1j * np.outer(bz_grid(n), np.arange(n)))
    a = u.conj() @ rho.elements
    return np.einsum("kj,kj->k", a, u).real / n


def fringe_window(separation: float, periods: float = 2.0) -> tuple[float, float]:
    """Symmetric q-window around 0 spanning `periods` fringe periods."""
    half = periods * math.pi / separation
    return (-half, half)


def visibility(n_q: np.ndarray, q_grid: np.ndarray, window: tuple[float, float]) -> float:
    """(max - min)/(max + min) of n(q) over the window.

    The caller must choose a window containing at least one full fringe
    period (see fringe_window).
    """
    n_q = np.asarray(n_q, dtype=float)
    q = np.asarray(q_grid, dtype=float)
    if n_q.shape != q.shape:
        raise DimensionError("n_q and q_grid must have equal length")
    lo, hi = window
    sel = n_q[(q >= lo) & (q <= hi)]
    if sel.size == 0:
        raise UndefinedVisibilityError(f"no grid points inside window [{lo}, {hi}]")
    mx = float(sel.max())
    mn = float(sel.min())
    if mx + mn <= 0.0:
        raise UndefinedVisibilityError("flat-zero signal in window")
    return (mx - mn) / (mx + mn)


def fringe_period(n_q: np.ndarray, min_shift: int = 2) -> tuple[float, int]:
    """Dominant fringe period of n(q), measured in the displacement domain.

    sum_k n(q_k) e^{i q_k d} recovers the total coherence at site
    displacement d; the fringe component of a two-packet state peaks at
    the packet separation. `min_shift` excludes the single-packet envelope
    (displacements inside one packet). Returns (period 2 pi / d_best, d_best).
    """
    n_q = np.asarray(n_q, dtype=float)
    n = n_q.size
    if not 1 <= min_shift <= n // 2:
        raise ValueError(f"min_shift must be in [1, {n // 2}], got {min_shift}")
    q = bz_grid(n)
    shifts = np.arange(min_shift, n // 2 + 1)
    weights = np.abs(np.exp(1j * np.outer(shifts, q)) @ n_q)
    d_best = int(shifts[int(np.argmax(weights))])
    return 2.0 * math.pi / d_best, d_best


@dataclass(frozen=True)
class RatioMap:
    """Elementwise |rho_a|/|rho_b| with sub-floor entries flagged, not dropped."""

    values: np.ndarray
    mask: np.ndarray  # True where |rho_b| < floor (entry undefined)
    floor: float
    masked_count: int
    degenerate: bool

    def unmasked(self) -> np.ndarray:
        return self.values[~self.mask]


def coherence_ratio_map(
    rho_a: DensityMatrix | np.ndarray,
    rho_b: DensityMatrix | np.ndarray,
    floor: float | None = None,
) -> RatioMap:
    """Ratio of coherence magnitudes, defined where |rho_b| >= floor.

    floor defaults to 1e-4 * max|rho_b| (keeps sampling noise in
    near-zero elements from dominating the map).
    """
    a = rho_a.elements if isinstance(rho_a, DensityMatrix) else np.asarray(rho_a)
    b = rho_b.elements if isinstance(rho_b, DensityMatrix) else np.asarray(rho_b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    abs_b = np.abs(b)
    if floor is None:
        floor = 1e-4 * float(abs_b.max())
    if not floor > 0:
        raise ValueError("floor must be > 0")
    mask = abs_b < floor
    values = np.zeros_like(abs_b)
    np.divide(np.abs(a), abs_b, out=values, where=~mask)
    degenerate = bool(mask.all())
    if degenerate:
        warnings.warn("coherence ratio map is fully masked (degenerate comparison)")
    return RatioMap(
        values=_readonly(values),
        mask=_readonly(mask),
        floor=float(floor),
        masked_count=int(mask.sum()),
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Agreement summary between two propagated states/pipelines."""

    ratio_map: RatioMap
    purity_ratio_times: np.ndarray | None = None
    purity_ratio_values: np.ndarray | None = None
    tmax: float = math.inf
    meta: dict = field(default_factory=dict)


def edge_leakage(rho: DensityMatrix, margin: int) -> float:
    """Total population on the outer `margin` sites at each lattice end."""
    n = rho.n_sites
    if not 0 < margin < n / 2:
        raise ValueError(f"margin must be in (0, {n/2}), got {margin}")
    diag = rho.diagonal()
    return float(diag[:margin].sum() + diag[-margin:].sum())
