"""Disorder statistics: models, deterministic sampling, and verification.

Homogeneous models are characterized by the two-point correlation
C(dj) = <eps_j eps_{j+dj}> (in units J^2 with J = 1):

  - Anderson box, strength W: C(dj) = (W^2/12) delta_{dj,0}
    (i.i.d. uniform on [-W/2, W/2])
  - Gaussian-correlated, strength xi, length L: C(dj) = xi exp(-dj^2/L^2)

A CustomCovariance model carries an explicit PSD matrix and is not
translation-invariant in general. All models are zero-mean; a uniform
energy shift only contributes a global phase and is not supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError, FactorizationError, UnsupportedVariantError
from .model import DisorderRealization, LatticeSpec, _readonly

PSD_TOL = 1e-10


@dataclass(frozen=True)
class AndersonBox:
    """Uncorrelated box disorder; `strength` is W (in units of J)."""

    strength: float

    def __post_init__(self):
        if not self.strength > 0:
            raise ValueError(f"disorder strength W must be > 0, got {self.strength}")


@dataclass(frozen=True)
class GaussianCorrelated:
    """Stationary Gaussian disorder with Gaussian correlation profile.

    `strength` is the on-site variance xi (units J^2), `corr_length` the
    correlation length L (units of the lattice spacing).
    """

    strength: float
    corr_length: float

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError(f"correlation strength xi must be >= 0, got {self.strength}")
        if not self.corr_length > 0:
            raise ValueError(f"correlation length L must be > 0, got {self.corr_length}")


@dataclass(frozen=True)
class CustomCovariance:
    """Zero-mean Gaussian disorder with an explicit covariance matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.matrix, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DimensionError("covariance matrix must be square")
        if not np.allclose(sigma, sigma.T, atol=PSD_TOL, rtol=0.0):
            raise ValueError("covariance matrix must be symmetric")
        object.__setattr__(self, "matrix", _readonly(sigma))

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


DisorderSpec = Union[AndersonBox, GaussianCorrelated, CustomCovariance]
HOMOGENEOUS_VARIANTS = (AndersonBox, GaussianCorrelated)


def is_homogeneous(spec: DisorderSpec) -> bool:
    return isinstance(spec, HOMOGENEOUS_VARIANTS)


def correlation(spec: DisorderSpec, dj: int) -> float:
    """Two-point correlation C(dj) of a homogeneous disorder model."""
    if isinstance(spec, AndersonBox):
        return spec.strength**2 / 12.0 if dj == 0 else 0.0
    if isinstance(spec, GaussianCorrelated):
        return spec.strength * math.exp(-(float(dj) ** 2) / spec.corr_length**2)
    raise UnsupportedVariantError(
        "correlation is defined only for translation-invariant disorder"
    )


@dataclass(frozen=True)
class CorrelationProfile:
    """C(dj) tabulated on dj in [-(n-1), n-1]."""

    deltas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        deltas = _readonly(np.asarray(self.deltas, dtype=int))
        values = _readonly(np.asarray(self.values, dtype=float))
        if deltas.shape != values.shape:
            raise DimensionError("deltas and values must have equal length")
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "values", values)

    def at(self, dj: int) -> float:
        i = int(dj) - int(self.deltas[0])
        if i < 0 or i >= len(self.values):
            raise IndexError(f"dj={dj} outside tabulated range")
        return float(self.values[i])


def correlation_profile(spec: DisorderSpec, n_sites: int) -> CorrelationProfile:
    deltas = np.arange(-(n_sites - 1), n_sites)
    values = np.array([correlation(spec, int(d)) for d in deltas])
    return CorrelationProfile(deltas, values)


def covariance_matrix(spec: DisorderSpec, n: int) -> np.ndarray:
    """Sigma_{jj'} = C(j - j') for homogeneous variants, or the stored matrix."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if isinstance(spec, CustomCovariance):
        if spec.n_sites != n:
            raise DimensionError(
                f"custom covariance is {spec.n_sites}x{spec.n_sites}, requested n={n}"
            )
        return np.array(spec.matrix)
    offsets = np.arange(n)
    row = np.array([correlation(spec, int(d)) for d in offsets])
    return row[np.abs(offsets[:, None] - offsets[None, :])]


def _realization_rng(master_seed: int, index: int) -> np.random.Generator:
    # Counter-based stream: (master_seed, index) -> independent Philox stream,
    # reproducible under any parallel schedule.
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _gaussian_kernel(corr_length: float) -> np.ndarray:
    # Convolving i.i.d. normals with exp(-k^2/(2 s^2)), s = L/2, reproduces
    # the exp(-dj^2/L^2) profile up to truncation/discreteness error.
    s = corr_length / 2.0
    half = int(math.ceil(5.0 * s))
    k = np.arange(-half, half + 1, dtype=float)
    return np.exp(-(k**2) / (2.0 * s**2))


def sample_realization(
    spec: DisorderSpec, lattice: LatticeSpec, master_seed: int, index: int
) -> DisorderRealization:
    """Draw realization `index` of the ensemble seeded by `master_seed`.

    Deterministic in (master_seed, index): same inputs give bitwise-equal
    output regardless of call order or worker count.
    """
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    n = lattice.n_sites
    rng = _realization_rng(master_seed, index)
    if isinstance(spec, AndersonBox):
        w = spec.strength
        onsite = rng.uniform(-w / 2.0, w / 2.0, size=n)
    elif isinstance(spec, GaussianCorrelated):
        kernel = _gaussian_kernel(spec.corr_length)
        half = (len(kernel) - 1) // 2
        # Pad by the kernel half-width so edge sites see full-support noise.
        z = rng.standard_normal(n + 2 * half)
        amplitude = math.sqrt(spec.strength / float(np.sum(kernel**2)))
        onsite = amplitude * np.convolve(z, kernel, mode="valid")
    elif isinstance(spec, CustomCovariance):
        sigma = spec.matrix
        if sigma.shape[0] != n:
            raise DimensionError(
                f"custom covariance is {sigma.shape[0]}x{sigma.shape[0]}, lattice has {n}"
            )
        eigvals, eigvecs = np.linalg.eigh(sigma)
        scale = max(float(eigvals[-1]), 1.0)
        if eigvals[0] < -PSD_TOL * scale:
            raise FactorizationError(
                f"covariance not PSD: min eigenvalue {eigvals[0]:.3e}"
            )
        amp = np.sqrt(np.clip(eigvals, 0.0, None))
        onsite = eigvecs @ (amp * rng.standard_normal(n))
    else:
        raise UnsupportedVariantError(f"unknown disorder spec {type(spec).__name__}")
    return DisorderRealization(onsite=onsite, seed_tag=f"{master_seed}:{index}")


def disorder_label_fields(spec: DisorderSpec) -> tuple[str, float]:
    """Short label and leading strength parameter, for sweep tables."""
    if isinstance(spec, AndersonBox):
        return f"anderson_W={spec.strength:g}", spec.strength
    if isinstance(spec, GaussianCorrelated):
        return f"gaussian_xi={spec.strength:g}_L={spec.corr_length:g}", spec.strength
    return "custom", float("nan")


def empirical_covariance(realizations: list[DisorderRealization]) -> np.ndarray:
    """Sample covariance (divisor K) of a set of realizations."""
    if len(realizations) < 2:
        raise ValueError("need at least 2 realizations")
    lengths = {len(r) for r in realizations}
    if len(lengths) != 1:
        raise DimensionError(f"realizations have mixed lengths {sorted(lengths)}")
    x = np.stack([r.onsite for r in realizations])
    x = x - x.mean(axis=0)
    return (x.T @ x) / float(x.shape[0])
