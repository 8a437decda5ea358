"""Lattice geometry, tight-binding Hamiltonians, and state containers.

Units: hbar = 1, lattice spacing a = 1, and energies in units of the
hopping constant J (J = 1 unless overridden), so times are in hbar/J and
momenta live on the first Brillouin zone [-pi, pi).

All containers are immutable after construction (arrays are marked
read-only) and safe to share across worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

NORM_TOL = 1e-10
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
MIN_EIGENVALUE = -1e-8

_BOUNDARIES = ("open", "periodic")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LatticeSpec:
    """Finite 1D lattice: site count, hopping J, spacing a, boundary."""

    n_sites: int
    hopping: float = 1.0
    spacing: float = 1.0
    boundary: str = "open"

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if not self.hopping > 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}")

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_sites)


@dataclass(frozen=True)
class DisorderRealization:
    """One draw of the random on-site energies, tagged with its seed."""

    onsite: np.ndarray
    seed_tag: str

    def __post_init__(self):
        onsite = np.asarray(self.onsite, dtype=float)
        if onsite.ndim != 1:
            raise DimensionError("onsite energies must be a 1D vector")
        if not np.all(np.isfinite(onsite)):
            raise ValueError("onsite energies must be finite")
        object.__setattr__(self, "onsite", _readonly(onsite))

    def __len__(self) -> int:
        return self.onsite.shape[0]


@dataclass(frozen=True)
class Hamiltonian:
    """Real-symmetric tight-binding Hamiltonian.

    `off_diagonal` is the uniform nearest-neighbour amplitude (-J for the
    models in scope); `diagonal` holds the on-site energies. The average
    Hamiltonian has an identically zero diagonal (zero-mean disorder).
    """

    diagonal: np.ndarray
    off_diagonal: float
    boundary: str = "open"

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=float)
        if diag.ndim != 1 or diag.shape[0] < 2:
            raise DimensionError("diagonal must be a 1D vector of length >= 2")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}")
        object.__setattr__(self, "diagonal", _readonly(diag))

    @property
    def n_sites(self) -> int:
        return self.diagonal.shape[0]

    @property
    def is_average(self) -> bool:
        return bool(np.all(self.diagonal == 0.0))

    def to_dense(self) -> np.ndarray:
        """Dense matrix; exactly symmetric by construction."""
        n = self.n_sites
        h = np.zeros((n, n), dtype=float)
        np.fill_diagonal(h, self.diagonal)
        idx = np.arange(n - 1)
        h[idx, idx + 1] = self.off_diagonal
        h[idx + 1, idx] = self.off_diagonal
        if self.boundary == "periodic":
            h[0, n - 1] = self.off_diagonal
            h[n - 1, 0] = self.off_diagonal
        return h


@dataclass(frozen=True)
class StateVector:
    """Unit-norm pure state on the lattice."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1:
            raise DimensionError("amplitudes must be a 1D vector")
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _readonly(amp))

    def __len__(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state of the lattice."""

    elements: np.ndarray
    _min_eig: float = field(default=math.nan, repr=False, compare=False)

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionError("density matrix must be square")
        defect = float(np.max(np.abs(rho - rho.conj().T)))
        if defect > HERMITICITY_TOL:
            raise ValueError(f"hermiticity defect {defect:.3e} exceeds {HERMITICITY_TOL}")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {trace!r} deviates from 1 beyond {TRACE_TOL}")
        min_eig = float(np.linalg.eigvalsh(rho)[0])
        if min_eig < MIN_EIGENVALUE:
            raise ValueError(f"minimum eigenvalue {min_eig:.3e} below {MIN_EIGENVALUE}")
        object.__setattr__(self, "elements", _readonly(rho))
        object.__setattr__(self, "_min_eig", min_eig)

    @classmethod
    def from_pure(cls, state: StateVector) -> "DensityMatrix":
        amp = state.amplitudes
        return cls(np.outer(amp, amp.conj()))

    @property
    def n_sites(self) -> int:
        return self.elements.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return self._min_eig

    def diagonal(self) -> np.ndarray:
        return self.elements.diagonal().real


def build_average_hamiltonian(spec: LatticeSpec) -> Hamiltonian:
    """Disorder-averaged Hamiltonian: pure hopping, zero diagonal."""
    return Hamiltonian(
        diagonal=np.zeros(spec.n_sites),
        off_diagonal=-spec.hopping,
        boundary=spec.boundary,
    )


def build_realization_hamiltonian(spec: LatticeSpec, r: DisorderRealization) -> Hamiltonian:
    """Hamiltonian of a single disorder realization: hopping + diag(eps)."""
    if len(r) != spec.n_sites:
        raise DimensionError(
            f"realization has {len(r)} sites, lattice expects {spec.n_sites}"
        )
    return Hamiltonian(
        diagonal=r.onsite,
        off_diagonal=-spec.hopping,
        boundary=spec.boundary,
    )


def gaussian_wavepacket(
    spec: LatticeSpec, center: float, width: float, momentum: float = 0.0
) -> StateVector:
    """Gaussian packet exp(-(j-center)^2/(4 width^2)) * exp(i momentum j).

    `width` is the position-space standard deviation in sites; `momentum`
    is reduced to the first Brillouin zone (phases are 2pi-periodic on an
    integer lattice).
    """
    if not width > 0:
        raise ValueError(f"width must be > 0, got {width}")
    n = spec.n_sites
    if center < -5.0 * width or center > (n - 1) + 5.0 * width:
        raise ValueError(f"center {center} lies too far outside the lattice")
    momentum = (momentum + math.pi) % (2.0 * math.pi) - math.pi
    j = np.arange(n, dtype=float)
    envelope = np.exp(-((j - center) ** 2) / (4.0 * width**2))
    amp = envelope * np.exp(1j * momentum * j)
    norm = np.linalg.norm(amp)
    if not norm > 1e-150:
        raise ValueError("wavepacket amplitude underflows on this lattice")
    return StateVector(amp / norm)


def superposition_state(a: StateVector, b: StateVector, relative_phase: float = 0.0) -> StateVector:
    """Normalized (a + e^{i phi} b); rejects a destructive zero sum."""
    if len(a) != len(b):
        raise DimensionError("superposition requires equal-length states")
    combined = a.amplitudes + np.exp(1j * relative_phase) * b.amplitudes
    norm = np.linalg.norm(combined)
    if norm < 1e-10:
        raise ValueError("superposition vanishes (a = -e^{i phi} b)")
    return StateVector(combined / norm)


def double_slit_state(
    spec: LatticeSpec, separation: float, width: float, relative_phase: float = 0.0
) -> StateVector:
    """Two Gaussian packets centred at midpoint +- separation/2."""
    mid = (spec.n_sites - 1) / 2.0
    left = gaussian_wavepacket(spec, mid - separation / 2.0, width)
    right = gaussian_wavepacket(spec, mid + separation / 2.0, width)
    return superposition_state(left, right, relative_phase)
