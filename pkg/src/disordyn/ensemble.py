"""Numerically exact single-realization evolution and ensemble averaging.

Each realization is propagated by one dense real-symmetric
eigendecomposition of its Hamiltonian, reused for all output times (exact
to machine precision; this is the baseline the master equation is judged
against). The ensemble state rho_ens(t) = (1/K) sum_k |psi_k(t)><psi_k(t)|
is accumulated with a fixed-order pairwise-tree reduction so the result is
bitwise independent of the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .disorder import DisorderSpec, sample_realization
from .errors import DimensionError, NumericalError
from .model import (
    DensityMatrix,
    Hamiltonian,
    LatticeSpec,
    StateVector,
    _readonly,
    build_realization_hamiltonian,
)


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing output times (units hbar/J), starting at >= 0."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("times must be a non-empty 1D array")
        if not np.all(np.isfinite(t)):
            raise ValueError("times must be finite")
        if t[0] < 0:
            raise ValueError(f"first time must be >= 0, got {t[0]}")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", _readonly(t))

    @classmethod
    def regular(cls, start: float, stop: float, step: float) -> "TimeGrid":
        num = int(round((stop - start) / step)) + 1
        return cls(np.linspace(start, stop, num))

    def __len__(self) -> int:
        return self.times.size

    def __iter__(self):
        return iter(self.times)

    def index_of(self, t: float, atol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > atol:
            raise KeyError(f"time {t} not on the grid")
        return i

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


def pairwise_tree_sum(make: Callable[[int], np.ndarray], lo: int, hi: int) -> np.ndarray:
    """Sum make(lo) .. make(hi-1) with a fixed binary tree (midpoint split).

    The summation order depends only on (lo, hi), never on scheduling, which
    pins the floating-point result for any worker count.
    """
    if hi - lo == 1:
        return make(lo)
    mid = (lo + hi) // 2
    return pairwise_tree_sum(make, lo, mid) + pairwise_tree_sum(make, mid, hi)


def _evolve_states(h_dense: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """exp(-i H t) psi0 for every t, via one eigendecomposition of H."""
    try:
        w, v = np.linalg.eigh(h_dense)
    except np.linalg.LinAlgError as exc:
        sym_defect = float(np.max(np.abs(h_dense - h_dense.T)))
        raise NumericalError(
            f"eigendecomposition failed for n={h_dense.shape[0]} "
            f"(symmetry defect {sym_defect:.3e}, max |H| {np.max(np.abs(h_dense)):.3e})"
        ) from exc
    c = v.T @ psi0  # v is real orthogonal
    states = (np.exp(-1j * np.outer(times, w)) * c) @ v.T
    zero = times == 0.0
    if np.any(zero):
        states[zero] = psi0  # t=0 returns the initial state exactly
    return states


def evolve_unitary(h: Hamiltonian, psi0: StateVector, times: TimeGrid) -> list[StateVector]:
    """Unitary evolution of a pure state under a fixed Hamiltonian."""
    if h.n_sites != len(psi0):
        raise DimensionError(
            f"Hamiltonian has {h.n_sites} sites, state has {len(psi0)}"
        )
    states = _evolve_states(h.to_dense(), psi0.amplitudes, times.times)
    return [StateVector(s) for s in states]


@dataclass(frozen=True)
class EnsembleResult:
    """Disorder-averaged states rho_ens(t) with the run's full provenance.

    `purity_mc` is the ensemble purity computed from the Gram matrix of the
    K evolved states (an independent route to tr[rho^2]); `purity_sigma`
    is its leave-one-out jackknife standard error.
    """

    times: TimeGrid
    states: tuple[DensityMatrix, ...]
    k_realizations: int
    master_seed: int
    lattice: LatticeSpec
    disorder: DisorderSpec
    initial_state: StateVector
    purity_mc: np.ndarray = field(repr=False)
    purity_sigma: np.ndarray = field(repr=False)

    def state_at(self, t: float) -> DensityMatrix:
        return self.states[self.times.index_of(t)]

    @property
    def states_by_time(self) -> dict[float, DensityMatrix]:
        return {float(t): s for t, s in zip(self.times.times, self.states)}


def _gram_purity(states_t: np.ndarray) -> tuple[float, float]:
    """Ensemble purity and jackknife sigma from the overlap Gram matrix."""
    k = states_t.shape[0]
    gram = np.abs(states_t.conj() @ states_t.T) ** 2
    total = float(gram.sum())
    p = total / k**2
    if k < 2:
        return p, 0.0
    row = gram.sum(axis=1)
    diag = np.diag(gram)
    loo = (total - 2.0 * row + diag) / (k - 1) ** 2
    sigma2 = (k - 1) / k * float(np.sum((loo - loo.mean()) ** 2))
    return p, float(np.sqrt(sigma2))


def ensemble_average(
    lattice: LatticeSpec,
    disorder: DisorderSpec,
    psi0: StateVector,
    times: TimeGrid,
    k_realizations: int,
    master_seed: int,
    threads: int = 1,
    realization_indices: Sequence[int] | None = None,
) -> EnsembleResult:
    """Monte-Carlo average of K unitarily evolved realizations.

    Deterministic in (master_seed, K): realizations use counter-based
    per-index streams and the reduction follows a fixed pairwise tree, so
    `threads` affects speed only. `realization_indices` overrides the
    default range(K) (e.g. to evolve K copies of one seed in tests).
    """
    if k_realizations < 1:
        raise ValueError(f"K must be >= 1, got {k_realizations}")
    if lattice.n_sites != len(psi0):
        raise DimensionError(
            f"lattice has {lattice.n_sites} sites, state has {len(psi0)}"
        )
    indices = list(realization_indices) if realization_indices is not None else list(
        range(k_realizations)
    )
    if len(indices) != k_realizations:
        raise DimensionError("realization_indices length must equal K")

    psi = psi0.amplitudes
    tvals = times.times

    def run_one(index: int) -> np.ndarray:
        r = sample_realization(disorder, lattice, master_seed, index)
        h = build_realization_hamiltonian(lattice, r)
        return _evolve_states(h.to_dense(), psi, tvals)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_states = np.stack(list(pool.map(run_one, indices)))
    else:
        all_states = np.stack([run_one(i) for i in indices])

    k = k_realizations
    rho0 = np.outer(psi, psi.conj())
    states: list[DensityMatrix] = []
    purity_mc = np.empty(len(times))
    purity_sigma = np.empty(len(times))
    for ti, t in enumerate(tvals):
        if t == 0.0:
            # The initial state is realization-independent; averaging is a no-op.
            rho = rho0
        else:
            s_t = all_states[:, ti, :]
            rho = pairwise_tree_sum(
                lambda i: np.outer(s_t[i], s_t[i].conj()), 0, k
            ) / k
        states.append(DensityMatrix(rho))
        purity_mc[ti], purity_sigma[ti] = _gram_purity(all_states[:, ti, :])
    return EnsembleResult(
        times=times,
        states=tuple(states),
        k_realizations=k,
        master_seed=master_seed,
        lattice=lattice,
        disorder=disorder,
        initial_state=psi0,
        purity_mc=_readonly(purity_mc),
        purity_sigma=_readonly(purity_sigma),
    )
