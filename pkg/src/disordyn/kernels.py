"""Hot kernel of the master-equation stepper, with backend selection.

The generator integrated here is

    d rho / dt = -i [Hbar, rho] + 2 t * R o rho      (elementwise product o)

with Hbar the tridiagonal hopping Hamiltonian and R the covariance-derived
rate matrix (zero diagonal). A Cython extension (`disordyn._core`) fuses
the tridiagonal commutator, the elementwise damping, and the RK4 stage
algebra into one pass over the matrix; this module provides the NumPy
reference implementation and picks the compiled core at import time when
available.

Both backends perform the same floating-point operations in the same
order (the extension is compiled with -ffp-contract=off), so results are
elementwise identical and the backend choice affects speed only.
"""

from __future__ import annotations

import numpy as np

try:
    from . import _core
except ImportError:  # extension not built; fall back to NumPy
    _core = None


def _deriv(rho: np.ndarray, t: float, hop: float, rate: np.ndarray, periodic: bool) -> np.ndarray:
    # Statement order fixed; the compiled kernel replicates it exactly.
    d = np.zeros_like(rho)
    d[1:, :] += rho[:-1, :]
    d[:-1, :] += rho[1:, :]
    d[:, 1:] -= rho[:, :-1]
    d[:, :-1] -= rho[:, 1:]
    if periodic:
        d[0, :] += rho[-1, :]
        d[-1, :] += rho[0, :]
        d[:, 0] -= rho[:, -1]
        d[:, -1] -= rho[:, 0]
    d *= 1j * hop
    d += (2.0 * t) * rate * rho
    return d


def rk4_step_python(
    rho: np.ndarray, t: float, dt: float, hop: float, rate: np.ndarray, periodic: bool
) -> np.ndarray:
    """One classic RK4 step with the rate evaluated at stage times."""
    half = 0.5 * dt
    k1 = _deriv(rho, t, hop, rate, periodic)
    k2 = _deriv(rho + half * k1, t + half, hop, rate, periodic)
    k3 = _deriv(rho + half * k2, t + half, hop, rate, periodic)
    k4 = _deriv(rho + dt * k3, t + dt, hop, rate, periodic)
    u = k1 + 2.0 * k2
    u += 2.0 * k3
    u += k4
    return rho + (dt / 6.0) * u


def rk4_propagate_python(
    rho: np.ndarray,
    t0: float,
    dt: float,
    n_steps: int,
    hop: float,
    rate: np.ndarray,
    periodic: bool,
) -> np.ndarray:
    """n_steps RK4 steps from t0 with t accumulated as t += dt."""
    t = t0
    out = np.array(rho, dtype=complex, copy=True)
    for _ in range(n_steps):
        out = rk4_step_python(out, t, dt, hop, rate, periodic)
        t = t + dt
    return out


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _core is not None else ("python",)


def default_backend() -> str:
    return "compiled" if _core is not None else "python"


def get_rk4_step(backend: str = "auto"):
    """Resolve a backend name to its rk4_step callable."""
    if backend == "auto":
        backend = default_backend()
    if backend == "compiled":
        if _core is None:
            raise ValueError("compiled kernel requested but disordyn._core is not built")
        return _core.rk4_step
    if backend == "python":
        return rk4_step_python
    raise ValueError(f"unknown backend {backend!r}; use 'auto', 'compiled' or 'python'")


def get_rk4_propagate(backend: str = "auto"):
    """Resolve a backend name to its multi-step propagate callable."""
    if backend == "auto":
        backend = default_backend()
    if backend == "compiled":
        if _core is None:
            raise ValueError("compiled kernel requested but disordyn._core is not built")
        return _core.rk4_propagate
    if backend == "python":
        return rk4_propagate_python
    raise ValueError(f"unknown backend {backend!r}; use 'auto', 'compiled' or 'python'")


def resolve_backend_name(backend: str = "auto") -> str:
    if backend == "auto":
        return default_backend()
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend
