# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled RK4 kernel for the covariance-dissipator master equation.

Mirrors disordyn.kernels.rk4_step_python operation-for-operation (same
floating-point expressions in the same order, complex arithmetic spelled
out on interleaved real/imag doubles), so compiled and Python backends
produce elementwise-identical results. Compile with -ffp-contract=off.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _deriv(double[:, :, ::1] out, double[:, :, ::1] rho, double t,
                 double hop, double[:, ::1] rate, bint periodic,
                 Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef double are, aim, a
    cdef double s = 2.0 * t
    for j in range(n):
        for k in range(n):
            # neighbour sums in the same order as the NumPy slice statements
            are = 0.0
            aim = 0.0
            if j > 0:
                are = are + rho[j - 1, k, 0]
                aim = aim + rho[j - 1, k, 1]
            if j < n - 1:
                are = are + rho[j + 1, k, 0]
                aim = aim + rho[j + 1, k, 1]
            if k > 0:
                are = are - rho[j, k - 1, 0]
                aim = aim - rho[j, k - 1, 1]
            if k < n - 1:
                are = are - rho[j, k + 1, 0]
                aim = aim - rho[j, k + 1, 1]
            if periodic:
                if j == 0:
                    are = are + rho[n - 1, k, 0]
                    aim = aim + rho[n - 1, k, 1]
                if j == n - 1:
                    are = are + rho[0, k, 0]
                    aim = aim + rho[0, k, 1]
                if k == 0:
                    are = are - rho[j, n - 1, 0]
                    aim = aim - rho[j, n - 1, 1]
                if k == n - 1:
                    are = are - rho[j, 0, 0]
                    aim = aim - rho[j, 0, 1]
            # (are + i aim) * (i hop), then add 2 t R o rho
            a = s * rate[j, k]
            out[j, k, 0] = (are * 0.0 - aim * hop) + rho[j, k, 0] * a
            out[j, k, 1] = (are * hop + aim * 0.0) + rho[j, k, 1] * a


cdef void _stage(double[:, :, ::1] out, double[:, :, ::1] rho, double c,
                 double[:, :, ::1] kmat, Py_ssize_t n) noexcept nogil:
    # out = rho + c * kmat
    cdef Py_ssize_t j, k
    for j in range(n):
        for k in range(n):
            out[j, k, 0] = rho[j, k, 0] + c * kmat[j, k, 0]
            out[j, k, 1] = rho[j, k, 1] + c * kmat[j, k, 1]


cdef void _rk4_into(double[:, :, ::1] out, double[:, :, ::1] rho, double t,
                    double dt, double hop, double[:, ::1] rate, bint periodic,
                    double[:, :, ::1] k1, double[:, :, ::1] k2,
                    double[:, :, ::1] k3, double[:, :, ::1] k4,
                    double[:, :, ::1] tmp, Py_ssize_t n) noexcept nogil:
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef Py_ssize_t j, k
    cdef double ure, uim
    _deriv(k1, rho, t, hop, rate, periodic, n)
    _stage(tmp, rho, half, k1, n)
    _deriv(k2, tmp, t + half, hop, rate, periodic, n)
    _stage(tmp, rho, half, k2, n)
    _deriv(k3, tmp, t + half, hop, rate, periodic, n)
    _stage(tmp, rho, dt, k3, n)
    _deriv(k4, tmp, t + dt, hop, rate, periodic, n)
    for j in range(n):
        for k in range(n):
            # u = k1 + 2 k2; u += 2 k3; u += k4; out = rho + (dt/6) u
            ure = k1[j, k, 0] + 2.0 * k2[j, k, 0]
            uim = k1[j, k, 1] + 2.0 * k2[j, k, 1]
            ure = ure + 2.0 * k3[j, k, 0]
            uim = uim + 2.0 * k3[j, k, 1]
            ure = ure + k4[j, k, 0]
            uim = uim + k4[j, k, 1]
            out[j, k, 0] = rho[j, k, 0] + sixth * ure
            out[j, k, 1] = rho[j, k, 1] + sixth * uim


cdef _prepare(rho, rate):
    rho_arr = np.ascontiguousarray(rho, dtype=np.complex128)
    rate_arr = np.ascontiguousarray(rate, dtype=np.float64)
    n = rho_arr.shape[0]
    if rho_arr.shape[1] != n or rate_arr.shape[0] != n or rate_arr.shape[1] != n:
        raise ValueError("rho and rate must be square matrices of equal size")
    return rho_arr, rate_arr, n


def rk4_step(rho, double t, double dt, double hop, rate, bint periodic):
    """One classic RK4 step; see kernels.rk4_step_python for the contract."""
    rho_arr, rate_arr, n_py = _prepare(rho, rate)
    cdef Py_ssize_t n = n_py
    out = np.empty_like(rho_arr)
    work = [np.empty_like(rho_arr) for _ in range(5)]

    cdef double[:, :, ::1] rho_v = rho_arr.view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] out_v = out.view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k1_v = work[0].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k2_v = work[1].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k3_v = work[2].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k4_v = work[3].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] tmp_v = work[4].view(np.float64).reshape(n, n, 2)
    cdef double[:, ::1] rate_v = rate_arr

    with nogil:
        _rk4_into(out_v, rho_v, t, dt, hop, rate_v, periodic,
                  k1_v, k2_v, k3_v, k4_v, tmp_v, n)
    return out


def rk4_propagate(rho, double t0, double dt, Py_ssize_t n_steps, double hop,
                  rate, bint periodic):
    """n_steps RK4 steps from t0, reusing one workspace for the whole run.

    Matches a loop of rk4_step with t accumulated as t += dt."""
    rho_arr, rate_arr, n_py = _prepare(rho, rate)
    cdef Py_ssize_t n = n_py
    cur = rho_arr.copy()
    nxt = np.empty_like(rho_arr)
    work = [np.empty_like(rho_arr) for _ in range(5)]

    cdef double[:, :, ::1] cur_v = cur.view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] nxt_v = nxt.view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k1_v = work[0].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k2_v = work[1].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k3_v = work[2].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] k4_v = work[3].view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] tmp_v = work[4].view(np.float64).reshape(n, n, 2)
    cdef double[:, ::1] rate_v = rate_arr
    cdef double[:, :, ::1] swap_v

    cdef double t = t0
    cdef Py_ssize_t i
    with nogil:
        for i in range(n_steps):
            _rk4_into(nxt_v, cur_v, t, dt, hop, rate_v, periodic,
                      k1_v, k2_v, k3_v, k4_v, tmp_v, n)
            t = t + dt
            swap_v = cur_v
            cur_v = nxt_v
            nxt_v = swap_v
    return cur if n_steps % 2 == 0 else nxt
