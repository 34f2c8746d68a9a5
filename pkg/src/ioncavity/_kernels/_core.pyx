# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: RK4 stepping and quantum-trajectory propagation.

Contracts match ``fallback.py`` exactly; see there for semantics.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


class JumpCapError(RuntimeError):
    """Total one-step jump probability exceeded the configured cap."""


cdef inline void _matvec(const double complex[:, ::1] m,
                         const double complex* x,
                         double complex* out,
                         Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double complex acc
    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + m[i, j] * x[j]
        out[i] = acc


def rk4_lindblad(double complex[:, ::1] liouvillian,
                 double complex[::1] y0,
                 Py_ssize_t dim,
                 long long[::1] n_sub,
                 double[::1] dt_sub):
    cdef Py_ssize_t size = y0.shape[0]
    cdef Py_ssize_t n_int = n_sub.shape[0]
    out_arr = np.empty((n_int + 1, size), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    work_arr = np.empty((5, size), dtype=np.complex128)
    cdef double complex[:, ::1] w = work_arr
    cdef double complex[::1] y = np.array(y0, dtype=np.complex128)
    cdef Py_ssize_t k, s, i, a, b
    cdef double h
    cdef double complex tmp

    for i in range(size):
        out[0, i] = y[i]
    with nogil:
        for k in range(n_int):
            h = dt_sub[k]
            for s in range(n_sub[k]):
                _matvec(liouvillian, &y[0], &w[0, 0], size)          # k1
                for i in range(size):
                    w[4, i] = y[i] + 0.5 * h * w[0, i]
                _matvec(liouvillian, &w[4, 0], &w[1, 0], size)       # k2
                for i in range(size):
                    w[4, i] = y[i] + 0.5 * h * w[1, i]
                _matvec(liouvillian, &w[4, 0], &w[2, 0], size)       # k3
                for i in range(size):
                    w[4, i] = y[i] + h * w[2, i]
                _matvec(liouvillian, &w[4, 0], &w[3, 0], size)       # k4
                for i in range(size):
                    y[i] = y[i] + (h / 6.0) * (w[0, i] + 2.0 * w[1, i]
                                               + 2.0 * w[2, i] + w[3, i])
                # restore Hermiticity of the dim x dim matrix behind y
                for a in range(dim):
                    for b in range(a, dim):
                        tmp = 0.5 * (y[a * dim + b] + y[b * dim + a].conjugate())
                        y[a * dim + b] = tmp
                        y[b * dim + a] = tmp.conjugate()
            for i in range(size):
                out[k + 1, i] = y[i]
    return out_arr


def mcwf_chunk(double complex[:, :, ::1] u_steps,
               long long[::1] n_sub,
               double[::1] dt_sub,
               double complex[:, :, ::1] c_ops,
               unsigned char[::1] is_rank1,
               double complex[:, ::1] bras,
               double complex[:, ::1] kets,
               double[::1] rates_ang,
               double complex[::1] psi0,
               double[:, ::1] uniforms,
               double p_max):
    cdef Py_ssize_t n_traj = uniforms.shape[0]
    cdef Py_ssize_t n_int = n_sub.shape[0]
    cdef Py_ssize_t dim = psi0.shape[0]
    cdef Py_ssize_t n_ch = rates_ang.shape[0]

    states_arr = np.empty((n_traj, n_int + 1, dim), dtype=np.complex128)
    cdef double complex[:, :, ::1] states = states_arr
    psi_arr = np.empty(dim, dtype=np.complex128)
    tmp_arr = np.empty(dim, dtype=np.complex128)
    dp_arr = np.empty(n_ch if n_ch else 1, dtype=np.float64)
    amp_arr = np.empty(n_ch if n_ch else 1, dtype=np.complex128)
    cdef double complex[::1] psi = psi_arr
    cdef double complex[::1] tmp = tmp_arr
    cdef double[::1] dp = dp_arr
    cdef double complex[::1] amps = amp_arr

    jump_traj, jump_step, jump_channel = [], [], []
    cdef Py_ssize_t traj, k, s, i, j, m, g, ch
    cdef double dt, total, u, cum, norm, cap_excess
    cdef double complex z

    cap_excess = -1.0
    for traj in range(n_traj):
        for i in range(dim):
            psi[i] = psi0[i]
            states[traj, 0, i] = psi0[i]
        g = 0
        for k in range(n_int):
            dt = dt_sub[k]
            for s in range(n_sub[k]):
                total = 0.0
                for m in range(n_ch):
                    if is_rank1[m]:
                        z = 0
                        for i in range(dim):
                            z = z + bras[m, i].conjugate() * psi[i]
                        amps[m] = z
                        dp[m] = (z.real * z.real + z.imag * z.imag) \
                            * rates_ang[m] * dt
                    else:
                        dp[m] = 0.0
                        for i in range(dim):
                            z = 0
                            for j in range(dim):
                                z = z + c_ops[m, i, j] * psi[j]
                            dp[m] = dp[m] + (z.real * z.real + z.imag * z.imag)
                        dp[m] = dp[m] * rates_ang[m] * dt
                    total = total + dp[m]
                if total > p_max:
                    cap_excess = total
                    break
                u = uniforms[traj, g]
                if u < total:
                    cum = 0.0
                    ch = n_ch - 1
                    for m in range(n_ch):
                        cum = cum + dp[m]
                        if u < cum:
                            ch = m
                            break
                    if is_rank1[ch]:
                        z = amps[ch]
                        norm = abs(z)
                        for i in range(dim):
                            psi[i] = kets[ch, i] * (z / norm if norm > 0 else 1.0)
                    else:
                        for i in range(dim):
                            z = 0
                            for j in range(dim):
                                z = z + c_ops[ch, i, j] * psi[j]
                            tmp[i] = z
                        for i in range(dim):
                            psi[i] = tmp[i]
                    jump_traj.append(traj)
                    jump_step.append(g)
                    jump_channel.append(ch)
                else:
                    _matvec(u_steps[k], &psi[0], &tmp[0], dim)
                    for i in range(dim):
                        psi[i] = tmp[i]
                norm = 0.0
                for i in range(dim):
                    norm = norm + psi[i].real * psi[i].real \
                        + psi[i].imag * psi[i].imag
                norm = norm ** 0.5
                for i in range(dim):
                    psi[i] = psi[i] / norm
                g = g + 1
            if cap_excess >= 0.0:
                break
            for i in range(dim):
                states[traj, k + 1, i] = psi[i]
        if cap_excess >= 0.0:
            break

    if cap_excess >= 0.0:
        raise JumpCapError(
            f"one-step jump probability {cap_excess:.3g} exceeds cap {p_max:g}"
        )
    return (states_arr,
            np.asarray(jump_traj, dtype=np.int64),
            np.asarray(jump_step, dtype=np.int64),
            np.asarray(jump_channel, dtype=np.int64))
