"""Pure-NumPy implementations of the hot inner loops.

Same contracts as the compiled twins in ``_core.pyx``; trajectory i is a
pure function of its own row of pregenerated uniforms, so results do not
depend on chunking or execution order.  The trajectory loop is
vectorized across the whole chunk, one small matmul per substep.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


class JumpCapError(RuntimeError):
    """Total one-step jump probability exceeded the configured cap."""


def rk4_lindblad(liouvillian, y0, dim, n_sub, dt_sub):
    """Classic fixed-step 4th-order propagation of vec(rho).

    ``n_sub[k]`` equal substeps of size ``dt_sub[k]`` cover interval k;
    the state is re-symmetrized after every step and recorded at the
    interval boundaries.  Returns a (K+1, dim*dim) array.
    """
    lv = np.ascontiguousarray(liouvillian)
    y = np.array(y0, dtype=complex)
    out = np.empty((len(n_sub) + 1, y.size), dtype=complex)
    out[0] = y
    for k in range(len(n_sub)):
        h = dt_sub[k]
        for _ in range(int(n_sub[k])):
            k1 = lv @ y
            k2 = lv @ (y + 0.5 * h * k1)
            k3 = lv @ (y + 0.5 * h * k2)
            k4 = lv @ (y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            rho = y.reshape(dim, dim)
            y = (0.5 * (rho + rho.conj().T)).reshape(-1)
        out[k + 1] = y
    return out


def _jump_probabilities(psi, c_ops, is_rank1, bras_h, rates_dt):
    """(dp, amps): dp[n, m] per trajectory/channel; amps only when all
    channels are rank one (then amps[n, m] = <bra_m|psi_n>)."""
    if bras_h is not None:
        amps = psi @ bras_h
        return (np.abs(amps) ** 2) * rates_dt, amps
    n_ch = rates_dt.size
    dp = np.empty((psi.shape[0], n_ch))
    for m in range(n_ch):
        x = psi @ c_ops[m].T
        dp[:, m] = (np.abs(x) ** 2).sum(axis=1) * rates_dt[m]
    return dp, None


def mcwf_chunk(
    u_steps,
    n_sub,
    dt_sub,
    c_ops,
    is_rank1,
    bras,
    kets,
    rates_ang,
    psi0,
    uniforms,
    p_max,
):
    """Propagate a chunk of quantum trajectories over the full grid.

    Per substep and trajectory: first-order jump probabilities
    ``dp_m = rate_m ||C_m psi||^2 dt`` decide between applying channel m
    (selected proportionally to dp_m from a single uniform draw) and the
    precomputed no-jump propagator; either way the state is renormalized.
    Rank-one channels ``|ket><bra|`` use inner products instead of
    matrix-vector products.

    Returns (states, jump_traj, jump_step, jump_channel); step indices
    are global substep counters.
    """
    n_traj = uniforms.shape[0]
    n_grid = len(n_sub) + 1
    dim = psi0.size
    n_ch = rates_ang.size
    states = np.empty((n_traj, n_grid, dim), dtype=complex)
    psi = np.broadcast_to(psi0, (n_traj, dim)).copy()
    states[:, 0, :] = psi

    bras_h = bras.conj().T if bool(np.all(is_rank1)) and n_ch else None
    jump_traj, jump_step, jump_channel = [], [], []

    g = 0
    for k in range(len(n_sub)):
        u_mat_t = u_steps[k].T  # right-multiplying by U^T applies U to rows
        rates_dt = rates_ang * dt_sub[k]
        for _ in range(int(n_sub[k])):
            pre = psi
            dp, amps = _jump_probabilities(pre, c_ops, is_rank1, bras_h, rates_dt)
            total = dp.sum(axis=1)
            if np.any(total > p_max):
                raise JumpCapError(
                    f"one-step jump probability {total.max():.3g} exceeds "
                    f"cap {p_max:g}"
                )
            psi = pre @ u_mat_t
            rows = np.nonzero(uniforms[:, g] < total)[0]
            for row in rows:
                cum = np.cumsum(dp[row])
                ch = min(int(np.searchsorted(cum, uniforms[row, g], side="right")),
                         n_ch - 1)
                if is_rank1[ch]:
                    z = amps[row, ch] if amps is not None else np.vdot(bras[ch], pre[row])
                    psi[row] = kets[ch] * (z / abs(z) if z != 0 else 1.0)
                else:
                    y = c_ops[ch] @ pre[row]
                    norm = np.linalg.norm(y)
                    psi[row] = y / norm if norm > 0 else kets[ch]
                jump_traj.append(int(row))
                jump_step.append(g)
                jump_channel.append(ch)
            psi /= np.linalg.norm(psi, axis=1)[:, None]
            g += 1
        states[:, k + 1, :] = psi

    return (
        states,
        np.asarray(jump_traj, dtype=np.int64),
        np.asarray(jump_step, dtype=np.int64),
        np.asarray(jump_channel, dtype=np.int64),
    )
