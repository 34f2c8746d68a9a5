"""Dynamics engines: deterministic master-equation integration and the
stochastic wave-function (quantum-trajectory) ensemble.

Both engines consume a :class:`LindbladSystem` (Hermitian generator plus
weighted jump channels) on any of the simulation bases.  The
deterministic integrator doubles as the brute-force oracle for every
statistical result produced by the trajectory engine.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .observables import atomic_observables, state_observables
from .params import TWO_PI
from .reduction import JumpChannel
from .spaces import DensityMatrix, HilbertSpace, LinearOp, SpaceKind
from .tables import TimeSeriesTable

DEFAULT_P_MAX = 0.01
#: default RK4 step is min(STEP_FACTOR / max_rate, grid spacing / 10)
STEP_FACTOR = 0.002


class IntegrationError(RuntimeError):
    """Numerical failure: conservation drift, cap overflow, step underflow."""


class PositivityError(IntegrationError):
    """The integrated state developed eigenvalues below -1e-8."""


@dataclass(frozen=True)
class LindbladSystem:
    """A master equation: Hermitian generator plus decay channels.

    ``h_t``/``c_t`` optionally supply explicitly time-dependent
    replacements for the Hamiltonian and the channel operators (used for
    the pre-rotation frame); only the deterministic integrator accepts
    them.
    """

    space: HilbertSpace
    hamiltonian: LinearOp
    channels: tuple[JumpChannel, ...] = ()
    h_t: Callable[[float], np.ndarray] | None = None
    c_t: Callable[[float], list[np.ndarray]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.hamiltonian.space.dim != self.space.dim:
            raise ValueError("Hamiltonian space mismatch")
        if self.h_t is None and not self.hamiltonian.is_hermitian(1e-10):
            raise ValueError("Hamiltonian must be Hermitian")
        for ch in self.channels:
            if ch.op.space.dim != self.space.dim:
                raise ValueError(f"channel {ch.label}: space mismatch")
            if ch.rate < 0:
                raise ValueError(f"channel {ch.label}: negative rate")

    @property
    def max_rate(self) -> float:
        """Conservative scale ("/2 pi" MHz) bounding the generator spectrum:
        Gershgorin radius of H plus the weighted channel norms."""
        h = self.hamiltonian.matrix
        gersh = float(np.max(np.abs(h).sum(axis=1)))
        rates = sum(ch.rate * ch.op.norm() ** 2 for ch in self.channels)
        return gersh + rates

    def liouvillian(self) -> np.ndarray:
        """Vectorized generator (row-major vec), in angular units (rad/us)."""
        d = self.space.dim
        eye = np.eye(d)
        h = self.hamiltonian.matrix
        lv = -1j * TWO_PI * (np.kron(h, eye) - np.kron(eye, h.T))
        for ch in self.channels:
            c = ch.op.matrix
            cdc = c.conj().T @ c
            lv += (
                TWO_PI
                * ch.rate
                * (
                    np.kron(c, c.conj())
                    - 0.5 * np.kron(cdc, eye)
                    - 0.5 * np.kron(eye, cdc.T)
                )
            )
        return lv

    def mc_hamiltonian(self) -> np.ndarray:
        """Non-Hermitian trajectory generator ("/2 pi" MHz units)."""
        h = self.hamiltonian.matrix.astype(complex)
        for ch in self.channels:
            c = ch.op.matrix
            h = h - 0.5j * ch.rate * (c.conj().T @ c)
        return h


@dataclass
class LindbladResult:
    t: np.ndarray
    states: list[DensityMatrix]
    table: TimeSeriesTable

    def matrices(self) -> np.ndarray:
        return np.stack([s.matrix for s in self.states])


def _substep_schedule(t_grid: np.ndarray, h_cap: float):
    spans = np.diff(t_grid)
    if np.any(spans <= 0):
        raise ValueError("time grid must be strictly increasing")
    n_sub = np.maximum(1, np.ceil(spans / h_cap - 1e-12)).astype(np.int64)
    if int(n_sub.max(initial=1)) > 5_000_000:
        raise IntegrationError("step size underflow: refinement exceeds 5e6 substeps")
    dt_sub = spans / n_sub
    return n_sub, dt_sub


def _check_state(space, rho, t, t_span) -> DensityMatrix:
    if not np.all(np.isfinite(rho)):
        raise IntegrationError(f"state became non-finite at t = {t:g} us")
    tr = float(rho.trace().real)
    if abs(tr - 1.0) > 1e-8 * max(1.0, t_span):
        raise IntegrationError(f"trace drifted to {tr!r} by t = {t:g} us")
    try:
        return DensityMatrix(space, rho, enforce_trace=False)
    except ValueError as exc:
        raise PositivityError(f"state invalid at t = {t:g} us: {exc}") from exc


def _observable_table(t_grid, states) -> TimeSeriesTable:
    rows = [atomic_observables(s) for s in states]
    columns = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    return TimeSeriesTable(np.asarray(t_grid, float), columns)


def integrate_lindblad(
    system: LindbladSystem,
    rho0: DensityMatrix,
    t_grid,
    *,
    method: str = "rk4",
    step: float | None = None,
) -> LindbladResult:
    """Integrate the master equation over a strictly increasing grid.

    ``method="rk4"`` is the classic fixed-step 4th-order scheme on the
    vectorized generator, with Hermiticity restored by symmetrization at
    every step; the default step is ``min(0.002/max_rate, spacing/10)``.
    ``method="expm"`` propagates with the exact exponential of the
    (time-independent) generator over each grid interval, which is what
    keeps the 27-dimensional three-level oracle affordable.  Trace drift
    beyond 1e-8 per unit time or negativity beyond -1e-8 raises.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if rho0.space.dim != system.space.dim:
        raise ValueError("initial state dimension mismatch")
    t_span = float(t_grid[-1] - t_grid[0])

    if system.h_t is not None or system.c_t is not None:
        mats = _integrate_time_dependent(system, rho0, t_grid, step)
    elif method == "expm":
        mats = _propagate_expm(system, rho0, t_grid)
    elif method == "rk4":
        if step is None:
            step = STEP_FACTOR / max(system.max_rate, 1e-12)
        spacing = float(np.min(np.diff(t_grid)))
        h_cap = min(step, spacing / 10.0)
        n_sub, dt_sub = _substep_schedule(t_grid, h_cap)
        y = _kernels.rk4_lindblad(
            system.liouvillian(),
            rho0.matrix.reshape(-1).astype(complex),
            system.space.dim,
            n_sub,
            dt_sub,
        )
        d = system.space.dim
        mats = np.asarray(y).reshape(len(t_grid), d, d)
    else:
        raise ValueError(f"unknown method {method!r}")

    states = [
        _check_state(system.space, m, t, t_span) for m, t in zip(mats, t_grid)
    ]
    return LindbladResult(t_grid, states, _observable_table(t_grid, states))


def _propagate_expm(system, rho0, t_grid):
    lv = system.liouvillian()
    d = system.space.dim
    props = {}
    y = rho0.matrix.reshape(-1).astype(complex)
    out = [y]
    for span in np.diff(t_grid):
        key = round(float(span), 15)
        if key not in props:
            props[key] = expm(lv * span)
        y = props[key] @ y
        rho = y.reshape(d, d)
        y = (0.5 * (rho + rho.conj().T)).reshape(-1)
        out.append(y)
    return np.stack(out).reshape(len(t_grid), d, d)


def _integrate_time_dependent(system, rho0, t_grid, step):
    """Matrix-form RK4 with the generator rebuilt at every stage time."""
    rates = np.array([ch.rate for ch in system.channels])

    def rhs(rho, t):
        h = system.h_t(t) if system.h_t is not None else system.hamiltonian.matrix
        out = -1j * TWO_PI * (h @ rho - rho @ h)
        cs = (
            system.c_t(t)
            if system.c_t is not None
            else [ch.op.matrix for ch in system.channels]
        )
        for rate, c in zip(rates, cs):
            cdc = c.conj().T @ c
            out += TWO_PI * rate * (
                c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc)
            )
        return out

    if step is None:
        step = STEP_FACTOR / max(system.max_rate, 1e-12)
    h_cap = min(step, float(np.min(np.diff(t_grid))) / 10.0)
    n_sub, dt_sub = _substep_schedule(t_grid, h_cap)
    rho = rho0.matrix.astype(complex)
    out = [rho]
    t = float(t_grid[0])
    for k in range(len(n_sub)):
        h = dt_sub[k]
        for _ in range(int(n_sub[k])):
            k1 = rhs(rho, t)
            k2 = rhs(rho + 0.5 * h * k1, t + 0.5 * h)
            k3 = rhs(rho + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs(rho + h * k3, t + h)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            rho = 0.5 * (rho + rho.conj().T)
            t += h
        t = float(t_grid[k + 1])  # avoid accumulation drift at boundaries
        out.append(rho)
    return np.stack(out)


# ---------------------------------------------------------------------------
# trajectory ensemble


@dataclass
class TrajectoryEnsemble:
    """States and jump log of a reproducible trajectory ensemble."""

    space: HilbertSpace
    t: np.ndarray
    states: np.ndarray  # (n_traj, n_times, dim), unit norm everywhere
    jump_traj: np.ndarray
    jump_step: np.ndarray
    jump_time: np.ndarray
    jump_channel: np.ndarray
    channel_labels: tuple[str, ...]
    master_seed: int

    @property
    def n_traj(self) -> int:
        return self.states.shape[0]

    def mean_density_matrix(self, time_index: int) -> DensityMatrix:
        psi = self.states[:, time_index, :]
        rho = (psi.conj()[:, :, None] * psi[:, None, :]).mean(axis=0).T
        return DensityMatrix(self.space, rho)


def _trajectory_uniforms(master_seed: int, indices: np.ndarray, n_steps: int):
    """Counter-based per-trajectory streams: row i depends only on
    (master_seed, i), never on chunking or worker count."""
    out = np.empty((len(indices), n_steps), dtype=float)
    for row, traj in enumerate(indices):
        gen = np.random.Generator(
            np.random.Philox(key=np.array([master_seed, traj], dtype=np.uint64))
        )
        out[row] = gen.random(n_steps)
    return out


def _rank1_factors(channels, dim):
    """Split each channel into |ket><bra| form when it is rank one.

    The singular value folds into the bra, so the ket keeps unit norm and
    ``||C psi|| = |<bra|psi>|``.
    """
    n = len(channels)
    is_rank1 = np.zeros(n, dtype=np.uint8)
    bras = np.zeros((n, dim), dtype=complex)
    kets = np.zeros((n, dim), dtype=complex)
    for m, ch in enumerate(channels):
        u, s, vh = np.linalg.svd(ch.op.matrix)
        if s[0] > 0 and (len(s) == 1 or s[1] <= 1e-12 * s[0]):
            is_rank1[m] = 1
            kets[m] = u[:, 0]
            bras[m] = s[0] * vh[0].conj()
    return is_rank1, bras, kets


def run_mcwf(
    system: LindbladSystem,
    psi0: np.ndarray,
    t_grid,
    n_traj: int,
    master_seed: int,
    *,
    p_max: float = DEFAULT_P_MAX,
    n_workers: int = 1,
) -> TrajectoryEnsemble:
    """Stochastic wave-function unraveling of the master equation.

    The no-jump propagator of the non-Hermitian generator is precomputed
    once per distinct substep size (the generator must be time
    independent); substep counts are fixed in advance so that the total
    one-step jump probability stays below ``p_max`` for any state, which
    bounds the first-order bias of the jump decision.  Trajectory ``i``
    is a pure function of ``(master_seed, i)``: parallel and serial runs
    agree bit for bit, and the ensemble is reduced in index order.
    """
    if system.h_t is not None or system.c_t is not None:
        raise ValueError("trajectory engine needs a time-independent generator")
    t_grid = np.asarray(t_grid, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ValueError("initial state must have unit norm")

    channels = system.channels
    rate_scale = sum(
        TWO_PI * ch.rate * ch.op.norm() ** 2 for ch in channels
    )
    h_cap = p_max / rate_scale if rate_scale > 0 else math.inf
    n_sub, dt_sub = _substep_schedule(t_grid, h_cap)

    h_mc = system.mc_hamiltonian()
    props = {}
    u_steps = np.empty((len(n_sub), system.space.dim, system.space.dim), dtype=complex)
    for k, dt in enumerate(dt_sub):
        key = round(float(dt), 15)
        if key not in props:
            props[key] = expm(-1j * TWO_PI * h_mc * dt)
        u_steps[k] = props[key]

    total_steps = int(n_sub.sum())
    # end time of every substep, for the jump log
    step_times = np.concatenate(
        [
            t_grid[k] + dt_sub[k] * np.arange(1, n_sub[k] + 1)
            for k in range(len(n_sub))
        ]
    )

    c_ops = (
        np.stack([ch.op.matrix for ch in channels])
        if channels
        else np.zeros((0, system.space.dim, system.space.dim), dtype=complex)
    )
    rates_ang = np.array([TWO_PI * ch.rate for ch in channels], dtype=float)
    is_rank1, bras, kets = _rank1_factors(channels, system.space.dim)

    states = np.empty((n_traj, len(t_grid), system.space.dim), dtype=complex)

    def run_chunk(lo: int, hi: int):
        idx = np.arange(lo, hi)
        uniforms = _trajectory_uniforms(master_seed, idx, total_steps)
        chunk_states, j_traj, j_step, j_ch = _kernels.mcwf_chunk(
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
        )
        states[lo:hi] = chunk_states
        return (j_traj + lo, j_step, j_ch)

    n_workers = max(1, int(n_workers))
    bounds = np.linspace(0, n_traj, n_workers + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if n_workers == 1:
        results = [run_chunk(*span) for span in spans]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda s: run_chunk(*s), spans))

    j_traj = np.concatenate([r[0] for r in results]) if results else np.empty(0, int)
    j_step = np.concatenate([r[1] for r in results]) if results else np.empty(0, int)
    j_ch = np.concatenate([r[2] for r in results]) if results else np.empty(0, int)
    order = np.lexsort((j_step, j_traj))
    return TrajectoryEnsemble(
        space=system.space,
        t=t_grid,
        states=states,
        jump_traj=j_traj[order],
        jump_step=j_step[order],
        jump_time=step_times[j_step[order]] if len(order) else np.empty(0),
        jump_channel=j_ch[order],
        channel_labels=tuple(ch.label for ch in channels),
        master_seed=master_seed,
    )


def _mean_and_se(values: np.ndarray):
    """Mean over trajectories with the standard error of the mean."""
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(np.real(mean), dtype=float)
    var = np.abs(values - mean) ** 2
    se = np.sqrt(var.sum(axis=0) / (n * (n - 1)))
    return mean, se


def ensemble_reduce(ensemble: TrajectoryEnsemble) -> TimeSeriesTable:
    """Average the ensemble into the standard observable table.

    Population and coherence columns carry ``_se`` companions (standard
    error of the mean across trajectories); the concurrence error is
    propagated from the real/imaginary parts of the mean coherence.
    """
    if ensemble.n_traj == 0:
        raise ValueError("empty ensemble")
    psi = ensemble.states
    if ensemble.space.kind is SpaceKind.RESTRICTED4:
        pops = {
            "rho_00_00": np.abs(psi[:, :, 0]) ** 2 + np.abs(psi[:, :, 1]) ** 2,
            "rho_01_01": np.abs(psi[:, :, 2]) ** 2,
            "rho_10_10": np.abs(psi[:, :, 3]) ** 2,
        }
        coherence = psi[:, :, 2] * psi[:, :, 3].conj()
        n_photon = np.abs(psi[:, :, 1]) ** 2
    else:
        rows = [
            [state_observables(ensemble.space, psi[i, k]) for k in range(psi.shape[1])]
            for i in range(psi.shape[0])
        ]
        pops = {
            name: np.array([[r[name] for r in row] for row in rows])
            for name in ("rho_00_00", "rho_01_01", "rho_10_10")
        }
        coherence = np.array(
            [[r["rho_01_10_re"] + 1j * r["rho_01_10_im"] for r in row] for row in rows]
        )
        n_photon = np.array([[r["n_photon"] for r in row] for row in rows])

    columns: dict[str, np.ndarray] = {}
    for name, series in pops.items():
        mean, se = _mean_and_se(series)
        columns[name] = mean
        columns[name + "_se"] = se
    z_mean = coherence.mean(axis=0)
    re_mean, re_se = _mean_and_se(coherence.real)
    im_mean, im_se = _mean_and_se(coherence.imag)
    columns["rho_01_10_re"] = re_mean
    columns["rho_01_10_re_se"] = re_se
    columns["rho_01_10_im"] = im_mean
    columns["rho_01_10_im_se"] = im_se
    magnitude = np.abs(z_mean)
    with np.errstate(invalid="ignore", divide="ignore"):
        directional = np.sqrt(
            (re_mean * re_se) ** 2 + (im_mean * im_se) ** 2
        ) / np.where(magnitude > 0, magnitude, 1.0)
    fallback_se = np.hypot(re_se, im_se)
    c_se = np.where(magnitude > 0, directional, fallback_se)
    columns["concurrence"] = 2.0 * magnitude
    columns["concurrence_se"] = 2.0 * c_se
    nmean, nse = _mean_and_se(n_photon)
    columns["n_photon"] = nmean
    columns["n_photon_se"] = nse
    columns["norm"] = (np.linalg.norm(psi, axis=2) ** 2).mean(axis=0)
    return TimeSeriesTable(ensemble.t, columns)


@dataclass
class JumpStatistics:
    """Cumulative mean jump counts per channel, with standard errors."""

    t: np.ndarray
    labels: tuple[str, ...]
    mean: np.ndarray  # (n_channels, n_times)
    se: np.ndarray
    totals: np.ndarray  # (n_channels,) raw counts over the whole ensemble

    def table(self) -> TimeSeriesTable:
        columns = {}
        for i, label in enumerate(self.labels):
            columns[f"jumps_{label}"] = self.mean[i]
            columns[f"jumps_{label}_se"] = self.se[i]
        return TimeSeriesTable(self.t, columns)


def jump_statistics(ensemble: TrajectoryEnsemble) -> JumpStatistics:
    """Average cumulative number of jumps per ensemble member."""
    if ensemble.n_traj == 0:
        raise ValueError("empty ensemble")
    n_ch = len(ensemble.channel_labels)
    n_t = len(ensemble.t)
    mean = np.zeros((n_ch, n_t))
    se = np.zeros((n_ch, n_t))
    totals = np.zeros(n_ch)
    grid_idx = np.searchsorted(ensemble.t, ensemble.jump_time, side="left")
    for m in range(n_ch):
        sel = ensemble.jump_channel == m
        totals[m] = int(np.count_nonzero(sel))
        counts = np.zeros((ensemble.n_traj, n_t))
        np.add.at(counts, (ensemble.jump_traj[sel], grid_idx[sel]), 1.0)
        cum = np.cumsum(counts, axis=1)
        mean[m], se[m] = _mean_and_se(cum)
    return JumpStatistics(ensemble.t, ensemble.channel_labels, mean, se, totals)
