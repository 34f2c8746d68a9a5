"""Reduction of the driven three-level ions to an effective two-level
exchange model, with the residual spontaneous-emission jump channels.

For a Raman detuning large against the couplings, the excited ionic
level follows the slow dynamics adiabatically and can be removed.  What
remains is a two-level excitation exchange with the cavity mode whose
couplings scale as 1/Delta, plus light shifts of the levels, plus per
ion one dephasing and one dissipative jump channel whose rates scale as
1/Delta^2.  A final diagonal phase rotation (parameter ``nu``, default
0) removes all explicit time dependence, which is what makes a plain
exponential trajectory propagator possible.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .params import ModelParams, ParameterError
from .spaces import HilbertSpace, LinearOp, SpaceKind, build_operator, restricted4

#: adiabatic validity: runs with max(coupling)/Delta above this are flagged
VALIDITY_RATIO_LIMIT = 0.1


def xi_factor(delta_raman: float, gamma_s: float, gamma_d: float) -> float:
    """Lineshape renormalization Delta^2 / (Delta^2 + (gamma_s+gamma_d)^2/4)."""
    if delta_raman <= 0:
        raise ParameterError("delta_raman must be > 0")
    d2 = delta_raman**2
    return d2 / (d2 + (gamma_s + gamma_d) ** 2 / 4.0)


def beta_from_positions(k_laser: float, k_cavity: float, positions) -> np.ndarray:
    """Placement coefficients exp(i k_L x) sin(k_C x) for each ion position."""
    if k_laser <= 0 or k_cavity <= 0:
        raise ParameterError("wavenumbers must be > 0")
    x = np.asarray(positions, dtype=float)
    return np.exp(1j * k_laser * x) * np.sin(k_cavity * x)


def beta_from_target_r1(r1: float) -> tuple[float, float]:
    """Real positive placement pair realizing a relative coupling r1.

    The more strongly coupled ion sits at a standing-wave antinode
    (beta = 1) and the other is positioned to give
    ``beta1/|beta_T| = r1`` exactly.
    """
    if not 0.0 <= r1 <= 1.0:
        raise ParameterError("r1 must lie in [0, 1]")
    if r1 == 0.0:
        return (0.0, 1.0)
    if r1 == 1.0:
        return (1.0, 0.0)
    r2 = math.sqrt(1.0 - r1 * r1)
    if r1 <= r2:
        return (r1 / r2, 1.0)
    return (1.0, r2 / r1)


@dataclass(frozen=True)
class EffectiveParams:
    """Derived two-level model parameters (all "/2 pi" MHz).

    ``g_eff`` is the coupling scale of an ion at an antinode; per-ion
    couplings are ``alpha_eff[j] = beta[j] * g_eff``.  ``nu`` labels the
    diagonal rotation; ``nu = 0`` gives a time-independent generator.
    """

    xi: float
    beta: tuple[complex, ...]
    beta_t: float
    g_eff: complex
    alpha_eff: tuple[complex, ...]
    omega_c_eff: float
    omega_a_eff: tuple[float, ...]
    delta_eff: tuple[float, ...]
    gamma_s_eff: tuple[float, ...]
    gamma_d_eff: tuple[float, ...]
    stark_cavity: float
    stark_ion: tuple[float, ...]
    lambda_ion: tuple[complex, ...]
    nu: float
    mu: float
    validity_ratio: float

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ParameterError("xi must lie in (0, 1]")
        if abs(self.mu - (self.stark_cavity + self.nu) / 3.0) > 1e-12:
            raise ParameterError("mu must equal (stark_cavity + nu)/3")
        for wa, de in zip(self.omega_a_eff, self.delta_eff):
            if abs(de - (wa - self.omega_c_eff)) > 1e-12:
                raise ParameterError("delta_eff inconsistent with omega_a - omega_c")

    @property
    def delta_eff_scalar(self) -> float:
        values = set(self.delta_eff)
        if len(values) != 1:
            raise ParameterError("delta_eff differs between ions")
        return self.delta_eff[0]

    @property
    def flagged(self) -> bool:
        return self.validity_ratio > VALIDITY_RATIO_LIMIT


def decay_rates(params: ModelParams) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-ion rescaled emission rates (dephasing-like, dissipative).

    Both rates share the prefactor xi (|Omega|^2 + |beta g|^2) / Delta^2,
    so their ratio is exactly gamma_s / gamma_d.
    """
    xi = xi_factor(params.delta_raman, params.gamma_s, params.gamma_d)
    gs, gd = [], []
    for omega, b in zip(params.omega_rabi, params.beta):
        weight = xi * (abs(omega) ** 2 + abs(b * params.g_cavity) ** 2)
        common = weight / params.delta_raman**2
        gs.append(common * params.gamma_s)
        gd.append(common * params.gamma_d)
    return tuple(gs), tuple(gd)


def decay_vs_coupling(params: ModelParams, j: int) -> float:
    """Emission-to-coupling ratio (1 + x^2)/x * gamma_s/Delta with
    x = |beta_j g / Omega_j|; minimal (2 gamma_s/Delta) at x = 1."""
    omega = params.omega_rabi[j - 1]
    bg = abs(params.beta[j - 1] * params.g_cavity)
    if omega == 0 or bg == 0:
        raise ParameterError("decay_vs_coupling needs both couplings nonzero")
    x = bg / abs(omega)
    return (1.0 + x * x) / x * params.gamma_s / params.delta_raman


def resonant_laser_detuning(params: ModelParams) -> float:
    """Laser detuning that cancels the light shifts (delta_eff = 0)."""
    xi = xi_factor(params.delta_raman, params.gamma_s, params.gamma_d)
    omega = params.omega_rabi_scalar
    bt_g = params.beta_total * params.g_cavity
    return xi * (abs(omega) ** 2 - bt_g**2) / params.delta_raman


def derive_effective_params(params: ModelParams, nu: float = 0.0) -> EffectiveParams:
    """Map the physical parameters onto the effective exchange model."""
    xi = xi_factor(params.delta_raman, params.gamma_s, params.gamma_d)
    delta = params.delta_raman
    g = params.g_cavity
    beta_t = params.beta_total

    stark_cavity = -xi * (beta_t * g) ** 2 / delta
    stark_ion = tuple(-xi * abs(w) ** 2 / delta for w in params.omega_rabi)
    lambda_ion = tuple(
        -xi * b * np.conj(g) * w / delta
        for b, w in zip(params.beta, params.omega_rabi)
    )
    omega_c_eff = (2.0 * stark_cavity + 2.0 * nu) / 3.0
    omega_a_eff = tuple(
        dl + s - stark_cavity / 3.0 + 2.0 * nu / 3.0
        for dl, s in zip(params.delta_laser, stark_ion)
    )
    delta_eff = tuple(
        dl + s - stark_cavity for dl, s in zip(params.delta_laser, stark_ion)
    )
    # keep the consistency delta_eff == omega_a_eff - omega_c_eff exact in fp
    delta_eff = tuple(wa - omega_c_eff for wa in omega_a_eff)
    gs, gd = decay_rates(params)
    couplings = [abs(w) for w in params.omega_rabi]
    couplings += [abs(b * g) for b in params.beta]
    g_eff = -xi * np.conj(g) * params.omega_rabi[0] / delta
    return EffectiveParams(
        xi=xi,
        beta=params.beta,
        beta_t=beta_t,
        g_eff=complex(g_eff),
        alpha_eff=lambda_ion,
        omega_c_eff=omega_c_eff,
        omega_a_eff=omega_a_eff,
        delta_eff=delta_eff,
        gamma_s_eff=gs,
        gamma_d_eff=gd,
        stark_cavity=stark_cavity,
        stark_ion=stark_ion,
        lambda_ion=lambda_ion,
        nu=nu,
        mu=(stark_cavity + nu) / 3.0,
        validity_ratio=max(couplings) / delta,
    )


# ---------------------------------------------------------------------------
# jump channels


@dataclass(frozen=True)
class JumpChannel:
    """A Lindblad channel: label, rate ("/2 pi" MHz) and its operator."""

    label: str
    rate: float
    op: LinearOp

    def __post_init__(self):
        if self.rate < 0:
            raise ParameterError(f"channel {self.label}: negative rate")


def _decaying_state(space: HilbertSpace, params: ModelParams, j: int) -> np.ndarray:
    """Normalized source state of ion j's emission channels, phase fixed so
    that the laser-term coefficient is real positive."""
    omega = params.omega_rabi[j - 1]
    bg = params.beta[j - 1] * np.conj(params.g_cavity)
    vec = np.zeros(space.dim, dtype=complex)
    excited = {1: ((1, 0), 0), 2: ((0, 1), 0)}[j]
    vec[space.index(*excited)] = np.conj(omega)
    vec[space.index((0, 0), 1)] = bg
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ParameterError(f"ion {j} has neither laser nor cavity coupling")
    vec /= norm
    anchor = vec[space.index(*excited)]
    if anchor == 0:
        anchor = vec[space.index((0, 0), 1)]
    return vec * (abs(anchor) / anchor)


def build_jump_channels(params: ModelParams) -> list[JumpChannel]:
    """Emission channels plus cavity loss on the restricted basis.

    Each emission channel is rank one, |target><source|, built from unit
    vectors and therefore normalized in operator norm; the cavity
    annihilation operator is already normalized on this basis.
    """
    if params.n_ions != 2:
        raise ParameterError("the restricted basis covers exactly two ions")
    space = restricted4()
    gs, gd = decay_rates(params)
    channels = []
    for j in (1, 2):
        phi = _decaying_state(space, params, j)
        excited_idx = space.index(*{1: ((1, 0), 0), 2: ((0, 1), 0)}[j])
        for kind, rate, target in (("S", gs[j - 1], excited_idx), ("D", gd[j - 1], 0)):
            op = np.zeros((space.dim, space.dim), dtype=complex)
            op[target, :] = phi.conj()
            channels.append(
                JumpChannel(f"C_{kind}_{j}", rate, LinearOp(space, op))
            )
    channels.append(
        JumpChannel("cavity_a", params.kappa, build_operator(space, "a"))
    )
    return channels


def stark_frame_jump_matrices(params: ModelParams, t: float) -> list[np.ndarray]:
    """Time-dependent emission + cavity operators before the phase rotation.

    On the restricted basis each emission operator is rank one,
    |target><source(t)|, where the source mixes the laser term (carrying
    the explicit detuning phase) with the cavity term.  Matches
    :func:`build_jump_channels` at t = 0 and reduces to it for
    delta_laser = 0.  Products of separately truncated factors would drop
    the path through the two-excitation intermediate state, so the
    matrices are written down directly.
    """
    from .params import TWO_PI

    space = restricted4()
    photon_idx = space.index((0, 0), 1)
    mats = []
    for j in (1, 2):
        omega = params.omega_rabi[j - 1]
        dl = params.delta_laser[j - 1]
        bg = np.conj(params.beta[j - 1]) * params.g_cavity
        norm = math.sqrt(abs(omega) ** 2 + abs(bg) ** 2)
        phase = cmath.exp(-1j * TWO_PI * dl * t)
        excited_idx = space.index(*{1: ((1, 0), 0), 2: ((0, 1), 0)}[j])
        source_bra = np.zeros(space.dim, dtype=complex)
        source_bra[excited_idx] = phase * omega / norm
        source_bra[photon_idx] = bg / norm
        for target in (excited_idx, 0):  # dephasing-like, then dissipative
            op = np.zeros((space.dim, space.dim), dtype=complex)
            op[target, :] = source_bra
            mats.append(op)
    mats.append(build_operator(space, "a").matrix)
    return mats


# ---------------------------------------------------------------------------
# Hamiltonians


def tavis_cummings_hamiltonian(
    space: HilbertSpace,
    omega_c: float,
    omega_a: float | Sequence[float],
    alphas: Sequence[complex],
) -> LinearOp:
    """Exchange Hamiltonian omega_c (a+a + 1/2) + sum_j omega_a sigma+sigma-
    + sum_j (alpha_j a+ sigma-_j + h.c.), built from the operator algebra."""
    n_ions = space.n_ions
    if np.isscalar(omega_a):
        omega_a = (omega_a,) * n_ions
    a = build_operator(space, "a").matrix
    adag = a.conj().T
    h = omega_c * (adag @ a + 0.5 * np.eye(space.dim))
    for j in range(1, n_ions + 1):
        sp = build_operator(space, f"sigma_plus_{j}").matrix
        sm = build_operator(space, f"sigma_minus_{j}").matrix
        h = h + omega_a[j - 1] * (sp @ sm)
        h = h + alphas[j - 1] * (adag @ sm) + np.conj(alphas[j - 1]) * (sm.conj().T @ a)
    return LinearOp(space, h)


def build_effective_hamiltonian(
    params: ModelParams,
    frame: str = "rotated",
    nu: float = 0.0,
    t: float = 0.0,
) -> LinearOp:
    """Effective Hamiltonian on the restricted basis.

    ``frame="rotated"`` gives the time-independent exchange form (equal to
    the Tavis-Cummings construction with the effective parameters);
    ``frame="stark"`` gives the pre-rotation generator at time ``t`` with
    explicit laser-detuning phases on the couplings.
    """
    from .params import TWO_PI

    eff = derive_effective_params(params, nu=nu)
    space = restricted4()
    h = np.zeros((4, 4), dtype=complex)
    if frame == "rotated":
        h[0, 0] = eff.mu
        h[1, 1] = eff.stark_cavity + nu
        h[2, 2] = eff.stark_ion[1] + params.delta_laser[1] + nu
        h[3, 3] = eff.stark_ion[0] + params.delta_laser[0] + nu
        h[1, 2] = eff.lambda_ion[1]
        h[1, 3] = eff.lambda_ion[0]
    elif frame == "stark":
        h[1, 1] = eff.stark_cavity
        h[2, 2] = eff.stark_ion[1]
        h[3, 3] = eff.stark_ion[0]
        h[1, 2] = eff.lambda_ion[1] * cmath.exp(-1j * TWO_PI * params.delta_laser[1] * t)
        h[1, 3] = eff.lambda_ion[0] * cmath.exp(-1j * TWO_PI * params.delta_laser[0] * t)
    else:
        raise ParameterError(f"unknown frame {frame!r}")
    h[2, 1] = np.conj(h[1, 2])
    h[3, 1] = np.conj(h[1, 3])
    return LinearOp(space, h)


def build_mc_hamiltonian(params: ModelParams) -> LinearOp:
    """Non-Hermitian trajectory generator H - (i/2) sum_m Gamma_m C_m+ C_m
    in the time-independent (nu = 0) frame."""
    h = build_effective_hamiltonian(params, frame="rotated", nu=0.0).matrix.copy()
    for ch in build_jump_channels(params):
        c = ch.op.matrix
        h = h - 0.5j * ch.rate * (c.conj().T @ c)
    return LinearOp(restricted4(), h)


def full_lambda_hamiltonian(params: ModelParams, space: HilbertSpace) -> LinearOp:
    """Three-level Hamiltonian in the frame where it is time independent.

    The laser-detuning phase is absorbed by shifting the ground levels,
    which leaves all dissipators unchanged:
    Delta sum_j P_j + sum_j delta_L_j S_j
    + sum_j (Omega_j |P><S|_j + g beta_j* a |P><D|_j + h.c.).
    """
    if space.kind is not SpaceKind.FULL_LAMBDA:
        raise ParameterError("full_lambda_hamiltonian needs the three-level basis")
    dim = space.dim
    h = np.zeros((dim, dim), dtype=complex)
    a = build_operator(space, "a").matrix
    for j in range(1, space.n_ions + 1):
        p_proj = build_operator(space, f"A_PP_{j}").matrix
        s_proj = build_operator(space, f"A_SS_{j}").matrix
        h += params.delta_raman * p_proj
        h += params.delta_laser[j - 1] * s_proj
        coupling = params.omega_rabi[j - 1] * build_operator(space, f"A_PS_{j}").matrix
        coupling += (
            params.g_cavity
            * np.conj(params.beta[j - 1])
            * (a @ build_operator(space, f"A_PD_{j}").matrix)
        )
        h += coupling + coupling.conj().T
    return LinearOp(space, h)


def full_lambda_channels(params: ModelParams, space: HilbertSpace) -> list[JumpChannel]:
    """Physical decay channels: cavity loss plus both spontaneous branches."""
    channels = [JumpChannel("cavity_a", params.kappa, build_operator(space, "a"))]
    for j in range(1, space.n_ions + 1):
        channels.append(
            JumpChannel(f"C_S_{j}", params.gamma_s, build_operator(space, f"A_SP_{j}"))
        )
        channels.append(
            JumpChannel(f"C_D_{j}", params.gamma_d, build_operator(space, f"A_DP_{j}"))
        )
    return channels
