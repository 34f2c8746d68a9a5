"""Closed-form dynamics of two emitters sharing one excitation with a
single (possibly lossy) cavity mode.

With the cavity initially empty and one excitation in the atoms, the
amplitudes on ``|10>`` and ``|01>`` evolve through a single complex
envelope.  Cavity loss enters as an imaginary shift of the detuning,
damping the envelope at ``kappa/4`` and displacing the Rabi frequency;
the decoupled (subradiant) combination of the two amplitudes is an exact
constant of motion.  All frequencies are "/2 pi" values in MHz and times
are in microseconds (see :mod:`ioncavity.params`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import TWO_PI


@dataclass(frozen=True)
class DickeParams:
    """Total coupling, relative couplings, detuning and cavity damping.

    ``r2`` defaults to the positive real value fixed by normalization;
    complex values are allowed for both relative couplings as long as
    ``|r1|^2 + |r2|^2 = 1``.
    """

    alpha_total: float
    r1: complex
    delta: float = 0.0
    kappa: float = 0.0
    r2: complex | None = None

    def __post_init__(self):
        if self.alpha_total < 0:
            raise ValueError("alpha_total must be >= 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        r1 = complex(self.r1)
        if abs(r1) > 1 + 1e-12:
            raise ValueError("|r1| must not exceed 1")
        r2 = self.r2
        if r2 is None:
            r2 = math.sqrt(max(0.0, 1.0 - abs(r1) ** 2))
        r2 = complex(r2)
        if abs(abs(r1) ** 2 + abs(r2) ** 2 - 1.0) > 1e-12:
            raise ValueError("relative couplings must satisfy |r1|^2 + |r2|^2 = 1")
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)


@dataclass(frozen=True)
class AmplitudePair:
    """Amplitudes on |10> and |01>; the remainder is ground population."""

    c10: complex
    c01: complex

    def __post_init__(self):
        if abs(self.c10) ** 2 + abs(self.c01) ** 2 > 1.0 + 1e-9:
            raise ValueError("amplitude norm exceeds 1")

    @property
    def norm2(self) -> float:
        return abs(self.c10) ** 2 + abs(self.c01) ** 2


def vacuum_rabi(alpha_total: float, delta: float) -> float:
    """Lossless excitation-exchange frequency sqrt(4 alpha_T^2 + delta^2)."""
    if alpha_total < 0:
        raise ValueError("alpha_total must be >= 0")
    return math.hypot(2.0 * alpha_total, delta)


def generalized_rabi(alpha_total: float, delta: float, kappa: float) -> complex:
    """Exchange frequency with cavity loss folded in.

    Principal square root of ``4 alpha_T^2 + delta^2 + i delta kappa
    - kappa^2/4``; the evolution is branch-invariant (even in the root),
    and the principal branch reduces to :func:`vacuum_rabi` at kappa=0.
    """
    z = 4.0 * alpha_total**2 + delta**2 + 1j * delta * kappa - kappa**2 / 4.0
    return complex(np.sqrt(complex(z)))


def _sin_over(theta: np.ndarray) -> np.ndarray:
    """sin(theta)/theta with the removable singularity filled by series."""
    theta = np.asarray(theta, dtype=complex)
    small = np.abs(theta) < 1e-6
    safe = np.where(small, 1.0, theta)
    out = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    return out


def envelope(t, params: DickeParams, *, rabi: complex | None = None) -> np.ndarray:
    """Superradiant-component envelope E(t); E(0) = 1.

    Accepts scalar or array times (us).  ``rabi`` overrides the
    generalized Rabi frequency, which only serves the branch-invariance
    regression test.
    """
    t = np.asarray(t, dtype=float)
    omega = rabi
    if omega is None:
        omega = generalized_rabi(params.alpha_total, params.delta, params.kappa)
    shift = (params.kappa - 2j * params.delta) / 4.0  # angular/(2 pi) damping
    theta = np.pi * omega * t  # = (angular Rabi) * t / 2
    # sin term written through sin(theta)/theta so omega -> 0 stays finite
    env = np.exp(-TWO_PI * shift * t) * (
        np.cos(theta) + 2.0 * shift * (np.pi * t) * _sin_over(theta)
    )
    return env if env.ndim else complex(env)


def evolve_amplitudes(t, c0: AmplitudePair, params: DickeParams):
    """Propagate the amplitude pair to time(s) t.

    Linearity in the initial amplitudes, the identity at t=0 and the
    invariance of the subradiant combination all follow from the single
    envelope E(t).  Returns an :class:`AmplitudePair` for scalar t, or a
    pair of arrays for array t.
    """
    env = envelope(t, params)
    r1, r2 = params.r1, params.r2
    c10 = (abs(r2) ** 2 + abs(r1) ** 2 * env) * c0.c10 - np.conj(r1) * r2 * (
        1.0 - env
    ) * c0.c01
    c01 = -r1 * np.conj(r2) * (1.0 - env) * c0.c10 + (
        abs(r1) ** 2 + abs(r2) ** 2 * env
    ) * c0.c01
    if np.ndim(t) == 0:
        return AmplitudePair(complex(c10), complex(c01))
    return c10, c01


def sub_super_decompose(c0: AmplitudePair, r1: complex, r2: complex | None = None):
    """Project the initial amplitudes on the superradiant/subradiant pair.

    Returns ``(beta_plus, beta_minus)`` with
    ``|beta_+|^2 + |beta_-|^2 = |c10|^2 + |c01|^2``.
    """
    p = DickeParams(alpha_total=0.0, r1=r1, r2=r2)
    beta_plus = p.r1 * c0.c10 + p.r2 * c0.c01
    beta_minus = np.conj(p.r2) * c0.c10 - np.conj(p.r1) * c0.c01
    return complex(beta_plus), complex(beta_minus)


def reconstruct_amplitudes(beta_plus: complex, beta_minus: complex, r1, r2=None):
    """Inverse of :func:`sub_super_decompose`."""
    p = DickeParams(alpha_total=0.0, r1=r1, r2=r2)
    c10 = np.conj(p.r1) * beta_plus + p.r2 * beta_minus
    c01 = np.conj(p.r2) * beta_plus - p.r1 * beta_minus
    return AmplitudePair(complex(c10), complex(c01))


def stationary_concurrence(c0: AmplitudePair, r1: complex, r2=None) -> float:
    """Long-time concurrence 2 |r1 r2| |beta_-|^2 for a damped cavity.

    Equals the kappa*t >> 1 limit of the concurrence of
    :func:`evolve_amplitudes` for any detuning.
    """
    p = DickeParams(alpha_total=0.0, r1=r1, r2=r2)
    _, beta_minus = sub_super_decompose(c0, p.r1, p.r2)
    return 2.0 * abs(p.r1 * p.r2) * abs(beta_minus) ** 2


def subradiant_pair(r1, r2=None) -> AmplitudePair:
    p = DickeParams(alpha_total=0.0, r1=r1, r2=r2)
    return AmplitudePair(p.r2, -p.r1)


def superradiant_pair(r1, r2=None) -> AmplitudePair:
    p = DickeParams(alpha_total=0.0, r1=r1, r2=r2)
    return AmplitudePair(np.conj(p.r1), np.conj(p.r2))


def concurrence_of(c10, c01) -> np.ndarray:
    """Concurrence 2 |c10 c01*| from the amplitude pair."""
    return 2.0 * np.abs(np.asarray(c10) * np.conj(np.asarray(c01)))
