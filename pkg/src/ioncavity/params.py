"""Physical parameters of the two-ion / lossy-cavity system.

Unit convention used throughout the package: every stored frequency or
rate is the conventional "value / 2 pi" number in MHz (so a laser
coupling quoted as 9.0 means 2 pi x 9.0 MHz in angular units).  Time is
measured in microseconds.  Generators of dynamics (Hamiltonians and
Lindblad dissipators) multiply by ``TWO_PI`` exactly once, so a
frequency of 1 corresponds to a period of 1 us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: Reference experimental values for a pair of trapped Ca+ ions coupled to a
#: miniature high-finesse cavity (all in 2 pi MHz).  The cavity coupling
#: already carries the 1/sqrt(3) Clebsch-Gordan reduction that accounts for
#: the Zeeman substructure of the real ion.
REFERENCE_VALUES = {
    "omega_rabi": 9.0,
    "g_cavity": 6.5 / math.sqrt(3.0),
    "gamma_s": 22.3,
    "gamma_d": 1.7,
    "delta_raman": 20.0,
    "kappa": 1.2,
}


class ParameterError(ValueError):
    """A model parameter violates its physical bounds."""


def _per_ion(value, n_ions: int, name: str) -> tuple:
    """Normalize a scalar or per-ion sequence to an n_ions tuple."""
    if np.isscalar(value):
        return (value,) * n_ions
    values = tuple(value)
    if len(values) != n_ions:
        raise ParameterError(f"{name} must be a scalar or a length-{n_ions} sequence")
    return values


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of a run; the single source of truth.

    Attributes
    ----------
    omega_rabi:
        Laser (Raman pump) coupling strength, per ion or shared.
    g_cavity:
        Bare cavity coupling, including the 1/sqrt(3) reduction.
    gamma_s, gamma_d:
        Spontaneous decay rates of the excited level into the ground and
        the metastable level.
    delta_raman:
        Common detuning of laser and cavity from the excited level.
    kappa:
        Cavity field damping rate (FWHM of the cavity line).
    delta_laser:
        Additional two-photon laser detuning, per ion or shared.
    beta:
        Per-ion placement coefficients (phase times sine of the ion
        position within the cavity standing wave), ``|beta| <= 1``.
    """

    omega_rabi: float | Sequence[float] = REFERENCE_VALUES["omega_rabi"]
    g_cavity: float = REFERENCE_VALUES["g_cavity"]
    gamma_s: float = REFERENCE_VALUES["gamma_s"]
    gamma_d: float = REFERENCE_VALUES["gamma_d"]
    delta_raman: float = REFERENCE_VALUES["delta_raman"]
    kappa: float = REFERENCE_VALUES["kappa"]
    delta_laser: float | Sequence[float] = 0.0
    beta: Sequence[complex] = (1.0, 1.0)
    n_ions: int = 2

    def __post_init__(self):
        if self.n_ions < 1:
            raise ParameterError("n_ions must be >= 1")
        object.__setattr__(self, "beta", tuple(complex(b) for b in self.beta))
        if len(self.beta) != self.n_ions:
            raise ParameterError(f"beta must have one entry per ion ({self.n_ions})")
        object.__setattr__(
            self, "omega_rabi", _per_ion(self.omega_rabi, self.n_ions, "omega_rabi")
        )
        object.__setattr__(
            self, "delta_laser", _per_ion(self.delta_laser, self.n_ions, "delta_laser")
        )
        if self.gamma_s <= 0 or self.gamma_d <= 0:
            raise ParameterError("decay rates gamma_s, gamma_d must be > 0")
        if self.delta_raman <= 0:
            raise ParameterError("delta_raman must be > 0")
        if self.kappa < 0:
            raise ParameterError("kappa must be >= 0")
        if any(w < 0 for w in self.omega_rabi):
            raise ParameterError("omega_rabi must be >= 0")
        if self.g_cavity < 0:
            raise ParameterError("g_cavity must be >= 0")
        for j, b in enumerate(self.beta):
            if abs(b) > 1.0 + 1e-12:
                raise ParameterError(f"|beta[{j}]| = {abs(b):.6g} exceeds 1")

    @property
    def beta_total(self) -> float:
        """Quadrature sum |beta_T| of the placement coefficients."""
        return math.sqrt(sum(abs(b) ** 2 for b in self.beta))

    @property
    def omega_rabi_scalar(self) -> float:
        """Shared laser coupling; raises if the ions are driven unequally."""
        if len(set(self.omega_rabi)) != 1:
            raise ParameterError("omega_rabi differs between ions")
        return self.omega_rabi[0]

    @property
    def delta_laser_scalar(self) -> float:
        if len(set(self.delta_laser)) != 1:
            raise ParameterError("delta_laser differs between ions")
        return self.delta_laser[0]

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def reference_params(
    delta_scale: float = 1.0,
    kappa_scale: float = 1.0,
    beta: Sequence[complex] = (1.0, 1.0),
    delta_laser: float | Sequence[float] = 0.0,
) -> ModelParams:
    """Reference parameters with the detuning and cavity quality rescaled."""
    return ModelParams(
        delta_raman=REFERENCE_VALUES["delta_raman"] * delta_scale,
        kappa=REFERENCE_VALUES["kappa"] * kappa_scale,
        beta=beta,
        delta_laser=delta_laser,
    )
