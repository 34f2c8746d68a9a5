"""Named experiments: scenario assembly, parameter sweeps and the
coupling/decay scaling report.

A :class:`Scenario` binds one parameter set to one model level (ideal or
lossy exchange model, effective two-level model with emission channels,
or the full three-level description) and one engine (closed form,
deterministic master equation, or trajectory ensemble).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import dicke
from .dicke import AmplitudePair, DickeParams
from .engines import (
    IntegrationError,
    LindbladSystem,
    TrajectoryEnsemble,
    ensemble_reduce,
    integrate_lindblad,
    jump_statistics,
    run_mcwf,
)
from .observables import state_observables
from .params import ModelParams, ParameterError, reference_params
from .reduction import (
    EffectiveParams,
    JumpChannel,
    beta_from_target_r1,
    build_effective_hamiltonian,
    build_jump_channels,
    derive_effective_params,
    full_lambda_channels,
    full_lambda_hamiltonian,
    resonant_laser_detuning,
    tavis_cummings_hamiltonian,
)
from .spaces import DensityMatrix, build_operator, full_lambda, restricted4
from .tables import TimeSeriesTable


class Model(Enum):
    DICKE_IDEAL = "dicke_ideal"
    DICKE_LOSSY = "dicke_lossy"
    EFFECTIVE = "effective"
    FULL_LAMBDA = "full_lambda"


class Engine(Enum):
    CLOSED_FORM = "closed_form"
    LINDBLAD = "lindblad"
    MCWF = "mcwf"


INITIAL_STATES = ("10", "01", "subradiant", "superradiant")


@dataclass(frozen=True)
class Scenario:
    """One fully specified run."""

    name: str
    model: Model
    params: ModelParams
    t_max: float
    initial_state: str = "10"
    n_points: int = 400
    engine: Engine = Engine.LINDBLAD
    n_traj: int = 1000
    seed: int = 0
    n_max: int = 2
    n_workers: int = 1
    method: str | None = None  # lindblad integrator override

    def __post_init__(self):
        if self.t_max <= 0:
            raise ParameterError("t_max must be > 0")
        if self.n_points < 2:
            raise ParameterError("n_points must be >= 2")
        if self.initial_state not in INITIAL_STATES:
            raise ParameterError(f"unknown initial state {self.initial_state!r}")
        if self.engine is Engine.CLOSED_FORM and self.model not in (
            Model.DICKE_IDEAL,
            Model.DICKE_LOSSY,
        ):
            raise ParameterError("the closed form only covers the exchange models")
        if self.engine is Engine.MCWF and self.model is Model.DICKE_IDEAL:
            raise ParameterError("the trajectory engine needs jump channels")

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)


@dataclass
class ScenarioResult:
    scenario: Scenario
    table: TimeSeriesTable
    effective: EffectiveParams
    dicke_params: DickeParams | None = None
    ensemble: TrajectoryEnsemble | None = None

    @property
    def peak(self) -> tuple[float, float]:
        """(peak concurrence, time of the peak)."""
        c = self.table["concurrence"]
        k = int(np.argmax(c))
        return float(c[k]), float(self.table.t[k])


def dicke_parameters(params: ModelParams, lossy: bool = True) -> DickeParams:
    """Exchange-model parameters implied by the physical configuration."""
    eff = derive_effective_params(params)
    beta_t = eff.beta_t
    if beta_t == 0:
        raise ParameterError("both ions are decoupled from the cavity")
    return DickeParams(
        alpha_total=abs(beta_t * eff.g_eff),
        r1=params.beta[0] / beta_t,
        r2=params.beta[1] / beta_t,
        delta=eff.delta_eff_scalar,
        kappa=params.kappa if lossy else 0.0,
    )


def rabi_period(params: ModelParams) -> float:
    """Period 1/|generalized Rabi frequency| of the exchange, in us."""
    dp = dicke_parameters(params, lossy=True)
    omega = dicke.generalized_rabi(dp.alpha_total, dp.delta, dp.kappa)
    return 1.0 / abs(omega)


def initial_amplitudes(label: str, dp: DickeParams) -> AmplitudePair:
    if label == "10":
        return AmplitudePair(1.0, 0.0)
    if label == "01":
        return AmplitudePair(0.0, 1.0)
    if label == "subradiant":
        return dicke.subradiant_pair(dp.r1, dp.r2)
    if label == "superradiant":
        return dicke.superradiant_pair(dp.r1, dp.r2)
    raise ParameterError(f"unknown initial state {label!r}")


def _restricted_initial_vector(label: str, dp: DickeParams) -> np.ndarray:
    amp = initial_amplitudes(label, dp)
    vec = np.zeros(4, dtype=complex)
    vec[3] = amp.c10
    vec[2] = amp.c01
    return vec


def _full_initial_vector(label: str, dp: DickeParams, space) -> np.ndarray:
    amp = initial_amplitudes(label, dp)
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.index(("S", "D"), 0)] = amp.c10
    vec[space.index(("D", "S"), 0)] = amp.c01
    return vec


def build_system(scenario: Scenario) -> tuple[LindbladSystem, np.ndarray]:
    """Assemble the Lindblad system and initial state vector."""
    params = scenario.params
    model = scenario.model
    if model is Model.FULL_LAMBDA:
        space = full_lambda(scenario.n_max, params.n_ions)
        system = LindbladSystem(
            space,
            full_lambda_hamiltonian(params, space),
            tuple(full_lambda_channels(params, space)),
        )
        psi0 = _full_initial_vector(
            scenario.initial_state, dicke_parameters(params), space
        )
        return system, psi0

    space = restricted4()
    dp = dicke_parameters(params, lossy=model is not Model.DICKE_IDEAL)
    if model is Model.EFFECTIVE:
        hamiltonian = build_effective_hamiltonian(params, frame="rotated")
        channels = tuple(build_jump_channels(params))
    else:
        eff = derive_effective_params(params)
        hamiltonian = tavis_cummings_hamiltonian(
            space, eff.omega_c_eff, eff.omega_a_eff, eff.alpha_eff
        )
        channels = ()
        if model is Model.DICKE_LOSSY:
            channels = (
                JumpChannel("cavity_a", params.kappa, build_operator(space, "a")),
            )
    psi0 = _restricted_initial_vector(scenario.initial_state, dp)
    return LindbladSystem(space, hamiltonian, channels), psi0


def _closed_form_table(scenario: Scenario) -> tuple[TimeSeriesTable, DickeParams]:
    dp = dicke_parameters(scenario.params, lossy=scenario.model is Model.DICKE_LOSSY)
    c0 = initial_amplitudes(scenario.initial_state, dp)
    t = scenario.t_grid
    c10, c01 = dicke.evolve_amplitudes(t, c0, dp)
    coherence = c01 * np.conj(c10)
    columns = {
        "rho_00_00": 1.0 - np.abs(c10) ** 2 - np.abs(c01) ** 2,
        "rho_01_01": np.abs(c01) ** 2,
        "rho_10_10": np.abs(c10) ** 2,
        "rho_01_10_re": coherence.real,
        "rho_01_10_im": coherence.imag,
        "concurrence": 2.0 * np.abs(coherence),
        "norm": np.ones_like(t),
    }
    return TimeSeriesTable(t, columns), dp


def _check_fock_truncation(scenario: Scenario, result) -> None:
    space = full_lambda(scenario.n_max, scenario.params.n_ions)
    top = [i for i, (_, n) in enumerate(space.basis) if n == scenario.n_max]
    for state, t in zip(result.states, result.t):
        population = float(state.matrix.diagonal().real[top].sum())
        if population > 1e-6:
            raise IntegrationError(
                f"photon truncation layer populated ({population:.2e}) at "
                f"t = {t:g} us; raise n_max"
            )


def run_scenario(scenario: Scenario) -> ScenarioResult:
    """Execute one scenario and return the standard observable table."""
    effective = derive_effective_params(scenario.params)
    if scenario.engine is Engine.CLOSED_FORM:
        table, dp = _closed_form_table(scenario)
        return ScenarioResult(scenario, table, effective, dicke_params=dp)

    system, psi0 = build_system(scenario)
    dp = None
    if scenario.model is not Model.FULL_LAMBDA:
        dp = dicke_parameters(
            scenario.params, lossy=scenario.model is not Model.DICKE_IDEAL
        )

    if scenario.engine is Engine.LINDBLAD:
        method = scenario.method
        if method is None:
            method = "expm" if scenario.model is Model.FULL_LAMBDA else "rk4"
        rho0 = DensityMatrix.from_state(system.space, psi0)
        result = integrate_lindblad(system, rho0, scenario.t_grid, method=method)
        if scenario.model is Model.FULL_LAMBDA:
            _check_fock_truncation(scenario, result)
        return ScenarioResult(scenario, result.table, effective, dicke_params=dp)

    ensemble = run_mcwf(
        system,
        psi0,
        scenario.t_grid,
        scenario.n_traj,
        scenario.seed,
        n_workers=scenario.n_workers,
    )
    table = ensemble_reduce(ensemble)
    return ScenarioResult(
        scenario, table, effective, dicke_params=dp, ensemble=ensemble
    )


# ---------------------------------------------------------------------------
# sweeps


SWEEP_AXES = ("r1", "delta_laser", "delta_raman", "kappa")


@dataclass(frozen=True)
class SweepSpec:
    """A one-axis scan of a scenario template.

    With ``resonant_laser=True`` the laser detuning is re-solved for the
    light-shift resonance at every grid point (the shifts move with the
    swept parameter).
    """

    axis: str
    values: tuple[float, ...]
    template: Scenario
    resonant_laser: bool = False

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ParameterError(f"unknown sweep axis {self.axis!r}")
        if len(self.values) == 0:
            raise ParameterError("sweep grid must be nonempty")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def scenario_at(self, value: float) -> Scenario:
        params = self.template.params
        if self.axis == "r1":
            params = params.replace(beta=beta_from_target_r1(value))
        elif self.axis == "delta_laser":
            params = params.replace(delta_laser=value)
        elif self.axis == "delta_raman":
            params = params.replace(delta_raman=value)
        elif self.axis == "kappa":
            params = params.replace(kappa=value)
        if self.resonant_laser:
            params = params.replace(delta_laser=resonant_laser_detuning(params))
        name = f"{self.template.name}[{self.axis}={value:g}]"
        return replace(self.template, name=name, params=params)


@dataclass
class SweepResult:
    spec: SweepSpec
    results: list[ScenarioResult]

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.spec.values)

    def summary(self) -> dict[str, np.ndarray]:
        """Per-point peak concurrence, its time, and the final value."""
        peak, t_peak, peak_se, stationary = [], [], [], []
        for res in self.results:
            c = res.table["concurrence"]
            k = int(np.argmax(c))
            peak.append(float(c[k]))
            t_peak.append(float(res.table.t[k]))
            se = res.table.columns.get("concurrence_se")
            peak_se.append(float(se[k]) if se is not None else 0.0)
            stationary.append(float(c[-1]))
        spacing = float(np.diff(self.results[0].table.t).mean())
        out = {
            self.spec.axis: self.values,
            "peak_concurrence": np.array(peak),
            "peak_concurrence_se": np.array(peak_se),
            "t_peak_us": np.array(t_peak),
            "t_peak_uncertainty_us": np.full(len(peak), spacing),
            "stationary_concurrence": np.array(stationary),
        }
        return out

    def argmax_peak(self) -> tuple[float, float]:
        """(axis value with the highest peak concurrence, that peak)."""
        summary = self.summary()
        k = int(np.argmax(summary["peak_concurrence"]))
        return float(self.values[k]), float(summary["peak_concurrence"][k])


def sweep(spec: SweepSpec) -> SweepResult:
    """Run the scan; every grid point reuses the template's master seed,
    so trajectory noise is common across points and summary comparisons
    between neighbouring points stay stable."""
    results = [run_scenario(spec.scenario_at(v)) for v in spec.values]
    return SweepResult(spec, results)


# ---------------------------------------------------------------------------
# scaling of the effective parameters with the Raman detuning


def scaling_report(
    delta_grid, params: ModelParams | None = None
) -> dict[str, np.ndarray]:
    """Columns of the coupling/decay scaling figure.

    Placement coefficients are pinned at the antinode (beta_j = 1), so
    the emission rate column is the per-ion rate at maximal coupling.
    The coupling-regime ratio 4 |beta_T g_eff| / kappa separates the
    overdamped (<< 1) from the underdamped (>> 1) exchange.
    """
    base = params if params is not None else reference_params()
    base = base.replace(beta=(1.0,) * base.n_ions)
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(delta_grid <= 0):
        raise ParameterError("detuning grid must be positive")
    g_eff = np.empty_like(delta_grid)
    gamma_s_eff = np.empty_like(delta_grid)
    ratio = np.empty_like(delta_grid)
    for i, d in enumerate(delta_grid):
        eff = derive_effective_params(base.replace(delta_raman=float(d)))
        g_eff[i] = abs(eff.g_eff)
        gamma_s_eff[i] = eff.gamma_s_eff[0]
        ratio[i] = 4.0 * eff.beta_t * abs(eff.g_eff) / base.kappa
    return {
        "delta_raman": delta_grid,
        "g_eff_abs": g_eff,
        "gamma_s_eff": gamma_s_eff,
        "kappa": np.full_like(delta_grid, base.kappa),
        "coupling_ratio": ratio,
    }


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


# ---------------------------------------------------------------------------
# character of the generated state


@dataclass(frozen=True)
class StateCharacter:
    label: str  # "subradiant-like" or "i-phase-like"
    dominance_ratio: float
    re_at_peak: float
    im_at_peak: float
    t_peak: float


def dispersive_character(table: TimeSeriesTable) -> StateCharacter:
    """Which coherence quadrature dominates at the concurrence peak.

    On the light-shift resonance the generated state approaches the
    decoupled (subradiant) superposition and the coherence is real; far
    off resonance the surviving state carries a +-i relative phase and
    the imaginary part dominates.
    """
    c = table["concurrence"]
    k = int(np.argmax(c))
    re = abs(float(table["rho_01_10_re"][k]))
    im = abs(float(table["rho_01_10_im"][k]))
    if re >= im:
        label = "subradiant-like"
        ratio = re / max(im, 1e-300)
    else:
        label = "i-phase-like"
        ratio = im / max(re, 1e-300)
    return StateCharacter(label, ratio, re, im, float(table.t[k]))


# ---------------------------------------------------------------------------
# named parameter presets (coupling regimes of the reference setup)


def preset_params(
    delta_scale: float,
    kappa_scale: float,
    r1: float | None = None,
    beta: tuple[float, float] | None = None,
    resonant: bool = True,
) -> ModelParams:
    """Reference parameters scaled to a coupling regime.

    ``r1`` picks ion placements through :func:`beta_from_target_r1`;
    ``resonant`` solves the laser detuning for zero effective detuning.
    """
    if r1 is not None:
        beta = beta_from_target_r1(r1)
    if beta is None:
        beta = (1.0, 1.0)
    params = reference_params(delta_scale, kappa_scale, beta=beta)
    if resonant:
        params = params.replace(delta_laser=resonant_laser_detuning(params))
    return params


def weak_coupling_params(r1: float = 0.55) -> ModelParams:
    """Overdamped exchange: detuning x100, cavity damping x0.1."""
    return preset_params(100.0, 0.1, r1=r1)


def strong_coupling_params(r1: float = 0.46) -> ModelParams:
    """Underdamped exchange: detuning x10, cavity damping x0.1."""
    return preset_params(10.0, 0.1, r1=r1)


def dispersive_params(delta_laser: float) -> ModelParams:
    """Homogeneous couplings (antinode placements) with an explicit
    laser detuning; detuning x10, cavity damping x0.1."""
    params = preset_params(10.0, 0.1, beta=(1.0, 1.0), resonant=False)
    return params.replace(delta_laser=delta_laser)
