"""Two trapped three-level ions coupled to a lossy cavity mode:
exact exchange-model solutions, adiabatic reduction to an effective
two-level model with emission jump channels, deterministic and
quantum-trajectory dynamics engines, and concurrence-based
entanglement analysis.
"""

from ._kernels import backend as kernel_backend
from .dicke import (
    AmplitudePair,
    DickeParams,
    envelope,
    evolve_amplitudes,
    generalized_rabi,
    stationary_concurrence,
    sub_super_decompose,
    vacuum_rabi,
)
from .engines import (
    IntegrationError,
    JumpStatistics,
    LindbladSystem,
    PositivityError,
    TrajectoryEnsemble,
    ensemble_reduce,
    integrate_lindblad,
    jump_statistics,
    run_mcwf,
)
from .experiments import (
    Engine,
    Model,
    Scenario,
    SweepSpec,
    dispersive_character,
    run_scenario,
    scaling_report,
    sweep,
)
from .observables import concurrence_x_form
from .params import ModelParams, ParameterError, reference_params
from .reduction import (
    EffectiveParams,
    JumpChannel,
    beta_from_positions,
    beta_from_target_r1,
    build_effective_hamiltonian,
    build_jump_channels,
    build_mc_hamiltonian,
    decay_rates,
    decay_vs_coupling,
    derive_effective_params,
    resonant_laser_detuning,
    xi_factor,
)
from .spaces import (
    DensityMatrix,
    HilbertSpace,
    LinearOp,
    SpaceKind,
    build_operator,
    full_lambda,
    partial_trace_cavity,
    restricted4,
)
from .tables import TimeSeriesTable

__version__ = "0.1.0"
