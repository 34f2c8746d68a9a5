import numpy as np
import pytest
from scipy.linalg import expm

from ioncavity.dicke import AmplitudePair, DickeParams, evolve_amplitudes
from ioncavity.engines import (
    IntegrationError,
    LindbladSystem,
    ensemble_reduce,
    integrate_lindblad,
    jump_statistics,
    run_mcwf,
)
from ioncavity.experiments import (
    Engine,
    Model,
    Scenario,
    build_system,
    run_scenario,
    strong_coupling_params,
)
from ioncavity.params import TWO_PI, reference_params
from ioncavity.reduction import (
    JumpChannel,
    build_jump_channels,
    tavis_cummings_hamiltonian,
)
from ioncavity.spaces import (
    DensityMatrix,
    HilbertSpace,
    LinearOp,
    SpaceKind,
    build_operator,
    restricted4,
)


def cavity_decay_system(kappa=0.8):
    space = restricted4()
    h = LinearOp(space, np.zeros((4, 4), dtype=complex))
    channel = JumpChannel("cavity_a", kappa, build_operator(space, "a"))
    return LindbladSystem(space, h, (channel,))


def test_pure_cavity_decay_is_exponential():
    kappa = 0.8
    system = cavity_decay_system(kappa)
    psi0 = np.zeros(4, dtype=complex)
    psi0[1] = 1.0
    t = np.linspace(0.0, 4.0, 60)
    res = integrate_lindblad(system, DensityMatrix.from_state(system.space, psi0), t)
    assert np.max(np.abs(res.table["n_photon"] - np.exp(-TWO_PI * kappa * t))) < 1e-6


def test_unitary_evolution_preserves_purity():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0))
    space = restricted4()
    from ioncavity.reduction import build_effective_hamiltonian

    system = LindbladSystem(space, build_effective_hamiltonian(params))
    psi0 = np.zeros(4, dtype=complex)
    psi0[3] = 1.0
    t = np.linspace(0.0, 10.0, 40)
    res = integrate_lindblad(system, DensityMatrix.from_state(space, psi0), t)
    for state in res.states[:: len(res.states) // 8]:
        purity = np.trace(state.matrix @ state.matrix).real
        assert purity == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(res.table["norm"] - 1.0)) < 1e-9


def test_integrator_matches_closed_form():
    p = DickeParams(alpha_total=0.4, r1=0.6, delta=0.25, kappa=1.1)
    space = restricted4()
    h = tavis_cummings_hamiltonian(
        space, 0.0, p.delta, [p.alpha_total * p.r1, p.alpha_total * p.r2]
    )
    system = LindbladSystem(
        space, h, (JumpChannel("cavity_a", p.kappa, build_operator(space, "a")),)
    )
    c0 = AmplitudePair(0.8, 0.6j)
    psi0 = np.zeros(4, dtype=complex)
    psi0[3], psi0[2] = c0.c10, c0.c01
    t = np.linspace(0.0, 12.0, 80)
    res = integrate_lindblad(system, DensityMatrix.from_state(space, psi0), t)
    c10, c01 = evolve_amplitudes(t, c0, p)
    assert np.max(np.abs(res.table["rho_10_10"] - np.abs(c10) ** 2)) < 1e-6
    coherence = res.table["rho_01_10_re"] + 1j * res.table["rho_01_10_im"]
    assert np.max(np.abs(coherence - c01 * np.conj(c10))) < 1e-6


def test_integrator_is_fourth_order():
    # halving the step in the asymptotic regime gains at least 8x accuracy
    p = DickeParams(alpha_total=0.5, r1=0.6, delta=0.3, kappa=1.0)
    space = restricted4()
    h = tavis_cummings_hamiltonian(
        space, 0.0, p.delta, [p.alpha_total * p.r1, p.alpha_total * p.r2]
    )
    system = LindbladSystem(
        space, h, (JumpChannel("cavity_a", p.kappa, build_operator(space, "a")),)
    )
    psi0 = np.zeros(4, dtype=complex)
    psi0[3] = 1.0
    rho0 = DensityMatrix.from_state(space, psi0)
    t = np.array([0.0, 2.0])
    c10, c01 = evolve_amplitudes(t, AmplitudePair(1.0, 0.0), p)

    def error(step):
        res = integrate_lindblad(system, rho0, t, step=step)
        return abs(res.table["rho_10_10"][-1] - abs(c10[-1]) ** 2)

    e1, e2 = error(0.02), error(0.01)
    assert e1 / e2 >= 8.0


def test_expm_method_matches_rk4():
    system = cavity_decay_system(0.5)
    params = strong_coupling_params()
    scenario = Scenario("x", Model.EFFECTIVE, params, 5.0, n_points=30)
    sys_eff, psi0 = build_system(scenario)
    rho0 = DensityMatrix.from_state(sys_eff.space, psi0)
    t = scenario.t_grid
    a = integrate_lindblad(sys_eff, rho0, t, method="rk4")
    b = integrate_lindblad(sys_eff, rho0, t, method="expm")
    for col in ("rho_00_00", "rho_10_10", "concurrence"):
        assert np.max(np.abs(a.table[col] - b.table[col])) < 1e-9


def test_integrator_rejects_unstable_step():
    system = cavity_decay_system(0.8)
    psi0 = np.zeros(4, dtype=complex)
    psi0[1] = 1.0
    rho0 = DensityMatrix.from_state(system.space, psi0)
    with pytest.raises(IntegrationError):
        integrate_lindblad(system, rho0, np.linspace(0.0, 50.0, 3), step=5.0)


# ---------------------------------------------------------------------------
# trajectory engine


def effective_system():
    scenario = Scenario(
        "sys", Model.EFFECTIVE, strong_coupling_params(), 6.75, engine=Engine.MCWF
    )
    return build_system(scenario)


def test_mcwf_without_channels_is_deterministic():
    params = strong_coupling_params()
    from ioncavity.reduction import build_effective_hamiltonian

    space = restricted4()
    system = LindbladSystem(space, build_effective_hamiltonian(params))
    psi0 = np.zeros(4, dtype=complex)
    psi0[3] = 1.0
    t = np.linspace(0.0, 5.0, 40)
    ens = run_mcwf(system, psi0, t, n_traj=8, master_seed=5)
    u = expm(-1j * TWO_PI * system.hamiltonian.matrix * (t[1] - t[0]))
    psi = psi0.copy()
    for k in range(len(t)):
        assert np.allclose(ens.states[:, k, :], psi[None, :], atol=1e-9)
        psi = u @ psi
        psi /= np.linalg.norm(psi)
    table = ensemble_reduce(ens)
    for name in table.names:
        if name.endswith("_se"):
            assert np.max(np.abs(table[name])) == 0.0


def test_mcwf_reproducibility_and_worker_invariance():
    system, psi0 = effective_system()
    t = np.linspace(0.0, 6.75, 50)
    runs = [
        run_mcwf(system, psi0, t, n_traj=48, master_seed=7, n_workers=w)
        for w in (1, 2, 5)
    ]
    for other in runs[1:]:
        assert np.array_equal(runs[0].states, other.states)
        assert np.array_equal(runs[0].jump_step, other.jump_step)
        assert np.array_equal(runs[0].jump_traj, other.jump_traj)
        assert np.array_equal(runs[0].jump_channel, other.jump_channel)


def test_mcwf_trajectory_is_pure_function_of_seed_and_index():
    system, psi0 = effective_system()
    t = np.linspace(0.0, 6.75, 50)
    big = run_mcwf(system, psi0, t, n_traj=24, master_seed=11)
    small = run_mcwf(system, psi0, t, n_traj=6, master_seed=11)
    assert np.array_equal(big.states[:6], small.states)


def test_mcwf_norm_discipline():
    system, psi0 = effective_system()
    t = np.linspace(0.0, 6.75, 50)
    ens = run_mcwf(system, psi0, t, n_traj=32, master_seed=3)
    norms = np.linalg.norm(ens.states, axis=2)
    assert np.max(np.abs(norms - 1.0)) < 1e-9
    # no-jump propagator is a contraction: between jumps the norm decreases
    h_mc = system.mc_hamiltonian()
    u = expm(-1j * TWO_PI * h_mc * (t[1] - t[0]) / 4)
    assert np.linalg.norm(u, ord=2) <= 1.0 + 1e-12


def test_jump_times_lie_on_substep_boundaries():
    system, psi0 = effective_system()
    t = np.linspace(0.0, 6.75, 50)
    ens = run_mcwf(system, psi0, t, n_traj=64, master_seed=9)
    assert len(ens.jump_time)  # the regime produces jumps
    spans = np.diff(t)
    # reconstruct the substep schedule exactly as the engine does
    from ioncavity.engines import DEFAULT_P_MAX, _substep_schedule

    rate_scale = sum(TWO_PI * ch.rate * ch.op.norm() ** 2 for ch in system.channels)
    n_sub, dt_sub = _substep_schedule(t, DEFAULT_P_MAX / rate_scale)
    boundaries = np.concatenate(
        [t[k] + dt_sub[k] * np.arange(1, n_sub[k] + 1) for k in range(len(spans))]
    )
    for jt in ens.jump_time:
        assert np.min(np.abs(boundaries - jt)) < 1e-12


def test_mcwf_poisson_counting():
    # flat-rate channel: H = 0, C = swap, ||C psi|| = 1 always
    space = restricted4()
    h = LinearOp(space, np.zeros((4, 4), dtype=complex))
    swap = np.zeros((4, 4), dtype=complex)
    swap[0, 1] = swap[1, 0] = swap[2, 3] = swap[3, 2] = 1.0
    rate = 1.0 / TWO_PI  # unit angular rate: mean count = t
    system = LindbladSystem(space, h, (JumpChannel("swap", rate, LinearOp(space, swap)),))
    psi0 = np.zeros(4, dtype=complex)
    psi0[3] = 1.0
    t = np.linspace(0.0, 3.0, 31)
    ens = run_mcwf(system, psi0, t, n_traj=600, master_seed=13)
    stats = jump_statistics(ens)
    expected = t[-1]
    se = stats.se[0, -1]
    assert abs(stats.mean[0, -1] - expected) <= 3 * se


def test_ensemble_reduce_known_trajectories():
    space = restricted4()
    t = np.array([0.0, 1.0])
    states = np.zeros((2, 2, 4), dtype=complex)
    states[0, :, 3] = 1.0  # trajectory 1 stays in |10;0>
    states[1, :, 2] = 1.0  # trajectory 2 stays in |01;0>
    ens_args = dict(
        space=space,
        t=t,
        states=states,
        jump_traj=np.empty(0, dtype=np.int64),
        jump_step=np.empty(0, dtype=np.int64),
        jump_time=np.empty(0),
        jump_channel=np.empty(0, dtype=np.int64),
        channel_labels=(),
        master_seed=0,
    )
    from ioncavity.engines import TrajectoryEnsemble

    table = ensemble_reduce(TrajectoryEnsemble(**ens_args))
    assert np.allclose(table["rho_10_10"], 0.5)
    assert np.allclose(table["rho_01_01"], 0.5)
    assert np.allclose(table["concurrence"], 0.0)
    rho = TrajectoryEnsemble(**ens_args).mean_density_matrix(0)
    assert rho.matrix[3, 3] == pytest.approx(0.5)


def test_jump_statistics_shapes_and_monotonicity():
    system, psi0 = effective_system()
    t = np.linspace(0.0, 6.75, 40)
    ens = run_mcwf(system, psi0, t, n_traj=128, master_seed=2)
    stats = jump_statistics(ens)
    assert stats.mean.shape == (5, len(t))
    assert np.all(np.diff(stats.mean, axis=1) >= -1e-15)
    assert np.all(stats.mean >= 0)
    table = stats.table()
    assert f"jumps_{stats.labels[0]}" in table.names


def test_mcwf_rejects_time_dependent_generator():
    system, psi0 = effective_system()
    bad = LindbladSystem(
        system.space,
        system.hamiltonian,
        system.channels,
        h_t=lambda t: system.hamiltonian.matrix,
    )
    with pytest.raises(ValueError):
        run_mcwf(bad, psi0, np.linspace(0, 1, 5), 4, 0)
