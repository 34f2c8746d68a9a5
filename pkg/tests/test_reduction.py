import numpy as np
import pytest

from ioncavity.params import ModelParams, ParameterError, reference_params
from ioncavity.reduction import (
    beta_from_positions,
    beta_from_target_r1,
    build_effective_hamiltonian,
    build_jump_channels,
    build_mc_hamiltonian,
    decay_rates,
    decay_vs_coupling,
    derive_effective_params,
    full_lambda_channels,
    full_lambda_hamiltonian,
    resonant_laser_detuning,
    stark_frame_jump_matrices,
    tavis_cummings_hamiltonian,
    xi_factor,
)
from ioncavity.params import TWO_PI
from ioncavity.spaces import build_operator, full_lambda, restricted4


def test_xi_factor_values():
    assert xi_factor(20.0, 22.3, 1.7) == pytest.approx(400.0 / 544.0)
    assert xi_factor(100.0, 0.0, 0.0) == 1.0
    assert xi_factor(2000.0, 22.3, 1.7) == pytest.approx(1.0, abs=5e-5)
    with pytest.raises(ParameterError):
        xi_factor(0.0, 1.0, 1.0)


def test_beta_from_positions():
    assert beta_from_positions(1.0, 1.0, [0.0])[0] == 0.0
    # antinode with a full laser-phase winding: exp(2 pi i) sin(pi/2) = 1
    value = beta_from_positions(2 * np.pi, np.pi / 2, [1.0])[0]
    assert value == pytest.approx(1.0, abs=1e-12)
    # half-winding at k_C x = pi/6: exp(i pi) sin(pi/6) = -1/2
    value = beta_from_positions(np.pi, np.pi / 6, [1.0])[0]
    assert value == pytest.approx(-0.5, abs=1e-12)


def test_beta_from_target_r1():
    assert beta_from_target_r1(1 / np.sqrt(2)) == pytest.approx((1.0, 1.0))
    b1, b2 = beta_from_target_r1(0.55)
    assert (b1, b2) == pytest.approx((0.55 / np.sqrt(1 - 0.55**2), 1.0))
    assert b1 == pytest.approx(0.6586, abs=5e-5)
    assert beta_from_target_r1(0.0) == (0.0, 1.0)
    with pytest.raises(ParameterError):
        beta_from_target_r1(1.2)


def test_beta_round_trip_recovers_r1():
    for r1 in np.linspace(0.0, 1.0, 21):
        b1, b2 = beta_from_target_r1(float(r1))
        assert max(b1, b2) == 1.0
        beta_t = np.hypot(b1, b2)
        assert b1 / beta_t == pytest.approx(r1, abs=1e-12)


def test_effective_coupling_magnitudes():
    weak = derive_effective_params(reference_params(100.0, 0.1))
    assert abs(weak.g_eff) == pytest.approx(0.017, rel=0.02)
    strong = derive_effective_params(reference_params(10.0, 0.1))
    assert abs(strong.g_eff) == pytest.approx(0.170, rel=0.02)


def test_reduce_without_drive():
    params = reference_params().replace(omega_rabi=0.0)
    eff = derive_effective_params(params)
    assert all(a == 0 for a in eff.alpha_eff)
    xi = eff.xi
    expected = xi * abs(params.beta[0] * params.g_cavity) ** 2 * params.gamma_s
    assert eff.gamma_s_eff[0] == pytest.approx(expected / params.delta_raman**2)


def test_effective_params_invariants():
    eff = derive_effective_params(reference_params(10.0, 0.1, beta=(0.5, 1.0)), nu=0.7)
    assert 0 < eff.xi <= 1
    assert eff.mu == pytest.approx((eff.stark_cavity + eff.nu) / 3.0, abs=1e-15)
    for wa, de in zip(eff.omega_a_eff, eff.delta_eff):
        assert de == pytest.approx(wa - eff.omega_c_eff, abs=1e-12)
    # nu shifts both effective frequencies but never the detuning
    base = derive_effective_params(reference_params(10.0, 0.1, beta=(0.5, 1.0)))
    assert eff.delta_eff == pytest.approx(base.delta_eff, abs=1e-12)


def test_validity_flag():
    assert not derive_effective_params(reference_params(100.0)).flagged
    assert derive_effective_params(reference_params(1.0)).flagged


def test_decay_rate_branching_ratio_exact():
    gs, gd = decay_rates(reference_params(10.0, 0.1, beta=(0.3, 1.0)))
    for s, d in zip(gs, gd):
        assert s / d == 22.3 / 1.7


def test_decay_rates_scale_inverse_square():
    # far-detuned limit: doubling the detuning quarters the rates
    a = decay_rates(reference_params(10000.0))[0][0]
    b = decay_rates(reference_params(20000.0))[0][0]
    assert a / b == pytest.approx(4.0, rel=1e-6)


def test_decay_vs_coupling():
    base = reference_params()

    def with_ratio(x):
        # set |beta g / Omega| = x by adjusting the drive at an antinode
        return base.replace(omega_rabi=base.g_cavity / x, beta=(1.0, 1.0))

    gs_over_delta = base.gamma_s / base.delta_raman
    assert decay_vs_coupling(with_ratio(1.0), 1) == pytest.approx(2 * gs_over_delta)
    assert decay_vs_coupling(with_ratio(2.0), 1) == pytest.approx(2.5 * gs_over_delta)
    grid = np.linspace(0.1, 10.0, 1981)
    values = [decay_vs_coupling(with_ratio(float(x)), 1) for x in grid]
    assert grid[int(np.argmin(values))] == pytest.approx(1.0, abs=0.01)
    with pytest.raises(ParameterError):
        decay_vs_coupling(base.replace(beta=(0.0, 1.0)), 1)


def test_jump_channels_structure():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0))
    channels = build_jump_channels(params)
    labels = [ch.label for ch in channels]
    assert labels == ["C_S_1", "C_D_1", "C_S_2", "C_D_2", "cavity_a"]
    gs, gd = decay_rates(params)
    for ch in channels[:4]:
        assert ch.op.norm() == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.matrix_rank(ch.op.matrix, tol=1e-12) == 1
    assert channels[0].rate == pytest.approx(gs[0], abs=1e-15)
    assert channels[1].rate == pytest.approx(gd[0], abs=1e-15)
    assert channels[3].rate == pytest.approx(gd[1], abs=1e-15)
    # rate identity against the closed-form expression
    xi = xi_factor(params.delta_raman, params.gamma_s, params.gamma_d)
    expected = (
        xi
        * (params.omega_rabi[0] ** 2 + abs(params.beta[0] * params.g_cavity) ** 2)
        * params.gamma_s
        / params.delta_raman**2
    )
    assert channels[0].rate == pytest.approx(expected, rel=1e-12)

    # dephasing channel keeps the excitation, dissipative one drops it
    space = restricted4()
    phi = channels[0].op.matrix[3, :].conj()  # source state of ion 1
    out_s = channels[0].op.matrix @ phi
    out_d = channels[1].op.matrix @ phi
    assert abs(out_s[3]) == pytest.approx(1.0, abs=1e-12)  # lands on |10;0>
    assert abs(out_d[0]) == pytest.approx(1.0, abs=1e-12)  # lands on |00;0>


def test_jump_channels_without_drive():
    params = reference_params().replace(omega_rabi=0.0)
    channels = build_jump_channels(params)
    phi = channels[0].op.matrix[3, :].conj()
    expected = np.zeros(4)
    expected[1] = 1.0  # photon state |00;1> is the only source
    assert np.allclose(np.abs(phi), expected, atol=1e-12)


def test_effective_hamiltonian_matches_exchange_construction():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0), delta_laser=0.13)
    eff = derive_effective_params(params)
    direct = build_effective_hamiltonian(params, frame="rotated").matrix
    via_ops = tavis_cummings_hamiltonian(
        restricted4(), eff.omega_c_eff, eff.omega_a_eff, eff.alpha_eff
    ).matrix
    assert np.allclose(direct, via_ops, atol=1e-12)


def test_subradiant_state_is_exchange_eigenstate():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0))
    eff = derive_effective_params(params)
    h = tavis_cummings_hamiltonian(
        restricted4(), eff.omega_c_eff, eff.omega_a_eff, eff.alpha_eff
    ).matrix
    beta_t = eff.beta_t
    r1, r2 = params.beta[0] / beta_t, params.beta[1] / beta_t
    psi = np.array([0.0, 0.0, -r1, r2], dtype=complex)
    out = h @ psi
    eigenvalue = 0.5 * eff.omega_c_eff + eff.omega_a_eff[0]
    assert np.allclose(out, eigenvalue * psi, atol=1e-10)


def test_resonance_condition_zeroes_detuning():
    params = reference_params(10.0, 0.1, beta=(0.7, 1.0))
    params = params.replace(delta_laser=resonant_laser_detuning(params))
    eff = derive_effective_params(params)
    assert eff.delta_eff == pytest.approx((0.0, 0.0), abs=1e-14)


def test_mc_hamiltonian_structure():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0))
    h_mc = build_mc_hamiltonian(params).matrix
    herm = build_effective_hamiltonian(params, frame="rotated").matrix
    anti = (h_mc - herm) / -0.5j  # sum of rate-weighted C+C
    assert np.allclose(anti, anti.conj().T, atol=1e-14)
    eigs = np.linalg.eigvalsh((anti + anti.conj().T) / 2)
    assert eigs.min() >= -1e-14  # negative semidefinite anti-Hermitian part

    # trace of the decay part equals the total channel weight
    channels = build_jump_channels(params)
    total = sum(ch.rate * np.trace(ch.op.matrix.conj().T @ ch.op.matrix).real
                for ch in channels)
    assert -2.0 * np.trace(h_mc).imag == pytest.approx(total, rel=1e-12)

    # short-time norm decay of ion 1's source state at first order
    from scipy.linalg import expm

    phi = channels[0].op.matrix[3, :].conj()
    dt = 1e-5
    u = expm(-1j * TWO_PI * h_mc * dt)
    measured = (1.0 - np.linalg.norm(u @ phi) ** 2) / dt
    gs, gd = decay_rates(params)
    n_op = build_operator(restricted4(), "n").matrix
    expected = TWO_PI * (
        gs[0] + gd[0] + params.kappa * np.vdot(phi, n_op @ phi).real
    )
    assert measured == pytest.approx(expected, rel=1e-3)


def test_zero_rate_mc_hamiltonian_is_hermitian():
    params = reference_params(10.0, 0.0, beta=(0.5, 1.0))
    params = params.replace(gamma_s=1e-300, gamma_d=1e-300)
    h_mc = build_mc_hamiltonian(params).matrix
    assert np.max(np.abs(h_mc - h_mc.conj().T)) < 1e-290


def test_stark_frame_matches_rotated_at_t0():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0), delta_laser=0.3)
    channels = build_jump_channels(params)
    stark = stark_frame_jump_matrices(params, 0.0)
    for ch, mat in zip(channels, stark):
        assert np.allclose(ch.op.matrix, mat, atol=1e-12)


def test_full_model_conserves_excitation_number():
    params = reference_params(10.0, 0.1, beta=(0.5, 1.0), delta_laser=0.2)
    space = full_lambda(n_max=2)
    h = full_lambda_hamiltonian(params, space).matrix
    assert np.max(np.abs(h - h.conj().T)) < 1e-12
    n_exc = build_operator(space, "n").matrix.copy()
    for j in (1, 2):
        n_exc += build_operator(space, f"A_PP_{j}").matrix
        n_exc += build_operator(space, f"A_SS_{j}").matrix
    assert np.max(np.abs(h @ n_exc - n_exc @ h)) < 1e-12
    labels = [ch.label for ch in full_lambda_channels(params, space)]
    assert labels == ["cavity_a", "C_S_1", "C_D_1", "C_S_2", "C_D_2"]
