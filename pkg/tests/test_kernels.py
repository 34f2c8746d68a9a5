"""Contract parity between the compiled kernels and the NumPy fallback."""

import numpy as np
import pytest

import ioncavity._kernels as kernels
from ioncavity._kernels import fallback
from ioncavity.engines import run_mcwf
from ioncavity.experiments import Engine, Model, Scenario, build_system
from ioncavity.experiments import strong_coupling_params

compiled = pytest.importorskip(
    "ioncavity._kernels._core", reason="compiled kernels unavailable"
)


@pytest.fixture
def mcwf_inputs():
    scenario = Scenario(
        "k", Model.EFFECTIVE, strong_coupling_params(), 4.0, engine=Engine.MCWF
    )
    system, psi0 = build_system(scenario)
    t = np.linspace(0.0, 4.0, 30)
    return system, psi0, t


def _run_with(impl, system, psi0, t, n_traj, seed, monkeypatch):
    monkeypatch.setattr(kernels, "mcwf_chunk", impl.mcwf_chunk)
    return run_mcwf(system, psi0, t, n_traj, seed)


def test_mcwf_backends_agree(mcwf_inputs, monkeypatch):
    system, psi0, t = mcwf_inputs
    a = _run_with(compiled, system, psi0, t, 64, 21, monkeypatch)
    b = _run_with(fallback, system, psi0, t, 64, 21, monkeypatch)
    # identical jump decisions; states equal to matvec rounding
    assert np.array_equal(a.jump_step, b.jump_step)
    assert np.array_equal(a.jump_channel, b.jump_channel)
    assert np.array_equal(a.jump_traj, b.jump_traj)
    assert np.max(np.abs(a.states - b.states)) < 1e-12


def test_rk4_backends_agree(mcwf_inputs):
    system, _, _ = mcwf_inputs
    lv = system.liouvillian()
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    y0 = rho.reshape(-1)
    n_sub = np.full(7, 11, dtype=np.int64)
    dt = np.full(7, 2e-3)
    a = np.asarray(compiled.rk4_lindblad(lv, y0, 4, n_sub, dt))
    b = np.asarray(fallback.rk4_lindblad(lv, y0.copy(), 4, n_sub, dt))
    assert np.max(np.abs(a - b)) < 1e-13


@pytest.mark.parametrize("impl_name", ["compiled", "fallback"])
def test_jump_cap_raises(impl_name, mcwf_inputs):
    impl = compiled if impl_name == "compiled" else fallback
    system, psi0, _ = mcwf_inputs
    dim = system.space.dim
    u = np.eye(dim, dtype=complex)
    c_ops = np.stack([np.eye(dim, dtype=complex)])
    with pytest.raises(RuntimeError):
        impl.mcwf_chunk(
            u[None, :, :],
            np.array([1], dtype=np.int64),
            np.array([1.0]),
            c_ops,
            np.zeros(1, dtype=np.uint8),
            np.zeros((1, dim), dtype=complex),
            np.zeros((1, dim), dtype=complex),
            np.array([10.0]),  # dp = 10 >> p_max
            psi0,
            np.zeros((2, 1)),
            0.01,
        )


def test_active_backend_exposed():
    assert kernels.backend in ("compiled", "python")
