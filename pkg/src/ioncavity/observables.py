"""Entanglement and population observables of the two-ion state."""

from __future__ import annotations

import numpy as np

from .spaces import DensityMatrix, SpaceKind, partial_trace_cavity, two_qubit_block

#: (row, col) pairs of the two-qubit matrix that may be nonzero when the
#: dynamics stays in the zero/one-excitation sector: populations of
#: |00>, |01>, |10> and the single-excitation coherence.
_ALLOWED = {(0, 0), (1, 1), (2, 2), (1, 2), (2, 1)}


class BlockFormError(ValueError):
    """The atomic state left the single-excitation block form."""


def check_block_form(rho_atoms: DensityMatrix, tol: float = 1e-6) -> None:
    """Verify the X-form structure: no |11> population, no coherence
    between the ground state and the one-excitation sector."""
    m = rho_atoms.matrix
    if m.shape != (4, 4):
        raise BlockFormError("expected a two-qubit atomic density matrix")
    for i in range(4):
        for k in range(4):
            if (i, k) in _ALLOWED:
                continue
            if abs(m[i, k]) > tol:
                raise BlockFormError(
                    f"entry ({i},{k}) = {m[i, k]:.3e} violates the "
                    f"one-excitation block form (tol {tol:g})"
                )


def concurrence_x_form(rho_atoms: DensityMatrix, tol: float = 1e-6) -> float:
    """Concurrence 2|rho_01,10| of a block-form two-qubit state.

    Valid only for states of the single-excitation block form, which is
    checked; for such states the general spin-flip construction reduces
    to twice the magnitude of the one nonzero off-diagonal element.
    """
    if rho_atoms.space.kind is not SpaceKind.ATOMS_TWO_QUBIT:
        raise BlockFormError("concurrence_x_form expects a two-qubit atomic state")
    check_block_form(rho_atoms, tol)
    return 2.0 * abs(rho_atoms.matrix[1, 2])


def atomic_observables(rho: DensityMatrix) -> dict[str, float]:
    """Standard observable set of a simulation-space density matrix.

    Returns populations rho_00,00 / rho_01,01 / rho_10,10 of the
    effective two-qubit state (cavity traced out, P levels excluded for
    the three-level basis), the single-excitation coherence rho_01,10
    split into real and imaginary parts, the concurrence, the state norm
    (trace) and the mean cavity photon number.
    """
    kind = rho.space.kind
    if kind is SpaceKind.RESTRICTED4:
        m = rho.matrix
        pop00 = (m[0, 0] + m[1, 1]).real
        pop01 = m[2, 2].real
        pop10 = m[3, 3].real
        coh = m[2, 3]
        n_photon = m[1, 1].real
    elif kind is SpaceKind.FULL_LAMBDA:
        qubits = two_qubit_block(partial_trace_cavity(rho))
        m = qubits.matrix
        pop00, pop01, pop10 = m[0, 0].real, m[1, 1].real, m[2, 2].real
        coh = m[1, 2]
        diag = rho.matrix.diagonal().real
        n_photon = float(sum(n * p for (_, n), p in zip(rho.space.basis, diag)))
    else:
        raise BlockFormError(f"no standard observables for {kind.value} basis")
    return {
        "rho_00_00": float(pop00),
        "rho_01_01": float(pop01),
        "rho_10_10": float(pop10),
        "rho_01_10_re": float(coh.real),
        "rho_01_10_im": float(coh.imag),
        "concurrence": 2.0 * float(abs(coh)),
        "norm": rho.trace(),
        "n_photon": float(n_photon),
    }


def state_observables(space, psi: np.ndarray) -> dict[str, float]:
    """Same observable set evaluated on a pure state vector."""
    kind = space.kind
    psi = np.asarray(psi)
    if kind is SpaceKind.RESTRICTED4:
        coh = psi[2] * np.conj(psi[3])
        return {
            "rho_00_00": float(abs(psi[0]) ** 2 + abs(psi[1]) ** 2),
            "rho_01_01": float(abs(psi[2]) ** 2),
            "rho_10_10": float(abs(psi[3]) ** 2),
            "rho_01_10_re": float(coh.real),
            "rho_01_10_im": float(coh.imag),
            "concurrence": 2.0 * float(abs(coh)),
            "norm": float(np.vdot(psi, psi).real),
            "n_photon": float(abs(psi[1]) ** 2),
        }
    rho = DensityMatrix.from_state(space, psi)
    return atomic_observables(rho)
