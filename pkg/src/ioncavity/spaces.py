"""Hilbert-space bookkeeping and dense operator construction.

Two simulation bases are supported:

* ``RESTRICTED4``: the at-most-one-excitation sector of two effective
  two-level ions plus a single cavity mode, ordered exactly
  ``|00;0>, |00;1>, |01;0>, |10;0>`` (atoms;photons).
* ``FULL_LAMBDA``: the full product basis of N three-level ions
  (levels ordered S, P, D) and a truncated Fock space, ordered
  lexicographically over (ion 1, ..., ion N, photon number).

Everything is dense complex; dimensions never exceed a few dozen here,
so no sparse machinery is used.  All public types are immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np

LEVELS = ("S", "P", "D")


class SpaceError(ValueError):
    """Invalid basis, operator name, or dimension mismatch."""


class SpaceKind(Enum):
    RESTRICTED4 = "restricted4"
    FULL_LAMBDA = "full_lambda"
    ATOMS_TWO_QUBIT = "atoms_two_qubit"
    ATOMS_THREE_LEVEL = "atoms_three_level"


def _freeze(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=complex)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class HilbertSpace:
    """An indexed basis.  ``basis`` maps index -> (atom levels, photon n);
    photon is ``None`` for atoms-only spaces."""

    kind: SpaceKind
    labels: tuple[str, ...]
    basis: tuple[tuple[tuple, int | None], ...]
    n_ions: int
    n_max: int | None = None

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, atoms: tuple, photon: int | None) -> int | None:
        key = (tuple(atoms), photon)
        return self._lookup.get(key)

    def __post_init__(self):
        object.__setattr__(
            self, "_lookup", {(a, n): i for i, (a, n) in enumerate(self.basis)}
        )

    def __repr__(self):  # keep dataclass repr small
        return f"HilbertSpace({self.kind.value}, dim={self.dim})"


def restricted4() -> HilbertSpace:
    basis = (((0, 0), 0), ((0, 0), 1), ((0, 1), 0), ((1, 0), 0))
    labels = tuple(f"|{a}{b};{n}>" for (a, b), n in basis)
    return HilbertSpace(SpaceKind.RESTRICTED4, labels, basis, n_ions=2)


def full_lambda(n_max: int = 2, n_ions: int = 2) -> HilbertSpace:
    if n_max < 1:
        raise SpaceError("n_max must be >= 1")
    states = []
    for levels in product(LEVELS, repeat=n_ions):
        for n in range(n_max + 1):
            states.append((levels, n))
    labels = tuple("|" + "".join(a) + f";{n}>" for a, n in states)
    return HilbertSpace(SpaceKind.FULL_LAMBDA, labels, tuple(states), n_ions, n_max)


def atoms_two_qubit() -> HilbertSpace:
    basis = tuple(((a, b), None) for a, b in product((0, 1), repeat=2))
    labels = tuple(f"|{a}{b}>" for (a, b), _ in basis)
    return HilbertSpace(SpaceKind.ATOMS_TWO_QUBIT, labels, basis, n_ions=2)


def atoms_three_level(n_ions: int = 2) -> HilbertSpace:
    basis = tuple((levels, None) for levels in product(LEVELS, repeat=n_ions))
    labels = tuple("|" + "".join(a) + ">" for a, _ in basis)
    return HilbertSpace(SpaceKind.ATOMS_THREE_LEVEL, labels, basis, n_ions)


@dataclass(frozen=True)
class LinearOp:
    """A dense operator bound to its space."""

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(self.matrix)
        if m.shape != (self.space.dim, self.space.dim):
            raise SpaceError(
                f"matrix shape {m.shape} does not match space dim {self.space.dim}"
            )
        object.__setattr__(self, "matrix", m)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def dag(self) -> "LinearOp":
        return LinearOp(self.space, self.matrix.conj().T)

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return float(np.linalg.norm(self.matrix, ord=2))

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        if other.space is not self.space and other.space != self.space:
            raise SpaceError("operator product across different spaces")
        return LinearOp(self.space, self.matrix @ other.matrix)


class DensityMatrix:
    """A validated density matrix on a given space.

    Construction checks Hermiticity (1e-10), unit trace (1e-8) and
    positivity (eigenvalues >= -1e-8).  The trace check can be disabled
    for sub-blocks extracted from a larger state.
    """

    HERM_TOL = 1e-10
    TRACE_TOL = 1e-8
    EIG_TOL = -1e-8

    def __init__(self, space: HilbertSpace, matrix: np.ndarray, *, enforce_trace=True):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (space.dim, space.dim):
            raise SpaceError(
                f"matrix shape {m.shape} does not match space dim {space.dim}"
            )
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > self.HERM_TOL:
            raise SpaceError(f"density matrix not Hermitian (deviation {herm_dev:.2e})")
        tr = float(m.trace().real)
        if enforce_trace and abs(tr - 1.0) > self.TRACE_TOL:
            raise SpaceError(f"density matrix trace {tr!r} is not 1")
        eigs = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
        if eigs.min() < self.EIG_TOL:
            raise SpaceError(f"density matrix not positive (min eig {eigs.min():.2e})")
        self.space = space
        self.matrix = _freeze(m)

    @classmethod
    def from_state(cls, space: HilbertSpace, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(space, np.outer(psi, psi.conj()))

    def trace(self) -> float:
        return float(self.matrix.trace().real)


# ---------------------------------------------------------------------------
# operator construction


def _photon_action(name: str, n: int, n_max: int | None):
    """Yield (coefficient, new photon number) pairs; truncation drops states."""
    if name == "a":
        if n > 0:
            yield np.sqrt(n), n - 1
    elif name == "adag":
        yield np.sqrt(n + 1), n + 1
    elif name == "n":
        if n > 0:
            yield float(n), n


def _parse_levels(space: HilbertSpace, l_to: str, l_from: str):
    """Levels of ``A_<l><l'>`` = |l><l'|: first label is the target."""
    if space.kind is SpaceKind.RESTRICTED4:
        valid = ("0", "1")
        conv = int
    else:
        valid = LEVELS
        conv = str
    if l_from not in valid or l_to not in valid:
        raise SpaceError(
            f"level labels {l_to}{l_from} invalid for {space.kind.value} basis"
        )
    return conv(l_to), conv(l_from)


def build_operator(space: HilbertSpace, name: str) -> LinearOp:
    """Build a named operator in the declared basis ordering.

    Recognized names: ``a``, ``adag``, ``n`` (photon number),
    ``sigma_minus_<j>`` / ``sigma_plus_<j>`` for the effective two-level
    ions, ``A_<l><l'>_<j>`` single-ion transition operators
    (``|l><l'|``, levels ``0/1`` or ``S/P/D`` depending on the basis),
    ``P_fock_<n>`` photon-number projectors, and ``identity``.
    Ion indices are 1-based.
    """
    dim = space.dim
    matrix = np.zeros((dim, dim), dtype=complex)

    if name == "identity":
        return LinearOp(space, np.eye(dim, dtype=complex))

    if name in ("a", "adag", "n"):
        for col, (atoms, n) in enumerate(space.basis):
            if n is None:
                raise SpaceError(f"{name!r} needs a cavity mode in the basis")
            for coeff, n_new in _photon_action(name, n, space.n_max):
                row = space.index(atoms, n_new)
                if row is not None:
                    matrix[row, col] += coeff
        return LinearOp(space, matrix)

    if name.startswith("P_fock_"):
        target = int(name.removeprefix("P_fock_"))
        for i, (_, n) in enumerate(space.basis):
            if n == target:
                matrix[i, i] = 1.0
        return LinearOp(space, matrix)

    parts = name.split("_")
    if parts[0] in ("sigma",) and len(parts) == 3:
        sign, j = parts[1], int(parts[2])
        if space.kind not in (SpaceKind.RESTRICTED4, SpaceKind.ATOMS_TWO_QUBIT):
            raise SpaceError(f"{name!r} is only defined for two-level ion bases")
        l_to, l_from = ((0, 1) if sign == "minus" else (1, 0))
    elif parts[0] == "A" and len(parts) == 3 and len(parts[1]) == 2:
        l_to, l_from = _parse_levels(space, parts[1][0], parts[1][1])
        j = int(parts[2])
    else:
        raise SpaceError(f"unknown operator name {name!r}")

    if not 1 <= j <= space.n_ions:
        raise SpaceError(f"ion index {j} out of range 1..{space.n_ions}")

    for col, (atoms, n) in enumerate(space.basis):
        if atoms[j - 1] == l_from:
            new_atoms = atoms[: j - 1] + (l_to,) + atoms[j:]
            row = space.index(new_atoms, n)
            if row is not None:
                matrix[row, col] += 1.0
    return LinearOp(space, matrix)


# ---------------------------------------------------------------------------
# reductions


def partial_trace_cavity(rho: DensityMatrix) -> DensityMatrix:
    """Trace out the cavity mode, returning the atoms-only state."""
    space = rho.space
    if space.kind is SpaceKind.RESTRICTED4:
        atom_space = atoms_two_qubit()
    elif space.kind is SpaceKind.FULL_LAMBDA:
        atom_space = atoms_three_level(space.n_ions)
    else:
        raise SpaceError(f"no cavity mode to trace in a {space.kind.value} basis")

    d = atom_space.dim
    out = np.zeros((d, d), dtype=complex)
    atom_index = {atoms: i for i, (atoms, _) in enumerate(atom_space.basis)}
    for i, (atoms_i, n_i) in enumerate(space.basis):
        for k, (atoms_k, n_k) in enumerate(space.basis):
            if n_i == n_k:
                out[atom_index[atoms_i], atom_index[atoms_k]] += rho.matrix[i, k]
    return DensityMatrix(atom_space, out)


def two_qubit_block(rho_atoms: DensityMatrix) -> DensityMatrix:
    """Extract the effective two-qubit block of a three-level atomic state.

    The metastable level D maps to the effective ground state ``|0>`` and
    the true ground level S to the effective excited state ``|1>`` (S can
    emit a cavity photon through the Raman transition).  Population left
    in the excited P levels is simply excluded, so the block trace may be
    slightly below one.
    """
    space = rho_atoms.space
    if space.kind is not SpaceKind.ATOMS_THREE_LEVEL or space.n_ions != 2:
        raise SpaceError("two_qubit_block expects a two-ion three-level atomic state")
    qubit_space = atoms_two_qubit()
    level_of = {0: "D", 1: "S"}
    out = np.zeros((4, 4), dtype=complex)
    for i, ((a, b), _) in enumerate(qubit_space.basis):
        for k, ((c, d), _) in enumerate(qubit_space.basis):
            row = space.index((level_of[a], level_of[b]), None)
            col = space.index((level_of[c], level_of[d]), None)
            out[i, k] = rho_atoms.matrix[row, col]
    return DensityMatrix(qubit_space, out, enforce_trace=False)
