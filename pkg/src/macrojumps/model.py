"""Two three-level atoms coupled to a single lossy cavity mode.

Builds the truncated product basis, the non-Hermitian no-click Hamiltonian,
the quantum-jump channels, and the symmetric/antisymmetric (collective) basis
transform used to expose the decoupled entangled dark state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "BasisIndex",
    "Operator",
    "JumpChannel",
    "Model",
    "RegimeCheck",
    "RegimeReport",
    "CHANNEL_LABELS",
    "COLLECTIVE_ATOM_LABELS",
    "build_basis",
    "build_hamiltonian",
    "build_jump_operators",
    "build_model",
    "collective_transform",
    "collective_hamiltonian",
    "collective_jump_operators",
    "swap_operator",
    "dark_state",
    "validate_regime",
]

# Fixed channel ordering: cavity first, then per-atom decays grouped by atom.
CHANNEL_LABELS = ("cavity", "atom1_to0", "atom1_to1", "atom2_to0", "atom2_to1")
CAVITY_CHANNEL = 0

# Collective atomic states: exchange-symmetric triplet of product states,
# then |s_jk> = (|jk>+|kj>)/sqrt2, then |a_jk> = (|jk>-|kj>)/sqrt2 for j<k.
COLLECTIVE_ATOM_LABELS = ("00", "11", "22", "s01", "s02", "s12", "a01", "a02", "a12")


@dataclass(frozen=True)
class ModelParams:
    """Physical rates in units of the atom-cavity coupling g (hbar = 1).

    Levels 0 and 1 are ground states, level 2 is the excited state.  The
    0-2 transition couples to the cavity with strength ``g``; ``omega_l``
    drives 1-2 and ``omega_m`` drives 0-1.  Level 2 is detuned by ``delta``
    and decays at ``gamma0 + gamma1`` (branching to levels 0 and 1); the
    cavity field decays at ``kappa``.
    """

    g: float = 1.0
    kappa: float = 1.0
    gamma0: float = 0.05
    gamma1: float = 0.05
    omega_l: float = 1.0
    omega_m: float = 0.1
    delta: float = 50.0
    n_max: int = 2

    def __post_init__(self) -> None:
        for name in ("g", "kappa", "gamma0", "gamma1", "omega_l", "omega_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if not isinstance(self.n_max, int) or self.n_max < 0:
            raise ValueError(f"n_max must be a nonnegative integer, got {self.n_max}")

    @property
    def gamma(self) -> float:
        return self.gamma0 + self.gamma1


@dataclass(frozen=True, eq=False)
class BasisIndex:
    """Lexicographic index over |j1 j2, n> with j in {0,1,2}, n <= n_max."""

    n_max: int

    @property
    def dim(self) -> int:
        return 9 * (self.n_max + 1)

    def index(self, j1: int, j2: int, n: int) -> int:
        if not (0 <= j1 <= 2 and 0 <= j2 <= 2 and 0 <= n <= self.n_max):
            raise IndexError(f"state ({j1},{j2},{n}) outside basis with n_max={self.n_max}")
        return (3 * j1 + j2) * (self.n_max + 1) + n

    def state(self, k: int) -> tuple[int, int, int]:
        if not 0 <= k < self.dim:
            raise IndexError(f"index {k} outside basis of dimension {self.dim}")
        atom, n = divmod(k, self.n_max + 1)
        j1, j2 = divmod(atom, 3)
        return j1, j2, n

    def ket(self, j1: int, j2: int, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(j1, j2, n)] = 1.0
        return v

    def collective_index(self, label: str, n: int) -> int:
        """Index in the collective ordering, atomic label major, Fock minor."""
        if not 0 <= n <= self.n_max:
            raise IndexError(f"photon number {n} outside basis with n_max={self.n_max}")
        return COLLECTIVE_ATOM_LABELS.index(label) * (self.n_max + 1) + n

    def collective_ket(self, label: str, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.collective_index(label, n)] = 1.0
        return v


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense matrix tagged with the basis it is expressed in."""

    matrix: np.ndarray
    basis: str  # "bare" | "collective" | "effective"
    label: str = ""

    def __post_init__(self) -> None:
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class JumpChannel:
    """One decay channel: bare lowering operator plus its rate.

    The physical jump operator is sqrt(rate) * op; weights for channel
    selection are rate * ||op psi||^2.
    """

    label: str
    rate: float
    op: np.ndarray
    basis: str = "bare"

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError(f"channel {self.label}: rate must be nonnegative")
        object.__setattr__(self, "op", _readonly(np.ascontiguousarray(self.op, dtype=complex)))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return math.sqrt(self.rate) * (self.op @ psi)

    def weight(self, psi: np.ndarray) -> float:
        v = self.op @ psi
        return self.rate * float(np.real(np.vdot(v, v)))


def build_basis(n_max: int) -> BasisIndex:
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    return BasisIndex(n_max)


def _atom_op(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Embed a single-atom 3x3 operator on atom 1 and atom 2 (atomic part only)."""
    id3 = np.eye(3)
    return np.kron(a, id3), np.kron(id3, a)


def _lower(j: int) -> np.ndarray:
    """|j><2| on one atom."""
    m = np.zeros((3, 3))
    m[j, 2] = 1.0
    return m


def _fock_ops(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    b = np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1)
    return b, b.conj().T


def build_hamiltonian(params: ModelParams, basis: BasisIndex | None = None) -> Operator:
    """No-click (conditional) Hamiltonian in the bare product basis.

    H = sum_i [ omega_l/2 |1><2|_i + omega_m/2 |0><1|_i + h.c.
                + g (|0><2|_i b^dag + h.c.) + (delta - i gamma/2) |2><2|_i ]
        - i kappa/2 b^dag b
    """
    basis = basis or build_basis(params.n_max)
    n_f = params.n_max + 1
    id_f = np.eye(n_f)
    b, bdag = _fock_ops(params.n_max)

    h_atom = np.zeros((9, 9), dtype=complex)  # atomic part, same on every Fock level
    h_ab = np.zeros((9 * n_f, 9 * n_f), dtype=complex)  # atom-field coupling
    proj2 = np.zeros((3, 3))
    proj2[2, 2] = 1.0
    raise01 = np.zeros((3, 3))
    raise01[0, 1] = 1.0  # |0><1|
    for embed in _atom_op(_lower(1)):
        h_atom += params.omega_l / 2 * (embed + embed.conj().T)
    for embed in _atom_op(raise01):
        h_atom += params.omega_m / 2 * (embed + embed.conj().T)
    for embed in _atom_op(proj2):
        h_atom += (params.delta - 0.5j * params.gamma) * embed
    for embed in _atom_op(_lower(0)):
        coupling = params.g * np.kron(embed, bdag)
        h_ab += coupling + coupling.conj().T

    h = np.kron(h_atom, id_f) + h_ab - 0.5j * params.kappa * np.kron(np.eye(9), bdag @ b)
    return Operator(h, basis="bare", label="h_cond")


def build_jump_operators(params: ModelParams, basis: BasisIndex | None = None) -> tuple[JumpChannel, ...]:
    """The five jump channels in the fixed ordering of CHANNEL_LABELS."""
    basis = basis or build_basis(params.n_max)
    n_f = params.n_max + 1
    id_f = np.eye(n_f)
    b, _ = _fock_ops(params.n_max)
    cavity = np.kron(np.eye(9), b)
    chans = [JumpChannel("cavity", params.kappa, cavity)]
    for atom, embed_pick in ((1, 0), (2, 1)):
        for j, rate in ((0, params.gamma0), (1, params.gamma1)):
            op = np.kron(_atom_op(_lower(j))[embed_pick], id_f)
            chans.append(JumpChannel(f"atom{atom}_to{j}", rate, op))
    return tuple(chans)


def collective_transform(params: ModelParams, basis: BasisIndex | None = None) -> Operator:
    """Unitary mapping bare coordinates to collective coordinates.

    Rows are the collective states (COLLECTIVE_ATOM_LABELS order, tensored
    with Fock) expressed in the bare basis: psi_coll = U @ psi_bare.
    """
    basis = basis or build_basis(params.n_max)
    r = 1.0 / math.sqrt(2.0)
    combos = {
        "00": [((0, 0), 1.0)],
        "11": [((1, 1), 1.0)],
        "22": [((2, 2), 1.0)],
        "s01": [((0, 1), r), ((1, 0), r)],
        "s02": [((0, 2), r), ((2, 0), r)],
        "s12": [((1, 2), r), ((2, 1), r)],
        "a01": [((0, 1), r), ((1, 0), -r)],
        "a02": [((0, 2), r), ((2, 0), -r)],
        "a12": [((1, 2), r), ((2, 1), -r)],
    }
    u = np.zeros((basis.dim, basis.dim), dtype=complex)
    for label, terms in combos.items():
        for n in range(params.n_max + 1):
            row = basis.collective_index(label, n)
            for (j1, j2), coef in terms:
                u[row, basis.index(j1, j2, n)] = coef
    return Operator(u, basis="collective", label="bare_to_collective")


def _coll_ket_op(basis: BasisIndex, bra: str, ket: str) -> np.ndarray:
    """|bra><ket| on the atomic collective labels, identity on Fock."""
    m = np.zeros((9, 9))
    m[COLLECTIVE_ATOM_LABELS.index(bra), COLLECTIVE_ATOM_LABELS.index(ket)] = 1.0
    return np.kron(m, np.eye(basis.n_max + 1))


def collective_hamiltonian(params: ModelParams, basis: BasisIndex | None = None) -> Operator:
    """No-click Hamiltonian built directly in the collective basis.

    Constructed independently of build_hamiltonian so the two routes can be
    checked against each other through the basis transform.
    """
    basis = basis or build_basis(params.n_max)
    n_f = params.n_max + 1
    b, bdag = _fock_ops(params.n_max)
    k = lambda bra, ket: _coll_ket_op(basis, bra, ket)  # noqa: E731
    rt2 = math.sqrt(2.0)

    h = params.omega_l / 2 * (k("s01", "s02") + k("a01", "a02") + rt2 * (k("11", "s12") + k("s12", "22")))
    h = h + params.omega_m / 2 * (k("s02", "s12") + k("a02", "a12") + rt2 * (k("00", "s01") + k("s01", "11")))
    h = h + h.conj().T

    g_term = k("s01", "s12") - k("a01", "a12") + rt2 * (k("00", "s02") + k("s02", "22"))
    g_term = params.g * g_term @ np.kron(np.eye(9), bdag)
    h = h + g_term + g_term.conj().T

    excited = k("s02", "s02") + k("a02", "a02") + k("s12", "s12") + k("a12", "a12") + 2 * k("22", "22")
    h = h + (params.delta - 0.5j * params.gamma) * excited
    h = h - 0.5j * params.kappa * np.kron(np.eye(9), bdag @ b)
    return Operator(h, basis="collective", label="h_cond")


def collective_jump_operators(params: ModelParams, basis: BasisIndex | None = None) -> tuple[JumpChannel, ...]:
    """Collective-basis reset channels.

    Individual operators agree with the transformed per-atom channels only
    up to channel remixing; equality with the bare description holds at the
    superoperator level.
    """
    basis = basis or build_basis(params.n_max)
    b, _ = _fock_ops(params.n_max)
    k = lambda bra, ket: _coll_ket_op(basis, bra, ket)  # noqa: E731
    r = 1.0 / math.sqrt(2.0)
    r01 = k("00", "s02") + r * (k("s01", "s12") - k("a01", "a12")) + k("s02", "22")
    r02 = k("00", "a02") + r * (k("s01", "a12") - k("a01", "s12")) - k("a02", "22")
    r11 = k("11", "s12") + r * (k("s01", "s02") + k("a01", "a02")) + k("s12", "22")
    r12 = k("11", "a12") + r * (k("s01", "a02") + k("a01", "s02")) - k("a12", "22")
    cavity = np.kron(np.eye(9), b)
    return (
        JumpChannel("cavity", params.kappa, cavity, basis="collective"),
        JumpChannel("coll_to0_plus", params.gamma0, r01, basis="collective"),
        JumpChannel("coll_to0_minus", params.gamma0, r02, basis="collective"),
        JumpChannel("coll_to1_plus", params.gamma1, r11, basis="collective"),
        JumpChannel("coll_to1_minus", params.gamma1, r12, basis="collective"),
    )


def swap_operator(basis: BasisIndex) -> np.ndarray:
    """Atom-exchange unitary, identity on the Fock factor."""
    p = np.zeros((basis.dim, basis.dim))
    for child in range(basis.dim):
        j1, j2, n = basis.state(child)
        p[basis.index(j2, j1, n), child] = 1.0
    return p


def dark_state(basis: BasisIndex, n: int = 0) -> np.ndarray:
    """Maximally entangled antisymmetric ground state |a01, n> in bare coordinates."""
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index(0, 1, n)] = 1.0 / math.sqrt(2.0)
    v[basis.index(1, 0, n)] = -1.0 / math.sqrt(2.0)
    return v


@dataclass(frozen=True, eq=False)
class Model:
    """Parameter set with its assembled bare-basis operators."""

    params: ModelParams
    basis: BasisIndex
    h_cond: Operator
    channels: tuple[JumpChannel, ...]

    @property
    def dim(self) -> int:
        return self.basis.dim


def build_model(params: ModelParams) -> Model:
    basis = build_basis(params.n_max)
    return Model(
        params=params,
        basis=basis,
        h_cond=build_hamiltonian(params, basis),
        channels=build_jump_operators(params, basis),
    )


@dataclass(frozen=True)
class RegimeCheck:
    condition: str
    ratio: float
    status: str  # "pass" | "borderline" | "warn"


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple[RegimeCheck, ...]

    @property
    def ok(self) -> bool:
        """True when no check is a hard warn (borderline cases allowed)."""
        return all(c.status != "warn" for c in self.checks)


def validate_regime(
    params: ModelParams,
    *,
    detuning_factor: float = 10.0,
    drive_factor: float = 0.5,
) -> RegimeReport:
    """Check the operating-regime hierarchy omega_m < g, kappa, gamma, omega_l << |delta|.

    A "much less than delta" condition warns when the rate exceeds
    |delta| / detuning_factor; the weak-drive conditions warn when omega_m
    exceeds the compared rate, and are borderline above drive_factor times it.
    """
    checks = []
    rates = {"g": abs(params.g), "kappa": params.kappa, "gamma": params.gamma, "omega_l": abs(params.omega_l)}
    for name, value in rates.items():
        cond = f"omega_m < {name}"
        if params.omega_m == 0:
            checks.append(RegimeCheck(cond, 0.0, "pass"))
            continue
        ratio = abs(params.omega_m) / value if value > 0 else math.inf
        status = "pass" if ratio < drive_factor else ("borderline" if ratio <= 1.0 else "warn")
        checks.append(RegimeCheck(cond, ratio, status))
    for name, value in rates.items():
        cond = f"{name} << delta"
        if value == 0:
            checks.append(RegimeCheck(cond, 0.0, "pass"))
            continue
        ratio = value / abs(params.delta) if params.delta != 0 else math.inf
        limit = 1.0 / detuning_factor
        status = "pass" if ratio < limit else ("borderline" if ratio == limit else "warn")
        checks.append(RegimeCheck(cond, ratio, status))
    return RegimeReport(tuple(checks))
