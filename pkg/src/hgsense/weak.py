"""Impulsive weak coupling of a qubit to a transverse-mode pointer.

The chain: prepare qubit |i> and pointer |psi_i>, couple them impulsively
with strength alpha through a qubit observable (a Pauli axis) and a pointer
generator (orbital angular momentum for beam rotation, transverse momentum
for displacement), post-select the qubit on |f>, and read the pointer out.

To first order the post-selected pointer is N (1 - i alpha A_w Omega)|psi_i>
with the weak value A_w = <f|A|i> / <f|i>; the exact evolution splits the
coupling along the +-1 eigenspaces of the Pauli axis, which only needs
exp(-+ i alpha Omega) acting on the pointer.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    DegeneratePostSelectionError,
    InvalidStateError,
    NoCarrierError,
    TotalExtinctionError,
    WeakRegimeError,
)
from .modes import (
    ModeIndex,
    ModeState,
    OperatorMatrix,
    basis_dim,
    flat_index,
    lz_matrix,
    momentum_matrix_x,
)

ORTHOGONALITY_FLOOR = 1e-12
DEFAULT_WEAK_LIMIT = 0.1


@dataclass(frozen=True)
class QubitState:
    """Normalized two-level amplitude pair (c0, c1)."""

    c0: complex
    c1: complex

    def __post_init__(self):
        n = math.hypot(abs(self.c0), abs(self.c1))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"qubit norm {n} differs from 1")

    @classmethod
    def from_amplitudes(cls, c0: complex, c1: complex) -> "QubitState":
        n = math.hypot(abs(c0), abs(c1))
        if n == 0.0:
            raise ValueError("zero qubit state")
        return cls(c0 / n, c1 / n)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "QubitState":
        """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
        return cls(math.cos(theta / 2.0),
                   cmath.exp(1j * phi) * math.sin(theta / 2.0))

    @classmethod
    def plus(cls) -> "QubitState":
        return cls.from_amplitudes(1.0, 1.0)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=complex)

    @property
    def polar_angle(self) -> float:
        return 2.0 * math.atan2(abs(self.c1), abs(self.c0))


def post_selected_pair(epsilon: float) -> tuple[QubitState, QubitState]:
    """Diagonal input and an analyzer rotated epsilon short of extinction.

    The pair gives weak value A_w = cot(epsilon) for the sigma_z observable.
    """
    pre = QubitState.plus()
    post = QubitState.from_amplitudes(
        math.cos(math.pi / 4.0 - epsilon), -math.sin(math.pi / 4.0 - epsilon))
    return pre, post


@dataclass(frozen=True)
class PauliAxis:
    """Qubit observable n . sigma with n = (sin t cos p, sin t sin p, cos t)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError("theta must lie in [0, pi]")
        if not (0.0 <= self.phi < 2.0 * math.pi):
            raise ValueError("phi must lie in [0, 2 pi)")

    @classmethod
    def z(cls) -> "PauliAxis":
        return cls(0.0, 0.0)

    @property
    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi),
                         st * math.sin(self.phi),
                         math.cos(self.theta)])

    @property
    def matrix(self) -> np.ndarray:
        ct, st = math.cos(self.theta), math.sin(self.theta)
        ep = cmath.exp(1j * self.phi)
        return np.array([[ct, st / ep], [st * ep, -ct]], dtype=complex)


def _bracket(post: QubitState, mat: np.ndarray, pre: QubitState) -> complex:
    return complex(post.vector.conj() @ (mat @ pre.vector))


def weak_value(pre: QubitState, post: QubitState, axis: PauliAxis) -> complex:
    """<f|A|i> / <f|i> for A = axis observable."""
    denom = complex(np.vdot(post.vector, pre.vector))
    if abs(denom) <= ORTHOGONALITY_FLOOR:
        raise DegeneratePostSelectionError(
            "pre- and post-selection are orthogonal; weak value undefined")
    return _bracket(post, axis.matrix, pre) / denom


_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def pauli_weak_values(pre: QubitState, post: QubitState) -> tuple[complex, complex, complex]:
    """Weak values of sigma_x, sigma_y, sigma_z for the selection pair."""
    denom = complex(np.vdot(post.vector, pre.vector))
    if abs(denom) <= ORTHOGONALITY_FLOOR:
        raise DegeneratePostSelectionError(
            "pre- and post-selection are orthogonal; weak value undefined")
    return tuple(_bracket(post, s, pre) / denom
                 for s in (_SIGMA_X, _SIGMA_Y, _SIGMA_Z))


class Coupling(Enum):
    """Pointer generator entering the impulse Hamiltonian."""

    OAM = "oam"            # beam rotation, generator Lz
    MOMENTUM_X = "momentum_x"  # beam displacement, generator px


def coupling_matrix(coupling: Coupling, cutoff: int, sigma0: float = 1.0) -> OperatorMatrix:
    if coupling is Coupling.OAM:
        return lz_matrix(cutoff)
    if coupling is Coupling.MOMENTUM_X:
        return momentum_matrix_x(cutoff, sigma0)
    raise ValueError(f"unknown coupling {coupling!r}")


@lru_cache(maxsize=64)
def _coupling_eig(coupling: Coupling, cutoff: int, sigma0: float):
    op = coupling_matrix(coupling, cutoff, sigma0)
    w, v = np.linalg.eigh(op.entries)
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def _evolve(coupling: Coupling, cutoff: int, sigma0: float,
            alpha: float, vec: np.ndarray) -> np.ndarray:
    """exp(-i alpha Omega) vec via the cached eigendecomposition."""
    w, v = _coupling_eig(coupling, cutoff, sigma0)
    return v @ (np.exp(-1j * alpha * w) * (v.conj().T @ vec))


@dataclass(frozen=True)
class WeakScenario:
    """One measurement configuration: coupling, selections, pointer.

    weak_limit bounds |alpha * A_w| for the operations that rely on the
    first-order expansion; the exact evolution ignores it.
    """

    alpha: float
    pre: QubitState
    post: QubitState
    axis: PauliAxis
    coupling: Coupling
    pointer: ModeState
    sigma0: float = 1.0
    weak_limit: float = DEFAULT_WEAK_LIMIT

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.weak_limit <= 0:
            raise ValueError("weak_limit must be positive")
        # fails fast when the selections are orthogonal
        weak_value(self.pre, self.post, self.axis)

    @property
    def weak_value(self) -> complex:
        return weak_value(self.pre, self.post, self.axis)

    @property
    def coupling_strength(self) -> complex:
        """M_w = alpha * A_w, the small parameter of the expansion."""
        return self.alpha * self.weak_value

    def operator(self) -> OperatorMatrix:
        return coupling_matrix(self.coupling, self.pointer.cutoff, self.sigma0)

    def require_weak_regime(self):
        m = abs(self.coupling_strength)
        if m >= self.weak_limit:
            raise WeakRegimeError(
                f"|alpha * A_w| = {m:.4g} outside weak regime (< {self.weak_limit})")


def carrier_state(idx: ModeIndex, cutoff: int) -> ModeState:
    """Normalized mode the rotation signal is deposited into.

    [sqrt(m(n+1)) |m-1, n+1> - sqrt((m+1)n) |m+1, n-1>] / sqrt(2mn + m + n);
    Lz |m, n> = i sqrt(2mn + m + n) times this state.
    """
    m, n = idx.m, idx.n
    if m == 0 and n == 0:
        raise NoCarrierError("the fundamental mode has no rotation carrier")
    if (m >= 1 and n + 1 > cutoff) or (n >= 1 and m + 1 > cutoff):
        raise ValueError(
            f"cutoff {cutoff} cannot hold the carrier of ({m}, {n})")
    amp = np.zeros(basis_dim(cutoff), dtype=complex)
    if m >= 1:
        amp[flat_index(m - 1, n + 1, cutoff)] = math.sqrt(m * (n + 1))
    if n >= 1:
        amp[flat_index(m + 1, n - 1, cutoff)] = -math.sqrt((m + 1) * n)
    return ModeState(cutoff, amp / math.sqrt(2 * m * n + m + n))


def final_pointer_first_order(s: WeakScenario) -> ModeState:
    """Post-selected pointer N (1 - i M_w Omega)|psi_i>, normalized.

    Valid only inside the weak-regime guard.
    """
    s.require_weak_regime()
    mw = s.coupling_strength
    omega = s.operator()
    vec = s.pointer.amplitudes - 1j * mw * omega.apply(s.pointer)
    return ModeState(s.pointer.cutoff, vec).normalize()


class ExactPointer(NamedTuple):
    pointer: ModeState
    success_prob: float


def final_pointer_exact(s: WeakScenario) -> ExactPointer:
    """Exact post-selected pointer at any coupling strength.

    Splits exp(-i alpha A x Omega) along the +-1 projectors of the axis:
    |psi~> = <f|P+|i> exp(-i alpha Omega)|psi_i>
           + <f|P-|i> exp(+i alpha Omega)|psi_i>.
    Returns the normalized pointer and the post-selection probability
    |psi~|^2 (exact within the truncation).
    """
    braket = complex(np.vdot(s.post.vector, s.pre.vector))
    bra_a_ket = _bracket(s.post, s.axis.matrix, s.pre)
    amp_plus = 0.5 * (braket + bra_a_ket)
    amp_minus = 0.5 * (braket - bra_a_ket)
    cutoff = s.pointer.cutoff
    fwd = _evolve(s.coupling, cutoff, s.sigma0, s.alpha, s.pointer.amplitudes)
    bwd = _evolve(s.coupling, cutoff, s.sigma0, -s.alpha, s.pointer.amplitudes)
    vec = amp_plus * fwd + amp_minus * bwd
    prob = float(np.real(np.vdot(vec, vec)))
    if prob < 1e-300:
        raise TotalExtinctionError("post-selected amplitude underflowed")
    return ExactPointer(ModeState(cutoff, vec / math.sqrt(prob)), prob)


@dataclass(frozen=True)
class DensityMatrix:
    """Pointer density operator; validated Hermitian, unit trace, PSD."""

    cutoff: int
    entries: np.ndarray

    def __post_init__(self):
        ent = np.array(self.entries, dtype=complex)
        dim = basis_dim(self.cutoff)
        if ent.shape != (dim, dim):
            raise InvalidStateError(
                f"expected {dim}x{dim} entries, got {ent.shape}")
        if np.max(np.abs(ent - ent.conj().T)) > 1e-12:
            raise InvalidStateError("density matrix not Hermitian")
        tr = float(np.real(np.trace(ent)))
        if abs(tr - 1.0) > 1e-10:
            raise InvalidStateError(f"trace {tr} differs from 1")
        if float(np.linalg.eigvalsh(ent)[0]) < -1e-10:
            raise InvalidStateError("density matrix not positive semidefinite")
        ent.flags.writeable = False
        object.__setattr__(self, "entries", ent)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def monitor_branches(alpha: float, coupling: Coupling, pointer: ModeState,
                     sigma0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Pointer branches exp(-+ i alpha Omega)|psi_i> tagged by the qubit basis."""
    cutoff = pointer.cutoff
    fwd = _evolve(coupling, cutoff, sigma0, alpha, pointer.amplitudes)
    bwd = _evolve(coupling, cutoff, sigma0, -alpha, pointer.amplitudes)
    return fwd, bwd


def qubit_monitor_channel(qubit: QubitState, alpha: float, coupling: Coupling,
                          pointer: ModeState, sigma0: float = 1.0) -> DensityMatrix:
    """Pointer state after the qubit which-path record is traced out.

    With qubit weights cos^2(theta/2), sin^2(theta/2) the pointer dephases
    into a rank-<=2 mixture of the two rotated branches.
    """
    fwd, bwd = monitor_branches(alpha, coupling, pointer, sigma0)
    w0, w1 = abs(qubit.c0) ** 2, abs(qubit.c1) ** 2
    rho = w0 * np.outer(fwd, fwd.conj()) + w1 * np.outer(bwd, bwd.conj())
    return DensityMatrix(pointer.cutoff, rho)
