"""Quantum and classical Fisher information and the derived precision bounds.

Three routes are kept deliberately independent so they can cross-check each
other: a numeric route (finite-difference Fisher information of any state
family), a quadratic weak-coupling route (4 |dM_w/dg|^2 <delta Omega^2>),
and closed forms for special cases. The symmetric logarithmic derivative
solver handles the dephased-monitor mixture.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidStateError,
    NoSensitivityError,
    SmallProbabilityWarning,
    StepSizeError,
)
from .modes import (
    ModeIndex,
    ModeState,
    OperatorMatrix,
    basis_dim,
    oam_variance,
    second_moment,
    variance,
)
from .weak import (
    Coupling,
    DensityMatrix,
    PauliAxis,
    QubitState,
    WeakScenario,
    coupling_matrix,
    monitor_branches,
    pauli_weak_values,
)

PROBABILITY_FLOOR = 1e-15
_STENCIL_RTOL = 0.25


class Parameter(Enum):
    """Which knob of the impulse coupling is being estimated."""

    ALPHA = "alpha"
    THETA = "theta"
    PHI = "phi"


@dataclass(frozen=True)
class BoundResult:
    """Per-sample Fisher information and the matching variance bound."""

    parameter: Parameter
    fisher_info: float
    n_samples: float
    variance_bound: float

    @classmethod
    def from_fisher(cls, parameter: Parameter, fisher_info: float,
                    n_samples: float) -> "BoundResult":
        bound = math.inf if fisher_info == 0.0 else 1.0 / (n_samples * fisher_info)
        return cls(parameter, fisher_info, n_samples, bound)


def default_step(g: float) -> float:
    return max(1e-6, 1e-4 * abs(g))


def _derivative4(fn: Callable[[float], np.ndarray], g: float, h: float) -> np.ndarray:
    """Fourth-order central difference; fn may return vectors."""
    return (np.asarray(fn(g - 2 * h)) - 8 * np.asarray(fn(g - h))
            + 8 * np.asarray(fn(g + h)) - np.asarray(fn(g + 2 * h))) / (12.0 * h)


def _check_stencils(q_h: float, q_2h: float):
    scale = max(abs(q_h), abs(q_2h), 1e-30)
    if abs(q_h - q_2h) > _STENCIL_RTOL * scale:
        raise StepSizeError(
            f"stencil values disagree ({q_h:.6g} vs {q_2h:.6g}); "
            "adjust the differentiation step")


def _qfi_from_derivative(psi: np.ndarray, dpsi: np.ndarray) -> float:
    overlap = np.vdot(psi, dpsi)
    return 4.0 * float(np.real(np.vdot(dpsi, dpsi)) - abs(overlap) ** 2)


def qfi_pure_numeric(state_fn: Callable[[float], ModeState], g: float,
                     step: float | None = None) -> float:
    """Fisher information of a pure-state family by numeric differentiation.

    Uses a fourth-order stencil on the normalized state vector and evaluates
    4 (<d psi|d psi> - |<psi|d psi>|^2). A doubled-step recomputation guards
    against a step small enough to hit round-off cancellation.
    """
    h = default_step(g) if step is None else step
    if h <= 0:
        raise ValueError("step must be positive")
    vec = lambda x: state_fn(x).amplitudes
    psi = vec(g)
    q_h = _qfi_from_derivative(psi, _derivative4(vec, g, h))
    q_2h = _qfi_from_derivative(psi, _derivative4(vec, g, 2 * h))
    _check_stencils(q_h, q_2h)
    return q_h


def _parameter_derivative(s: WeakScenario, parameter: Parameter) -> complex:
    """dM_w/dg from the Pauli weak values of the selection pair."""
    sxw, syw, szw = pauli_weak_values(s.pre, s.post)
    t, p = s.axis.theta, s.axis.phi
    st, ct = math.sin(t), math.cos(t)
    sp, cp = math.sin(p), math.cos(p)
    if parameter is Parameter.ALPHA:
        return sxw * st * cp + syw * st * sp + szw * ct
    if parameter is Parameter.THETA:
        return s.alpha * (sxw * ct * cp + syw * ct * sp - szw * st)
    if parameter is Parameter.PHI:
        return s.alpha * (syw * st * cp - sxw * st * sp)
    raise ValueError(f"unknown parameter {parameter!r}")


def qfi_weak_approx(s: WeakScenario, parameter: Parameter,
                    check_regime: bool = True) -> float:
    """Quadratic weak-coupling Fisher information 4 |dM_w/dg|^2 <dOmega^2>.

    check_regime=False skips the |alpha A_w| guard; breakdown sweeps use it
    to draw the naive reference curve past its own validity.
    """
    if check_regime:
        s.require_weak_regime()
    dm = _parameter_derivative(s, parameter)
    return 4.0 * abs(dm) ** 2 * variance(s.operator(), s.pointer)


@dataclass(frozen=True)
class PovmSet:
    """Positive operators summing to the identity on the truncated basis."""

    elements: tuple[OperatorMatrix, ...]

    def __post_init__(self):
        if not self.elements:
            raise ValueError("POVM needs at least one element")
        cutoff = self.elements[0].cutoff
        dim = basis_dim(cutoff)
        total = np.zeros((dim, dim), dtype=complex)
        for el in self.elements:
            if el.cutoff != cutoff:
                raise ValueError("POVM elements live in different truncations")
            if float(np.linalg.eigvalsh(el.entries)[0]) < -1e-10:
                raise InvalidStateError("POVM element not positive semidefinite")
            total = total + el.entries
        if np.max(np.abs(total - np.eye(dim))) > 1e-10:
            raise InvalidStateError("POVM elements do not sum to identity")
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def cutoff(self) -> int:
        return self.elements[0].cutoff


def carrier_projection_povm(carrier: ModeState) -> PovmSet:
    """Two-outcome set {|carrier><carrier|, 1 - |carrier><carrier|}."""
    c = carrier.normalize().amplitudes
    proj = np.outer(c, c.conj())
    rest = np.eye(len(c)) - proj
    return PovmSet((OperatorMatrix(carrier.cutoff, proj, hermitian=True),
                    OperatorMatrix(carrier.cutoff, rest, hermitian=True)))


def cfi_povm(state_fn: Callable[[float], ModeState], g: float, povm: PovmSet,
             step: float | None = None) -> float:
    """Classical Fisher information sum_k (d p_k/dg)^2 / p_k.

    Outcomes with probability below 1e-15 contribute zero and raise a
    SmallProbabilityWarning. Same stencil and disagreement guard as the
    quantum counterpart.
    """
    h = default_step(g) if step is None else step
    if h <= 0:
        raise ValueError("step must be positive")

    def probs(x: float) -> np.ndarray:
        amp = state_fn(x).amplitudes
        return np.array([float(np.real(np.vdot(amp, el.entries @ amp)))
                         for el in povm.elements])

    p0 = probs(g)

    def fisher_sum(dp: np.ndarray) -> float:
        total = 0.0
        for pk, dpk in zip(p0, dp):
            if pk < PROBABILITY_FLOOR:
                warnings.warn(
                    f"outcome probability {pk:.3g} below floor; contributes 0",
                    SmallProbabilityWarning, stacklevel=3)
                continue
            total += dpk ** 2 / pk
        return total

    f_h = fisher_sum(_derivative4(probs, g, h))
    f_2h = fisher_sum(_derivative4(probs, g, 2 * h))
    _check_stencils(f_h, f_2h)
    return f_h


def min_detectable_rotation(idx: ModeIndex, epsilon: float, n_photons: float) -> float:
    """Unit-SNR rotation 1 / (sqrt(2mn+m+n) * 2 |cot eps| * sqrt(N))."""
    if idx.m == 0 and idx.n == 0:
        raise NoSensitivityError("fundamental mode has no rotation sensitivity")
    if n_photons <= 0:
        raise ValueError("photon number must be positive")
    if math.isclose(math.sin(epsilon), 0.0, abs_tol=1e-12):
        raise ValueError("post-selection angle must not be a multiple of pi")
    cot = abs(math.cos(epsilon) / math.sin(epsilon))
    if cot == 0.0:
        raise ValueError("cot(epsilon) vanishes; no amplification")
    return 1.0 / (math.sqrt(oam_variance(idx)) * 2.0 * cot * math.sqrt(n_photons))


def hamiltonian_bound(parameter: Parameter, s: WeakScenario,
                      n_samples: float = 1.0) -> BoundResult:
    """Variance bound 1 / (N * 4 |dM_w/dg|^2 <delta Omega^2>).

    Requires the weak regime; estimating theta or phi additionally needs a
    nonzero coupling strength (their signal enters multiplied by alpha).
    """
    if n_samples <= 0:
        raise ValueError("sample count must be positive")
    if parameter is not Parameter.ALPHA and s.alpha <= 0:
        raise ValueError("axis-angle estimation needs alpha > 0")
    fisher = qfi_weak_approx(s, parameter)
    return BoundResult.from_fisher(parameter, fisher, n_samples)


def sld_solve(rho: DensityMatrix, drho: np.ndarray) -> OperatorMatrix:
    """Symmetric logarithmic derivative L with rho L + L rho = 2 drho.

    Solved in the eigenbasis of rho: L_jk = 2 <j|drho|k> / (lambda_j +
    lambda_k), with pairs below 1e-12 set to zero (kernel convention).
    """
    d = np.asarray(drho, dtype=complex)
    if d.shape != rho.entries.shape:
        raise InvalidStateError("derivative shape differs from the state")
    if np.max(np.abs(d - d.conj().T)) > 1e-10:
        raise InvalidStateError("derivative matrix not Hermitian")
    lam, vec = np.linalg.eigh(rho.entries)
    d_eig = vec.conj().T @ d @ vec
    pair = lam[:, None] + lam[None, :]
    coeff = np.zeros_like(pair)
    support = pair >= 1e-12
    coeff[support] = 2.0 / pair[support]
    l_eig = coeff * d_eig
    l_mat = vec @ l_eig @ vec.conj().T
    l_mat = 0.5 * (l_mat + l_mat.conj().T)  # scrub round-off asymmetry
    return OperatorMatrix(rho.cutoff, l_mat, hermitian=True)


def _monitor_pieces(qubit: QubitState, alpha: float, pointer: ModeState,
                    coupling: Coupling = Coupling.OAM, sigma0: float = 1.0):
    fwd, bwd = monitor_branches(alpha, coupling, pointer, sigma0)
    w0, w1 = abs(qubit.c0) ** 2, abs(qubit.c1) ** 2
    p_plus = np.outer(fwd, fwd.conj())
    p_minus = np.outer(bwd, bwd.conj())
    rho = DensityMatrix(pointer.cutoff, w0 * p_plus + w1 * p_minus)
    return rho, p_plus, p_minus, fwd, bwd


def qfi_mixed_monitor(qubit: QubitState, alpha: float, pointer: ModeState,
                      coupling: Coupling = Coupling.OAM, sigma0: float = 1.0) -> float:
    """Exact Fisher information about the qubit polar angle after dephasing.

    Builds the rank-2 monitor mixture, differentiates the mixing weights
    analytically (d rho/d theta = |c0||c1| (P- - P+)), solves for the SLD
    and returns Tr(rho L^2).
    """
    rho, p_plus, p_minus, _, _ = _monitor_pieces(qubit, alpha, pointer,
                                                 coupling, sigma0)
    half_sin = abs(qubit.c0) * abs(qubit.c1)  # sin(theta)/2
    drho = half_sin * (p_minus - p_plus)
    sld = sld_solve(rho, drho)
    return float(np.real(np.trace(rho.entries @ sld.entries @ sld.entries)))


def qfi_mixed_closed_form(qubit: QubitState, alpha: float, pointer: ModeState,
                          coupling: Coupling = Coupling.OAM,
                          sigma0: float = 1.0) -> float:
    """Closed form 1 - delta^2 with delta = Re <psi_+|psi_->.

    Independent of the SLD pipeline; shares only the branch propagation.
    """
    fwd, bwd = monitor_branches(alpha, coupling, pointer, sigma0)
    delta = float(np.real(np.vdot(fwd, bwd)))
    return 1.0 - delta ** 2


def qfi_mixed_quadratic(alpha: float, pointer: ModeState,
                        coupling: Coupling = Coupling.OAM,
                        sigma0: float = 1.0) -> float:
    """Small-alpha approximation 4 alpha^2 <Omega^2> of the monitor QFI."""
    op = coupling_matrix(coupling, pointer.cutoff, sigma0)
    return 4.0 * alpha ** 2 * second_moment(op, pointer)


def qfi_rotation_exact(pre: QubitState, post: QubitState, axis: PauliAxis,
                       alpha: float, idx: ModeIndex,
                       step: float | None = None) -> float:
    """Exact QFI about alpha for a basis pointer under rotation coupling.

    The rotation generator conserves m + n, so the evolution is confined to
    the (m + n + 1)-dimensional shell of the pointer; this path scales to
    high orders where the full truncated basis would not. Cross-checked in
    tests against the generic route at small order.
    """
    s = idx.total
    j0 = idx.m
    t = np.zeros((s + 1, s + 1), dtype=complex)
    for j in range(s + 1):  # basis |j, s - j>, j = x-axis order
        if j >= 1:
            t[j - 1, j] = 1j * math.sqrt(j * (s - j + 1))
        if j + 1 <= s:
            t[j + 1, j] = -1j * math.sqrt((j + 1) * (s - j))
    w, v = np.linalg.eigh(t)
    start = np.zeros(s + 1, dtype=complex)
    start[j0] = 1.0
    braket = complex(np.vdot(post.vector, pre.vector))
    bra_a_ket = complex(post.vector.conj() @ (axis.matrix @ pre.vector))
    amp_plus = 0.5 * (braket + bra_a_ket)
    amp_minus = 0.5 * (braket - bra_a_ket)

    def state(a: float) -> np.ndarray:
        phases = v.conj().T @ start
        vec = v @ ((amp_plus * np.exp(-1j * a * w)
                    + amp_minus * np.exp(1j * a * w)) * phases)
        return vec / np.linalg.norm(vec)

    h = default_step(alpha) if step is None else step
    psi = state(alpha)
    q_h = _qfi_from_derivative(psi, _derivative4(state, alpha, h))
    q_2h = _qfi_from_derivative(psi, _derivative4(state, alpha, 2 * h))
    _check_stencils(q_h, q_2h)
    return q_h


BOUND_CSV_COLUMNS = ("m", "n", "parameter", "fisher_info", "variance_bound")


def write_bound_csv(path, rows: Iterable[Mapping], extra_columns: Sequence[str] = ()):
    """Emit bound-sweep rows as CSV (atomic: temp file then rename).

    Core columns are m, n, parameter, fisher_info, variance_bound; callers
    may prepend extra context columns. Floats use 12 significant digits so
    output is reproducible byte for byte.
    """
    fieldnames = list(extra_columns) + list(BOUND_CSV_COLUMNS)
    rows = list(rows)
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _format_cell(row.get(k, "")) for k in fieldnames})
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)
