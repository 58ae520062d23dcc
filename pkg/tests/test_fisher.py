"""Cross-route checks for the Fisher-information layer.

Everything that matters is computed at least twice: finite differences
against closed forms, classical readouts against the quantum ceiling, the
dense solve against the shell solve, the SLD pipeline against the rank-2
closed form. The compared routes share state constructors and nothing else.
"""

import math

import numpy as np
import pytest

from hgsense.errors import (
    InvalidStateError,
    NoSensitivityError,
    SmallProbabilityWarning,
    StepSizeError,
    WeakRegimeError,
)
from hgsense.fisher import (
    BOUND_CSV_COLUMNS,
    BoundResult,
    Parameter,
    PovmSet,
    carrier_projection_povm,
    cfi_povm,
    default_step,
    hamiltonian_bound,
    min_detectable_rotation,
    qfi_mixed_closed_form,
    qfi_mixed_monitor,
    qfi_mixed_quadratic,
    qfi_pure_numeric,
    qfi_rotation_exact,
    qfi_weak_approx,
    sld_solve,
    write_bound_csv,
)
from hgsense.modes import (
    ModeIndex,
    ModeState,
    OperatorMatrix,
    basis_dim,
    flat_index,
    lz_matrix,
    oam_variance,
    variance,
)
from hgsense.weak import (
    Coupling,
    DensityMatrix,
    PauliAxis,
    QubitState,
    WeakScenario,
    carrier_state,
    final_pointer_exact,
    monitor_branches,
    post_selected_pair,
)

DIAG = QubitState.from_amplitudes(1.0, complex(np.exp(1j * math.pi / 4)))
TILTED = PauliAxis(math.pi / 4, 0.0)


def rotation_family(epsilon: float, idx: ModeIndex):
    """alpha -> exact post-selected pointer for the standard rotation setup."""
    pre, post = post_selected_pair(epsilon)
    pointer = ModeState.basis(idx.total, idx.m, idx.n)

    def fam(a: float) -> ModeState:
        s = WeakScenario(a, pre, post, PauliAxis.z(), Coupling.OAM, pointer)
        return final_pointer_exact(s).pointer

    return fam


def test_numeric_qfi_matches_generator_variance():
    # unitary phase family: QFI must equal 4 var(generator) on the seed state
    cutoff = 4
    lz = lz_matrix(cutoff)
    w, v = np.linalg.eigh(lz.entries)
    amp = np.zeros(basis_dim(cutoff), dtype=complex)
    amp[flat_index(1, 0, cutoff)] = 1.0
    amp[flat_index(2, 1, cutoff)] = 0.7j
    amp[flat_index(0, 3, cutoff)] = -0.4
    amp /= np.linalg.norm(amp)
    seed = ModeState(cutoff, amp)

    def family(g: float) -> ModeState:
        vec = v @ (np.exp(-1j * g * w) * (v.conj().T @ amp))
        return ModeState(cutoff, vec)

    assert qfi_pure_numeric(family, 0.123) == pytest.approx(
        4.0 * variance(lz, seed), rel=1e-9)


def test_weak_approx_equals_amplified_carrier_weight():
    for epsilon in (0.1, 0.05):
        cot2 = (math.cos(epsilon) / math.sin(epsilon)) ** 2
        for m, n in ((1, 1), (3, 3), (5, 5)):
            pointer = ModeState.basis(m + n, m, n)
            pre, post = post_selected_pair(epsilon)
            expected = 4.0 * cot2 * oam_variance(ModeIndex(m, n))
            for alpha in (1e-4, 1e-5):
                s = WeakScenario(alpha, pre, post, PauliAxis.z(),
                                 Coupling.OAM, pointer)
                got = qfi_weak_approx(s, Parameter.ALPHA)
                assert got == pytest.approx(expected, rel=1e-12)


def test_axis_angle_fisher_scales_with_coupling():
    pointer = ModeState.basis(4, 2, 2)
    vals = {}
    for alpha in (1e-3, 2e-3):
        s = WeakScenario(alpha, DIAG, DIAG, TILTED, Coupling.OAM, pointer)
        vals[alpha] = (qfi_weak_approx(s, Parameter.THETA),
                       qfi_weak_approx(s, Parameter.PHI))
    for k in (0, 1):
        assert vals[2e-3][k] == pytest.approx(4.0 * vals[1e-3][k], rel=1e-12)


def test_axis_angle_routes_agree():
    alpha = 1e-3
    pointer = ModeState.basis(4, 2, 2)

    def theta_family(t: float) -> ModeState:
        s = WeakScenario(alpha, DIAG, DIAG, PauliAxis(t, 0.0),
                         Coupling.OAM, pointer)
        return final_pointer_exact(s).pointer

    s0 = WeakScenario(alpha, DIAG, DIAG, TILTED, Coupling.OAM, pointer)
    weak_theta = qfi_weak_approx(s0, Parameter.THETA)
    # dM/dtheta = alpha/2 for these settings, so QFI = alpha^2 (2mn+m+n)
    assert weak_theta == pytest.approx(alpha ** 2 * 12.0, rel=1e-12)
    numeric = qfi_pure_numeric(theta_family, math.pi / 4, step=1e-4)
    assert numeric == pytest.approx(weak_theta, rel=0.02)

    phi0 = 0.1  # interior point; the axis rejects phi < 0

    def phi_family(p: float) -> ModeState:
        s = WeakScenario(alpha, DIAG, DIAG, PauliAxis(math.pi / 4, p),
                         Coupling.OAM, pointer)
        return final_pointer_exact(s).pointer

    s_phi = WeakScenario(alpha, DIAG, DIAG, PauliAxis(math.pi / 4, phi0),
                         Coupling.OAM, pointer)
    weak_phi = qfi_weak_approx(s_phi, Parameter.PHI)
    numeric_phi = qfi_pure_numeric(phi_family, phi0, step=1e-4)
    assert numeric_phi == pytest.approx(weak_phi, rel=0.02)

    s_zero = WeakScenario(alpha, DIAG, DIAG, TILTED, Coupling.OAM, pointer)
    assert qfi_weak_approx(s_zero, Parameter.PHI) == pytest.approx(
        alpha ** 2 * 12.0, rel=1e-12)


def test_classical_readout_never_beats_quantum():
    rng = np.random.default_rng(7)
    cutoff = 2
    dim = basis_dim(cutoff)
    fam = rotation_family(0.1, ModeIndex(1, 1))
    alpha = 1e-3
    ceiling = qfi_pure_numeric(fam, alpha)
    for _ in range(10):
        raw = []
        for _ in range(4):
            a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            raw.append(a @ a.conj().T)
        total = sum(raw)
        w, v = np.linalg.eigh(total)
        inv_half = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
        povm = PovmSet(tuple(
            OperatorMatrix(cutoff, inv_half @ r @ inv_half, hermitian=True)
            for r in raw))
        assert cfi_povm(fam, alpha, povm) <= ceiling * (1.0 + 1e-9)


def test_carrier_projection_saturates_quantum_limit():
    alpha = 1e-4
    for epsilon, (m, n) in ((0.1, (1, 1)), (0.05, (3, 3))):
        idx = ModeIndex(m, n)
        pre, post = post_selected_pair(epsilon)
        pointer = ModeState.basis(idx.total, m, n)
        s = WeakScenario(alpha, pre, post, PauliAxis.z(), Coupling.OAM, pointer)
        povm = carrier_projection_povm(carrier_state(idx, idx.total))
        classical = cfi_povm(rotation_family(epsilon, idx), alpha, povm)
        assert classical == pytest.approx(
            qfi_weak_approx(s, Parameter.ALPHA), rel=0.01)


def test_min_detectable_rotation_frozen_values():
    eps = math.radians(5.0)
    frozen = {(1, 1): 3.4411302265843428e-06,
              (3, 3): 1.4048355322665837e-06,
              (5, 5): 8.884960039794742e-07}
    for (m, n), value in frozen.items():
        assert min_detectable_rotation(ModeIndex(m, n), eps, 4.04e7) == \
            pytest.approx(value, rel=1e-12)
    ratio = (min_detectable_rotation(ModeIndex(1, 1), 0.3, 1e6)
             / min_detectable_rotation(ModeIndex(5, 5), 0.3, 1e6))
    assert ratio == pytest.approx(math.sqrt(15.0), rel=1e-12)
    with pytest.raises(NoSensitivityError):
        min_detectable_rotation(ModeIndex(0, 0), eps, 1e6)
    with pytest.raises(ValueError):
        min_detectable_rotation(ModeIndex(1, 1), eps, 0.0)
    with pytest.raises(ValueError):
        min_detectable_rotation(ModeIndex(1, 1), math.pi, 1e6)


def test_min_detectable_matches_fisher_bound_route():
    # 1 / sqrt(N F) from the weak-approx Fisher info, no shared formula
    n_photons = 2.5e7
    for epsilon in (0.08, 0.25):
        pre, post = post_selected_pair(epsilon)
        for m, n in ((1, 1), (4, 2)):
            idx = ModeIndex(m, n)
            pointer = ModeState.basis(idx.total, m, n)
            s = WeakScenario(1e-5, pre, post, PauliAxis.z(),
                             Coupling.OAM, pointer)
            fisher = qfi_weak_approx(s, Parameter.ALPHA)
            assert min_detectable_rotation(idx, epsilon, n_photons) == \
                pytest.approx(1.0 / math.sqrt(n_photons * fisher), rel=1e-12)


def test_bound_ordering_rotation_wins():
    # same impulse budget: rotation beats beam displacement beats a
    # structureless pointer, for every m = n >= 1
    sigma0 = 1.0 / math.sqrt(2.0)
    alpha = 1e-3
    gauss = ModeState.basis(2, 0, 0)
    for m in (1, 2, 3):
        pointer = ModeState.basis(2 * m, m, m)
        rot = hamiltonian_bound(Parameter.ALPHA, WeakScenario(
            alpha, DIAG, DIAG, TILTED, Coupling.OAM, pointer, sigma0=sigma0))
        disp = hamiltonian_bound(Parameter.ALPHA, WeakScenario(
            alpha, DIAG, DIAG, TILTED, Coupling.MOMENTUM_X, pointer,
            sigma0=sigma0))
        flat = hamiltonian_bound(Parameter.ALPHA, WeakScenario(
            alpha, DIAG, DIAG, TILTED, Coupling.MOMENTUM_X, gauss,
            sigma0=sigma0))
        assert rot.variance_bound < disp.variance_bound < flat.variance_bound
        # displacement route gains (2m+1) over the structureless pointer
        assert flat.variance_bound / disp.variance_bound == pytest.approx(
            2 * m + 1, rel=1e-12)


def test_sld_solves_lyapunov_residual():
    for theta_q, alpha, (m, n) in ((math.pi / 3, 0.05, (2, 2)),
                                   (0.4, 0.01, (1, 1)),
                                   (2.0, 0.12, (3, 1))):
        qubit = QubitState.from_angles(theta_q, 0.0)
        cutoff = m + n
        pointer = ModeState.basis(cutoff, m, n)
        fwd, bwd = monitor_branches(alpha, Coupling.OAM, pointer)
        w0, w1 = abs(qubit.c0) ** 2, abs(qubit.c1) ** 2
        p_plus = np.outer(fwd, fwd.conj())
        p_minus = np.outer(bwd, bwd.conj())
        rho = DensityMatrix(cutoff, w0 * p_plus + w1 * p_minus)
        drho = abs(qubit.c0) * abs(qubit.c1) * (p_minus - p_plus)
        sld = sld_solve(rho, drho)
        residual = rho.entries @ sld.entries + sld.entries @ rho.entries \
            - 2.0 * drho
        assert np.max(np.abs(residual)) < 1e-10


def test_sld_closed_form_on_branch_plane():
    # entries of L in the orthonormal sym/antisym branch basis
    theta_q = math.pi / 3
    alpha = 0.05
    cutoff = 4
    pointer = ModeState.basis(cutoff, 2, 2)
    qubit = QubitState.from_angles(theta_q, 0.0)
    fwd, bwd = monitor_branches(alpha, Coupling.OAM, pointer)
    p_plus = np.outer(fwd, fwd.conj())
    p_minus = np.outer(bwd, bwd.conj())
    rho = DensityMatrix(cutoff, abs(qubit.c0) ** 2 * p_plus
                        + abs(qubit.c1) ** 2 * p_minus)
    drho = abs(qubit.c0) * abs(qubit.c1) * (p_minus - p_plus)
    sld = sld_solve(rho, drho).entries
    delta = float(np.real(np.vdot(fwd, bwd)))
    sym = (fwd + bwd) / np.linalg.norm(fwd + bwd)
    anti = (fwd - bwd) / np.linalg.norm(fwd - bwd)
    cot = math.cos(theta_q) / math.sin(theta_q)
    assert complex(np.vdot(sym, sld @ sym)) == pytest.approx(
        (1.0 - delta) * cot, abs=1e-10)
    assert complex(np.vdot(anti, sld @ anti)) == pytest.approx(
        (1.0 + delta) * cot, abs=1e-10)
    assert complex(np.vdot(sym, sld @ anti)) == pytest.approx(
        -math.sqrt(1.0 - delta ** 2) / math.sin(theta_q), abs=1e-10)


def test_mixed_fisher_three_routes():
    qubit = QubitState.from_angles(1.1, 0.0)
    for m in (1, 3, 5):
        pointer = ModeState.basis(2 * m, m, m)
        for alpha in (1e-3, 0.02):
            via_sld = qfi_mixed_monitor(qubit, alpha, pointer)
            closed = qfi_mixed_closed_form(qubit, alpha, pointer)
            assert via_sld == pytest.approx(closed, abs=1e-10)
        quad = qfi_mixed_quadratic(1e-3, pointer)
        assert qfi_mixed_closed_form(qubit, 1e-3, pointer) == pytest.approx(
            quad, rel=1e-3)


def test_shell_route_matches_dense_route():
    pre, post = post_selected_pair(0.1)
    for m, n in ((1, 1), (2, 1), (3, 3)):
        fam = rotation_family(0.1, ModeIndex(m, n))
        dense = qfi_pure_numeric(fam, 5e-3)
        shell = qfi_rotation_exact(pre, post, PauliAxis.z(), 5e-3,
                                   ModeIndex(m, n))
        assert dense == pytest.approx(shell, rel=1e-9)


def test_step_guard_trips_on_coarse_step():
    fam = rotation_family(0.1, ModeIndex(1, 1))
    with pytest.raises(StepSizeError):
        qfi_pure_numeric(fam, 1e-3, step=0.5)
    pre, post = post_selected_pair(0.1)
    with pytest.raises(StepSizeError):
        qfi_rotation_exact(pre, post, PauliAxis.z(), 1e-3, ModeIndex(1, 1),
                           step=0.5)
    with pytest.raises(ValueError):
        qfi_pure_numeric(fam, 1e-3, step=0.0)
    with pytest.raises(ValueError):
        cfi_povm(fam, 1e-3,
                 carrier_projection_povm(carrier_state(ModeIndex(1, 1), 2)),
                 step=-1.0)


def test_weak_regime_guard():
    pre, post = post_selected_pair(0.01)
    pointer = ModeState.basis(2, 1, 1)
    s = WeakScenario(5e-3, pre, post, PauliAxis.z(), Coupling.OAM, pointer)
    with pytest.raises(WeakRegimeError):
        qfi_weak_approx(s, Parameter.ALPHA)
    assert qfi_weak_approx(s, Parameter.ALPHA, check_regime=False) > 0.0


def test_weak_approx_overstates_fisher_past_regime():
    epsilon = 0.1
    pre, post = post_selected_pair(epsilon)
    pointer = ModeState.basis(2, 1, 1)
    naive = qfi_weak_approx(
        WeakScenario(1e-6, pre, post, PauliAxis.z(), Coupling.OAM, pointer),
        Parameter.ALPHA)
    spread = math.sqrt(oam_variance(ModeIndex(1, 1)))
    inside = 0.05 * epsilon / spread
    outside = 1.0 * epsilon / spread
    exact_in = qfi_rotation_exact(pre, post, PauliAxis.z(), inside,
                                  ModeIndex(1, 1))
    exact_out = qfi_rotation_exact(pre, post, PauliAxis.z(), outside,
                                   ModeIndex(1, 1))
    assert abs(exact_in / naive - 1.0) < 0.02
    assert abs(exact_out / naive - 1.0) > 0.10


def test_small_probability_outcomes_warn_and_drop():
    cutoff = 2
    frozen = ModeState.basis(cutoff, 0, 0)
    povm = carrier_projection_povm(carrier_state(ModeIndex(1, 1), cutoff))
    with pytest.warns(SmallProbabilityWarning):
        value = cfi_povm(lambda _a: frozen, 1e-3, povm)
    assert value == 0.0


def test_povm_validation():
    cutoff = 1
    dim = basis_dim(cutoff)
    eye = OperatorMatrix(cutoff, np.eye(dim), hermitian=True)
    half = OperatorMatrix(cutoff, 0.5 * np.eye(dim), hermitian=True)
    with pytest.raises(InvalidStateError):
        PovmSet((half, eye))  # sums to 1.5 x identity
    neg = OperatorMatrix(cutoff, -0.5 * np.eye(dim), hermitian=True)
    with pytest.raises(InvalidStateError):
        PovmSet((neg, OperatorMatrix(cutoff, 1.5 * np.eye(dim), hermitian=True)))
    other = OperatorMatrix(2, np.eye(basis_dim(2)), hermitian=True)
    with pytest.raises(ValueError):
        PovmSet((half, other))
    with pytest.raises(ValueError):
        PovmSet(())


def test_hamiltonian_bound_guards():
    pointer = ModeState.basis(2, 1, 1)
    still = WeakScenario(0.0, DIAG, DIAG, TILTED, Coupling.OAM, pointer)
    with pytest.raises(ValueError):
        hamiltonian_bound(Parameter.THETA, still)
    with pytest.raises(ValueError):
        hamiltonian_bound(Parameter.ALPHA, still, n_samples=0.0)
    assert BoundResult.from_fisher(Parameter.ALPHA, 0.0, 10.0).variance_bound \
        == math.inf
    result = hamiltonian_bound(Parameter.ALPHA, still, n_samples=100.0)
    assert result.variance_bound == pytest.approx(
        1.0 / (100.0 * result.fisher_info), rel=1e-15)


def test_default_step_floors():
    assert default_step(0.0) == 1e-6
    assert default_step(100.0) == pytest.approx(1e-2)


def test_bound_csv_output(tmp_path):
    path = tmp_path / "bounds.csv"
    rows = [{"family": "projective", "m": 1, "n": 1, "parameter": "alpha",
             "fisher_info": 1234.5678901234567, "variance_bound": 1.0 / 3.0}]
    write_bound_csv(path, rows, extra_columns=("family",))
    text = path.read_text().splitlines()
    assert text[0] == "family," + ",".join(BOUND_CSV_COLUMNS)
    assert text[1] == "projective,1,1,alpha,1234.56789012,0.333333333333"
    assert not list(tmp_path.glob("*.tmp"))
