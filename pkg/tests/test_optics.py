import numpy as np
import pytest
from hypothesis import given, strategies as st

from eraser_sim.optics import (
    FILTER_ABSORBED, FILTER_PASSED, BeamsplitterSpec, CoherenceFactor, FilterSpec,
    apply_beamsplitter, apply_filter, beamsplitter_unitary, atomic_generation_sequence, couple_detector, decohere,
    dephasing_channel, filter_channel, generation_stages, measure_detector, prepare_biphoton,
)
from eraser_sim.qstate import (
    PI_A, PI_B, PI_B2, SIGMA_A, SIGMA_A2, SIGMA_B,
    DetectorRegister, DeviceId, QStateError, RegisterValue,
    apply_local, density_from_pure, find_branch, product_basis, pure_from_vector,
)

T_GRID = np.linspace(0, 1, 21)
NO_CLICK, CLICK = RegisterValue.NO_CLICK, RegisterValue.CLICK
unit = st.floats(0, 1)


def random_state_without(seed, empty_mode):
    rng = np.random.default_rng(seed)
    basis = product_basis(("sigma", "pi"))
    vec = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    for i, lab in enumerate(basis):
        if empty_mode in lab:
            vec[i] = 0
    return pure_from_vector(vec, ("sigma", "pi"))


def test_generation_sequence():
    stages = generation_stages()
    assert list(stages) == ["ground", "pi_pulse", "sigma_decay", "sigma_pulse", "pi_decay", "photons"]
    assert stages["ground"].amplitude(1, 1) == 1
    assert abs(stages["pi_pulse"].amplitude(3, 1)) == pytest.approx(2**-0.5)
    psi = atomic_generation_sequence()
    assert psi.factors == ("sigma", "pi")
    assert set(psi.amplitudes) == {(SIGMA_A, PI_A), (SIGMA_B, PI_B)}
    for amp in psi.amplitudes.values():
        assert amp == pytest.approx(2**-0.5)


@given(unit)
def test_filter_branches(t):
    branches = apply_filter(atomic_generation_sequence(), FilterSpec(SIGMA_A, t))
    assert abs(sum(b.probability for b in branches) - 1) <= 1e-12
    passed = find_branch(branches, FILTER_PASSED)
    assert passed.probability == pytest.approx((1 + t) / 2, abs=1e-12)
    assert passed.state.amplitude(SIGMA_A, PI_A) == pytest.approx(np.sqrt(t / (1 + t)), abs=1e-12)
    assert passed.state.amplitude(SIGMA_B, PI_B) == pytest.approx(np.sqrt(1 / (1 + t)), abs=1e-12)


def test_filter_without_loss_at_full_transmission():
    assert list(filter_channel(FilterSpec(SIGMA_A, 1.0)).kraus) == [FILTER_PASSED]
    assert FILTER_ABSORBED in filter_channel(FilterSpec("sigma_A", 0.3)).kraus
    assert filter_channel(FilterSpec(SIGMA_A, 0.3)).completeness_error() <= 1e-15


@given(st.integers(0, 2**32 - 1), unit)
def test_beamsplitter_preserves_norm(seed, t_bs):
    for mode, alt in ((PI_B, PI_B2), (SIGMA_A, SIGMA_A2)):
        psi = random_state_without(seed, alt)
        out = apply_beamsplitter(psi, BeamsplitterSpec.on(mode, t_bs))
        assert abs(np.linalg.norm(apply_beamsplitter_raw(psi, mode, t_bs)) - 1) <= 1e-12
        rho = apply_beamsplitter(density_from_pure(psi), BeamsplitterSpec.on(mode, t_bs))
        np.testing.assert_allclose(rho.matrix, density_from_pure(out).matrix, atol=1e-12)


def apply_beamsplitter_raw(psi, mode, t_bs):
    return apply_local(psi, mode.factor, beamsplitter_unitary(BeamsplitterSpec.on(mode, t_bs)))


def test_beamsplitter_rejects_occupied_alternate():
    psi = pure_from_vector(np.eye(9)[product_basis(("sigma", "pi")).index((SIGMA_A, PI_B2))], ("sigma", "pi"))
    with pytest.raises(QStateError, match="occupied"):
        apply_beamsplitter(psi, BeamsplitterSpec.on(PI_B, 0.5))
    with pytest.raises(ValueError):
        BeamsplitterSpec(PI_B, SIGMA_A2, 0.5)
    with pytest.raises(ValueError):
        BeamsplitterSpec.on(SIGMA_B, 0.5)


@given(unit, unit)
def test_filter_and_beamsplitter_commute(t, t_bs):
    psi = atomic_generation_sequence()
    fs, bs = FilterSpec(SIGMA_A, t), BeamsplitterSpec.on(PI_B, t_bs)
    one = apply_beamsplitter(find_branch(apply_filter(psi, fs), FILTER_PASSED).state, bs)
    two = find_branch(apply_filter(apply_beamsplitter(psi, bs), fs), FILTER_PASSED).state
    np.testing.assert_allclose(one.vector(), two.vector(), atol=1e-12)


@pytest.mark.parametrize("t", T_GRID)
def test_prepare_matches_generated_state(t):
    passed = find_branch(apply_filter(atomic_generation_sequence(), FilterSpec(SIGMA_A, t)), FILTER_PASSED)
    np.testing.assert_allclose(prepare_biphoton(t, 1.0).matrix, density_from_pure(passed.state).matrix, atol=1e-12)


@given(unit, unit)
def test_detector_coupling_amplitudes(t, t_bs):
    passed = find_branch(apply_filter(atomic_generation_sequence(), FilterSpec(SIGMA_A, t)), FILTER_PASSED).state
    split = apply_beamsplitter(passed, BeamsplitterSpec.on(PI_B, t_bs))
    coupled = couple_detector(split, DeviceId.M1, PI_B2)
    assert coupled.factors == ("sigma", "pi", "M1")
    s = np.sqrt(1 + t)
    assert coupled.amplitude(SIGMA_B, PI_B, NO_CLICK) == pytest.approx(np.sqrt(t_bs) / s, abs=1e-12)
    assert coupled.amplitude(SIGMA_A, PI_A, NO_CLICK) == pytest.approx(np.sqrt(t) / s, abs=1e-12)
    assert coupled.amplitude(SIGMA_B, PI_B2, CLICK) == pytest.approx(np.sqrt(1 - t_bs) / s, abs=1e-12)
    assert coupled.norm() == pytest.approx(1.0, abs=1e-12)


def test_measure_detector_branches():
    passed = find_branch(apply_filter(atomic_generation_sequence(), FilterSpec(SIGMA_A, 0.25)), FILTER_PASSED).state
    split = apply_beamsplitter(passed, BeamsplitterSpec.on(PI_B, 0.25))
    click, silent = measure_detector(split, "M1", PI_B2)
    assert click.outcome == DetectorRegister(DeviceId.M1, CLICK)
    assert silent.probability == pytest.approx(0.4)
    assert click.probability == pytest.approx(0.6)
    assert silent.state.amplitude(SIGMA_A, PI_A, NO_CLICK) == pytest.approx(2**-0.5)
    with pytest.raises(QStateError, match="already attached"):
        couple_detector(silent.state, DeviceId.M1, PI_B2)
    with pytest.raises(QStateError, match="alternate"):
        couple_detector(split, DeviceId.M2, PI_B)


@pytest.mark.parametrize("t", [0.0, 0.25, 1.0])
@pytest.mark.parametrize("M", [0.0, 0.5, 1.0])
def test_decoherence_gives_coherence_factor(t, M):
    rho = decohere(prepare_biphoton(t, 1.0), M)
    np.testing.assert_allclose(rho.matrix, prepare_biphoton(t, CoherenceFactor(M)).matrix, atol=1e-15)
    assert dephasing_channel(M).completeness_error() <= 1e-15


def test_parameter_validation():
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            FilterSpec(SIGMA_A, bad)
        with pytest.raises(ValueError):
            prepare_biphoton(0.5, bad)
    assert FilterSpec.from_mapping({"t": 0.5}).target_mode == SIGMA_A
    assert BeamsplitterSpec.from_mapping({"t_bs": 0.5}).alternate_mode == PI_B2
