import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eraser_sim.qstate import (
    PI_A, PI_B, PI_B2, SIGMA_A, SIGMA_A2, SIGMA_B,
    Channel, DensityOperator, DetectorRegister, DeviceId, ModeLabel, Particle, Port,
    QStateError, RegisterValue, Site,
    canonical_factors, density_from_pure, dims_of, mix, partial_trace, product_basis,
    projector, pure_from_amplitudes, pure_from_vector, sector_matrix, tensor,
)

seeds = st.integers(0, 2**32 - 1)


def random_pure(seed, factors):
    rng = np.random.default_rng(seed)
    n = int(np.prod(dims_of(factors)))
    return pure_from_vector(rng.normal(size=n) + 1j * rng.normal(size=n), factors)


def random_mixed(seed, factors, rank=3):
    rng = np.random.default_rng(seed)
    n = int(np.prod(dims_of(factors)))
    x = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = x @ x.conj().T
    return DensityOperator(tuple(factors), rho / np.trace(rho).real)


def assert_valid(rho):
    m = rho.matrix
    assert np.abs(m - m.conj().T).max() <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.linalg.eigvalsh(m).min() >= -1e-10


def test_mode_labels():
    assert SIGMA_A2.name == "sigma_A2" and PI_B.factor == "pi"
    assert str(DetectorRegister(DeviceId.M1, RegisterValue.NO_CLICK)) == "M1=no_click"
    with pytest.raises(QStateError):
        ModeLabel(Particle.SIGMA, Site.B, Port.ALTERNATE)
    with pytest.raises(QStateError):
        ModeLabel(Particle.PI, Site.A, Port.ALTERNATE)


def test_canonical_order():
    assert canonical_factors(["M1", "pi", "sigma"]) == ("sigma", "pi", "M1")
    basis = product_basis(("sigma", "pi"))
    assert basis[:3] == [(SIGMA_A, PI_A), (SIGMA_A, PI_B), (SIGMA_A, PI_B2)]
    assert basis[-1] == (SIGMA_A2, PI_B2)


def test_pure_from_amplitudes_normalizes_and_sums():
    psi = pure_from_amplitudes([((SIGMA_A, PI_A), 1), ((SIGMA_A, PI_A), 1), ((SIGMA_B, PI_B), 2)])
    assert psi.norm() == pytest.approx(1.0)
    assert psi.amplitude(SIGMA_A, PI_A) == pytest.approx(2 / np.sqrt(8))
    with pytest.raises(QStateError, match="null"):
        pure_from_amplitudes({(SIGMA_A, PI_A): 0})


def test_pure_reorders_factors():
    psi = pure_from_amplitudes({(PI_A, SIGMA_B): 1}, factors=("pi", "sigma"))
    assert psi.factors == ("sigma", "pi")
    assert psi.amplitude(SIGMA_B, PI_A) == 1


def test_density_validation():
    with pytest.raises(QStateError):
        DensityOperator(("sigma",), np.diag([0.5, 0.6, 0.0]))
    with pytest.raises(QStateError):
        DensityOperator(("sigma",), np.diag([1.5, -0.5, 0.0]))
    with pytest.raises(QStateError):
        DensityOperator(("sigma",), np.eye(2))
    rho = DensityOperator(("sigma",), np.diag([1.0, 0, 0]))
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 0.0


@given(seeds)
def test_partial_trace_over_nothing_is_identity(seed):
    rho = density_from_pure(random_pure(seed, ("sigma", "pi")))
    np.testing.assert_allclose(partial_trace(rho, ("sigma", "pi")).matrix, rho.matrix, atol=1e-12)


@given(seeds, seeds)
def test_partial_trace_of_tensor(sa, sb):
    a, b = random_pure(sa, ("sigma",)), random_pure(sb, ("pi",))
    joint = tensor(density_from_pure(a), density_from_pure(b))
    np.testing.assert_allclose(partial_trace(joint, "sigma").matrix, density_from_pure(a).matrix, atol=1e-12)
    pure_joint = tensor(a, b)
    np.testing.assert_allclose(density_from_pure(pure_joint).matrix, joint.matrix, atol=1e-12)


@given(seeds, seeds, st.floats(0, 1))
def test_operations_preserve_validity(sa, sb, w):
    a = random_mixed(sa, ("sigma", "pi"))
    b = random_mixed(sb, ("sigma", "pi"))
    assert_valid(mix([(w, a), (1 - w, b)]))
    assert_valid(partial_trace(a, "pi"))
    assert_valid(tensor(partial_trace(a, "sigma"), random_mixed(sb, ("M1",), rank=2)))


def test_tensor_overlap_and_mix_errors():
    a = density_from_pure(random_pure(1, ("sigma",)))
    with pytest.raises(QStateError):
        tensor(a, a)
    with pytest.raises(QStateError):
        mix([(0.5, a), (0.4, a)])
    with pytest.raises(QStateError):
        mix([(0.5, a), (0.5, density_from_pure(random_pure(1, ("pi",))))])
    with pytest.raises(QStateError):
        mix([])


def test_json_round_trip():
    rho = random_mixed(5, ("sigma", "pi", "M1"))
    back = DensityOperator.from_json(rho.to_json())
    assert back.factors == rho.factors
    np.testing.assert_array_equal(back.matrix, rho.matrix)
    assert json.loads(rho.to_json())["basis"][0] == "sigma_A,pi_A,no_click"


@given(seeds, st.floats(0, 1))
def test_channel_branch_probabilities_sum_to_one(seed, t):
    p = projector("sigma", [SIGMA_A])
    ch = Channel("sigma", {"pass": np.eye(3) - p + np.sqrt(t) * p, "loss": np.sqrt(1 - t) * p})
    assert ch.completeness_error() <= 1e-15
    for state in (random_pure(seed, ("sigma", "pi")), random_mixed(seed, ("sigma", "pi"))):
        total = sum(b.probability for b in ch.apply(state))
        assert abs(total - 1) <= 1e-12


def test_degenerate_branch():
    psi = pure_from_amplitudes({(SIGMA_B, PI_B): 1})
    branches = Channel("sigma", {"hit": projector("sigma", [SIGMA_A])}).apply(psi)
    assert branches[0].degenerate and branches[0].probability == 0


def test_sector_matrix_drops_alternate_ports():
    psi = pure_from_amplitudes({(SIGMA_A, PI_A): 1, (SIGMA_A2, PI_B): 1})
    block = sector_matrix(density_from_pure(psi))
    assert block.shape == (4, 4)
    assert np.trace(block).real == pytest.approx(0.5)
