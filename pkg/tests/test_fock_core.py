import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridswap import (
    FockDensityMatrix,
    FockKet,
    InvariantViolation,
    basis_ket,
    fidelity,
    from_json_dict,
    partial_trace,
    partial_transpose,
    tensor,
    to_json_dict,
    trace_norm,
)
from hybridswap.channel import optimal_swap_state
from hybridswap.fock import eigh_checked, space_dim
from hybridswap.states import split_photon_ket


def random_state(rng, modes, cutoff):
    dim = space_dim(modes, cutoff)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return FockDensityMatrix(modes, cutoff, m / np.trace(m).real)


def test_tensor_vacuum_projectors():
    vac = basis_ket(1, 2, (0,)).to_density_matrix()
    two = tensor(vac, vac)
    assert two.modes == 2
    expect = np.zeros((9, 9))
    expect[0, 0] = 1.0
    assert np.allclose(two.data, expect)


def test_tensor_trace_multiplies():
    rng = np.random.default_rng(3)
    a = random_state(rng, 1, 3)
    b = random_state(rng, 1, 3)
    # unnormalized factors: scale and mark accordingly
    a2 = FockDensityMatrix(1, 3, 0.5 * a.data, normalized=False)
    b2 = FockDensityMatrix(1, 3, 0.25 * b.data, normalized=False)
    prod = tensor(a2, b2)
    assert prod.trace() == pytest.approx(a2.trace() * b2.trace(), abs=1e-12)


def test_tensor_cutoff_mismatch():
    a = basis_ket(1, 2, (0,)).to_density_matrix()
    b = basis_ket(1, 3, (0,)).to_density_matrix()
    with pytest.raises(ValueError, match="cutoff"):
        tensor(a, b)


def test_partial_trace_split_photon():
    rho = split_photon_ket(0.5, cutoff=1).to_density_matrix()
    reduced = partial_trace(rho, keep=[0])
    assert np.allclose(reduced.data, np.diag([0.5, 0.5]), atol=1e-12)


def test_partial_trace_keep_all_is_identity():
    rng = np.random.default_rng(5)
    rho = random_state(rng, 2, 2)
    same = partial_trace(rho, keep=[0, 1])
    assert np.array_equal(same.data, rho.data)


def test_partial_trace_number_state():
    for n in range(3):
        rho = basis_ket(2, 3, (n, n)).to_density_matrix()
        reduced = partial_trace(rho, keep=[1])
        expect = np.zeros((4, 4))
        expect[n, n] = 1.0
        assert np.allclose(reduced.data, expect, atol=1e-14)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(7)
    rho = random_state(rng, 3, 1)
    for keep in ([0], [1], [2], [0, 2]):
        assert partial_trace(rho, keep).trace() == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_rejects_empty_or_bad_modes():
    rho = basis_ket(2, 1, (0, 0)).to_density_matrix()
    with pytest.raises(ValueError):
        partial_trace(rho, keep=[])
    with pytest.raises(ValueError):
        partial_trace(rho, keep=[2])


def test_partial_transpose_bell_eigenvalues():
    bell = split_photon_ket(0.5, cutoff=1).to_density_matrix()
    pt = partial_transpose(bell, [0])
    eigs = np.sort(np.linalg.eigvalsh(pt.data))
    assert np.allclose(eigs, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)
    assert pt.trace() == pytest.approx(1.0, abs=1e-12)


def test_partial_transpose_involution():
    rng = np.random.default_rng(11)
    rho = random_state(rng, 2, 2)
    back = partial_transpose(partial_transpose(rho, [1]), [1])
    assert np.array_equal(back.data, rho.data)


def test_partial_transpose_product_state_stays_positive():
    rng = np.random.default_rng(13)
    prod = tensor(random_state(rng, 1, 2), random_state(rng, 1, 2))
    pt = partial_transpose(prod, [0])
    assert np.linalg.eigvalsh(pt.data).min() > -1e-12


def test_partial_transpose_swapped_state_negative():
    rho = optimal_swap_state(math.tanh(1.01), cutoff=1)
    pt = partial_transpose(rho, [0])
    assert np.linalg.eigvalsh(pt.data).min() < -0.1


def test_trace_norm_values():
    rho = optimal_swap_state(0.5, cutoff=1)
    assert trace_norm(rho) == pytest.approx(1.0, abs=1e-12)

    bell_pt = partial_transpose(split_photon_ket(0.5, 1).to_density_matrix(), [0])
    assert trace_norm(bell_pt) == pytest.approx(2.0, abs=1e-12)

    m = FockDensityMatrix(1, 1, np.diag([0.7, -0.3]).astype(complex), normalized=False)
    assert trace_norm(m) == pytest.approx(1.0, abs=1e-14)


def test_fidelity_examples():
    psi = split_photon_ket(0.5, cutoff=1)
    assert fidelity(psi.to_density_matrix(), psi) == pytest.approx(1.0, abs=1e-12)

    vac = basis_ket(1, 2, (0,)).to_density_matrix()
    one = basis_ket(1, 2, (1,))
    assert fidelity(vac, one) == pytest.approx(0.0, abs=1e-14)

    g = 0.77
    rho = optimal_swap_state(g, cutoff=1)
    amps = np.zeros(4, dtype=complex)
    amps[2] = 1.0 / math.sqrt(1 + g * g)  # |1,0>
    amps[1] = g / math.sqrt(1 + g * g)  # |0,1>
    psi_prime = FockKet(2, 1, amps)
    assert fidelity(rho, psi_prime) == pytest.approx((1 + g * g) / 2, abs=1e-12)
    assert fidelity(rho, psi_prime) == pytest.approx(0.7965, abs=1e-4)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity(basis_ket(1, 2, (0,)).to_density_matrix(), basis_ket(1, 3, (0,)))


def test_constructor_rejects_non_hermitian():
    m = np.zeros((2, 2), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(InvariantViolation):
        FockDensityMatrix(1, 1, m, normalized=False)


def test_constructor_rejects_bad_trace():
    with pytest.raises(InvariantViolation):
        FockDensityMatrix(1, 1, np.diag([0.7, 0.7]).astype(complex))


def test_validate_flags_negative_eigenvalues():
    m = np.diag([1.2, -0.2]).astype(complex)
    state = FockDensityMatrix(1, 1, m)
    with pytest.raises(InvariantViolation):
        state.validate()


def test_eigh_residuals_small():
    rng = np.random.default_rng(17)
    rho = random_state(rng, 2, 2)
    w, v = eigh_checked(rho.data)
    assert np.linalg.norm(rho.data @ v - v * w, axis=0).max() < 1e-8


def test_json_round_trip_exact():
    rho = optimal_swap_state(math.tanh(0.71), cutoff=2)
    text = json.dumps(to_json_dict(rho))
    back = from_json_dict(json.loads(text))
    assert back.modes == rho.modes and back.cutoff == rho.cutoff
    assert np.array_equal(back.data, rho.data)


def test_json_round_trip_unnormalized():
    pt = partial_transpose(optimal_swap_state(0.61, 1), [0])
    back = from_json_dict(json.loads(json.dumps(to_json_dict(pt))))
    assert not back.normalized
    assert np.array_equal(back.data, pt.data)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_property_pt_involution_and_trace(seed):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, 2, 1)
    pt = partial_transpose(rho, [0])
    assert abs(pt.trace() - rho.trace()) < 1e-12
    assert np.max(np.abs(pt.data - pt.data.conj().T)) < 1e-10
    assert np.array_equal(partial_transpose(pt, [0]).data, rho.data)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_property_tensor_then_trace_recovers_factor(seed):
    rng = np.random.default_rng(seed)
    a = random_state(rng, 1, 2)
    b = random_state(rng, 1, 2)
    joint = tensor(a, b)
    assert np.allclose(partial_trace(joint, [0]).data, a.data, atol=1e-12)
    assert np.allclose(partial_trace(joint, [1]).data, b.data, atol=1e-12)
