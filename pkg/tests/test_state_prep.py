import math

import numpy as np
import pytest

from hybridswap import (
    SplitPhotonSpec,
    StateImpurity,
    TmsvSpec,
    basis_ket,
    beam_splitter,
    displacement,
    log_negativity,
    phase_shift,
    split_photon,
    tmsv,
)
from hybridswap.fock import basis_index, occupations
from hybridswap.states import max_displacement, split_photon_ket, tmsv_tail_weight, two_mode_squeezer


def test_split_photon_balanced_pure():
    rho = split_photon(SplitPhotonSpec(0.5), cutoff=1)
    amps = np.zeros(4)
    amps[basis_index((1, 0), 1)] = amps[basis_index((0, 1), 1)] = 1 / math.sqrt(2)
    assert np.allclose(rho.data, np.outer(amps, amps), atol=1e-15)


def test_split_photon_r0_is_product():
    rho = split_photon(SplitPhotonSpec(0.0), cutoff=1)
    expect = np.zeros((4, 4))
    expect[basis_index((1, 0), 1), basis_index((1, 0), 1)] = 1.0
    assert np.allclose(rho.data, expect)
    assert log_negativity(rho, [0]).log_negativity == 0.0


def test_split_photon_measured_composition():
    # independent 4x4 eigensolve oracle for the mixed initial state
    w_i, w_v, w_m = 0.806, 0.183, 0.011
    d = w_i / 2
    block = np.diag([w_v, w_i / 2, w_i / 2, w_m]).astype(complex)
    block[1, 2] = block[2, 1] = d
    pt = block.copy()
    pt[1, 2] = pt[2, 1] = 0.0
    pt[0, 3] = pt[3, 0] = d
    expected = math.log2(np.abs(np.linalg.eigvalsh(pt)).sum())
    assert expected == pytest.approx(0.70500299, abs=1e-7)

    rho = split_photon(SplitPhotonSpec(0.5, StateImpurity(w_i, w_v, w_m)), cutoff=1)
    report = log_negativity(rho, [0])
    assert report.log_negativity == pytest.approx(expected, abs=1e-12)
    assert abs(report.log_negativity - 0.71) < 0.02


def test_split_photon_multiphoton_override():
    alt = basis_ket(2, 2, (2, 0)).to_density_matrix()
    rho = split_photon(SplitPhotonSpec(0.5, StateImpurity(0.8, 0.1, 0.1)), cutoff=2,
                       multiphoton_state=alt)
    k = basis_index((2, 0), 2)
    assert rho.data[k, k].real == pytest.approx(0.1, abs=1e-15)


def test_split_photon_validation():
    with pytest.raises(ValueError):
        SplitPhotonSpec(1.2)
    with pytest.raises(ValueError):
        StateImpurity(-0.1, 0.6, 0.5)
    with pytest.raises(ValueError):
        StateImpurity(0.5, 0.2, 0.2)  # does not sum to 1


@pytest.mark.parametrize("reflectivity", [0.0, 0.25, 0.5, 0.67, 1.0])
def test_split_photon_negativity_closed_form(reflectivity):
    rho = split_photon(SplitPhotonSpec(reflectivity), cutoff=1)
    expected = 2 * math.log2(math.sqrt(reflectivity) + math.sqrt(1 - reflectivity))
    assert log_negativity(rho, [0]).log_negativity == pytest.approx(expected, abs=1e-12)


def test_tmsv_r0_is_vacuum():
    ket = tmsv(TmsvSpec(0.0, 3))
    assert ket.amplitudes[0] == pytest.approx(1.0)
    assert np.abs(ket.amplitudes[1:]).max() == 0.0


def test_tmsv_amplitude_ratio():
    ket = tmsv(TmsvSpec(1.01, 5))
    c0 = ket.amplitudes[basis_index((0, 0), 5)]
    c1 = ket.amplitudes[basis_index((1, 1), 5)]
    assert (c1 / c0).real == pytest.approx(math.tanh(1.01), abs=1e-15)
    assert abs(math.tanh(1.01) - 0.77) < 5e-3


def test_tmsv_mean_photon_number():
    r, cutoff = 0.71, 5
    lam2 = math.tanh(r) ** 2
    weights = np.array([lam2**n for n in range(cutoff + 1)])
    truncated_mean = (np.arange(cutoff + 1) * weights).sum() / weights.sum()

    ket = tmsv(TmsvSpec(r, cutoff))
    occ = occupations(2, cutoff)
    numeric = float((np.abs(ket.amplitudes) ** 2 * occ[:, 0]).sum())
    assert numeric == pytest.approx(truncated_mean, abs=1e-12)
    # truncation error vanishes with cutoff: compare against sinh^2 r
    big = tmsv(TmsvSpec(r, 20))
    occ_big = occupations(2, 20)
    numeric_big = float((np.abs(big.amplitudes) ** 2 * occ_big[:, 0]).sum())
    assert numeric_big == pytest.approx(math.sinh(r) ** 2, abs=1e-6)


def test_tmsv_tail_weight_closed_form():
    # numeric cross-check of the geometric closed form
    lam2 = math.tanh(0.71) ** 2
    direct = sum((1 - lam2) * lam2**n for n in range(6, 400))
    assert tmsv_tail_weight(0.71, 5) == pytest.approx(direct, abs=1e-12)
    assert tmsv_tail_weight(1.01, 5) == pytest.approx(math.tanh(1.01) ** 12, abs=1e-15)


def test_tmsv_tail_weight_values():
    # frozen oracle values: the 1e-4 tail target at cutoff 5 holds only for
    # weak squeezing; stronger resources need a larger cutoff (the
    # Monte-Carlo oracle runs at >= 10 for this reason)
    assert tmsv_tail_weight(0.45, 5) < 1e-4
    assert tmsv_tail_weight(0.71, 5) == pytest.approx(2.694e-3, rel=1e-3)
    assert tmsv_tail_weight(1.01, 5) == pytest.approx(4.069e-2, rel=1e-3)
    assert tmsv_tail_weight(1.01, 17) < 1e-4


def test_beam_splitter_single_photon():
    out = beam_splitter(basis_ket(2, 2, (1, 0)), (0, 1), 0.5)
    expect = np.zeros(9, dtype=complex)
    expect[basis_index((1, 0), 2)] = 1 / math.sqrt(2)
    expect[basis_index((0, 1), 2)] = 1 / math.sqrt(2)
    assert np.allclose(out.amplitudes, expect, atol=1e-14)


def test_beam_splitter_identity_at_full_transmission():
    rng = np.random.default_rng(2)
    amps = rng.normal(size=9) + 1j * rng.normal(size=9)
    ket = basis_ket(2, 2, (0, 0))
    state = type(ket)(2, 2, amps / np.linalg.norm(amps))
    out = beam_splitter(state, (0, 1), 1.0)
    assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-14)


def test_beam_splitter_hong_ou_mandel():
    out = beam_splitter(basis_ket(2, 4, (1, 1)), (0, 1), 0.5)
    assert abs(out.amplitudes[basis_index((1, 1), 4)]) < 1e-14
    p20 = abs(out.amplitudes[basis_index((2, 0), 4)]) ** 2
    p02 = abs(out.amplitudes[basis_index((0, 2), 4)]) ** 2
    assert p20 == pytest.approx(0.5, abs=1e-12)
    assert p02 == pytest.approx(0.5, abs=1e-12)


def test_beam_splitter_conserves_photon_number():
    rng = np.random.default_rng(4)
    cutoff = 4
    # support below the cutoff so every total-photon block is complete
    amps = np.zeros((cutoff + 1) ** 2, dtype=complex)
    occ = occupations(2, cutoff)
    for i, (n1, n2) in enumerate(occ):
        if n1 + n2 <= cutoff:
            amps[i] = rng.normal() + 1j * rng.normal()
    amps /= np.linalg.norm(amps)
    from hybridswap.fock import FockKet

    state = FockKet(2, cutoff, amps)
    out = beam_splitter(state, (0, 1), 0.37, phase=0.9)
    total_in = float((np.abs(state.amplitudes) ** 2 * occ.sum(axis=1)).sum())
    total_out = float((np.abs(out.amplitudes) ** 2 * occ.sum(axis=1)).sum())
    assert abs(out.norm() - 1.0) < 1e-10
    assert total_out == pytest.approx(total_in, abs=1e-10)


def test_beam_splitter_rejects_bad_modes():
    ket = basis_ket(2, 1, (0, 0))
    with pytest.raises(ValueError):
        beam_splitter(ket, (0, 0), 0.5)
    with pytest.raises(ValueError):
        beam_splitter(ket, (0, 2), 0.5)


def test_displacement_identity_and_moment():
    vac = basis_ket(1, 12, (0,))
    assert np.allclose(displacement(vac, 0, 0.0).amplitudes, vac.amplitudes)

    alpha = 0.4 + 0.3j
    out = displacement(vac, 0, alpha)
    nbar = float((np.abs(out.amplitudes) ** 2 * np.arange(13)).sum())
    assert nbar == pytest.approx(abs(alpha) ** 2, abs=1e-8)


def test_displacement_composition_inverse():
    rng = np.random.default_rng(9)
    amps = np.zeros(13, dtype=complex)
    amps[:4] = rng.normal(size=4) + 1j * rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    from hybridswap.fock import FockKet

    state = FockKet(1, 12, amps)
    alpha = 0.8 - 0.5j
    assert abs(alpha) <= 1.0
    back = displacement(displacement(state, 0, alpha), 0, -alpha)
    assert np.abs(back.amplitudes - state.amplitudes).max() < 1e-8


def test_displacement_bound_enforced():
    vac = basis_ket(1, 3, (0,))
    bound = max_displacement(3)
    with pytest.raises(ValueError, match="documented bound"):
        displacement(vac, 0, bound * 1.5)
    # opting out is allowed for callers managing their own headroom
    displacement(vac, 0, bound * 1.5, check=False)


def test_phase_shift_changes_only_phases():
    ket = split_photon_ket(0.3, cutoff=1)
    out = phase_shift(ket, 0, 0.7)
    assert np.allclose(np.abs(out.amplitudes), np.abs(ket.amplitudes), atol=1e-15)
    assert abs(out.norm() - 1.0) < 1e-12


def test_two_mode_squeezer_matches_tmsv():
    # acting on vacuum it must reproduce the closed-form resource state;
    # the truncated-generator exponential is only trusted away from the cutoff
    r, cutoff = 0.5, 10
    vac = basis_ket(2, cutoff, (0, 0))
    out = two_mode_squeezer(vac, (0, 1), r)
    ref = tmsv(TmsvSpec(r, cutoff))
    phase = out.amplitudes[0] / abs(out.amplitudes[0])
    trusted = [basis_index((n, n), cutoff) for n in range(cutoff - 3)]
    assert np.abs((out.amplitudes / phase - ref.amplitudes)[trusted]).max() < 1e-7
