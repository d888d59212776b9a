import math

import numpy as np
import pytest

from hybridswap import (
    ChannelSpec,
    FockDensityMatrix,
    InvariantViolation,
    apply_channel,
    apply_pure_loss,
    basis_ket,
    channel_params,
    dephase,
    loss_via_dilation,
    optimal_swap_state,
    partial_trace,
    split_photon,
    teleportation_noise,
    tensor,
    two_mode_squeezer,
)
from hybridswap.channel import amplifier_headroom, amplifier_kraus, pure_loss_kraus
from hybridswap.fock import basis_index
from hybridswap.states import SplitPhotonSpec


def single_mode_basis_states(cutoff):
    """Pure states spanning the operator space of one mode."""
    d = cutoff + 1
    states = []
    for m in range(d):
        states.append(basis_ket(1, cutoff, (m,)).to_density_matrix())
    for m in range(d):
        for n in range(m + 1, d):
            for coef in (1.0, 1.0j):
                amps = np.zeros(d, dtype=complex)
                amps[m] = 1 / math.sqrt(2)
                amps[n] = coef / math.sqrt(2)
                from hybridswap.fock import FockKet

                states.append(FockKet(1, cutoff, amps).to_density_matrix())
    return states


def test_channel_params_optimal_gain():
    for r in (0.3, 0.71, 1.01):
        g = math.tanh(r)
        p = channel_params(ChannelSpec(r))
        assert p.amplitude_gain == pytest.approx(g, abs=1e-12)
        assert p.added_noise == pytest.approx((1 - g * g) / 2, abs=1e-12)
        assert p.amplifier_gain == pytest.approx(1.0, abs=1e-12)
        assert p.eta == pytest.approx(g * g, abs=1e-12)
    p = channel_params(ChannelSpec(1.01))
    assert p.eta == pytest.approx(0.5865, abs=1e-4)


def test_channel_params_classical_point():
    p = channel_params(ChannelSpec(0.0, 1.0))
    assert p.added_noise == pytest.approx(1.0, abs=1e-12)
    assert p.amplifier_gain == pytest.approx(2.0, abs=1e-12)
    assert p.eta == pytest.approx(0.5, abs=1e-12)


def test_channel_params_quantum_limit_holds_on_grid():
    for r in (0.0, 0.4, 0.71, 1.01):
        for g in np.linspace(0.0, 1.2, 13):
            p = channel_params(ChannelSpec(r, float(g)))
            assert p.added_noise >= abs(p.amplitude_gain**2 - 1) / 2 - 1e-12
            assert p.eta * p.amplifier_gain == pytest.approx(p.amplitude_gain**2, abs=1e-12)


def test_zero_gain_output_is_input_independent():
    spec = ChannelSpec(0.4, 0.0)
    outs = []
    for occ in ((0, 0), (1, 0), (0, 1)):
        rho = basis_ket(2, 4, occ).to_density_matrix()
        outs.append(apply_channel(rho, 1, spec, trace_tol=1e-6))
    base = partial_trace(outs[0], [1]).data
    for out in outs[1:]:
        assert np.abs(partial_trace(out, [1]).data[: len(base), : len(base)] - base).max() < 1e-9


def test_swapped_state_matches_closed_form():
    initial = split_photon(SplitPhotonSpec(0.5), cutoff=5)
    for r in (0.3, 1.01):
        out = apply_channel(initial, 1, ChannelSpec(r))
        ref = optimal_swap_state(math.tanh(r), cutoff=out.cutoff)
        assert np.abs(out.data - ref.data).max() < 1e-8


def test_optimal_gain_equals_pure_loss_on_spanning_basis():
    r = 0.71
    eta = math.tanh(r) ** 2
    spec = ChannelSpec(r)
    for state in single_mode_basis_states(2):
        via_channel = apply_channel(state, 0, spec, out_cutoff=2)
        via_loss = apply_pure_loss(state, 0, eta)
        assert np.abs(via_channel.data - via_loss.data).max() < 1e-9


def test_loss_dilation_equals_kraus_route():
    rng = np.random.default_rng(8)
    g = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    m = g @ g.conj().T
    rho = FockDensityMatrix(2, 2, m / np.trace(m).real)
    for eta in (0.2, 0.63, 0.9):
        a = loss_via_dilation(rho, 1, eta)
        b = apply_pure_loss(rho, 1, eta)
        assert np.abs(a.data - b.data).max() < 1e-12


def test_pure_loss_kraus_complete():
    for eta in (0.1, 0.5, 0.93):
        ops = pure_loss_kraus(eta, 8)
        total = sum(op.T @ op for op in ops)
        assert np.abs(total - np.eye(8)).max() < 1e-12


def test_amplifier_kraus_complete_with_headroom():
    for big_g in (1.05, 1.4, 2.0):
        d_in = 6
        k_max = amplifier_headroom(big_g, d_in - 1, 1e-10)
        ops = amplifier_kraus(big_g, d_in, d_in + k_max)
        total = sum(op.T @ op for op in ops)
        assert np.abs(total - np.eye(d_in)).max() < 1e-8


def test_amplifier_kraus_matches_squeezer_dilation():
    # dual route: analytic Kraus series vs explicit two-mode squeezer with a
    # vacuum idler, traced out
    big_g = 1.3
    s = math.acosh(math.sqrt(big_g))
    cutoff = 11
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[0], amps[1], amps[2] = 0.8, 0.5j, 0.33
    amps /= np.linalg.norm(amps)
    from hybridswap.fock import FockKet

    rho = FockKet(1, cutoff, amps).to_density_matrix()

    ops = amplifier_kraus(big_g, cutoff + 1, cutoff + 1)
    kraus_out = sum(op @ rho.data @ op.conj().T for op in ops)

    joint = tensor(rho, basis_ket(1, cutoff, (0,)).to_density_matrix())
    dilated = partial_trace(
        two_mode_squeezer(joint, (0, 1), s, norm_tol=1e-6), keep=[0]
    )
    assert np.abs(kraus_out - dilated.data).max() < 1e-8


def test_apply_channel_trace_psd_hermitian_on_grid():
    initial = split_photon(
        SplitPhotonSpec(0.5, None), cutoff=4
    )
    for r in (0.0, 0.71):
        for g in (0.3, 0.8, 1.1):
            out = apply_channel(initial, 1, ChannelSpec(r, g), trace_tol=1e-6)
            assert abs(out.trace() - 1.0) < 1e-9
            assert np.abs(out.data - out.data.conj().T).max() < 1e-10
            assert out.eigenvalues().min() > -1e-9


def test_apply_channel_infinite_squeezing_is_identity():
    rho = split_photon(SplitPhotonSpec(0.5), cutoff=4)
    out = apply_channel(rho, 1, ChannelSpec(7.0), out_cutoff=4, trace_tol=1e-4)
    assert np.abs(out.data - rho.data).max() < 2e-4


def test_apply_channel_r0_never_entangles():
    from hybridswap import log_negativity

    initial = split_photon(SplitPhotonSpec(0.5), cutoff=4)
    for g in (0.2, 0.7, 1.1):
        out = apply_channel(initial, 1, ChannelSpec(0.0, g), trace_tol=1e-6)
        assert log_negativity(out, [0]).log_negativity <= 1e-7


def test_loss_composition_folds():
    # pre-loss -> channel -> post-loss equals the folded single channel
    initial = split_photon(SplitPhotonSpec(0.5), cutoff=4)
    r, g = 0.71, 0.8
    folded = apply_channel(initial, 1, ChannelSpec(r, g, pre_loss=0.85, post_loss=0.9),
                           trace_tol=1e-6)
    manual = apply_pure_loss(initial, 1, 0.85)
    manual = apply_channel(manual, 1, ChannelSpec(r, g), trace_tol=1e-6)
    manual = apply_pure_loss(manual, 1, 0.9)
    dim = min(folded.dim, manual.dim)
    assert np.abs(folded.data[:dim, :dim] - manual.data[:dim, :dim]).max() < 1e-8


def test_apply_channel_requires_normalized_input():
    bad = FockDensityMatrix(1, 2, np.diag([0.5, 0.0, 0.0]).astype(complex), normalized=False)
    with pytest.raises(ValueError, match="normalized"):
        apply_channel(bad, 0, ChannelSpec(0.5))


def test_apply_channel_cutoff_too_small_raises():
    rho = basis_ket(1, 4, (4,)).to_density_matrix()
    with pytest.raises(InvariantViolation, match="cutoff"):
        apply_channel(rho, 0, ChannelSpec(0.0, 1.0), out_cutoff=4, trace_tol=1e-8)


def test_dephasing_scales_coherences():
    rho = optimal_swap_state(0.6, cutoff=1)
    out = dephase(rho, 1, 0.7)
    i01, i10 = basis_index((0, 1), 1), basis_index((1, 0), 1)
    assert out.data[i01, i10] == pytest.approx(0.7 * rho.data[i01, i10], abs=1e-15)
    assert np.allclose(np.diag(out.data), np.diag(rho.data))


def test_dephasing_commutes_with_loss():
    rho = optimal_swap_state(0.6, cutoff=2)
    a = dephase(apply_pure_loss(rho, 1, 0.8), 1, 0.9)
    b = apply_pure_loss(dephase(rho, 1, 0.9), 1, 0.8)
    assert np.abs(a.data - b.data).max() < 1e-14


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec(-0.1)
    with pytest.raises(ValueError):
        ChannelSpec(0.5, -0.2)
    with pytest.raises(ValueError):
        ChannelSpec(0.5, 0.5, pre_loss=0.0)
    with pytest.raises(ValueError):
        ChannelSpec(0.5, 0.5, dephasing=1.2)
    assert ChannelSpec(0.71).effective_gain == pytest.approx(math.tanh(0.71))


def test_teleportation_noise_formula():
    # spot value and symmetry in the formula itself
    r, g = 0.71, 0.63
    expect = ((1 + g) ** 2 * math.exp(-2 * r) + (1 - g) ** 2 * math.exp(2 * r)) / 4
    assert teleportation_noise(r, g) == expect
    g = math.tanh(r)
    assert teleportation_noise(r, g) == pytest.approx((1 - g * g) / 2, abs=1e-14)
