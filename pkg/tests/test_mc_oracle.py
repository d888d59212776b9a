import math

import numpy as np
import pytest

from hybridswap import (
    ChannelSpec,
    apply_channel,
    basis_ket,
    displacement,
    mc_teleport_oracle,
    split_photon,
    trace_distance,
)
from hybridswap.states import SplitPhotonSpec

SPEC = ChannelSpec(0.71)  # optimal gain


def test_forced_outcome_is_pure_unit_trace():
    vac = basis_ket(1, 10, (0,)).to_density_matrix()
    out = mc_teleport_oracle(vac, 0, SPEC, 1, seed=1, force_outcome=(0.0, 0.0))
    assert out.trace() == pytest.approx(1.0, abs=1e-12)
    purity = float(np.real(np.trace(out.data @ out.data)))
    assert purity == pytest.approx(1.0, abs=1e-10)


def test_seeded_runs_are_bit_identical():
    vac = basis_ket(1, 8, (0,)).to_density_matrix()
    a = mc_teleport_oracle(vac, 0, SPEC, 300, seed=42)
    b = mc_teleport_oracle(vac, 0, SPEC, 300, seed=42)
    assert np.array_equal(a.data, b.data)
    c = mc_teleport_oracle(vac, 0, SPEC, 300, seed=43)
    assert not np.array_equal(a.data, c.data)


def test_output_independent_of_worker_count():
    one = basis_ket(1, 8, (1,)).to_density_matrix()
    a = mc_teleport_oracle(one, 0, SPEC, 1100, seed=9, workers=1)
    b = mc_teleport_oracle(one, 0, SPEC, 1100, seed=9, workers=4)
    assert np.array_equal(a.data, b.data)


@pytest.mark.parametrize("occ", [(0,), (1,)])
def test_converges_to_deterministic_channel(occ):
    inp = basis_ket(1, 12, occ).to_density_matrix()
    ref = apply_channel(inp, 0, SPEC)
    mc = mc_teleport_oracle(inp, 0, SPEC, 5000, seed=7)
    assert trace_distance(mc, ref) < 0.03


def test_feedforward_sign_via_displaced_input():
    # a displaced input breaks phase symmetry: any sign error in the
    # measured-quadrature feedforward would flip the output displacement
    alpha = 0.5
    g = math.tanh(SPEC.squeezing)
    inp = displacement(basis_ket(1, 12, (0,)), 0, alpha).to_density_matrix()
    mc = mc_teleport_oracle(inp, 0, SPEC, 6000, seed=3)
    a_op = np.diag(np.sqrt(np.arange(1, 13)), 1)
    mean_a = complex(np.trace(mc.data @ a_op))
    assert mean_a.real == pytest.approx(g * alpha, abs=0.02)
    assert abs(mean_a.imag) < 0.02


def test_mixed_and_multimode_input():
    # teleport mode 1 of the two-mode split photon; bystander mode rides along
    rho = split_photon(SplitPhotonSpec(0.5), cutoff=7)
    ref = apply_channel(rho, 1, SPEC, out_cutoff=7)
    mc = mc_teleport_oracle(rho, 1, SPEC, 3000, seed=21)
    assert trace_distance(mc, ref) < 0.05


def test_post_loss_and_dephasing_apply():
    spec = ChannelSpec(0.71, post_loss=0.8, dephasing=0.9)
    inp = basis_ket(1, 12, (1,)).to_density_matrix()
    ref = apply_channel(inp, 0, spec, out_cutoff=12)
    mc = mc_teleport_oracle(inp, 0, spec, 5000, seed=13)
    assert trace_distance(mc, ref) < 0.03


def test_rejects_bad_trial_count():
    vac = basis_ket(1, 6, (0,)).to_density_matrix()
    with pytest.raises(ValueError):
        mc_teleport_oracle(vac, 0, SPEC, 0, seed=0)
