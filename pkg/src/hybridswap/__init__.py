"""Desk-scale simulator for hybrid discrete/continuous-variable entanglement swapping."""

from .fock import (
    FockDensityMatrix,
    FockKet,
    InvariantViolation,
    basis_ket,
    fidelity,
    from_json_dict,
    load_density_matrix,
    partial_trace,
    partial_transpose,
    save_density_matrix,
    state_fidelity,
    tensor,
    to_json_dict,
    trace_distance,
    trace_norm,
)
from .states import (
    SplitPhotonSpec,
    StateImpurity,
    TmsvSpec,
    beam_splitter,
    displacement,
    phase_shift,
    split_photon,
    split_photon_ket,
    tmsv,
    two_mode_squeezer,
)
from .channel import (
    ChannelSpec,
    GaussianChannelParams,
    apply_channel,
    apply_pure_loss,
    channel_params,
    dephase,
    loss_via_dilation,
    mc_teleport_oracle,
    optimal_swap_state,
    teleportation_noise,
)
from .negativity import NegativityReport, ScanRow, gain_scan, log_negativity, scan_to_csv
from .postselect import (
    PostSelectSummary,
    QubitBlock,
    average_fidelity,
    chsh_correlation,
    chsh_correlation_projective,
    chsh_s,
    chsh_s_closed_form,
    extract_qubit_block,
    purify,
    purify_via_tensor,
    summarize,
    teleport_qubit,
)
from .tomography import (
    MleDiagnostics,
    QuadratureSample,
    TomoDataset,
    homodyne_pdf,
    mle_reconstruct,
    phase_schedule,
    sample_homodyne,
)

__version__ = "0.1.0"
