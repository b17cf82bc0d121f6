"""Truncated-Fock simulation of two-channel CV teleportation of a photon polarization qubit."""

from .analytic_formulas import eta_of_n, f_of_n, f_opt, p_of_n, q_of_v, v_of_q
from .cloning_analysis import (
    CloningReport,
    SubspaceDecomposition,
    block_probabilities,
    canonical_blocks,
    decompose_block,
    full_report,
)
from .epr_teleport import (
    ChannelResult,
    IntegrationConfig,
    SqueezingParam,
    bell_projection_oracle,
    commutation_identity_check,
    epr_state,
    outcome_density,
    teleport_channel,
    transfer_operator,
)
from .fock_core import (
    JonesVector,
    displacement,
    ladder,
    project_total_photon_number,
    rotate_polarization,
)

__version__ = "0.1.0"
