"""Near-field XL-MIMO joint VR recognition and channel estimation.

Thin wrapper over the C++ core. The main entry points are
:class:`Network` (train/estimate/prune/save/load), the channel and
measurement generators, and the NMSE/SDR metrics.
"""

from ._core import (  # noqa: F401
    ArrayConfig,
    ChannelSample,
    Network,
    UserGeometry,
    __version__,
    build_node_features,
    channel_vector,
    dun_step,
    generate_dataset,
    genie_ls,
    harden,
    init_estimate,
    init_threshold,
    make_combiner,
    mdisr_step,
    nmse,
    nmse_db,
    normalize_adjacency,
    observe,
    sample_geometry,
    sample_vr_mask,
    sdr,
    sigma2_for_snr,
    steering_vector,
    steering_vector_far_field,
    vr_weighted_objective,
    weight_matrix_diag,
)
