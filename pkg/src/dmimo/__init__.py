"""Monte Carlo downlink simulator for distributed massive MIMO.

Sweeps the number of APs Q, antennas per AP S, and area side l at a fixed
total antenna count M = Q*S and fixed radiated power P, quantifying the
trade-off between per-AP beamforming gain and macro diversity.
"""
from .config import (
    ChannelConstants,
    ConfigError,
    MonteCarloSettings,
    ScenarioConfig,
    dbm_to_watts,
    derive_noise_power,
    load_config,
    save_config,
    watts_to_dbm,
    with_point,
)
from .geometry import LinkGeometry, drop_ues, link_geometry, place_aps
from .channel import (
    LinkState,
    NetworkRealization,
    build_network,
    large_scale,
    los_probability,
    sample_channel,
    spatial_covariance,
    steering_vector,
)
from .pilots import (
    EstimationOutput,
    PilotPlan,
    assign_pilots,
    estimate_channels,
    lmmse_estimate,
    psi_matrix,
    receive_pilots,
)
from .precoding import (
    StatisticalInconsistencyError,
    UatfStats,
    estimate_uatf_stats,
    mrt_precoders,
    normalization,
    se_per_user,
    uatf_sinr,
)
from .runner import PointResult, SweepResult, SweepSpec, emit_csv, read_csv, run_point, run_sweep

__version__ = "0.1.0"
