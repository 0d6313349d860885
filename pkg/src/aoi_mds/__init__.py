"""Age of information for K-source round-robin updates over a Gilbert-Elliot channel."""
from .analysis import (
    AoiResult,
    CodingGain,
    EventProbabilities,
    InterarrivalMoments,
    Mode,
    Region,
    SystemConfig,
    calibrate_c_eps,
    coded_aoi_approx,
    coded_aoi_exact,
    coded_aoi_renewal,
    coded_interarrival_moments,
    coding_gain,
    event_probs,
    gaussian_aoi,
    optimal_k,
    region_aoi,
    uncoded_aoi,
    uncoded_interarrival_pmf,
)
from .channel import (
    BASELINE_CHANNEL,
    ChannelState,
    GEChannel,
    GEParams,
    marginal_erasure_prob,
    reverse_states,
    steady_state_good,
    step,
)
from .erasure import ErasureCountPmf, bep_mds, erasure_pmf_closed, erasure_pmf_dp
from .simulator import RecoveryOffset, SimConfig, SimReport, estimate_erasure_pmf, simulate, simulate_coded, simulate_uncoded

__version__ = "0.1.0"
