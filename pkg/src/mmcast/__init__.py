"""Max-min fair multicast hybrid precoding: LB-GDM and an SDR baseline."""

from .channel import ChannelParams, ChannelSet, generate_channel, steering_vector
from .gdm import GdmHyperParams, run_lb_gdm, run_lb_gdm_digital
from .records import RunRecord
from .sdp import SdpProblem, SdpSolution, real_embed, solve_maxmin_sdp
from .sdr import SdrParams, run_sdr_c
from .system import (
    DIGITAL, HYBRID, HybridSolution, PhaseAlphabet, SystemConfig, min_snr,
    spectral_efficiency, user_snrs,
)

__version__ = "0.1.0"
