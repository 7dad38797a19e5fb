"""Minimax sliding-window denoising of finite-alphabet data under channel uncertainty."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Channel,
    ChannelSet,
    JointDistribution,
    LossMatrix,
    WindowedDenoiser,
    bsc,
    channel_distance,
    channel_new,
    hamming_loss,
    identity_channel,
    rho,
    say_constant,
    say_what_you_see,
)
from .empirical import EmpiricalStats, conditional_center, context_weights, empirical_joint, l_inf_distance  # noqa: E402
from .feasibility import b_l_modulus, bsc_cover, induced_input, is_feasible, phi_k, trim  # noqa: E402
from .minimax import (  # noqa: E402
    MinimaxSolution,
    dude_rule,
    f_k_context_loss,
    g_k_expected_loss,
    j_k_worst_case,
    solve_minimax,
)
from .pipeline import PipelineConfig, apply_denoiser, default_window_order, denoise, denoise_feasible  # noqa: E402
