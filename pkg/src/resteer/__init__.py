"""resteer: steerable dual-branch restoration for linear imaging inverse problems.

A training-free engine that iterates two image-space latents (a
data-consistency branch and a smoothing-prior branch), fused each step by a
per-pixel sigmoid controller driven by structural reliability, instability,
and a user mode parameter that can be re-steered while a run is in flight.
"""

from .branches import BranchState, FidelityConfig, PriorConfig, fidelity_step, init_latents, prior_step
from .controller import (
    ControllerConfig,
    RiskMaps,
    compute_alpha,
    estimate_reliability,
    estimate_uncertainty,
    fuse,
)
from .engine import RunRecord, SteeringCommand, StepController, decode, run, run_ensemble
from .errors import (
    CapabilityError,
    DimensionError,
    ParameterError,
    ResteerError,
    StateError,
    ValidationError,
)
from .metrics import MetricReport, local_stats, psnr, rmse, ssim
from .operators import ForwardOperator, Observation, adjoint, apply, degrade, null_project
from .phantoms import make_phantom, make_sampling_mask
from .risk import RiskReport, hallucination_risk, structure_score
from .runcfg import RunConfig, apply_preset

__version__ = "0.1.0"
