"""The iterative inference loop.

Per step the engine estimates the risk maps from the current branch latents,
computes the fusion map, fuses, then re-anchors both branches to the fused
state (data-consistency descent for the fidelity latent, prior refinement
for the prior latent).  Decoding is a clamp to [0, 1].

Steering commands (new lambda values, pause/resume/finalize) are consumed
only at step boundaries, so a run is bitwise reproducible from its config,
observation and applied steering trace.
"""

from __future__ import annotations

import threading
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import runcfg
from .branches import BranchState, fidelity_step, init_latents, prior_step
from .controller import (
    RiskMaps,
    compute_alpha,
    estimate_reliability,
    estimate_uncertainty,
    fuse,
)
from .errors import ParameterError, ValidationError
from .metrics import psnr as _psnr, rmse as _rmse, ssim as _ssim
from .operators import Observation, residual_norm
from .runcfg import RunConfig, apply_preset  # re-exported engine surface

__all__ = [
    "RunConfig", "RunRecord", "StepRecord", "SteeringCommand", "StepController",
    "run", "run_ensemble", "apply_preset", "decode",
]


@dataclass(frozen=True)
class SteeringCommand:
    """A lambda update that becomes active at a given step boundary."""

    new_lambda: float
    effective_from_step: int

    def __post_init__(self):
        if not (0.0 <= self.new_lambda <= 1.0):
            raise ValidationError(f"new_lambda must be in [0, 1], got {self.new_lambda}")
        if self.effective_from_step < 0:
            raise ValidationError("effective_from_step must be >= 0")


class StepController:
    """Thread-safe steering channel between callers and one running engine.

    Callers enqueue lambda updates and pause/resume/finalize requests; the
    engine polls at step boundaries and never blocks on the queue.  Commands
    landing on the same step coalesce to the latest value.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._pending: list[SteeringCommand] = []
        self._applied: list[SteeringCommand] = []
        self._unpaused = threading.Event()
        self._unpaused.set()
        self._finalize = False

    def steer(self, new_lambda: float, effective_from_step: int) -> SteeringCommand:
        cmd = SteeringCommand(new_lambda, effective_from_step)
        with self._lock:
            self._pending.append(cmd)
        return cmd

    def pause(self):
        self._unpaused.clear()

    def resume(self):
        self._unpaused.set()

    def finalize(self):
        with self._lock:
            self._finalize = True
        self._unpaused.set()

    @property
    def paused(self) -> bool:
        return not self._unpaused.is_set()

    # engine side -----------------------------------------------------------

    def poll(self, step: int) -> Optional[float]:
        """Consume commands effective at or before ``step``; latest wins."""
        with self._lock:
            due = [c for c in self._pending if c.effective_from_step <= step]
            if not due:
                return None
            self._pending = [c for c in self._pending if c.effective_from_step > step]
            return due[-1].new_lambda

    def should_finalize(self) -> bool:
        with self._lock:
            return self._finalize

    def note_applied(self, cmd: SteeringCommand):
        with self._lock:
            self._applied.append(cmd)

    def applied_snapshot(self) -> list[SteeringCommand]:
        with self._lock:
            return list(self._applied)

    def wait_while_paused(self, timeout_each: float = 0.02):
        while not self._unpaused.wait(timeout=timeout_each):
            if self.should_finalize():
                return


class _TraceFeed:
    """Replay adapter: a fixed steering trace consumed like a live queue."""

    def __init__(self, commands: Sequence[SteeringCommand]):
        self._pending = sorted(commands, key=lambda c: c.effective_from_step)

    def poll(self, step: int) -> Optional[float]:
        due = [c for c in self._pending if c.effective_from_step <= step]
        if not due:
            return None
        self._pending = [c for c in self._pending if c.effective_from_step > step]
        return due[-1].new_lambda

    def should_finalize(self) -> bool:
        return False

    def note_applied(self, cmd: SteeringCommand):
        pass

    def wait_while_paused(self):
        pass


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Snapshot of one recorded step."""

    step: int
    lambda_used: float
    mean_alpha: float
    residual: float
    z_star: np.ndarray
    risk: RiskMaps
    psnr: Optional[float] = None
    ssim: Optional[float] = None
    rmse: Optional[float] = None


@dataclass(eq=False)
class RunRecord:
    """Full trace of one run: recorded steps, final image, steering history."""

    config_echo: str
    total_steps: int
    input_backprojection: np.ndarray
    final: np.ndarray
    steps: list[StepRecord] = field(default_factory=list)
    steering_trace: list[SteeringCommand] = field(default_factory=list)
    wall_time: float = 0.0
    ensemble_std: Optional[np.ndarray] = None

    def latest(self) -> Optional[StepRecord]:
        return self.steps[-1] if self.steps else None


def decode(z: np.ndarray) -> np.ndarray:
    """Latents live in image space; decoding is a clamp to [0, 1]."""
    return np.clip(z, 0.0, 1.0)


def run(
    obs: Observation,
    cfg: RunConfig,
    steering: StepController | Sequence[SteeringCommand] | None = None,
    on_step: Optional[Callable[[int, int, float, Optional[StepRecord]], None]] = None,
    pace_millis: int = 0,
) -> RunRecord:
    """Execute the full inference loop and return the complete trace.

    ``steering`` may be a live StepController or a pre-recorded command list
    (replay); both produce identical results for identical applied traces.
    ``on_step(step, total, mean_alpha, record_or_None)`` fires after every
    step.  Bitwise deterministic given (obs, cfg, applied steering trace).
    """
    t_start = time.perf_counter()
    rcfg = runcfg.resolve(cfg, image_size=max(obs.operator.shape))
    if rcfg.controller.beta3 > 0:
        warnings.warn(
            "controller.beta3 > 0 inverts the mode semantics: larger lambda "
            "will now increase data-fidelity weight instead of prior weight",
            UserWarning,
            stacklevel=2,
        )

    if steering is None:
        control = None
    elif isinstance(steering, StepController):
        control = steering
    else:
        control = _TraceFeed(steering)

    prior_eff = replace(rcfg.prior, seed=rcfg.prior.seed + rcfg.seed)
    state = init_latents(obs, prior_eff)
    input_bp = state.z_star.copy()
    gt = obs.ground_truth
    op = obs.operator
    lam = rcfg.controller.lam

    records: list[StepRecord] = []
    applied: list[SteeringCommand] = []
    prev_fused: Optional[np.ndarray] = None
    last_unrecorded: Optional[StepRecord] = None
    executed = 0

    for t in range(1, rcfg.steps + 1):
        if control is not None:
            control.wait_while_paused()
            if control.should_finalize():
                break
            new_lam = control.poll(t)
            if new_lam is not None:
                lam = new_lam
                cmd = SteeringCommand(lam, t)
                applied.append(cmd)
                control.note_applied(cmd)

        cc = replace(rcfg.controller, lam=lam)
        r = estimate_reliability(state.z_f, state.z_p, cc.window)
        u = estimate_uncertainty(state, prev_fused, None, cc)
        alpha = compute_alpha(r, u, cc)
        z_star = fuse(state.z_f, state.z_p, alpha)

        z_f = fidelity_step(z_star, obs, rcfg.fidelity)
        z_p = prior_step(z_star, prior_eff, step=t)
        prev_fused = state.z_star
        state = BranchState(z_f=z_f, z_p=z_p, z_star=z_star, t=t)
        executed = t

        mean_alpha = float(alpha.mean())
        record: Optional[StepRecord] = None
        decoded = decode(z_star)
        step_rec = StepRecord(
            step=t,
            lambda_used=lam,
            mean_alpha=mean_alpha,
            residual=residual_norm(op, decoded, obs.measured),
            z_star=z_star,
            risk=RiskMaps(reliability=r, uncertainty=u, alpha=alpha),
            psnr=_psnr(gt, decoded) if gt is not None else None,
            ssim=_ssim(gt, decoded) if gt is not None else None,
            rmse=_rmse(gt, decoded) if gt is not None else None,
        )
        if t % rcfg.record_every == 0 or t == rcfg.steps:
            records.append(step_rec)
            record = step_rec
            last_unrecorded = None
        else:
            last_unrecorded = step_rec

        if on_step is not None:
            on_step(t, rcfg.steps, mean_alpha, record)
        if pace_millis > 0:
            time.sleep(pace_millis / 1000.0)

    if last_unrecorded is not None and (not records or records[-1].step != executed):
        records.append(last_unrecorded)

    echo = runcfg.run_config_to_text(rcfg, operator_keys=runcfg_operator_keys(op))
    return RunRecord(
        config_echo=echo,
        total_steps=executed,
        input_backprojection=input_bp,
        final=decode(state.z_star),
        steps=records,
        steering_trace=applied,
        wall_time=time.perf_counter() - t_start,
    )


def runcfg_operator_keys(op) -> dict[str, str]:
    """Scalar operator description for the config echo (masks/kernels are files)."""
    h, w = op.shape
    return {
        "op.kind": op.kind,
        "op.height": str(h),
        "op.width": str(w),
        "op.noise_sigma": repr(op.noise_sigma),
        "op.seed": str(op.seed),
    }


def run_ensemble(obs: Observation, cfg: RunConfig, k: int) -> tuple[RunRecord, np.ndarray]:
    """K runs with seeds seed..seed+K-1; returns the first member's record
    (carrying the ensemble std map) and the per-pixel sample std of the K
    final images."""
    if k < 2:
        raise ParameterError(f"ensemble size must be >= 2, got {k}")
    members = [run(obs, replace(cfg, seed=cfg.seed + i)) for i in range(k)]
    finals = np.stack([m.final for m in members])
    std_map = np.std(finals, axis=0, ddof=1)
    primary = members[0]
    primary.ensemble_std = std_map
    return primary, std_map
