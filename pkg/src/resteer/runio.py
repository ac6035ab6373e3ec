"""On-disk layouts: run directories and observation directories.

Run directory:

    config.echo                 resolved config + operator description
    input.ct2                   adjoint backprojection of the measurement
    final.ct2 / final.pgm       decoded output
    metrics.csv                 step,psnr,ssim,rmse,residual
    steering.trace              applied "step lambda" lines (may be empty)
    ensemble_std.ct2            only for ensemble runs
    steps/{t}/zstar.ct2         fused latent at recorded step t
    steps/{t}/alpha.ct2 r.ct2 u.ct2

Directories are built in a temp sibling and renamed into place, so a failed
write never leaves partial output.
"""

from __future__ import annotations

import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .engine import RunRecord, SteeringCommand
from .errors import ParameterError, ValidationError
from .operators import ForwardOperator, Observation
from .runcfg import OPERATOR_SCHEMA, parse_kv_text
from .tensorio import read_ct2, write_ct2, write_pgm


def _fmt(v) -> str:
    return "" if v is None else str(v)


def metrics_csv_text(record: RunRecord) -> str:
    lines = ["step,psnr,ssim,rmse,residual"]
    for s in record.steps:
        lines.append(f"{s.step},{_fmt(s.psnr)},{_fmt(s.ssim)},{_fmt(s.rmse)},{_fmt(s.residual)}")
    return "\n".join(lines) + "\n"


def steering_trace_text(trace: list[SteeringCommand]) -> str:
    return "".join(f"{c.effective_from_step} {c.new_lambda!r}\n" for c in trace)


def parse_steering_trace(text: str) -> list[SteeringCommand]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ValidationError(f"steering trace line {lineno}: expected 'step lambda'")
        out.append(SteeringCommand(new_lambda=float(parts[1]), effective_from_step=int(parts[0])))
    return out


def write_run_dir(record: RunRecord, path: str | os.PathLike) -> Path:
    """Materialize a RunRecord; atomic (temp dir + rename), overwrites."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))
    try:
        (tmp / "config.echo").write_text(record.config_echo)
        write_ct2(tmp / "input.ct2", record.input_backprojection)
        write_ct2(tmp / "final.ct2", record.final)
        write_pgm(tmp / "final.pgm", record.final)
        (tmp / "metrics.csv").write_text(metrics_csv_text(record))
        (tmp / "steering.trace").write_text(steering_trace_text(record.steering_trace))
        if record.ensemble_std is not None:
            write_ct2(tmp / "ensemble_std.ct2", record.ensemble_std)
        for s in record.steps:
            d = tmp / "steps" / str(s.step)
            write_ct2(d / "zstar.ct2", s.z_star)
            write_ct2(d / "alpha.ct2", s.risk.alpha)
            write_ct2(d / "r.ct2", s.risk.reliability)
            write_ct2(d / "u.ct2", s.risk.uncertainty)
        if path.exists():
            shutil.rmtree(path)
        os.rename(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return path


# ---------------------------------------------------------------------------
# observation directories


def write_observation(obs: Observation, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))
    op = obs.operator
    try:
        h, w = op.shape
        lines = [
            f"op.kind = {op.kind}",
            f"op.height = {h}",
            f"op.width = {w}",
            f"op.noise_sigma = {op.noise_sigma!r}",
            f"op.seed = {op.seed}",
        ]
        (tmp / "operator.cfg").write_text("\n".join(lines) + "\n")
        if op.complex_codomain:
            write_ct2(tmp / "measured_re.ct2", obs.measured.real)
            write_ct2(tmp / "measured_im.ct2", obs.measured.imag)
        else:
            write_ct2(tmp / "measured.ct2", obs.measured)
        if op.mask is not None:
            write_ct2(tmp / "mask.ct2", op.mask)
        if op.kernel is not None:
            write_ct2(tmp / "kernel.ct2", op.kernel)
        if obs.ground_truth is not None:
            write_ct2(tmp / "ground_truth.ct2", obs.ground_truth)
        if path.exists():
            shutil.rmtree(path)
        os.rename(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return path


def read_observation(path: str | os.PathLike) -> Observation:
    path = Path(path)
    cfg_path = path / "operator.cfg"
    if not cfg_path.is_file():
        raise ParameterError(f"{path}: not an observation directory (missing operator.cfg)")
    raw = parse_kv_text(cfg_path.read_text(), source=str(cfg_path))
    parsed = {}
    for key, value in raw.items():
        if key not in OPERATOR_SCHEMA:
            raise ParameterError(f"{cfg_path}: unknown key {key!r}")
        parsed[key] = OPERATOR_SCHEMA[key](key, value)
    for key in OPERATOR_SCHEMA:
        if key not in parsed:
            raise ParameterError(f"{cfg_path}: missing key {key!r}")

    shape = (parsed["op.height"], parsed["op.width"])
    mask = read_ct2(path / "mask.ct2") if (path / "mask.ct2").is_file() else None
    kernel = read_ct2(path / "kernel.ct2") if (path / "kernel.ct2").is_file() else None
    op = ForwardOperator(
        kind=parsed["op.kind"],
        shape=shape,
        mask=mask,
        kernel=kernel,
        noise_sigma=parsed["op.noise_sigma"],
        seed=parsed["op.seed"],
    )
    if op.complex_codomain:
        re = read_ct2(path / "measured_re.ct2")
        im = read_ct2(path / "measured_im.ct2")
        measured: np.ndarray = re + 1j * im
    else:
        measured = read_ct2(path / "measured.ct2")
    gt_path = path / "ground_truth.ct2"
    gt = read_ct2(gt_path) if gt_path.is_file() else None
    return Observation(measured=measured, operator=op, ground_truth=gt)
