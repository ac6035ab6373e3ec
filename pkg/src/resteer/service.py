"""HTTP facade: job submission, polling, per-step frames, live lambda steering.

Jobs run one engine loop each on a worker thread; steering commands are
queued through the engine's step controller and take effect at the next
step boundary.  The job store is in memory with run directories written to
the data directory on completion; a restart does not resume jobs.
"""

from __future__ import annotations

import base64
import binascii
import io
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse, Response
from PIL import Image

from .branches import PriorConfig
from .engine import StepController, run
from .errors import ParameterError, ResteerError, ValidationError
from .operators import (
    Observation,
    adjoint,
    blur_operator,
    box_kernel,
    degrade,
    frequency_mask_operator,
    gaussian_kernel,
    identity_operator,
    pixel_mask_operator,
)
from .phantoms import MASK_KINDS, PHANTOM_NAMES, make_phantom, make_sampling_mask
from .runcfg import CONFIG_SCHEMA, RunConfig, run_config_from_keys
from .runio import write_observation, write_run_dir
from .tensorio import ct2_bytes, ct2_from_bytes

LAYERS = ("restored", "alpha", "reliability", "uncertainty", "input")

_ACTIVE_STATES = ("pending", "running", "paused")


class Job:
    def __init__(self, job_id: str, obs: Observation, cfg: RunConfig, pace_millis: int):
        self.id = job_id
        self.obs = obs
        self.cfg = cfg
        self.pace_millis = pace_millis
        self.state = "pending"
        self.current_step = 0
        self.total_steps = cfg.steps
        self.mean_alpha: float | None = None
        self.latest = None  # latest recorded StepRecord
        self.steps: dict[int, object] = {}
        self.record = None
        self.error: str | None = None
        self.controller = StepController()
        self.lock = threading.Lock()
        self.input_bp = adjoint(obs.operator, obs.measured)

    def lam(self) -> float:
        trace = self.controller.applied_snapshot()
        if trace:
            return trace[-1].new_lambda
        from .runcfg import resolve

        return resolve(self.cfg, image_size=max(self.obs.operator.shape)).controller.lam


class JobManager:
    def __init__(self, data_dir: Path, jobs_max: int, pace_millis: int):
        self.data_dir = data_dir
        self.jobs_max = jobs_max
        self.pace_millis = pace_millis
        self.jobs: dict[str, Job] = {}
        self.lock = threading.Lock()

    def active_count(self) -> int:
        return sum(1 for j in self.jobs.values() if j.state in _ACTIVE_STATES)

    def submit(self, obs: Observation, cfg: RunConfig, pace_millis: int | None) -> Job:
        with self.lock:
            if self.active_count() >= self.jobs_max:
                raise _TooManyJobs()
            job = Job(uuid.uuid4().hex[:12], obs, cfg,
                      self.pace_millis if pace_millis is None else pace_millis)
            self.jobs[job.id] = job
        thread = threading.Thread(target=self._run_job, args=(job,), daemon=True)
        thread.start()
        return job

    def _run_job(self, job: Job):
        def on_step(t, total, mean_alpha, record):
            with job.lock:
                job.current_step = t
                job.total_steps = total
                job.mean_alpha = mean_alpha
                if record is not None:
                    job.steps[record.step] = record
                    job.latest = record

        with job.lock:
            if job.state == "pending":
                job.state = "running"
        try:
            record = run(job.obs, job.cfg, steering=job.controller,
                         on_step=on_step, pace_millis=job.pace_millis)
            job_dir = self.data_dir / job.id
            write_observation(job.obs, job_dir / "observation")
            write_run_dir(record, job_dir / "run")
            with job.lock:
                job.record = record
                job.current_step = record.total_steps
                job.total_steps = record.total_steps
                job.state = "done"
        except Exception as exc:  # noqa: BLE001 - job failure boundary
            with job.lock:
                job.error = str(exc)
                job.state = "failed"


class _TooManyJobs(Exception):
    pass


def _bad_request(message: str) -> JSONResponse:
    key = next((k for k in CONFIG_SCHEMA if k in message), None)
    body = {"error": message}
    if key is not None:
        body["key"] = key
    return JSONResponse(status_code=400, content=body)


def _operator_from_spec(spec: dict, size: int):
    kind = spec.get("kind", "identity-plus-noise")
    noise_sigma = float(spec.get("noise_sigma", 0.0))
    seed = int(spec.get("seed", 0))
    if kind == "identity-plus-noise":
        return identity_operator((size, size), noise_sigma, seed)
    if kind in ("pixel-mask", "frequency-mask"):
        mask_kind = spec.get("mask_kind", "random-uniform")
        if mask_kind not in MASK_KINDS:
            raise ParameterError(f"unknown mask_kind {mask_kind!r}")
        keep = float(spec.get("keep", 0.5))
        mask = make_sampling_mask(mask_kind, keep, size, seed=int(spec.get("mask_seed", 0)))
        maker = pixel_mask_operator if kind == "pixel-mask" else frequency_mask_operator
        return maker(mask, noise_sigma, seed)
    if kind == "blur":
        ksize = int(spec.get("kernel_size", 5))
        ksigma = float(spec.get("kernel_sigma", 1.0))
        kernel = box_kernel(ksize) if ksigma == 0 else gaussian_kernel(ksize, ksigma)
        return blur_operator((size, size), kernel, noise_sigma, seed)
    raise ParameterError(f"unknown operator kind {kind!r}")


def _decode_ct2_field(payload: dict, field: str) -> np.ndarray | None:
    raw = payload.get(field)
    if raw is None:
        return None
    try:
        blob = base64.b64decode(raw, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ValidationError(f"{field}: invalid base64 payload") from exc
    return ct2_from_bytes(blob, name=field)


def _observation_from_body(body: dict) -> Observation:
    case = body.get("case")
    upload = body.get("observation")
    if case is not None and upload is not None:
        raise ParameterError("provide either 'case' or 'observation', not both")
    if case is not None:
        phantom = case.get("phantom", "shepp-logan")
        if phantom not in PHANTOM_NAMES:
            raise ParameterError(f"unknown phantom {phantom!r}")
        size = int(case.get("size", 64))
        image = make_phantom(phantom, size)
        op = _operator_from_spec(case.get("operator", {}), size)
        return degrade(op, image)
    if upload is not None:
        measured_re = _decode_ct2_field(upload, "measured_ct2")
        if measured_re is None:
            measured_re = _decode_ct2_field(upload, "measured_re_ct2")
            if measured_re is None:
                raise ParameterError("observation requires measured_ct2 or measured_re_ct2")
            measured_im = _decode_ct2_field(upload, "measured_im_ct2")
            if measured_im is None:
                raise ParameterError("measured_re_ct2 requires measured_im_ct2")
            measured = measured_re + 1j * measured_im
        else:
            measured = measured_re
        op = _operator_from_spec(upload.get("operator", {}), measured.shape[0])
        gt = _decode_ct2_field(upload, "ground_truth_ct2")
        return Observation(measured=measured, operator=op, ground_truth=gt)
    raise ParameterError("request body requires a 'case' or 'observation' entry")


def _png_response(arr: np.ndarray) -> Response:
    vmin = float(arr.min())
    vmax = float(arr.max())
    if vmax > vmin:
        scaled = (arr - vmin) / (vmax - vmin)
    else:
        scaled = np.zeros_like(arr)
    pixels = np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="L").save(buf, format="PNG")
    return Response(content=buf.getvalue(), media_type="image/png",
                    headers={"X-Scale-Min": repr(vmin), "X-Scale-Max": repr(vmax)})


def create_app(data_dir: str | Path, jobs_max: int = 8, ui_dir: str | Path | None = None,
               pace_millis: int = 0) -> FastAPI:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    manager = JobManager(data_dir, jobs_max, pace_millis)
    app = FastAPI(title="resteer steering service")
    app.state.manager = manager

    @app.post("/api/jobs", status_code=201)
    def submit_job(body: dict = Body(...)):
        try:
            cfg = run_config_from_keys(dict(body.get("config") or {}))
            obs = _observation_from_body(body)
            pace = body.get("pace_millis")
            job = manager.submit(obs, cfg, None if pace is None else int(pace))
        except _TooManyJobs:
            return JSONResponse(status_code=429, content={"error": "job capacity reached"})
        except ResteerError as exc:
            return _bad_request(str(exc))
        # the job is created pending; the worker thread may already be running
        return {"id": job.id, "state": "pending"}

    def _get_job(job_id: str) -> Job | None:
        return manager.jobs.get(job_id)

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = _get_job(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job id"})
        with job.lock:
            latest = job.latest
            trace = job.controller.applied_snapshot()
            body = {
                "id": job.id,
                "state": job.state,
                "current_step": job.current_step,
                "total_steps": job.total_steps,
                "mean_alpha": job.mean_alpha,
                "lambda": job.lam(),
                "steering_trace": [
                    {"step": c.effective_from_step, "lambda": c.new_lambda} for c in trace
                ],
                "error": job.error,
                "latest_metrics": None,
            }
            if latest is not None:
                body["latest_metrics"] = {
                    "step": latest.step,
                    "psnr": latest.psnr,
                    "ssim": latest.ssim,
                    "rmse": latest.rmse,
                    "residual": latest.residual,
                    "mean_alpha": latest.mean_alpha,
                }
        return body

    @app.get("/api/jobs/{job_id}/frame")
    def job_frame(job_id: str, step: int, layer: str, format: str = "png"):
        job = _get_job(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job id"})
        if layer not in LAYERS:
            return JSONResponse(status_code=400, content={"error": f"unknown layer {layer!r}"})
        if format not in ("png", "ct2"):
            return JSONResponse(status_code=400, content={"error": f"unknown format {format!r}"})
        with job.lock:
            if layer == "input":
                arr = job.input_bp
            else:
                rec = job.steps.get(step)
                if rec is None:
                    return JSONResponse(status_code=404,
                                        content={"error": f"step {step} not recorded"})
                arr = {
                    "restored": rec.z_star,
                    "alpha": rec.risk.alpha,
                    "reliability": rec.risk.reliability,
                    "uncertainty": rec.risk.uncertainty,
                }[layer]
        if format == "ct2":
            return Response(content=ct2_bytes(arr), media_type="application/octet-stream")
        return _png_response(arr)

    @app.post("/api/jobs/{job_id}/control")
    def job_control(job_id: str, body: dict = Body(...)):
        job = _get_job(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job id"})
        with job.lock:
            if job.state in ("done", "failed"):
                return JSONResponse(status_code=409,
                                    content={"error": f"job is {job.state}"})
            ack: dict = {"ok": True}
            new_lambda = body.get("new_lambda")
            if new_lambda is not None:
                try:
                    lam = float(new_lambda)
                except (TypeError, ValueError):
                    return JSONResponse(status_code=400,
                                        content={"error": "new_lambda must be a number"})
                if not (0.0 <= lam <= 1.0):
                    return JSONResponse(
                        status_code=400,
                        content={"error": f"new_lambda must be in [0, 1], got {lam}",
                                 "key": "controller.lambda"})
                effective = job.current_step + 1
                job.controller.steer(lam, effective)
                ack["effective_from_step"] = effective
            action = body.get("action")
            if action is not None:
                if action == "pause":
                    job.controller.pause()
                    if job.state == "running":
                        job.state = "paused"
                elif action == "resume":
                    job.controller.resume()
                    if job.state == "paused":
                        job.state = "running"
                elif action == "finalize":
                    job.controller.finalize()
                    if job.state == "paused":
                        job.state = "running"
                else:
                    return JSONResponse(status_code=400,
                                        content={"error": f"unknown action {action!r}"})
                ack["action"] = action
        return ack

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
