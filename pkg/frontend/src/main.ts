/**
 * Steering console: submit a case, watch the run evolve, drag lambda live.
 */

import { ApiError, CaseSpec, Client, JobStatus, Layer } from "./api.js";
import { colorize, formatBound, lutCss } from "./colormap.js";
import { FrameCache, LayerToggles, legendModels } from "./layers.js";
import { Session } from "./session.js";
import { drawTimeline } from "./timeline.js";

const PRESET_LAMBDA: Record<string, number> = {
  conservative: 0.0,
  balanced: 0.5,
  enhancement: 1.0,
};

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const client = new Client("");
let session: Session | null = null;
let cache: FrameCache | null = null;
let viewStep = 0;
let followLive = true;
let lastStatus: JobStatus | null = null;

const toggles: LayerToggles = { alpha: true, reliability: false, uncertainty: false };

function setFormError(message: string): void {
  $("form-error").textContent = message;
}

function setConnError(message: string): void {
  $("conn-error").textContent = message;
}

function caseFromForm(): CaseSpec {
  const kind = ($("op-kind") as HTMLSelectElement).value;
  return {
    phantom: ($("phantom") as HTMLSelectElement).value,
    size: Number(($("size") as HTMLInputElement).value),
    operator: {
      kind,
      noise_sigma: Number(($("noise-sigma") as HTMLInputElement).value),
      seed: Number(($("op-seed") as HTMLInputElement).value),
      mask_kind: kind === "frequency-mask" ? "center-weighted-lines" : "random-uniform",
      keep: Number(($("keep") as HTMLInputElement).value),
      mask_seed: Number(($("op-seed") as HTMLInputElement).value) + 100,
    },
  };
}

async function submit(): Promise<void> {
  setFormError("");
  setConnError("");
  const preset = ($("preset") as HTMLSelectElement).value;
  const lambda = PRESET_LAMBDA[preset] ?? 0.5;
  const body = {
    config: {
      steps: Number(($("steps") as HTMLInputElement).value),
      seed: Number(($("run-seed") as HTMLInputElement).value),
      mode_preset: preset,
    },
    case: caseFromForm(),
    pace_millis: Number(($("pace") as HTMLInputElement).value),
  };
  let jobId: string;
  try {
    const created = await client.submit(body);
    jobId = created.id;
  } catch (error) {
    if (error instanceof ApiError) {
      setFormError(error.body.key ? `${error.body.key}: ${error.message}` : error.message);
    } else {
      setConnError(`service unreachable: ${String(error)}`);
    }
    return;
  }

  session?.stop();
  session = new Session(client, jobId, {
    onStatus: onStatus,
    onFinished: onStatus,
    onError: (error) => setConnError(`connection lost: ${String(error)}`),
  });
  cache = new FrameCache(client, jobId);
  viewStep = 0;
  followLive = true;
  const slider = $("lambda") as HTMLInputElement;
  slider.value = String(lambda);
  slider.disabled = false;
  $("lambda-value").textContent = lambda.toFixed(2);
  $("job-id").textContent = jobId;
  session.start();
}

function onStatus(status: JobStatus): void {
  lastStatus = status;
  $("job-state").textContent = status.state;
  $("job-step").textContent = `${status.current_step} / ${status.total_steps}`;
  $("mean-alpha").textContent = status.mean_alpha === null ? "-" : status.mean_alpha.toFixed(4);
  const metrics = status.latest_metrics;
  $("metric-psnr").textContent = metrics?.psnr == null ? "-" : metrics.psnr.toFixed(2);
  $("metric-residual").textContent = metrics ? metrics.residual.toFixed(4) : "-";

  const scrubber = $("scrubber") as HTMLInputElement;
  scrubber.max = String(status.current_step);
  if (followLive) {
    viewStep = status.current_step;
    scrubber.value = String(viewStep);
  }
  if (status.state === "done" || status.state === "failed") {
    ($("lambda") as HTMLInputElement).disabled = true;
    $("job-state").textContent = status.state === "done" ? "done" : `failed: ${status.error}`;
  }
  renderTimeline();
  void renderPanels();
}

function renderTimeline(): void {
  if (!session || !lastStatus) return;
  const canvas = $("timeline") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  drawTimeline(
    ctx,
    session.series,
    session.markers(),
    lastStatus.total_steps,
    canvas.width,
    canvas.height,
  );
}

async function paintGray(canvas: HTMLCanvasElement, blob: Blob): Promise<void> {
  const bitmap = await createImageBitmap(blob);
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(bitmap, 0, 0);
}

async function paintOverlay(canvas: HTMLCanvasElement, blob: Blob, opacity: number): Promise<void> {
  const bitmap = await createImageBitmap(blob);
  const work = document.createElement("canvas");
  work.width = bitmap.width;
  work.height = bitmap.height;
  const wctx = work.getContext("2d");
  const ctx = canvas.getContext("2d");
  if (!wctx || !ctx) return;
  wctx.drawImage(bitmap, 0, 0);
  const gray = wctx.getImageData(0, 0, work.width, work.height);
  const colored = new ImageData(colorize(gray.data, opacity), work.width, work.height);
  wctx.putImageData(colored, 0, 0);
  ctx.drawImage(work, 0, 0);
}

async function renderPanels(): Promise<void> {
  if (!session || !cache || !lastStatus) return;
  const step = viewStep;
  const input = $("panel-input") as HTMLCanvasElement;
  const restored = $("panel-restored") as HTMLCanvasElement;
  try {
    await paintGray(input, (await cache.get(0, "input")).blob);
  } catch {
    /* input frame is always available once the job exists; ignore races */
  }
  if (step < 1) {
    const ctx = restored.getContext("2d");
    ctx?.clearRect(0, 0, restored.width, restored.height);
    renderLegends({});
    return;
  }
  const frames: Partial<Record<Layer, Awaited<ReturnType<FrameCache["get"]>>>> = {};
  try {
    frames.restored = await cache.get(step, "restored");
    await paintGray(restored, frames.restored.blob);
    for (const name of ["alpha", "reliability", "uncertainty"] as const) {
      if (toggles[name]) {
        frames[name] = await cache.get(step, name);
        await paintOverlay(restored, frames[name]!.blob, 0.45);
      }
    }
    renderLegends(frames);
  } catch {
    // step not recorded yet: leave the previous frame in place, no crash
  }
}

function renderLegends(frames: Partial<Record<Layer, { min: number; max: number } & object>>): void {
  const host = $("legends");
  host.textContent = "";
  for (const legend of legendModels(toggles, frames as never)) {
    const row = document.createElement("div");
    row.className = "legend-row";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.background = `linear-gradient(to right, ${lutCss(0)}, ${lutCss(128)}, ${lutCss(255)})`;
    const label = document.createElement("span");
    label.textContent = `${legend.layer}: ${formatBound(legend.min)} .. ${formatBound(legend.max)}`;
    row.append(swatch, label);
    host.append(row);
  }
}

function wireControls(): void {
  $("submit").addEventListener("click", () => void submit());

  const slider = $("lambda") as HTMLInputElement;
  slider.addEventListener("input", () => {
    const lambda = Number(slider.value);
    $("lambda-value").textContent = lambda.toFixed(2);
    if (session && !session.requestSteer(lambda)) {
      slider.disabled = true; // run finished
    }
  });

  const scrubber = $("scrubber") as HTMLInputElement;
  scrubber.addEventListener("input", () => {
    if (!session) return;
    viewStep = session.scrubTo(Number(scrubber.value));
    followLive = lastStatus !== null && viewStep >= lastStatus.current_step;
    scrubber.value = String(viewStep);
    void renderPanels();
  });

  for (const name of ["alpha", "reliability", "uncertainty"] as const) {
    const box = $(`toggle-${name}`) as HTMLInputElement;
    box.checked = toggles[name];
    box.addEventListener("change", () => {
      toggles[name] = box.checked;
      void renderPanels(); // cached frames: no refetch of the base image
    });
  }

  ($("preset") as HTMLSelectElement).addEventListener("change", () => {
    const preset = ($("preset") as HTMLSelectElement).value;
    const lambda = PRESET_LAMBDA[preset];
    if (lambda !== undefined) {
      ($("lambda") as HTMLInputElement).value = String(lambda);
      $("lambda-value").textContent = lambda.toFixed(2);
    }
  });

  $("pause").addEventListener("click", () => void session?.pause());
  $("resume").addEventListener("click", () => void session?.resume());
  $("finalize").addEventListener("click", () => void session?.finalize());
}

wireControls();
