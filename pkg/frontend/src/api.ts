/**
 * Typed client for the restoration service API.
 *
 * The fetch implementation is injectable so the polling and steering logic
 * can be tested against stubs or a local integration server.
 */

export type JobState = "pending" | "running" | "paused" | "done" | "failed";
export type Layer = "restored" | "alpha" | "reliability" | "uncertainty" | "input";

export interface OperatorSpec {
  kind: string;
  noise_sigma?: number;
  seed?: number;
  mask_kind?: string;
  keep?: number;
  mask_seed?: number;
  kernel_size?: number;
  kernel_sigma?: number;
}

export interface CaseSpec {
  phantom: string;
  size: number;
  operator: OperatorSpec;
}

export interface SubmitBody {
  config: Record<string, string | number>;
  case: CaseSpec;
  pace_millis?: number;
}

export interface SteeringEntry {
  step: number;
  lambda: number;
}

export interface LatestMetrics {
  step: number;
  psnr: number | null;
  ssim: number | null;
  rmse: number | null;
  residual: number;
  mean_alpha: number;
}

export interface JobStatus {
  id: string;
  state: JobState;
  current_step: number;
  total_steps: number;
  mean_alpha: number | null;
  lambda: number;
  steering_trace: SteeringEntry[];
  latest_metrics: LatestMetrics | null;
  error: string | null;
}

export interface ControlBody {
  new_lambda?: number;
  action?: "pause" | "resume" | "finalize";
}

export interface ControlAck {
  ok: boolean;
  effective_from_step?: number;
  action?: string;
}

/** Raw frame payload: PNG bytes plus the linear scale bounds from headers. */
export interface FramePayload {
  blob: Blob;
  min: number;
  max: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: { error?: string; key?: string },
  ) {
    super(body.error ?? `request failed with status ${status}`);
  }
}

async function errorBody(response: Response): Promise<{ error?: string; key?: string }> {
  try {
    return (await response.json()) as { error?: string; key?: string };
  } catch {
    return { error: response.statusText };
  }
}

export class Client {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  frameUrl(jobId: string, step: number, layer: Layer, format?: "ct2"): string {
    const suffix = format ? `&format=${format}` : "";
    return `${this.base}/api/jobs/${jobId}/frame?step=${step}&layer=${layer}${suffix}`;
  }

  async submit(body: SubmitBody): Promise<{ id: string; state: JobState }> {
    const response = await this.fetchFn(`${this.base}/api/jobs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await errorBody(response));
    return (await response.json()) as { id: string; state: JobState };
  }

  async status(jobId: string): Promise<JobStatus> {
    const response = await this.fetchFn(`${this.base}/api/jobs/${jobId}`);
    if (!response.ok) throw new ApiError(response.status, await errorBody(response));
    return (await response.json()) as JobStatus;
  }

  async control(jobId: string, body: ControlBody): Promise<ControlAck> {
    const response = await this.fetchFn(`${this.base}/api/jobs/${jobId}/control`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await errorBody(response));
    return (await response.json()) as ControlAck;
  }

  async fetchFrame(jobId: string, step: number, layer: Layer): Promise<FramePayload> {
    const response = await this.fetchFn(this.frameUrl(jobId, step, layer));
    if (!response.ok) throw new ApiError(response.status, await errorBody(response));
    return {
      blob: await response.blob(),
      min: Number(response.headers.get("X-Scale-Min") ?? "0"),
      max: Number(response.headers.get("X-Scale-Max") ?? "1"),
    };
  }
}
