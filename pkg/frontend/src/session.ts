/**
 * One live job session: status polling, metric series accumulation, and
 * throttled lambda steering.
 *
 * The session never recomputes restoration math; every number it exposes
 * came from a service response.  Polling runs on a setTimeout chain (250 ms
 * by default, backing off while the job is paused) and stops on completion,
 * failure, or the first connection error.
 */

import { ApiError, Client, JobStatus, SteeringEntry } from "./api.js";

export interface SeriesPoint {
  step: number;
  psnr: number | null;
  residual: number;
  meanAlpha: number;
}

export interface SessionCallbacks {
  onStatus?: (status: JobStatus) => void;
  onFinished?: (status: JobStatus) => void;
  onError?: (error: unknown) => void;
}

export interface SessionOptions {
  pollMs?: number;
  pausedPollMs?: number;
  steerThrottleMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
}

const DEFAULTS = { pollMs: 250, pausedPollMs: 1000, steerThrottleMs: 150 };

export class Session {
  readonly series: SeriesPoint[] = [];

  private status: JobStatus | null = null;
  private pollHandle: unknown = null;
  private throttleHandle: unknown = null;
  private pendingLambda: number | null = null;
  private stopped = false;
  private readonly pollMs: number;
  private readonly pausedPollMs: number;
  private readonly steerThrottleMs: number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;
  private readonly clearTimeoutFn: (handle: unknown) => void;

  constructor(
    private readonly client: Client,
    readonly jobId: string,
    private readonly callbacks: SessionCallbacks = {},
    options: SessionOptions = {},
  ) {
    this.pollMs = options.pollMs ?? DEFAULTS.pollMs;
    this.pausedPollMs = options.pausedPollMs ?? DEFAULTS.pausedPollMs;
    this.steerThrottleMs = options.steerThrottleMs ?? DEFAULTS.steerThrottleMs;
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimeoutFn = options.clearTimeoutFn ?? ((h) => clearTimeout(h as number));
  }

  start(): void {
    if (this.pollHandle !== null || this.stopped) return;
    void this.pollOnce();
  }

  stop(): void {
    this.stopped = true;
    if (this.pollHandle !== null) {
      this.clearTimeoutFn(this.pollHandle);
      this.pollHandle = null;
    }
    if (this.throttleHandle !== null) {
      this.clearTimeoutFn(this.throttleHandle);
      this.throttleHandle = null;
    }
  }

  get latest(): JobStatus | null {
    return this.status;
  }

  get finished(): boolean {
    const state = this.status?.state;
    return this.stopped || state === "done" || state === "failed";
  }

  /** Steering markers mirror the server's applied trace one to one. */
  markers(): SteeringEntry[] {
    return this.status?.steering_trace ?? [];
  }

  /** Clamp a scrubber request to the recorded range. */
  scrubTo(step: number): number {
    const limit = this.status?.current_step ?? 0;
    return Math.min(Math.max(Math.floor(step), 0), limit);
  }

  /**
   * Request a new lambda.  Rapid calls coalesce: at most one control request
   * per throttle window, carrying the latest value.  Returns false once the
   * run has finished (the control belongs disabled then).
   */
  requestSteer(lambda: number): boolean {
    if (this.finished) return false;
    this.pendingLambda = lambda;
    if (this.throttleHandle === null) {
      void this.flushSteer();
      this.throttleHandle = this.setTimeoutFn(() => {
        this.throttleHandle = null;
        if (this.pendingLambda !== null) void this.flushSteer();
      }, this.steerThrottleMs);
    }
    return true;
  }

  async pause(): Promise<void> {
    await this.client.control(this.jobId, { action: "pause" });
  }

  async resume(): Promise<void> {
    await this.client.control(this.jobId, { action: "resume" });
  }

  async finalize(): Promise<void> {
    await this.client.control(this.jobId, { action: "finalize" });
  }

  private async flushSteer(): Promise<void> {
    const lambda = this.pendingLambda;
    this.pendingLambda = null;
    if (lambda === null || this.finished) return;
    try {
      await this.client.control(this.jobId, { new_lambda: lambda });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        return; // run finished while the drag was in flight
      }
      this.callbacks.onError?.(error);
    }
  }

  private async pollOnce(): Promise<void> {
    if (this.stopped) return;
    let status: JobStatus;
    try {
      status = await this.client.status(this.jobId);
    } catch (error) {
      this.stop();
      this.callbacks.onError?.(error);
      return;
    }
    this.status = status;
    this.recordPoint(status);
    this.callbacks.onStatus?.(status);
    if (status.state === "done" || status.state === "failed") {
      this.stop();
      this.callbacks.onFinished?.(status);
      return;
    }
    const delay = status.state === "paused" ? this.pausedPollMs : this.pollMs;
    this.pollHandle = this.setTimeoutFn(() => {
      this.pollHandle = null;
      void this.pollOnce();
    }, delay);
  }

  private recordPoint(status: JobStatus): void {
    const metrics = status.latest_metrics;
    if (!metrics) return;
    const last = this.series[this.series.length - 1];
    if (last && last.step === metrics.step) return;
    this.series.push({
      step: metrics.step,
      psnr: metrics.psnr,
      residual: metrics.residual,
      meanAlpha: metrics.mean_alpha,
    });
  }
}
