/**
 * Frame cache and panel composition.
 *
 * Frames are fetched once per (step, layer) and cached; toggling an overlay
 * never refetches the base image.  Completed steps are immutable on the
 *server, so the cache has no invalidation.
 */

import { Client, FramePayload, Layer } from "./api.js";

export class FrameCache {
  private readonly entries = new Map<string, Promise<FramePayload>>();
  fetchCount = 0;

  constructor(private readonly client: Client, private readonly jobId: string) {}

  get(step: number, layer: Layer): Promise<FramePayload> {
    const key = `${layer}:${layer === "input" ? 0 : step}`;
    let entry = this.entries.get(key);
    if (!entry) {
      this.fetchCount += 1;
      entry = this.client.fetchFrame(this.jobId, step, layer).catch((error) => {
        this.entries.delete(key); // do not cache failures (step may not be recorded yet)
        throw error;
      });
      this.entries.set(key, entry);
    }
    return entry;
  }
}

export interface LayerToggles {
  alpha: boolean;
  reliability: boolean;
  uncertainty: boolean;
}

export const OVERLAY_LAYERS: ReadonlyArray<keyof LayerToggles> = [
  "alpha",
  "reliability",
  "uncertainty",
];

/** The layers a composite view of one step needs, base panels first. */
export function layersToFetch(toggles: LayerToggles): Layer[] {
  const layers: Layer[] = ["input", "restored"];
  for (const name of OVERLAY_LAYERS) {
    if (toggles[name]) layers.push(name);
  }
  return layers;
}

export interface LegendModel {
  layer: Layer;
  min: number;
  max: number;
}

export function legendModels(
  toggles: LayerToggles,
  frames: Partial<Record<Layer, FramePayload>>,
): LegendModel[] {
  const out: LegendModel[] = [];
  for (const name of OVERLAY_LAYERS) {
    const frame = frames[name];
    if (toggles[name] && frame) {
      out.push({ layer: name, min: frame.min, max: frame.max });
    }
  }
  return out;
}
