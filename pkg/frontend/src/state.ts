import type { GenerateResponse, UiModelDescriptor } from "./types.js";

export interface SliderSpec {
  label: string;
  unit: string;
  mean: number;
  std: number;
  min: number;
  max: number;
  variability: number;
}

export const SLIDER_SIGMA_RANGE = 3;

/**
 * Per-model interaction state.
 *
 * Sliders are ordered by the model's variability report (largest first) and
 * range over mean +- 3 sigma, both derived solely from the served
 * descriptor.  A label only becomes part of the request once the user
 * touches its slider; untouched parameters follow the model on the server
 * side, which is what makes correlated drift visible for the best-fit kind.
 */
export class SessionState {
  readonly sliders: SliderSpec[];
  private values = new Map<string, number>();
  private pinned = new Set<string>();
  lastResponse: GenerateResponse | null = null;

  constructor(readonly descriptor: UiModelDescriptor) {
    const order = descriptor.variability.order;
    this.sliders = order.map((label) => {
      const stats = descriptor.stats[label];
      return {
        label,
        unit: stats.unit,
        mean: stats.mean,
        std: stats.std,
        min: stats.mean - SLIDER_SIGMA_RANGE * stats.std,
        max: stats.mean + SLIDER_SIGMA_RANGE * stats.std,
        variability: descriptor.variability.fractions[label],
      };
    });
    for (const slider of this.sliders) this.values.set(slider.label, slider.mean);
  }

  value(label: string): number {
    const v = this.values.get(label);
    if (v === undefined) throw new Error(`unknown label ${label}`);
    return v;
  }

  isPinned(label: string): boolean {
    return this.pinned.has(label);
  }

  /** Clamp into the advertised range, mark the label as user-controlled. */
  setValue(label: string, value: number): number {
    const slider = this.sliders.find((s) => s.label === label);
    if (!slider) throw new Error(`unknown label ${label}`);
    const clamped = Math.min(slider.max, Math.max(slider.min, value));
    this.values.set(label, clamped);
    this.pinned.add(label);
    return clamped;
  }

  releaseAll(): void {
    this.pinned.clear();
    for (const slider of this.sliders) this.values.set(slider.label, slider.mean);
    this.lastResponse = null;
  }

  /** Parameters to send: only the labels the user has pinned. */
  requestParams(): Record<string, number> {
    const params: Record<string, number> = {};
    for (const label of this.pinned) params[label] = this.values.get(label)!;
    return params;
  }

  absorb(response: GenerateResponse): void {
    this.lastResponse = response;
  }

  /** Requested vs re-measured rows for the side panel. */
  readoutRows(): Array<{
    label: string;
    unit: string;
    requested: number;
    measured: number | null;
    difference: number | null;
  }> {
    return this.sliders.map((slider) => {
      const measured = this.lastResponse?.measurements[slider.label]?.value ?? null;
      const requested = this.value(slider.label);
      return {
        label: slider.label,
        unit: slider.unit,
        requested,
        measured,
        difference: measured === null ? null : requested - measured,
      };
    });
  }
}

/** Holds one isolated SessionState per served model. */
export class ExplorerState {
  readonly sessions = new Map<string, SessionState>();
  private activeId: string | null = null;

  constructor(readonly descriptors: UiModelDescriptor[]) {
    for (const d of descriptors) this.sessions.set(d.id, new SessionState(d));
    this.activeId = descriptors.length ? descriptors[0].id : null;
  }

  get active(): SessionState {
    if (this.activeId === null) throw new Error("no models loaded");
    return this.sessions.get(this.activeId)!;
  }

  get activeModelId(): string {
    if (this.activeId === null) throw new Error("no models loaded");
    return this.activeId;
  }

  select(id: string): SessionState {
    if (!this.sessions.has(id)) throw new Error(`unknown model ${id}`);
    this.activeId = id;
    return this.active;
  }

  /** The counterpart model sharing labels but of the other kind, if loaded. */
  toggleTarget(): string | null {
    const current = this.active.descriptor;
    for (const [id, session] of this.sessions) {
      if (id === this.activeId) continue;
      const d = session.descriptor;
      if (d.kind !== current.kind &&
          d.labels.length === current.labels.length &&
          d.labels.every((label) => current.labels.includes(label))) {
        return id;
      }
    }
    return null;
  }
}

/** Table-I style display precision: one decimal (0.1 deg / 0.1 mm). */
export function formatReadout(value: number | null): string {
  if (value === null) return "-";
  return value.toFixed(1);
}
