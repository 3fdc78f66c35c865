/** Slider panel state: one slider per descriptor with a lock flag, debounced
 * conditional completion, and stale-response discarding (latest sequence
 * number wins). */

import { DirectorClient } from "./api.js";

export interface SliderEntry {
  name: string;
  value: number;
  locked: boolean;
  mu: number;
  sigma: number;
}

export interface SliderPanelOptions {
  /** Milliseconds to wait after the last edit before calling the service. */
  debounceMs?: number;
}

export class SliderPanel {
  private entries = new Map<string, SliderEntry>();
  private order: string[] = [];
  private sequence = 0;
  private applied = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: Promise<void> = Promise.resolve();
  private readonly debounceMs: number;

  /** Set when the last completion attempt failed; sliders stay frozen. */
  error: string | null = null;

  constructor(private readonly client: DirectorClient,
              options: SliderPanelOptions = {}) {
    this.debounceMs = options.debounceMs ?? 150;
  }

  /** Learn the descriptor names, prior means, and sigmas from an
   * unconstrained completion; sliders start at the prior mean, unlocked. */
  async init(): Promise<void> {
    const response = await this.client.complete({ values: {}, locked: [] });
    this.order = Object.keys(response.descriptors).sort();
    this.entries.clear();
    for (const name of this.order) {
      this.entries.set(name, {
        name,
        value: response.descriptors[name],
        locked: false,
        mu: response.descriptors[name],
        sigma: response.sigma[name],
      });
    }
  }

  get sliders(): SliderEntry[] {
    return this.order.map((name) => ({ ...this.entries.get(name)! }));
  }

  entry(name: string): SliderEntry {
    const entry = this.entries.get(name);
    if (!entry) throw new Error(`unknown descriptor ${name}`);
    return { ...entry };
  }

  /** Slider range spans mu +/- 2 sigma. */
  range(name: string): [number, number] {
    const e = this.entry(name);
    return [e.mu - 2 * e.sigma, e.mu + 2 * e.sigma];
  }

  values(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const name of this.order) out[name] = this.entries.get(name)!.value;
    return out;
  }

  lockedNames(): string[] {
    return this.order.filter((name) => this.entries.get(name)!.locked);
  }

  lock(name: string): void {
    this.mustGet(name).locked = true;
  }

  unlock(name: string): void {
    this.mustGet(name).locked = false;
    this.scheduleCompletion();
  }

  /** Move a slider: the value clamps into the mu +/- 2 sigma range, the
   * slider becomes locked (it now expresses a user-specified score), and a
   * debounced completion request updates the unlocked sliders. */
  setValue(name: string, value: number): void {
    const entry = this.mustGet(name);
    const [lo, hi] = this.range(name);
    entry.value = Math.min(Math.max(value, lo), hi);
    entry.locked = true;
    this.scheduleCompletion();
  }

  /** Display externally supplied values (e.g. a preset's predicted scores)
   * without locking anything or calling the service. */
  show(values: Record<string, number>): void {
    for (const [name, value] of Object.entries(values)) {
      const entry = this.mustGet(name);
      entry.locked = false;
      entry.value = value;
    }
  }

  /** Unlock everything and return to the prior mean. */
  async reset(): Promise<void> {
    for (const name of this.order) this.entries.get(name)!.locked = false;
    await this.completeNow();
  }

  /** Resolves once all scheduled requests have settled. */
  async settled(): Promise<void> {
    while (this.timer !== null) {
      await new Promise((resolve) => setTimeout(resolve, this.debounceMs + 5));
    }
    await this.pending;
  }

  /** Issue a completion immediately (bypasses the debounce). */
  completeNow(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const request = this.issue();
    this.pending = this.pending.then(() => request);
    return request;
  }

  private mustGet(name: string): SliderEntry {
    const entry = this.entries.get(name);
    if (!entry) throw new Error(`unknown descriptor ${name}`);
    return entry;
  }

  private scheduleCompletion(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      const request = this.issue();
      this.pending = this.pending.then(() => request);
    }, this.debounceMs);
  }

  private async issue(): Promise<void> {
    const seq = ++this.sequence;
    const locked = this.lockedNames();
    const values: Record<string, number> = {};
    for (const name of locked) values[name] = this.entries.get(name)!.value;
    try {
      const response = await this.client.complete({ values, locked });
      this.apply(seq, response.descriptors);
    } catch (err) {
      if (seq > this.applied) {
        this.error = err instanceof Error ? err.message : String(err);
      }
    }
  }

  private apply(seq: number, descriptors: Record<string, number>): void {
    if (seq <= this.applied) return; // stale response: a newer one landed
    this.applied = seq;
    this.error = null;
    for (const name of this.order) {
      const entry = this.entries.get(name)!;
      if (!entry.locked) entry.value = descriptors[name];
    }
  }
}
