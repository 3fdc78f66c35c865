/** Preset browser: list the service presets, load one onto the sliders via
 * the parameters -> descriptors prediction. */

import { DirectorClient, Preset } from "./api.js";
import { SliderPanel } from "./sliders.js";

export class PresetBrowser {
  private loaded: Preset[] = [];

  constructor(private readonly client: DirectorClient) {}

  async refresh(): Promise<Preset[]> {
    const response = await this.client.presets();
    this.loaded = response.presets;
    return this.presets;
  }

  get presets(): Preset[] {
    return this.loaded.map((p) => ({ ...p, params: { ...p.params } }));
  }

  find(name: string): Preset {
    const preset = this.loaded.find((p) => p.name === name);
    if (!preset) throw new Error(`unknown preset ${name}`);
    return preset;
  }

  /** Predict the preset's descriptor scores and show them on the sliders
   * (all unlocked: the preset is a starting point, not a constraint). */
  async load(name: string, panel: SliderPanel):
      Promise<Record<string, number>> {
    const preset = this.find(name);
    const { descriptors } = await this.client.predict(preset.params,
      preset.type);
    panel.show(descriptors);
    return descriptors;
  }
}
