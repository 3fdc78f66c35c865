export * from "./api.js";
export * from "./sliders.js";
export * from "./path.js";
export * from "./presets.js";
