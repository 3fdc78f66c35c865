import { readFileSync } from "node:fs";
import { DirectorClient, FetchTransport } from "../src/index.js";
import { URL_FILE } from "./setup/service.ts";

export function serviceUrl(): string {
  return readFileSync(URL_FILE, "utf-8").trim();
}

export function liveClient(): DirectorClient {
  return new DirectorClient(new FetchTransport(serviceUrl()));
}

/** Deterministic linear-congruential generator for scripted interactions. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}
