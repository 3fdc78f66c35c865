/** Vitest global setup: build the planted test model, start the director
 * service, and expose its base URL to the test files. */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));
export const URL_FILE = join(here, ".service-url");

const PORT = 8931;
let child: ChildProcess | null = null;
let modelDir: string | null = null;

async function waitForService(baseUrl: string, timeoutMs = 30_000):
    Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/presets`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service did not come up at ${baseUrl}`);
}

export async function setup(): Promise<void> {
  modelDir = mkdtempSync(join(tmpdir(), "director-ui-model-"));
  const build = spawnSync(
    "python3", [join(here, "build_model.py"), modelDir],
    { stdio: "inherit" });
  if (build.status !== 0) throw new Error("failed to build test model");

  child = spawn(
    "python3", ["-m", "semcam.service",
      "--model-dir", modelDir, "--port", String(PORT)],
    { stdio: "ignore" });
  const baseUrl = `http://127.0.0.1:${PORT}`;
  await waitForService(baseUrl);
  writeFileSync(URL_FILE, baseUrl);
}

export async function teardown(): Promise<void> {
  if (child) child.kill("SIGTERM");
  if (modelDir) rmSync(modelDir, { recursive: true, force: true });
  rmSync(URL_FILE, { force: true });
}
