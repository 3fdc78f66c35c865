/** Camera-path preview model: a polyline built 1:1 from the service
 * trajectory samples (no client-side re-simulation), a time scrubber, and a
 * minimal orthographic/perspective projection for rendering. */

import { Pose } from "./api.js";

export type Vec3 = [number, number, number];
export type ProjectionMode = "orthographic" | "perspective";

export interface ProjectionOptions {
  mode: ProjectionMode;
  /** Camera distance along +z for the perspective projection. */
  eyeDistance?: number;
}

export class PathView {
  constructor(readonly poses: Pose[]) {
    if (poses.length === 0) throw new Error("empty trajectory");
  }

  /** One vertex per service sample, in order. */
  get vertices(): Vec3[] {
    return this.poses.map((p) => [...p.cam] as Vec3);
  }

  get actorVertices(): Vec3[] {
    return this.poses.map((p) => [...p.actor] as Vec3);
  }

  get duration(): number {
    return this.poses[this.poses.length - 1].t;
  }

  /** Index of the sample nearest to t (scrubber position). */
  nearestIndex(t: number): number {
    let best = 0;
    let bestDist = Math.abs(this.poses[0].t - t);
    for (let i = 1; i < this.poses.length; i++) {
      const d = Math.abs(this.poses[i].t - t);
      if (d < bestDist) {
        best = i;
        bestDist = d;
      }
    }
    return best;
  }

  poseAt(t: number): Pose {
    return this.poses[this.nearestIndex(t)];
  }

  /** Project the camera polyline to 2D screen coordinates. */
  project(options: ProjectionOptions): [number, number][] {
    const eye = options.eyeDistance ?? 100;
    return this.vertices.map(([x, y, z]) => {
      if (options.mode === "orthographic") return [x, y];
      const scale = eye / (eye - z);
      return [x * scale, y * scale];
    });
  }
}
