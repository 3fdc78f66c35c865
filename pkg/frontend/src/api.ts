/** Typed client for the director service. All UI traffic goes through a
 * Transport so tests can inject failures and delays. */

export interface ShotParams {
  rho: number;
  rho_dot: number;
  theta: number;
  theta_dot: number;
  phi: number;
  v_z: number;
}

export interface Preset {
  name: string;
  type: string;
  params: ShotParams;
  variable_params: string[];
}

export interface PresetsResponse {
  version: string;
  presets: Preset[];
}

export interface CompleteRequest {
  values: Record<string, number>;
  locked: string[];
}

export interface CompleteResponse {
  descriptors: Record<string, number>;
  sigma: Record<string, number>;
  locked: string[];
}

export interface GenerateResponse {
  shot: ShotParams;
  shot_type: string;
  flags: { clamped: boolean; tie_broken: boolean };
}

export interface Pose {
  t: number;
  cam: [number, number, number];
  pan: number;
  tilt: number;
  actor: [number, number, number];
}

export interface TrajectoryResponse {
  poses: Pose[];
  duration: number;
  degenerate: boolean;
}

export interface ServiceErrorBody {
  error: string;
  code: number;
}

export class ServiceError extends Error {
  constructor(public readonly code: number, message: string) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface Transport {
  get(path: string): Promise<unknown>;
  post(path: string, body: unknown): Promise<unknown>;
}

/** fetch-backed transport; service errors become ServiceError with the
 * body's code and message surfaced verbatim. */
export class FetchTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  private async handle(response: Response): Promise<unknown> {
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const err = body as ServiceErrorBody | null;
      throw new ServiceError(err?.code ?? response.status,
        err?.error ?? response.statusText);
    }
    return body;
  }

  async get(path: string): Promise<unknown> {
    return this.handle(await fetch(this.baseUrl + path));
  }

  async post(path: string, body: unknown): Promise<unknown> {
    return this.handle(await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }
}

export class DirectorClient {
  constructor(private readonly transport: Transport) {}

  presets(): Promise<PresetsResponse> {
    return this.transport.get("/presets") as Promise<PresetsResponse>;
  }

  complete(request: CompleteRequest): Promise<CompleteResponse> {
    return this.transport.post("/descriptors/complete", request) as
      Promise<CompleteResponse>;
  }

  generate(descriptors: Record<string, number>): Promise<GenerateResponse> {
    return this.transport.post("/shots/generate", { descriptors }) as
      Promise<GenerateResponse>;
  }

  simulate(shot: ShotParams, duration: number, dt: number):
      Promise<TrajectoryResponse> {
    return this.transport.post("/trajectory/simulate",
      { shot, duration, dt }) as Promise<TrajectoryResponse>;
  }

  predict(shot: ShotParams, shotType: string):
      Promise<{ descriptors: Record<string, number> }> {
    return this.transport.post("/descriptors/predict",
      { shot, shot_type: shotType }) as
      Promise<{ descriptors: Record<string, number> }>;
  }
}
