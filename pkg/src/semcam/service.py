"""HTTP service exposing the trained models and the shot simulator.

State is loaded once at startup and never mutated; every response is a pure
function of the loaded artifacts and the request body.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import models, space
from .shots import (ActorPath, ShotParameters, ShotPreset, ShotType,
                    preset_catalog, simulate_trajectory, trajectory_records)

D2P_FILENAME = "model_d2p.json"
P2D_FILENAME = "model_p2d.json"


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass(frozen=True)
class ServiceState:
    d2p_model: models.LinearModel
    p2d_model: models.LinearModel
    prior: models.GaussianPrior
    descriptors: tuple[str, ...]
    presets: tuple[ShotPreset, ...]
    version: str


def load_state(model_dir) -> ServiceState:
    model_dir = Path(model_dir)
    digest = hashlib.sha256()
    loaded = {}
    for filename in (D2P_FILENAME, P2D_FILENAME):
        path = model_dir / filename
        if not path.is_file():
            raise FileNotFoundError(f"missing model artifact {path}")
        digest.update(path.read_bytes())
        loaded[filename] = models.load_model(path)
    d2p_model, prior = loaded[D2P_FILENAME]
    p2d_model, p2d_prior = loaded[P2D_FILENAME]
    if prior is None:
        prior = p2d_prior
    if prior is None:
        raise ValueError("model artifacts carry no descriptor prior")
    if d2p_model.direction != "D2P" or p2d_model.direction != "P2D":
        raise ValueError("model artifacts have mismatched directions")
    descriptors = tuple(d2p_model.metadata.get(
        "descriptors", space.DESCRIPTORS_7))
    return ServiceState(d2p_model=d2p_model, p2d_model=p2d_model, prior=prior,
                        descriptors=descriptors,
                        presets=tuple(preset_catalog()),
                        version=digest.hexdigest()[:16])


def _require(condition: bool, status: int, message: str) -> None:
    if not condition:
        raise ServiceError(status, message)


def _parse_shot(doc) -> ShotParameters:
    _require(isinstance(doc, dict), 400, "shot must be an object")
    missing = [k for k in ShotParameters.__dataclass_fields__
               if k not in doc]
    _require(not missing, 400, f"shot is missing {missing}")
    try:
        values = {k: float(doc[k])
                  for k in ShotParameters.__dataclass_fields__}
        return ShotParameters(**values)
    except (TypeError, ValueError) as exc:
        raise ServiceError(400, f"invalid shot: {exc}") from exc


def _parse_descriptor_vector(state: ServiceState, doc) -> np.ndarray:
    k = len(state.descriptors)
    if isinstance(doc, dict):
        unknown = sorted(set(doc) - set(state.descriptors))
        _require(not unknown, 400, f"unknown descriptor names {unknown}")
        missing = sorted(set(state.descriptors) - set(doc))
        _require(not missing, 400, f"missing descriptor values {missing}")
        values = [doc[name] for name in state.descriptors]
    elif isinstance(doc, list):
        _require(len(doc) == k, 400, f"expected {k} descriptor values")
        values = doc
    else:
        raise ServiceError(400, "descriptors must be an object or a list")
    try:
        d = np.array([float(v) for v in values])
    except (TypeError, ValueError) as exc:
        raise ServiceError(400, f"non-numeric descriptor value: {exc}") from exc
    _require(bool(np.all(np.isfinite(d))), 400,
             "descriptor values must be finite")
    return d


def create_app(model_dir) -> FastAPI:
    state = load_state(model_dir)
    app = FastAPI(title="director-service", version=state.version)

    @app.exception_handler(ServiceError)
    async def on_service_error(_: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.message, "code": exc.status})

    @app.exception_handler(Exception)
    async def on_unexpected(_: Request, exc: Exception):
        return JSONResponse(status_code=500,
                            content={"error": str(exc), "code": 500})

    @app.get("/presets")
    async def presets():
        return {
            "version": state.version,
            "presets": [
                {
                    "name": p.name,
                    "type": p.type.value,
                    "params": p.params.as_dict(),
                    "variable_params": p.variable_params(),
                }
                for p in state.presets
            ],
        }

    @app.post("/descriptors/complete")
    async def complete(request: Request):
        doc = await _json_body(request)
        values = doc.get("values", {})
        locked = doc.get("locked", [])
        _require(isinstance(values, dict), 400, "values must be an object")
        _require(isinstance(locked, list), 400, "locked must be a list")

        unknown = sorted(set(values) - set(state.descriptors))
        _require(not unknown, 400, f"unknown descriptor names {unknown}")

        # Locked entries are names, or {name, value} pairs; duplicates are
        # tolerated only when every mention agrees on the value.
        pinned: dict[str, float] = {}
        for entry in locked:
            if isinstance(entry, dict):
                name, value = entry.get("name"), entry.get("value")
            else:
                name, value = entry, values.get(entry)
            _require(name in state.descriptors, 400,
                     f"unknown descriptor name {name!r}")
            _require(value is not None, 400,
                     f"locked descriptor {name!r} has no value")
            try:
                value = float(value)
            except (TypeError, ValueError) as exc:
                raise ServiceError(400, f"non-numeric value for {name!r}") from exc
            _require(math.isfinite(value), 400,
                     f"value for {name!r} must be finite")
            if name in pinned and pinned[name] != value:
                raise ServiceError(
                    409, f"inconsistent duplicate values for {name!r}")
            if name in values and float(values[name]) != value:
                raise ServiceError(
                    409, f"inconsistent duplicate values for {name!r}")
            pinned[name] = value

        partial = {state.descriptors.index(name): v
                   for name, v in pinned.items()}
        d = models.complete_descriptors(partial, state.prior)
        sigma = np.sqrt(np.diag(state.prior.sigma))
        return {
            "descriptors": {name: float(v)
                            for name, v in zip(state.descriptors, d)},
            "sigma": {name: float(s)
                      for name, s in zip(state.descriptors, sigma)},
            "locked": sorted(pinned),
        }

    @app.post("/shots/generate")
    async def generate(request: Request):
        doc = await _json_body(request)
        d = _parse_descriptor_vector(state, doc.get("descriptors"))
        shot, shot_type, flags = models.d2p(d, state.d2p_model)
        return {"shot": shot.as_dict(), "shot_type": shot_type.value,
                "flags": flags}

    @app.post("/trajectory/simulate")
    async def simulate(request: Request):
        doc = await _json_body(request)
        shot = _parse_shot(doc.get("shot"))
        duration = doc.get("duration")
        dt = doc.get("dt", 0.1)
        _require(isinstance(duration, (int, float)) and duration > 0, 400,
                 "duration must be a positive number")
        _require(isinstance(dt, (int, float)) and dt > 0, 400,
                 "dt must be a positive number")
        if "actor_path" in doc and doc["actor_path"] is not None:
            actor = _parse_actor_path(doc["actor_path"])
        else:
            actor = ActorPath.straight(float(duration), float(dt))
        try:
            traj = simulate_trajectory(shot, actor, float(duration),
                                       dt=float(dt))
        except ValueError as exc:
            status = 422 if "rho <= 0" in str(exc) else 400
            raise ServiceError(status, str(exc)) from exc
        if traj.degenerate:
            raise ServiceError(422, "degenerate geometry: camera height "
                                    "exceeds distance to actor")
        return {"poses": trajectory_records(traj), "duration": traj.duration,
                "degenerate": traj.degenerate}

    @app.post("/descriptors/predict")
    async def predict(request: Request):
        doc = await _json_body(request)
        shot = _parse_shot(doc.get("shot"))
        type_name = doc.get("shot_type")
        try:
            shot_type = ShotType(type_name)
        except ValueError as exc:
            raise ServiceError(400, f"unknown shot_type {type_name!r}") from exc
        d = state.p2d_model.predict(models.encode_features(shot, shot_type))
        return {"descriptors": {name: float(v)
                                for name, v in zip(state.descriptors, d)}}

    return app


async def _json_body(request: Request) -> dict:
    try:
        doc = await request.json()
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ServiceError(400, f"malformed JSON body: {exc}") from exc
    _require(isinstance(doc, dict), 400, "request body must be a JSON object")
    return doc


def _parse_actor_path(doc) -> ActorPath:
    _require(isinstance(doc, list) and len(doc) >= 2, 400,
             "actor_path must be a list of at least 2 samples")
    try:
        times = tuple(float(rec["t"]) for rec in doc)
        positions = tuple(tuple(float(v) for v in rec["actor"])
                          for rec in doc)
        headings = tuple(float(rec.get("heading", 0.0)) for rec in doc)
        return ActorPath(times, positions, headings)
    except (KeyError, TypeError, ValueError) as exc:
        raise ServiceError(400, f"invalid actor_path: {exc}") from exc


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="semcam-service")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--model-dir", type=Path, required=True)
    args = parser.parse_args(argv)
    import uvicorn
    uvicorn.run(create_app(args.model_dir), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
