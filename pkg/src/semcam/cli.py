"""Command-line orchestration of the full pipeline over file-based artifacts.

Each subcommand is a pure file transform; identical config and seed replay
byte-identically.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import crowd, models, perception, rating, space, studies
from .shots import (ActorPath, ShotParameters, read_actor_path,
                    simulate_trajectory, write_trajectory)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    ws1_clips: int = 84
    ws2_clips: int = 50
    ws3_clips: int = 200
    comparisons_per_pair: int = 30
    rounds: int = 10
    opponents_per_round: int = 3
    cluster_target: int = 7
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    noise_sigma: float = 1.0
    detect_p: float = 0.75
    lambda_grid: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
    workdir: str = "."

    def __post_init__(self):
        for name in ("ws1_clips", "ws2_clips", "ws3_clips",
                     "comparisons_per_pair", "rounds", "opponents_per_round",
                     "cluster_target"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def rating_config(self) -> rating.RatingConfig:
        return rating.RatingConfig(mu0=self.mu0, sigma0=self.sigma0,
                                   beta=self.beta)

    def rater(self) -> crowd.LatentRater:
        return crowd.default_rater(
            seed=self.seed, noise_sigma=self.noise_sigma,
            detect_sigma=crowd.calibrated_detect_sigma(self.detect_p))


_INT_KEYS = {"seed", "ws1_clips", "ws2_clips", "ws3_clips",
             "comparisons_per_pair", "rounds", "opponents_per_round",
             "cluster_target"}
_FLOAT_KEYS = {"mu0", "sigma0", "beta", "noise_sigma", "detect_p"}


def load_config(path) -> PipelineConfig:
    """Flat key=value document; '#' starts a comment."""
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "lambda_grid":
                values[key] = tuple(float(v) for v in value.split(","))
            elif key == "workdir":
                values[key] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return PipelineConfig(**values)


def _dump_json(doc, path: Optional[Path]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen_dataset(cfg: PipelineConfig, out: Optional[Path],
                    args: argparse.Namespace) -> None:
    units = perception.read_units(args.units)
    count = args.count if args.count is not None else cfg.ws3_clips
    clips = studies.generate_clips(units, count, seed=cfg.seed)
    studies.write_clips(clips, out or Path("clips.jsonl"))


def cmd_survey(cfg: PipelineConfig, out: Optional[Path],
               args: argparse.Namespace) -> None:
    rater = crowd.load_rater(args.rater) if args.rater else cfg.rater()
    if args.mode == "ws1":
        records = studies.ws1_responses(
            rater, seed=cfg.seed, responses_per_clip=cfg.comparisons_per_pair)
        with open(out or Path("responses.jsonl"), "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return
    if not args.clips:
        raise ValueError(f"--clips is required for mode {args.mode}")
    clips = studies.read_clips(args.clips)
    if args.mode == "ws2":
        descriptors = space.DESCRIPTORS_15
        w_override = studies.extended_rater_weights(rater, seed=cfg.seed)
    else:
        descriptors = space.DESCRIPTORS_7
        w_override = None
    comparisons = studies.rating_survey(
        clips, rater, descriptors, seed=cfg.seed, rounds=cfg.rounds,
        opponents_per_round=cfg.opponents_per_round, w_override=w_override)
    rating.write_comparisons(comparisons, out or Path("comparisons.jsonl"))


def cmd_rate(cfg: PipelineConfig, out: Optional[Path],
             args: argparse.Namespace) -> None:
    if args.mode == "units":
        records = perception.read_responses(args.input)
        units = perception.units_from_responses(records)
        perception.write_units(units, out or Path("units.json"))
        return
    comparisons = rating.read_comparisons(args.input)
    if not comparisons:
        raise ValueError(f"{args.input}: no comparison records")
    table = rating.rate_dataset(comparisons, cfg.rating_config())
    descriptors = list(dict.fromkeys(c.descriptor for c in comparisons))
    if args.clips:
        clips = studies.read_clips(args.clips)
        scores = studies.scores_from_table(table, clips, descriptors)
    else:
        clip_ids = sorted({c for d in descriptors
                           for c in table.clips(d)})
        values = np.array([[table.mu(d, c) for d in descriptors]
                           for c in clip_ids])
        scores = space.ScoreMatrix(clips=clip_ids, descriptors=descriptors,
                                   values=values)
    space.write_scores_csv(scores, out or Path("scores.csv"))


def cmd_cluster(cfg: PipelineConfig, out: Optional[Path],
                args: argparse.Namespace) -> None:
    scores = space.read_scores_csv(args.scores)
    corr = space.correlation_matrix(scores)
    assign = space.sweep_preference(corr, target_clusters=cfg.cluster_target)
    doc = {
        "preference": assign.preference,
        "iterations": assign.iterations,
        "clusters": {
            scores.descriptors[ex]: sorted(scores.descriptors[m]
                                           for m in members)
            for ex, members in assign.clusters().items()
        },
    }
    _dump_json(doc, out)


def cmd_embed(cfg: PipelineConfig, out: Optional[Path],
              args: argparse.Namespace) -> None:
    scores = space.read_scores_csv(args.scores)
    mirrored = space.mirror_scores(scores)
    corr = space.correlation_matrix(mirrored)
    dist = space.correlation_to_distance(corr, kind=args.distance)
    embedding = space.mds_embed(dist, dim=3, seed=cfg.seed,
                                labels=mirrored.descriptors)
    doc = {
        "labels": embedding.labels,
        "coords": [[float(v) for v in row] for row in embedding.coords],
        "stress": embedding.stress,
    }
    if set(space.DESCRIPTORS_7) <= set(scores.descriptors):
        basis = space.fit_vad_basis(embedding)
        doc["basis"] = {
            "arousal": [float(v) for v in basis.arousal],
            "valence": [float(v) for v in basis.valence],
            "dominance": [float(v) for v in basis.dominance],
        }
    _dump_json(doc, out)


def cmd_train(cfg: PipelineConfig, out: Optional[Path],
              args: argparse.Namespace) -> None:
    clips = studies.read_clips(args.clips)
    scores = space.read_scores_csv(args.scores)
    F, D = studies.training_matrices(clips, scores)
    X, Y = (D, F) if args.direction == "d2p" else (F, D)
    lam, cv = models.cross_validate_lambda(X, Y, grid=cfg.lambda_grid,
                                           seed=cfg.seed)
    model = models.lasso_fit(
        X, Y, lam=lam, direction=args.direction.upper(),
        metadata={"seed": cfg.seed, "descriptors": list(scores.descriptors),
                  "cv_scores": {str(k): v for k, v in cv.items()}})
    prior = models.fit_gaussian_prior(D)
    models.save_model(model, out or Path(f"model_{args.direction}.json"),
                      prior=prior)


def cmd_eval(cfg: PipelineConfig, out: Optional[Path],
             args: argparse.Namespace) -> None:
    model, _ = models.load_model(args.model)
    clips = studies.read_clips(args.clips)
    scores = space.read_scores_csv(args.scores)
    F, D = studies.training_matrices(clips, scores)
    if model.direction == "D2P":
        X, Y = D, F
        names = [f"feature_{i}" for i in range(models.N_FEATURES)]
    else:
        X, Y = F, D
        names = list(scores.descriptors)
    pred = np.array([model.predict(x) for x in X])
    per_output = {name: models.r_squared(pred[:, i], Y[:, i])
                  for i, name in enumerate(names)}
    overall = models.r_squared(pred, Y)
    for name, r2 in per_output.items():
        print(f"{name}: R^2 = {r2:.4f}")
    print(f"overall: R^2 = {overall:.4f}")
    if out is not None:
        _dump_json({"per_output": per_output, "overall": overall}, out)


def cmd_generate(cfg: PipelineConfig, out: Optional[Path],
                 args: argparse.Namespace) -> None:
    model, prior = models.load_model(args.model)
    if model.direction != "D2P":
        raise ValueError("generate needs a D2P model")
    if prior is None:
        raise ValueError(f"{args.model}: model file has no descriptor prior")
    descriptors = model.metadata.get("descriptors", list(space.DESCRIPTORS_7))
    partial: dict[int, float] = {}
    for target in args.target or []:
        name, _, value = target.partition("=")
        if name not in descriptors:
            raise ValueError(f"unknown descriptor {name!r}")
        partial[descriptors.index(name)] = float(value)
    d = models.complete_descriptors(partial, prior)
    shot, shot_type, flags = models.d2p(d, model)
    doc = {
        "descriptors": {name: float(v) for name, v in zip(descriptors, d)},
        "shot": shot.as_dict(),
        "shot_type": shot_type.value,
        "flags": flags,
    }
    if args.duration is not None:
        actor = ActorPath.straight(args.duration, args.dt)
        traj = simulate_trajectory(shot, actor, args.duration, dt=args.dt)
        doc["trajectory"] = [
            {"t": p.t, "cam": list(p.position), "pan": p.pan, "tilt": p.tilt}
            for p in traj.poses
        ]
        doc["degenerate"] = traj.degenerate
    _dump_json(doc, out)


def cmd_simulate(cfg: PipelineConfig, out: Optional[Path],
                 args: argparse.Namespace) -> None:
    with open(args.shot) as fh:
        doc = json.load(fh)
    shot = ShotParameters.from_dict(doc["shot"] if "shot" in doc else doc)
    if args.actor:
        actor = read_actor_path(args.actor)
    else:
        actor = ActorPath.straight(args.duration, args.dt)
    traj = simulate_trajectory(shot, actor, args.duration, dt=args.dt)
    write_trajectory(traj, out or Path("trajectory.jsonl"))
    if traj.degenerate:
        print("warning: geometry clamped during integration (degenerate shot)",
              file=sys.stderr)


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcam",
        description="Semantic shot-control pipeline over file-based artifacts")
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", type=Path, help="output artifact path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="sample clips from presets + units")
    p.add_argument("--units", type=Path, required=True)
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("survey", help="run a simulated crowd survey")
    p.add_argument("--mode", choices=("ws1", "ws2", "ws3"), required=True)
    p.add_argument("--clips", type=Path)
    p.add_argument("--rater", type=Path)
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("rate", help="aggregate survey output")
    p.add_argument("--mode", choices=("units", "scores"), default="scores")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--clips", type=Path)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("cluster", help="reduce descriptors by clustering")
    p.add_argument("--scores", type=Path, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("embed", help="3-D embedding of the descriptor space")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--distance", choices=("one_minus", "sqrt", "half"),
                   default="one_minus")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="fit a sparse linear model")
    p.add_argument("--clips", type=Path, required=True)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--direction", choices=("d2p", "p2d"), required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="report model fit quality")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--clips", type=Path, required=True)
    p.add_argument("--scores", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="descriptor targets -> shot")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--target", action="append", metavar="NAME=VALUE")
    p.add_argument("--duration", type=float)
    p.add_argument("--dt", type=float, default=0.1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="shot -> camera trajectory")
    p.add_argument("--shot", type=Path, required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--actor", type=Path)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        args.func(cfg, args.out, args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
