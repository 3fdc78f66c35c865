"""Synthetic study orchestration: the web-survey stages (same/different
screening, pairwise descriptor rating) run against the simulated rater pool,
plus dataset assembly and model training used by the command-line pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import crowd, models, perception, rating, space
from .shots import PARAM_NAMES, ShotParameters, ShotType, preset_catalog

# Ground-truth perceptual step per parameter used by the simulated raters
# (the hidden quantity the screening study has to recover).
PLANTED_UNITS: dict[str, float] = {
    "rho": 2.0,
    "rho_dot": 0.25,
    "theta": 15.0,
    "theta_dot": 2.5,
    "phi": 5.0,
    "v_z": 0.25,
}

# Sweep multiples used when generating screening variations.
WS1_SWEEP_MULTIPLES = (0.5, 1.0, 1.5, 2.0)

# Parent descriptor, mixing coefficient sign, for each of the 15 candidate
# descriptors; members of a cluster are noisy copies of their representative.
CLUSTER_PARENTS: dict[str, str] = {
    "exciting": "exciting", "surprising": "exciting", "rushed": "exciting",
    "dynamic": "exciting",
    "calm": "calm", "slow": "calm", "predictable": "calm", "boring": "calm",
    "serene": "calm", "static": "calm",
    "interesting": "interesting",
    "enjoyable": "enjoyable",
    "establishing": "establishing",
    "revealing": "revealing",
    "nervous": "nervous",
}


def planted_unit_table(extra: float = 0.0) -> dict[str, dict[str, perception.PerceptualUnit]]:
    """Planted units for every preset's variable parameters."""
    table: dict[str, dict[str, perception.PerceptualUnit]] = {}
    for preset in preset_catalog():
        table[preset.name] = {
            name: perception.PerceptualUnit(
                parameter=name, preset=preset.name,
                delta_plus=PLANTED_UNITS[name] + extra,
                delta_minus=-(PLANTED_UNITS[name] + extra))
            for name in preset.variable_params()
        }
    return table


def unit_scaled_delta(deltas: dict[str, float]) -> list[float]:
    """Physical parameter offsets divided by the planted perceptual step."""
    return [deltas.get(name, 0.0) / PLANTED_UNITS[name] for name in PARAM_NAMES]


# ---------------------------------------------------------------------------
# Screening study (same/different)


def ws1_responses(rater: crowd.LatentRater, seed: int,
                  responses_per_clip: int = 30,
                  multiples: Sequence[float] = WS1_SWEEP_MULTIPLES) -> list[dict]:
    """Simulated screening study records, one JSON-able dict per judgment.

    Every preset contributes a pooled self-comparison control plus swept
    variations (both signs) on each variable parameter.
    """
    rng = np.random.default_rng(seed)
    records = []
    for preset in preset_catalog():
        for _ in range(responses_per_clip):
            records.append({
                "clip_id": f"{preset.name}:control", "preset": preset.name,
                "param": "control", "delta": 0.0,
                "different": crowd.simulate_same_different(
                    [0.0] * len(PARAM_NAMES), rater, rng),
            })
        for param in preset.variable_params():
            for mult in multiples:
                for sign in (1.0, -1.0):
                    delta = sign * mult * PLANTED_UNITS[param]
                    scaled = unit_scaled_delta({param: delta})
                    for _ in range(responses_per_clip):
                        records.append({
                            "clip_id": f"{preset.name}:{param}:{delta:+g}",
                            "preset": preset.name, "param": param,
                            "delta": delta,
                            "different": crowd.simulate_same_different(
                                scaled, rater, rng),
                        })
    return records


def recovered_units(records: Sequence[dict],
                    alpha: float = 0.05) -> dict[str, dict[str, perception.PerceptualUnit]]:
    return perception.units_from_responses(records, alpha=alpha)


def unit_recovery_score(recovered: dict[str, dict[str, perception.PerceptualUnit]],
                        multiples: Sequence[float] = WS1_SWEEP_MULTIPLES) -> float:
    """Fraction of (preset, parameter) pairs whose recovered unit lies within
    one sweep step of the planted unit."""
    step = min(multiples) * 1.0  # sweep resolution in planted-unit multiples
    total = hits = 0
    for preset in preset_catalog():
        for param in preset.variable_params():
            planted = PLANTED_UNITS[param]
            unit = recovered.get(preset.name, {}).get(param)
            for signed in ("delta_plus", "delta_minus"):
                total += 1
                if unit is None:
                    continue
                value = getattr(unit, signed)
                if value is None:
                    continue
                if abs(abs(value) - planted) <= step * planted + 1e-9:
                    hits += 1
    return hits / total if total else 0.0


# ---------------------------------------------------------------------------
# Clip datasets


@dataclass
class ClipRecord:
    clip_id: str
    preset: str
    shot: ShotParameters
    type: ShotType
    multiples: dict[str, float]

    def to_dict(self) -> dict:
        return {"clip_id": self.clip_id, "preset": self.preset,
                "shot": self.shot.as_dict(), "type": self.type.value,
                "multiples": self.multiples}

    @classmethod
    def from_dict(cls, doc: dict) -> "ClipRecord":
        return cls(clip_id=doc["clip_id"], preset=doc["preset"],
                   shot=ShotParameters.from_dict(doc["shot"]),
                   type=ShotType(doc["type"]),
                   multiples=doc.get("multiples", {}))


def generate_clips(units: dict[str, dict[str, perception.PerceptualUnit]],
                   count: int, seed: int) -> list[ClipRecord]:
    """Sample `count` clips round-robin over the preset catalog."""
    if count <= 0:
        raise ValueError("count must be positive")
    catalog = preset_catalog()
    per_preset = [count // len(catalog)] * len(catalog)
    for i in range(count % len(catalog)):
        per_preset[i] += 1
    clips = []
    for offset, (preset, n) in enumerate(zip(catalog, per_preset)):
        if n == 0:
            continue
        if preset.name not in units:
            raise ValueError(f"no units for preset {preset.name!r}")
        sampled = perception.sample_variations(
            preset, units[preset.name], n, rng_seed=seed + offset)
        for i, clip in enumerate(sampled):
            clips.append(ClipRecord(
                clip_id=f"{preset.name.replace(' ', '_')}_{i:03d}",
                preset=preset.name, shot=clip.params, type=clip.type,
                multiples=clip.multiples))
    return clips


def write_clips(clips: Sequence[ClipRecord], path) -> None:
    with open(path, "w") as fh:
        for clip in clips:
            fh.write(json.dumps(clip.to_dict(), sort_keys=True) + "\n")


def read_clips(path) -> list[ClipRecord]:
    clips = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                clips.append(ClipRecord.from_dict(json.loads(line)))
    return clips


# ---------------------------------------------------------------------------
# Pairwise descriptor surveys


def rating_survey(clips: Sequence[ClipRecord], rater: crowd.LatentRater,
                  descriptors: Sequence[str], seed: int, rounds: int = 10,
                  opponents_per_round: int = 3,
                  w_override: Optional[np.ndarray] = None
                  ) -> list[rating.ComparisonRecord]:
    """Pairwise judgments per descriptor: every clip plays a few random
    opponents per round."""
    if not clips:
        raise ValueError("no clips to survey")
    w = rater.w_true if w_override is None else np.asarray(w_override, dtype=float)
    scores = {c.clip_id: w @ models.encode_features(c.shot, c.type) for c in clips}
    rng = np.random.default_rng(seed)
    n = len(clips)
    records = []
    for d_idx, descriptor in enumerate(descriptors):
        for _ in range(rounds):
            for i in rng.permutation(n):
                for _ in range(opponents_per_round):
                    j = int(rng.integers(n - 1))
                    j = j if j < i else j + 1
                    a, b = clips[int(i)], clips[j]
                    records.append(crowd.simulate_comparison(
                        a.clip_id, scores[a.clip_id], b.clip_id,
                        scores[b.clip_id], d_idx, descriptor, rater, rng))
    return records


def extended_rater_weights(rater: crowd.LatentRater, seed: int = 0,
                           member_noise: float = 0.05) -> np.ndarray:
    """15x11 hidden map whose rows form 7 tight clusters: each candidate
    descriptor is a scaled noisy copy of its cluster representative."""
    rng = np.random.default_rng(seed)
    parents = {d: i for i, d in enumerate(space.DESCRIPTORS_7)}
    # Decorrelate the parent rows against the empirical feature covariance of
    # the clip distribution, so cross-cluster score correlations stay well
    # below the within-cluster ones.
    sample = generate_clips(planted_unit_table(), 300, seed=seed + 1)
    F = np.array([models.encode_features(c.shot, c.type) for c in sample])
    C = np.cov(F.T) + 1e-9 * np.eye(F.shape[1])
    L = np.linalg.cholesky(C)
    q, _ = np.linalg.qr(L.T @ rater.w_true.T)
    score_std = 2.0  # hidden-score spread per descriptor, in rater noise units
    w7 = np.linalg.solve(L.T, q).T * score_std
    w15 = np.zeros((len(space.DESCRIPTORS_15), rater.w_true.shape[1]))
    for row, name in enumerate(space.DESCRIPTORS_15):
        parent_row = w7[parents[CLUSTER_PARENTS[name]]]
        coeff = rng.uniform(0.7, 1.3)
        jitter = np.linalg.solve(L.T, rng.standard_normal(parent_row.shape))
        jitter *= member_noise * score_std / np.sqrt(jitter @ C @ jitter)
        w15[row] = coeff * parent_row + jitter
    return w15


def scores_from_table(table: rating.RatingTable, clips: Sequence[ClipRecord],
                      descriptors: Sequence[str]) -> space.ScoreMatrix:
    values = np.array([[table.mu(d, c.clip_id) for d in descriptors]
                       for c in clips])
    return space.ScoreMatrix(clips=[c.clip_id for c in clips],
                             descriptors=list(descriptors), values=values)


# ---------------------------------------------------------------------------
# Training


def training_matrices(clips: Sequence[ClipRecord],
                      scores: space.ScoreMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and descriptor matrix aligned on clip id."""
    by_id = {c.clip_id: c for c in clips}
    F = np.array([models.encode_features(by_id[c].shot, by_id[c].type)
                  for c in scores.clips])
    return F, scores.values


def train_models(clips: Sequence[ClipRecord], scores: space.ScoreMatrix,
                 seed: int = 0,
                 grid: Sequence[float] = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
                 ) -> tuple[models.LinearModel, models.LinearModel, models.GaussianPrior]:
    """Cross-validated training of both model directions plus the descriptor
    prior."""
    F, D = training_matrices(clips, scores)
    lam_d2p, cv_d2p = models.cross_validate_lambda(D, F, grid=grid, seed=seed)
    lam_p2d, cv_p2d = models.cross_validate_lambda(F, D, grid=grid, seed=seed)
    d2p_model = models.lasso_fit(D, F, lam=lam_d2p, direction="D2P",
                                 metadata={"seed": seed,
                                           "cv_scores": {str(k): v for k, v
                                                         in cv_d2p.items()}})
    p2d_model = models.lasso_fit(F, D, lam=lam_p2d, direction="P2D",
                                 metadata={"seed": seed,
                                           "cv_scores": {str(k): v for k, v
                                                         in cv_p2d.items()}})
    prior = models.fit_gaussian_prior(D)
    return d2p_model, p2d_model, prior


def sweep_alignment(d2p_model: models.LinearModel, prior: models.GaussianPrior,
                    rater: crowd.LatentRater, points_per_axis: int = 6
                    ) -> dict[str, dict]:
    """For each descriptor axis, sweep the requested expression over
    mu +/- 2 sd, generate shots, and compare requested values against the
    hidden scores of the generated shots."""
    out = {}
    for idx, name in enumerate(space.DESCRIPTORS_7):
        requests = models.expression_sweep(idx, points_per_axis, prior)
        latents = []
        for d in requests:
            shot, stype, _ = models.d2p(d, d2p_model)
            latents.append(crowd.latent_score(shot, stype, rater)[idx])
        requested = requests[:, idx]
        latents = np.array(latents)
        corr = float(np.corrcoef(requested, latents)[0, 1])
        monotone = bool(np.all(np.diff(latents) >= -1e-9))
        out[name] = {"requested": requested.tolist(), "latent": latents.tolist(),
                     "pearson": corr, "monotone": monotone}
    return out
