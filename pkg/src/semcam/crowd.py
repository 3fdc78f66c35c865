"""Simulated rater pool standing in for a crowdsourcing platform.

A hidden linear ground truth scores every clip on the 7 descriptors; pairwise
judgments follow a Thurstone choice model, and same/different judgments
follow a detection curve over the unit-scaled parameter change, with an
inattentive-rater guess floor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .models import N_DESCRIPTORS, N_FEATURES, encode_features
from .rating import ComparisonRecord, Outcome
from .shots import PARAM_NAMES, ShotParameters, ShotType

DEFAULT_GUESS_RATE = 0.05


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass
class LatentRater:
    w_true: np.ndarray  # 7 x 11 hidden linear map
    noise_sigma: float = 1.0
    detect_sigma: float = 0.6
    guess_rate: float = DEFAULT_GUESS_RATE
    seed: int = 0

    def __post_init__(self):
        self.w_true = np.asarray(self.w_true, dtype=float)
        if self.w_true.shape != (N_DESCRIPTORS, N_FEATURES):
            raise ValueError(
                f"w_true must be {N_DESCRIPTORS}x{N_FEATURES}, got {self.w_true.shape}")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")

    def to_dict(self) -> dict:
        return {"w_true": self.w_true.tolist(), "noise_sigma": self.noise_sigma,
                "detect_sigma": self.detect_sigma, "guess_rate": self.guess_rate,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "LatentRater":
        return cls(w_true=np.array(doc["w_true"], dtype=float),
                   noise_sigma=doc["noise_sigma"], detect_sigma=doc["detect_sigma"],
                   guess_rate=doc.get("guess_rate", DEFAULT_GUESS_RATE),
                   seed=doc.get("seed", 0))


def default_rater(seed: int = 0, noise_sigma: float = 1.0,
                  detect_sigma: float = 0.6) -> LatentRater:
    """Random dense ground-truth map with a few planted signs that mirror
    intuitive relationships (distance raises "establishing", tilt lowers
    "interesting", angular speed lowers "calm")."""
    rng = np.random.default_rng(seed)
    w = rng.normal(scale=0.3, size=(N_DESCRIPTORS, N_FEATURES))
    # descriptor order: exciting, calm, interesting, enjoyable, establishing,
    # revealing, nervous; parameter order per PARAM_NAMES
    w[4, 0] = abs(w[4, 0]) + 0.5   # establishing <- rho
    w[2, 4] = -abs(w[2, 4]) - 0.5  # interesting <- phi
    w[1, 3] = -abs(w[1, 3]) - 0.5  # calm <- theta_dot
    w[0, 3] = abs(w[0, 3]) + 0.5   # exciting <- theta_dot
    return LatentRater(w_true=w, noise_sigma=noise_sigma,
                       detect_sigma=detect_sigma, seed=seed)


def latent_score(shot: ShotParameters, shot_type: ShotType,
                 rater: LatentRater) -> np.ndarray:
    """Noise-free hidden descriptor values for a clip."""
    return rater.w_true @ encode_features(shot, shot_type)


def simulate_comparison(clip_a: str, score_a: np.ndarray, clip_b: str,
                        score_b: np.ndarray, descriptor_index: int,
                        descriptor: str, rater: LatentRater,
                        rng: np.random.Generator) -> ComparisonRecord:
    """One forced-choice judgment under the Thurstone model: a wins with
    probability Phi((s_a - s_b) / (sqrt(2) * noise_sigma))."""
    diff = float(score_a[descriptor_index] - score_b[descriptor_index])
    p_a = _norm_cdf(diff / (math.sqrt(2.0) * rater.noise_sigma))
    outcome = Outcome.A_WINS if rng.random() < p_a else Outcome.B_WINS
    return ComparisonRecord(descriptor=descriptor, clip_a=clip_a, clip_b=clip_b,
                            outcome=outcome)


def detection_probability(delta_units: Sequence[float], rater: LatentRater) -> float:
    """P("different") for a unit-scaled parameter offset, floored at the
    guess rate."""
    d2 = float(np.asarray(delta_units, dtype=float) @ np.asarray(delta_units, dtype=float))
    p = 1.0 - math.exp(-d2 / (2.0 * rater.detect_sigma ** 2))
    return max(p, rater.guess_rate)


def simulate_same_different(delta_units: Sequence[float], rater: LatentRater,
                            rng: np.random.Generator) -> bool:
    """One same/different judgment; True means "different"."""
    return bool(rng.random() < detection_probability(delta_units, rater))


def calibrated_detect_sigma(p_at_one_unit: float = 0.75) -> float:
    """detect_sigma so a one-unit offset is judged different with the given
    probability."""
    if not 0 < p_at_one_unit < 1:
        raise ValueError("probability must be in (0, 1)")
    return 1.0 / math.sqrt(-2.0 * math.log(1.0 - p_at_one_unit))


def save_rater(rater: LatentRater, path) -> None:
    with open(path, "w") as fh:
        json.dump(rater.to_dict(), fh, indent=2)


def load_rater(path) -> LatentRater:
    with open(path) as fh:
        return LatentRater.from_dict(json.load(fh))
