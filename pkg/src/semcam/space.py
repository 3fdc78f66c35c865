"""Descriptor-space construction: correlations, exemplar clustering,
mirrored-score augmentation, stress-majorization embedding, and fitting of
the affect (valence/arousal/dominance) basis vectors.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

# The 15 candidate descriptors and the 7 cluster representatives used for
# the reduced space.
DESCRIPTORS_15 = (
    "exciting", "surprising", "rushed", "dynamic",
    "calm", "slow", "predictable", "boring", "serene", "static",
    "interesting", "enjoyable", "establishing", "revealing", "nervous",
)
DESCRIPTORS_7 = (
    "exciting", "calm", "interesting", "enjoyable",
    "establishing", "revealing", "nervous",
)

# Affect-axis assignment of the reduced descriptors: axis -> (positive set,
# negative set). Valence has no native negative descriptor; its negative side
# comes from the mirrored columns only.
VAD_AXES: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "arousal": (("exciting",), ("calm",)),
    "valence": (("interesting", "enjoyable"), ()),
    "dominance": (("establishing", "revealing"), ("nervous",)),
}

MIRROR_PREFIX = "not-"


@dataclass
class ScoreMatrix:
    clips: list[str]
    descriptors: list[str]
    values: np.ndarray  # n_clips x n_descriptors

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.clips), len(self.descriptors)):
            raise ValueError("score matrix shape mismatch")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("score matrix has non-finite entries")

    def column(self, descriptor: str) -> np.ndarray:
        return self.values[:, self.descriptors.index(descriptor)]


def correlation_matrix(scores: ScoreMatrix) -> np.ndarray:
    """Pearson correlations between descriptor columns."""
    if len(scores.clips) < 2:
        raise ValueError("need at least 2 clips")
    stds = scores.values.std(axis=0)
    for label, s in zip(scores.descriptors, stds):
        if s == 0:
            raise ValueError(f"descriptor {label!r} has constant scores")
    r = np.corrcoef(scores.values, rowvar=False)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


def mirror_scores(scores: ScoreMatrix) -> ScoreMatrix:
    """Append a negated copy of every column, reflected about its mean."""
    means = scores.values.mean(axis=0)
    mirrored = 2.0 * means - scores.values
    return ScoreMatrix(
        clips=list(scores.clips),
        descriptors=list(scores.descriptors)
        + [MIRROR_PREFIX + d for d in scores.descriptors],
        values=np.hstack([scores.values, mirrored]),
    )


# ---------------------------------------------------------------------------
# Affinity propagation


@dataclass
class ClusterAssignment:
    exemplars: list[int]
    labels: np.ndarray  # member index -> position in exemplars
    preference: float
    iterations: int
    converged: bool

    def clusters(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {e: [] for e in self.exemplars}
        for i, lab in enumerate(self.labels):
            out[self.exemplars[lab]].append(i)
        return out


def _net_similarity(S: np.ndarray, preference: float,
                    exemplars: Sequence[int]) -> float:
    """Objective scored by exemplar clustering: exemplar preferences plus
    each member's similarity to its nearest exemplar."""
    total = preference * len(exemplars)
    for i in range(S.shape[0]):
        if i not in exemplars:
            total += max(S[i, j] for j in exemplars)
    return float(total)


def _propagate(S: np.ndarray, preference: float, damping: float, max_iter: int,
               convergence_iter: int, R0: np.ndarray, A0: np.ndarray
               ) -> tuple[np.ndarray, np.ndarray, int, bool]:
    k = S.shape[0]
    S = S.copy()
    np.fill_diagonal(S, preference)
    R = R0.copy()
    A = A0.copy()
    idx = np.arange(k)
    stable = 0
    last_exemplars: Optional[np.ndarray] = None
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        # responsibilities
        AS = A + S
        first = AS.max(axis=1)
        first_idx = AS.argmax(axis=1)
        AS[idx, first_idx] = -np.inf
        second = AS.max(axis=1)
        R_new = S - first[:, None]
        R_new[idx, first_idx] = S[idx, first_idx] - second
        R = damping * R + (1 - damping) * R_new

        # availabilities
        Rp = np.maximum(R, 0.0)
        np.fill_diagonal(Rp, R.diagonal())
        col_sums = Rp.sum(axis=0)
        A_new = np.minimum(0.0, col_sums[None, :] - Rp)
        np.fill_diagonal(A_new, col_sums - Rp.diagonal())
        A = damping * A + (1 - damping) * A_new

        exemplars = np.flatnonzero(np.diag(A + R) > 0)
        if last_exemplars is not None and exemplars.size and \
                np.array_equal(exemplars, last_exemplars):
            stable += 1
            if stable >= convergence_iter:
                converged = True
                break
        else:
            stable = 0
        last_exemplars = exemplars

    exemplars = np.flatnonzero(np.diag(A + R) > 0)
    if exemplars.size == 0:
        exemplars = np.array([int(np.argmax(np.diag(A + R)))])
        converged = False
    return exemplars, np.diag(A + R), it, converged


def affinity_propagation(similarity: np.ndarray, preference: float,
                         damping: float = 0.5, max_iter: int = 1000,
                         convergence_iter: int = 15, restarts: int = 8,
                         init_noise: float = 0.3, seed: int = 0
                         ) -> ClusterAssignment:
    """Exemplar clustering by responsibility/availability message passing.

    Message passing can converge to a suboptimal exemplar set from the
    all-zero start; extra restarts begin from small random messages and the
    converged result with the best net similarity wins.
    """
    S = np.array(similarity, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("similarity must be square")
    if not 0.5 <= damping < 1.0:
        raise ValueError("damping must be in [0.5, 1)")
    if restarts < 1:
        raise ValueError("need at least one restart")
    k = S.shape[0]
    if k == 1:
        return ClusterAssignment(exemplars=[0], labels=np.zeros(1, dtype=int),
                                 preference=preference, iterations=0, converged=True)

    rng = np.random.default_rng(seed)
    best: Optional[tuple[float, np.ndarray, int, bool]] = None
    fallback: Optional[tuple[np.ndarray, int, bool]] = None
    for restart in range(restarts):
        scale = 0.0 if restart == 0 else init_noise
        R0 = scale * rng.standard_normal((k, k))
        A0 = scale * rng.standard_normal((k, k))
        exemplars, _, it, converged = _propagate(
            S, preference, damping, max_iter, convergence_iter, R0, A0)
        if not converged:
            if fallback is None:
                fallback = (exemplars, it, converged)
            continue
        value = _net_similarity(S, preference, [int(e) for e in exemplars])
        if best is None or value > best[0]:
            best = (value, exemplars, it, converged)

    if best is not None:
        _, exemplars, it, converged = best
    else:
        exemplars, it, converged = fallback  # type: ignore[misc]

    Sp = S.copy()
    np.fill_diagonal(Sp, preference)
    labels = np.argmax(Sp[:, exemplars], axis=1)
    labels[exemplars] = np.arange(exemplars.size)
    return ClusterAssignment(
        exemplars=[int(e) for e in exemplars],
        labels=labels,
        preference=preference,
        iterations=it,
        converged=converged,
    )


def correlation_to_distance(r: np.ndarray, kind: str = "one_minus") -> np.ndarray:
    """Turn a correlation matrix into a distance matrix.

    kind: "one_minus" -> 1 - r, "sqrt" -> sqrt(2(1-r)), "half" -> (1-r)/2.
    """
    if kind == "one_minus":
        d = 1.0 - r
    elif kind == "sqrt":
        d = np.sqrt(np.maximum(2.0 * (1.0 - r), 0.0))
    elif kind == "half":
        d = (1.0 - r) / 2.0
    else:
        raise ValueError(f"unknown distance transform {kind!r}")
    d = np.maximum((d + d.T) / 2.0, 0.0)
    np.fill_diagonal(d, 0.0)
    return d


def sweep_preference(similarity: np.ndarray, target_clusters: int,
                     damping: float = 0.5, max_iter: int = 1000,
                     quantiles: Optional[Sequence[float]] = None) -> ClusterAssignment:
    """Sweep the preference over similarity quantiles until the target
    cluster count results; raises if no quantile hits it."""
    off = similarity[~np.eye(similarity.shape[0], dtype=bool)]
    if quantiles is None:
        quantiles = np.linspace(0.0, 1.0, 41)
    best: Optional[ClusterAssignment] = None
    for q in quantiles:
        pref = float(np.quantile(off, q))
        result = affinity_propagation(similarity, pref, damping=damping,
                                      max_iter=max_iter)
        if result.converged and len(result.exemplars) == target_clusters:
            return result
        if best is None or abs(len(result.exemplars) - target_clusters) < \
                abs(len(best.exemplars) - target_clusters):
            best = result
    raise ValueError(
        f"preference sweep did not reach {target_clusters} clusters "
        f"(closest: {len(best.exemplars) if best else 'none'})")


# ---------------------------------------------------------------------------
# Stress-majorization embedding (SMACOF)


@dataclass
class Embedding3D:
    labels: list[str]
    coords: np.ndarray  # m x dim
    stress: float  # normalized stress
    stress_history: list[float]
    iterations: int

    def coord(self, label: str) -> np.ndarray:
        return self.coords[self.labels.index(label)]


def _pairwise(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def mds_embed(distances: np.ndarray, dim: int = 3, seed: int = 0,
              labels: Optional[Sequence[str]] = None, max_iter: int = 500,
              tol: float = 1e-9, init: str = "classical") -> Embedding3D:
    """SMACOF stress majorization of a target distance matrix.

    Stress is guaranteed non-increasing per iteration; iteration stops when
    the relative stress change drops below tol.
    """
    D = np.asarray(distances, dtype=float)
    m = D.shape[0]
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(D, D.T, atol=1e-9):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(D) != 0):
        raise ValueError("distance matrix diagonal must be zero")
    if np.any(D < 0):
        raise ValueError("distances must be nonnegative")
    if labels is None:
        labels = [str(i) for i in range(m)]

    rng = np.random.default_rng(seed)
    if init == "classical":
        # double-centered classical scaling start
        J = np.eye(m) - np.ones((m, m)) / m
        B0 = -0.5 * J @ (D ** 2) @ J
        vals, vecs = np.linalg.eigh(B0)
        order = np.argsort(vals)[::-1][:dim]
        X = vecs[:, order] * np.sqrt(np.maximum(vals[order], 0.0))
        X = X + 1e-9 * rng.standard_normal((m, dim))
    elif init == "random":
        X = rng.standard_normal((m, dim))
    else:
        raise ValueError(f"unknown init {init!r}")

    denom = (D ** 2).sum()
    if denom == 0:
        return Embedding3D(list(labels), np.zeros((m, dim)), 0.0, [0.0], 0)

    def raw_stress(X):
        d = _pairwise(X)
        return float(((D - d) ** 2).sum()) / 2.0  # each pair counted once

    history = []
    stress = raw_stress(X)
    history.append(stress)
    it = 0
    for it in range(1, max_iter + 1):
        d = _pairwise(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 1e-12, D / d, 0.0)
        np.fill_diagonal(ratio, 0.0)
        B = -ratio
        np.fill_diagonal(B, ratio.sum(axis=1))
        X = (B @ X) / m  # Guttman transform for unweighted stress
        stress_new = raw_stress(X)
        history.append(stress_new)
        if stress > 0 and (stress - stress_new) / stress < tol:
            stress = stress_new
            break
        stress = stress_new

    return Embedding3D(list(labels), X, stress / (denom / 2.0), history, it)


@dataclass
class EmotionBasis:
    arousal: np.ndarray
    valence: np.ndarray
    dominance: np.ndarray

    def as_dict(self) -> dict:
        return {"arousal": self.arousal.tolist(), "valence": self.valence.tolist(),
                "dominance": self.dominance.tolist()}


def fit_vad_basis(embedding: Embedding3D,
                  axes: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = VAD_AXES,
                  ) -> EmotionBasis:
    """Unit vector per affect axis, from the centroid of the negative-side
    points (including mirrors of positives) to the positive-side centroid."""
    vectors = {}
    for axis, (pos, neg) in axes.items():
        pos_pts = [embedding.coord(d) for d in pos] + \
                  [embedding.coord(MIRROR_PREFIX + d) for d in neg]
        neg_pts = [embedding.coord(d) for d in neg] + \
                  [embedding.coord(MIRROR_PREFIX + d) for d in pos]
        if not pos_pts or not neg_pts:
            raise ValueError(f"axis {axis!r} has no assigned descriptors")
        v = np.mean(pos_pts, axis=0) - np.mean(neg_pts, axis=0)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError(f"axis {axis!r} centroids coincide")
        vectors[axis] = v / norm
    return EmotionBasis(**vectors)


# ---------------------------------------------------------------------------
# File formats


def write_scores_csv(scores: ScoreMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id"] + list(scores.descriptors))
        for clip, row in zip(scores.clips, scores.values):
            writer.writerow([clip] + [repr(float(v)) for v in row])


def read_scores_csv(path) -> ScoreMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        descriptors = header[1:]
        clips, rows = [], []
        for row in reader:
            clips.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return ScoreMatrix(clips=clips, descriptors=descriptors,
                       values=np.array(rows, dtype=float))
