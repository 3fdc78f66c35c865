"""Bayesian pairwise rating of clips per semantic descriptor.

Each clip carries a Gaussian score N(mu, sigma) per descriptor, updated with
the two-player TrueSkill rules after every "Which video is more X?" judgment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

_SQRT2 = math.sqrt(2.0)


def _pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def v_win(t: float, eps: float) -> float:
    x = t - eps
    denom = _cdf(x)
    if denom < 1e-300:
        return -x  # asymptotic tail of pdf/cdf
    return _pdf(x) / denom


def w_win(t: float, eps: float) -> float:
    v = v_win(t, eps)
    return v * (v + t - eps)


def v_draw(t: float, eps: float) -> float:
    abs_t = abs(t)
    denom = _cdf(eps - abs_t) - _cdf(-eps - abs_t)
    if denom < 1e-300:
        # degenerate margin: fall back to the linear tail limit
        v = eps - abs_t
    else:
        v = (_pdf(-eps - abs_t) - _pdf(eps - abs_t)) / denom
    return -v if t < 0 else v


def w_draw(t: float, eps: float) -> float:
    abs_t = abs(t)
    denom = _cdf(eps - abs_t) - _cdf(-eps - abs_t)
    if denom < 1e-300:
        return 1.0
    v = v_draw(t, eps)
    return v * v + ((eps - abs_t) * _pdf(eps - abs_t)
                    + (eps + abs_t) * _pdf(-eps - abs_t)) / denom


@dataclass(frozen=True)
class Rating:
    mu: float = 25.0
    sigma: float = 25.0 / 3.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError("rating must be finite")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class RatingConfig:
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    epsilon: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.sigma0 <= 0 or self.beta <= 0 or self.epsilon < 0 or self.tau < 0:
            raise ValueError("invalid rating config")

    def prior(self) -> Rating:
        return Rating(self.mu0, self.sigma0)


class Outcome(str, Enum):
    A_WINS = "a"
    B_WINS = "b"
    DRAW = "draw"


@dataclass(frozen=True)
class ComparisonRecord:
    descriptor: str
    clip_a: str
    clip_b: str
    outcome: Outcome

    def __post_init__(self):
        if self.clip_a == self.clip_b:
            raise ValueError("comparison needs two distinct clips")


def update_pair(winner: Rating, loser: Rating,
                config: RatingConfig = RatingConfig()) -> tuple[Rating, Rating]:
    """TrueSkill win update for a two-player comparison."""
    sw2 = winner.sigma ** 2 + config.tau ** 2
    sl2 = loser.sigma ** 2 + config.tau ** 2
    c2 = 2.0 * config.beta ** 2 + sw2 + sl2
    c = math.sqrt(c2)
    t = (winner.mu - loser.mu) / c
    eps = config.epsilon / c
    v = v_win(t, eps)
    w = w_win(t, eps)
    new_winner = Rating(
        mu=winner.mu + (sw2 / c) * v,
        sigma=math.sqrt(sw2 * max(1.0 - (sw2 / c2) * w, 1e-12)),
    )
    new_loser = Rating(
        mu=loser.mu - (sl2 / c) * v,
        sigma=math.sqrt(sl2 * max(1.0 - (sl2 / c2) * w, 1e-12)),
    )
    return new_winner, new_loser


def update_draw(a: Rating, b: Rating,
                config: RatingConfig = RatingConfig()) -> tuple[Rating, Rating]:
    """TrueSkill draw update (used when a judgment allows ties)."""
    sa2 = a.sigma ** 2 + config.tau ** 2
    sb2 = b.sigma ** 2 + config.tau ** 2
    c2 = 2.0 * config.beta ** 2 + sa2 + sb2
    c = math.sqrt(c2)
    t = (a.mu - b.mu) / c
    eps = config.epsilon / c
    v = v_draw(t, eps)
    w = w_draw(t, eps)
    new_a = Rating(
        mu=a.mu + (sa2 / c) * v,
        sigma=math.sqrt(sa2 * max(1.0 - (sa2 / c2) * w, 1e-12)),
    )
    new_b = Rating(
        mu=b.mu - (sb2 / c) * v,
        sigma=math.sqrt(sb2 * max(1.0 - (sb2 / c2) * w, 1e-12)),
    )
    return new_a, new_b


class RatingTable:
    """Per-descriptor map clip_id -> Rating."""

    def __init__(self, config: RatingConfig = RatingConfig()):
        self.config = config
        self._tables: dict[str, dict[str, Rating]] = {}

    def get(self, descriptor: str, clip: str) -> Rating:
        return self._tables.setdefault(descriptor, {}).setdefault(
            clip, self.config.prior())

    def set(self, descriptor: str, clip: str, rating: Rating) -> None:
        self._tables.setdefault(descriptor, {})[clip] = rating

    def descriptors(self) -> list[str]:
        return sorted(self._tables)

    def clips(self, descriptor: str) -> dict[str, Rating]:
        return dict(self._tables.get(descriptor, {}))

    def mu(self, descriptor: str, clip: str) -> float:
        return self._tables[descriptor][clip].mu

    def to_dict(self) -> dict:
        return {
            d: {c: {"mu": r.mu, "sigma": r.sigma} for c, r in sorted(clips.items())}
            for d, clips in sorted(self._tables.items())
        }

    @classmethod
    def from_dict(cls, doc: dict, config: RatingConfig = RatingConfig()) -> "RatingTable":
        table = cls(config)
        for d, clips in doc.items():
            for c, r in clips.items():
                table.set(d, c, Rating(r["mu"], r["sigma"]))
        return table


def rate_dataset(comparisons: Iterable[ComparisonRecord],
                 config: RatingConfig = RatingConfig()) -> RatingTable:
    """Sequential updates in input order, all clips starting at the prior."""
    table = RatingTable(config)
    for rec in comparisons:
        ra = table.get(rec.descriptor, rec.clip_a)
        rb = table.get(rec.descriptor, rec.clip_b)
        if rec.outcome == Outcome.A_WINS:
            ra, rb = update_pair(ra, rb, config)
        elif rec.outcome == Outcome.B_WINS:
            rb, ra = update_pair(rb, ra, config)
        elif rec.outcome == Outcome.DRAW:
            ra, rb = update_draw(ra, rb, config)
        else:
            raise ValueError(f"unknown outcome {rec.outcome!r}")
        table.set(rec.descriptor, rec.clip_a, ra)
        table.set(rec.descriptor, rec.clip_b, rb)
    return table


def read_comparisons(path) -> list[ComparisonRecord]:
    """Line-delimited JSON {"descriptor","a","b","outcome"}."""
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            records.append(ComparisonRecord(
                descriptor=rec["descriptor"], clip_a=rec["a"], clip_b=rec["b"],
                outcome=Outcome(rec["outcome"]),
            ))
    return records


def write_comparisons(records: Sequence[ComparisonRecord], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps({
                "descriptor": rec.descriptor, "a": rec.clip_a, "b": rec.clip_b,
                "outcome": rec.outcome.value,
            }) + "\n")
