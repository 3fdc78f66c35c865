"""Significance testing of shot variations and minimal perceptual units.

Binary same/different judgments are compared against a control set with a
Welch two-sample t-test; the smallest significant offset per sign becomes the
perceptual unit for that (preset, parameter) pair. Datasets are then sampled
in multiples of these units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .shots import PARAM_NAMES, ShotParameters, ShotPreset, ShotType, apply_variation

SAMPLE_MULTIPLES = (0.0, 0.5, 1.0, 1.5, 2.0)
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class ResponseSet:
    clip_id: str
    responses: tuple[bool, ...]  # True = judged "different" from the preset

    def __post_init__(self):
        if len(self.responses) < 1:
            raise ValueError("response set must be nonempty")

    @property
    def n(self) -> int:
        return len(self.responses)


@dataclass(frozen=True)
class TestResult:
    p_value: float
    significant: bool
    delta: float


@dataclass(frozen=True)
class PerceptualUnit:
    parameter: str
    preset: str
    delta_plus: Optional[float] = None
    delta_minus: Optional[float] = None

    def __post_init__(self):
        if self.delta_plus is not None and self.delta_plus <= 0:
            raise ValueError("delta_plus must be positive")
        if self.delta_minus is not None and self.delta_minus >= 0:
            raise ValueError("delta_minus must be negative")


def two_sided_t_test(control: ResponseSet, variation: ResponseSet,
                     alpha: float = DEFAULT_ALPHA, delta: float = 0.0) -> TestResult:
    """Welch two-sample t-test on the binary responses (treated as 0/1 reals)."""
    a = np.asarray(control.responses, dtype=float)
    b = np.asarray(variation.responses, dtype=float)
    va = a.var(ddof=1) if a.size > 1 else 0.0
    vb = b.var(ddof=1) if b.size > 1 else 0.0
    se2 = va / a.size + vb / b.size
    if se2 == 0.0:
        # both samples constant: equal means are indistinguishable, unequal
        # constant means are maximally distinguishable (df floored at 1)
        p = 1.0 if a.mean() == b.mean() else 2.0 * stats.t.sf(np.inf, df=1)
    else:
        t_stat = (b.mean() - a.mean()) / math.sqrt(se2)
        df = se2 ** 2 / (
            (va / a.size) ** 2 / max(a.size - 1, 1)
            + (vb / b.size) ** 2 / max(b.size - 1, 1)
        )
        df = max(df, 1.0)
        p = 2.0 * stats.t.sf(abs(t_stat), df=df)
    return TestResult(p_value=float(p), significant=bool(p < alpha), delta=delta)


def minimal_units(preset: str, parameter: str,
                  sweep: Sequence[TestResult]) -> PerceptualUnit:
    """Smallest-magnitude significant offset per sign, absent if none."""
    if not sweep:
        raise ValueError("empty sweep")
    plus = [r.delta for r in sweep if r.significant and r.delta > 0]
    minus = [r.delta for r in sweep if r.significant and r.delta < 0]
    return PerceptualUnit(
        parameter=parameter,
        preset=preset,
        delta_plus=min(plus) if plus else None,
        delta_minus=max(minus) if minus else None,
    )


def _signed_unit(unit: PerceptualUnit, sign: float) -> tuple[float, bool]:
    """Unit magnitude for the requested sign; falls back to the mirrored side.

    Returns (signed delta of one unit, extrapolated flag).
    """
    if sign >= 0:
        if unit.delta_plus is not None:
            return unit.delta_plus, False
        if unit.delta_minus is not None:
            return -unit.delta_minus, True
    else:
        if unit.delta_minus is not None:
            return unit.delta_minus, False
        if unit.delta_plus is not None:
            return -unit.delta_plus, True
    raise ValueError(f"unit ({unit.preset}, {unit.parameter}) has no deltas")


@dataclass(frozen=True)
class SampledClip:
    params: ShotParameters
    type: ShotType
    preset: str
    multiples: dict[str, float]  # signed multiple of the unit per parameter
    extrapolated: bool = False


def sample_variations(preset: ShotPreset, units: dict[str, PerceptualUnit],
                      count: int, rng_seed: int) -> list[SampledClip]:
    """Random simultaneous variations of all variable axes of a preset.

    Each variable parameter is offset by a uniformly chosen sign times a
    uniformly chosen multiple from {0, 0.5, 1.0, 1.5, 2.0} of the matching
    signed perceptual unit.
    """
    variable = preset.variable_params()
    for name in variable:
        if name not in units:
            raise ValueError(f"missing perceptual unit for {name!r} of {preset.name!r}")
    rng = np.random.default_rng(rng_seed)
    clips = []
    for _ in range(count):
        deltas: dict[str, float] = {}
        multiples: dict[str, float] = {}
        extrapolated = False
        for name in variable:
            mult = float(rng.choice(SAMPLE_MULTIPLES))
            sign = 1.0 if rng.random() < 0.5 else -1.0
            if mult == 0.0:
                multiples[name] = 0.0
                continue
            signed_unit, extra = _signed_unit(units[name], sign)
            deltas[name] = mult * signed_unit
            multiples[name] = math.copysign(mult, signed_unit)
            extrapolated = extrapolated or extra
        params = apply_variation(preset, deltas)
        clips.append(SampledClip(params=params, type=preset.type, preset=preset.name,
                                 multiples=multiples, extrapolated=extrapolated))
    return clips


# ---------------------------------------------------------------------------
# File formats


def read_responses(path) -> list[dict]:
    """Line-delimited JSON {"clip_id","preset","param","delta","different"}."""
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def units_from_responses(records: Sequence[dict],
                         alpha: float = DEFAULT_ALPHA) -> dict[str, dict[str, PerceptualUnit]]:
    """Aggregate raw judgments into per-(preset, parameter) units.

    The pooled zero-delta responses per preset serve as the control set.
    """
    by_key: dict[tuple[str, str, float], list[bool]] = {}
    controls: dict[str, list[bool]] = {}
    for rec in records:
        preset, param, delta = rec["preset"], rec["param"], float(rec["delta"])
        if delta == 0.0:
            controls.setdefault(preset, []).append(bool(rec["different"]))
        else:
            by_key.setdefault((preset, param, delta), []).append(bool(rec["different"]))

    sweeps: dict[tuple[str, str], list[TestResult]] = {}
    for (preset, param, delta), resp in sorted(by_key.items()):
        control = controls.get(preset)
        if not control:
            raise ValueError(f"no control responses for preset {preset!r}")
        result = two_sided_t_test(
            ResponseSet(f"{preset}:control", tuple(control)),
            ResponseSet(f"{preset}:{param}:{delta}", tuple(resp)),
            alpha=alpha, delta=delta,
        )
        sweeps.setdefault((preset, param), []).append(result)

    units: dict[str, dict[str, PerceptualUnit]] = {}
    for (preset, param), sweep in sweeps.items():
        units.setdefault(preset, {})[param] = minimal_units(preset, param, sweep)
    return units


def write_units(units: dict[str, dict[str, PerceptualUnit]], path) -> None:
    doc = {
        preset: {
            param: {"delta_plus": u.delta_plus, "delta_minus": u.delta_minus}
            for param, u in params.items()
        }
        for preset, params in units.items()
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def read_units(path) -> dict[str, dict[str, PerceptualUnit]]:
    with open(path) as fh:
        doc = json.load(fh)
    return {
        preset: {
            param: PerceptualUnit(parameter=param, preset=preset,
                                  delta_plus=entry.get("delta_plus"),
                                  delta_minus=entry.get("delta_minus"))
            for param, entry in params.items()
        }
        for preset, params in doc.items()
    }
