import numpy as np
import pytest
from scipy import stats

from semcam.perception import (
    PerceptualUnit,
    ResponseSet,
    SAMPLE_MULTIPLES,
    TestResult,
    minimal_units,
    read_units,
    sample_variations,
    two_sided_t_test,
    units_from_responses,
    write_units,
)
from semcam.shots import preset_catalog


def responses(n_true, n):
    return ResponseSet("x", tuple([True] * n_true + [False] * (n - n_true)))


def scipy_welch_p(a_true, a_n, b_true, b_n):
    a = [1.0] * a_true + [0.0] * (a_n - a_true)
    b = [1.0] * b_true + [0.0] * (b_n - b_true)
    return stats.ttest_ind(a, b, equal_var=False).pvalue


class TestTwoSidedTTest:
    def test_strong_effect(self):
        r = two_sided_t_test(responses(3, 30), responses(25, 30))
        assert r.p_value == pytest.approx(scipy_welch_p(3, 30, 25, 30), rel=1e-9)
        assert r.p_value < 1e-6
        assert r.significant

    def test_identical_samples(self):
        r = two_sided_t_test(responses(10, 30), responses(10, 30))
        assert r.p_value == pytest.approx(scipy_welch_p(10, 30, 10, 30), rel=1e-9)
        assert not r.significant

    def test_small_effect_not_significant(self):
        r = two_sided_t_test(responses(10, 30), responses(13, 30))
        assert r.p_value == pytest.approx(scipy_welch_p(10, 30, 13, 30), rel=1e-9)
        assert not r.significant

    def test_zero_variance_equal_means(self):
        r = two_sided_t_test(responses(0, 10), responses(0, 10))
        assert r.p_value == 1.0

    def test_constant_samples_different_means(self):
        r = two_sided_t_test(responses(0, 10), responses(10, 10))
        assert r.p_value == pytest.approx(0.0, abs=1e-12)
        assert r.significant

    def test_false_positive_calibration(self):
        # both samples from the same Bernoulli(0.5): flag rate near alpha
        rng = np.random.default_rng(7)
        hits = 0
        trials = 1000
        for _ in range(trials):
            a = ResponseSet("a", tuple(rng.random(30) < 0.5))
            b = ResponseSet("b", tuple(rng.random(30) < 0.5))
            if two_sided_t_test(a, b, alpha=0.05).significant:
                hits += 1
        assert 0.03 <= hits / trials <= 0.08


class TestMinimalUnits:
    def test_smallest_significant_per_sign(self):
        sweep = [
            TestResult(0.5, False, 2.5),
            TestResult(0.01, True, 5.0),
            TestResult(0.001, True, 10.0),
            TestResult(0.2, False, -5.0),
            TestResult(0.02, True, -10.0),
        ]
        unit = minimal_units("Overhead", "phi", sweep)
        assert unit.delta_plus == 5.0
        assert unit.delta_minus == -10.0

    def test_no_significant(self):
        unit = minimal_units("Orbit", "phi", [TestResult(0.5, False, 5.0)])
        assert unit.delta_plus is None and unit.delta_minus is None

    def test_empty_sweep_errors(self):
        with pytest.raises(ValueError):
            minimal_units("Orbit", "phi", [])

    def test_monotone_under_closer_significant(self):
        sweep = [TestResult(0.01, True, 10.0)]
        base = minimal_units("p", "phi", sweep)
        extended = minimal_units("p", "phi", sweep + [TestResult(0.01, True, 5.0)])
        assert extended.delta_plus <= base.delta_plus


def make_units(preset, magnitude=2.0):
    return {
        name: PerceptualUnit(parameter=name, preset=preset.name,
                             delta_plus=magnitude, delta_minus=-magnitude)
        for name in preset.variable_params()
    }


class TestSampleVariations:
    def test_deterministic(self):
        preset = preset_catalog()[2]  # Orbit
        units = make_units(preset)
        a = sample_variations(preset, units, 20, rng_seed=5)
        b = sample_variations(preset, units, 20, rng_seed=5)
        assert a == b

    def test_masked_parameters_untouched(self):
        preset = preset_catalog()[2]
        units = make_units(preset)
        clips = sample_variations(preset, units, 50, rng_seed=1)
        variable = set(preset.variable_params())
        base = preset.params.as_dict()
        for clip in clips:
            out = clip.params.as_dict()
            for name, value in out.items():
                if name not in variable:
                    assert value == base[name]

    def test_multiples_within_two_units(self):
        for preset in preset_catalog():
            units = make_units(preset, magnitude=1.5)
            clips = sample_variations(preset, units, 40, rng_seed=3)
            base = preset.params.as_dict()
            for clip in clips:
                for name in preset.variable_params():
                    delta = clip.params.as_dict()[name] - base[name]
                    # clamping may shrink a delta, never grow it
                    assert abs(delta) <= 2.0 * 1.5 + 1e-9
                for mult in clip.multiples.values():
                    assert abs(mult) in SAMPLE_MULTIPLES

    def test_missing_unit_errors(self):
        preset = preset_catalog()[2]
        units = make_units(preset)
        units.pop("phi")
        with pytest.raises(ValueError, match="missing"):
            sample_variations(preset, units, 1, rng_seed=0)

    def test_one_sided_unit_extrapolates(self):
        preset = preset_catalog()[0]  # Follow 0: phi only
        units = {"phi": PerceptualUnit("phi", preset.name, delta_plus=2.0)}
        clips = sample_variations(preset, units, 100, rng_seed=0)
        downs = [c for c in clips if c.multiples.get("phi", 0) < 0]
        assert downs and all(c.extrapolated for c in downs)


class TestUnitsIo:
    def test_round_trip(self, tmp_path):
        preset = preset_catalog()[2]
        units = {preset.name: make_units(preset)}
        path = tmp_path / "units.json"
        write_units(units, path)
        back = read_units(path)
        assert back == units

    def test_units_from_responses(self):
        rng = np.random.default_rng(0)
        records = []
        # control: 5% different; delta 4 and 8: clearly different
        for delta, p in [(0.0, 0.05), (2.0, 0.1), (4.0, 0.9), (8.0, 0.95),
                         (-4.0, 0.9)]:
            for _ in range(30):
                records.append({"clip_id": f"c{delta}", "preset": "Orbit",
                                "param": "phi", "delta": delta,
                                "different": bool(rng.random() < p)})
        units = units_from_responses(records)
        unit = units["Orbit"]["phi"]
        assert unit.delta_plus == 4.0
        assert unit.delta_minus == -4.0
