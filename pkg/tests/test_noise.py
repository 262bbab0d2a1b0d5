import math

import numpy as np
import pytest

from wzlab.errors import ConfigError
from wzlab.noise import (
    NoiseRealization,
    NoiseSpec,
    autocorrelation_empirical,
    autocorrelation_theory,
    evaluate,
    evaluate_derivative,
    sample,
    sample_many,
    substream,
)

SQRT2PI = math.sqrt(2.0 * math.pi)


class TestNoiseSpec:
    def test_duplicate_modes_rejected(self):
        with pytest.raises(ConfigError):
            NoiseSpec(((1, 1.0), (1, 0.5)))

    def test_negative_sigma_rejected(self):
        with pytest.raises(ConfigError):
            NoiseSpec(((1, -1.0),))

    def test_decay_law_variance_spectrum(self):
        spec = NoiseSpec.from_decay(amplitude=3.0, alpha=0.5, cutoff=40)
        # <|theta_m|^2> proportional to m^-(1+alpha), exactly by construction
        for m, _ in spec.nonzero_modes:
            ratio = spec.modulus_sigma(m) ** 2 / spec.modulus_sigma(1) ** 2
            assert ratio == pytest.approx(m ** (-1.5), rel=1e-12)

    def test_decay_expresses_reference_trace_spec(self):
        # sigma_0 = sqrt(2 pi), sigma_k = sqrt(2 pi)/k per component
        spec = NoiseSpec.from_decay(
            amplitude=2.0 * math.sqrt(math.pi), alpha=1.0, cutoff=100,
            sigma0=SQRT2PI,
        )
        assert spec.sigma0 == pytest.approx(SQRT2PI, rel=1e-14)
        for k in (1, 7, 100):
            assert spec.sigma_for(k) == pytest.approx(SQRT2PI / k, rel=1e-12)

    def test_json_round_trip(self):
        spec = NoiseSpec(((0, 0.5), (3, 1.25)))
        assert NoiseSpec.from_json(spec.to_json()) == spec
        with pytest.raises(ConfigError):
            NoiseSpec.from_json({"modes": [[1, 1.0]], "decay": {}})


class TestSample:
    def test_zero_spec_gives_zero_realization(self):
        spec = NoiseSpec(((0, 0.0), (1, 0.0)))
        r = sample(spec, substream(1, 0))
        assert r.theta0 == 0.0 and np.all(r.mode_coeffs == 0.0)

    def test_component_moments(self):
        # 1e5 draws of a single m = 1 mode with unit per-component sigma
        spec = NoiseSpec.single_mode(1, 1.0)
        rng = substream(123, 0)
        coeffs = np.array([sample(spec, rng).coefficient(1) for _ in range(100000)])
        n = len(coeffs)
        assert abs(np.mean(coeffs.real * coeffs.imag)) < 3.0 / math.sqrt(n)
        assert np.mean(coeffs.real ** 2) == pytest.approx(1.0, rel=0.01)
        assert np.mean(coeffs.imag ** 2) == pytest.approx(1.0, rel=0.01)

    def test_fixed_seed_reproduces_bit_for_bit(self):
        spec = NoiseSpec(((0, 1.0), (2, 0.7), (5, 0.1)))
        a = sample(spec, substream(77, 3))
        b = sample(spec, substream(77, 3))
        assert a.theta0 == b.theta0
        assert np.array_equal(a.mode_coeffs, b.mode_coeffs)

    def test_substreams_order_independent(self):
        spec = NoiseSpec.single_mode(1, 1.0)
        forward = [r.coefficient(1) for r in sample_many(spec, 9, 4)]
        backward = [
            sample(spec, substream(9, i)).coefficient(1) for i in (3, 2, 1, 0)
        ]
        assert forward == backward[::-1]


class TestEvaluation:
    def test_zero_realization_evaluates_to_zero(self):
        r = NoiseRealization.zero()
        assert evaluate(r, 1.234) == 0.0
        assert evaluate_derivative(r, 1.234) == 0.0

    def test_periodicity(self):
        spec = NoiseSpec(((0, 1.0), (1, 1.0), (4, 0.3)))
        for i in range(5):
            r = sample(spec, substream(5, i))
            assert evaluate(r, 0.0) == pytest.approx(
                evaluate(r, 2.0 * math.pi), abs=1e-12
            )

    def test_derivative_matches_finite_differences(self):
        spec = NoiseSpec(((1, 1.0), (3, 0.5), (8, 0.2)))
        r = sample(spec, substream(2, 0))
        h = 1e-6
        for phi in np.linspace(0.0, 2.0 * math.pi, 100):
            fd = (evaluate(r, phi + h) - evaluate(r, phi - h)) / (2.0 * h)
            assert evaluate_derivative(r, phi) == pytest.approx(fd, abs=1e-6)

    def test_single_mode_explicit_value(self):
        r = NoiseRealization(0.0, np.array([2]), np.array([0.3 - 0.4j]))
        phi = 0.77
        expected = (2 * (0.3 * math.cos(2 * phi) + 0.4 * math.sin(2 * phi))) / SQRT2PI
        assert evaluate(r, phi) == pytest.approx(expected, abs=1e-15)


class TestAutocorrelation:
    def test_single_mode_at_zero_lag(self):
        # paper normalization: R(0) = <|theta_m|^2>/pi for m >= 1
        spec = NoiseSpec.single_mode(3, 0.8)
        expected = spec.modulus_sigma(3) ** 2 / math.pi
        assert autocorrelation_theory(spec, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_static_mode_flat(self):
        spec = NoiseSpec.single_mode(0, 1.3)
        for delta in (0.0, 0.5, 2.0):
            assert autocorrelation_theory(spec, delta) == pytest.approx(
                1.3 ** 2 / (2.0 * math.pi), rel=1e-14
            )

    def test_empirical_matches_theory(self):
        spec = NoiseSpec(((1, 1.0), (2, 0.5)))
        mean, se = autocorrelation_empirical(spec, math.pi / 3, 4000, seed=31)
        assert abs(mean - autocorrelation_theory(spec, math.pi / 3)) < 3.0 * se

    def test_mode_two_quarter_turn_sign(self):
        spec = NoiseSpec.single_mode(2, 1.0)
        mean, se = autocorrelation_empirical(spec, math.pi / 2, 4000, seed=32)
        expected = -spec.modulus_sigma(2) ** 2 / math.pi
        assert abs(mean - expected) < 3.0 * se

    def test_zero_noise_exactly_zero(self):
        mean, se = autocorrelation_empirical(
            NoiseSpec.single_mode(1, 0.0), 0.3, 10, seed=1
        )
        assert mean == 0.0 and se == 0.0

    def test_stationarity_of_second_moment(self):
        spec = NoiseSpec(((0, 1.0), (1, 1.0)))
        n = 4000
        phis = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
        draws = np.array(
            [sample(spec, substream(55, i)).theta(phis) ** 2 for i in range(n)]
        )
        means = draws.mean(axis=0)
        ses = draws.std(axis=0, ddof=1) / math.sqrt(n)
        r0 = autocorrelation_theory(spec, 0.0)
        assert np.all(np.abs(means - r0) < 4.0 * ses)

    def test_derivative_correlations(self):
        # <theta'(p1) theta(p2)> = R'(p1-p2), <theta' theta'> = -R''(p1-p2)
        spec = NoiseSpec(((1, 1.0), (3, 0.4)))
        n = 5000
        p1, p2 = 1.1, 0.3
        d1 = np.empty(n)
        dd = np.empty(n)
        for i in range(n):
            r = sample(spec, substream(91, i))
            d1[i] = r.theta_dot(p1) * r.theta(p2)
            dd[i] = r.theta_dot(p1) * r.theta_dot(p2)
        delta = p1 - p2
        r1 = autocorrelation_theory(spec, delta, derivative=1)
        r2 = autocorrelation_theory(spec, delta, derivative=2)
        assert abs(d1.mean() - r1) < 3.0 * d1.std(ddof=1) / math.sqrt(n)
        assert abs(dd.mean() + r2) < 3.0 * dd.std(ddof=1) / math.sqrt(n)
