import math

import numpy as np
import pytest

from regime_split import DetectionConfig, RegressionData, SwitchingRegression, coefficient_sequence, detect_switching_regression, ols_fit
from regime_split.binary import BinaryStatistic
from regime_split.calibration import mc_calibrate, simulate_statistic
from regime_split.core import DimensionMismatch
from regime_split.generators import GeneratorSpec, draw
from regime_split.regression import RankDeficient, influence_sequence, trend_design

CFG = DetectionConfig()


class CoefficientStatistic:
    """``J`` of one coefficient sequence, for calibration on regression draws."""

    def __init__(self, j):
        self.j = j
        self.stat = BinaryStatistic(CFG)

    def __call__(self, d):
        return self.stat(coefficient_sequence(d, self.j).values)


class TestOLS:
    def test_intercept_only(self):
        fit = ols_fit(RegressionData(np.ones((3, 1)), np.array([1.0, 2.0, 3.0])))
        assert fit.beta[0] == pytest.approx(2.0)
        assert fit.residuals == pytest.approx([-1.0, 0.0, 1.0])

    def test_exact_fit(self):
        X = trend_design(20)
        fit = ols_fit(RegressionData(X, X @ np.array([0.5, -2.0])))
        assert np.allclose(fit.residuals, 0.0, atol=1e-12)
        assert fit.beta == pytest.approx([0.5, -2.0])

    def test_normal_equations(self, rng):
        X = rng.normal(size=(200, 4))
        fit = ols_fit(RegressionData(X, rng.normal(size=200)))
        assert np.allclose(X.T @ fit.residuals, 0.0, atol=1e-10)

    def test_panel_columns(self, rng):
        X = trend_design(30)
        Y = rng.normal(size=(30, 5))
        fit = ols_fit(RegressionData(X, Y))
        for r in range(5):
            assert fit.beta[:, r] == pytest.approx(ols_fit(RegressionData(X, Y[:, r])).beta)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            RegressionData(np.column_stack([np.ones(5), np.ones(5)]), np.arange(5.0))
        with pytest.raises(RankDeficient):
            RegressionData(np.ones((2, 2)), np.arange(2.0))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            RegressionData(np.ones((5, 1)), np.arange(4.0))


class TestInfluence:
    def test_mean_identity(self, rng):
        X = np.column_stack([np.ones(300), rng.normal(size=(300, 2))])
        d = RegressionData(X, rng.normal(size=300))
        seq = influence_sequence(d)
        assert np.allclose(seq.mean(axis=0), ols_fit(d).beta, atol=1e-10)

    def test_no_switch_centered(self):
        d, _ = draw(SwitchingRegression((1, 1), (1, 1), 0.0), 500, 1)
        seq = coefficient_sequence(d, 1).values
        assert seq.mean() - ols_fit(d).beta[1] == pytest.approx(0.0, abs=1e-10)

    def test_panel_sequence_is_replicate_estimates(self):
        d, _ = draw(SwitchingRegression((1, 1), (1, 2), 0.1, panel=20), 40, 2)
        assert np.array_equal(coefficient_sequence(d, 1).values, ols_fit(d).beta[1])

    def test_bad_index(self):
        d = RegressionData(trend_design(10), np.arange(10.0))
        with pytest.raises(IndexError):
            coefficient_sequence(d, 2)


class TestDetect:
    def test_any_switch_matches(self):
        d, _ = draw(SwitchingRegression((1, 1), (1, 2), 0.1, panel=100), 500, 3)
        rep = detect_switching_regression(d, CFG, C=0.03)
        assert rep.any_switch == any(r.decision == "switches" for r in rep.per_coefficient)
        assert rep.pooled_coefficient == 1
        assert rep.epsilon_hat == pytest.approx(0.1, abs=0.03)

    def test_no_switch(self):
        d, _ = draw(SwitchingRegression((1, 1), (1, 1), 0.0, panel=100), 500, 4)
        rep = detect_switching_regression(d, CFG, C=1.0)
        assert not rep.any_switch and rep.epsilon_hat is None and rep.pooled_coefficient is None

    def test_type1_matches_calibration(self):
        alpha, n, fresh = 0.95, 200, 600
        null = SwitchingRegression((1, 1), (1, 1), 0.0, panel=100)
        stat = CoefficientStatistic(1)
        C = mc_calibrate(GeneratorSpec(null, n, 10), stat, alpha, 600).C
        J = simulate_statistic(null, n, stat, fresh, seed=11)
        p = float(np.mean(J > C))
        assert abs(p - (1 - alpha)) <= 3 * math.sqrt(alpha * (1 - alpha) / fresh)

    def test_family_wise_bonferroni(self):
        alpha, n, fresh = 0.95, 200, 400
        null = SwitchingRegression((1, 1), (1, 1), 0.0, panel=100)
        Cs = [mc_calibrate(GeneratorSpec(null, n, 12), CoefficientStatistic(j), alpha, 400).C for j in range(2)]
        hits = []
        for t in range(fresh):
            d, _ = draw(null, n, 13, t)
            hits.append(any(CoefficientStatistic(j)(d) > Cs[j] for j in range(2)))
        p = float(np.mean(hits))
        assert p <= 2 * (1 - alpha) + 3 * math.sqrt(p * (1 - p) / fresh + 1e-12)

    def test_unchanged_coefficient_at_type1_level(self):
        alpha, n, fresh = 0.95, 200, 400
        null = SwitchingRegression((1, 1), (1, 1), 0.0, panel=100)
        C = mc_calibrate(GeneratorSpec(null, n, 14), CoefficientStatistic(0), alpha, 400).C
        alt = SwitchingRegression((1, 1), (1, 2), 0.05, panel=100)
        J = simulate_statistic(alt, n, CoefficientStatistic(0), fresh, seed=15)
        p = float(np.mean(J > C))
        assert abs(p - (1 - alpha)) <= 3 * math.sqrt(alpha * (1 - alpha) / fresh)
