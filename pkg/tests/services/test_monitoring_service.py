import numpy as np
import pytest
from scipy.stats import binom

from app.core.exceptions import DomainError, NoFeasibleN
from app.schemas.monitoring import MonitoringLimits
from app.services.monitoring_service import beta_tail, monitoring_service
from app.utils import oracles

LIM = MonitoringLimits()


class TestBetaTail:
    def test_uniform_symmetry(self):
        assert beta_tail(1, 1, 0.5, "above") == pytest.approx(0.5)

    def test_symmetric_beta(self):
        assert beta_tail(7.1, 7.1, 0.5, "above") == pytest.approx(0.5)

    def test_tails_complement(self):
        assert beta_tail(2.3, 4.1, 0.3, "above") + beta_tail(2.3, 4.1, 0.3, "below") == pytest.approx(1.0)

    def test_matches_quadrature(self):
        expected = oracles.beta_tail_quadrature(7.1, 7.1, 0.4, "above")
        assert beta_tail(7.1, 7.1, 0.4, "above") == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("alpha, beta, t", [(1, 1, 0.0), (1, 1, 1.0), (0, 1, 0.5), (1, -1, 0.5)])
    def test_domain(self, alpha, beta, t):
        with pytest.raises(DomainError):
            beta_tail(alpha, beta, t, "above")


class TestStoppingRules:
    def test_toxicity_none_observed(self):
        assert not monitoring_service.toxicity_stop(14, 0, LIM, 0.95)

    def test_toxicity_all_observed(self):
        assert monitoring_service.toxicity_stop(14, 14, LIM, 0.95)

    def test_futility_all_respond(self):
        assert not monitoring_service.futility_stop(14, 14, LIM, 0.95)

    def test_futility_none_respond(self):
        assert beta_tail(0.1, 14.1, 0.25, "below") > 0.95
        assert monitoring_service.futility_stop(14, 0, LIM, 0.95)

    def test_boundaries_are_monotone_in_counts(self):
        tox = [monitoring_service.toxicity_stop(14, x, LIM, 0.95) for x in range(15)]
        fut = [monitoring_service.futility_stop(14, x, LIM, 0.95) for x in range(15)]
        assert tox == sorted(tox)
        assert fut == sorted(fut, reverse=True)

    def test_boundaries_match_enumeration(self):
        assert monitoring_service.toxicity_boundary(14, LIM, 0.95) == oracles.toxicity_boundary_by_enumeration(14, 0.40, 0.95)
        assert monitoring_service.futility_boundary(14, LIM, 0.95) == oracles.futility_boundary_by_enumeration(14, 0.25, 0.95)

    def test_count_outside_range(self):
        with pytest.raises(DomainError):
            monitoring_service.toxicity_stop(5, 6, LIM, 0.95)


class TestFalseNegative:
    def test_certain_response_never_stops(self):
        assert monitoring_service.false_negative_prob(14, 1.0, LIM, 0.95) == 0.0

    def test_null_response_matches_simulation(self):
        n = 14
        fn = monitoring_service.false_negative_prob(n, 0.0, LIM, 0.95)
        boundary = monitoring_service.futility_boundary(n, LIM, 0.95)
        assert fn == pytest.approx(binom.cdf(boundary, n, 0.0))
        mc = oracles.false_negative_by_simulation(n, 0.0, boundary, 1_000_000, seed=3)
        assert abs(mc["estimate"] - fn) <= 3 * mc["se"]

    def test_matches_exact_enumeration(self):
        fn = monitoring_service.false_negative_prob(14, 0.45, LIM, 0.95)
        assert fn == pytest.approx(oracles.false_negative_by_enumeration(14, 0.45, 0.25, 0.95), abs=1e-10)

    def test_monte_carlo_agrees(self):
        boundary = monitoring_service.futility_boundary(14, LIM, 0.95)
        fn = monitoring_service.false_negative_prob(14, 0.45, LIM, 0.95)
        mc = oracles.false_negative_by_simulation(14, 0.45, boundary, 200_000, seed=17)
        assert abs(mc["estimate"] - fn) <= 3 * mc["se"]

    def test_probability_domain(self):
        with pytest.raises(DomainError):
            monitoring_service.false_negative_prob(14, 1.5, LIM, 0.95)


class TestCalibration:
    def test_vacuous_bound_takes_smallest_n(self):
        result = monitoring_service.calibrate_stage1_n(LIM, 0.20, 0.95, 1.0, (5, 60))
        assert result.n == 5

    def test_matches_exhaustive_scan(self):
        result = monitoring_service.calibrate_stage1_n(LIM, 0.20, 0.95, 0.10, (5, 60))
        scan = [monitoring_service.false_negative_prob(n, 0.45, LIM, 0.95) for n in range(5, 61)]
        first = next(n for n, fn in zip(range(5, 61), scan) if fn <= 0.10)
        assert result.n == first
        assert result.achieved_fn <= 0.10
        assert result.pi_true == pytest.approx(0.45)
        assert all(fn > 0.10 for fn in scan[: first - 5])

    def test_no_margin_infeasible(self):
        # at pi_true = resp_floor the rule fires with probability above 0.75**n
        with pytest.raises(NoFeasibleN) as exc:
            monitoring_service.calibrate_stage1_n(LIM, 0.0, 0.95, 1e-4, (20, 25))
        assert exc.value.n_range == (20, 25)

    def test_empty_range(self):
        with pytest.raises(NoFeasibleN):
            monitoring_service.calibrate_stage1_n(LIM, 0.20, 0.95, 0.10, (30, 10))

    def test_boundary_reported(self):
        result = monitoring_service.calibrate_stage1_n(LIM, 0.20, 0.95, 0.10, (5, 60))
        expected = monitoring_service.futility_boundary(result.n, LIM, 0.95)
        assert result.boundary == (expected if expected >= 0 else None)
        assert np.isfinite(result.achieved_fn)
