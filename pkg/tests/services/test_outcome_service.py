from math import sqrt

import numpy as np
import pytest

from app.core.exceptions import InfeasibleAssociation
from app.core.rng import make_generator
from app.schemas.outcome import UTILITY_PRESETS, JointOutcomeProb, OutcomeCounts, UtilityTable
from app.services.outcome_service import outcome_service
from app.utils.oracles import joint_cells_exact

U1 = UTILITY_PRESETS["indication_1"]


class TestSolveJoint:
    def test_independence(self):
        p = outcome_service.solve_joint(0.25, 0.40, 0.0)
        assert p.as_tuple() == pytest.approx((0.30, 0.45, 0.10, 0.15))

    def test_positive_association(self):
        p = outcome_service.solve_joint(0.25, 0.40, 0.25)
        assert p.p11 == pytest.approx(0.1 + 0.25 * sqrt(0.40 * 0.60 * 0.25 * 0.75))
        assert p.p11 == pytest.approx(0.153033, abs=1e-6)
        assert p.phi == pytest.approx(0.25, abs=1e-12)
        assert (p.pi_T, p.pi_R) == pytest.approx((0.25, 0.40))

    def test_matches_high_precision_closed_form(self):
        p = outcome_service.solve_joint(0.40, 0.05, 0.25)
        exact = joint_cells_exact(0.40, 0.05, 0.25)
        assert p.as_tuple() == pytest.approx((exact["p01"], exact["p00"], exact["p11"], exact["p10"]), abs=1e-12)

    def test_degenerate_marginal_with_association(self):
        with pytest.raises(InfeasibleAssociation) as exc:
            outcome_service.solve_joint(0.0, 0.40, 0.25)
        assert exc.value.cell == "11"

    def test_degenerate_marginal_without_association(self):
        p = outcome_service.solve_joint(0.0, 0.40, 0.0)
        assert p.p11 == 0.0
        assert p.phi == 0.0

    def test_negative_cell(self):
        # p11 = 0.0025 - 0.9 * 0.0475 < 0
        with pytest.raises(InfeasibleAssociation):
            outcome_service.solve_joint(0.05, 0.05, -0.9)

    @pytest.mark.parametrize("pi_T, pi_R, phi", [(1.2, 0.4, 0.0), (0.2, -0.1, 0.0), (0.2, 0.4, 1.0)])
    def test_out_of_domain(self, pi_T, pi_R, phi):
        with pytest.raises(InfeasibleAssociation):
            outcome_service.solve_joint(pi_T, pi_R, phi)


class TestMeanUtility:
    def test_additive_utilities_ignore_phi(self):
        for phi in (0.0, 0.25, 0.5):
            p = outcome_service.solve_joint(0.15, 0.40, phi)
            assert outcome_service.mean_utility(U1, p) == pytest.approx(58.0)

    def test_toxic_unresponsive_dose(self):
        p = outcome_service.solve_joint(0.40, 0.05, 0.25)
        assert outcome_service.mean_utility(U1, p) == pytest.approx(27.0)

    def test_point_mass_on_best_outcome(self):
        p = JointOutcomeProb(p01=1.0, p00=0.0, p11=0.0, p10=0.0)
        assert outcome_service.mean_utility(UtilityTable(u00=20, u11=70), p) == 100.0

    def test_quasi_probability_scale(self):
        p = outcome_service.solve_joint(0.15, 0.40, 0.25)
        assert outcome_service.quasi_probability(U1, p) == pytest.approx(0.58)


class TestQuasiEvents:
    def test_direct_arithmetic(self):
        x = OutcomeCounts(x01=3, x00=5, x11=1, x10=1)
        assert outcome_service.quasi_events(U1, x) == pytest.approx(5.6)

    def test_no_patients(self):
        assert outcome_service.quasi_events(U1, OutcomeCounts()) == 0.0

    def test_all_best_outcome(self):
        assert outcome_service.quasi_events(U1, OutcomeCounts(x01=12)) == pytest.approx(12.0)

    def test_cells_agree_with_counts(self):
        cells = np.array([3, 5, 1, 1])
        assert outcome_service.quasi_events_from_cells(U1, cells) == pytest.approx(5.6)


class TestSampling:
    def test_point_mass(self):
        p = JointOutcomeProb(p01=1.0, p00=0.0, p11=0.0, p10=0.0)
        rng = make_generator(0)
        assert all(outcome_service.sample_outcome(p, rng) == (0, 1) for _ in range(50))

    def test_same_seed_same_sequence(self):
        p = outcome_service.solve_joint(0.25, 0.40, 0.25)
        rng_a, rng_b = make_generator(9), make_generator(9)
        seq_a = [outcome_service.sample_outcome(p, rng_a) for _ in range(100)]
        seq_b = [outcome_service.sample_outcome(p, rng_b) for _ in range(100)]
        assert seq_a == seq_b

    def test_frequencies_converge(self):
        p = outcome_service.solve_joint(0.25, 0.40, 0.0)
        counts = outcome_service.sample_counts(p, 1_000_000, make_generator(2024))
        assert counts.sum() == 1_000_000
        assert counts / 1_000_000 == pytest.approx(np.array(p.as_tuple()), abs=0.002)

    def test_no_patients_no_counts(self):
        p = outcome_service.solve_joint(0.25, 0.40, 0.0)
        assert outcome_service.sample_counts(p, 0, make_generator(1)).tolist() == [0, 0, 0, 0]


class TestEmpiricalJoint:
    def test_frequencies(self):
        p = outcome_service.empirical_joint(OutcomeCounts(x01=3, x00=5, x11=1, x10=1))
        assert p.as_tuple() == pytest.approx((0.3, 0.5, 0.1, 0.1))

    def test_empty(self):
        with pytest.raises(ValueError):
            outcome_service.empirical_joint(OutcomeCounts())
