"""Ex-post allocation and payment rules for the five mechanism kinds."""
import numpy as np
import pytest

from auctionlab import mechanisms
from auctionlab.mechanisms import (MechanismSpec, Scenario, allocate,
                                   allocate_batch, outcome_batch_from_bids,
                                   tie_break)
from auctionlab.qfspace import PiecewiseLinear, Uniform

from conftest import example_scenario


def two_uniform(lam=0.1, budgets=(0.5, 0.5)):
    return Scenario((Uniform(0.0, 1.0), Uniform(0.0, 1.0)), budgets, lam)


class TestScenarioValidation:
    def test_budget_range(self):
        with pytest.raises(ValueError):
            Scenario((Uniform(0, 1),), (1.5,), 0.1)
        with pytest.raises(ValueError):
            Scenario((Uniform(0, 1),), (0.0,), 0.1)

    def test_opportunity_cost_range(self):
        with pytest.raises(ValueError):
            Scenario((Uniform(0, 1),), (0.5,), 0.0)
        with pytest.raises(ValueError):
            Scenario((Uniform(0, 1),), (0.5,), 1.0)

    def test_value_qf_defaults_to_bidding_qf(self):
        sc = two_uniform()
        assert sc.value_qf(0) is sc.qfs[0]

    def test_with_qf_preserves_values(self):
        sc = Scenario((Uniform(0, 1), Uniform(0, 1)), (0.5, 0.5), 0.1,
                      (Uniform(0.2, 1.0), Uniform(0, 1)))
        dev = sc.with_qf(0, Uniform(0.0, 0.5))
        assert dev.qfs[0](1.0) == pytest.approx(0.5)
        assert dev.value_qf(0)(0.0) == pytest.approx(0.2)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            MechanismSpec("bdfpa", (0.5, 1.2))
        with pytest.raises(ValueError):
            MechanismSpec("vickrey", (0.5,))


class TestTieBreak:
    def test_lowest_index_wins(self):
        assert tie_break([2, 0, 1]) == 0
        assert tie_break([3]) == 3

    def test_near_tie_within_tolerance(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("bdfpa", (1.0, 1.0)), sc, (0.6, 0.6 + 1e-13))
        assert out.winner == 0


class TestFirstPrice:
    def test_bdfpa_pays_raw_bid(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("bdfpa", (0.5, 1.0)), sc, (0.8, 0.3))
        assert out.winner == 0  # scores 0.4 vs 0.3
        assert out.payment == pytest.approx(0.8)
        assert out.utilities[0] == pytest.approx(0.0)  # value equals bid here

    def test_pfpa_pays_paced_bid(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("pfpa", (0.5, 1.0)), sc, (0.8, 0.3))
        assert out.winner == 0
        assert out.payment == pytest.approx(0.4)
        assert out.utilities[0] == pytest.approx(0.4)

    def test_reserve_blocks_sale(self):
        sc = two_uniform(lam=0.5)
        out = allocate(MechanismSpec("bdfpa", (0.5, 0.5)), sc, (0.8, 0.9))
        assert out.winner is None
        assert out.payment == 0.0
        assert all(u == 0.0 for u in out.utilities)


class TestSecondPrice:
    def test_bdspa_divides_by_own_multiplier(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("bdspa", (0.5, 1.0)), sc, (0.8, 0.3))
        assert out.winner == 0
        assert out.payment == pytest.approx(0.3 / 0.5)  # competing score / theta_0

    def test_bdspa_reserve_floor(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("bdspa", (0.5, 1.0)), sc, (0.8, 0.01))
        assert out.payment == pytest.approx(0.1 / 0.5)

    def test_pspa_pays_raw_second_score(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("pspa", (0.5, 1.0)), sc, (0.8, 0.3))
        assert out.winner == 0
        assert out.payment == pytest.approx(0.3)

    def test_pspa_reserve_floor(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("pspa", (1.0, 1.0)), sc, (0.8, 0.05))
        assert out.payment == pytest.approx(0.1)


class TestBroa:
    def test_threshold_payment(self):
        # psi(q) = 2q - 1; at gamma = 1 and competitor score 0.2 the winner
        # keeps winning down to z with psi(z) = 0.2, so she pays v(0.6)
        sc = two_uniform()
        out = allocate(MechanismSpec("broa", (1.0, 1.0)), sc, (0.9, 0.6))
        assert out.winner == 0
        assert out.payment == pytest.approx(0.6, abs=1e-9)

    def test_reserve_sets_threshold(self):
        # competitor below reserve: threshold solves psi(z) = lam/gamma
        sc = two_uniform()
        out = allocate(MechanismSpec("broa", (1.0, 1.0)), sc, (0.9, 0.2))
        assert out.winner == 0
        assert out.payment == pytest.approx(0.55, abs=1e-9)  # psi(0.55) = 0.1

    def test_no_sale_below_reserve(self):
        sc = two_uniform()
        out = allocate(MechanismSpec("broa", (1.0, 1.0)), sc, (0.54, 0.5))
        assert out.winner is None


class TestBatchAgreement:
    @pytest.mark.parametrize("kind", ["bdfpa", "pfpa", "broa", "bdspa", "pspa"])
    def test_matches_scalar_allocate(self, kind, rng):
        sc = Scenario((Uniform(0.0, 1.0), PiecewiseLinear([0, 0.5, 1], [0.05, 0.4, 0.9]),
                       Uniform(0.1, 0.8)), (0.4, 0.4, 0.4), 0.12)
        spec = MechanismSpec(kind, (0.9, 0.7, 0.55))
        Q = rng.random((200, 3))
        winner, payment = allocate_batch(spec, sc, Q)
        for r in range(200):
            out = allocate(spec, sc, Q[r])
            scalar = -1 if out.winner is None else out.winner
            assert winner[r] == scalar
            assert payment[r] == pytest.approx(out.payment, abs=1e-8)

    @pytest.mark.parametrize("kind", ["bdfpa", "pfpa", "bdspa", "pspa"])
    def test_truthful_bids_match_batch(self, kind, rng):
        sc = example_scenario()
        spec = MechanismSpec(kind, (0.8, 0.6))
        Q = rng.random((500, 2))
        bids = np.column_stack([sc.qfs[j](Q[:, j]) for j in range(2)])
        w1, p1 = allocate_batch(spec, sc, Q)
        w2, p2 = outcome_batch_from_bids(spec, sc, Q, bids)
        assert np.array_equal(w1, w2)
        assert np.allclose(p1, p2, atol=1e-12)

    def test_from_bids_rejects_broa(self, rng):
        sc = example_scenario()
        Q = rng.random((4, 2))
        with pytest.raises(ValueError):
            outcome_batch_from_bids(MechanismSpec("broa", (1, 1)), sc, Q, Q)
