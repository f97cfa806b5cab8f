"""Equivalence mappings: virtualize/devirtualize, head lifting, and the
certified profile constructions between mechanism kinds."""
import math

import numpy as np
import pytest

from auctionlab import evaluate, solvers, transforms
from auctionlab.errors import (CertificationFailure, PreconditionViolation,
                               RootBracketFailure)
from auctionlab.mechanisms import Scenario
from auctionlab.qfspace import (ExpHead, IntegralAverage, PiecewiseLinear,
                                Uniform, virtualize)
from auctionlab.transforms import (lift, devirtualize, map_broa_to_ebdfpa,
                                   map_ebdfpa_to_broa, map_symmetric)

from conftest import (example_scenario, random_regular_scenario,
                      random_symmetric_scenario)

QUAD = evaluate.QuadratureConfig(2048)
GRID = np.linspace(0.0, 1.0, 513)

SYMMETRIC_DIRECTIONS = (
    ("bdfpa", "pfpa"), ("bdfpa", "bdspa"), ("pfpa", "pspa"),
    ("pspa", "bdfpa"), ("pspa", "bdspa"), ("pfpa", "bdspa"),
)


def grid_gap(f, g, grid=GRID):
    return float(np.max(np.abs(np.atleast_1d(f(grid)) - np.atleast_1d(g(grid)))))


class TestDevirtualize:
    def test_inverts_virtualize(self):
        f = Uniform(0.2, 1.0)
        assert grid_gap(devirtualize(virtualize(f)), f) < 1e-9

    def test_round_trip_other_order(self):
        # virtualize(devirtualize(r)) recovers r away from q = 1
        r = Uniform(0.1, 0.8)
        s = virtualize(devirtualize(r))
        grid = np.linspace(0.0, 0.999, 400)
        assert grid_gap(s, r, grid) < 1e-6

    def test_rejects_non_monotone(self):
        convex = PiecewiseLinear([0.0, 0.5, 1.0], [0.0, 0.1, 1.0])
        with pytest.raises(PreconditionViolation):
            devirtualize(virtualize(convex))


class TestLift:
    def test_uniform_head_constants(self):
        # psi = 2q - 1 crosses lam/2 = 0.05 at q0 = 0.525 with slope 2, so
        # the exponential head has a2 = 2 / 0.05 = 40 and matches the value
        lifted = lift(virtualize(Uniform(0.0, 1.0)), 0.1)
        assert isinstance(lifted, ExpHead)
        assert lifted.join_quantile == pytest.approx(0.525, abs=1e-9)
        assert lifted.a2 == pytest.approx(40.0, abs=1e-6)
        assert lifted.a1 == pytest.approx(0.05 * math.exp(-21.0), rel=1e-6)

    def test_positive_head_stays_positive(self):
        lifted = lift(virtualize(Uniform(0.0, 1.0)), 0.1)
        q = np.linspace(0.0, 1.0, 201)
        assert np.all(np.atleast_1d(lifted(q)) > 0.0)

    def test_unchanged_above_crossing(self):
        psi = virtualize(Uniform(0.0, 1.0))
        lifted = lift(psi, 0.1)
        q = np.linspace(0.6, 1.0, 50)
        assert grid_gap(lifted, psi, q) < 1e-12

    def test_nonnegative_head_returned_unchanged(self):
        psi = virtualize(Uniform(0.5, 1.0))  # psi(0) = 0
        assert lift(psi, 0.1) is psi

    def test_dead_buyer_rejected(self):
        psi = virtualize(Uniform(0.0, 0.05))
        with pytest.raises(PreconditionViolation):
            lift(psi, 0.2)


class TestBroaEbdfpa:
    def test_example_forward(self, example):
        mp = map_broa_to_ebdfpa(example, QUAD)
        assert mp.discrepancy <= 1e-4
        assert mp.target_kind == "bdfpa"
        # budgets are slack for broa on the example, so gamma = 1
        assert mp.source_params == (1.0, 1.0)

    def test_example_reverse(self, example):
        mp = map_ebdfpa_to_broa(example, QUAD)
        assert mp.discrepancy <= 1e-4
        assert mp.source_params[0] == pytest.approx(0.25, abs=1e-4)

    def test_value_profile_preserved(self, example):
        mp = map_broa_to_ebdfpa(example, QUAD)
        sp, tp = mp.source_profile, mp.target_profile
        for a, b in zip(sp.expected_utilities, tp.expected_utilities):
            assert a == pytest.approx(b, abs=1e-4)
        assert sp.seller_revenue == pytest.approx(tp.seller_revenue, abs=1e-4)

    def test_random_regular_scenarios(self, rng):
        for _ in range(4):
            sc = random_regular_scenario(rng)
            q = evaluate.QuadratureConfig(1024)
            assert map_broa_to_ebdfpa(sc, q).discrepancy <= 1e-4
            assert map_ebdfpa_to_broa(sc, q).discrepancy <= 1e-4

    def test_to_dict_round_trips_qfs(self, example):
        d = map_ebdfpa_to_broa(example, QUAD).to_dict()
        assert d["discrepancy"] <= 1e-4
        assert d["source"]["kind"] == "bdfpa"
        assert len(d["target"]["qfs"]) == 2


class TestMapSymmetric:
    @pytest.mark.parametrize("source,target", SYMMETRIC_DIRECTIONS)
    def test_binding_example_directions(self, source, target, example):
        mp = map_symmetric(source, target, example, QUAD)
        assert mp.discrepancy <= 1e-4

    def test_bdspa_target_raises_price_floor(self, example):
        # matching the first-price payment 0.312 needs a floor above the
        # reserve, reached by shrinking the common multiplier to lam / b
        mp = map_symmetric("bdfpa", "bdspa", example, QUAD)
        assert mp.target_params[0] == pytest.approx(1 / 7, abs=1e-6)

    def test_slack_budgets_same_family_identity(self):
        sc = Scenario((Uniform(0.0, 1.0), Uniform(0.0, 1.0)), (0.9, 0.9), 0.1)
        mp = map_symmetric("bdfpa", "pfpa", sc, QUAD)
        assert mp.target_params == (1.0, 1.0)
        assert mp.target_scenario is sc

    def test_pspa_payment_cap_is_honest(self, example):
        # pspa's floor is stuck at the reserve, so the first-price payment
        # 0.312 is out of reach; the mapping must refuse, not fudge
        with pytest.raises(RootBracketFailure):
            map_symmetric("bdfpa", "pspa", example, QUAD)

    def test_random_symmetric_scenarios(self, rng):
        quad = evaluate.QuadratureConfig(1024)
        for _ in range(3):
            sc = random_symmetric_scenario(rng, quad)
            for source, target in SYMMETRIC_DIRECTIONS:
                mp = map_symmetric(source, target, sc, quad)
                assert mp.discrepancy <= 1e-4

    def test_rejects_unknown_kind(self, example):
        with pytest.raises(ValueError):
            map_symmetric("broa", "bdfpa", example, QUAD)

    def test_tight_tolerance_fails_honestly(self, example):
        with pytest.raises(CertificationFailure):
            map_symmetric("bdfpa", "pfpa", example,
                          evaluate.QuadratureConfig(64), map_tol=1e-14)
