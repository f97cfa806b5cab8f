"""Shared fixtures and scenario generators for the test suite."""
import numpy as np
import pytest

from auctionlab import evaluate, solvers
from auctionlab.mechanisms import Scenario
from auctionlab.qfspace import PiecewiseLinear, Uniform

KINDS = ("bdfpa", "pfpa", "broa", "bdspa", "pspa")
BID_KINDS = ("bdfpa", "pfpa", "bdspa", "pspa")


def example_scenario():
    """Two uniform-[0,1] buyers, budgets 0.312, opportunity cost 0.1."""
    return Scenario((Uniform(0.0, 1.0), Uniform(0.0, 1.0)), (0.312, 0.312), 0.1)


def random_pwl_qf(rng, *, concave=False, pieces=None, lo=None, hi=None):
    """Strictly increasing piecewise-linear qf on [0,1].

    With concave=True the slopes decrease, which makes the virtual qf
    strictly increasing (strict regularity).
    """
    m = pieces or int(rng.integers(3, 7))
    grid = np.linspace(0.0, 1.0, m + 1)
    lo = rng.uniform(0.0, 0.15) if lo is None else lo
    hi = rng.uniform(0.7, 1.0) if hi is None else hi
    incs = rng.uniform(0.2, 1.0, m)
    if concave:
        incs = np.sort(incs)[::-1]
    vals = lo + (hi - lo) * np.concatenate([[0.0], np.cumsum(incs)]) / incs.sum()
    return PiecewiseLinear(grid, vals)


def random_scenario(rng, *, concave=False, n=None):
    """Random asymmetric scenario with strictly increasing pwl qfs."""
    n = n or int(rng.integers(2, 5))
    lam = float(rng.uniform(0.05, 0.2))
    qfs = tuple(random_pwl_qf(rng, concave=concave) for _ in range(n))
    budgets = tuple(float(rng.uniform(0.1, 0.6)) for _ in range(n))
    return Scenario(qfs, budgets, lam)


def random_regular_scenario(rng, n=None):
    """Strictly regular scenario: concave qfs give increasing virtual qfs."""
    return random_scenario(rng, concave=True, n=n)


def random_symmetric_scenario(rng, quad=None, *, concave=False):
    """Symmetric scenario with budgets drawn slack, second-price binding,
    or binding for every kind; all twelve pair mappings stay reachable for
    the first two modes and the six tested directions for all three."""
    quad = quad or evaluate.QuadratureConfig(1024)
    n = int(rng.integers(2, 5))
    lam = float(rng.uniform(0.05, 0.2))
    qf = random_pwl_qf(rng, concave=concave, lo=float(rng.uniform(0.02, lam)))
    probe = Scenario((qf,) * n, (1.0,) * n, lam)
    p1 = {k: solvers.symmetric_payment(k, probe, 1.0, quad) for k in BID_KINDS}
    mode = int(rng.integers(0, 3))
    if mode == 0:
        rho = max(p1.values()) * float(rng.uniform(1.05, 1.5))
    elif mode == 1:
        lo_b = max(p1["bdspa"], p1["pspa"])
        rho = max(float(rng.uniform(0.7 * lo_b, 0.98 * lo_b)), 0.01)
    else:
        rho = float(rng.uniform(0.6, 0.95)) * min(p1.values())
    return Scenario((qf,) * n, (min(rho, 1.0),) * n, lam)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def quad():
    return evaluate.QuadratureConfig(1024)


@pytest.fixture
def example():
    return example_scenario()
