"""Independent Monte Carlo oracle and ex-post property checkers.

Sampling uses a counter-based generator keyed by (seed, chunk index), so
estimates are bitwise reproducible for a fixed seed and sample count
regardless of how many worker threads evaluate the chunks; the reduction
order is fixed.  AUCTIONLAB_THREADS caps internal parallelism (0 = auto).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import evaluate, mechanisms
from .mechanisms import MechanismSpec, Scenario
from .qfspace import PiecewiseLinear, increasing_rearrangement
from .solvers import FEAS_TOL

CHUNK = 1 << 17

SHADING_FACTORS = (0.5, 0.8, 0.9, 1.1, 1.25, 2.0)
SHIFTS = (-0.1, -0.05, 0.05, 0.1)


def _thread_count():
    raw = os.environ.get("AUCTIONLAB_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    if value == 0:
        return os.cpu_count() or 1
    return max(1, value)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    standard_error: float
    sample_count: int
    seed: int

    def to_dict(self):
        return {"mean": self.mean, "standard_error": self.standard_error,
                "sample_count": self.sample_count, "seed": self.seed}


@dataclass(frozen=True)
class McProfile:
    payments: tuple
    utilities: tuple
    win_probabilities: tuple
    revenue: McEstimate
    allocation_probability: McEstimate

    def to_dict(self):
        return {
            "payments": [e.to_dict() for e in self.payments],
            "utilities": [e.to_dict() for e in self.utilities],
            "win_probabilities": [e.to_dict() for e in self.win_probabilities],
            "revenue": self.revenue.to_dict(),
            "allocation_probability": self.allocation_probability.to_dict(),
        }


def _chunk_rng(seed, chunk_index):
    return np.random.Generator(np.random.Philox(key=[int(seed), int(chunk_index)]))


def _chunk_stats(spec, scenario, seed, chunk_index, size):
    n = scenario.n
    rng = _chunk_rng(seed, chunk_index)
    Q = rng.random((size, n))
    winner, payment = mechanisms.allocate_batch(spec, scenario, Q)
    sold = winner >= 0
    lam = scenario.opportunity_cost
    revenue = payment - lam * sold

    sums = np.zeros((3 * n + 2, 2))
    for i in range(n):
        win_i = winner == i
        pay_i = np.where(win_i, payment, 0.0)
        util_i = np.where(win_i,
                          np.asarray(scenario.value_qf(i)(Q[:, i])) - payment, 0.0)
        sums[i] = pay_i.sum(), (pay_i ** 2).sum()
        sums[n + i] = util_i.sum(), (util_i ** 2).sum()
        sums[2 * n + i] = win_i.sum(), win_i.sum()
    sums[3 * n] = revenue.sum(), (revenue ** 2).sum()
    sums[3 * n + 1] = sold.sum(), sold.sum()
    return sums


def mc_outcome_profile(spec, scenario, samples=10**6, seed=42):
    """Monte Carlo estimate of the full outcome profile."""
    if samples < 10**4:
        raise ValueError("need at least 10^4 samples")
    n = scenario.n
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(
                lambda idx_size: _chunk_stats(spec, scenario, seed, idx_size[0], idx_size[1]),
                enumerate(sizes)))
    else:
        parts = [_chunk_stats(spec, scenario, seed, c, s)
                 for c, s in enumerate(sizes)]
    total = parts[0]
    for p in parts[1:]:
        total = total + p

    def est(row):
        s, s2 = total[row]
        mean = s / samples
        var = max(0.0, s2 / samples - mean * mean)
        return McEstimate(float(mean), float(math.sqrt(var / samples)), samples, seed)

    return McProfile(
        payments=tuple(est(i) for i in range(n)),
        utilities=tuple(est(n + i) for i in range(n)),
        win_probabilities=tuple(est(2 * n + i) for i in range(n)),
        revenue=est(3 * n),
        allocation_probability=est(3 * n + 1),
    )


def _transformed_qf(qf, scale=None, shift=None, grid_size=2049):
    grid = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_size),
                                     np.asarray(qf.breakpoints(), float)]))
    vals = np.atleast_1d(qf(grid))
    if scale is not None:
        vals = vals * scale
    if shift is not None:
        vals = vals + shift
    return PiecewiseLinear(grid, np.clip(vals, 0.0, 1.0))


def bcic_deviation_test(scenario, params, kind="bdspa", quad=None,
                        scales=SHADING_FACTORS, shifts=SHIFTS):
    """Max expected-utility gain over a grid of bid deviations.

    Each buyer in turn deviates to a scaled or shifted report while the
    others stay truthful; deviations that blow the deviator's budget are
    skipped.  Theory says the gain is non-positive for bdspa; bdfpa shows a
    strictly positive gain and serves as the sensitivity control.
    """
    quad = quad or evaluate.QuadratureConfig(1024)
    truthful = Scenario(scenario.qfs, scenario.budgets,
                        scenario.opportunity_cost, scenario.qfs)
    spec = MechanismSpec(kind, params)
    best_gain = -np.inf
    best_case = None
    for i in range(truthful.n):
        base_u = evaluate.expected_utility(spec, truthful, i, quad)
        deviations = [("scale", s, _transformed_qf(truthful.qfs[i], scale=s))
                      for s in scales]
        deviations += [("shift", d, _transformed_qf(truthful.qfs[i], shift=d))
                       for d in shifts]
        for label, amount, dev_qf in deviations:
            dev = truthful.with_qf(i, dev_qf)
            pay = evaluate.expected_payment(spec, dev, i, quad)
            if pay > truthful.budgets[i] + FEAS_TOL:
                continue
            gain = evaluate.expected_utility(spec, dev, i, quad) - base_u
            if gain > best_gain:
                best_gain = gain
                best_case = (i, label, amount)
    return float(best_gain), best_case


def rearrangement_dominance_test(scenario, spec, bid_values, buyer=0,
                                 samples=10**5, seed=42):
    """Utility gain of sorting a scrambled bid function into increasing order.

    bid_values are the buyer's bids on a uniform quantile grid, possibly
    non-monotone.  Returns (delta_mean, delta_se): the paired Monte Carlo
    estimate of utility(rearranged) - utility(original), expected >= 0 up
    to noise under any monotone mechanism.
    """
    if spec.kind == "broa":
        raise ValueError("rearrangement test applies to the bid-based kinds")
    bid_values = np.asarray(bid_values, dtype=float)
    grid = np.linspace(0.0, 1.0, len(bid_values))
    sorted_qf = increasing_rearrangement(list(zip(grid, bid_values)))

    n = scenario.n
    deltas_sum = 0.0
    deltas_sq = 0.0
    count = 0
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    for c, size in enumerate(sizes):
        rng = _chunk_rng(seed, c)
        Q = rng.random((size, n))
        truthful_bids = np.column_stack([scenario.qfs[j](Q[:, j]) for j in range(n)])
        value = np.asarray(scenario.value_qf(buyer)(Q[:, buyer]))

        def utility(bids_col):
            bids = truthful_bids.copy()
            bids[:, buyer] = bids_col
            winner, payment = mechanisms.outcome_batch_from_bids(spec, scenario, Q, bids)
            win = winner == buyer
            return np.where(win, value - payment, 0.0)

        scrambled = np.interp(Q[:, buyer], grid, bid_values)
        rearranged = np.asarray(sorted_qf(Q[:, buyer]))
        d = utility(rearranged) - utility(scrambled)
        deltas_sum += d.sum()
        deltas_sq += (d ** 2).sum()
        count += size
    mean = deltas_sum / count
    var = max(0.0, deltas_sq / count - mean * mean)
    return float(mean), float(math.sqrt(var / count))
