"""Ex-post allocation and payment rules for the five parameterized mechanisms.

Kinds:
  bdfpa - bid-discounted first-price: rank by theta_i * bid, pay the raw bid
  pfpa  - paced first-price: rank by theta_i * bid, pay the paced bid
  broa  - revenue-optimal: rank by theta_i * virtual bid, pay the minimal
          winning bid (threshold price by monotone root-finding)
  bdspa - bid-discounted second-price: pay max competing score / theta_i
  pspa  - paced second-price: pay the max competing score

A buyer wins only when the maximum score clears the seller's opportunity
cost lambda.  Ties (scores within 1e-12) go to the lowest index; they have
measure zero under the continuous model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qfspace
from .errors import AuctionlabError

KINDS = ("bdfpa", "pfpa", "broa", "bdspa", "pspa")
TIE_TOL = 1e-12
BROA_Z_TOL = 1e-10


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance: n buyers plus the seller's opportunity cost.

    value_qfs, when given, are the buyers' true value qfs; they default to
    the bidding qfs (truthful buyers).
    """

    qfs: tuple
    budgets: tuple
    opportunity_cost: float
    value_qfs: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "qfs", tuple(self.qfs))
        object.__setattr__(self, "budgets", tuple(float(b) for b in self.budgets))
        if len(self.qfs) < 1 or len(self.qfs) != len(self.budgets):
            raise ValueError("need n >= 1 buyers with one budget each")
        if any(not (0.0 < b <= 1.0) for b in self.budgets):
            raise ValueError("budgets must lie in (0, 1]")
        if not (0.0 < self.opportunity_cost < 1.0):
            raise ValueError("opportunity cost must lie in (0, 1)")
        if self.value_qfs is not None:
            object.__setattr__(self, "value_qfs", tuple(self.value_qfs))
            if len(self.value_qfs) != len(self.qfs):
                raise ValueError("value_qfs must have length n")
        object.__setattr__(self, "_virtual_cache", {})

    @property
    def n(self):
        return len(self.qfs)

    def value_qf(self, i):
        return self.qfs[i] if self.value_qfs is None else self.value_qfs[i]

    def virtual_qf(self, i):
        cache = self._virtual_cache
        if i not in cache:
            cache[i] = qfspace.virtualize(self.qfs[i])
        return cache[i]

    def with_qf(self, i, qf):
        """Copy with buyer i's bidding qf replaced (value qfs preserved)."""
        qfs = list(self.qfs)
        qfs[i] = qf
        values = self.value_qfs if self.value_qfs is not None else self.qfs
        return Scenario(tuple(qfs), self.budgets, self.opportunity_cost, tuple(values))


@dataclass(frozen=True)
class MechanismSpec:
    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown mechanism kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if any(not (0.0 <= p <= 1.0) for p in params):
            raise ValueError("params must lie in [0, 1]")
        object.__setattr__(self, "params", params)

    def score_qf(self, scenario, i):
        """The qf whose values are multiplied by theta_i to form scores."""
        return scenario.virtual_qf(i) if self.kind == "broa" else scenario.qfs[i]


@dataclass(frozen=True)
class ExPostOutcome:
    winner: int | None
    payment: float
    utilities: tuple

    def __post_init__(self):
        if self.winner is None and self.payment != 0.0:
            raise ValueError("payment must be 0 when nobody wins")


def tie_break(candidate_indices):
    """Deterministic tie-break: lowest index wins."""
    if len(candidate_indices) == 0:
        raise ValueError("empty candidate set")
    return min(candidate_indices)


def _broa_threshold(psi, theta, competing, z_hi):
    """Min z with theta*psi(z) >= competing, bisected to BROA_Z_TOL."""
    if theta * float(psi(0.0)) >= competing:
        return 0.0
    lo, hi = 0.0, z_hi
    while hi - lo > BROA_Z_TOL:
        mid = 0.5 * (lo + hi)
        if theta * float(psi(mid)) >= competing:
            hi = mid
        else:
            lo = mid
    return hi


def allocate(spec, scenario, q):
    """Apply the mechanism to one realized quantile profile."""
    n = scenario.n
    q = np.asarray(q, dtype=float)
    if q.shape != (n,):
        raise ValueError("quantile profile length must equal n")
    lam = scenario.opportunity_cost
    theta = np.asarray(spec.params, dtype=float)
    if len(theta) != n:
        raise ValueError("params length must equal n")

    scores = np.array([theta[i] * float(spec.score_qf(scenario, i)(q[i]))
                       if theta[i] > 0 else 0.0 for i in range(n)])
    best = float(scores.max())
    if best < lam:
        return ExPostOutcome(None, 0.0, (0.0,) * n)
    winner = tie_break([i for i in range(n) if scores[i] >= best - TIE_TOL])
    competing = max([lam] + [scores[i] for i in range(n) if i != winner])

    bid = float(scenario.qfs[winner](q[winner]))
    if spec.kind == "bdfpa":
        payment = bid
    elif spec.kind == "pfpa":
        payment = theta[winner] * bid
    elif spec.kind == "pspa":
        payment = competing
    elif spec.kind == "bdspa":
        if theta[winner] <= 0:
            raise AuctionlabError("internal inconsistency: bdspa winner with theta = 0")
        payment = competing / theta[winner]
    else:  # broa
        psi = scenario.virtual_qf(winner)
        z = _broa_threshold(psi, theta[winner], competing, float(q[winner]) + BROA_Z_TOL)
        payment = float(scenario.qfs[winner](min(z, 1.0)))

    utilities = [0.0] * n
    utilities[winner] = float(scenario.value_qf(winner)(q[winner])) - payment
    return ExPostOutcome(winner, payment, tuple(utilities))


def outcome_batch_from_bids(spec, scenario, Q, bids):
    """Vectorized ex-post outcomes from raw bid values.

    Q and bids are (N, n) arrays; bids[k, i] is buyer i's bid at sample k
    (normally qf_i(Q[k, i]), but callers may supply arbitrary, even
    non-monotone, bid functions).  Not applicable to broa, whose scores are
    virtual values of a reported qf.  Returns (winner, payment) arrays;
    winner is -1 when the item is unsold.
    """
    if spec.kind == "broa":
        raise ValueError("outcome_batch_from_bids does not apply to broa")
    n = scenario.n
    lam = scenario.opportunity_cost
    theta = np.asarray(spec.params, dtype=float)
    scores = bids * theta[None, :]
    rows = np.arange(scores.shape[0])
    near = scores >= (scores.max(axis=1, keepdims=True) - TIE_TOL)
    winner = np.argmax(near, axis=1)
    best = scores[rows, winner]
    sold = best >= lam
    second = (np.partition(np.where(np.arange(n)[None, :] == winner[:, None],
                                    -np.inf, scores), -1, axis=1)[:, -1]
              if n > 1 else np.full(scores.shape[0], -np.inf))
    competing = np.maximum(second, lam)

    win_bid = bids[rows, winner]
    if spec.kind == "bdfpa":
        payment = win_bid
    elif spec.kind == "pfpa":
        payment = theta[winner] * win_bid
    elif spec.kind == "pspa":
        payment = competing
    else:  # bdspa
        payment = competing / np.where(theta[winner] > 0, theta[winner], 1.0)
    payment = np.where(sold, payment, 0.0)
    return np.where(sold, winner, -1), payment


def allocate_batch(spec, scenario, Q):
    """Vectorized ex-post outcomes over an (N, n) quantile matrix.

    Returns (winner, payment) with winner = -1 when unsold.  Agrees with
    `allocate` sample by sample.
    """
    n = scenario.n
    Q = np.asarray(Q, dtype=float)
    lam = scenario.opportunity_cost
    theta = np.asarray(spec.params, dtype=float)

    if spec.kind != "broa":
        bids = np.column_stack([scenario.qfs[i](Q[:, i]) for i in range(n)])
        return outcome_batch_from_bids(spec, scenario, Q, bids)

    scores = np.column_stack([
        theta[i] * np.asarray(scenario.virtual_qf(i)(Q[:, i])) if theta[i] > 0
        else np.zeros(Q.shape[0]) for i in range(n)])
    near = scores >= (scores.max(axis=1, keepdims=True) - TIE_TOL)
    winner = np.argmax(near, axis=1)
    rows = np.arange(Q.shape[0])
    best = scores[rows, winner]
    sold = best >= lam
    second = (np.partition(np.where(np.arange(n)[None, :] == winner[:, None],
                                    -np.inf, scores), -1, axis=1)[:, -1]
              if n > 1 else np.full(Q.shape[0], -np.inf))
    competing = np.maximum(second, lam)

    payment = np.zeros(Q.shape[0])
    for i in range(n):
        mask = sold & (winner == i)
        if not np.any(mask):
            continue
        psi = scenario.virtual_qf(i)
        target = competing[mask] / theta[i]
        lo = np.zeros(target.shape)
        hi = Q[mask, i] + BROA_Z_TOL
        at_zero = np.asarray(psi(0.0)) >= target
        hi = np.where(at_zero, 0.0, hi)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            ge = np.asarray(psi(np.clip(mid, 0.0, 1.0))) >= target
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
        payment[mask] = scenario.qfs[i](np.clip(hi, 0.0, 1.0))
    return np.where(sold, winner, -1), payment
