"""Interim and expected quantities by deterministic quadrature.

Every n-dimensional expectation reduces to a 1-D integral through the
G-function (the CDF of the best competing shaded score), so no cubature is
ever performed.  Integrands are split at the reserve-crossing quantile and
at qf kinks, where the only non-smoothness lives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid


@dataclass(frozen=True)
class QuadratureConfig:
    node_count: int = 4096
    rule: str = "trapezoid"
    singularity_split: bool = True

    def __post_init__(self):
        if self.node_count < 16:
            raise ValueError("node_count must be at least 16")
        if self.rule not in ("trapezoid", "gauss-legendre"):
            raise ValueError("rule must be 'trapezoid' or 'gauss-legendre'")


@dataclass(frozen=True)
class OutcomeProfile:
    expected_payments: tuple
    expected_utilities: tuple
    win_probabilities: tuple
    seller_revenue: float
    allocation_probability: float

    def to_dict(self):
        return {
            "expected_payments": list(self.expected_payments),
            "expected_utilities": list(self.expected_utilities),
            "win_probabilities": list(self.win_probabilities),
            "seller_revenue": self.seller_revenue,
            "allocation_probability": self.allocation_probability,
        }


_GAUSS_ORDER = 32


def _panels(a, b, breaks, cfg):
    pts = [a]
    if cfg.singularity_split:
        pts += sorted(p for p in set(breaks) if a + 1e-12 < p < b - 1e-12)
    pts.append(b)
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > 1e-12:
            merged.append(p)
    if len(merged) == 1:
        merged.append(b)
    return merged


def integrate_1d(fn, a, b, breaks, cfg):
    """Integrate a vectorized fn over [a, b], splitting at breakpoints.

    fn may return shape (len(x),) or (k, len(x)); rows are integrated
    independently.  Accumulation order is fixed, so results are bitwise
    deterministic for a given config.
    """
    if b - a <= 1e-15:
        probe = np.atleast_2d(fn(np.array([a])))
        return np.zeros(probe.shape[0])
    pts = _panels(a, b, breaks, cfg)
    total_len = b - a
    out = None
    for lo, hi in zip(pts[:-1], pts[1:]):
        share = max(16, int(round(cfg.node_count * (hi - lo) / total_len)))
        if cfg.rule == "trapezoid":
            x = np.linspace(lo, hi, share + 1)
            y = np.atleast_2d(fn(x))
            part = np.trapezoid(y, x, axis=-1)
        else:
            nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
            blocks = max(1, share // _GAUSS_ORDER)
            edges = np.linspace(lo, hi, blocks + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])
            half = 0.5 * np.diff(edges)
            x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
            w = (half[:, None] * weights[None, :]).ravel()
            y = np.atleast_2d(fn(x))
            part = y @ w
        out = part if out is None else out + part
    return out


def g_function(spec, scenario, i, s):
    """CDF of the best competing shaded score max{theta_j vqf_j(q_j), lambda}.

    Zero below the reserve, a product of per-competitor bid CDFs above it
    (an atom sits at the reserve itself).
    """
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    lam = scenario.opportunity_cost
    out = np.ones_like(s_arr)
    for j in range(scenario.n):
        if j == i:
            continue
        th = spec.params[j]
        if th <= 0.0:
            continue
        out = out * np.atleast_1d(spec.score_qf(scenario, j).cdf(s_arr / th))
    out = np.where(s_arr < lam, 0.0, out)
    return float(out[0]) if scalar else out


def _win_lower_quantile(spec, scenario, i):
    """Smallest quantile at which buyer i's own score clears the reserve.

    None when the buyer can never win.
    """
    th = spec.params[i]
    lam = scenario.opportunity_cost
    h = spec.score_qf(scenario, i)
    if th <= 0.0 or th * float(h(1.0)) < lam:
        return None
    if th * float(h(0.0)) >= lam:
        return 0.0
    return float(h.cdf(lam / th))


def interim_win_probability(spec, scenario, i, q_i):
    q_arr = np.atleast_1d(np.asarray(q_i, dtype=float))
    th = spec.params[i]
    lam = scenario.opportunity_cost
    if th <= 0.0:
        out = np.zeros_like(q_arr)
    else:
        s = th * np.atleast_1d(spec.score_qf(scenario, i)(q_arr))
        out = np.where(s >= lam, np.atleast_1d(g_function(spec, scenario, i, s)), 0.0)
    return float(out[0]) if np.asarray(q_i).ndim == 0 else out


def _own_breakpoints(spec, scenario, i):
    """Quantile-space kinks of buyer i's reduced integrands."""
    th = spec.params[i]
    h = spec.score_qf(scenario, i)
    breaks = set(h.breakpoints()) | set(scenario.value_qf(i).breakpoints())
    if th > 0.0:
        for j in range(scenario.n):
            if j == i:
                continue
            tj = spec.params[j]
            if tj <= 0.0:
                continue
            hj = spec.score_qf(scenario, j)
            wvals = [float(hj(0.0)), float(hj(1.0))] + [float(hj(b)) for b in hj.breakpoints()]
            for w in wvals:
                q = float(h.cdf(tj * w / th))
                if 1e-12 < q < 1.0 - 1e-12:
                    breaks.add(q)
        # the reserve crossing of each competitor also kinks G along own score
        lam = scenario.opportunity_cost
        q = float(h.cdf(lam / th))
        if 1e-12 < q < 1.0 - 1e-12:
            breaks.add(q)
    return breaks


def _score_value_breaks(spec, scenario, i, lam, s_max):
    """Score-space points where G_i may kink or jump."""
    pts = set()
    for j in range(scenario.n):
        if j == i:
            continue
        tj = spec.params[j]
        if tj <= 0.0:
            continue
        hj = spec.score_qf(scenario, j)
        for b in (0.0, 1.0) + tuple(hj.breakpoints()):
            w = tj * float(hj(b))
            for p in (w - 1e-9, w):
                if lam + 1e-12 < p < s_max - 1e-12:
                    pts.add(p)
    return sorted(pts)


def _second_price_cumulative(spec, scenario, i, quad):
    """t-grid and cumulative integral of G_i over [lambda, own max score]."""
    th = spec.params[i]
    lam = scenario.opportunity_cost
    h = spec.score_qf(scenario, i)
    s_max = th * float(h(1.0))
    base = np.linspace(lam, s_max, quad.node_count + 1)
    t = np.unique(np.concatenate([base, _score_value_breaks(spec, scenario, i, lam, s_max)]))
    G = g_function(spec, scenario, i, t)
    C = cumulative_trapezoid(G, t, initial=0.0)
    return t, C


def _profile_rows(spec, scenario, i, quad):
    """Integrate (win probability, payment, gross utility) for buyer i."""
    th = spec.params[i]
    lam = scenario.opportunity_cost
    q_lo = _win_lower_quantile(spec, scenario, i)
    if q_lo is None:
        return 0.0, 0.0, 0.0
    h = spec.score_qf(scenario, i)
    vqf = scenario.value_qf(i)
    breaks = _own_breakpoints(spec, scenario, i)

    if spec.kind in ("bdspa", "pspa"):
        t, C = _second_price_cumulative(spec, scenario, i, quad)

        def fn(q):
            s = th * np.atleast_1d(h(q))
            G = np.atleast_1d(g_function(spec, scenario, i, s))
            sc = np.clip(s, t[0], t[-1])
            price = s * G - np.interp(sc, t, C)
            if spec.kind == "bdspa":
                price = price / th
            return np.vstack([G, price, np.atleast_1d(vqf(q)) * G])
    else:
        if spec.kind == "bdfpa":
            weight = lambda q: np.atleast_1d(scenario.qfs[i](q))
        elif spec.kind == "pfpa":
            weight = lambda q: th * np.atleast_1d(scenario.qfs[i](q))
        else:  # broa: virtual-surplus identity
            weight = lambda q: np.atleast_1d(scenario.virtual_qf(i)(q))

        def fn(q):
            s = th * np.atleast_1d(h(q))
            G = np.atleast_1d(g_function(spec, scenario, i, s))
            return np.vstack([G, weight(q) * G, np.atleast_1d(vqf(q)) * G])

    x_bar, pay, gross = integrate_1d(fn, q_lo, 1.0, breaks, quad)
    return float(x_bar), float(pay), float(gross)


def expected_payment(spec, scenario, i, quad=None):
    quad = quad or QuadratureConfig()
    return _profile_rows(spec, scenario, i, quad)[1]


def expected_utility(spec, scenario, i, quad=None):
    quad = quad or QuadratureConfig()
    _, pay, gross = _profile_rows(spec, scenario, i, quad)
    return gross - pay


def outcome_profile(spec, scenario, quad=None):
    quad = quad or QuadratureConfig()
    if len(spec.params) != scenario.n:
        raise ValueError("params length must equal n")
    xs, ps, us = [], [], []
    for i in range(scenario.n):
        x_bar, pay, gross = _profile_rows(spec, scenario, i, quad)
        xs.append(x_bar)
        ps.append(pay)
        us.append(gross - pay)
    alloc = float(sum(xs))
    w = float(sum(ps)) - scenario.opportunity_cost * alloc
    return OutcomeProfile(tuple(ps), tuple(us), tuple(xs), w, alloc)


def convergence_delta(spec, scenario, quad=None):
    """Change of every profile quantity when the node count is doubled.

    Exposed as a diagnostic: a delta above ~1e-6 signals non-convergence of
    the quadrature at the requested resolution.
    """
    quad = quad or QuadratureConfig()
    fine = QuadratureConfig(quad.node_count * 2, quad.rule, quad.singularity_split)
    a = outcome_profile(spec, scenario, quad)
    b = outcome_profile(spec, scenario, fine)
    return max(
        max(abs(x - y) for x, y in zip(a.expected_payments, b.expected_payments)),
        max(abs(x - y) for x, y in zip(a.expected_utilities, b.expected_utilities)),
        abs(a.seller_revenue - b.seller_revenue),
    )
