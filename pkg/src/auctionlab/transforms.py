"""Strategic-equivalence constructions between the mechanisms.

The virtualize/devirtualize pair (g, h), the lifting repair of negative
virtual heads, the broa <-> budget-extracting bdfpa mappings, and the
symmetric constructions between all four bid-based budget-extracting
mechanisms.  Every mapping is certified by double evaluation of the
utility-revenue profile; a MappedProfile is never returned uncertified.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import evaluate, solvers
from .errors import CertificationFailure, PreconditionViolation, RootBracketFailure
from .mechanisms import MechanismSpec, Scenario
from .qfspace import (ExpHead, IntegralAverage, PiecewiseLinear, PowerTail,
                      SinHead, Uniform, virtualize)

MAP_TOL = 1e-4
Q0_TOL = 1e-12


@dataclass
class MappedProfile:
    source_kind: str
    source_params: tuple
    source_scenario: Scenario
    target_kind: str
    target_params: tuple
    target_scenario: Scenario
    source_profile: evaluate.OutcomeProfile
    target_profile: evaluate.OutcomeProfile
    discrepancy: float

    def to_dict(self):
        return {
            "source": {
                "kind": self.source_kind,
                "params": list(self.source_params),
                "qfs": [f.to_dict() for f in self.source_scenario.qfs],
                "profile": self.source_profile.to_dict(),
            },
            "target": {
                "kind": self.target_kind,
                "params": list(self.target_params),
                "qfs": [f.to_dict() for f in self.target_scenario.qfs],
                "profile": self.target_profile.to_dict(),
            },
            "discrepancy": self.discrepancy,
        }


def devirtualize(r):
    """The mapping h: s(x) = (integral of r over [x,1]) / (1-x).

    Inverts virtualize: r(x) = s(x) - (1-x) s'(x).  Requires r strictly
    increasing with r(1) in (0,1] and a non-negative mean.
    """
    g = np.linspace(0.0, 1.0, 1025)
    vals = np.atleast_1d(r(g))
    if np.any(np.diff(vals) < -1e-12) or vals[-1] <= vals[0]:
        raise PreconditionViolation("devirtualize requires a strictly increasing input")
    r1 = float(r(1.0))
    if not (0.0 < r1 <= 1.0 + 1e-12):
        raise PreconditionViolation("devirtualize requires r(1) in (0, 1]")
    if float(r.integral_to_one(0.0)) < -1e-12:
        raise PreconditionViolation("devirtualize requires a non-negative mean")
    return IntegralAverage(r)


def lift(psi, lam):
    """Repair a negative virtual head so bid-discounting can mimic broa.

    Returns psi unchanged when it is already non-negative.  Otherwise the
    head below the half-reserve crossing q0 is replaced by an exponential
    (or, at zero slope, trigonometric) piece that stays positive and caps
    at lam/2; the function is unchanged wherever it exceeds lam/2, so
    allocations above the reserve are preserved.  When psi jumps across
    lam/2 the head joins with a jump rather than chase the right limit,
    which could climb past the reserve and win spurious allocations.
    """
    if float(psi(1.0)) < lam - 1e-12:
        raise PreconditionViolation("buyer can never win: psi(1) < lambda; drop her instead")
    if float(psi(0.0)) >= 0.0:
        return psi
    lo, hi = 0.0, 1.0
    target = lam / 2.0
    while hi - lo > Q0_TOL:
        mid = 0.5 * (lo + hi)
        if float(psi(mid)) < target:
            lo = mid
        else:
            hi = mid
    q0 = hi
    c0 = float(psi(q0))  # lam/2 up to bisection error; larger in a jump gap
    c = min(c0, target)
    continuous = c0 <= target + 1e-9
    k = float(psi.derivative(q0))
    if k > 1e-9:
        a2 = k / c
        a1 = c * math.exp(-a2 * q0)
        return ExpHead(a1, a2, q0, psi, check=continuous)
    return SinHead(c / 2.0, math.pi / (4.0 * q0), q0, psi, check=continuous)


def _certify(source_kind, source_params, source_scenario,
             target_kind, target_params, target_scenario, quad, map_tol):
    sp = evaluate.outcome_profile(MechanismSpec(source_kind, source_params),
                                  source_scenario, quad)
    tp = evaluate.outcome_profile(MechanismSpec(target_kind, target_params),
                                  target_scenario, quad)
    disc = max(
        max(abs(a - b) for a, b in zip(sp.expected_payments, tp.expected_payments)),
        max(abs(a - b) for a, b in zip(sp.expected_utilities, tp.expected_utilities)),
        abs(sp.seller_revenue - tp.seller_revenue),
    )
    if disc > map_tol:
        raise CertificationFailure(
            f"profile mapping discrepancy {disc:.3e} exceeds {map_tol:.1e}",
            discrepancy=disc)
    return MappedProfile(source_kind, tuple(source_params), source_scenario,
                         target_kind, tuple(target_params), target_scenario,
                         sp, tp, disc)


def _value_qfs(scenario):
    return scenario.value_qfs if scenario.value_qfs is not None else scenario.qfs


def map_broa_to_ebdfpa(scenario, quad=None, map_tol=MAP_TOL):
    """Rebuild broa at its optimal shading as a bid-discounted first-price
    auction over the lifted virtual qfs; certified by double evaluation."""
    quad = quad or evaluate.QuadratureConfig()
    lam = scenario.opportunity_cost
    report = solvers.solve_dual("broa", scenario, quad)
    gamma = np.asarray(report.params)
    target_qfs = []
    for i in range(scenario.n):
        psi = scenario.virtual_qf(i)
        if float(psi(1.0)) < lam:
            # never wins on either side; park her below the reserve
            target_qfs.append(Uniform(0.0, lam / 2.0))
        else:
            target_qfs.append(lift(psi, lam))
    target = Scenario(tuple(target_qfs), scenario.budgets, lam,
                      tuple(_value_qfs(scenario)))
    return _certify("broa", tuple(gamma), scenario,
                    "bdfpa", tuple(gamma), target, quad, map_tol)


def map_ebdfpa_to_broa(scenario, quad=None, map_tol=MAP_TOL):
    """Rebuild budget-extracting bdfpa as a broa over the devirtualized qfs."""
    quad = quad or evaluate.QuadratureConfig()
    report = solvers.solve_dual("bdfpa", scenario, quad)
    alpha = np.asarray(report.params)
    target_qfs = tuple(devirtualize(f) for f in scenario.qfs)
    target = Scenario(target_qfs, scenario.budgets, scenario.opportunity_cost,
                      tuple(_value_qfs(scenario)))
    return _certify("bdfpa", tuple(alpha), scenario,
                    "broa", tuple(alpha), target, quad, map_tol)


_SYMMETRIC_KINDS = ("bdfpa", "pfpa", "bdspa", "pspa")


def _symmetric_family(c, lam, q0):
    """One-parameter family of common qfs with threshold value lam at q0.

    c in (0,1]: linear tail of slope c * k_max (Case 2 of the symmetric
    constructions); c in (1,2): power tail of exponent 2-c reaching 1 at
    q = 1 (Case 1).  Below q0 sits an exponential head meeting the tail.
    The per-buyer payment of any of the four mechanisms at multiplier 1 is
    continuous and increasing in c.
    """
    k_max = (1.0 - lam) / (1.0 - q0)
    if c <= 1.0:
        k = c * k_max
        top = lam + k * (1.0 - q0)
        if q0 <= 0.0:
            return PiecewiseLinear([0.0, 1.0], [lam, top])
        tail = PiecewiseLinear([0.0, q0, 1.0],
                               [max(0.0, lam - k * q0), lam, top])
        a2 = k / lam
        a1 = lam * math.exp(-a2 * q0)
        return ExpHead(a1, a2, q0, tail)
    a = 2.0 - c
    if q0 <= 0.0:
        return PowerTail(lam, 1.0 - lam, a, 0.0, None)
    a2 = k_max / lam
    a1 = lam * math.exp(-a2 * q0)
    head = ExpHead(a1, a2, 1.0, None)
    # exponent < 1 has unbounded slope at the join, so the head matches the
    # value only; check=False skips the derivative comparison.
    return PowerTail(lam, 1.0 - lam, a, q0, head, check=False)


def _solve_source_multiplier(kind, scenario, quad):
    m, _ = solvers.solve_symmetric_multiplier(kind, scenario, quad)
    return m


def map_symmetric(source_kind, target_kind, scenario, quad=None, map_tol=MAP_TOL):
    """Map a symmetric budget-extracting mechanism onto another kind.

    Matching the utility-revenue profile pins down the winning-quantile
    threshold q0 and the per-buyer payment P; the target is built at
    multiplier 1 from the qf family anchored at value lambda at q0, with the
    family parameter solved so the target payment equals P.
    """
    if source_kind not in _SYMMETRIC_KINDS or target_kind not in _SYMMETRIC_KINDS:
        raise ValueError("symmetric mappings cover bdfpa, pfpa, bdspa, pspa")
    quad = quad or evaluate.QuadratureConfig()
    lam = scenario.opportunity_cost
    n = scenario.n
    rho = scenario.budgets[0]
    u = scenario.qfs[0]
    values = tuple(_value_qfs(scenario))

    m_s = _solve_source_multiplier(source_kind, scenario, quad)
    src_params = tuple(np.full(n, m_s))

    if m_s * float(u(1.0)) < lam:
        # the item never sells on the source side; map to itself
        return _certify(source_kind, src_params, scenario,
                        target_kind, src_params, scenario, quad, map_tol)

    same_family = {source_kind, target_kind} <= {"bdfpa", "pfpa"} or \
                  {source_kind, target_kind} <= {"bdspa", "pspa"}
    if m_s >= 1.0 - 1e-12 and same_family:
        # at multiplier 1 the paired payment rules coincide; identity map
        return _certify(source_kind, src_params, scenario,
                        target_kind, src_params, scenario, quad, map_tol)

    q0 = 0.0 if m_s * float(u(0.0)) >= lam else float(u.cdf(lam / m_s))
    p_s = solvers.symmetric_payment(source_kind, scenario, m_s, quad)
    budget_binding = m_s < 1.0 - 1e-9

    def payment_at(qf, m):
        sc = Scenario((qf,) * n, scenario.budgets, lam, values)
        return solvers.symmetric_payment(target_kind, sc, m, quad)

    def finish(qf, m_t):
        target = Scenario((qf,) * n, scenario.budgets, lam, values)
        return _certify(source_kind, src_params, scenario,
                        target_kind, tuple(np.full(n, m_t)), target,
                        quad, map_tol)

    def solve_shape(c_lo, c_hi, anchor, m_t):
        # family parameter sweep at a fixed anchor value and multiplier
        f_lo = payment_at(_symmetric_family(c_lo, anchor, q0), m_t) - p_s
        f_hi = payment_at(_symmetric_family(c_hi, anchor, q0), m_t) - p_s
        if f_lo > 0.0 or f_hi < 0.0:
            raise RootBracketFailure(
                "target payment family cannot bracket the source payment",
                lo=c_lo, hi=c_hi, f_lo=f_lo + p_s, f_hi=f_hi + p_s)
        c_star = brentq(
            lambda c: payment_at(_symmetric_family(c, anchor, q0), m_t) - p_s,
            c_lo, c_hi, xtol=1e-10)
        return finish(_symmetric_family(c_star, anchor, q0), m_t)

    eps = 1e-6
    if target_kind in ("bdfpa", "pfpa"):
        # at multiplier 1 the anchored family spans every feasible payment
        return solve_shape(eps, 2.0 - eps, lam, 1.0)

    # second-price targets are floored at the reserve price
    p_lin = payment_at(_symmetric_family(1.0, lam, q0), 1.0)
    if p_s <= p_lin:
        return solve_shape(eps, 1.0, lam, 1.0)
    if target_kind == "pspa" or not budget_binding:
        # pspa pays the raw second score, so its floor stays at lam no
        # matter the multiplier; with a slack budget the multiplier is
        # pinned to 1 anyway.  Only the tail shape is free, and payments
        # above the all-ones tail are unreachable.
        return solve_shape(1.0, 2.0 - eps, lam, 1.0)
    # bdspa divides the price by the multiplier, so a binding budget lets
    # us raise the floor above lam while keeping payment = rho
    b_lo, b_hi = lam, 1.0 - eps
    f_lo = p_lin - p_s
    f_hi = payment_at(_symmetric_family(1.0, b_hi, q0), lam / b_hi) - p_s
    if f_hi < 0.0:
        raise RootBracketFailure(
            "price floor family cannot reach the source payment",
            lo=b_lo, hi=b_hi, f_lo=f_lo + p_s, f_hi=f_hi + p_s)
    b_star = brentq(
        lambda b: payment_at(_symmetric_family(1.0, b, q0), lam / b) - p_s,
        b_lo, b_hi, xtol=1e-10)
    return finish(_symmetric_family(1.0, b_star, q0), lam / b_star)
