"""Budget-extracting and optimal parameter tuples for the five mechanisms.

Routes:
  solve_dual          - projected gradient descent on the convex Lagrangian
                        dual (bdfpa, broa)
  solve_max_tuple     - monotone Gauss-Seidel coordinate ascent to the
                        entrywise-maximum feasible tuple (bdfpa, pfpa)
  solve_symmetric_spa - bisection on the common multiplier of a symmetric
                        second-price scenario (bdspa, pspa)
plus feasibility/complementarity diagnostics and the bdfpa uniqueness check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import evaluate
from .errors import AsymmetricScenario, DegenerateInput, NonConvergence
from .mechanisms import MechanismSpec

FEAS_TOL = 1e-6
COMP_TOL = 1e-5
PAY_TOL = 1e-8


@dataclass
class UniquenessVerdict:
    unique: bool
    reason: str
    nu: float | None = None
    witness_params: tuple | None = None
    witness_payments: tuple | None = None
    max_payment_delta: float | None = None

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}


@dataclass
class SolveReport:
    kind: str
    method: str
    params: tuple
    payments: tuple
    residuals: tuple
    converged: bool
    iterations: int
    tau: tuple | None = None
    duality_gap: float | None = None
    uniqueness: UniquenessVerdict | None = None
    trace: list = field(default_factory=list)

    def to_dict(self, include_trace=False):
        d = {
            "kind": self.kind,
            "method": self.method,
            "params": list(self.params),
            "payments": list(self.payments),
            "residuals": list(self.residuals),
            "converged": self.converged,
            "iterations": self.iterations,
            "tau": None if self.tau is None else list(self.tau),
            "duality_gap": self.duality_gap,
            "uniqueness": None if self.uniqueness is None else self.uniqueness.to_dict(),
        }
        if include_trace:
            d["trace"] = self.trace
        return d


def _spec(kind, theta):
    return MechanismSpec(kind, tuple(np.clip(theta, 0.0, 1.0)))


def _payments(kind, scenario, theta, quad):
    spec = _spec(kind, theta)
    return np.array([evaluate.expected_payment(spec, scenario, i, quad)
                     for i in range(scenario.n)])


def _residuals(theta, payments, budgets):
    """Complementarity residual min(1 - theta_i, rho_i - p_i) per buyer."""
    return np.minimum(1.0 - np.asarray(theta), np.asarray(budgets) - payments)


def _check_scores_increasing(kind, scenario):
    for i in range(scenario.n):
        h = scenario.virtual_qf(i) if kind == "broa" else scenario.qfs[i]
        g = np.linspace(0.0, 1.0, 1025)
        vals = np.atleast_1d(h(g))
        if np.any(np.diff(vals) < -1e-9) or vals[-1] <= vals[0]:
            raise DegenerateInput(
                f"score qf of buyer {i} is not increasing; "
                f"{'strict regularity' if kind == 'broa' else 'a strictly increasing qf'}"
                " is required")


def dual_value(kind, scenario, tau, quad=None):
    """Lagrangian dual chi(tau) = E[max_i {(1-tau_i) h_i(q_i) - lambda}^+]
    + sum tau_i rho_i, with h the bidding qf (bdfpa) or virtual qf (broa)."""
    if kind not in ("bdfpa", "broa"):
        raise ValueError("dual_value supports kinds 'bdfpa' and 'broa'")
    quad = quad or evaluate.QuadratureConfig()
    # the tail probability is smooth between the kink values collected below,
    # so Gauss-Legendre panels keep chi smooth in tau at machine precision;
    # trapezoid noise there would put a floor under the descent
    quad = evaluate.QuadratureConfig(quad.node_count, rule="gauss-legendre",
                                     singularity_split=quad.singularity_split)
    tau = np.asarray(tau, dtype=float)
    lam = scenario.opportunity_cost
    weights = 1.0 - tau
    hs = [scenario.virtual_qf(i) if kind == "broa" else scenario.qfs[i]
          for i in range(scenario.n)]
    tops = [weights[i] * float(hs[i](1.0)) for i in range(scenario.n)]
    s_max = max(tops)
    linear = float(np.dot(tau, scenario.budgets))
    if s_max <= lam:
        return linear

    breaks = set()
    for i, h in enumerate(hs):
        if weights[i] <= 0.0:
            continue
        # include both endpoints: the cdf saturates at the buyer's top score,
        # which is a kink of the tail probability when it sits below s_max.
        # h can jump at a kink (virtual qf of a pwl qf), leaving the cdf flat
        # between the one-sided limits, so both limit values are kinks too
        for b in (0.0, 1.0) + tuple(h.breakpoints()):
            for q in (b, max(b - 1e-9, 0.0)):
                w = weights[i] * float(h(q))
                if lam < w < s_max:
                    breaks.add(w)
                    breaks.add(w - 1e-9)

    def tail_prob(t):
        prod = np.ones_like(t)
        for i, h in enumerate(hs):
            if weights[i] <= 0.0:
                continue
            prod = prod * np.atleast_1d(h.cdf(t / weights[i]))
        return 1.0 - prod

    val = evaluate.integrate_1d(tail_prob, lam, s_max, breaks, quad)
    return float(val[0]) + linear


def solve_dual(kind, scenario, quad=None, *, residual_tol=1e-6, max_iters=10**4,
               keep_trace=False):
    """Projected gradient descent on chi over [0,1]^n.

    Gradient is (rho_i - p_i(1 - tau)); step sizes come from Armijo
    backtracking (halving from 1.0) with clamping to the box.  Stops when
    the worst complementarity residual drops below residual_tol.
    """
    if kind not in ("bdfpa", "broa"):
        raise ValueError("solve_dual supports kinds 'bdfpa' and 'broa'")
    quad = quad or evaluate.QuadratureConfig()
    _check_scores_increasing(kind, scenario)
    # the gradient must line up with chi to well below residual_tol, so
    # evaluate the payments with the same panel rule dual_value uses
    gquad = evaluate.QuadratureConfig(quad.node_count, rule="gauss-legendre",
                                      singularity_split=quad.singularity_split)
    rho = np.asarray(scenario.budgets)
    tau = np.zeros(scenario.n)
    chi = dual_value(kind, scenario, tau, quad)
    trace = []
    payments = _payments(kind, scenario, 1.0 - tau, gquad)
    for it in range(max_iters):
        grad = rho - payments
        res = np.minimum(tau, rho - payments)
        worst = float(np.max(np.abs(res)))
        if keep_trace:
            trace.append({"iter": it, "chi": chi, "max_residual": worst})
        if worst <= residual_tol and np.all(payments <= rho + FEAS_TOL):
            theta = tuple(1.0 - tau)
            gap = abs(chi - _revenue_from(payments, scenario, kind, theta, quad))
            return SolveReport(kind, "dual", theta, tuple(payments),
                               tuple(res), True, it, tuple(tau), gap, trace=trace)
        step = 1.0
        accepted = False
        for _ in range(50):
            cand = np.clip(tau - step * grad, 0.0, 1.0)
            move = cand - tau
            if np.max(np.abs(move)) < 1e-16:
                break
            cand_chi = dual_value(kind, scenario, cand, quad)
            if cand_chi <= chi + float(grad @ move) + float(move @ move) / (2.0 * step):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise NonConvergence(
                "projected gradient stalled before reaching the residual target",
                residuals=tuple(res), iterations=it)
        tau, chi = cand, cand_chi
        payments = _payments(kind, scenario, 1.0 - tau, gquad)
    raise NonConvergence("projected gradient reached the iteration cap",
                         residuals=tuple(np.minimum(tau, rho - payments)),
                         iterations=max_iters)


def _revenue_from(payments, scenario, kind, theta, quad):
    prof = evaluate.outcome_profile(_spec(kind, theta), scenario, quad)
    return prof.seller_revenue


def solve_max_tuple(kind, scenario, quad=None, *, sweep_tol=1e-8, max_sweeps=500,
                    keep_trace=False):
    """Gauss-Seidel coordinate ascent from theta = 0 to the maximum feasible
    tuple: each pass sets theta_i to the largest value keeping p_i <= rho_i
    given the others.  Iterates are entrywise nondecreasing."""
    if kind not in ("bdfpa", "pfpa"):
        raise ValueError("solve_max_tuple supports kinds 'bdfpa' and 'pfpa'")
    quad = quad or evaluate.QuadratureConfig()
    import warnings

    from .qfspace import inverse_lipschitz_lower
    for i, qf in enumerate(scenario.qfs):
        if inverse_lipschitz_lower(qf) <= 0.0:
            warnings.warn(f"buyer {i}'s qf has a flat segment; the maximum "
                          "tuple may not be well-defined", stacklevel=2)
    rho = np.asarray(scenario.budgets)
    theta = np.zeros(scenario.n)
    trace = []
    for sweep in range(max_sweeps):
        prev = theta.copy()
        for i in range(scenario.n):
            def excess(ti):
                t = theta.copy()
                t[i] = ti
                return evaluate.expected_payment(_spec(kind, t), scenario, i, quad) - rho[i]
            flat_tol = 1e-12
            if excess(1.0) <= flat_tol:
                theta[i] = 1.0
                continue
            if excess(theta[i]) >= 0.0:
                # earlier sweeps can leave the excess at +epsilon
                root = theta[i]
            else:
                root = brentq(excess, theta[i], 1.0, xtol=1e-12)
            # the update is the largest feasible theta_i, so when the payment
            # is flat at the root (always-win stretch), walk to its right edge
            probe = min(1.0, root + 1e-9)
            if excess(probe) <= flat_tol:
                lo, hi = probe, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if excess(mid) <= flat_tol:
                        lo = mid
                    else:
                        hi = mid
                root = lo
            theta[i] = root
        if np.any(theta < prev - 1e-12):
            raise NonConvergence("coordinate ascent iterate decreased",
                                 iterations=sweep)
        move = float(np.max(theta - prev))
        if keep_trace:
            trace.append({"sweep": sweep, "theta": list(theta), "move": move})
        if move <= sweep_tol:
            payments = _payments(kind, scenario, theta, quad)
            res = _residuals(theta, payments, rho)
            return SolveReport(kind, "max-tuple", tuple(theta), tuple(payments),
                               tuple(res), True, sweep + 1, trace=trace)
    raise NonConvergence("coordinate ascent reached the sweep cap",
                         iterations=max_sweeps)


def _require_symmetric(scenario):
    g = np.linspace(0.0, 1.0, 257)
    ref = np.atleast_1d(scenario.qfs[0](g))
    for i in range(1, scenario.n):
        if abs(scenario.budgets[i] - scenario.budgets[0]) > 1e-12:
            raise AsymmetricScenario("budgets differ across buyers")
        if np.max(np.abs(np.atleast_1d(scenario.qfs[i](g)) - ref)) > 1e-9:
            raise AsymmetricScenario("bidding qfs differ across buyers")


def symmetric_payment(kind, scenario, m, quad):
    """Per-buyer expected payment at the common multiplier m."""
    return evaluate.expected_payment(_spec(kind, np.full(scenario.n, m)),
                                     scenario, 0, quad)


def solve_symmetric_multiplier(kind, scenario, quad=None, *, xtol=1e-10):
    """Common budget-extracting multiplier of a symmetric scenario.

    Returns 1 when the payment at multiplier 1 fits the budget, else the
    root of payment(m) = rho (payment is increasing in m).  Valid for all
    four bid-based kinds.
    """
    quad = quad or evaluate.QuadratureConfig()
    _require_symmetric(scenario)
    rho = scenario.budgets[0]
    f = lambda m: symmetric_payment(kind, scenario, m, quad) - rho
    if f(1.0) <= 0.0:
        return 1.0, 1
    lo = 0.5
    evals = 1
    while f(lo) > 0.0:
        lo *= 0.5
        evals += 1
        if lo < 1e-12:
            raise NonConvergence("could not bracket the symmetric multiplier")
    root = brentq(f, lo, 1.0, xtol=xtol)
    return float(root), evals


def solve_symmetric_spa(kind, scenario, quad=None, *, xtol=1e-10):
    """Budget-extracting common multiplier for symmetric bdspa / pspa."""
    if kind not in ("bdspa", "pspa"):
        raise ValueError("solve_symmetric_spa supports kinds 'bdspa' and 'pspa'")
    quad = quad or evaluate.QuadratureConfig()
    m, evals = solve_symmetric_multiplier(kind, scenario, quad, xtol=xtol)
    theta = np.full(scenario.n, m)
    payments = _payments(kind, scenario, theta, quad)
    res = _residuals(theta, payments, np.asarray(scenario.budgets))
    return SolveReport(kind, "symmetric", tuple(theta), tuple(payments),
                       tuple(res), True, evals)


def check_uniqueness_ebdfpa(scenario, report, quad=None):
    """Uniqueness of the budget-extracting bdfpa tuple (on the max tuple).

    Unique iff (a) the positive-payment buyers can never all out-price the
    reserve-or-dead-buyer ceiling, or (b) some positive-payment buyer has
    budget slack.  Otherwise a common down-scaling nu of the positive-payment
    multipliers yields the same payments; the witness is verified.
    """
    quad = quad or evaluate.QuadratureConfig()
    alpha = np.asarray(report.params)
    payments = np.asarray(report.payments)
    rho = np.asarray(scenario.budgets)
    i1 = [i for i in range(scenario.n) if payments[i] > PAY_TOL]
    i2 = [i for i in range(scenario.n) if payments[i] <= PAY_TOL]
    if not i1:
        return UniquenessVerdict(True, "no buyer ever pays")

    floor = max([scenario.opportunity_cost]
                + [alpha[i] * float(scenario.qfs[i](1.0)) for i in i2])
    head = max(alpha[i] * float(scenario.qfs[i](0.0)) for i in i1)
    if head <= floor + 1e-12:
        return UniquenessVerdict(True, "lowest winning scores cannot clear the "
                                       "reserve ceiling (condition a)")
    if any(payments[i] < rho[i] - FEAS_TOL for i in i1):
        return UniquenessVerdict(True, "a paying buyer has budget slack "
                                       "(condition b)")

    nu = 0.5 * (floor / head + 1.0)
    witness = alpha.copy()
    for i in i1:
        witness[i] = nu * alpha[i]
    for i in i2:
        witness[i] = 0.0
    w_pay = _payments("bdfpa", scenario, witness, quad)
    delta = float(np.max(np.abs(w_pay - payments)))
    return UniquenessVerdict(False, "all budgets bind and the reserve never "
                                    "filters any paying buyer",
                             nu=nu, witness_params=tuple(witness),
                             witness_payments=tuple(w_pay),
                             max_payment_delta=delta)
