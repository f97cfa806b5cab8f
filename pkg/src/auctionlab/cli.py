"""Command-line interface: eval, solve, map, example, validate.

Exit codes: 2 malformed input, 3 evaluation non-convergence, 4 solver
non-convergence, 5 certification failure, 6 validation failure.
"""
from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import evaluate, mechanisms, oracle, qfspace, solvers, transforms
from .errors import (AsymmetricScenario, AuctionlabError, CertificationFailure,
                     DegenerateInput, MalformedScenario, NonConvergence,
                     RootBracketFailure)
from .mechanisms import KINDS, MechanismSpec, Scenario

EXIT_MALFORMED = 2
EXIT_EVAL = 3
EXIT_SOLVER = 4
EXIT_CERTIFICATION = 5
EXIT_VALIDATION = 6


def load_scenario(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedScenario(f"cannot read scenario {path}: {exc}") from exc
    try:
        lam = float(doc["lambda"])
        buyers = doc["buyers"]
        qfs, budgets, value_qfs = [], [], []
        has_values = False
        for k, b in enumerate(buyers):
            try:
                qfs.append(qfspace.from_dict(b["qf"]))
                budgets.append(float(b["budget"]))
                if b.get("value_qf") is not None:
                    value_qfs.append(qfspace.from_dict(b["value_qf"]))
                    has_values = True
                else:
                    value_qfs.append(None)
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedScenario(f"buyers[{k}]: {exc}") from exc
        if has_values:
            value_qfs = tuple(v if v is not None else qfs[k]
                              for k, v in enumerate(value_qfs))
        else:
            value_qfs = None
        return Scenario(tuple(qfs), tuple(budgets), lam, value_qfs)
    except MalformedScenario:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedScenario(f"invalid scenario document: {exc}") from exc


def _parse_kind(name):
    # accept both 'bdfpa' and the budget-extracting spelling 'ebdfpa'
    kind = name.lower()
    if kind.startswith("e") and kind[1:] in KINDS:
        kind = kind[1:]
    if kind not in KINDS:
        raise click.UsageError(f"unknown mechanism {name!r}")
    return kind


def _parse_params(text, n):
    try:
        params = tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise click.UsageError(f"bad --params {text!r}: {exc}")
    if len(params) != n:
        raise click.UsageError(f"--params needs {n} comma-separated entries")
    return params


def _quad(nodes):
    return evaluate.QuadratureConfig(node_count=nodes)


@click.group()
def main():
    """Numerical toolkit for budget-constrained parameterized auctions."""


@main.command("eval")
@click.argument("scenario_path", type=click.Path())
@click.option("--mechanism", required=True)
@click.option("--params", required=True)
@click.option("--nodes", default=4096, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]),
              default="table", show_default=True)
def cmd_eval(scenario_path, mechanism, params, nodes, fmt):
    """Evaluate an outcome profile by quadrature."""
    try:
        scenario = load_scenario(scenario_path)
        kind = _parse_kind(mechanism)
        spec = MechanismSpec(kind, _parse_params(params, scenario.n))
    except (MalformedScenario, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_MALFORMED)
    quad = _quad(nodes)
    profile = evaluate.outcome_profile(spec, scenario, quad)
    delta = evaluate.convergence_delta(spec, scenario, quad)
    if delta > 1e-6:
        click.echo(f"error: quadrature did not converge (refinement delta {delta:.2e})",
                   err=True)
        sys.exit(EXIT_EVAL)
    if fmt == "json":
        click.echo(json.dumps(profile.to_dict(), indent=2))
    elif fmt == "csv":
        click.echo("buyer,expected_payment,expected_utility,win_probability")
        for i in range(scenario.n):
            click.echo(f"{i},{profile.expected_payments[i]:.10f},"
                       f"{profile.expected_utilities[i]:.10f},"
                       f"{profile.win_probabilities[i]:.10f}")
        click.echo(f"seller_revenue,{profile.seller_revenue:.10f},,")
    else:
        click.echo(f"{'buyer':>6} {'payment':>12} {'utility':>12} {'win prob':>12}")
        for i in range(scenario.n):
            click.echo(f"{i:>6} {profile.expected_payments[i]:>12.6f} "
                       f"{profile.expected_utilities[i]:>12.6f} "
                       f"{profile.win_probabilities[i]:>12.6f}")
        click.echo(f"seller revenue: {profile.seller_revenue:.6f}  "
                   f"(sold with prob {profile.allocation_probability:.6f})")


_METHODS = {"dual": ("bdfpa", "broa"), "max-tuple": ("bdfpa", "pfpa"),
            "symmetric": ("bdspa", "pspa")}


@main.command("solve")
@click.argument("scenario_path", type=click.Path())
@click.option("--mechanism", required=True)
@click.option("--method", type=click.Choice(sorted(_METHODS)), required=True)
@click.option("--tol", default=1e-6, show_default=True)
@click.option("--nodes", default=4096, show_default=True)
@click.option("--trace", is_flag=True)
def cmd_solve(scenario_path, mechanism, method, tol, nodes, trace):
    """Compute a budget-extracting parameter tuple."""
    try:
        scenario = load_scenario(scenario_path)
        kind = _parse_kind(mechanism)
    except (MalformedScenario, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_MALFORMED)
    if kind not in _METHODS[method]:
        raise click.UsageError(f"method {method!r} does not apply to {kind!r}")
    quad = _quad(nodes)
    try:
        if method == "dual":
            report = solvers.solve_dual(kind, scenario, quad, residual_tol=tol,
                                        keep_trace=trace)
        elif method == "max-tuple":
            report = solvers.solve_max_tuple(kind, scenario, quad,
                                             sweep_tol=min(tol, 1e-8),
                                             keep_trace=trace)
            if kind == "bdfpa":
                report.uniqueness = solvers.check_uniqueness_ebdfpa(
                    scenario, report, quad)
        else:
            report = solvers.solve_symmetric_spa(kind, scenario, quad)
    except (NonConvergence, DegenerateInput, AsymmetricScenario) as exc:
        click.echo(f"error: solver did not converge: {exc}", err=True)
        if isinstance(exc, NonConvergence) and exc.residuals is not None:
            click.echo(f"residuals: {list(exc.residuals)}", err=True)
        sys.exit(EXIT_SOLVER)
    click.echo(json.dumps(report.to_dict(include_trace=trace), indent=2))


@main.command("map")
@click.argument("scenario_path", type=click.Path())
@click.option("--from", "source", required=True)
@click.option("--to", "target", required=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--nodes", default=4096, show_default=True)
def cmd_map(scenario_path, source, target, out, nodes):
    """Map a mechanism onto a strategically equivalent one."""
    try:
        scenario = load_scenario(scenario_path)
        src = _parse_kind(source)
        dst = _parse_kind(target)
    except (MalformedScenario, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_MALFORMED)
    quad = _quad(nodes)
    try:
        if {src, dst} == {"broa", "bdfpa"}:
            mapped = (transforms.map_broa_to_ebdfpa(scenario, quad) if src == "broa"
                      else transforms.map_ebdfpa_to_broa(scenario, quad))
        elif "broa" not in (src, dst):
            try:
                mapped = transforms.map_symmetric(src, dst, scenario, quad)
            except AsymmetricScenario as exc:
                raise click.UsageError(
                    f"{src} -> {dst} mappings require a symmetric scenario: {exc}")
        else:
            raise click.UsageError(f"mapping {src} -> {dst} is not supported")
    except CertificationFailure as exc:
        click.echo(f"error: certification failed: {exc}", err=True)
        sys.exit(EXIT_CERTIFICATION)
    except (NonConvergence, DegenerateInput, RootBracketFailure) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    doc = json.dumps(mapped.to_dict(), indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(doc + "\n")
        click.echo(f"certified with discrepancy {mapped.discrepancy:.3e}; wrote {out}")
    else:
        click.echo(doc)


EXAMPLE_REFERENCE = {
    "columns": ("eBDFPA", "ePFPA", "BROA", "eBDSPA", "ePSPA"),
    "payments": (0.312, 0.312, 0.207, 0.171, 0.171),
    "revenues": (0.54, 0.525, 0.344, 0.243, 0.243),
    "exhausted": ("Yes", "Yes", "No", "No", "No"),
}


def example_scenario():
    """Two uniform buyers with budget 0.312 and opportunity cost 0.1."""
    u = qfspace.Uniform(0.0, 1.0)
    return Scenario((u, u), (0.312, 0.312), 0.1)


def compute_example_table(nodes=4096):
    scenario = example_scenario()
    quad = _quad(nodes)
    reports = (
        solvers.solve_max_tuple("bdfpa", scenario, quad),
        solvers.solve_max_tuple("pfpa", scenario, quad),
        solvers.solve_dual("broa", scenario, quad),
        solvers.solve_symmetric_spa("bdspa", scenario, quad),
        solvers.solve_symmetric_spa("pspa", scenario, quad),
    )
    payments, revenues, exhausted = [], [], []
    for rep in reports:
        prof = evaluate.outcome_profile(MechanismSpec(rep.kind, rep.params),
                                        scenario, quad)
        payments.append(prof.expected_payments[0])
        revenues.append(prof.seller_revenue)
        exhausted.append("Yes" if prof.expected_payments[0] >= 0.312 - 1e-3 else "No")
    return payments, revenues, exhausted


@main.command("example")
@click.option("--nodes", default=4096, show_default=True)
def cmd_example(nodes):
    """Reproduce the built-in worked example's summary table."""
    payments, revenues, exhausted = compute_example_table(nodes)
    ref = EXAMPLE_REFERENCE
    cols = ref["columns"]
    width = 12

    def row(label, cells):
        click.echo(f"{label:<24}" + "".join(f"{c:>{width}}" for c in cells))

    row("", cols)
    row("Each buyer's payment", [f"{p:.4f}" for p in payments])
    row("  reference", [f"{p:.3f}" for p in ref["payments"]])
    row("Seller's revenue", [f"{r:.4f}" for r in revenues])
    row("  reference", [f"{r:.3f}" for r in ref["revenues"]])
    row("Budget exhausted?", exhausted)
    row("  reference", ref["exhausted"])
    deltas = [abs(p - r) for p, r in zip(payments, ref["payments"])]
    deltas += [abs(w - r) for w, r in zip(revenues, ref["revenues"])]
    row("", [])
    click.echo(f"max abs delta: {max(deltas):.2e}")
    if max(deltas) > 2e-3 or tuple(exhausted) != ref["exhausted"]:
        click.echo("error: example table deviates from the reference", err=True)
        sys.exit(1)


@main.command("validate")
@click.argument("scenario_path", type=click.Path())
@click.option("--samples", default=10**6, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--nodes", default=1024, show_default=True)
@click.option("--mechanism", default=None,
              help="with --params: only check budget feasibility of the tuple")
@click.option("--params", default=None)
def cmd_validate(scenario_path, samples, seed, nodes, mechanism, params):
    """Cross-check quadrature against Monte Carlo and the ex-post properties."""
    try:
        scenario = load_scenario(scenario_path)
    except MalformedScenario as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_MALFORMED)
    quad = _quad(nodes)
    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        click.echo(f"[{status}] {name}" + (f": {detail}" if detail else ""))

    if mechanism is not None and params is not None:
        kind = _parse_kind(mechanism)
        spec = MechanismSpec(kind, _parse_params(params, scenario.n))
        pays = [evaluate.expected_payment(spec, scenario, i, quad)
                for i in range(scenario.n)]
        ok = all(p <= rho + 1e-4 for p, rho in zip(pays, scenario.budgets))
        check("budget feasibility", ok,
              f"payments {['%.4f' % p for p in pays]} vs budgets {list(scenario.budgets)}")
        sys.exit(EXIT_VALIDATION if failures else 0)

    report = solvers.solve_max_tuple("bdfpa", scenario, quad)
    spec = MechanismSpec("bdfpa", report.params)
    prof = evaluate.outcome_profile(spec, scenario, quad)
    mc = oracle.mc_outcome_profile(spec, scenario, samples, seed)
    for i in range(scenario.n):
        err = abs(prof.expected_payments[i] - mc.payments[i].mean)
        bound = 3 * mc.payments[i].standard_error + 1e-9
        check(f"quadrature vs MC payment, buyer {i}", err <= bound,
              f"|{prof.expected_payments[i]:.6f} - {mc.payments[i].mean:.6f}| "
              f"vs 3se {bound:.2e}")
    err = abs(prof.seller_revenue - mc.revenue.mean)
    check("quadrature vs MC revenue", err <= 3 * mc.revenue.standard_error + 1e-9)

    check("budget feasibility at the max tuple",
          all(p <= rho + 1e-4 for p, rho in zip(report.payments, scenario.budgets)))

    truthful = Scenario(scenario.qfs, scenario.budgets, scenario.opportunity_cost,
                        scenario.qfs)
    regular = all(truthful.virtual_qf(i).increasing_on_grid(2049, tol=1e-9)
                  for i in range(truthful.n))
    rng = np.random.Generator(np.random.Philox(key=[seed, 2**32]))
    Q = rng.random((min(samples, 10**5), truthful.n))
    for kind in KINDS:
        if kind == "broa" and not regular:
            continue
        k_spec = MechanismSpec(kind, report.params if kind != "broa"
                               else tuple([1.0] * truthful.n))
        winner, payment = mechanisms.allocate_batch(k_spec, truthful, Q)
        sold = winner >= 0
        vals = np.column_stack([truthful.qfs[i](Q[:, i]) for i in range(truthful.n)])
        win_values = vals[np.arange(len(winner)), np.maximum(winner, 0)]
        worst = float(np.min(np.where(sold, win_values - payment, 0.0))) if len(Q) else 0.0
        check(f"ex-post IR ({kind})", worst >= -1e-9, f"worst utility {worst:.2e}")

    gain, case = oracle.bcic_deviation_test(truthful, tuple([1.0] * truthful.n),
                                            kind="bdspa", quad=quad)
    check("bdspa deviation-proofness", gain <= 1e-4, f"max gain {gain:.2e} at {case}")

    if regular:
        broa_rep = solvers.solve_dual("broa", scenario, quad, residual_tol=1e-5)
        broa_rev = evaluate.outcome_profile(MechanismSpec("broa", broa_rep.params),
                                            scenario, quad).seller_revenue
        pf_rep = solvers.solve_max_tuple("pfpa", scenario, quad)
        pf_rev = evaluate.outcome_profile(MechanismSpec("pfpa", pf_rep.params),
                                          scenario, quad).seller_revenue
        check("revenue dominance (ebdfpa >= broa)",
              prof.seller_revenue >= broa_rev - 1e-3,
              f"{prof.seller_revenue:.6f} vs {broa_rev:.6f}")
        check("revenue dominance (ebdfpa >= epfpa)",
              prof.seller_revenue >= pf_rev - 1e-3,
              f"{prof.seller_revenue:.6f} vs {pf_rev:.6f}")

    sys.exit(EXIT_VALIDATION if failures else 0)


if __name__ == "__main__":
    main()
