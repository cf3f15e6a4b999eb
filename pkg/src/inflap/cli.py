"""Command-line front end.

Subcommands: solve, barrier, certify, lipschitz, viscosity, convergence.
Exit codes: 0 all checks passed, 1 a mathematical check failed (report is
still written), 2 usage or configuration error, 3 solver non-convergence.

Reports are JSON with the fixed schema {config, ledger, results, checks};
grids travel as CSV (header m,h,n then row-major values).  When --out is
given, figures land next to the report unless --no-figures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .barrier import (
    BarrierParams,
    check_window,
    choose_parameters,
    keq_lhs,
    omega_eval,
    verify_keq,
)
from .doubling import default_tau_w
from .figures import barrier_figure, convergence_figure, field_figure
from .grid import ScalarField
from .harness import theorem_report
from .report import Report, fmt
from .solver import (
    ConvergenceError,
    SolveConfig,
    cone_problem,
    convergence_study,
    linear_problem,
    manufactured_solution,
    solve,
)
from .viscosity import check_fb_condition, check_interior, extract_phases, fit_jet

__all__ = ["main"]

_PROFILES = ("prandtl", "cone", "linear")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="inflap",
        description="Two-phase infinity-Laplacian laboratory: solve, verify, certify.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, profile=True):
        sp.add_argument("--m", type=int, default=33, help="points per axis (odd >= 5)")
        sp.add_argument("--n", type=int, default=2, choices=(1, 2), help="dimension")
        if profile:
            sp.add_argument("--profile", choices=_PROFILES, default="prandtl")
            sp.add_argument("--C", type=float, default=1.0,
                            help="profile constant (prandtl C, cone/linear slope)")
            sp.add_argument("--grid-in", type=str, default=None,
                            help="load the field from a grid CSV instead of a profile")
            sp.add_argument("--fplus", type=float, default=-1.0,
                            help="constant positive-phase forcing for --grid-in")
            sp.add_argument("--fminus", type=float, default=1.0,
                            help="constant negative-phase forcing for --grid-in")
        sp.add_argument("--Lambda", type=float, default=None, help="flux bound")
        sp.add_argument("--kappa", type=float, default=0.125)
        sp.add_argument("--theta", type=float, default=0.5)
        sp.add_argument("--tol", type=float, default=1e-10, help="solver tolerance")
        sp.add_argument("--max-iters", dest="max_iters", type=int, default=200_000)
        sp.add_argument("--tau-w", dest="tau_w", type=float, default=None,
                        help="witness tolerance (default: 4x one-cell oscillation)")
        sp.add_argument("--seed", type=int, default=0, help="recorded in the report")
        sp.add_argument("--out", type=str, default=None, help="report JSON path")
        sp.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering next to --out")

    sp = sub.add_parser("solve", help="run the grid solver, write grid + report")
    common(sp)
    sp.add_argument("--out-grid", type=str, default=None, help="solution grid CSV path")

    sp = sub.add_parser("barrier", help="barrier parameter selection and keq check")
    common(sp, profile=False)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--L", type=float, default=None, help="default: the selected Lbar")
    sp.add_argument("--samples", type=int, default=10_000)

    sp = sub.add_parser("certify", help="end-to-end doubling certificate")
    common(sp)
    sp.add_argument("--L", type=float, default=None, help="force the ledger L")
    sp.add_argument("--K", type=float, default=None, help="force the ledger K")

    sp = sub.add_parser("lipschitz", help="exhaustive Lipschitz quotient report")
    common(sp)
    sp.add_argument("--radius", type=float, default=0.5)

    sp = sub.add_parser("viscosity", help="phase, jet and flux checks on a field")
    common(sp)

    sp = sub.add_parser("convergence", help="resolution sweep against exact solutions")
    common(sp)
    sp.add_argument("--m-list", type=str, default="17,33,65")
    return p


def _field_and_problem(args):
    if getattr(args, "grid_in", None):
        u = ScalarField.load_csv(args.grid_in)
        if u.m != args.m or u.n != args.n:
            args.m, args.n = u.m, u.n
        const = lambda v: ScalarField(n=u.n, m=u.m, values=np.full((u.m,) * u.n, v))
        from .solver import ProblemSpec

        problem = ProblemSpec(
            fplus=const(args.fplus), fminus=const(args.fminus),
            dirichlet=u.copy(), Lambda=args.Lambda or 1.0,
        )
        return u, problem
    if args.profile == "prandtl":
        u, problem = manufactured_solution(args.C, args.n, args.m)
    elif args.profile == "cone":
        vertex = (1.5,) + (0.0,) * (args.n - 1)
        u, problem = cone_problem(args.C, vertex, args.m, args.n,
                                  Lambda=args.Lambda or 1.0)
    else:
        u, problem = linear_problem(args.C, args.m, args.n,
                                    Lambda=args.Lambda or 1.0)
    if args.Lambda is not None and args.profile == "prandtl":
        problem.Lambda = args.Lambda
    return u, problem


def _config_dict(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())}
    return cfg


def _emit(report: Report, args, figure_cb=None) -> None:
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        report.save(out)
        if figure_cb is not None and not args.no_figures:
            figure_cb(out)
        print(f"report written to {out}")
    else:
        sys.stdout.write(report.to_json())


def _ledger_dict(ledger) -> dict:
    return {
        "Lambda": ledger.Lambda, "normFp": ledger.normFp, "normFm": ledger.normFm,
        "normU": ledger.normU, "varrho": ledger.varrho, "a": ledger.a,
        "b": ledger.b, "d": ledger.d, "K": ledger.K, "L": ledger.L,
        "Lbar": ledger.Lbar, "z0": ledger.z0,
        "rules": {k: bool(v) for k, v in ledger.rules_satisfied().items()},
    }


# ----------------------------------------------------------------- commands


def _cmd_barrier(args) -> int:
    params = BarrierParams(kappa=args.kappa, theta=args.theta)
    params.validate()
    chosen, Lbar = choose_parameters(args.K, args.a, args.b)
    if (args.kappa, args.theta) != (chosen.kappa, chosen.theta):
        kbar = params.kbar
        Lbar = max(2 * args.b / (args.a * kbar), (2 * args.K / (args.a * kbar)) ** (1 / 3), 1.0)
    L = args.L if args.L is not None else Lbar
    cert = verify_keq(params, L, args.a, args.b, args.K, args.samples)
    t = np.linspace(0.0, 1.0, args.samples + 2)[1:-1]
    _, om1, om2 = omega_eval(params, t)
    report = Report(
        config=_config_dict(args),
        ledger={"kappa": params.kappa, "theta": params.theta, "kbar": params.kbar,
                "Lbar": Lbar, "L": L, "K": args.K, "a": args.a, "b": args.b},
        results={"worst_margin": cert.worst_margin, "samples": cert.samples,
                 "window_ok": check_window(params, args.samples)},
    )
    report.add_check("keq: sup(aL^3 w''w'^2 + bL^2 w'^2) <= -K",
                     float(np.max(keq_lhs(params, L, args.a, args.b, t))), -args.K)
    report.add_check("window: omega' lower", 0.5, float(np.min(om1)))
    report.add_check("window: omega' upper", float(np.max(om1)), 1.0)
    report.add_check("window: omega'' negative", float(np.max(om2)), 0.0)
    _emit(report, args,
          lambda out: barrier_figure(params, L, args.a, args.b, args.K,
                                     out.with_suffix(".barrier.png")))
    return 0 if report.all_passed else 1


def _cmd_solve(args) -> int:
    u0, problem = _field_and_problem(args)
    config = SolveConfig(tol=args.tol, max_iters=args.max_iters)
    sol, iters, residual = solve(problem, problem.dirichlet.copy(), config)
    grid_path = args.out_grid or (str(Path(args.out).with_suffix(".grid.csv")) if args.out else None)
    if grid_path:
        sol.save_csv(grid_path)
    report = Report(
        config=_config_dict(args),
        ledger={},
        results={"iterations": iters, "residual": residual,
                 "sup_norm": sol.sup_norm(1.0),
                 "grid_file": grid_path or ""},
    )

    def figs(out):
        field_figure(sol, extract_phases(sol), None, out.with_suffix(".field.png"),
                     title=f"{args.profile} solution, m={args.m}")

    _emit(report, args, figs)
    return 0


def _cmd_certify(args) -> int:
    u, problem = _field_and_problem(args)
    params = BarrierParams(kappa=args.kappa, theta=args.theta)
    rep = theorem_report(u, problem, params, tau_w=args.tau_w,
                         L_override=args.L, K_override=args.K)
    led = rep.ledger
    tau_w = rep.tau_w
    report = Report(
        config=_config_dict(args),
        ledger=_ledger_dict(led),
        results={
            "sup_quotient": rep.sup_quotient,
            "arg_pair": [rep.arg_pair[0], rep.arg_pair[1]],
            "per_phase": rep.per_phase,
            "bound_value": rep.bound_value,
            "empirical_C": rep.empirical_C,
            "centers_scanned": len(rep.centers),
            "witness_centers": sum(1 for c in rep.centers if c.witness is not None),
            "tau_w": tau_w,
            "witness": None if rep.certificate is None else {
                "x0": rep.certificate.x0, "y0": rep.certificate.y0,
                "rho": rep.certificate.rho, "gap": rep.certificate.gap,
                "nu": rep.certificate.nu,
                "interiority_ok": rep.certificate.interiority_ok,
            },
            "case": None if rep.case_report is None else {
                "tag": rep.case_report.tag,
                "x_phase": rep.case_report.x_phase,
                "y_phase": rep.case_report.y_phase,
                "ledger_contradiction": rep.case_report.ledger_contradiction,
                "flux": None if rep.case_report.flux is None else {
                    "xi_norm": rep.case_report.flux.xi_norm,
                    "Lambda": rep.case_report.flux.Lambda,
                    "lower_bound": rep.case_report.flux.lower_bound,
                    "lastone_holds": rep.case_report.flux.lastone_holds,
                    "fbcond_violated": rep.case_report.flux.fbcond_violated,
                },
            },
            "chain": None if rep.chain_trace is None else {
                "lhs": rep.chain_trace.lhs, "rhs_bound": rep.chain_trace.rhs_bound,
                "iota": rep.chain_trace.iota, "lambda": rep.chain_trace.lam,
                "epsilon": rep.chain_trace.epsilon, "ok": rep.chain_trace.ok,
            },
        },
    )
    # keq at the ledger constants over a dense sample
    t = np.linspace(0.0, 1.0, 10_002)[1:-1]
    report.add_check("keq at ledger L",
                     float(np.max(keq_lhs(params, led.L, led.a, led.b, t))), -led.K)
    gap = 0.0 if rep.certificate is None else rep.certificate.gap
    report.add_check("no witness: max gap <= tau_w", gap, tau_w)
    bad_interior = sum(
        1 for c in rep.centers if c.witness is not None and not c.witness.interiority_ok
    )
    report.add_check("witness interiority violations", float(bad_interior), 0.0)
    report.add_check("sup quotient <= (L + varrho) + 2 tau_w/h",
                     rep.sup_quotient, rep.bound_value + 2.0 * tau_w / u.h)

    def figs(out):
        field_figure(u, extract_phases(u), rep.certificate,
                     out.with_suffix(".field.png"),
                     title=f"certify {args.profile}, m={args.m}")
        barrier_figure(params, led.L, led.a, led.b, led.K,
                       out.with_suffix(".barrier.png"))

    _emit(report, args, figs)
    return 0 if report.all_passed else 1


def _cmd_lipschitz(args) -> int:
    from .harness import lipschitz_quotient

    u, problem = _field_and_problem(args)
    q, pair = lipschitz_quotient(u, args.radius)
    report = Report(
        config=_config_dict(args), ledger={},
        results={"sup_quotient": q, "arg_pair": [pair[0], pair[1]],
                 "region_radius": args.radius},
    )
    _emit(report, args,
          lambda out: field_figure(u, extract_phases(u), None,
                                   out.with_suffix(".field.png"),
                                   title=f"lipschitz {args.profile}"))
    return 0


def _cmd_viscosity(args) -> int:
    u, problem = _field_and_problem(args)
    phases = extract_phases(u)
    overlap = int(np.sum(phases.pos & phases.neg) + np.sum(phases.pos & phases.fb)
                  + np.sum(phases.neg & phases.fb))
    report = Report(
        config=_config_dict(args), ledger={},
        results={"pos_cells": int(np.sum(phases.pos)),
                 "neg_cells": int(np.sum(phases.neg)),
                 "fb_cells": int(np.sum(phases.fb)),
                 "tol_zero": phases.tol_zero},
    )
    report.add_check("phase sets pairwise disjoint", float(overlap), 0.0)

    # interior equation at the first few phase nodes with full windows
    half = 3
    checked = 0
    worst = 0.0
    for idx in np.argwhere(phases.pos | phases.neg):
        idx = tuple(int(i) for i in idx)
        if any(i < half or i > u.m - 1 - half for i in idx):
            continue
        jet = fit_jet(u, idx, "super")
        if jet is None:
            continue
        res = check_interior(u, phases, problem, jet, tol=20.0 * u.h)
        worst = max(worst, res.slack)
        checked += 1
        if checked >= 50:
            break
    report.add_check("interior: worst super-side slack <= tol", worst, 20.0 * u.h)

    # flux condition at a free boundary node nearest the center, both sides
    fb_nodes = np.argwhere(phases.fb)
    if fb_nodes.size:
        center = np.array([(u.m - 1) // 2] * u.n)
        node = tuple(int(i) for i in fb_nodes[np.argmin(np.sum((fb_nodes - center) ** 2, axis=1))])
        t_list = [u.h * k for k in (1, 2, 3, 4)]
        for side in ("super", "sub"):
            jet = fit_jet(u, node, side)
            if jet is None or float(np.linalg.norm(jet.xi)) == 0.0:
                continue
            fr = check_fb_condition(u, node, jet, problem.Lambda, t_list)
            s = -fr.slope if fr.condition == "subsolution" else fr.slope
            report.add_check(f"fb {fr.condition} slope within Lambda",
                             s, problem.Lambda + fr.tol_slope)
    _emit(report, args,
          lambda out: field_figure(u, phases, None, out.with_suffix(".field.png"),
                                   title=f"viscosity {args.profile}"))
    return 0 if report.all_passed else 1


def _cmd_convergence(args) -> int:
    m_list = [int(s) for s in args.m_list.split(",")]

    def family(m: int):
        saved = args.m
        args.m = m
        try:
            u, problem = _field_and_problem(args)
        finally:
            args.m = saved
        return u, problem

    rows = convergence_study(family, m_list, SolveConfig(tol=args.tol, max_iters=args.max_iters))
    report = Report(
        config=_config_dict(args), ledger={},
        results={"table": [
            {"m": r.m, "h": r.h, "sup_error": r.sup_error,
             "residual": r.residual, "iterations": r.iterations}
            for r in rows
        ]},
    )
    for a, b in zip(rows, rows[1:]):
        report.add_check(f"error decreases m={a.m}->{b.m}", b.sup_error, a.sup_error)
    if args.out:
        table_path = Path(args.out).with_suffix(".table.csv")
        with open(table_path, "w", encoding="ascii") as fh:
            fh.write("m,h,sup_error,residual,iterations\n")
            for r in rows:
                fh.write(f"{r.m},{fmt(r.h)},{fmt(r.sup_error)},{fmt(r.residual)},{r.iterations}\n")
    _emit(report, args,
          lambda out: convergence_figure(rows, out.with_suffix(".convergence.png")))
    return 0 if report.all_passed else 1


_DISPATCH = {
    "solve": _cmd_solve,
    "barrier": _cmd_barrier,
    "certify": _cmd_certify,
    "lipschitz": _cmd_lipschitz,
    "viscosity": _cmd_viscosity,
    "convergence": _cmd_convergence,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _DISPATCH[args.command](args)
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
