"""Command line surface: spec ingestion, pipeline orchestration, report files.

Subcommands: ``polarize``, ``coeffs``, ``eval``, ``asymptotics``, ``growth``,
``chsc-check``.  Every report is JSON with sorted keys (plus CSV for plotting
data), embeds the schema version, the potential's hash and the knobs that
produced it, and contains no timestamps, so re-running a command with the
same configuration writes byte-identical files.

Exit codes: 0 when every verdict in the run passed, 1 when a verdict failed,
2 for invalid input (spec validation, missing files, insufficient degree).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from .chsc import chsc_coefficients, verdict_record
from .coefficients import (
    CoefficientTable,
    amplitude_from_b,
    bergman_coefficients,
    derivative_norm_table,
)
from .growth import (
    exp_factorial_bound_check,
    fit_growth,
    truncation_minimizer,
    worst_case_norm_table,
)
from .kernel import (
    choose_truncation_order,
    eval_KN,
    log_asymptotic_fit,
    make_chsc_closed_evaluator,
    make_series_evaluator,
    scaling_fit,
)
from .potential import (
    DegreeBudgetError,
    PotentialSpec,
    SpecValidationError,
    build_geometry,
    check_good_contour,
    make_preset,
    polarize,
)
from .transport import reconstruct_coefficients, transport_chain

SCHEMA_VERSION = 1


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: Path, rows: list, fieldnames: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _spec_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", type=Path, help="potential spec file (JSON)")
    parser.add_argument("--preset", choices=["flat", "chsc", "quartic"])
    parser.add_argument("--n", type=int, default=1, help="dimension for presets")
    parser.add_argument(
        "--param", default=None,
        help="preset parameter: curvature c for chsc, weight t for quartic (exact, e.g. 1, -1, 1/10)",
    )
    parser.add_argument("--degree", type=int, default=None, help="truncation degree")
    parser.add_argument("--radius", type=float, default=None, help="evaluation radius")


def _load_spec(args) -> PotentialSpec:
    if args.spec is not None:
        if not args.spec.exists():
            raise FileNotFoundError(f"spec file not found: {args.spec}")
        spec = PotentialSpec.from_file(args.spec)
    elif args.preset is not None:
        if args.degree is None:
            raise SpecValidationError("presets need an explicit --degree")
        spec = make_preset(args.preset, args.n, args.degree, args.param, args.radius)
    else:
        raise SpecValidationError("provide either --spec or --preset")
    spec.validate()
    return spec


def _spec_config(args) -> dict:
    return {
        "spec": str(args.spec) if args.spec else None,
        "preset": args.preset,
        "n": args.n,
        "param": str(args.param) if args.param is not None else None,
        "degree": args.degree,
        "radius": args.radius,
    }


def _parse_point(text: str, n: int) -> list:
    parts = text.split(",")
    if len(parts) != n:
        raise SpecValidationError(f"point {text!r} has {len(parts)} components, expected {n}")
    return [complex(p.strip()) for p in parts]


def _load_table(path: Path) -> CoefficientTable:
    if not path.exists():
        raise FileNotFoundError(f"coefficient file not found: {path}")
    with open(path) as fh:
        rec = json.load(fh)
    return CoefficientTable.from_record(rec["table"])


# -- subcommands --------------------------------------------------------------


def cmd_polarize(args) -> int:
    spec = _load_spec(args)
    geom = build_geometry(spec)
    contour = check_good_contour(
        spec, geom.psi, samples=args.samples, delta=args.delta
    )
    out = Path(args.out)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "polarize",
        "config": {**_spec_config(args), "samples": args.samples, "delta": args.delta},
        "spec_sha256": spec.sha256(),
        "spec": spec.to_record(),
        "psi": geom.psi.to_record(),
        "psi_x": [s.to_record() for s in geom.psi_x],
        "theta": [s.to_record() for s in geom.theta],
        "z_of_theta": [s.to_record() for s in geom.z_of_theta],
        "delta0_xyz": geom.delta0_xyz.to_record(),
        "delta0_xytheta": geom.delta0_xytheta.to_record(),
    }
    _write_json(out / "geometry.json", payload)
    _write_json(
        out / "contour.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "polarize",
            "spec_sha256": spec.sha256(),
            "report": contour.to_dict(),
        },
    )
    print(f"good contour (delta={contour.delta:g}): {'PASS' if contour.passed else 'FAIL'}")
    return 0 if contour.passed else 1


def cmd_coeffs(args) -> int:
    spec = _load_spec(args)
    geom = build_geometry(spec)
    table = amplitude_from_b(bergman_coefficients(geom, args.order), geom)
    t_order = min(args.transport_order, args.order)
    chain = transport_chain(geom, t_order)
    recon = reconstruct_coefficients(geom, chain)
    mismatches = [m for m in range(t_order + 1) if recon[m] != table.b[m]]
    ok = not mismatches
    out = Path(args.out)
    _write_json(
        out / "coefficients.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "coeffs",
            "config": {**_spec_config(args), "order": args.order},
            "spec_sha256": spec.sha256(),
            "table": table.to_record(),
        },
    )
    _write_json(
        out / "transport.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "coeffs",
            "spec_sha256": spec.sha256(),
            "chain": chain.to_record(),
            "reconstructed_b": [s.to_record() for s in recon],
        },
    )
    _write_json(
        out / "crosscheck.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "coeffs",
            "spec_sha256": spec.sha256(),
            "orders_compared": t_order,
            "mismatched_orders": mismatches,
            "cross_check": "pass" if ok else "fail",
        },
    )
    print(f"transport cross-check to order {t_order}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_eval(args) -> int:
    spec = _load_spec(args)
    geom = build_geometry(spec)
    table = _load_table(Path(args.coeffs))
    if table.spec_sha256 != spec.sha256():
        print("warning: coefficient file was built from a different spec", file=sys.stderr)
    x = _parse_point(args.x, spec.n)
    y = _parse_point(args.y, spec.n)
    clamped = False
    if args.order is not None:
        order = args.order
    else:
        order = choose_truncation_order(args.k, args.C, table.M)
        clamped = order < int((args.k / args.C) ** 0.5)
        if clamped:
            print(f"note: truncation order clamped to available M={order}", file=sys.stderr)
    report = eval_KN(geom, table, args.k, order, x, y)
    _write_json(
        Path(args.out) / "kernel_report.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "eval",
            "config": {
                **_spec_config(args),
                "k": args.k,
                "order": args.order,
                "C": args.C,
                "x": args.x,
                "y": args.y,
            },
            "spec_sha256": spec.sha256(),
            "truncation_order_clamped": clamped,
            "report": report.to_dict(),
        },
    )
    print(f"K_weighted = {report.K_weighted:.12g} at k={args.k}, N={order}")
    return 0


def cmd_asymptotics(args) -> int:
    k_grid = [int(v) for v in args.k_grid.split(",")]
    if args.closed_form:
        if args.preset != "chsc":
            raise SpecValidationError("--closed-form is only available for the chsc preset")
        c = Fraction(args.param if args.param is not None else 1)
        n = args.n
        evaluator = make_chsc_closed_evaluator(n, c, N=max(n, 1))
        spec_hash = None
    else:
        spec = _load_spec(args)
        n = spec.n
        table = _load_table(Path(args.coeffs))
        geom = build_geometry(spec)
        evaluator = make_series_evaluator(geom, table)
        spec_hash = spec.sha256()
    if args.mode == "log":
        x = _parse_point(args.x, n)
        y = _parse_point(args.y, n)
        fit = log_asymptotic_fit(evaluator, k_grid, (x, y))
    else:
        u = _parse_point(args.x, n)
        v = _parse_point(args.y, n)
        fit = scaling_fit(evaluator, n, k_grid, u, v)
    if fit.all_zero:
        passed = True
    else:
        passed = fit.slope is not None and fit.slope <= args.max_slope
    out = Path(args.out)
    _write_json(
        out / "asymptotics.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "asymptotics",
            "config": {
                **_spec_config(args),
                "mode": args.mode,
                "k_grid": k_grid,
                "x": args.x,
                "y": args.y,
                "closed_form": args.closed_form,
                "max_slope": args.max_slope,
            },
            "spec_sha256": spec_hash,
            "fit": fit.to_dict(),
            "verdict": "pass" if passed else "fail",
        },
    )
    _write_csv(
        out / "asymptotics.csv",
        [{"k": k, "residual": r} for k, r in zip(fit.ks, fit.residuals)],
        ["k", "residual"],
    )
    slope_text = "exact zero" if fit.all_zero else f"slope {fit.slope:.4f}"
    print(f"{args.mode} asymptotics: {slope_text}: {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def cmd_growth(args) -> int:
    out = Path(args.out)
    if args.task == "fit":
        spec = _load_spec(args)
        geom = build_geometry(spec)
        table = _load_table(Path(args.coeffs))
        norms = derivative_norm_table(
            table, geom, args.norm_radius, args.grid, xi_max=args.xi_max
        )
        fit = fit_growth(norms, model=args.model)
        _write_json(
            out / "growth_fit.json",
            {
                "schema_version": SCHEMA_VERSION,
                "command": "growth",
                "config": {
                    **_spec_config(args),
                    "task": "fit",
                    "norm_radius": args.norm_radius,
                    "grid": args.grid,
                    "xi_max": args.xi_max,
                    "model": args.model,
                },
                "spec_sha256": spec.sha256(),
                "fit": fit.to_dict(),
            },
        )
        _write_csv(
            out / "norms.csv",
            norms.csv_rows(),
            ["m", "xi", "norm", "normalized", "radius", "grid"],
        )
        ok = fit.verdict.startswith(("pass", "vanishing"))
        print(f"growth fit ({args.model}): {fit.verdict}")
        return 0 if ok else 1
    if args.task == "worst-case":
        from math import factorial

        table = worst_case_norm_table(args.n, args.order, args.kmax)
        rows = []
        ok = True
        for (m, k), value in sorted(table.items()):
            bound = factorial(2 * m - 2 + k) if m >= 1 else None
            ratio = None if not bound else float(value / bound)
            if m >= 1 and value < bound:
                ok = False
            rows.append(
                {
                    "m": m,
                    "k": k,
                    "value": str(value),
                    "lower_bound": str(bound) if bound else "",
                    "ratio": ratio if ratio is not None else "",
                }
            )
        zero_ok = all(
            table[(m, 0)] >= Fraction(1, 4**m) * factorial(m) ** 2
            for m in range(1, args.order + 1)
        )
        ok = ok and zero_ok
        _write_json(
            out / "worst_case.json",
            {
                "schema_version": SCHEMA_VERSION,
                "command": "growth",
                "config": {"task": "worst-case", "n": args.n, "order": args.order, "kmax": args.kmax},
                "directional_bound": "pass" if ok else "fail",
                "verdict": "pass" if ok else "fail",
            },
        )
        _write_csv(out / "worst_case.csv", rows, ["m", "k", "value", "lower_bound", "ratio"])
        print(f"worst-case lower bounds: {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1
    if args.task == "truncation":
        scan = truncation_minimizer(args.C, args.k)
        ok = scan.unimodal and scan.within_one_of_target and scan.stirling_bound_ok
        _write_json(
            out / "truncation.json",
            {
                "schema_version": SCHEMA_VERSION,
                "command": "growth",
                "config": {"task": "truncation", "C": args.C, "k": args.k},
                "scan": scan.to_dict(),
                "verdict": "pass" if ok else "fail",
            },
        )
        print(f"truncation scan: argmin={scan.argmin}: {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1
    # lemma sweep
    sweep = exp_factorial_bound_check(
        deltas=tuple(float(d) for d in args.deltas.split(",")),
        n_max=args.n_max,
        k_max=args.k_max,
    )
    _write_json(
        out / "lemma_sweep.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "growth",
            "config": {
                "task": "lemma",
                "deltas": args.deltas,
                "n_max": args.n_max,
                "k_max": args.k_max,
            },
            "sweep": sweep.to_dict(),
            "verdict": "pass" if sweep.passed else "fail",
        },
    )
    print(f"exponential-factorial sweep: {'PASS' if sweep.passed else 'FAIL'}")
    return 0 if sweep.passed else 1


def cmd_chsc_check(args) -> int:
    c = Fraction(args.param if args.param is not None else 1)
    record = verdict_record(args.n, c, args.order)
    degree = max(2 * args.order + 2, 4)
    geom = build_geometry(make_preset("chsc", args.n, degree, c))
    table = bergman_coefficients(geom, args.order)
    closed = chsc_coefficients(args.n, c, args.order)
    cross_ok = True
    for m in range(args.order + 1):
        series = table.b[m]
        if len(series.coeffs) > 1 or series.constant_term != closed[m]:
            cross_ok = False
    record["cross_check_vs_bbs"] = "pass" if cross_ok else "fail"
    ok = cross_ok and record["polynomial_check"] == "pass"
    _write_json(
        Path(args.out) / "chsc_check.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "chsc-check",
            "config": {"n": args.n, "c": str(c), "order": args.order, "degree": degree},
            "result": record,
            "verdict": "pass" if ok else "fail",
        },
    )
    print(
        f"chsc n={args.n} c={c}: polynomial {record['polynomial_check']}, "
        f"recursion cross-check {record['cross_check_vs_bbs']}"
    )
    return 0 if ok else 1


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bergman",
        description="Bergman kernel coefficient engine: geometry, coefficients, asymptotics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("polarize", help="build and store the series geometry")
    _spec_options(p)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_polarize)

    p = sub.add_parser("coeffs", help="coefficients by both methods plus cross-check")
    _spec_options(p)
    p.add_argument("--order", type=int, required=True, help="highest order M")
    p.add_argument("--transport-order", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_coeffs)

    p = sub.add_parser("eval", help="evaluate the order-N kernel at one pair")
    _spec_options(p)
    p.add_argument("--coeffs", required=True, help="coefficients.json from the coeffs command")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--order", type=int, default=None, help="fixed order N (default: from C)")
    p.add_argument("--C", type=float, default=1.0, help="constant in N0(k) = sqrt(k/C)")
    p.add_argument("--x", required=True, help="comma separated complex components")
    p.add_argument("--y", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("asymptotics", help="decay-law residual fits over a k grid")
    _spec_options(p)
    p.add_argument("--mode", choices=["log", "scaling"], default="log")
    p.add_argument("--coeffs", default=None)
    p.add_argument("--closed-form", action="store_true")
    p.add_argument("--k-grid", default="64,128,256,512,1024,2048,4096")
    p.add_argument("--x", required=True, help="pair point (u for scaling mode)")
    p.add_argument("--y", required=True, help="pair point (v for scaling mode)")
    p.add_argument("--max-slope", type=float, default=-1.8)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_asymptotics)

    p = sub.add_parser("growth", help="growth fits, worst-case table, truncation rules")
    _spec_options(p)
    p.add_argument("--task", choices=["fit", "worst-case", "truncation", "lemma"], required=True)
    p.add_argument("--coeffs", default=None)
    p.add_argument("--norm-radius", type=float, default=0.1)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--xi-max", type=int, default=0)
    p.add_argument("--model", choices=["m_factorial_sq", "m_factorial"], default="m_factorial_sq")
    p.add_argument("--order", type=int, default=4, help="M for fit/worst-case tasks")
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--deltas", default="0.1,0.5,1,2")
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--k-max", type=int, default=10000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_growth)

    p = sub.add_parser("chsc-check", help="closed-form curvature family verdicts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--param", default="1", help="curvature c (exact rational)")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_chsc_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "order", None) is None and args.command == "chsc-check":
        args.order = args.n + 2
    try:
        return args.fn(args)
    except (SpecValidationError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DegreeBudgetError as err:
        print(f"error: {err} (required degree {err.required_degree})", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
