"""Command-line interface.

Grammar:
    qh <dist|check-separation|verify-lemmas|profile|countnonpsi|theorem11>
       --scenario FILE [flags]

Exit codes are a stable contract: 0 success, 2 usage or scenario errors,
3 geometry errors (points outside the domain), 4 a check was refuted,
5 undecided results remain, 6 infeasible construction, 7 covering failure.

QH_THREADS (positive integer) optionally caps internal parallelism; outputs
are byte-identical regardless of the thread count.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import analysis
from .analysis import (CheckReport, CoveringError, GaugeRangeError,
                       PlacementError, PsiSpec, annulus_net_table,
                       check_separation, close_pair_suite, detour_bound_suite,
                       distance_transfer_suite, isolation_suite,
                       path_transfer_suite, psi_admissible, psi_profile,
                       removability_backward_suite, removability_forward_suite,
                       uniformity_profile)
from .domains import Domain, GeometryError, SchemaError, domain_from_json, \
    domain_to_json
from .normed_space import DimensionMismatchError
from .qh_metric import GraphParams, k_bracket
from .quadrature import CertificationError, QuadratureParams
from .reporting import (fmt_point, make_report, render_domain_svg,
                        render_profile_svg, write_csv, write_json)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GEOMETRY = 3
EXIT_REFUTED = 4
EXIT_UNDECIDED = 5
EXIT_INFEASIBLE = 6
EXIT_COVERING = 7


class ScenarioError(ValueError):
    pass


def _load_scenario(path: str | None) -> dict:
    if path is None:
        raise ScenarioError("--scenario FILE is required for this command")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "domain" not in doc:
        raise ScenarioError('scenario must be an object with a "domain" key')
    return doc


def _domain_of(scenario: dict) -> Domain:
    try:
        return domain_from_json(scenario["domain"])
    except SchemaError as exc:
        raise ScenarioError(str(exc)) from exc


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        if text.strip().startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(tok) for tok in text.split(",")]
        arr = np.asarray(vals, dtype=float)
    except (ValueError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot parse point {text!r}") from exc
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ScenarioError(
            f"point {text!r} does not match the domain dimension {dim}")
    return arr


def _graph_params(args, seed: int) -> GraphParams:
    return GraphParams(node_budget=args.node_budget,
                       ring_levels=args.ring_levels,
                       refine_rounds=args.refine_rounds,
                       target_ratio=args.target_ratio,
                       seed=seed)


def _quad_params(args) -> QuadratureParams:
    return QuadratureParams(rel_tol=args.rel_tol, max_depth=args.max_depth)


def _seed_of(args, scenario: dict | None) -> int:
    if args.seed is not None:
        return args.seed
    if scenario is not None and isinstance(scenario.get("seed"), int):
        return scenario["seed"]
    return 0


def _check_records_rows(report: CheckReport) -> list[list]:
    return [[report.suite, r.index, r.status, r.lhs, r.rhs, r.note]
            for r in report.records]


def _report_counts(report: CheckReport) -> dict:
    return {"suite": report.suite, "trials": report.trials,
            "confirmed": report.confirmed, "inconclusive": report.inconclusive,
            "refuted": report.refuted, "skipped": report.skipped,
            "worst_slack": report.worst_slack}


def _emit(args, report: dict, csv_header: list[str] | None = None,
          csv_rows: list[list] | None = None) -> None:
    if getattr(args, "json", None):
        write_json(args.json, report)
    if getattr(args, "csv", None) and csv_header is not None:
        write_csv(args.csv, csv_header, csv_rows or [])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_dist(args) -> int:
    scenario = _load_scenario(args.scenario)
    domain = _domain_of(scenario)
    seed = _seed_of(args, scenario)
    z1 = _parse_point(args.z1, domain.space.dim)
    z2 = _parse_point(args.z2, domain.space.dim)
    graph = _graph_params(args, seed)
    quad = _quad_params(args)
    t0 = time.perf_counter()
    bracket = k_bracket(domain, z1, z2, graph, quad)
    wall = time.perf_counter() - t0
    n_witness = len(bracket.witness) if bracket.witness is not None else 0
    payload = {
        "z1": z1.tolist(), "z2": z2.tolist(),
        "lower": bracket.lower, "upper": bracket.upper,
        "witness_vertices": n_witness,
    }
    report = make_report("dist", domain_to_json(domain), seed,
                         {"node_budget": graph.node_budget,
                          "ring_levels": graph.ring_levels,
                          "refine_rounds": graph.refine_rounds,
                          "target_ratio": graph.target_ratio,
                          "rel_tol": quad.rel_tol}, payload)
    _emit(args, report,
          ["lower", "upper", "witness_vertices", "z1", "z2"],
          [[bracket.lower, bracket.upper, n_witness,
            fmt_point(z1), fmt_point(z2)]])
    if args.svg:
        if domain.space.dim != 2:
            raise ScenarioError("--svg requires a 2-d domain")
        paths = (bracket.witness,) if bracket.witness is not None else ()
        render_domain_svg(domain, args.svg, paths, title="distance bracket")
    print(f"bracket [{bracket.lower!r}, {bracket.upper!r}] "
          f"witness vertices: {n_witness} ({wall:.3f}s)")
    return EXIT_OK


def cmd_check_separation(args) -> int:
    scenario = _load_scenario(args.scenario)
    domain = _domain_of(scenario)
    if len(domain.punctures) == 0:
        raise ScenarioError("check-separation needs a scenario with punctures")
    seed = _seed_of(args, scenario)
    graph = _graph_params(args, seed)
    quad = _quad_params(args)
    kappa = args.kappa
    try:
        rep = check_separation(domain, kappa, graph, quad)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    payload = {
        "kappa": rep.kappa,
        "verdict": rep.verdict,
        "pairs": [{"i": p.i, "j": p.j, "lower": p.lower, "upper": p.upper,
                   "status": p.status} for p in rep.pairs],
    }
    report = make_report("check-separation", domain_to_json(domain), seed,
                         {"kappa": rep.kappa}, payload)
    _emit(args, report, ["i", "j", "lower", "upper", "status"],
          [[p.i, p.j, p.lower, p.upper, p.status] for p in rep.pairs])
    print(f"separation at kappa={rep.kappa!r}: {rep.verdict} "
          f"({len(rep.pairs)} pairs)")
    if rep.verdict == analysis.REFUTED:
        return EXIT_REFUTED
    if rep.verdict == analysis.INCONCLUSIVE:
        return EXIT_UNDECIDED
    return EXIT_OK


_SUITE_IDS = ("31", "32", "33", "34", "35")


def _run_suite(suite: str, domain: Domain, trials: int, seed: int,
               graph: GraphParams, quad: QuadratureParams) -> CheckReport:
    if suite == "31":
        return isolation_suite(domain, trials, seed)
    if suite == "32":
        return close_pair_suite(domain, trials, seed, graph, quad)
    if suite == "33":
        return detour_bound_suite(domain, trials, seed, graph, quad)
    if suite == "34":
        return path_transfer_suite(domain, trials, seed, graph, quad)
    if suite == "35":
        return distance_transfer_suite(domain, trials, seed)
    raise ScenarioError(f"unknown suite {suite!r}")


def cmd_verify_lemmas(args) -> int:
    scenario = _load_scenario(args.scenario)
    domain = _domain_of(scenario)
    seed = _seed_of(args, scenario)
    graph = _graph_params(args, seed)
    quad = _quad_params(args)
    if not (1 <= args.trials <= MAX_PAIRS):
        raise ScenarioError(f"--trials must lie in [1, {MAX_PAIRS}]")
    suites = _SUITE_IDS if args.lemma == "all" else (args.lemma,)
    reports = []
    try:
        for suite in suites:
            reports.append(_run_suite(suite, domain, args.trials, seed,
                                      graph, quad))
    except (PlacementError, ValueError) as exc:
        print(f"infeasible construction: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    payload = {"suites": [dict(_report_counts(r),
                               records=[{"trial": rec.index,
                                         "status": rec.status,
                                         "lhs": rec.lhs, "rhs": rec.rhs,
                                         "note": rec.note}
                                        for rec in r.records])
                          for r in reports]}
    report = make_report("verify-lemmas", domain_to_json(domain), seed,
                         {"lemma": args.lemma, "trials": args.trials}, payload)
    rows = [row for r in reports for row in _check_records_rows(r)]
    _emit(args, report, ["suite", "trial", "status", "lhs", "rhs", "note"], rows)
    for r in reports:
        print(f"suite {r.suite}: trials={r.trials} confirmed={r.confirmed} "
              f"inconclusive={r.inconclusive} refuted={r.refuted} "
              f"skipped={r.skipped}")
    if any(r.refuted for r in reports):
        return EXIT_REFUTED
    return EXIT_OK


MAX_PAIRS = 100_000  # desk-scale guard keeping worst-case runtime in minutes


def cmd_profile(args) -> int:
    if not (1 <= args.pairs <= MAX_PAIRS):
        raise ScenarioError(f"--pairs must lie in [1, {MAX_PAIRS}]")
    scenario = _load_scenario(args.scenario)
    domain = _domain_of(scenario)
    seed = _seed_of(args, scenario)
    quad = _quad_params(args)
    if args.mode == "psi":
        prof = psi_profile(domain, args.pairs, seed, None, quad)
        samples = prof.samples
        payload = {
            "mode": "psi",
            "samples": [{"t": s.t, "k_low": s.k_low, "k_up": s.k_up,
                         "j": s.j_val} for s in samples],
            "envelope": {"t_edges": prof.bin_edges.tolist(),
                         "values": prof.bin_values.tolist()},
        }
        envelope = (prof.bin_edges, prof.bin_values)
        extra_summary = f"envelope bins: {len(prof.bin_edges)}"
    else:
        uni = uniformity_profile(domain, args.pairs, seed, None, quad)
        samples = uni.samples
        payload = {
            "mode": "uniform",
            "samples": [{"t": s.t, "k_low": s.k_low, "k_up": s.k_up,
                         "j": s.j_val} for s in samples],
            "max_ratio": uni.max_ratio,
            "fit": {"slope": uni.fit_slope, "intercept": uni.fit_intercept},
        }
        envelope = None
        extra_summary = (f"max ratio {uni.max_ratio!r}, majorant "
                         f"{uni.fit_slope!r} * j + {uni.fit_intercept!r}")
    report = make_report("profile", domain_to_json(domain), seed,
                         {"mode": args.mode, "pairs": args.pairs}, payload)
    _emit(args, report, ["index", "t", "k_low", "k_up", "j"],
          [[i, s.t, s.k_low, s.k_up, s.j_val] for i, s in enumerate(samples)])
    if args.svg:
        ts = np.array([s.t for s in samples])
        ups = np.array([s.k_up for s in samples])
        render_profile_svg(ts, ups, args.svg, envelope,
                           title=f"{args.mode} profile")
    print(f"profiled {len(samples)} pairs; {extra_summary}")
    return EXIT_OK


def cmd_countnonpsi(args) -> int:
    if not (10 <= args.jmin <= args.jmax <= 14):
        raise ScenarioError("need 10 <= jmin <= jmax <= 14 (desk-scale guard)")
    rows = annulus_net_table(args.jmin, args.jmax)
    payload = {"rows": [{"j": r.j, "r": r.r, "net_size": r.net_size,
                         "covering_verified": r.covering_verified,
                         "covering_radius_bound": r.covering_radius_bound,
                         "t_j": r.t_j, "k_lower_bound": r.k_lower_bound}
                        for r in rows]}
    report = make_report("countnonpsi", None, _seed_of(args, None),
                         {"jmin": args.jmin, "jmax": args.jmax}, payload)
    _emit(args, report,
          ["j", "r", "net_size", "covering_verified", "covering_radius_bound",
           "t_j", "k_lower_bound"],
          [[r.j, r.r, r.net_size, r.covering_verified,
            r.covering_radius_bound, r.t_j, r.k_lower_bound] for r in rows])
    for r in rows:
        print(f"j={r.j}: t_j={r.t_j!r} k_lower_bound={r.k_lower_bound!r} "
              f"covering={'ok' if r.covering_verified else 'FAILED'}")
    if not all(r.covering_verified for r in rows):
        return EXIT_COVERING
    if not all(r.k_lower_bound >= r.j for r in rows):
        return EXIT_COVERING
    return EXIT_OK


def cmd_theorem11(args) -> int:
    if not (1 <= args.pairs <= MAX_PAIRS):
        raise ScenarioError(f"--pairs must lie in [1, {MAX_PAIRS}]")
    scenario = _load_scenario(args.scenario)
    domain = _domain_of(scenario)
    if len(domain.punctures) == 0:
        raise ScenarioError("theorem11 needs a scenario with punctures")
    seed = _seed_of(args, scenario)
    quad = _quad_params(args)
    if args.direction == "forward":
        psi = PsiSpec.parametric(args.psi_a, args.psi_b)
        if not psi_admissible(psi, np.geomspace(1e-3, 1e3, 61)):
            raise ScenarioError(
                "gauge fails admissibility: psi(t) >= log(1+t) is required")
        try:
            rep = removability_forward_suite(domain, psi, args.pairs, seed,
                                             None, quad)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        params = {"direction": "forward", "pairs": args.pairs,
                  "psi_a": args.psi_a, "psi_b": args.psi_b}
        psi_doc = {"kind": "parametric", "a": args.psi_a, "b": args.psi_b}
    else:
        rep, psi1 = removability_backward_suite(domain, args.pairs, seed,
                                                None, quad,
                                                envelope_pairs=args.pairs)
        params = {"direction": "backward", "pairs": args.pairs}
        psi_doc = {"kind": "tabulated", "t_edges": psi1.t_edges.tolist(),
                   "values": psi1.values.tolist()}
    payload = dict(_report_counts(rep), psi=psi_doc,
                   records=[{"trial": r.index, "status": r.status,
                             "lhs": r.lhs, "rhs": r.rhs, "note": r.note}
                            for r in rep.records])
    report = make_report("theorem11", domain_to_json(domain), seed, params,
                         payload)
    _emit(args, report, ["trial", "status", "lhs", "rhs", "note"],
          [[r.index, r.status, r.lhs, r.rhs, r.note] for r in rep.records])
    print(f"{args.direction}: trials={rep.trials} confirmed={rep.confirmed} "
          f"inconclusive={rep.inconclusive} refuted={rep.refuted}")
    return EXIT_REFUTED if rep.refuted else EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, scenario_required: bool = True):
    p.add_argument("--scenario", required=scenario_required, metavar="FILE",
                   help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: scenario seed or 0)")
    p.add_argument("--json", metavar="PATH", help="write the JSON report here")
    p.add_argument("--csv", metavar="PATH", help="write the CSV rows here")
    p.add_argument("--node-budget", type=int, default=2000)
    p.add_argument("--ring-levels", type=int, default=12)
    p.add_argument("--refine-rounds", type=int, default=3)
    p.add_argument("--target-ratio", type=float, default=1.05)
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--max-depth", type=int, default=40)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qh",
        description="Certified quasihyperbolic distance brackets and "
                    "verification suites for punctured domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="bracket the distance between two points")
    _add_common(p)
    p.add_argument("--z1", required=True,
                   help="first point, e.g. '0,1' (use --z1=-1,0 for negatives)")
    p.add_argument("--z2", required=True, help="second point")
    p.add_argument("--svg", metavar="PATH", help="render a 2-d figure")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("check-separation",
                       help="bracket pairwise puncture separations")
    _add_common(p)
    p.add_argument("--kappa", type=float, default=None,
                   help="separation level (default: scenario kappa)")
    p.set_defaults(func=cmd_check_separation)

    p = sub.add_parser("verify-lemmas", help="run the built-in check suites")
    _add_common(p)
    p.add_argument("--lemma", choices=list(_SUITE_IDS) + ["all"],
                   default="all", help="suite id")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("profile", help="sample distance-ratio profiles")
    _add_common(p)
    p.add_argument("--mode", choices=["psi", "uniform"], required=True)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--svg", metavar="PATH", help="render the scatter figure")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("countnonpsi",
                       help="annulus-net witness table (bounded ratios, "
                            "diverging distances)")
    _add_common(p, scenario_required=False)
    p.add_argument("--jmin", type=int, required=True)
    p.add_argument("--jmax", type=int, required=True)
    p.set_defaults(func=cmd_countnonpsi)

    p = sub.add_parser("theorem11", help="removability transfer checks")
    _add_common(p)
    p.add_argument("--direction", choices=["forward", "backward"],
                   required=True)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--psi-a", type=float, default=2.0,
                   help="forward gauge coefficient a in a*log(1+b t)")
    p.add_argument("--psi-b", type=float, default=1.0)
    p.set_defaults(func=cmd_theorem11)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except CertificationError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (ScenarioError, SchemaError, DimensionMismatchError,
            GaugeRangeError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlacementError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CoveringError as exc:
        print(f"covering failure: {exc}", file=sys.stderr)
        return EXIT_COVERING


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
