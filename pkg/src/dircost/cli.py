"""Command line entry point: ``dircost {cost,region,simulate,helper-sweep,threshold-sweep}``.

Exit codes: 0 success, 2 invalid input, 3 infeasible linear program.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

from .binsim import BinSimConfig, BinSimError, run_power_binning, threshold_sweep
from .lpsolve import LinearProgram, LpError, check_solution, minimize
from .netgraph import DemandMap, PacketId, broadcast_costs, effective_costs
from .probkit import dsbs_star, hb
from .regions import (
    RateRegion,
    RateVar,
    broadcast_region,
    helper_analytic,
    helper_broadcast_region,
    helper_region,
    helper_sweep,
    power_binning_region,
    theorem1_region,
)
from .regions.helper import DEFAULT_WEIGHTS, R11, R22
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3

MODES = ("broadcast", "dir-power", "dir-thm1", "helper")
THM1_MAX_SIZE = 24  # N * 2^M, bounds the beta-tuple enumeration


class Infeasible(RuntimeError):
    pass


def fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, float) else str(x)


@dataclass
class Program:
    """A region plus the objective that the cost command minimises over it."""

    mode: str
    region: RateRegion
    objective: dict[RateVar, float]
    weights: dict[str, float] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _dsbs_params(sc: Scenario) -> tuple[float, float]:
    """(p1, p2) when the source pmf is the DSBS star, else ScenarioError."""
    pmf = sc.pmf
    if sorted(pmf.sources()) != [0, 1, 2] or any(v.size != 2 for v in pmf.variables):
        raise ScenarioError("sources", "helper mode needs binary sources 0, 1, 2")
    t = pmf.table.transpose([pmf.source_position(i) for i in (0, 1, 2)])
    p1 = float(t[0, 1, :].sum() + t[1, 0, :].sum())
    p2 = float(t[0, :, 1].sum() + t[1, :, 0].sum())
    if not (0 <= p1 <= 0.5 and 0 <= p2 <= 0.5):
        raise ScenarioError("pmf", "helper mode needs crossover probabilities at most 1/2")
    ref = dsbs_star(p1, p2).table
    if abs(ref - t).max() > 1e-9:
        raise ScenarioError("pmf", "helper mode needs X1, X2 to be X0 through independent binary symmetric channels")
    return p1, p2


def _helper_program(sc: Scenario) -> Program:
    if sc.demands.sigma != {1: frozenset({1}), 2: frozenset({2})}:
        raise ScenarioError("demands", "helper mode needs sink 1 -> [1], sink 2 -> [2] with source 0 as helper")
    p1, p2 = _dsbs_params(sc)
    if "delta" not in sc.hints:
        raise ScenarioError("hints.delta", "helper mode needs the excess rate delta")
    delta = sc.hints["delta"]
    if delta < 0:
        raise ScenarioError("hints.delta", "must be nonnegative")
    opt = helper_analytic(p1, p2, delta)
    region = helper_region(p1, p2, opt.aux)
    for var, p in ((R11, p1), (R22, p2)):
        region.add({var: -1.0}, -(hb(p) + delta), f"{var.name} <= H_b(p{var.source}) + delta")
    full = effective_costs(sc.network, DemandMap({1: [0, 1], 2: [0, 2]}))
    objective = {v: full[v.packet_id] for v in region.vars}
    b_region = helper_broadcast_region(p1, p2, min(opt.p01, opt.p02))
    b_weights = {RateVar.packet(0, (1, 2)): full[PacketId(0, (1, 2))], R11: full[PacketId(1, (1,))], R22: full[PacketId(2, (2,))]}
    b_sol = minimize(LinearProgram(b_region, b_weights))
    extra = {
        "p01": opt.p01,
        "p02": opt.p02,
        "aux": {"p_fine": opt.aux.p_fine, "p_cascade": opt.aux.p_cascade, "fine_sink": opt.aux.fine_sink},
        "broadcast_cost": b_sol.value,
        "broadcast_helper_rate": opt.broadcast_rate,
    }
    return Program("helper", region, objective, {str(p): w for p, w in full.items()}, extra)


def build_program(sc: Scenario, mode: str, no_helpers: bool = False) -> Program:
    if mode == "broadcast":
        region = broadcast_region(sc.pmf, sc.demands)
        w = broadcast_costs(sc.network, sc.demands)
        return Program(mode, region, {RateVar.broadcast(i): c for i, c in w.items()}, {f"{i}:broadcast": c for i, c in w.items()})
    if mode == "dir-power":
        region = power_binning_region(sc.pmf, sc.demands)
        w = effective_costs(sc.network, sc.demands, restrict_no_helpers=True)
        return Program(mode, region, {RateVar.of(p): c for p, c in w.items()}, {str(p): c for p, c in w.items()})
    if mode == "dir-thm1":
        if sc.aux_pmf is None:
            raise ScenarioError("auxiliaries", "dir-thm1 needs an auxiliaries block (constants are allowed)")
        size = len(sc.demands.sources) * 2 ** len(sc.demands.sinks)
        if size > THM1_MAX_SIZE:
            raise ScenarioError("demands", f"dir-thm1 supports N * 2^M <= {THM1_MAX_SIZE}, got {size}")
        region = theorem1_region(sc.aux_pmf, sc.demands)
        w = effective_costs(sc.network, sc.demands)
        if no_helpers:
            for p in w:
                if not p.sink_set <= sc.demands.pi[p.source]:
                    region.add({RateVar.of(p): -1.0}, 0.0, f"no helper packet {p}")
        return Program(mode, region, {RateVar.of(p): c for p, c in w.items()}, {str(p): c for p, c in w.items()})
    if mode == "helper":
        return _helper_program(sc)
    raise ScenarioError("mode", f"unknown mode {mode!r}")


def cost_report(prog: Program) -> dict:
    lp = LinearProgram(prog.region, prog.objective)
    sol = minimize(lp)
    if sol.status == "infeasible":
        raise Infeasible(f"{prog.mode}: the rate region is empty")
    if not sol.optimal:
        raise LpError(f"{prog.mode}: solver returned {sol.status}")
    problems = check_solution(lp, sol)
    if problems:
        raise LpError(f"{prog.mode}: optimum failed verification: {problems[:3]}")
    return {
        "mode": prog.mode,
        "cost": sol.value,
        "rates": {v.name: x for v, x in sol.assignment.items()},
        "packet_rates": {str(v.packet_id): x for v, x in sol.assignment.items() if v.kind == "packet"},
        "effective_costs": prog.weights,
        "constants": [{"label": c.label, "rhs": c.rhs} for c in prog.region.constraints],
        **prog.extra,
    }


def region_rows(region: RateRegion) -> tuple[list[str], list[list[str]]]:
    header = ["id"] + [v.name for v in region.vars] + ["sense", "rhs", "description"]
    rows = []
    for k, c in enumerate(region.constraints):
        rows.append([str(k)] + [fmt(c.coeffs.get(v, 0.0)) for v in region.vars] + [">=", fmt(c.rhs), c.label])
    return header, rows


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def parse_rates(text: str) -> dict[PacketId, float]:
    """``0:1+2=0.5,0:1=0.2`` or ``R_0_1+2=0.5,...``."""
    rates = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ScenarioError("--rates", f"expected KEY=VALUE, got {item!r}")
        key = key.strip()
        try:
            pid = RateVar.parse(key).packet_id if key.startswith("R_") else PacketId.parse(key)
            value = float(val)
        except ValueError as exc:
            raise ScenarioError("--rates", str(exc)) from None
        if pid is None:
            raise ScenarioError("--rates", f"{key!r} is not a packet rate")
        if pid in rates:
            raise ScenarioError("--rates", f"packet {pid} given twice")
        rates[pid] = value
    return rates


# -- commands -----------------------------------------------------------------


def cmd_cost(args) -> int:
    sc = load_scenario(args.scenario)
    report = cost_report(build_program(sc, args.mode, args.no_helpers))
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_region(args) -> int:
    sc = load_scenario(args.scenario)
    prog = build_program(sc, args.mode, args.no_helpers)
    header, rows = region_rows(prog.region)
    _write_csv(args.out, header, rows)
    print(f"{len(rows)} constraints over {len(prog.region.vars)} variables -> {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    pmf, demands = sc.pmf, sc.demands
    cfg = BinSimConfig(args.n, pmf, demands, parse_rates(args.rates), args.trials, args.seed)
    rep = run_power_binning(cfg)
    rows = rep.rows()
    _write_csv(args.out, list(rows[0]), [list(r.values()) for r in rows])
    print(rep.summary())
    return EXIT_OK


def cmd_threshold_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    pmf, demands = sc.pmf, sc.demands
    if args.source not in demands.sources or not demands.pi[args.source]:
        raise ScenarioError("--source", f"source {args.source} is not requested by any sink")
    base = BinSimConfig(args.n[0], pmf, demands, {PacketId(args.source, demands.pi[args.source]): 0.0}, args.trials, args.seed)
    rows = threshold_sweep(base, args.offsets, args.n)
    _write_csv(args.out, ["offset", "n", "error", "ci"], [list(r.values()) for r in rows])
    for r in rows:
        print(f"offset {r['offset']:+.3f} n={r['n']}: error {r['error']:.4f} +/- {r['ci']:.4f}")
    return EXIT_OK


def cmd_helper_sweep(args) -> int:
    try:
        res = helper_sweep(args.p1, args.p2, args.delta, args.grid)
        ana = helper_analytic(args.p1, args.p2, args.delta)
    except ValueError as exc:
        raise ScenarioError("", str(exc)) from None
    names = [v.name for v in res.rates]
    header = ["method", "p_fine", "p_cascade", "fine_sink", "p_common", "helper_cost"] + names
    ana_region = helper_region(args.p1, args.p2, ana.aux)
    ana_rates = {v: c.rhs for c in ana_region.constraints for v in c.coeffs}
    ana_cost = sum(w * ana_rates[v] for v, w in DEFAULT_WEIGHTS.items())
    rows = [
        ["grid", res.aux.p_fine, res.aux.p_cascade, res.aux.fine_sink, res.aux.p_common, res.cost] + [res.rates[v] for v in res.rates],
        ["analytic", ana.aux.p_fine, ana.aux.p_cascade, ana.aux.fine_sink, ana.aux.p_common, ana_cost] + [ana_rates[v] for v in res.rates],
    ]
    _write_csv(args.out, header, rows)
    print(f"grid optimum: p_fine={res.aux.p_fine:.6g} p_cascade={res.aux.p_cascade:.6g} (sink {res.aux.fine_sink} fine), cost {res.cost:.6g}")
    print(f"analytic:     p_fine={ana.aux.p_fine:.6g} p_cascade={ana.aux.p_cascade:.6g} (sink {ana.aux.fine_sink} fine), cost {ana_cost:.6g}")
    return EXIT_OK


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dircost", description="Minimum-cost routing of correlated sources.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cost", help="minimum communication cost of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--no-helpers", action="store_true", help="dir-thm1: forbid packets to sinks that do not request the source")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("region", help="write the rate region as CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--no-helpers", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("simulate", help="Monte Carlo power binning")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", required=True, help="e.g. 0:1+2=0.47,0:2=0.25")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("threshold-sweep", help="error versus rate offset around the threshold")
    p.add_argument("--scenario", required=True)
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--offsets", type=_floats, required=True, help="comma separated, bits per symbol")
    p.add_argument("--n", type=_ints, required=True, help="comma separated blocklengths")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_threshold_sweep)

    p = sub.add_parser("helper-sweep", help="grid search over the two-sink helper auxiliaries")
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_helper_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ScenarioError, BinSimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
