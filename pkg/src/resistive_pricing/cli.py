"""Command-line front end.

Subcommands: price, price-extended, select, ingest, synth, sweep-psi,
sweep-eta, report, dump-electrical.  Every command that writes an output
also writes ``<out>.manifest.json`` recording the resolved parameters,
seed, and input hashes; re-running a command with the same manifest
reproduces byte-identical CSV output.  Exit codes: 0 success, 2 usage or
validation error, 3 solver non-convergence.

The sweep commands fan grid points out to a thread pool capped by the
``RESISTIVE_PRICING_THREADS`` environment variable.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .electrical import build_electrical, value_vector
from .extended import (
    DemandModel,
    ExtendedParams,
    Infeasible,
    solve_extended,
)
from .fileio import MalformedInput, fmt
from .ingest import (
    EmptyAfterAggregation,
    TooFewPoints,
    aggregate_network,
    cluster_endpoints,
    filter_rides,
    read_rides_csv,
    synth_instance,
)
from .network import NetworkValidationError
from .pricing import NoConvergence, NotApplicable, solve_closed_form, solve_general
from .qp import QPNoConvergence
from .selection import strategy_compare

USAGE_ERROR = 2
SOLVER_ERROR = 3


def _pool_size() -> int:
    raw = os.environ.get("RESISTIVE_PRICING_THREADS")
    if raw:
        return max(1, int(raw))
    return min(8, os.cpu_count() or 1)


def _parse_demand(text: str) -> DemandModel:
    if text == "uniform":
        return DemandModel.uniform()
    if text.startswith("exp:"):
        return DemandModel.exponential(float(text.split(":", 1)[1]))
    raise ValueError("demand must be 'uniform' or 'exp:<gamma>'")


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        values = []
        x = start
        while x <= stop + 1e-9:
            values.append(round(x, 12))
            x += step
        if not values:
            raise ValueError("empty grid")
        return values
    values = [float(t) for t in text.split(",") if t.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


def _dump_electrical(net, prefix):
    model = build_electrical(net)[0]
    n = net.n_locations
    fileio.write_csv(
        f"{prefix}.resistance.csv",
        ["location"] + [str(j) for j in range(n)],
        ([str(i)] + [fmt(model.effective_resistance[i, j]) for j in range(n)]
         for i in range(n)))
    v = value_vector(net)
    fileio.write_csv(f"{prefix}.value.csv", ["location", "value"],
                     ([str(i), fmt(v[i])] for i in range(n)))


def _price_rows(net, a_mat, sol):
    from .pricing import payoff_and_surplus
    breakdown = payoff_and_surplus(
        net, a_mat, np.where(net.demand > 0, sol.prices, 0.0))
    for i, j in net.arcs:
        yield [str(i), str(j), fmt(sol.prices[i, j]), fmt(sol.flows[i, j]),
               fmt(sol.duals_mu[i, j]), fmt(breakdown.payoff_by_arc[i, j]),
               fmt(breakdown.surplus_by_arc[i, j])]


PRICE_HEADER = ["from", "to", "price", "flow", "mu",
                "payoff_contrib", "cs_contrib"]


def cmd_price(args) -> int:
    started = time.time()
    loaded = fileio.load_network(args.network)
    net = loaded.network
    inputs = [args.network]
    a = loaded.ad_revenue
    if args.ads:
        a = fileio.load_ads(args.ads, net)
        inputs.append(args.ads)
    try:
        sol = solve_closed_form(net, a)
    except NotApplicable:
        sol = solve_general(net, a)
    fileio.write_csv(args.out, PRICE_HEADER, _price_rows(net, a.values, sol))
    if args.dump_electrical:
        _dump_electrical(net, args.dump_electrical)
    fileio.write_manifest(
        args.out, "price",
        {"network": args.network, "ads": args.ads, "out": args.out,
         "dump_electrical": args.dump_electrical},
        None, inputs, started)
    print(f"payoff={fmt(sol.payoff)} consumer_surplus={fmt(sol.consumer_surplus)} "
          f"active_set={len(sol.active_set)} kkt_residual={sol.kkt_residual:.3e}")
    return 0


def cmd_price_extended(args) -> int:
    started = time.time()
    loaded = fileio.load_network(args.network)
    net = loaded.network
    inputs = [args.network]
    a = loaded.ad_revenue
    if args.ads:
        a = fileio.load_ads(args.ads, net)
        inputs.append(args.ads)
    params = ExtendedParams(eta=args.eta, psi=args.psi,
                            demand=_parse_demand(args.demand))
    sol = solve_extended(net, a, params, seed=args.seed,
                         empty_pairs=loaded.empty_pairs)
    rows = []
    for i, j in net.arcs:
        q = net.demand[i, j] * params.demand.remaining(sol.prices[i, j])
        rows.append(["arc", str(i), str(j), fmt(sol.prices[i, j]), fmt(q)])
    pair_set = set(net.arcs) | {(int(i), int(j))
                                for i, j, _ in (loaded.empty_pairs or ())}
    for i, j in sorted(pair_set):
        rows.append(["empty", str(i), str(j), "", fmt(sol.empty_flows[i, j])])
    footer = [f"# payoff={fmt(sol.payoff)}",
              f"# kkt_residual={sol.kkt_residual:.3e}",
              f"# local_only={int(sol.local_only)}"]
    fileio.write_csv(args.out, ["row_type", "from", "to", "price", "flow"],
                     rows, footer)
    fileio.write_manifest(
        args.out, "price-extended",
        {"network": args.network, "ads": args.ads, "psi": args.psi,
         "eta": args.eta, "demand": args.demand, "out": args.out},
        args.seed, inputs, started)
    print(f"payoff={fmt(sol.payoff)} local_only={int(sol.local_only)} "
          f"kkt_residual={sol.kkt_residual:.3e}")
    return 0


def _extended_params(args):
    if args.model == "extended":
        if args.psi is None or args.eta is None:
            raise ValueError("extended model requires --psi and --eta")
        return ExtendedParams(eta=args.eta, psi=args.psi,
                              demand=_parse_demand(args.demand))
    return None


def cmd_select(args) -> int:
    started = time.time()
    loaded = fileio.load_network(args.network)
    catalog = fileio.load_advertisers(args.advertisers)
    params = _extended_params(args)
    comparison = strategy_compare(
        loaded.network, catalog, mode=args.mode, model=args.model,
        params=params, seed=args.seed, trials=args.trials)
    wanted = {"resistance": "resistance", "optimal": "optimal",
              "random": "random"}[args.strategy]
    outcome = comparison.outcome(wanted)
    rows = []
    for label, dval, pval in zip(comparison.candidates, comparison.deltas,
                                 comparison.payoffs):
        name = f"{label[0]}->{label[1]}" if isinstance(label, tuple) else str(label)
        chosen = int(label == outcome.chosen)
        rows.append([name, fmt(dval), fmt(pval), str(chosen)])
    footer = [f"# strategy={outcome.strategy}",
              f"# chosen={outcome.chosen}",
              f"# payoff={fmt(outcome.payoff)}",
              f"# gap_to_optimal={fmt(outcome.gap_to_optimal)}"]
    fileio.write_csv(args.out, ["candidate", "delta", "payoff", "chosen"],
                     rows, footer)
    fileio.write_manifest(
        args.out, "select",
        {"network": args.network, "advertisers": args.advertisers,
         "mode": args.mode, "strategy": args.strategy, "model": args.model,
         "psi": args.psi, "eta": args.eta, "demand": args.demand,
         "trials": args.trials, "out": args.out},
        args.seed, [args.network, args.advertisers], started)
    print(f"strategy={outcome.strategy} chosen={outcome.chosen} "
          f"payoff={fmt(outcome.payoff)} gap={fmt(outcome.gap_to_optimal)}")
    return 0


def _sweep(args, kind) -> int:
    started = time.time()
    loaded = fileio.load_network(args.network)
    catalog = fileio.load_advertisers(args.advertisers)
    demand = _parse_demand(args.demand)
    grid = _parse_grid(args.psi_grid if kind == "psi" else args.eta_grid)

    def run(index, value):
        if kind == "psi":
            params = ExtendedParams(eta=args.eta, psi=value, demand=demand)
        else:
            params = ExtendedParams(eta=value, psi=args.psi, demand=demand)
        child = np.random.SeedSequence(args.seed, spawn_key=(index,))
        return strategy_compare(loaded.network, catalog, mode=args.mode,
                                model="extended", params=params, seed=child,
                                trials=args.trials)

    with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
        futures = [pool.submit(run, idx, val) for idx, val in enumerate(grid)]
        results = [f.result() for f in futures]

    rows = []
    for value, comparison in zip(grid, results):
        for name in ("resistance", "optimal", "random"):
            outcome = comparison.outcome(name)
            rows.append([fmt(value), name, fmt(outcome.payoff),
                         fmt(outcome.gap_to_optimal)])
    fileio.write_csv(args.out, [kind, "strategy", "payoff", "gap_to_optimal"],
                     rows)
    fileio.write_manifest(
        args.out, f"sweep-{kind}",
        {"network": args.network, "advertisers": args.advertisers,
         "grid": grid, "psi": getattr(args, "psi", None),
         "eta": getattr(args, "eta", None), "demand": args.demand,
         "mode": args.mode, "trials": args.trials, "out": args.out},
        args.seed, [args.network, args.advertisers], started)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    started = time.time()
    bbox = tuple(float(t) for t in args.bbox.split(","))
    if len(bbox) != 4:
        raise ValueError("bbox must be lat0,lat1,lon0,lon1")
    window = tuple(float(t) for t in args.window.split(","))
    if len(window) != 2:
        raise ValueError("window must be t0,t1")
    records = filter_rides(read_rides_csv(args.rides), bbox, window)
    clustering = cluster_endpoints(records, args.k, bbox, args.seed)
    result = aggregate_network(records, clustering, args.slot_seconds, args.cost)
    fileio.save_network(args.out, result.network)
    fileio.write_manifest(
        args.out, "ingest",
        {"rides": args.rides, "bbox": args.bbox, "window": args.window,
         "k": args.k, "slot_seconds": args.slot_seconds, "cost": args.cost,
         "out": args.out},
        args.seed, [args.rides], started)
    print(f"locations={result.network.n_locations} "
          f"arcs={len(result.network.arcs)} "
          f"dropped_clusters={list(result.dropped_clusters)} "
          f"intra_cluster_rides={result.dropped_rides}")
    return 0


def cmd_synth(args) -> int:
    started = time.time()
    net, catalog = synth_instance(args.n, args.density, args.seed,
                                  profile=args.profile, cost=args.cost)
    fileio.save_network(args.out, net)
    if args.advertisers_out:
        fileio.save_advertisers(args.advertisers_out, catalog)
    fileio.write_manifest(
        args.out, "synth",
        {"n": args.n, "density": args.density, "profile": args.profile,
         "cost": args.cost, "out": args.out,
         "advertisers_out": args.advertisers_out},
        args.seed, [], started)
    print(f"locations={net.n_locations} arcs={len(net.arcs)}")
    return 0


def cmd_dump_electrical(args) -> int:
    started = time.time()
    loaded = fileio.load_network(args.network)
    _dump_electrical(loaded.network, args.out)
    fileio.write_manifest(
        args.out, "dump-electrical",
        {"network": args.network, "out": args.out},
        None, [args.network], started)
    print(f"wrote {args.out}.resistance.csv and {args.out}.value.csv")
    return 0


def _read_table(path):
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise MalformedInput(f"{path} is empty")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]
            if ln and not ln.startswith("#")]
    footer = {ln[2:].split("=", 1)[0]: ln[2:].split("=", 1)[1]
              for ln in lines[1:] if ln.startswith("# ") or ln.startswith("#")}
    return header, rows, footer


def cmd_report(args) -> int:
    header, rows, footer = _read_table(args.input)
    prefix = args.out_prefix or (args.input + ".series")
    if header == PRICE_HEADER:
        payoff = sum(float(r[5]) for r in rows)
        surplus = sum(float(r[6]) for r in rows)
        active = sum(1 for r in rows if float(r[4]) > 1e-9)
        ratio = payoff / surplus if surplus else float("nan")
        print(f"payoff={fmt(payoff)}")
        print(f"consumer_surplus={fmt(surplus)}")
        print(f"payoff_to_surplus_ratio={ratio:.4f}")
        print(f"active_set_size={active}")
        top = sorted(rows, key=lambda r: -float(r[5]))[:5]
        print("top_arcs_by_payoff=" + ";".join(
            f"{r[0]}->{r[1]}:{fmt(float(r[5]))}" for r in top))
        fileio.write_csv(f"{prefix}.payoff_by_arc.csv", ["x", "y"],
                         ([str(idx), fmt(float(r[5]))]
                          for idx, r in enumerate(rows)))
        fileio.write_csv(f"{prefix}.price_by_arc.csv", ["x", "y"],
                         ([str(idx), fmt(float(r[2]))]
                          for idx, r in enumerate(rows)))
        return 0
    if len(header) == 4 and header[1:] == ["strategy", "payoff", "gap_to_optimal"]:
        xname = header[0]
        strategies = sorted({r[1] for r in rows})
        for strat in strategies:
            series = [(r[0], r[2]) for r in rows if r[1] == strat]
            fileio.write_csv(f"{prefix}.{strat}.csv", ["x", "y"],
                             ([x, fmt(float(y))] for x, y in series))
        print(f"series_over={xname} strategies={strategies} rows={len(rows)}")
        return 0
    if header == ["row_type", "from", "to", "price", "flow"]:
        payoff = footer.get("payoff")
        print(f"payoff={payoff}")
        print(f"kkt_residual={footer.get('kkt_residual')}")
        print(f"local_only={footer.get('local_only')}")
        arcs = [r for r in rows if r[0] == "arc"]
        fileio.write_csv(f"{prefix}.flow_by_arc.csv", ["x", "y"],
                         ([str(idx), fmt(float(r[4]))]
                          for idx, r in enumerate(arcs)))
        return 0
    raise MalformedInput(f"unrecognized table schema in {args.input}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resistive-pricing",
        description="Spatial pricing and advertiser selection for vehicle "
                    "service networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="solve the basic pricing problem")
    p.add_argument("--network", required=True)
    p.add_argument("--ads", default=None,
                   help="optional network-format file whose ad_revenue "
                        "overrides the network file")
    p.add_argument("--out", default="prices.csv")
    p.add_argument("--dump-electrical", default=None, metavar="PREFIX")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("price-extended", help="solve with capacity and "
                                              "empty-vehicle routing")
    p.add_argument("--network", required=True)
    p.add_argument("--ads", default=None)
    p.add_argument("--psi", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--demand", default="uniform")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="ext.csv")
    p.set_defaults(func=cmd_price_extended)

    p = sub.add_parser("select", help="advertiser selection strategies")
    p.add_argument("--network", required=True)
    p.add_argument("--advertisers", required=True)
    p.add_argument("--mode", choices=["arc", "location"], required=True)
    p.add_argument("--strategy", choices=["resistance", "optimal", "random"],
                   required=True)
    p.add_argument("--model", choices=["basic", "extended"], default="basic")
    p.add_argument("--psi", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--demand", default="uniform")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="table.csv")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("ingest", help="build a network from ride records")
    p.add_argument("--rides", required=True)
    p.add_argument("--bbox", required=True, metavar="lat0,lat1,lon0,lon1")
    p.add_argument("--window", required=True, metavar="t0,t1")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--slot-seconds", type=float, default=600.0)
    p.add_argument("--cost", type=float, default=0.6)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="network.json")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic instance")
    p.add_argument("--n", type=int, default=15)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--profile", choices=["symmetric", "commuter"],
                   default="symmetric")
    p.add_argument("--cost", type=float, default=0.6)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="network.json")
    p.add_argument("--advertisers-out", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep-psi", help="capacity sweep over strategies")
    p.add_argument("--network", required=True)
    p.add_argument("--advertisers", required=True)
    p.add_argument("--psi-grid", default="40:280:40")
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--demand", default="uniform")
    p.add_argument("--mode", choices=["arc", "location"], default="location")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="sweep_psi.csv")
    p.set_defaults(func=lambda args: _sweep(args, "psi"))

    p = sub.add_parser("sweep-eta", help="empty-routing cost sweep")
    p.add_argument("--network", required=True)
    p.add_argument("--advertisers", required=True)
    p.add_argument("--eta-grid", default="0.1:1.0:0.1")
    p.add_argument("--psi", type=float, default=300.0)
    p.add_argument("--demand", default="uniform")
    p.add_argument("--mode", choices=["arc", "location"], default="location")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="sweep_eta.csv")
    p.set_defaults(func=lambda args: _sweep(args, "eta"))

    p = sub.add_parser("report", help="summarize a solver output file")
    p.add_argument("input")
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dump-electrical",
                       help="write effective resistances and location values")
    p.add_argument("--network", required=True)
    p.add_argument("--out", required=True, metavar="PREFIX")
    p.set_defaults(func=cmd_dump_electrical)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NetworkValidationError, MalformedInput, TooFewPoints,
            EmptyAfterAggregation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (NoConvergence, QPNoConvergence, Infeasible) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return SOLVER_ERROR


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
