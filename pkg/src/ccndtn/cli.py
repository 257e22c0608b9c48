"""Command line entry point: ``ccndtn run`` and ``ccndtn analytic``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analytic
from .config import DISTRIBUTIONS, MODES, PRESETS, ROUTERS, ScenarioError, load_scenario
from .experiments import ExperimentGrid, run_grid, write_outputs


def _listing(choices: Optional[Sequence[str]] = None, cast=str):
    def parse(text: str):
        items = [cast(x.strip()) for x in text.split(",") if x.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        if choices is not None:
            bad = [x for x in items if x not in choices]
            if bad:
                raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; pick from {list(choices)}")
        return items
    return parse


def _num(x) -> str:
    return repr(float(x))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccndtn", description="CCN over DTN simulator and analytic model")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment grid and write results.csv")
    r.add_argument("--scenario", help="scenario JSON file layered over the preset")
    r.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    r.add_argument("--routers", type=_listing(ROUTERS), default=list(ROUTERS))
    r.add_argument("--popularity", type=_listing(DISTRIBUTIONS), default=["zipf", "uniform"])
    r.add_argument("--flags", type=_listing(MODES), default=["full"])
    r.add_argument("--seeds", type=_listing(cast=int), default=[1])
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default="results")
    r.add_argument("--trace", action="store_true", help="write one NDJSON event trace per cell")

    a = sub.add_parser("analytic", help="evaluate the analytic model from a JSON parameter file")
    a.add_argument("params", help="JSON file; see README for the schema")
    a.add_argument("--out", default="analytic")
    return p


def cmd_run(args) -> int:
    try:
        base = load_scenario(args.scenario, args.preset)
    except (ScenarioError, OSError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    grid = ExperimentGrid(base, args.routers, args.popularity, args.flags, args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_grid(grid, jobs=args.jobs, trace_dir=str(out) if args.trace else None)
    path = write_outputs(results, out)
    failed = sum(r.error is not None for r in results)
    print(f"{len(results)} runs, {failed} failed -> {path}")
    return 1 if failed else 0


def _chain(entry: dict) -> analytic.BirthDeathChain:
    if "lambda" in entry:
        lam, mu = entry["lambda"], entry["mu"]
        if np.isscalar(lam):
            n = int(entry.get("n_max", analytic.DEFAULT_N_MAX))
            return analytic.BirthDeathChain.constant(float(lam), float(mu), n)
        return analytic.BirthDeathChain(lam, mu)
    p = analytic.ServiceRateParams(**entry["service"])
    return analytic.chain_from_model(entry["profiles"], p, int(entry.get("n_max", 100)),
                                     float(entry.get("base_rate", 1.0)), float(entry.get("kappa", 1.0)))


def cmd_analytic(args) -> int:
    params = json.loads(Path(args.params).read_text(encoding="utf-8"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "chains" in params:
        with open(out / "absorption.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["chain", "start_state", "absorption_time", "truncation_bound"])
            for i, entry in enumerate(params["chains"]):
                chain = _chain(entry)
                for n in entry.get("start_states", [1]):
                    t = analytic.absorption_time(chain, int(n))
                    w.writerow([entry.get("name", i), n, _num(t.value), _num(t.truncation_bound)])
        written.append("absorption.csv")
    if "service" in params:
        with open(out / "service_rates.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pi_c", "s_N1", "s_N2", "s_N3"])
            base = dict(params["service"])
            for pi in base.pop("pi_sweep", [base.get("pi_c", 0.1)]):
                rates = analytic.service_rates(analytic.ServiceRateParams(**dict(base, pi_c=pi)))
                w.writerow([_num(pi)] + [_num(x) for x in rates])
        written.append("service_rates.csv")
    if "availability" in params:
        entry = params["availability"]
        p = analytic.CacheAvailabilityParams(entry["p_cap_absent"], entry["p_absent_per_neighbor"])
        with open(out / "availability.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["K", "p_cap", "p_rings", "p_miss", "p_cell"])
            for K in range(1, len(p.p_absent_per_neighbor) + 1):
                av = analytic.cache_availability(p, K)
                w.writerow([K, _num(av.p_cap), ";".join(_num(x) for x in av.p_rings), _num(av.p_miss),
                            _num(av.p_cell)])
        written.append("availability.csv")
    if not written:
        print("nothing to do: expected 'chains', 'service' or 'availability'", file=sys.stderr)
        return 2
    print("wrote " + ", ".join(str(out / f) for f in written))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_analytic(args)


if __name__ == "__main__":
    sys.exit(main())
