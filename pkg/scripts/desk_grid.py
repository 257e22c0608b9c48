"""Run the desk-scale grid (4 routers x 2 popularities x 4 modes x N seeds).

Writes results.csv, comparisons.csv and summary.txt to --out and prints
the seed-averaged headline numbers.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from ccndtn.config import MODES, ROUTERS, load_scenario
from ccndtn.experiments import ExperimentGrid, run_grid, write_outputs


def seed_mean(by, router, pop, mode, seeds, metric):
    return float(np.mean([metric(by[(router, pop, mode, s)]) for s in seeds]))


def reduction(by, router, pop, treat, base, seeds, metric):
    b = seed_mean(by, router, pop, base, seeds, metric)
    return 1.0 - seed_mean(by, router, pop, treat, seeds, metric) / b if b else float("nan")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/desk")
    args = ap.parse_args()

    seeds = list(range(1, args.seeds + 1))
    grid = ExperimentGrid(load_scenario(args.scenario), ROUTERS, ("zipf", "uniform"), MODES, seeds)
    t0 = time.perf_counter()
    results = run_grid(grid, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_outputs(results, out)
    by = {(r.cell.router, r.cell.popularity, r.cell.mode, r.cell.seed): r.report for r in results if r.report}

    lines = [f"{len(results)} runs in {time.perf_counter() - t0:.1f} s, seeds {seeds}"]
    lines.append("router        split(zipf,full) M/A/S       delay-red zipf  pdrop-red unif  load-red unif")
    for router in ROUTERS:
        split = [seed_mean(by, router, "zipf", "full", seeds, lambda r, k=k: r.traffic_split[k])
                 for k in ("MobileUser", "CAP", "ContentSource")]
        d = reduction(by, router, "zipf", "full", "dtn_only", seeds, lambda r: r.avg_e2e_delay)
        p = reduction(by, router, "uniform", "full", "no_user_cache", seeds, lambda r: r.drops_protocol)
        lo = reduction(by, router, "uniform", "full", "dtn_user_cache", seeds, lambda r: r.provider_load)
        lines.append(f"{router:<13} {split[0]:.3f}/{split[1]:.3f}/{split[2]:.3f}"
                     f"           {100 * d:6.1f}%        {100 * p:6.1f}%        {100 * lo:6.1f}%")
    text = "\n".join(lines)
    (out / "summary.txt").write_text(text + "\n")
    print(text)


if __name__ == "__main__":
    main()
