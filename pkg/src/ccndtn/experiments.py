"""Batch execution of scenario grids with deterministic CSV output."""
from __future__ import annotations

import csv
import io
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Optional, Sequence

from . import metrics
from .config import MODES, Scenario
from .engine import run, write_trace

COMPARISON_COLUMNS = ("router", "popularity", "seed", "baseline", "treatment",
                      "avg_delay_pct", "drops_protocol_pct", "drops_resource_pct", "provider_load_pct")

# treatment mode -> baseline mode for the headline comparisons
BASELINES = {"full": ("dtn_only", "no_user_cache", "dtn_user_cache")}


@dataclass(frozen=True, order=True)
class Cell:
    router: str
    popularity: str
    mode: str
    seed: int

    @property
    def scenario_id(self) -> str:
        return f"{self.router}-{self.popularity}-{self.mode}-s{self.seed}"


@dataclass
class ExperimentGrid:
    base: Scenario = field(default_factory=Scenario)
    routers: Sequence[str] = ("epidemic", "snw", "firstcontact", "hybrid")
    popularities: Sequence[str] = ("zipf", "uniform")
    flags: Sequence[str] = ("full",)
    seeds: Sequence[int] = (1,)

    def cells(self) -> list[Cell]:
        return sorted(Cell(r, p, f, int(s))
                      for r, p, f, s in product(self.routers, self.popularities, self.flags, self.seeds))

    def scenario(self, cell: Cell) -> Scenario:
        return self.base.replace(**{"routing.kind": cell.router, "workload.dist": cell.popularity,
                                    "mode": cell.mode, "seed": cell.seed})


@dataclass
class CellResult:
    cell: Cell
    report: Optional[metrics.MetricsReport]
    error: Optional[str] = None

    def row(self) -> list[str]:
        if self.report is None:
            return [self.cell.scenario_id, self.cell.router, self.cell.popularity] + \
                ["error"] + [""] * (len(metrics.CSV_COLUMNS) - 4)
        return metrics.csv_row(self.report, self.cell.scenario_id, self.cell.router, self.cell.popularity)


def run_cell(scenario: Scenario, cell: Cell, trace_dir: Optional[str] = None) -> CellResult:
    try:
        report, trace = run(scenario, full_trace=trace_dir is not None)
    except Exception:  # a failing cell becomes an error row, the batch continues
        return CellResult(cell, None, traceback.format_exc(limit=3))
    if trace_dir is not None:
        name = f"trace-{cell.router}-{cell.popularity}-{cell.mode}-{cell.seed}.ndjson"
        write_trace(trace, Path(trace_dir) / name)
    return CellResult(cell, report)


def _run_packed(args):
    return run_cell(*args)


def run_grid(grid: ExperimentGrid, jobs: int = 1, trace_dir: Optional[str] = None) -> list[CellResult]:
    """Run every cell; results come back sorted by cell key whatever ``jobs`` is."""
    cells = grid.cells()
    work = [(grid.scenario(c), c, trace_dir) for c in cells]
    if jobs <= 1:
        results = [_run_packed(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_packed, work))
    return sorted(results, key=lambda r: r.cell)


def results_csv(results: Sequence[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(metrics.CSV_COLUMNS)
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def comparisons(results: Sequence[CellResult]) -> list[list[str]]:
    """Percent deltas of ``full`` against each available baseline mode, per seed."""
    by_cell = {r.cell: r.report for r in results if r.report is not None}
    rows = []
    for cell in sorted(by_cell):
        for baseline in BASELINES.get(cell.mode, ()):
            base = by_cell.get(Cell(cell.router, cell.popularity, baseline, cell.seed))
            if base is None:
                continue
            deltas = metrics.compare(base, by_cell[cell])
            rows.append([cell.router, cell.popularity, str(cell.seed), baseline, cell.mode]
                        + [metrics.fmt(deltas[k]) for k in COMPARISON_COLUMNS[5:]])
    return rows


def write_outputs(results: Sequence[CellResult], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(results_csv(results), encoding="utf-8", newline="")
    rows = comparisons(results)
    if rows:
        with open(out / "comparisons.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COMPARISON_COLUMNS)
            w.writerows(rows)
    errors = [r for r in results if r.error]
    if errors:
        (out / "errors.log").write_text(
            "".join(f"== {r.cell.scenario_id}\n{r.error}\n" for r in errors), encoding="utf-8")
    return out / "results.csv"


__all__ = ["Cell", "CellResult", "ExperimentGrid", "MODES", "run_cell", "run_grid", "results_csv",
           "comparisons", "write_outputs"]
