"""Seeded sweeps over random regular graphs, CSV rows, and log-log scaling fits."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace

import numpy as np

from heisembed.errors import HeisembedError
from heisembed.graphs import random_regular
from heisembed.group import GeneratingSet
from heisembed.random_wiring import generate_run
from heisembed.transforms import XY, PipelineConfig, embed_graph
from heisembed.wiring import metrics_of, verify
from heisembed.cayley import bfs_ball


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    d: int
    seed: int
    alpha: float
    r: int | None = None
    attempts: int | None = None
    load: int | None = None
    vol_stage1: int | None = None
    diam_stage1: int | None = None
    diam_stage1_mode: str | None = None
    k: int | None = None
    vol_final: int | None = None
    diam_final: int | None = None
    diam_final_mode: str | None = None
    verify_ok: bool = False
    elapsed_ms: float | None = None


CSV_HEADER = tuple(f.name for f in fields(ExperimentRow))


@dataclass(frozen=True)
class FitResult:
    slope: float | None
    intercept: float | None
    residual: float | None
    window: tuple
    insufficient: bool = False

    def to_json(self) -> dict:
        out = {"slope": self.slope, "intercept": self.intercept, "residual": self.residual,
               "window": list(self.window)}
        if self.insufficient:
            out["flag"] = "insufficient window"
        return out


@dataclass(frozen=True)
class SweepTask:
    n: int
    d: int
    seed: int
    genset: GeneratingSet
    config: PipelineConfig
    stage1_only: bool
    timing: bool


def run_row(task: SweepTask) -> tuple[ExperimentRow, dict | None]:
    """One (n, seed) cell; failures come back as a row with verify_ok false plus a diagnostic."""
    t0 = time.perf_counter()
    cfg = replace(task.config, random=replace(task.config.random, seed=task.seed))
    base = ExperimentRow(task.n, task.d, task.seed, _num(cfg.random.alpha))
    error = None
    try:
        G = random_regular(task.n, task.d, task.seed)
        if task.stage1_only:
            run = generate_run(G, XY, cfg.random)
            ball = bfs_ball(XY, 4 * run.radius, cfg.ball_cap) if cfg.metrics_mode != "proxy" else None
            met = metrics_of(run.wiring, cfg.metrics_mode, ball=ball, ball_cap=cfg.ball_cap)
            rep = verify(run.wiring, k=run.outcome.threshold)
            row = replace(base, r=run.radius, attempts=run.attempts, load=met.load, vol_stage1=met.volume,
                          diam_stage1=met.diameter, diam_stage1_mode=met.diameter_mode,
                          k=run.outcome.threshold,
                          verify_ok=rep.wiring_ok and rep["neighbor_distinct"].passed)
        else:
            res = embed_graph(G, task.genset, cfg)
            first, last = res.stages[0].metrics, res.stages[-1].metrics
            row = replace(base, r=res.radius, attempts=res.attempts, load=first.load, vol_stage1=first.volume,
                          diam_stage1=first.diameter, diam_stage1_mode=first.diameter_mode, k=res.threshold,
                          vol_final=last.volume, diam_final=last.diameter, diam_final_mode=last.diameter_mode,
                          verify_ok=res.ok)
    except HeisembedError as exc:
        row = base
        error = {"n": task.n, "seed": task.seed, "error": type(exc).__name__, "message": str(exc)}
    if task.timing:
        row = replace(row, elapsed_ms=round((time.perf_counter() - t0) * 1000, 1))
    return row, error


def _num(x):
    return int(x) if float(x).is_integer() else x


def run_experiment(ns, d: int, seeds, genset: GeneratingSet = XY, config: PipelineConfig = PipelineConfig(),
                   stage1_only: bool = False, jobs: int = 1, timing: bool = False):
    """All (n, seed) rows sorted by (n, seed), the diagnostics of failed rows, and both fits."""
    tasks = [SweepTask(n, d, s, genset, config, stage1_only, timing) for n in ns for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_row, tasks))
    else:
        results = [run_row(t) for t in tasks]
    results.sort(key=lambda item: (item[0].n, item[0].seed))
    rows = [r for r, _ in results]
    errors = [e for _, e in results if e is not None]
    fits = {"stage1_volume": fit_loglog(rows, lambda r: r.vol_stage1)}
    if not stage1_only:
        fits["final_volume_over_log2"] = fit_loglog(
            rows, lambda r: None if r.vol_final is None else r.vol_final / math.log1p(r.n) ** 2)
    return rows, errors, fits


def fit_loglog(rows, value) -> FitResult:
    """Least squares of ln(value) against ln(n) over rows where value is present."""
    pts = [(r.n, value(r)) for r in rows if value(r) is not None and value(r) > 0]
    ns = sorted({n for n, _ in pts})
    window = (ns[0], ns[-1]) if ns else ()
    if len(ns) < 2:
        return FitResult(None, None, None, window, insufficient=True)
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return FitResult(float(slope), float(intercept), resid, window)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow([_cell(v) for v in astuple(row)])
    return buf.getvalue()
