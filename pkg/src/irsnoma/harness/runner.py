"""Monte-Carlo sweeps: rows, aggregates, plot data and optional solution dumps."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channel import sample_channels
from .config import ExperimentConfig, parse_scheme
from .schemes import depends_on_bits, run_scheme

ROW_COLUMNS = ("config_hash", "sweep_value", "scheme", "seed", "sum_rate", "iterations",
               "wall_time", "audit_worst", "flag")
AGG_COLUMNS = ("sweep_value", "scheme", "n", "mean", "stderr")


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed of trial ``t``; shared by every scheme and sweep value (matched seeds)."""
    return base_seed ^ trial


@dataclass
class Task:
    index: int
    value: object
    scheme: str
    seed: int


def _execute(cfg: ExperimentConfig, task: Task, dump: bool):
    params = cfg.point(task.value)
    cs = sample_channels(params["N"], params["M"], params["K"], seed=task.seed)
    t0 = time.perf_counter()
    try:
        out = run_scheme(task.scheme, params, cs, task.seed, cfg.order_irs)
        row = dict(sum_rate=out.sum_rate, iterations=out.iterations, audit_worst=out.worst,
                   flag=out.flag)
    except Exception as e:  # recorded, never dropped
        out = None
        row = dict(sum_rate=float("nan"), iterations=0, audit_worst=float("nan"),
                   flag=f"error: {type(e).__name__}: {e}".replace("\n", " "))
    row.update(config_hash=cfg.hash(), sweep_value=task.value, scheme=task.scheme,
               seed=task.seed, wall_time=time.perf_counter() - t0)
    trace = {"sweep_value": task.value, "scheme": task.scheme, "seed": task.seed,
             "objectives": out.objectives if out else [],
             "iterations": out.iterations if out else 0,
             "converged": out.converged if out else False,
             "srocr_ratio": out.srocr_ratio if out else [],
             "srocr_converged": out.srocr_converged if out else []}
    rec = None
    if dump and out is not None:
        rec = dict(out.dump(), scheme=task.scheme, seed=task.seed, sweep_value=task.value,
                   params=params, channels=cs.to_record(), config_hash=cfg.hash())
    return task.index, row, trace, rec


def _tasks(cfg: ExperimentConfig) -> list[Task]:
    tasks = []
    for value in cfg.values:
        for scheme in cfg.schemes:
            for t in range(cfg.trials):
                tasks.append(Task(len(tasks), value, scheme, trial_seed(cfg.base_seed, t)))
    return tasks


def _dedup_key(cfg: ExperimentConfig, task: Task):
    """Rows that cannot differ (a B sweep for bit-independent schemes) share one run."""
    if cfg.sweep == "B" and not depends_on_bits(parse_scheme(task.scheme)[0]):
        return (task.scheme, task.seed)
    return None


def _sort_value(v):
    return float(v)


def run(cfg: ExperimentConfig, jobs: int = 1, dump_solutions: bool = False,
        out_dir: str | Path | None = None) -> Path:
    """Run every (sweep value, scheme, trial) and write the result files.

    Returns the result directory, containing ``config.ini``, ``rows.csv``,
    ``aggregate.csv``, ``plot.dat``, ``traces.jsonl`` and, when requested,
    ``solutions.jsonl``.
    """
    out = Path(out_dir) if out_dir is not None else Path(cfg.output) / f"{cfg.name}-{cfg.hash()}"
    out.mkdir(parents=True, exist_ok=True)
    tasks = _tasks(cfg)
    unique, alias = [], {}
    seen = {}
    for t in tasks:
        key = _dedup_key(cfg, t)
        if key is not None and key in seen:
            alias[t.index] = seen[key]
            continue
        if key is not None:
            seen[key] = t.index
        unique.append(t)

    results = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for idx, row, trace, rec in ex.map(_execute, [cfg] * len(unique), unique,
                                               [dump_solutions] * len(unique)):
                results[idx] = (row, trace, rec)
    else:
        for t in unique:
            idx, row, trace, rec = _execute(cfg, t, dump_solutions)
            results[idx] = (row, trace, rec)
    for t in tasks:
        if t.index in alias:
            row, trace, rec = results[alias[t.index]]
            row = dict(row, sweep_value=t.value)
            trace = dict(trace, sweep_value=t.value)
            rec = dict(rec, sweep_value=t.value) if rec else None
            results[t.index] = (row, trace, rec)

    order = sorted(tasks, key=lambda t: (_sort_value(t.value), t.scheme, t.seed))
    rows = [results[t.index][0] for t in order]
    (out / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    write_rows(out / "rows.csv", rows)
    agg = aggregate(rows)
    write_aggregate(out / "aggregate.csv", agg)
    (out / "plot.dat").write_text(plot_data(agg, cfg.sweep), encoding="utf-8")
    with open(out / "traces.jsonl", "w", encoding="utf-8") as fh:
        for t in order:
            fh.write(json.dumps(results[t.index][1]) + "\n")
    if dump_solutions:
        with open(out / "solutions.jsonl", "w", encoding="utf-8") as fh:
            for t in order:
                rec = results[t.index][2]
                if rec is not None:
                    fh.write(json.dumps(rec) + "\n")
    return out


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path: Path, rows: list[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow([_cell(r[c]) for c in ROW_COLUMNS])


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for c in ("sum_rate", "wall_time", "audit_worst"):
            r[c] = float(r[c])
        r["seed"] = int(r["seed"])
        r["iterations"] = int(r["iterations"])
    return rows


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean and standard error per (sweep value, scheme) over rows flagged ``ok``."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((str(r["sweep_value"]), r["scheme"]), []).append(r)
    out = []
    for (value, scheme), rs in groups.items():
        x = np.array([r["sum_rate"] for r in rs if str(r["flag"]).startswith("ok")], float)
        n = int(x.size)
        mean = float(np.mean(x)) if n else float("nan")
        se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out.append({"sweep_value": value, "scheme": scheme, "n": n, "mean": mean, "stderr": se})
    return out


def write_aggregate(path: Path, agg: list[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_COLUMNS)
        for a in agg:
            w.writerow([_cell(a[c]) for c in AGG_COLUMNS])


def plot_data(agg: list[dict], axis: str) -> str:
    """Whitespace-separated columns: x, then mean and stderr per scheme."""
    schemes = list(dict.fromkeys(a["scheme"] for a in agg))
    xs = sorted({a["sweep_value"] for a in agg}, key=float)
    table = {(a["sweep_value"], a["scheme"]): a for a in agg}
    buf = io.StringIO()
    cols = [axis] + [f"{s}_{k}" for s in schemes for k in ("mean", "stderr")]
    buf.write("# " + " ".join(cols) + "\n")
    for x in xs:
        vals = [x]
        for s in schemes:
            a = table.get((x, s))
            vals += [repr(a["mean"]), repr(a["stderr"])] if a else ["nan", "nan"]
        buf.write(" ".join(str(v) for v in vals) + "\n")
    return buf.getvalue()


def audit_results(path: str | Path, tol: float = 1e-6) -> list[tuple]:
    """Re-verify a ``solutions.jsonl`` dump (or a result directory holding one)."""
    from .schemes import audit_dump

    p = Path(path)
    if p.is_dir():
        p = p / "solutions.jsonl"
    if not p.exists():
        raise FileNotFoundError(f"{p} not found; rerun with --dump-solutions")
    out = []
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            ok, worst = audit_dump(rec, tol)
            out.append((rec["sweep_value"], rec["scheme"], rec["seed"], ok, worst))
    return out
