"""Reproducible experiment drivers behind the command-line tool.

Every trial draws its seed from ``SeedSequence([master_seed, trial_index])``
so results do not depend on how trials are scheduled across workers; output
rows are assembled in trial order after all workers finish.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coloring import DEFAULT_EPSILON_CAP, PlanError, build_plan, dsatur, exact_chromatic, execute_plan, validate
from .indsets import count_typed_sets, log_expected_count
from .model import BlockModel, classify_pair, load_model
from .region import boundary_export, c_star
from .sampler import part_sizes, sample

TREND_COLUMNS = [
    "row", "n", "seed", "colors", "predicted", "ratio",
    "phase1_colors", "cleanup_colors", "singleton_colors", "error",
]


@dataclass
class ExperimentConfig:
    """Inputs shared by the experiment drivers.

    ``seeds`` is the number of trials per graph size; trial ``i`` uses
    :func:`trial_seed` of ``(master_seed, i)``.
    """

    model: BlockModel
    n_values: tuple[int, ...] = (500, 2000, 8000)
    seeds: int = 5
    master_seed: int = 0
    tol: float = 1e-6
    resolution: int = 64
    epsilon_cap: float = DEFAULT_EPSILON_CAP
    threads: int = 1
    out_dir: Path | None = None
    model_path: Path | None = field(default=None, repr=False)

    def __post_init__(self):
        self.n_values = tuple(int(n) for n in self.n_values)
        if not self.n_values:
            raise ValueError("at least one n is required")
        small = [n for n in self.n_values if n < max(self.model.k, 3)]
        if small:
            raise ValueError(f"n values must be >= max(k, 3); got {small}")
        if self.seeds < 1:
            raise ValueError("seed count must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not 0 < self.epsilon_cap < 1:
            raise ValueError("epsilon_cap must lie in (0, 1)")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    @classmethod
    def from_file(cls, path, **kwargs) -> "ExperimentConfig":
        return cls(model=load_model(path), model_path=Path(path), **kwargs)


def trial_seed(master_seed: int, index: int) -> int:
    """64-bit seed of trial ``index``, a hash of ``(master_seed, index)``."""
    ss = np.random.SeedSequence([int(master_seed) & ((1 << 64) - 1), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _pool_map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _trend_trial(model: BlockModel, cstar, n: int, seed: int, epsilon_cap: float) -> dict:
    row = {"row": "trial", "n": n, "seed": seed}
    try:
        g = sample(model, n, seed)
        plan = build_plan(model, n, cstar, epsilon_cap)
        coloring, report = execute_plan(g, plan, model, seed=seed)
        if not validate(g, coloring):
            raise RuntimeError("improper coloring")
        row.update(
            colors=report.colors_used,
            predicted=report.predicted,
            ratio=report.ratio,
            phase1_colors=report.phase1_colors,
            cleanup_colors=report.cleanup_colors,
            singleton_colors=report.singleton_colors,
        )
    except Exception as exc:  # one bad trial should not sink the table
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def trend_rows(config: ExperimentConfig) -> list[dict]:
    """Per-trial rows sorted by ``(n, seed index)``, each size followed by its median row."""
    cstar = c_star(config.model, resolution=config.resolution, tol=config.tol)
    jobs = [(n, trial_seed(config.master_seed, i)) for n in sorted(config.n_values) for i in range(config.seeds)]
    results = _pool_map(lambda job: _trend_trial(config.model, cstar, job[0], job[1], config.epsilon_cap), jobs, config.threads)
    rows = []
    for n in sorted(config.n_values):
        trials = [r for r in results if r["n"] == n]
        rows.extend(trials)
        good = [r for r in trials if not r.get("error")]
        summary = {"row": "median", "n": n, "seed": ""}
        if good:
            for key in ("colors", "predicted", "ratio", "phase1_colors", "cleanup_colors", "singleton_colors"):
                summary[key] = float(statistics.median(r[key] for r in good))
        else:
            summary["error"] = "no successful trials"
        rows.append(summary)
    return rows


def run_trend(config: ExperimentConfig) -> str:
    """Color sampled graphs at every ``n`` and return the CSV table."""
    return to_csv(TREND_COLUMNS, trend_rows(config))


def trend_medians(csv_text: str) -> dict[int, float]:
    """Median ratio per ``n`` read back from a trend table."""
    out = {}
    for row in csv.DictReader(io.StringIO(csv_text)):
        if row["row"] == "median" and row["ratio"]:
            out[int(row["n"])] = float(row["ratio"])
    return out


def gallery_p12(p1: float, p2: float) -> dict[str, float]:
    """One cross probability per qualitative boundary shape for ``p1 <= p2``.

    Cases A to E sit below ``1 - sqrt(1 - p1)``, between the two one-sided
    thresholds, below the convexity threshold, on it, and above it.
    Intervals that are empty for the given ``p1, p2`` are left out.
    """
    if not 0 < p1 <= p2 < 1:
        raise ValueError("need 0 < p1 <= p2 < 1")
    a = 1 - math.sqrt(1 - p1)
    b = 1 - math.sqrt(1 - p2)
    m = 1 - math.sqrt((1 - p1) * (1 - p2))
    cases = {"A": a / 2}
    if b > a:
        cases["B"] = (a + b) / 2
    if m > b:
        cases["C"] = (b + m) / 2
    cases["D"] = m
    cases["E"] = (m + 1) / 2
    return cases


def run_shape_gallery(p1: float, p2: float, resolution: int = 64, alpha=(0.5, 0.5)) -> dict[str, tuple[float, str, str]]:
    """Boundary tables for each shape case.

    Returns ``{case: (p12, shape, csv_text)}``.
    """
    out = {}
    for case, p12 in gallery_p12(p1, p2).items():
        model = BlockModel(alpha, [[p1, p12], [p12, p2]])
        rows = [{"c1": c1, "c2": c2, "binding_subset": b} for c1, c2, b in boundary_export(model, resolution)]
        text = to_csv(["c1", "c2", "binding_subset"], rows)
        out[case] = (p12, classify_pair(model, 0, 1).value, text)
    return out


def mc_count(model: BlockModel, n: int, t, trials: int, master_seed: int = 0, threads: int = 1) -> dict:
    """Monte Carlo mean of exact ``t``-set counts against the expectation ``mu``."""
    t = np.asarray(t, dtype=np.int64)
    if t.shape != (model.k,):
        raise ValueError(f"type must have {model.k} entries")
    if trials < 2:
        raise ValueError("need at least two trials")
    sizes = part_sizes(model.alpha, n)
    mu = math.exp(log_expected_count(model, sizes, t))
    seeds = [trial_seed(master_seed, i) for i in range(trials)]
    counts = np.array(_pool_map(lambda s: count_typed_sets(sample(model, n, s), t), seeds, threads), dtype=float)
    mean = float(counts.mean())
    se = float(counts.std(ddof=1)) / math.sqrt(trials)
    if se > 0:
        z = (mean - mu) / se
    else:
        z = 0.0 if math.isclose(mean, mu, rel_tol=1e-9) else None
    return {"empirical_mean": mean, "mu": mu, "z_score": z, "trials": trials, "n": n, "type": t.tolist()}


def oracle_compare(model: BlockModel, n: int, trials: int, master_seed: int = 0, epsilon_cap: float = DEFAULT_EPSILON_CAP, threads: int = 1) -> list[dict]:
    """Exact, DSATUR and plan color counts on small sampled graphs."""
    if n > 14:
        raise ValueError("oracle comparison is limited to n <= 14")
    cstar = c_star(model)

    def one(i):
        seed = trial_seed(master_seed, i)
        g = sample(model, n, seed)
        base = dsatur(g)
        try:
            plan = build_plan(model, n, cstar, epsilon_cap)
            col, _ = execute_plan(g, plan, model, seed=seed)
        except PlanError:
            col = base
        return {
            "trial": i,
            "seed": seed,
            "exact": exact_chromatic(g),
            "dsatur": base.num_colors,
            "plan": col.num_colors,
            "valid": validate(g, base) and validate(g, col),
        }

    return _pool_map(one, range(trials), threads)
