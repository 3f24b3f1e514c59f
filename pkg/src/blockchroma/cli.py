"""Command-line entry point ``blockchroma``.

Exit codes: 0 success, 1 invalid model or configuration, 2 budget or
feasibility failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .coloring import DEFAULT_EPSILON_CAP, PlanError, build_plan, dsatur, execute_plan, predicted_chi_range, validate
from .experiments import (
    ExperimentConfig,
    mc_count,
    oracle_compare,
    run_shape_gallery,
    run_trend,
    to_csv,
)
from .indsets import SearchBudget
from .model import ModelError, load_model
from .region import BudgetExceeded, PreconditionViolated, boundary_export, c_star
from .sampler import sample

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_IO = 0, 1, 2, 3
REPORT_COLUMNS = [
    "n", "seed", "method", "colors", "predicted_lower", "predicted_upper",
    "ratio", "cleanup_colors", "singleton_colors",
]


class FeasibilityError(RuntimeError):
    """A run finished but could not meet its numeric contract."""


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", type=Path, help="model JSON file {k, alpha, P}")
    common.add_argument("--seed", type=_u64, default=0, help="master seed (default 0)")
    common.add_argument("--out-dir", type=Path, help="write outputs here instead of stdout")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")

    parser = argparse.ArgumentParser(prog="blockchroma", description="Chromatic constant and colorings of random block graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cstar", parents=[common], help="certified bracket for c*")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--resolution", type=int, default=64)

    p = sub.add_parser("region-export", parents=[common], help="boundary of the admissible region (k = 2)")
    p.add_argument("--resolution", type=int, default=64)

    p = sub.add_parser("sample", parents=[common], help="sample a graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("color", parents=[common], help="color one sampled graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon-cap", type=float, default=DEFAULT_EPSILON_CAP)
    p.add_argument("--baseline", choices=["dsatur"])
    p.add_argument("--report", type=Path, help="CSV report path")

    p = sub.add_parser("mc-count", parents=[common], help="Monte Carlo check of the expected typed-set count")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--type", type=_int_list, required=True, dest="type_vector")
    p.add_argument("--trials", type=int, default=2000)

    p = sub.add_parser("oracle-compare", parents=[common], help="exact vs DSATUR vs plan on tiny graphs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--epsilon-cap", type=float, default=DEFAULT_EPSILON_CAP)

    p = sub.add_parser("trend", parents=[common], help="coloring ratio across graph sizes")
    p.add_argument("--n", type=_int_list, default=[500, 2000, 8000], dest="n_values")
    p.add_argument("--seeds", type=int, default=5, help="trials per size")
    p.add_argument("--epsilon-cap", type=float, default=DEFAULT_EPSILON_CAP)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("shape-gallery", parents=[common], help="boundary tables for the five two-part shapes")
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--resolution", type=int, default=64)
    return parser


def _model(args):
    if args.model is None:
        raise ModelError("--model is required for this command")
    return load_model(args.model)


def _emit(args, name: str, text: str) -> None:
    if args.out_dir is None:
        sys.stdout.write(text)
        return
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / name).write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_cstar(args) -> int:
    model = _model(args)
    result = c_star(model, resolution=args.resolution, tol=args.tol)
    _emit(args, "cstar.json", _json(result.to_dict()))
    return EXIT_BUDGET if result.budget_exceeded else EXIT_OK


def cmd_region_export(args) -> int:
    model = _model(args)
    rows = [{"c1": c1, "c2": c2, "binding_subset": b} for c1, c2, b in boundary_export(model, args.resolution)]
    _emit(args, "region.csv", to_csv(["c1", "c2", "binding_subset"], rows))
    return EXIT_OK


def cmd_sample(args) -> int:
    model = _model(args)
    text = sample(model, args.n, args.seed, threads=args.threads).to_text()
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        _emit(args, "graph.txt", text)
    return EXIT_OK


def cmd_color(args) -> int:
    model = _model(args)
    g = sample(model, args.n, args.seed, threads=args.threads)
    cs = c_star(model)
    lo, hi = predicted_chi_range(model, args.n, cs)
    plan = build_plan(model, args.n, cs, args.epsilon_cap)
    coloring, report = execute_plan(g, plan, model, SearchBudget(), args.seed)
    if not validate(g, coloring):
        raise FeasibilityError("plan produced an improper coloring")
    rows = [{
        "n": args.n, "seed": args.seed, "method": "plan", "colors": report.colors_used,
        "predicted_lower": lo, "predicted_upper": hi, "ratio": report.ratio,
        "cleanup_colors": report.cleanup_colors, "singleton_colors": report.singleton_colors,
    }]
    if args.baseline == "dsatur":
        base = dsatur(g)
        rows.append({
            "n": args.n, "seed": args.seed, "method": "dsatur", "colors": base.num_colors,
            "predicted_lower": lo, "predicted_upper": hi, "ratio": base.num_colors / hi,
            "cleanup_colors": 0, "singleton_colors": 0,
        })
    text = to_csv(REPORT_COLUMNS, rows)
    if args.report is not None:
        args.report.write_text(text, encoding="utf-8")
    else:
        _emit(args, "color_report.csv", text)
    return EXIT_OK


def cmd_mc_count(args) -> int:
    model = _model(args)
    out = mc_count(model, args.n, args.type_vector, args.trials, args.seed, args.threads)
    _emit(args, "mc_count.json", _json(out))
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    model = _model(args)
    rows = oracle_compare(model, args.n, args.trials, args.seed, args.epsilon_cap, args.threads)
    _emit(args, "oracle_compare.csv", to_csv(["exact", "dsatur", "plan"], rows))
    if not all(r["valid"] for r in rows):
        raise FeasibilityError("an improper coloring was produced")
    return EXIT_OK


def cmd_trend(args) -> int:
    config = ExperimentConfig(
        model=_model(args),
        n_values=args.n_values,
        seeds=args.seeds,
        master_seed=args.seed,
        tol=args.tol,
        epsilon_cap=args.epsilon_cap,
        threads=args.threads,
    )
    _emit(args, "trend.csv", run_trend(config))
    return EXIT_OK


def cmd_shape_gallery(args) -> int:
    p1, p2 = args.p1, args.p2
    if p1 is None or p2 is None:
        model = _model(args)
        if model.k != 2:
            raise ModelError("shape-gallery needs a two-part model or --p1/--p2")
        p1, p2 = sorted(model.diag.tolist())
    cases = run_shape_gallery(p1, p2, args.resolution)
    index = [{"case": c, "p12": p12, "shape": shape, "file": f"shape_{c}.csv"} for c, (p12, shape, _) in cases.items()]
    if args.out_dir is None:
        for c, (p12, shape, text) in cases.items():
            sys.stdout.write(f"# case {c} p12={p12:.6f} {shape}\n{text}")
        return EXIT_OK
    for c, (_, _, text) in cases.items():
        _emit(args, f"shape_{c}.csv", text)
    _emit(args, "gallery.csv", to_csv(["case", "p12", "shape", "file"], index))
    return EXIT_OK


COMMANDS = {
    "cstar": cmd_cstar,
    "region-export": cmd_region_export,
    "sample": cmd_sample,
    "color": cmd_color,
    "mc-count": cmd_mc_count,
    "oracle-compare": cmd_oracle_compare,
    "trend": cmd_trend,
    "shape-gallery": cmd_shape_gallery,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ModelError("--threads must be >= 1")
        return COMMANDS[args.command](args)
    except (PlanError, BudgetExceeded, FeasibilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ModelError, PreconditionViolated, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
