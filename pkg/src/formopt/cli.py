"""``formopt`` command-line entry point.

Exit codes: 0 success, 2 bad input (missing or malformed files, invalid
parameters), 3 numerical failure (degenerate CHIM or surrogate data).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report as rpt
from .campaign import (
    CampaignConfig,
    RunLog,
    brute_force_max_utility,
    build_problem,
    replicate,
    run_campaign,
    write_summary,
)
from .design_space import ELEMENTS, Composition, generate_grid, to_weight_percent
from .errors import DegenerateDataError, DegenerateGeometryError, InvalidParameterError
from .oracle import OracleConfig, write_qoi_table

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("formopt")


def _load_config(args) -> CampaignConfig:
    cfg = CampaignConfig.load(args.config) if args.config else CampaignConfig()
    overrides = {}
    if args.step is not None:
        overrides["step"] = args.step
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "iters", None) is not None:
        overrides["n_iters"] = args.iters
    return replace(cfg, **overrides) if overrides else cfg


def _composition_lines(c: Composition, oracle: OracleConfig) -> list[str]:
    wt = to_weight_percent(c, oracle.molar_mass)
    at = 100 * c.as_array()
    return [
        "  at.%: " + "  ".join(f"{e} {v:6.2f}" for e, v in zip(ELEMENTS, at)),
        "  wt.%: " + "  ".join(f"{e} {v:6.2f}" for e, v in zip(ELEMENTS, wt)),
    ]


def cmd_gen_space(args) -> int:
    oracle = OracleConfig.load(args.config) if args.config else OracleConfig.default()
    grid = generate_grid(args.step if args.step is not None else 0.05)
    out = Path(args.out or "grid.csv")
    if out.is_dir():
        out = out / "grid.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_qoi_table(grid, oracle, out)
    print(f"{len(grid)} compositions written to {out}")
    return EXIT_OK


def cmd_campaign(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    run = run_campaign(cfg)
    run.write(out / "run.jsonl")
    write_summary(run.summary_rows(), out / "summary.csv")
    problem = build_problem(cfg)
    best = problem.grid[run.final["best_index"]]
    print(f"best utility {run.final_best:.6f} ({best.label()}) after {cfg.n_iters} iterations")
    print("\n".join(_composition_lines(best, problem.oracle)))
    print(f"run log: {out / 'run.jsonl'}")
    return EXIT_OK


def cmd_replicate(args) -> int:
    cfg = _load_config(args)
    reps = args.reps if args.reps is not None else 30
    out = Path(args.out or "replicates")
    out.mkdir(parents=True, exist_ok=True)
    logs, summary = replicate(cfg, reps, return_exceptions=True)
    failed = 0
    for r, lg in enumerate(logs):
        if isinstance(lg, RunLog):
            lg.write(out / f"run_{r:03d}.jsonl")
        else:
            failed += 1
            print(f"replication {r} (seed {cfg.seed + r}) failed: {lg}", file=sys.stderr)
    if summary:
        write_summary(summary, out / "summary.csv")
        final = summary[-1]
        print(f"{reps - failed}/{reps} replications; final best mean {final[1]:.6f} "
              f"min {final[2]:.6f} max {final[3]:.6f}")
    if failed:
        kinds = {type(lg) for lg in logs if not isinstance(lg, RunLog)}
        numeric = kinds <= {DegenerateGeometryError, DegenerateDataError, np.linalg.LinAlgError}
        return EXIT_NUMERIC if numeric else EXIT_INPUT
    return EXIT_OK


def cmd_brute_force(args) -> int:
    cfg = _load_config(args)
    umax, best, table = brute_force_max_utility(cfg)
    problem = build_problem(cfg)
    print(f"max utility {umax:.6f} at {best.label()} over {len(table)} compositions")
    print("\n".join(_composition_lines(best, problem.oracle)))
    if args.out:
        out = Path(args.out)
        if out.is_dir():
            out = out / "utilities.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        rows = [(i, *np.round(problem.grid.points[i], 6), u) for i, u in enumerate(table)]
        rpt.write_csv(out, ("index", *[e.lower() for e in ELEMENTS], "utility"), rows)
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.report:
        raise InvalidParameterError(f"--report is required; one of {', '.join(rpt.REPORT_KINDS)}")
    spec = rpt.ReportSpec(kind=args.report, inputs=tuple(args.input or ()),
                          out=args.out or "report", width=args.width, height=args.height)
    Path(spec.out).mkdir(parents=True, exist_ok=True)
    if spec.kind in ("convergence", "failed-attempts", "kde"):
        if not spec.inputs:
            raise FileNotFoundError(f"{spec.kind} report needs --input run logs")
        logs = rpt.load_runs(spec.inputs)
        if spec.kind == "convergence":
            rpt.convergence_report(spec, logs)
        elif spec.kind == "failed-attempts":
            rpt.failed_attempts_report(spec, logs)
        else:
            rpt.kde_report(spec, logs[0])
    elif spec.kind == "pentagon":
        cfg = _load_config(args)
        _, _, table = brute_force_max_utility(cfg)
        rpt.pentagon_report(spec, build_problem(cfg).grid, table)
    else:
        rpt.utility_curves_report(spec, build_problem(_load_config(args)).utility)
    print(f"wrote {spec.svg_path} and {spec.csv_path}")
    return EXIT_OK


COMMANDS = {
    "gen-space": (cmd_gen_space, "write the composition grid with its QoIs as CSV"),
    "campaign": (cmd_campaign, "run one seeded campaign"),
    "replicate": (cmd_replicate, "run seeded replications and summarise them"),
    "brute-force": (cmd_brute_force, "exhaustive utility maximum over the grid"),
    "report": (cmd_report, "render CSV + SVG reports"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--step", type=float, help="grid step in atomic fraction (default 0.05)")
        p.add_argument("--config", help="JSON config (oracle tables for gen-space, "
                                        "campaign settings otherwise)")
        p.add_argument("--seed", type=int, help="random seed (base seed for replicate)")
        p.add_argument("--out", help="output file or directory")
        if name in ("campaign", "replicate"):
            p.add_argument("--iters", type=int, help="design-loop iterations")
        if name == "replicate":
            p.add_argument("--reps", type=int, help="number of replications (default 30)")
        if name == "report":
            p.add_argument("--report", choices=rpt.REPORT_KINDS, help="report kind")
            p.add_argument("--input", nargs="+", help="run logs or directories of run logs")
            p.add_argument("--width", type=int, default=640)
            p.add_argument("--height", type=int, default=420)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except (DegenerateGeometryError, DegenerateDataError, np.linalg.LinAlgError) as exc:
        print(f"formopt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, InvalidParameterError, KeyError, TypeError) as exc:
        print(f"formopt: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
