"""
A short design campaign
=======================

Runs one campaign, then a handful of replications, and compares the best
utility found with the exhaustive maximum over the grid. Reports are
written to a temporary directory as SVG plus CSV.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from formopt.campaign import CampaignConfig, brute_force_max_utility, replicate, run_campaign
from formopt.design_space import generate_grid
from formopt.report import ReportSpec, convergence_report, failed_attempts_report, kde_report

cfg = CampaignConfig(n_iters=15, seed=1)
umax, best, _ = brute_force_max_utility(cfg)
print(f"exhaustive maximum {umax:.4f} at {best.label()}")

# one campaign: the best-so-far trace never decreases
log = run_campaign(cfg)
grid = generate_grid(cfg.step)
solved = log.final["solved"]
top = solved["design_indices"][int(np.argmax(solved["utilities"]))]
print(f"initial best {log.initial_best:.4f}, final best {log.final_best:.4f} "
      f"({log.final_best / umax:.1%} of the maximum) at {grid[top].label()}")
print("failed attempts per iteration:", log.failed_trace.astype(int).tolist())

# replications with consecutive seeds
logs, summary = replicate(replace(cfg, n_iters=10), 5, base_seed=100, workers=1)
for it, mean_b, lo, hi, failed in summary[::5]:
    print(f"iter {it:2d}: mean best {mean_b:.4f} (range {lo:.4f}..{hi:.4f}), "
          f"mean failed {failed:.1f}")

out = Path(tempfile.mkdtemp(prefix="formopt-"))
runs = []
for lg in logs:
    runs.append(out / f"run_{lg.header['config']['seed']:03d}.jsonl")
    lg.write(runs[-1])
convergence_report(ReportSpec("convergence", runs, out), logs)
failed_attempts_report(ReportSpec("failed-attempts", runs, out), logs)
kde_report(ReportSpec("kde", runs[:1], out), logs[0])
print("reports:", sorted(p.name for p in out.iterdir() if p.suffix in (".svg", ".csv")))
