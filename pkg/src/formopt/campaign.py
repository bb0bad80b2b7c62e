"""Bayesian optimisation over problem-formulation space.

A campaign starts from ``n_init`` evaluated designs, projects them onto the
CHIM to obtain their formulations, and then repeatedly

1. samples candidate formulations from a KDE of the solved ones,
2. drops candidates the feasibility classifier or the GP_Q range check rejects,
3. ranks the survivors by expected improvement under GP_U,
4. solves the best candidate's NBI subproblem, labelling failures as
   infeasible and moving on to the next candidate,
5. scores the solved design and refits every model.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import nbi
from .design_space import Composition, DesignGrid, generate_grid
from .errors import InvalidParameterError
from .oracle import OracleConfig, eval_all, to_external
from .sampler import KdeModel, fit_kde, kde_density, sample_candidates
from .surrogate import (
    FeasibilityModel,
    GpModel,
    QoiRangeFilter,
    expected_improvement,
    fit_feasibility,
    fit_gp,
    fit_gp_multi,
    gpq_range_check,
)
from .utility import UtilityModel, Weights

log = logging.getLogger(__name__)

# fully filtered candidate batches tolerated before an iteration is abandoned
MAX_EMPTY_BATCHES = 10


@dataclass(frozen=True)
class CampaignConfig:
    step: float = 0.05
    oracle_path: str | None = None
    weights: Weights = Weights()
    utility: dict | None = None  # serialised UtilityModel; None anchors curves on the grid
    n_init: int = 40
    n_iters: int = 40
    n_candidates: int = 500
    eps: float | None = None  # None -> eps_fraction * mean standardised QoI range
    eps_fraction: float = 0.05
    theta: float = 0.5
    max_retries: int = 50
    range_margin: float = 0.1
    seed: int = 0
    record_wall_time: bool = False

    def __post_init__(self):
        for name in ("n_init", "n_candidates", "max_retries"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        if self.n_init < 2:
            raise InvalidParameterError("n_init must be >= 2 to fit the surrogates")
        if self.n_iters < 0:
            raise InvalidParameterError("n_iters must be >= 0")
        if self.eps is not None and not self.eps > 0:
            raise InvalidParameterError("eps must be positive")
        if not 0 < self.theta < 1:
            raise InvalidParameterError("theta must lie in (0, 1)")

    def oracle(self) -> OracleConfig:
        return OracleConfig.load(self.oracle_path) if self.oracle_path else OracleConfig.default()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = asdict(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CampaignConfig:
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidParameterError(f"unknown campaign config keys: {sorted(unknown)}")
        if "weights" in d:
            d["weights"] = Weights(**d["weights"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> CampaignConfig:
        with open(path) as fh:
            d = json.load(fh)
        oracle = d.get("oracle_path")
        if oracle and not Path(oracle).is_absolute():
            d["oracle_path"] = str((Path(path).parent / oracle).resolve())
        return cls.from_dict(d)


@dataclass(frozen=True, eq=False)
class AlloyProblem:
    """Everything about a campaign that does not depend on the seed."""

    grid: DesignGrid
    oracle: OracleConfig
    q_internal: np.ndarray  # (n, 4) raw internal QoIs
    scale: np.ndarray  # per-QoI grid range used to standardise
    objectives: np.ndarray  # q_internal / scale, what NBI sees
    chim: nbi.Chim
    eps: float
    utility: UtilityModel
    utilities: np.ndarray  # aggregate utility of every grid point
    range_filter: QoiRangeFilter

    @property
    def shifted(self) -> np.ndarray:
        return self.objectives - self.chim.utopia


def build_problem(cfg: CampaignConfig) -> AlloyProblem:
    return _build_problem(cfg.step, cfg.oracle_path, cfg.weights, _freeze(cfg.utility),
                          cfg.eps, cfg.eps_fraction, cfg.range_margin)


def _freeze(d):
    return None if d is None else json.dumps(d, sort_keys=True)


@lru_cache(maxsize=8)
def _build_problem(step, oracle_path, weights, utility_json, eps, eps_fraction, range_margin):
    grid = generate_grid(step)
    oracle = OracleConfig.load(oracle_path) if oracle_path else OracleConfig.default()
    q = eval_all(grid, oracle)
    scale = q.max(axis=0) - q.min(axis=0)
    scale[scale == 0] = 1.0
    objectives = q / scale
    chim = nbi.chim_from_objectives(objectives, list(grid))
    if utility_json is None:
        utility = UtilityModel.for_grid(grid, oracle, weights)
    else:
        utility = replace(UtilityModel.from_dict(json.loads(utility_json)), weights=weights)
    shifted = objectives - chim.utopia
    return AlloyProblem(
        grid=grid,
        oracle=oracle,
        q_internal=q,
        scale=scale,
        objectives=objectives,
        chim=chim,
        eps=eps if eps is not None else nbi.default_eps(objectives, eps_fraction),
        utility=utility,
        utilities=utility(to_external(q)),
        range_filter=QoiRangeFilter.from_values(shifted, range_margin),
    )


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    beta: list | None
    ei: float | None
    failed_attempts: int
    utility: float | None
    best: float
    design_index: int | None
    wall_ms: float | None = None

    def to_json(self) -> dict:
        return {
            "type": "iteration",
            "iter": self.iteration,
            "beta": self.beta,
            "ei": self.ei,
            "failed_attempts": self.failed_attempts,
            "utility": self.utility,
            "best": self.best,
            "design_index": self.design_index,
            "wall_ms": self.wall_ms,
        }


@dataclass(eq=False)
class CampaignState:
    cfg: CampaignConfig
    problem: AlloyProblem
    rng: np.random.Generator
    betas: list = field(default_factory=list)
    design_indices: list = field(default_factory=list)
    utilities: list = field(default_factory=list)
    q_shifted: list = field(default_factory=list)
    label_inputs: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    gp_u: GpModel | None = None
    gp_q: tuple = ()
    classifier: FeasibilityModel | None = None
    iteration: int = 0
    records: list = field(default_factory=list)

    @property
    def n_solved(self) -> int:
        return len(self.betas)

    @property
    def best_position(self) -> int:
        return int(np.argmax(self.utilities))

    @property
    def best_utility(self) -> float:
        return float(self.utilities[self.best_position])

    @property
    def best_index(self) -> int:
        return self.design_indices[self.best_position]

    @property
    def best_beta(self) -> np.ndarray:
        return self.betas[self.best_position]

    @property
    def best_design(self) -> Composition:
        return self.problem.grid[self.best_index]

    def kde(self) -> KdeModel:
        return fit_kde(np.array(self.betas))

    def refit_surrogates(self):
        x = np.array(self.betas)
        self.gp_u = fit_gp(x, np.array(self.utilities), center=True)
        self.gp_q = fit_gp_multi(x, np.array(self.q_shifted))
        self.refit_classifier()

    def refit_classifier(self):
        self.classifier = fit_feasibility(np.array(self.label_inputs), np.array(self.labels),
                                          self.cfg.theta)

    def add_solution(self, beta, index: int):
        p = self.problem
        self.betas.append(np.asarray(beta, dtype=float))
        self.design_indices.append(int(index))
        self.utilities.append(float(p.utilities[index]))
        self.q_shifted.append(p.shifted[index])
        self.label_inputs.append(np.asarray(beta, dtype=float))
        self.labels.append(1.0)


def initialize(cfg: CampaignConfig, problem: AlloyProblem | None = None) -> CampaignState:
    """Evaluate ``n_init`` random grid designs, project them and fit all models."""
    problem = problem or build_problem(cfg)
    if cfg.n_init > len(problem.grid):
        raise InvalidParameterError("n_init exceeds the number of grid points")
    rng = np.random.default_rng(cfg.seed)
    state = CampaignState(cfg=cfg, problem=problem, rng=rng)
    idx = rng.choice(len(problem.grid), size=cfg.n_init, replace=False)
    betas, _ = nbi.project_to_chim(problem.chim, problem.objectives[idx])
    for i, b in zip(idx, betas):
        state.add_solution(b, int(i))
    state.refit_surrogates()
    return state


def _screen(state: CampaignState, cands: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean, var = state.gp_u.predict(cands)
    ei = expected_improvement(mean, var, state.best_utility)
    ok = state.classifier.passes(cands) & gpq_range_check(
        state.gp_q, cands, state.problem.range_filter
    )
    return ei, ok


def run_iteration(state: CampaignState) -> tuple[CampaignState, IterationRecord]:
    """Advance ``state`` (in place) by one design-loop iteration."""
    t0 = time.perf_counter()
    cfg, problem = state.cfg, state.problem
    state.iteration += 1
    kde = state.kde()
    failed = 0
    empty_batches = 0
    chosen = None
    while failed < cfg.max_retries and chosen is None:
        cands = sample_candidates(kde, cfg.n_candidates, state.rng)
        ei, ok = _screen(state, cands)
        if not ok.any():
            empty_batches += 1
            if empty_batches >= MAX_EMPTY_BATCHES:
                break
            continue
        # stable sort: equal EI keeps sampling order
        for j in np.argsort(-ei, kind="stable"):
            if not ok[j]:
                continue
            sol = nbi.solve_subproblem(problem.chim, cands[j], problem.objectives, problem.eps)
            if sol is not None:
                chosen = (cands[j], float(ei[j]), sol)
                break
            failed += 1
            state.label_inputs.append(cands[j])
            state.labels.append(0.0)
            state.refit_classifier()
            if failed >= cfg.max_retries:
                break
            ok &= state.classifier.passes(cands)

    if chosen is None:
        record = IterationRecord(state.iteration, None, None, failed, None,
                                 state.best_utility, None)
    else:
        beta, ei_value, sol = chosen
        state.add_solution(beta, sol.index)
        state.refit_surrogates()
        record = IterationRecord(
            iteration=state.iteration,
            beta=beta.tolist(),
            ei=ei_value,
            failed_attempts=failed,
            utility=state.utilities[-1],
            best=state.best_utility,
            design_index=sol.index,
        )
    if cfg.record_wall_time:
        record = replace(record, wall_ms=1e3 * (time.perf_counter() - t0))
    state.records.append(record)
    return state, record


@dataclass(eq=False)
class RunLog:
    header: dict
    records: list[IterationRecord]
    final: dict

    @property
    def initial_best(self) -> float:
        return self.header["initial_best"]

    @property
    def best_trace(self) -> np.ndarray:
        """Best-so-far utility after initialisation and after every iteration."""
        return np.array([self.initial_best] + [r.best for r in self.records])

    @property
    def failed_trace(self) -> np.ndarray:
        return np.array([r.failed_attempts for r in self.records], dtype=float)

    @property
    def final_best(self) -> float:
        return self.final["best_utility"]

    def kde_snapshot(self, which: str) -> KdeModel:
        return KdeModel.from_dict(self.final["kde"][which])

    def lines(self) -> list[str]:
        out = [json.dumps(self.header)]
        out += [json.dumps(r.to_json()) for r in self.records]
        out.append(json.dumps(self.final))
        return out

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> RunLog:
        header, final, records = None, None, []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            kind = d.get("type")
            if kind == "header":
                header = d
            elif kind == "final":
                final = d
            else:
                records.append(IterationRecord(
                    iteration=d["iter"], beta=d["beta"], ei=d["ei"],
                    failed_attempts=d["failed_attempts"], utility=d["utility"], best=d["best"],
                    design_index=d["design_index"], wall_ms=d["wall_ms"],
                ))
        if header is None or final is None:
            raise InvalidParameterError(f"{path} is not a complete run log")
        return cls(header, records, final)

    def summary_rows(self) -> list[tuple]:
        return summarize([self])


def _header(state: CampaignState) -> dict:
    p = state.problem
    return {
        "type": "header",
        "config": state.cfg.to_dict(),
        "oracle": p.oracle.to_dict(),
        "utility": p.utility.to_dict(),
        "grid_points": len(p.grid),
        "qoi_scale": p.scale.tolist(),
        "eps": p.eps,
        "chim": p.chim.to_dict(),
        "n_init": state.n_solved,
        "initial_best": state.best_utility,
        "initial_best_index": state.best_index,
    }


def _final(state: CampaignState, kde0: KdeModel) -> dict:
    best = state.best_design
    return {
        "type": "final",
        "best_utility": state.best_utility,
        "best_index": state.best_index,
        "best_beta": state.best_beta.tolist(),
        "best_composition": list(best.fractions),
        "n_solved": state.n_solved,
        "n_labels": len(state.labels),
        "n_infeasible_labels": int(sum(1 for v in state.labels if v == 0.0)),
        "solved": {
            "betas": np.array(state.betas).tolist(),
            "design_indices": state.design_indices,
            "utilities": state.utilities,
        },
        "models": {
            "gp_u": state.gp_u.describe(),
            "gp_q": [m.describe() for m in state.gp_q],
            "classifier": state.classifier.gp.describe() if state.classifier.gp else None,
        },
        "kde": {"initial": kde0.to_dict(), "final": state.kde().to_dict()},
    }


def run_campaign(cfg: CampaignConfig, problem: AlloyProblem | None = None) -> RunLog:
    state = initialize(cfg, problem)
    header = _header(state)
    kde0 = state.kde()
    for _ in range(cfg.n_iters):
        _, rec = run_iteration(state)
        log.debug("iter %d best=%.4f failed=%d", rec.iteration, rec.best, rec.failed_attempts)
    return RunLog(header, list(state.records), _final(state, kde0))


def _run_seed(args) -> RunLog | Exception:
    cfg, seed, keep_going = args
    try:
        return run_campaign(replace(cfg, seed=seed))
    except Exception as exc:  # reported per replication by the caller
        if not keep_going:
            raise
        return exc


def worker_count(n_tasks: int) -> int:
    env = os.environ.get("FORMOPT_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def replicate(cfg: CampaignConfig, n_reps: int, base_seed: int | None = None,
              workers: int | None = None, return_exceptions: bool = False):
    """Run ``n_reps`` campaigns with seeds ``base_seed + rep`` and summarise them.

    Returns ``(logs, summary)`` in rep order. With ``return_exceptions`` a
    failing replication contributes its exception in place of a log and is
    left out of the summary.
    """
    if n_reps < 1:
        raise InvalidParameterError("n_reps must be >= 1")
    base = cfg.seed if base_seed is None else base_seed
    tasks = [(cfg, base + r, return_exceptions) for r in range(n_reps)]
    workers = workers or worker_count(n_reps)
    if workers == 1:
        logs = [_run_seed(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_run_seed, tasks))
    ok = [lg for lg in logs if isinstance(lg, RunLog)]
    return logs, (summarize(ok) if ok else [])


SUMMARY_COLUMNS = ("iter", "mean_best", "min_best", "max_best", "mean_failed")


def summarize(logs: list[RunLog]) -> list[tuple]:
    """Per-iteration rows ``(iter, mean_best, min_best, max_best, mean_failed)``; row 0 is the init."""
    best = np.array([lg.best_trace for lg in logs])
    failed = np.array([np.concatenate([[0.0], lg.failed_trace]) for lg in logs])
    return [
        (i, float(best[:, i].mean()), float(best[:, i].min()), float(best[:, i].max()),
         float(failed[:, i].mean()))
        for i in range(best.shape[1])
    ]


def write_summary(rows: list[tuple], path: str | Path) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    lines += [f"{i},{a!r},{b!r},{c!r},{d!r}" for i, a, b, c, d in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def brute_force_max_utility(cfg: CampaignConfig, problem: AlloyProblem | None = None):
    """Exhaustive maximum of the aggregate utility over the design grid.

    Returns ``(max_utility, argmax_composition, utilities)``; ties resolve to
    the lowest grid index.
    """
    problem = problem or build_problem(cfg)
    u = problem.utilities
    i = int(np.argmax(u))
    return float(u[i]), problem.grid[i], u.copy()


def kde_gain(log: RunLog) -> tuple[float, float]:
    """Initial and final KDE density at the best solved formulation."""
    beta = np.array(log.final["best_beta"])
    return (kde_density(log.kde_snapshot("initial"), beta),
            kde_density(log.kde_snapshot("final"), beta))
