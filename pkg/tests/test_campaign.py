import json
from dataclasses import replace

import numpy as np
import pytest

from formopt import nbi
from formopt.campaign import (
    CampaignConfig,
    RunLog,
    brute_force_max_utility,
    build_problem,
    initialize,
    replicate,
    run_campaign,
    run_iteration,
    summarize,
    write_summary,
)
from formopt.design_space import generate_grid
from formopt.errors import InvalidParameterError
from formopt.oracle import OracleConfig, eval_all, to_external
from formopt.surrogate import expected_improvement
from formopt.utility import UtilityModel, Weights

SHORT = CampaignConfig(n_iters=6, seed=11)


@pytest.fixture(scope="module")
def short_log():
    return run_campaign(SHORT)


def test_initialize():
    st = initialize(CampaignConfig(seed=4))
    assert st.gp_u.n == 40 and st.n_solved == 40
    assert st.best_utility == max(st.utilities)
    assert len(set(st.design_indices)) == 40
    again = initialize(CampaignConfig(seed=4))
    assert again.design_indices == st.design_indices
    assert np.array_equal(np.array(again.betas), np.array(st.betas))
    # initial formulations are exact projections of the initial designs
    p = st.problem
    b, _ = nbi.project_to_chim(p.chim, p.objectives[st.design_indices])
    assert np.array_equal(b, np.array(st.betas))


def test_determinism(short_log):
    assert run_campaign(SHORT).lines() == short_log.lines()


def test_monotone_best(short_log):
    assert np.all(np.diff(short_log.best_trace) >= 0)


def test_bookkeeping(short_log):
    f = short_log.final
    successes = sum(r.design_index is not None for r in short_log.records)
    assert f["n_solved"] == SHORT.n_init + successes
    assert f["n_labels"] == f["n_solved"] + int(short_log.failed_trace.sum())
    assert f["n_infeasible_labels"] == int(short_log.failed_trace.sum())
    assert all(r.failed_attempts <= SHORT.max_retries for r in short_log.records)


def test_solved_utilities_recomputed(short_log):
    grid = generate_grid(0.05)
    oracle = OracleConfig.default()
    model = UtilityModel.for_grid(grid, oracle)
    sol = short_log.final["solved"]
    for i, u in zip(sol["design_indices"], sol["utilities"]):
        assert 0 <= i < len(grid)
        assert model(to_external(eval_all(grid[i], oracle))) == pytest.approx(u, rel=0, abs=1e-12)
    assert short_log.final_best == max(sol["utilities"])


def test_zero_iterations():
    lg = run_campaign(replace(SHORT, n_iters=0))
    assert lg.records == [] and lg.final_best == lg.initial_best
    assert len(summarize([lg])) == 1


def test_replicate_single(short_log):
    logs, summary = replicate(SHORT, 1, workers=1)
    assert logs[0].lines() == short_log.lines()
    assert [r[1] for r in summary] == list(short_log.best_trace)
    assert [r[2] for r in summary] == [r[3] for r in summary] == [r[1] for r in summary]


def test_replicate_order_independent():
    cfg = replace(SHORT, n_iters=3)
    serial, s1 = replicate(cfg, 3, base_seed=20, workers=1)
    pooled, s2 = replicate(cfg, 3, base_seed=20, workers=3)
    assert [lg.lines() for lg in serial] == [lg.lines() for lg in pooled]
    assert s1 == s2
    assert [lg.header["config"]["seed"] for lg in serial] == [20, 21, 22]


def test_mean_best_below_brute_force():
    umax, _, _ = brute_force_max_utility(SHORT)
    _, summary = replicate(replace(SHORT, n_iters=3), 3, workers=1)
    assert all(r[1] <= umax + 1e-12 and r[3] <= umax + 1e-12 for r in summary)


def test_brute_force():
    umax, best, table = brute_force_max_utility(CampaignConfig())
    assert len(table) == 10626
    idx = np.random.default_rng(0).choice(len(table), 1000, replace=False)
    assert np.all(umax >= table[idx])
    assert table[int(np.argmax(table))] == umax
    grid = generate_grid(0.05)
    assert grid[int(np.argmax(table))] == best


def test_brute_force_solidification_only():
    cfg = CampaignConfig(weights=Weights(cp=0, ys=0, density=0, sr=1))
    umax, best, _ = brute_force_max_utility(cfg)
    assert umax == 1.0
    assert sorted(best.fractions) == [0.0, 0.0, 0.0, 0.0, 1.0]


def test_solved_formulation_has_no_ei():
    st = initialize(SHORT)
    mean, var = st.gp_u.predict(np.array(st.betas))
    ei = expected_improvement(mean, var, st.best_utility)
    assert ei.max() < 1e-3 * st.gp_u.signal_variance ** 0.5


def test_retry_exhaustion_keeps_state():
    # an eps this small leaves almost every formulation without a solution
    cfg = replace(SHORT, eps=1e-9, max_retries=3, n_candidates=20)
    st = initialize(cfg)
    before = (list(st.design_indices), st.best_utility, len(st.labels))
    _, rec = run_iteration(st)
    assert rec.failed_attempts == 3 and rec.design_index is None and rec.beta is None
    assert st.design_indices == before[0] and st.best_utility == before[1]
    assert len(st.labels) == before[2] + 3 and st.labels[-3:] == [0.0, 0.0, 0.0]


def test_every_failure_adds_one_label():
    cfg = replace(SHORT, eps=0.01, n_iters=4)
    lg = run_campaign(cfg)
    assert lg.final["n_labels"] - lg.final["n_solved"] == int(lg.failed_trace.sum())


def test_run_log_round_trip(tmp_path, short_log):
    path = tmp_path / "run.jsonl"
    short_log.write(path)
    back = RunLog.read(path)
    assert back.lines() == short_log.lines()
    assert all(json.loads(line)["type"] in ("header", "iteration", "final")
               for line in path.read_text().splitlines())
    assert all(r.wall_ms is None for r in back.records)


def test_summary_csv(tmp_path, short_log):
    rows = summarize([short_log])
    write_summary(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "iter,mean_best,min_best,max_best,mean_failed"
    assert len(lines) == SHORT.n_iters + 2


def test_kde_snapshots(short_log):
    k0, k1 = short_log.kde_snapshot("initial"), short_log.kde_snapshot("final")
    assert k0.support.shape == (40, 3)
    assert k1.support.shape[0] == short_log.final["n_solved"]


def test_header_echoes_problem(short_log):
    h = short_log.header
    p = build_problem(SHORT)
    assert h["grid_points"] == 10626 and h["eps"] == p.eps
    assert h["chim"]["minimizer_indices"] == list(p.chim.minimizer_indices)
    assert CampaignConfig.from_dict(h["config"]) == SHORT


def test_config_validation(tmp_path):
    with pytest.raises(InvalidParameterError):
        CampaignConfig(n_init=1)
    with pytest.raises(InvalidParameterError):
        CampaignConfig(theta=1.0)
    with pytest.raises(InvalidParameterError):
        CampaignConfig(eps=0.0)
    with pytest.raises(InvalidParameterError):
        CampaignConfig.from_dict({"n_inti": 3})
    with pytest.raises(InvalidParameterError):
        replicate(SHORT, 0)


def test_config_relative_oracle_path(tmp_path):
    (tmp_path / "oracle.json").write_text(json.dumps(OracleConfig.default().to_dict()))
    (tmp_path / "cfg.json").write_text(json.dumps({"oracle_path": "oracle.json", "n_iters": 2}))
    cfg = CampaignConfig.load(tmp_path / "cfg.json")
    assert cfg.oracle_path == str((tmp_path / "oracle.json").resolve())
    assert cfg.oracle().to_dict() == OracleConfig.default().to_dict()
