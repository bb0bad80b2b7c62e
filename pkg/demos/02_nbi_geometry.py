"""
Problem formulations as points on the CHIM
==========================================

Normal boundary intersection turns a formulation vector ``beta`` into a
single-objective subproblem: start at ``phi @ beta`` on the hull of the
individual minima and travel along the quasi-normal as far as the design
set allows. Two toy problems show the geometry; the alloy problem shows
that many formulations have no solution at all.
"""

import numpy as np

from formopt import nbi
from formopt.campaign import CampaignConfig, build_problem
from formopt.toy_problems import pareto_brute_force, toy_biobjective, toy_triobjective

# f1 = t^2, f2 = (t - 1)^2: the minima sit on the axes after the utopia shift
toy = toy_biobjective()
chim = nbi.chim_from_objectives(toy.objectives)
print("phi =", chim.phi.tolist(), " n_hat =", chim.n_hat.round(4).tolist())

# sweeping beta walks the front; every answer is a Pareto point
front = set(pareto_brute_force(toy.objectives).tolist())
eps = nbi.default_eps(toy.objectives)
for b in np.linspace(0, 1, 5):
    sol = nbi.solve_subproblem(chim, [b, 1 - b], toy.objectives, eps)
    print(f"beta=({b:.2f}, {1 - b:.2f}) -> t={toy.designs[sol.index, 0]:.2f} "
          f"pareto={sol.index in front}")

# projection is the inverse map: objectives -> (beta, c)
beta, c = nbi.project_to_chim(chim, toy.objectives[30])
print("design t=0.30 projects to beta", beta.round(4), "c", round(float(c), 4))

# with three objectives the direction of n_hat matters. Equilateral anchors
# give n_hat along -(1, 1, 1) and edge formulations land on the front edges;
# a right-triangle layout tilts n_hat and the same formulation lands on a
# dominated design
for layout in ("equilateral", "right"):
    p = toy_triobjective(41, layout)
    ch = nbi.chim_from_objectives(p.objectives)
    sol = nbi.solve_subproblem(ch, [0.0, 0.2, 0.8], p.objectives, nbi.default_eps(p.objectives))
    dominated = sol.index not in set(pareto_brute_force(p.objectives).tolist())
    print(f"{layout:>11s}: n_hat={ch.n_hat.round(3)} solution={p.designs[sol.index]} "
          f"dominated={dominated}")

# the alloy problem: four standardised QoIs, so beta has four components
alloy = build_problem(CampaignConfig())
print("alloy minimisers:", [alloy.grid[i].label() for i in alloy.chim.minimizer_indices])
rng = np.random.default_rng(0)
trials = rng.normal(size=(2000, 4))
trials[:, -1] = 1 - trials[:, :-1].sum(axis=1)
ok = [nbi.solve_subproblem(alloy.chim, b, alloy.objectives, alloy.eps) is not None
      for b in trials]
print(f"{np.mean(ok):.1%} of random formulations have a solution within eps={alloy.eps:.3f}")
