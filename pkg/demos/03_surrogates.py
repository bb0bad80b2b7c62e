"""
Surrogates over formulation space
=================================

Three cheap models steer the search: a Gaussian process for utility, a
Gaussian process per QoI for a range check, and a GP classifier that
learns which formulations have no solution. Expected improvement ranks
the candidates that survive both filters.
"""

import numpy as np

from formopt import nbi
from formopt.campaign import CampaignConfig, build_problem
from formopt.oracle import to_external
from formopt.surrogate import (
    classify_feasible,
    expected_improvement,
    fit_feasibility,
    fit_gp,
    fit_gp_multi,
    gpq_range_check,
)

problem = build_problem(CampaignConfig())
rng = np.random.default_rng(3)

# training data: 40 random designs, their projected formulations and utilities
idx = rng.choice(len(problem.grid), 40, replace=False)
betas, _ = nbi.project_to_chim(problem.chim, problem.objectives[idx])
util = problem.utilities[idx]

gp_u = fit_gp(betas, util, center=True)
print(f"utility GP: length scale {gp_u.length_scale:.4f}, "
      f"signal variance {gp_u.signal_variance:.4f}")

# held-out designs: the posterior mean should track the true utility
test = rng.choice(len(problem.grid), 200, replace=False)
tb, _ = nbi.project_to_chim(problem.chim, problem.objectives[test])
mean, var = gp_u.predict(tb)
print(f"held-out correlation {np.corrcoef(mean, problem.utilities[test])[0, 1]:.3f}")

# expected improvement is zero where the model is certain and below the best
best = util.max()
ei = expected_improvement(mean, var, best)
print(f"EI over held-out designs: max {ei.max():.4f}, median {np.median(ei):.2e}")

# QoI models on standardised shifted values, checked against the observed range
q = problem.shifted[idx]
gp_q = fit_gp_multi(betas, q)
flt = problem.range_filter
print(f"range filter passes {gpq_range_check(gp_q, tb, flt).mean():.0%} of held-out formulations")

# the classifier starts optimistic and turns cautious near observed failures
labels = np.ones(len(betas))
fm = fit_feasibility(betas, labels)
bad = np.array([3.0, -2.0, 0.0, 0.0])
print(f"before any failure: P(feasible) at {bad} = {float(classify_feasible(fm, bad)):.2f}")
fm = fit_feasibility(np.vstack([betas, bad, bad + 0.05]), np.append(labels, [0.0, 0.0]))
print(f"after two failures nearby:     P(feasible) = {float(classify_feasible(fm, bad)):.2f}")

# what the chosen design actually is
pick = test[int(np.argmax(ei))]
print(f"highest-EI held-out design: {problem.grid[pick].label()}, "
      f"utility {problem.utilities[pick]:.3f} (training best {best:.3f})")
print("its QoIs (CP, YS, density, dT):", np.round(to_external(problem.q_internal[pick]), 2))
