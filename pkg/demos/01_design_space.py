"""
The alloy design space and its synthetic oracle
===============================================

Mo-Nb-Ti-V-W compositions on a 5 at.% simplex grid, the four quantities of
interest the oracle assigns to each, and where each one is best.
"""

import numpy as np

from formopt.design_space import Composition, generate_grid, pentagon_project, to_weight_percent
from formopt.oracle import QOI_SPECS, OracleConfig, eval_external, to_internal

# the full-factorial grid: every composition whose fractions are multiples of 0.05
grid = generate_grid(0.05)
print(f"{len(grid)} compositions, step {grid.step}")

oracle = OracleConfig.default()
q = eval_external(grid, oracle)
for j, spec in enumerate(QOI_SPECS):
    print(f"{spec.name:>22s}: {q[:, j].min():8.2f} .. {q[:, j].max():8.2f}")

# the best composition for each property taken on its own; internally every
# QoI is minimised, so maximised properties are negated
best = np.argmin(to_internal(q), axis=0)
for spec, i in zip(QOI_SPECS, best):
    print(f"best {spec.name}: {grid[int(i)].label()}")

# atomic and weight percent differ a lot once tungsten is involved
c = Composition.equiatomic()
print("equiatomic wt.%:", np.round(to_weight_percent(c, oracle.molar_mass), 2))

# the pentagon view used by the pentagon report: vertices are the pure elements
xy = pentagon_project(grid.points)
print("pentagon extent:", xy.min(axis=0).round(3), xy.max(axis=0).round(3))
