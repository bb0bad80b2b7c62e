"""Small analytic multi-objective fixtures with known Pareto structure."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class ToyProblem:
    name: str
    designs: np.ndarray  # (n, d) grid of design points
    functions: tuple[Callable[[np.ndarray], np.ndarray], ...] = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.functions)

    @property
    def objectives(self) -> np.ndarray:
        return np.column_stack([f(self.designs) for f in self.functions])


def toy_biobjective(n: int = 101) -> ToyProblem:
    """``f1 = t**2`` and ``f2 = (t - 1)**2`` on an ``n``-point grid over [0, 1]."""
    if n < 3:
        raise InvalidParameterError(f"grid resolution must be >= 3, got {n}")
    t = np.linspace(0.0, 1.0, n)[:, None]
    return ToyProblem(
        name="biobjective",
        designs=t,
        functions=(lambda x: x[:, 0] ** 2, lambda x: (x[:, 0] - 1.0) ** 2),
    )


ANCHOR_LAYOUTS = {
    # unit-side equilateral triangle: phi = J - I and n_hat = -(1, 1, 1)/sqrt(3)
    "equilateral": np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2]]),
    # right triangle: unequal row sums of phi tilt n_hat, so formulations on
    # the CHIM edges meet the image outside the Pareto set
    "right": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
}


def toy_triobjective(n: int = 21, layout: str = "equilateral") -> ToyProblem:
    """Squared distances to three anchor points on an ``n x n`` grid of their bounding box.

    The Pareto set is the triangle spanned by the anchors. ``n`` must be
    odd so every anchor is a grid point.
    """
    if n < 3 or n % 2 == 0:
        raise InvalidParameterError(f"grid resolution must be odd and >= 3, got {n}")
    if layout not in ANCHOR_LAYOUTS:
        raise InvalidParameterError(f"unknown anchor layout {layout!r}")
    anchors = ANCHOR_LAYOUTS[layout]
    hi = anchors.max(axis=0)
    xx, yy = np.meshgrid(np.linspace(0.0, hi[0], n), np.linspace(0.0, hi[1], n), indexing="ij")
    designs = np.column_stack([xx.ravel(), yy.ravel()])
    funcs = tuple(
        (lambda a: (lambda x: np.sum((x - a) ** 2, axis=1)))(a) for a in anchors
    )
    return ToyProblem(name=f"triobjective-{layout}", designs=designs, functions=funcs)


def dominates(a, b) -> bool:
    """True when ``a`` Pareto-dominates ``b`` (minimisation)."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_brute_force(objectives) -> np.ndarray:
    """Indices of the nondominated rows of ``objectives`` (minimisation), ascending."""
    q = np.asarray(objectives, dtype=float)
    keep = np.ones(len(q), dtype=bool)
    for i in range(len(q)):
        le = np.all(q <= q[i], axis=1)
        lt = np.any(q < q[i], axis=1)
        if np.any(le & lt):
            keep[i] = False
    return np.flatnonzero(keep)
