"""Compositional design space for the Mo-Nb-Ti-V-W system.

All composition vectors use the fixed element order ``ELEMENTS``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError

ELEMENTS: tuple[str, ...] = ("Mo", "Nb", "Ti", "V", "W")
N_ELEMENTS = len(ELEMENTS)

# g/mol
DEFAULT_MOLAR_MASSES = np.array([95.95, 92.906, 47.867, 50.942, 183.84])

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Composition:
    """Atomic fractions on the 5-element simplex."""

    fractions: tuple[float, ...]

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if len(fr) != N_ELEMENTS:
            raise InvalidParameterError(f"expected {N_ELEMENTS} fractions, got {len(fr)}")
        if any(not (0.0 <= f <= 1.0) for f in fr):
            raise InvalidParameterError(f"fractions must lie in [0, 1]: {fr}")
        if abs(math.fsum(fr) - 1.0) > _SUM_TOL:
            raise InvalidParameterError(f"fractions must sum to 1, got {math.fsum(fr)!r}")
        object.__setattr__(self, "fractions", fr)

    @classmethod
    def pure(cls, element: str) -> Composition:
        x = [0.0] * N_ELEMENTS
        x[ELEMENTS.index(element)] = 1.0
        return cls(tuple(x))

    @classmethod
    def equiatomic(cls, elements: tuple[str, ...] = ELEMENTS) -> Composition:
        x = [0.0] * N_ELEMENTS
        for el in elements:
            x[ELEMENTS.index(el)] = 1.0 / len(elements)
        return cls(tuple(x))

    def as_array(self) -> np.ndarray:
        return np.array(self.fractions)

    def __getitem__(self, element: str) -> float:
        return self.fractions[ELEMENTS.index(element)]

    def label(self, digits: int = 2) -> str:
        parts = [f"{el}{round(100 * f, digits):g}" for el, f in zip(ELEMENTS, self.fractions) if f > 0]
        return "".join(parts)


@dataclass(frozen=True)
class DesignGrid:
    """Full-factorial simplex grid.

    ``points`` is an (n, 5) read-only array of atomic fractions in
    lexicographic order of the integer multiples of ``step``.
    """

    step: float
    points: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, i: int) -> Composition:
        return Composition(tuple(self.points[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def divisions(self) -> int:
        return int(round(1.0 / self.step))

    def index_of(self, c: Composition) -> int:
        """Grid index of ``c``; raises ``KeyError`` when ``c`` is off-grid."""
        counts = np.rint(np.asarray(c.fractions) * self.divisions)
        if not np.allclose(counts / self.divisions, c.fractions, atol=1e-9):
            raise KeyError(c)
        hits = np.flatnonzero(np.all(np.rint(self.points * self.divisions) == counts, axis=1))
        if hits.size == 0:
            raise KeyError(c)
        return int(hits[0])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([el.lower() for el in ELEMENTS])
            for row in self.points:
                writer.writerow([f"{v:.6f}" for v in row])


def _divisions(step: float) -> int:
    if not (isinstance(step, (int, float)) and step > 0 and math.isfinite(step)):
        raise InvalidParameterError(f"step must be a positive number, got {step!r}")
    m = round(1.0 / step)
    if m < 1 or abs(1.0 / m - step) > 1e-12:
        raise InvalidParameterError(f"step must be 1/m for an integer m >= 1, got {step!r}")
    return m


def n_grid_points(m: int) -> int:
    """Number of 5-part weak compositions of ``m``."""
    return math.comb(m + N_ELEMENTS - 1, N_ELEMENTS - 1)


def generate_grid(step: float) -> DesignGrid:
    """Enumerate every composition whose fractions are multiples of ``step``."""
    m = _divisions(step)
    rows = []
    for head in itertools.product(range(m + 1), repeat=N_ELEMENTS - 1):
        rest = m - sum(head)
        if rest >= 0:
            rows.append((*head, rest))
    points = np.array(rows, dtype=float) / m
    points.flags.writeable = False
    return DesignGrid(step=1.0 / m, points=points)


def to_weight_percent(c: Composition, molar_masses=DEFAULT_MOLAR_MASSES) -> np.ndarray:
    """Convert atomic fractions to weight percent."""
    mass = c.as_array() * np.asarray(molar_masses, dtype=float)
    return 100.0 * mass / mass.sum()


def from_weight_percent(wt, molar_masses=DEFAULT_MOLAR_MASSES) -> Composition:
    """Inverse of :func:`to_weight_percent`."""
    moles = np.asarray(wt, dtype=float) / np.asarray(molar_masses, dtype=float)
    x = moles / moles.sum()
    x[-1] = 1.0 - x[:-1].sum()
    return Composition(tuple(np.clip(x, 0.0, 1.0)))


def pentagon_vertices() -> np.ndarray:
    """Unit regular pentagon, Mo at 90 degrees, remaining elements counterclockwise."""
    angles = np.pi / 2 + 2 * np.pi * np.arange(N_ELEMENTS) / N_ELEMENTS
    return np.column_stack([np.cos(angles), np.sin(angles)])


def pentagon_project(c) -> np.ndarray:
    """Affine map of a composition (or an (n, 5) array of them) into the pentagon."""
    x = c.as_array() if isinstance(c, Composition) else np.asarray(c, dtype=float)
    return x @ pentagon_vertices()
