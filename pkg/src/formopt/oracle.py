"""Synthetic ground-truth property models.

Four quantities of interest (QoIs) are produced for every composition:
Cauchy pressure, yield strength, density and solidification range. Each
evaluator is a closed-form mixture rule over coefficient tables loaded from a
JSON file; the shipped defaults live in ``formopt/data/default_oracle.json``.

QoI vectors come in two conventions. *External* values are physical values
in their natural units. *Internal* values are what the optimizer minimises:
maximize-sense QoIs are negated.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .design_space import ELEMENTS, N_ELEMENTS, Composition, DesignGrid
from .errors import InvalidParameterError


class QoiSpec(NamedTuple):
    name: str
    units: str
    sense: str  # "maximize" | "minimize", external convention
    index: int


QOI_SPECS = (
    QoiSpec("cauchy_pressure", "GPa", "maximize", 0),
    QoiSpec("yield_strength", "MPa", "maximize", 1),
    QoiSpec("density", "g/cc", "minimize", 2),
    QoiSpec("solidification_range", "K", "minimize", 3),
)
N_QOI = len(QOI_SPECS)
QOI_CSV_COLUMNS = ("cp_gpa", "ys_mpa", "rho_gcc", "dt_k")

# +1 keeps a QoI, -1 negates it when crossing between conventions
SENSE_SIGNS = np.array([-1.0 if s.sense == "maximize" else 1.0 for s in QOI_SPECS])


def to_internal(q_external):
    return np.asarray(q_external, dtype=float) * SENSE_SIGNS


def to_external(q_internal):
    return np.asarray(q_internal, dtype=float) * SENSE_SIGNS


def _element_vector(table: dict, key: str) -> np.ndarray:
    missing = [el for el in ELEMENTS if el not in table]
    if missing:
        raise InvalidParameterError(f"{key}: missing entries for {missing}")
    return np.array([float(table[el]) for el in ELEMENTS])


def _pair_matrix(table: dict, key: str) -> np.ndarray:
    m = np.zeros((N_ELEMENTS, N_ELEMENTS))
    seen = set()
    for pair, value in table.items():
        try:
            a, b = pair.split("-")
            i, j = ELEMENTS.index(a), ELEMENTS.index(b)
        except ValueError:
            raise InvalidParameterError(f"{key}: bad pair key {pair!r}") from None
        if i == j:
            raise InvalidParameterError(f"{key}: diagonal entry {pair!r} not allowed")
        if frozenset((i, j)) in seen:
            raise InvalidParameterError(f"{key}: duplicate pair {pair!r}")
        seen.add(frozenset((i, j)))
        m[i, j] = m[j, i] = float(value)
    if len(seen) != N_ELEMENTS * (N_ELEMENTS - 1) // 2:
        raise InvalidParameterError(f"{key}: every element pair must be given")
    return m


@dataclass(frozen=True, eq=False)
class OracleConfig:
    molar_mass: np.ndarray
    density: np.ndarray
    cauchy: np.ndarray
    strength: np.ndarray
    strength_interaction: np.ndarray
    solidification_interaction: np.ndarray

    def __post_init__(self):
        for name in ("molar_mass", "density", "cauchy", "strength"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (N_ELEMENTS,) or not np.all(np.isfinite(v)):
                raise InvalidParameterError(f"{name} must be {N_ELEMENTS} finite values")
            object.__setattr__(self, name, v)
        if np.any(self.molar_mass <= 0) or np.any(self.density <= 0):
            raise InvalidParameterError("molar masses and densities must be positive")
        for name in ("strength_interaction", "solidification_interaction"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (N_ELEMENTS, N_ELEMENTS):
                raise InvalidParameterError(f"{name} must be {N_ELEMENTS}x{N_ELEMENTS}")
            if not np.array_equal(m, m.T) or np.any(np.diag(m) != 0):
                raise InvalidParameterError(f"{name} must be symmetric with zero diagonal")
            object.__setattr__(self, name, m)
        if np.any(self.solidification_interaction < 0):
            raise InvalidParameterError("solidification_interaction must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> OracleConfig:
        if "elements" in d and tuple(d["elements"]) != ELEMENTS:
            raise InvalidParameterError(f"element order must be {ELEMENTS}")
        try:
            return cls(
                molar_mass=_element_vector(d["molar_mass_g_mol"], "molar_mass_g_mol"),
                density=_element_vector(d["density_g_cc"], "density_g_cc"),
                cauchy=_element_vector(d["cauchy_pressure_gpa"], "cauchy_pressure_gpa"),
                strength=_element_vector(d["strength_mpa"], "strength_mpa"),
                strength_interaction=_pair_matrix(
                    d["strength_interaction_mpa"], "strength_interaction_mpa"
                ),
                solidification_interaction=_pair_matrix(
                    d["solidification_interaction_k"], "solidification_interaction_k"
                ),
            )
        except KeyError as exc:
            raise InvalidParameterError(f"oracle config is missing table {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> OracleConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> OracleConfig:
        text = resources.files("formopt").joinpath("data/default_oracle.json").read_text()
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        def pairs(m):
            return {
                f"{ELEMENTS[i]}-{ELEMENTS[j]}": float(m[i, j])
                for i in range(N_ELEMENTS)
                for j in range(i + 1, N_ELEMENTS)
            }

        def per_element(v):
            return {el: float(x) for el, x in zip(ELEMENTS, v)}

        return {
            "elements": list(ELEMENTS),
            "molar_mass_g_mol": per_element(self.molar_mass),
            "density_g_cc": per_element(self.density),
            "cauchy_pressure_gpa": per_element(self.cauchy),
            "strength_mpa": per_element(self.strength),
            "strength_interaction_mpa": pairs(self.strength_interaction),
            "solidification_interaction_k": pairs(self.solidification_interaction),
        }


def _fractions(c) -> np.ndarray:
    if isinstance(c, Composition):
        return c.as_array()
    if isinstance(c, DesignGrid):
        return c.points
    return np.asarray(c, dtype=float)


def _pairwise(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    # sum_{i<j} x_i x_j m_ij == x^T m x / 2 for a zero-diagonal symmetric m
    return 0.5 * np.einsum("...i,ij,...j->...", x, m, x)


def eval_density(c, cfg: OracleConfig):
    """Density (g/cc) from the molar-volume rule of mixtures."""
    x = _fractions(c)
    mass = x @ cfg.molar_mass
    volume = x @ (cfg.molar_mass / cfg.density)
    return mass / volume


def eval_cauchy(c, cfg: OracleConfig):
    """Cauchy pressure (GPa), linear in composition."""
    return _fractions(c) @ cfg.cauchy


def eval_yield(c, cfg: OracleConfig):
    """Yield strength (MPa): linear term plus pairwise solid-solution interactions."""
    x = _fractions(c)
    return x @ cfg.strength + _pairwise(x, cfg.strength_interaction)


def eval_solid_range(c, cfg: OracleConfig):
    """Solidification range (K); zero for every pure element."""
    return _pairwise(_fractions(c), cfg.solidification_interaction)


def eval_external(c, cfg: OracleConfig) -> np.ndarray:
    """QoIs in physical units, ordered as ``QOI_SPECS``."""
    return np.stack(
        [eval_cauchy(c, cfg), eval_yield(c, cfg), eval_density(c, cfg), eval_solid_range(c, cfg)],
        axis=-1,
    )


def eval_all(c, cfg: OracleConfig) -> np.ndarray:
    """Internal (minimisation) QoI vector ``(-CP, -ys, rho, dT)``.

    Accepts a single :class:`Composition` or an (n, 5) array / grid, in which
    case an (n, 4) array is returned.
    """
    return to_internal(eval_external(c, cfg))


def write_qoi_table(grid: DesignGrid, cfg: OracleConfig, path: str | Path) -> None:
    q = eval_external(grid, cfg)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([el.lower() for el in ELEMENTS] + list(QOI_CSV_COLUMNS))
        for x, row in zip(grid.points, q):
            writer.writerow([f"{v:.6f}" for v in x] + [f"{v:.6f}" for v in row])
