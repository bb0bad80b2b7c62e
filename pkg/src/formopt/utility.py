"""Static decision-maker preferences.

Each QoI is mapped to [0, 1] by a single-attribute utility curve and the
four curve outputs are combined by a weighted sum. Curves take external
(physical) QoI values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .design_space import DesignGrid
from .errors import InvalidParameterError
from .oracle import OracleConfig, eval_cauchy, eval_solid_range


@dataclass(frozen=True)
class ExpLinearCurve:
    """Saturating exponential up to a knee, linear continuation above it.

    Below ``knee`` the curve is ``a * (1 - exp(-rate * (v - lo)))`` where
    ``rate`` makes the exponential reach ``knee_fraction`` of its asymptote
    ``a`` at the knee and ``a`` is set so the knee value equals
    ``knee_utility``. Above the knee the curve rises linearly to 1 at ``hi``.
    Inputs are clamped to ``[lo, hi]``.
    """

    lo: float
    hi: float
    knee: float = 70.0
    knee_utility: float = 0.85
    knee_fraction: float = 0.95
    kind: str = field(default="exp-linear", init=False)

    def __post_init__(self):
        if not (self.lo < self.knee < self.hi):
            raise InvalidParameterError(
                f"exp-linear curve needs lo < knee < hi, got {self.lo}, {self.knee}, {self.hi}"
            )
        if not (0 < self.knee_utility < 1 and 0 < self.knee_fraction < 1):
            raise InvalidParameterError("knee_utility and knee_fraction must lie in (0, 1)")

    @property
    def rate(self) -> float:
        return -math.log1p(-self.knee_fraction) / (self.knee - self.lo)

    @property
    def amplitude(self) -> float:
        return self.knee_utility / self.knee_fraction

    def __call__(self, v):
        v = np.clip(np.asarray(v, dtype=float), self.lo, self.hi)
        below = self.amplitude * -np.expm1(-self.rate * (v - self.lo))
        above = self.knee_utility + (1 - self.knee_utility) * (v - self.knee) / (self.hi - self.knee)
        return np.clip(np.where(v <= self.knee, below, above), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "knee": self.knee,
                "knee_utility": self.knee_utility, "knee_fraction": self.knee_fraction}


@dataclass(frozen=True)
class SigmoidCurve:
    """Logistic activation (increasing) or deactivation (decreasing)."""

    midpoint: float
    scale: float
    decreasing: bool = False

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidParameterError(f"sigmoid scale must be positive, got {self.scale}")

    @property
    def kind(self) -> str:
        return "sigmoid-deactivation" if self.decreasing else "sigmoid-activation"

    @classmethod
    def calibrated(cls, midpoint: float, at: float, value: float) -> SigmoidCurve:
        """Curve through ``(midpoint, 0.5)`` and ``(at, value)``.

        The direction follows from which side of the midpoint ``at`` sits
        and whether ``value`` is above one half.
        """
        if at == midpoint or not (0 < value < 1) or value == 0.5:
            raise InvalidParameterError("calibration point must differ from the midpoint")
        slope = logit(value) / (at - midpoint)
        return cls(midpoint=float(midpoint), scale=float(abs(1.0 / slope)), decreasing=slope < 0)

    def __call__(self, v):
        z = (np.asarray(v, dtype=float) - self.midpoint) / self.scale
        return expit(-z) if self.decreasing else expit(z)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "midpoint": self.midpoint, "scale": self.scale}


@dataclass(frozen=True)
class LinearDecreasingCurve:
    lo: float
    hi: float
    kind: str = field(default="linear-decreasing", init=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParameterError(f"linear curve needs lo < hi, got {self.lo}, {self.hi}")

    def __call__(self, v):
        v = np.clip(np.asarray(v, dtype=float), self.lo, self.hi)
        return (self.hi - v) / (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


def curve_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind")
    if kind == "exp-linear":
        return ExpLinearCurve(**d)
    if kind in ("sigmoid-activation", "sigmoid-deactivation"):
        return SigmoidCurve(d["midpoint"], d["scale"], decreasing=kind == "sigmoid-deactivation")
    if kind == "linear-decreasing":
        return LinearDecreasingCurve(**d)
    raise InvalidParameterError(f"unknown curve kind {kind!r}")


def yield_curve(midpoint: float = 150.0, critical: float = 200.0, level: float = 0.99) -> SigmoidCurve:
    return SigmoidCurve.calibrated(midpoint, critical, level)


def density_curve(inflection: float = 9.0, floor: float = 8.0, level: float = 0.99) -> SigmoidCurve:
    return SigmoidCurve.calibrated(inflection, floor, level)


@dataclass(frozen=True)
class Weights:
    cp: float = 1.5
    ys: float = 1.3
    density: float = 1.0
    sr: float = 1.0

    def __post_init__(self):
        if any(w < 0 or not math.isfinite(w) for w in self.as_array()):
            raise InvalidParameterError(f"weights must be finite and nonnegative: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.cp, self.ys, self.density, self.sr], dtype=float)

    @property
    def max_utility(self) -> float:
        return float(self.as_array().sum())


@dataclass(frozen=True)
class UtilityModel:
    """Four single-QoI curves plus weights, ordered like ``QOI_SPECS``."""

    cp: ExpLinearCurve
    ys: SigmoidCurve
    density: SigmoidCurve
    sr: LinearDecreasingCurve
    weights: Weights = Weights()

    @classmethod
    def from_bounds(cls, cp_range, dt_range, weights: Weights = Weights()) -> UtilityModel:
        return cls(
            cp=ExpLinearCurve(lo=float(cp_range[0]), hi=float(cp_range[1])),
            ys=yield_curve(),
            density=density_curve(),
            sr=LinearDecreasingCurve(lo=float(dt_range[0]), hi=float(dt_range[1])),
            weights=weights,
        )

    @classmethod
    def for_grid(cls, grid: DesignGrid, oracle: OracleConfig, weights: Weights = Weights()) -> UtilityModel:
        """Anchor the bounded curves at the property extremes over ``grid``."""
        cp = eval_cauchy(grid, oracle)
        dt = eval_solid_range(grid, oracle)
        return cls.from_bounds((cp.min(), cp.max()), (dt.min(), dt.max()), weights)

    @property
    def curves(self) -> tuple:
        return (self.cp, self.ys, self.density, self.sr)

    def components(self, q_external) -> np.ndarray:
        """Per-QoI utilities, shape ``(..., 4)``."""
        q = np.asarray(q_external, dtype=float)
        return np.stack([curve(q[..., i]) for i, curve in enumerate(self.curves)], axis=-1)

    def __call__(self, q_external):
        return weighted_sum(self.components(q_external), self.weights)

    def to_dict(self) -> dict:
        return {
            "curves": [c.to_dict() for c in self.curves],
            "weights": dict(zip(("cp", "ys", "density", "sr"), self.weights.as_array().tolist())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> UtilityModel:
        curves = [curve_from_dict(c) for c in d["curves"]]
        return cls(*curves, weights=Weights(**d.get("weights", {})))


def weighted_sum(curve_values, weights: Weights = Weights()):
    """Weighted sum of the four per-QoI utilities (last axis)."""
    return np.asarray(curve_values, dtype=float) @ weights.as_array()


def aggregate_utility(q_external, model: UtilityModel):
    """Multi-attribute utility of external QoI values (vectorised over leading axes)."""
    return model(q_external)
