"""Candidate formulations from a kernel density estimate of feasible betas.

Formulations live on the hyperplane ``sum(beta) == 1``. The KDE works in
reduced coordinates (all but the last component) so that no probability
mass leaves the hyperplane; the last component is rebuilt on the way out.
No box constraint is imposed on the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError

BANDWIDTH_FLOOR = 1e-3


def to_reduced(betas) -> np.ndarray:
    return np.asarray(betas, dtype=float)[..., :-1]


def from_reduced(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    last = 1.0 - z.sum(axis=-1, keepdims=True)
    return np.concatenate([z, last], axis=-1)


def scott_bandwidth(z) -> float:
    """``n**(-1/(d+4))`` times the mean per-dimension sample standard deviation."""
    z = np.atleast_2d(z)
    n, d = z.shape
    sigma = float(np.mean(np.std(z, axis=0, ddof=1)))
    return max(n ** (-1.0 / (d + 4)) * sigma, BANDWIDTH_FLOOR)


@dataclass(frozen=True, eq=False)
class KdeModel:
    support: np.ndarray  # (n, K-1) reduced coordinates
    bandwidth: float

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, d: dict) -> KdeModel:
        return cls(np.asarray(d["support"], dtype=float), float(d["bandwidth"]))


def fit_kde(betas) -> KdeModel:
    b = np.atleast_2d(np.asarray(betas, dtype=float))
    if b.shape[0] < 2:
        raise DegenerateDataError("a KDE needs at least two formulations")
    z = to_reduced(b)
    return KdeModel(support=z, bandwidth=scott_bandwidth(z))


def sample_candidates(kde: KdeModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` formulations: a random support point plus isotropic Gaussian noise."""
    centers = kde.support[rng.integers(0, len(kde.support), size=n)]
    z = centers + kde.bandwidth * rng.standard_normal((n, kde.dim))
    return from_reduced(z)


def kde_density(kde: KdeModel, p):
    """Density (in reduced coordinates) at one formulation or a batch."""
    z = np.atleast_2d(to_reduced(p))
    h, d = kde.bandwidth, kde.dim
    sq = np.sum((z[:, None, :] - kde.support[None, :, :]) ** 2, axis=-1)
    norm_const = (2 * math.pi * h * h) ** (-d / 2)
    dens = norm_const * np.mean(np.exp(-0.5 * sq / (h * h)), axis=1)
    return float(dens[0]) if np.ndim(p) == 1 else dens
