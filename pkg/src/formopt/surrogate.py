"""Gaussian-process surrogates over problem-formulation space.

Formulations are compared with the L1 distance between their coefficient
vectors and correlated through a squared-exponential kernel of that
distance::

    k(a, b) = signal_variance * exp(-||a - b||_1**2 / length_scale**2)

The same machinery backs the utility model (GP_U), the per-QoI intersection
models (GP_Q) and the feasibility classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.stats import norm

from .errors import DegenerateDataError, InvalidParameterError

JITTER_REL = 1e-6
N_LENGTH_SCALES = 25
LENGTH_SCALE_SPAN = (1e-2, 1e1)
_SV_FLOOR = 1e-12


def beta_distance(a, b):
    """L1 distance between formulations (vectorised over leading axes)."""
    return np.sum(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), axis=-1)


def _sq_exp(d, length_scale):
    return np.exp(-((d / length_scale) ** 2))


@dataclass(frozen=True, eq=False)
class GpModel:
    """A conditioned single-output GP; build with :func:`fit_gp` or :meth:`condition`."""

    inputs: np.ndarray
    targets: np.ndarray
    offset: float
    length_scale: float
    signal_variance: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray
    log_marginal_likelihood: float

    @classmethod
    def condition(cls, inputs, targets, length_scale, signal_variance, jitter=None, offset=0.0):
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        y = np.asarray(targets, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise InvalidParameterError("inputs and targets differ in length")
        if jitter is None:
            jitter = JITTER_REL * signal_variance
        d = squareform(pdist(x, "cityblock")) if len(x) > 1 else np.zeros((1, 1))
        kmat = signal_variance * _sq_exp(d, length_scale) + jitter * np.eye(len(x))
        chol = cholesky(kmat, lower=True)
        resid = y - offset
        alpha = cho_solve((chol, True), resid)
        n = len(y)
        lml = -0.5 * resid @ alpha - np.log(np.diag(chol)).sum() - 0.5 * n * math.log(2 * math.pi)
        return cls(x, y, float(offset), float(length_scale), float(signal_variance),
                   float(jitter), chol, alpha, float(lml))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def kernel(self, a, b=None) -> np.ndarray:
        b = self.inputs if b is None else b
        d = cdist(np.atleast_2d(a), np.atleast_2d(b), "cityblock")
        return self.signal_variance * _sq_exp(d, self.length_scale)

    def predict(self, p) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at one formulation or a batch."""
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        ks = self.kernel(np.atleast_2d(p))
        mean = self.offset + ks @ self.alpha
        v = cho_solve((self.chol, True), ks.T)
        var = np.maximum(self.signal_variance - np.einsum("ij,ji->i", ks, v), 0.0)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def describe(self) -> dict:
        return {
            "n": self.n,
            "length_scale": self.length_scale,
            "signal_variance": self.signal_variance,
            "offset": self.offset,
            "log_marginal_likelihood": self.log_marginal_likelihood,
        }


def length_scale_grid(inputs) -> np.ndarray:
    """Log-spaced candidate length scales relative to the median pairwise distance."""
    d = pdist(np.atleast_2d(np.asarray(inputs, dtype=float)), "cityblock")
    positive = d[d > 0]
    if positive.size == 0:
        raise DegenerateDataError("all training inputs coincide")
    lo, hi = LENGTH_SCALE_SPAN
    return np.median(positive) * np.logspace(math.log10(lo), math.log10(hi), N_LENGTH_SCALES)


def profile_likelihood(dist: np.ndarray, resid: np.ndarray, length_scale: float):
    """Signal variance maximising the likelihood at ``length_scale`` and the maximum.

    With jitter proportional to the signal variance, the covariance is
    ``sv * C`` for a fixed ``C`` and the optimum is ``sv = r^T C^-1 r / n``.
    Returns ``(sv, log_ml)``; raises ``LinAlgError`` if ``C`` is not SPD.
    """
    n = len(resid)
    c = _sq_exp(dist, length_scale) + JITTER_REL * np.eye(n)
    chol = cholesky(c, lower=True)
    quad = float(resid @ cho_solve((chol, True), resid))
    sv = max(quad / n, _SV_FLOOR)
    logdet = n * math.log(sv) + 2 * np.log(np.diag(chol)).sum()
    lml = -0.5 * quad / sv - 0.5 * logdet - 0.5 * n * math.log(2 * math.pi)
    return sv, lml


def fit_gp(inputs, targets, center: bool = False) -> GpModel:
    """Select hyperparameters by gridded marginal likelihood, then condition.

    ``center`` subtracts the target mean before fitting and adds it back at
    prediction time.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if len(x) < 2:
        raise DegenerateDataError("at least two training points are required")
    grid = length_scale_grid(x)
    offset = float(y.mean()) if center else 0.0
    resid = y - offset
    dist = squareform(pdist(x, "cityblock"))
    best = None
    for ls in grid:
        try:
            sv, lml = profile_likelihood(dist, resid, ls)
        except np.linalg.LinAlgError:
            continue
        if best is None or lml > best[2]:
            best = (ls, sv, lml)
    if best is None:
        raise DegenerateDataError("no candidate length scale gives an SPD kernel")
    return GpModel.condition(x, y, best[0], best[1], offset=offset)


def fit_gp_multi(inputs, targets, center: bool = False) -> tuple[GpModel, ...]:
    """One independent GP per target column."""
    y = np.asarray(targets, dtype=float)
    return tuple(fit_gp(inputs, y[:, j], center=center) for j in range(y.shape[1]))


def gp_posterior(m: GpModel, p):
    return m.predict(p)


def expected_improvement(mean, variance, best):
    """Closed-form EI for maximisation, ``E[max(V - best, 0)]``."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    gain = mean - best
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(sigma > 0, gain / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = np.where(sigma > 0, gain * norm.cdf(z) + sigma * norm.pdf(z), np.maximum(gain, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


@dataclass(frozen=True, eq=False)
class FeasibilityModel:
    """GP regression on 0/1 feasibility labels, thresholded at ``threshold``.

    Until both classes have been observed the model is optimistic and
    reports probability 1 everywhere. Labels are mean-centred, so far from
    all data the probability reverts to the observed feasible fraction.
    """

    inputs: np.ndarray
    labels: np.ndarray
    threshold: float = 0.5
    gp: GpModel | None = None

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def probability(self, p):
        p = np.asarray(p, dtype=float)
        if self.gp is None:
            return 1.0 if p.ndim == 1 else np.ones(len(p))
        mean, _ = self.gp.predict(p)
        return np.clip(mean, 0.0, 1.0)

    def passes(self, p):
        return np.asarray(self.probability(p)) >= self.threshold


def fit_feasibility(inputs, labels, threshold: float = 0.5) -> FeasibilityModel:
    if not 0 < threshold < 1:
        raise InvalidParameterError(f"threshold must lie in (0, 1), got {threshold}")
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(labels, dtype=float).ravel()
    if not np.all((y == 0) | (y == 1)):
        raise InvalidParameterError("labels must be 0 or 1")
    gp = fit_gp(x, y, center=True) if (y == 0).any() and (y == 1).any() else None
    return FeasibilityModel(x, y, threshold, gp)


def classify_feasible(fm: FeasibilityModel, p):
    return fm.probability(p)


@dataclass(frozen=True)
class QoiRangeFilter:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.low) > np.asarray(self.high)):
            raise InvalidParameterError("range filter needs low <= high for every QoI")

    @classmethod
    def from_values(cls, values, margin: float = 0.1) -> QoiRangeFilter:
        """Per-column min/max of ``values`` widened by ``margin`` times the range."""
        v = np.asarray(values, dtype=float)
        lo, hi = v.min(axis=0), v.max(axis=0)
        if math.isinf(margin):
            return cls(np.full_like(lo, -np.inf), np.full_like(hi, np.inf))
        pad = margin * (hi - lo)
        return cls(lo - pad, hi + pad)

    def contains(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.all((q >= self.low) & (q <= self.high), axis=-1)


def gpq_predict(gpq: tuple[GpModel, ...], p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    means = [m.predict(np.atleast_2d(p))[0] for m in gpq]
    out = np.column_stack(means)
    return out[0] if p.ndim == 1 else out


def gpq_range_check(gpq: tuple[GpModel, ...], p, flt: QoiRangeFilter):
    """True where every GP_Q posterior mean falls inside the admissible box."""
    ok = flt.contains(gpq_predict(gpq, p))
    return bool(ok) if np.ndim(ok) == 0 else ok
