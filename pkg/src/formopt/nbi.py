"""Normal boundary intersection geometry over a finite design set.

Objective vectors are rows of an ``(n, K)`` array in minimisation
convention. The CHIM is spanned by the utopia-shifted individual minima
(the columns of ``phi``); a problem formulation ``beta`` picks the point
``phi @ beta`` on its affine hull, and the subproblem searches along the
quasi-normal ``n_hat`` for the design farthest from the hull.

Equality ``phi @ beta + c * n_hat == Q(x)`` cannot hold exactly on a grid,
so a design is admissible when its perpendicular distance to the search
line is at most ``eps``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateGeometryError, InvalidParameterError

BETA_SUM_TOL = 1e-9


def as_beta(coeffs) -> np.ndarray:
    """Validate a formulation vector (sum of coefficients equal to one)."""
    b = np.asarray(coeffs, dtype=float)
    if b.ndim != 1 or not np.all(np.isfinite(b)):
        raise InvalidParameterError(f"beta must be a finite vector, got {coeffs!r}")
    if abs(b.sum() - 1.0) > BETA_SUM_TOL:
        raise InvalidParameterError(f"beta must sum to 1, got {b.sum()!r}")
    return b


@dataclass(frozen=True, eq=False)
class Chim:
    utopia: np.ndarray
    phi: np.ndarray
    n_hat: np.ndarray
    minimizer_indices: tuple[int, ...]
    minimizers: tuple[Any, ...] = ()

    @property
    def k(self) -> int:
        return self.utopia.shape[0]

    def point(self, beta) -> np.ndarray:
        """Shifted-space location ``phi @ beta`` on the CHIM hull."""
        return self.phi @ np.asarray(beta, dtype=float)

    def to_dict(self) -> dict:
        return {
            "utopia": self.utopia.tolist(),
            "phi": self.phi.tolist(),
            "n_hat": self.n_hat.tolist(),
            "minimizer_indices": list(self.minimizer_indices),
            "minimizers": [
                list(getattr(m, "fractions", np.atleast_1d(m).tolist())) for m in self.minimizers
            ],
        }


@dataclass(frozen=True, eq=False)
class SubproblemSolution:
    index: int
    x: Any
    beta: np.ndarray
    c: float
    distance: float
    q_internal: np.ndarray
    q_shifted: np.ndarray


def find_individual_minima(objectives) -> tuple[np.ndarray, tuple[int, ...]]:
    """Per-QoI argmin over the rows of ``objectives`` (lowest index wins ties)."""
    q = np.asarray(objectives, dtype=float)
    if q.ndim != 2 or q.shape[0] == 0:
        raise InvalidParameterError("objectives must be a nonempty (n, K) array")
    idx = tuple(int(i) for i in np.argmin(q, axis=0))
    return q.min(axis=0), idx


def build_chim(
    utopia, minimizer_objectives, minimizer_indices: Sequence[int] = (), minimizers: Sequence = ()
) -> Chim:
    """Assemble the CHIM from the objective vectors of the individual minimisers.

    ``minimizer_objectives`` holds ``Q(x_i*)`` in row ``i``.
    """
    utopia = np.asarray(utopia, dtype=float)
    qmin = np.asarray(minimizer_objectives, dtype=float)
    k = utopia.shape[0]
    if qmin.shape != (k, k):
        raise InvalidParameterError(f"expected {k} minimiser objective vectors of length {k}")
    if minimizer_indices and len(set(minimizer_indices)) < k:
        raise DegenerateGeometryError(f"duplicate individual minimisers {tuple(minimizer_indices)}")
    phi = (qmin - utopia).T
    if np.linalg.matrix_rank(phi) < k:
        raise DegenerateGeometryError("phi is singular")
    s = phi.sum(axis=1)
    norm = np.linalg.norm(s)
    if norm == 0:
        raise DegenerateGeometryError("column sum of phi vanishes")
    chim = Chim(
        utopia=utopia,
        phi=phi,
        n_hat=-s / norm,
        minimizer_indices=tuple(int(i) for i in minimizer_indices),
        minimizers=tuple(minimizers),
    )
    _augmented(chim)
    return chim


def chim_from_objectives(objectives, designs: Sequence = ()) -> Chim:
    """Individual minima plus CHIM assembly in one step."""
    q = np.asarray(objectives, dtype=float)
    utopia, idx = find_individual_minima(q)
    minimizers = tuple(designs[i] for i in idx) if len(designs) else ()
    return build_chim(utopia, q[list(idx)], idx, minimizers)


def _augmented(chim: Chim) -> np.ndarray:
    k = chim.k
    a = np.zeros((k + 1, k + 1))
    a[:k, :k] = chim.phi
    a[:k, k] = chim.n_hat
    a[k, :k] = 1.0
    if np.linalg.matrix_rank(a) < k + 1:
        raise DegenerateGeometryError("augmented projection system is singular")
    return a


def project_to_chim(chim: Chim, q_internal) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``phi @ beta + c * n_hat = q - utopia`` with ``sum(beta) = 1``.

    ``q_internal`` may be a single vector or an ``(n, K)`` array; returns
    ``(beta, c)`` with matching leading shape.
    """
    q = np.asarray(q_internal, dtype=float)
    rhs = np.concatenate([q - chim.utopia, np.ones(q.shape[:-1] + (1,))], axis=-1)
    sol = np.linalg.solve(_augmented(chim), rhs.reshape(-1, chim.k + 1).T).T
    sol = sol.reshape(rhs.shape)
    return sol[..., : chim.k], sol[..., chim.k]


def line_coordinates(chim: Chim, beta, q_shifted) -> tuple[np.ndarray, np.ndarray]:
    """Signed travel ``c`` along ``n_hat`` and perpendicular distance to the line."""
    r = np.asarray(q_shifted, dtype=float) - chim.point(beta)
    c = r @ chim.n_hat
    perp = r - np.multiply.outer(c, chim.n_hat)
    return c, np.linalg.norm(perp, axis=-1)


def line_distance(chim: Chim, beta, q_shifted):
    """Euclidean distance from ``q_shifted`` to ``{phi @ beta + c n_hat}``."""
    return line_coordinates(chim, beta, q_shifted)[1]


def default_eps(objectives, fraction: float = 0.05) -> float:
    """``fraction`` times the mean per-QoI range of the objective table."""
    q = np.asarray(objectives, dtype=float)
    return float(fraction * np.mean(q.max(axis=0) - q.min(axis=0)))


def solve_subproblem(
    chim: Chim, beta, objectives, eps: float, designs: Sequence | None = None
) -> SubproblemSolution | None:
    """Farthest admissible design along the quasi-normal line, or ``None``.

    ``None`` marks an infeasible formulation: no row of ``objectives`` lies
    within ``eps`` of the line.
    """
    if not eps > 0:
        raise InvalidParameterError(f"eps must be positive, got {eps!r}")
    beta = as_beta(beta)
    q = np.asarray(objectives, dtype=float)
    shifted = q - chim.utopia
    c, dist = line_coordinates(chim, beta, shifted)
    admissible = dist <= eps
    if not admissible.any():
        return None
    i = int(np.argmax(np.where(admissible, c, -np.inf)))
    return SubproblemSolution(
        index=i,
        x=designs[i] if designs is not None else i,
        beta=beta,
        c=float(c[i]),
        distance=float(dist[i]),
        q_internal=q[i].copy(),
        q_shifted=shifted[i].copy(),
    )
