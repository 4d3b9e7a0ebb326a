"""Displacement interpolation between output measures and reference moment
trajectories along the transport path.

The one-dimensional interpolant moves each source atom linearly toward its
monotone-rearrangement image; moments of the interpolant and their time
derivatives are evaluated by quadrature over the source atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .measures import CDFTable, EmpiricalMeasure, GridDensity, cdf, quantile
from .moments import FOURIER, MONOMIAL_OUTPUT, MONOMIAL_PARAM, MomentSequence

__all__ = [
    "DisplacementPlan",
    "MomentReference",
    "mccann_plan",
    "interpolate",
    "ot_moment_reference",
    "circular_plan",
]

PLAN_LEVELS = 4096


@dataclass(frozen=True)
class DisplacementPlan:
    """Monotone transport map sampled at the atoms of the source measure.

    ``targets[j]`` is the image of ``points[j]``; over sorted source points
    the targets are nondecreasing, which certifies optimality of the pairing
    in one dimension.  ``period`` marks plans built on the circle through a
    cut; interpolants are wrapped back to [0, period).
    """

    points: np.ndarray
    weights: np.ndarray
    targets: np.ndarray
    period: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        tg = np.asarray(self.targets, dtype=float)
        for name, arr in (("points", pts), ("weights", w), ("targets", tg)):
            if arr.shape != pts.shape or arr.ndim != 1:
                raise ConfigError(f"plan {name} must be 1-d and consistent")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "targets", tg)
        order = np.argsort(pts, kind="stable")
        if np.any(np.diff(tg[order]) < -1e-12):
            raise ConfigError("targets must be nondecreasing along sorted source points")

    def positions(self, t: float) -> np.ndarray:
        pos = (1.0 - t) * self.points + t * self.targets
        if self.period is not None:
            pos = np.mod(pos, self.period)
        return pos


def _interp_quantiles(F: CDFTable, levels) -> np.ndarray:
    # continuous inverse of a tabulated CDF by linear interpolation; unbiased
    # for smooth distributions, unlike the discrete sup convention
    return np.interp(levels, F.F, F.abscissae)


def _atomize(mu, levels: int = PLAN_LEVELS):
    """Represent a measure by atoms; continuous measures get equal-weight
    atoms at midpoint quantile levels."""
    if isinstance(mu, EmpiricalMeasure):
        pts, w = mu.sorted()
        return pts, w, np.minimum(np.cumsum(w), 1.0)
    if isinstance(mu, (GridDensity, CDFTable)):
        F = cdf(mu)
        s = (np.arange(levels) + 0.5) / levels
        pts = _interp_quantiles(F, s)
        w = np.full(levels, 1.0 / levels)
        return pts, w, s
    raise TypeError(f"unsupported measure type {type(mu).__name__}")


def mccann_plan(mu0, mu1, levels: int = PLAN_LEVELS) -> DisplacementPlan:
    """Monotone-rearrangement plan: each source atom maps to the target
    quantile at its own cumulative level.

    Discrete targets use the right-continuous table inverse (largest
    qualifying atom); continuous targets use the interpolated inverse of
    their tabulated CDF.
    """
    pts, w, lev = _atomize(mu0, levels)
    F1 = cdf(mu1)
    if isinstance(mu1, EmpiricalMeasure):
        targets = np.asarray(quantile(F1, lev), dtype=float)
    else:
        targets = _interp_quantiles(F1, lev)
    return DisplacementPlan(pts, w, targets)


def interpolate(plan: DisplacementPlan, t: float) -> EmpiricalMeasure:
    """Measure at stage ``t`` of the displacement path: atoms at
    (1-t) y + t T(y) with the source weights."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("interpolation stage must lie in [0, 1]")
    return EmpiricalMeasure(plan.positions(t), plan.weights.copy())


def circular_plan(mu0: EmpiricalMeasure, theta_target: float) -> DisplacementPlan:
    """Plan on the circle toward a point mass: cut at the antipode of the
    target, unroll, and move every atom along its shorter arc.

    No atom crosses the cut, so the unrolled problem is an ordinary
    interval transport with a degenerate target.
    """
    theta_target = float(np.mod(theta_target, 2 * np.pi))
    # signed arc from target in (-pi, pi], shifted so the cut sits at the ends
    arc = np.mod(mu0.points - theta_target + np.pi, 2 * np.pi) - np.pi
    unrolled = theta_target + arc
    order = np.argsort(unrolled, kind="stable")
    return DisplacementPlan(
        unrolled[order],
        mu0.weights[order],
        np.full(mu0.points.size, theta_target),
        period=2 * np.pi,
    )


@dataclass(frozen=True)
class MomentReference:
    """Reference moments m*(t) of a displacement path with time derivatives.

    The unit transport stage is traversed over the span of ``time_grid``;
    values are stored on that grid.  When the generating plan is attached,
    :meth:`value` and :meth:`derivative` evaluate the closed-form expressions
    at arbitrary instants, which integrators use at their own stage points.
    """

    time_grid: np.ndarray
    m_star: np.ndarray
    dm_star: np.ndarray
    basis: str
    plan: DisplacementPlan | None = None

    def __post_init__(self):
        tg = np.asarray(self.time_grid, dtype=float)
        object.__setattr__(self, "time_grid", tg)
        if tg.size < 2 or tg[-1] <= tg[0]:
            raise ConfigError("reference time grid must span a positive duration")
        if self.m_star.shape != self.dm_star.shape or self.m_star.shape[0] != tg.size:
            raise ConfigError("reference arrays must align with the time grid")
        if self.plan is not None:
            # transport conserves mass, so the zeroth moment cannot drift;
            # hand-assembled tables (e.g. free-flow references) are exempt
            drift = np.abs(self.m_star[:, 0] - self.m_star[0, 0]).max()
            if drift > 1e-9:
                raise ConfigError(f"zeroth reference moment must stay constant (drift {drift:.2e})")

    @property
    def order(self) -> int:
        return self.m_star.shape[1] - 1

    @property
    def span(self) -> float:
        return float(self.time_grid[-1] - self.time_grid[0])

    def _stage(self, t: float) -> float:
        return (float(t) - float(self.time_grid[0])) / self.span

    def value(self, t: float) -> np.ndarray:
        if self.plan is not None:
            return _plan_moments(self.plan, self.basis, self.order, self._stage(t))
        return self._interp(self.m_star, t)

    def derivative(self, t: float) -> np.ndarray:
        if self.plan is not None and self.basis in (MONOMIAL_PARAM, MONOMIAL_OUTPUT):
            return _plan_moment_rates(self.plan, self.order, self._stage(t)) / self.span
        return self._interp(self.dm_star, t)

    def _interp(self, table: np.ndarray, t: float) -> np.ndarray:
        out = np.empty(table.shape[1], dtype=table.dtype)
        for c in range(table.shape[1]):
            out[c] = np.interp(t, self.time_grid, table[:, c])
        return out


def _plan_moments(plan: DisplacementPlan, basis: str, q: int, t: float) -> np.ndarray:
    pos = (1.0 - t) * plan.points + t * plan.targets
    if basis == FOURIER:
        return np.exp(-1j * np.outer(np.arange(q + 1), pos)) @ plan.weights
    return (pos[None, :] ** np.arange(q + 1)[:, None]) @ plan.weights


def _plan_moment_rates(plan: DisplacementPlan, q: int, t: float) -> np.ndarray:
    # d/dt of sum_j w_j ((1-t) y_j + t T_j)^k = k sum_j w_j (T_j - y_j) (...)^(k-1)
    pos = (1.0 - t) * plan.points + t * plan.targets
    disp = plan.targets - plan.points
    out = np.zeros(q + 1)
    for k in range(1, q + 1):
        out[k] = k * np.sum(plan.weights * disp * pos ** (k - 1))
    return out


def ot_moment_reference(plan: DisplacementPlan, basis: str, q: int, time_grid=None) -> MomentReference:
    """Sample the transport path's moments and rates on a time grid.

    The unit transport stage is mapped affinely onto the grid's span.
    Monomial rates use the closed-form displacement formula (zero for the
    zeroth moment); trigonometric rates fall back to central differences on
    the grid, one-sided at the ends.
    """
    if basis not in (MONOMIAL_PARAM, MONOMIAL_OUTPUT, FOURIER):
        raise ValueError(f"unknown basis {basis!r}")
    if time_grid is None:
        time_grid = np.linspace(0.0, 1.0, 201)
    time_grid = np.asarray(time_grid, dtype=float)
    span = time_grid[-1] - time_grid[0]
    if span <= 0:
        raise ConfigError("reference time grid must span a positive duration")
    stages = (time_grid - time_grid[0]) / span
    m = np.array([_plan_moments(plan, basis, q, s) for s in stages])
    if basis == FOURIER:
        dm = np.gradient(m, time_grid, axis=0, edge_order=2)
        dm[:, 0] = 0.0  # the zeroth moment of a probability path is constant
    else:
        dm = np.array([_plan_moment_rates(plan, q, s) for s in stages]) / span
    return MomentReference(time_grid, m, dm, basis, plan)


def reference_sequence(ref: MomentReference, t: float) -> MomentSequence:
    """Moment sequence of the reference at stage ``t`` (validating wrapper)."""
    return MomentSequence(ref.basis, ref.value(t))
