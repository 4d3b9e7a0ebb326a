"""Moment transforms of measures, the weighted sequence metric, density
reconstruction from trigonometric moments, and realizability checks."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .measures import EmpiricalMeasure, GridDensity

__all__ = [
    "MONOMIAL_PARAM",
    "MONOMIAL_OUTPUT",
    "FOURIER",
    "MomentSequence",
    "HausdorffCheck",
    "moments_density",
    "moments_output",
    "moments_fourier",
    "reconstruct_fourier",
    "moment_metric",
    "moment_metric_values",
    "hausdorff_check",
]

MONOMIAL_PARAM = "monomial_param"
MONOMIAL_OUTPUT = "monomial_output"
FOURIER = "fourier"
_BASES = (MONOMIAL_PARAM, MONOMIAL_OUTPUT, FOURIER)


@dataclass(frozen=True)
class MomentSequence:
    """Truncated moment coordinates m_0..m_q of a measure against a basis tag.

    For a probability measure the zeroth monomial-output or trigonometric
    moment is 1; trigonometric moments have modulus at most 1.  The
    ``monomial_param`` basis describes a density on the parameter interval,
    whose zeroth moment is its total mass.
    """

    basis: str
    values: np.ndarray

    def __post_init__(self):
        if self.basis not in _BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        vals = np.asarray(self.values)
        vals = vals.astype(complex) if self.basis == FOURIER else vals.astype(float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("moment values must be a nonempty 1-d array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("moments must be finite")
        if self.basis in (MONOMIAL_OUTPUT, FOURIER) and abs(vals[0] - 1.0) > 1e-10:
            raise ValueError("zeroth moment of a probability measure must be 1 within 1e-10")
        if self.basis == FOURIER and np.any(np.abs(vals) > 1 + 1e-9):
            raise ValueError("trigonometric moments of a probability measure have modulus <= 1")

    @property
    def order(self) -> int:
        return self.values.size - 1


def moments_density(f: GridDensity, q: int) -> MomentSequence:
    """Power moments of a density on the parameter interval by trapezoid quadrature."""
    if q < 0:
        raise ValueError("order must be nonnegative")
    xs = f.xs
    vals = np.array([np.trapezoid(xs**k * f.values, xs) for k in range(q + 1)])
    return MomentSequence(MONOMIAL_PARAM, vals)


def moments_output(mu: EmpiricalMeasure, q: int) -> MomentSequence:
    """Power moments of an output measure: m_k = sum_j w_j y_j^k."""
    if q < 0:
        raise ValueError("order must be nonnegative")
    with np.errstate(over="ignore"):
        powers = mu.points[None, :] ** np.arange(q + 1)[:, None]
        vals = powers @ mu.weights
    if not np.all(np.isfinite(vals)):
        raise ValueError("moment overflow: outputs too large for the requested order")
    return MomentSequence(MONOMIAL_OUTPUT, vals)


def moments_fourier(mu: EmpiricalMeasure, q: int) -> MomentSequence:
    """Trigonometric moments m_k = sum_j w_j exp(-i k theta_j) of angles on the circle."""
    if q < 0:
        raise ValueError("order must be nonnegative")
    th = mu.points
    if np.any(th < 0) or np.any(th >= 2 * np.pi):
        raise ValueError("angles must lie in [0, 2*pi)")
    vals = np.exp(-1j * np.outer(np.arange(q + 1), th)) @ mu.weights
    return MomentSequence(FOURIER, vals)


def reconstruct_fourier(m: MomentSequence, n_points: int = 512) -> GridDensity:
    """Truncated trigonometric series density on [0, 2*pi].

    f(theta) = (1/2pi) [m_0 + sum_k (conj(m_k) e^{-ik theta} + m_k e^{ik theta})].
    Truncation can produce negative lobes; they are returned as-is and exposed
    through the density's ``has_negative`` flag.
    """
    if m.basis != FOURIER:
        raise ValueError("reconstruction needs trigonometric moments")
    m0 = m.values[0]
    if abs(m0.imag) > 1e-9 or m0.real <= 0:
        raise ValueError("zeroth moment must be real and positive")
    theta = np.linspace(0.0, 2 * np.pi, n_points + 1)
    vals = np.full(theta.shape, m0.real, dtype=float)
    for k in range(1, m.order + 1):
        vals += 2 * np.real(m.values[k] * np.exp(1j * k * theta))
    return GridDensity((0.0, 2 * np.pi), vals / (2 * np.pi), signed=True)


def moment_metric_values(a: np.ndarray, b: np.ndarray) -> float:
    """Weighted sequence distance sum_k 2^-k |a_k - b_k| on raw arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("moment arrays must have equal length")
    k = np.arange(a.size, dtype=float)
    return float(np.sum(2.0**-k * np.abs(a - b)))


def moment_metric(a: MomentSequence, b: MomentSequence) -> float:
    """Metric on moment sequences of the same basis and order."""
    if a.basis != b.basis:
        raise ValueError("moment sequences have different bases")
    if a.order != b.order:
        raise ValueError("moment sequences have different orders")
    return moment_metric_values(a.values, b.values)


@dataclass(frozen=True)
class HausdorffCheck:
    """Outcome of the finite-difference realizability test for [0, 1] moments."""

    passed: bool
    worst: float
    where: tuple


def hausdorff_check(m, depth: int, tol: float = 1e-9) -> HausdorffCheck:
    """Check sum_i C(r, i) (-1)^i m_{k+i} >= -tol for all r <= depth.

    Nonnegativity of these differences for all orders characterizes power
    moment sequences of measures on [0, 1]; at finite depth the check is a
    necessary condition.  Returns the worst signed value and where it occurs.
    """
    vals = np.asarray(m.values if isinstance(m, MomentSequence) else m, dtype=float)
    worst = np.inf
    where = (0, 0)
    for r in range(depth + 1):
        coeff = np.array([(-1) ** i * comb(r, i) for i in range(r + 1)])
        for k in range(vals.size - r):
            d = float(coeff @ vals[k : k + r + 1])
            if d < worst:
                worst, where = d, (k, r)
    return HausdorffCheck(worst >= -tol, worst, where)
