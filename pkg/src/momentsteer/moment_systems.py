"""Truncated moment dynamics of the labeled linear ensemble, and numeric
moment trajectories for simulated ensembles.

For the labeled linear family the density moments obey an exact linear
system: a left-shift in the moment index plus a Hankel-structured input
matrix with entries 1/(k+i).  Truncation keeps orders 0..q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import ControlSignal, LinearScalar, ParameterGrid, Trajectory, simulate
from .moments import FOURIER, MONOMIAL_OUTPUT, MONOMIAL_PARAM, moment_metric_values

__all__ = [
    "LinearMomentSystem",
    "MomentTrace",
    "build_linear_moment_system",
    "moment_rhs",
    "verify_moment_consistency",
    "moment_trajectory",
]


@dataclass(frozen=True)
class LinearMomentSystem:
    """Shift-plus-Hankel moment dynamics dm/dt = L m + H u truncated at order q.

    ``L`` is the (q+1) x (q+1) nilpotent superdiagonal shift; ``H`` is
    (q+1) x p with H[k, i-1] = 1/(k+i).  ``h_rank`` reports the numerical
    rank of H: singular values above 1e-10, an absolute cutoff that matches
    the relative scale because the entries are of order one.
    """

    q: int
    p: int
    L: np.ndarray
    H: np.ndarray
    h_rank: int
    h_cond: float


def build_linear_moment_system(q: int, p: int) -> LinearMomentSystem:
    if q < 1 or p < 1:
        raise ValueError("need q >= 1 and p >= 1")
    L = np.diag(np.ones(q), 1)
    k = np.arange(q + 1)[:, None]
    i = np.arange(1, p + 1)[None, :]
    H = 1.0 / (k + i)
    sv = np.linalg.svd(H, compute_uv=False)
    rank = int(np.sum(sv > 1e-10))
    return LinearMomentSystem(q, p, L, H, rank, float(sv[0] / sv[-1]))


def moment_rhs(sys: LinearMomentSystem, m, u) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if m.shape != (sys.q + 1,):
        raise ValueError(f"moment vector must have length {sys.q + 1}")
    if u.shape != (sys.p,):
        raise ValueError(f"control vector must have length {sys.p}")
    return sys.L @ m + sys.H @ u


def _rk4_linear_moments(L, H, m0, control: ControlSignal, dt: float) -> np.ndarray:
    """RK4 trajectory of dm/dt = L m + H u(t) sampled every dt."""
    n_int = control.values.shape[0]
    horizon = control.horizon
    per = int(round(horizon / n_int / dt))
    if per < 1 or abs(per * dt - horizon / n_int) > 1e-9:
        raise ValueError("dt must divide the control interval")
    m = np.asarray(m0, dtype=float).copy()
    out = np.empty((per * n_int + 1, m.size))
    out[0] = m
    row = 1
    for seg in range(n_int):
        hu = H @ control.values[seg]

        def f(mm):
            return L @ mm + hu

        for _ in range(per):
            k1 = f(m)
            k2 = f(m + dt / 2 * k1)
            k3 = f(m + dt / 2 * k2)
            k4 = f(m + dt * k3)
            m = m + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            out[row] = m
            row += 1
    return out


def verify_moment_consistency(
    model: LinearScalar,
    x0,
    grid: ParameterGrid,
    control: ControlSignal,
    q: int,
    dt: float,
    pad: int = 8,
) -> float:
    """Largest metric gap between ensemble-side and moment-side trajectories.

    One path simulates the ensemble and takes density moments per instant by
    grid quadrature; the other integrates the shift-plus-Hankel system from
    the same initial moments under the same control.  The moment ODE is
    integrated at order q+pad and projected back to q, so the comparison
    isolates modeling and integrator error rather than truncation error of
    the top component.
    """
    if not isinstance(model, LinearScalar):
        raise ValueError("consistency check applies to the labeled linear model")
    traj = simulate(model, x0, grid, control, dt)
    ens = moment_trajectory(traj, MONOMIAL_PARAM, q).values

    big = build_linear_moment_system(q + pad, model.n_inputs)
    m0 = (grid.nodes[None, :] ** np.arange(q + pad + 1)[:, None] * traj.states[0]) @ grid.weights
    if control.horizon == 0.0:
        return 0.0
    ode = _rk4_linear_moments(big.L, big.H, m0, control, dt)[:, : q + 1]
    gaps = [moment_metric_values(ens[i], ode[i]) for i in range(ens.shape[0])]
    return float(np.max(gaps))


@dataclass(frozen=True)
class MomentTrace:
    """Moment vectors per trajectory instant."""

    times: np.ndarray
    values: np.ndarray
    basis: str


def moment_trajectory(traj: Trajectory, basis: str, q: int) -> MomentTrace:
    """Per-instant moments of the trajectory's output measure.

    ``monomial_param`` treats the member values as density samples against
    the grid weights; ``monomial_output`` and ``fourier`` are pushforward
    moments of the member outputs.
    """
    w = traj.grid.weights
    ks = np.arange(q + 1)
    x = traj.states
    if basis == MONOMIAL_PARAM:
        powers = traj.grid.nodes[None, :] ** ks[:, None]
        vals = x @ (powers * w[None, :]).T
    elif basis == MONOMIAL_OUTPUT:
        vals = np.stack([(x**k) @ w for k in ks], axis=1)
    elif basis == FOURIER:
        vals = np.stack([np.exp(-1j * k * x) @ w for k in ks], axis=1)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return MomentTrace(traj.times.copy(), vals, basis)
