"""Ensemble models and fixed-step integration of member trajectories.

An ensemble is a family of scalar units indexed by a parameter drawn from a
compact interval, all driven by one broadcast input.  Two model kinds are
provided: a multi-input scalar linear family (rate parameter times state plus
a polynomial-in-parameter input profile) and globally coupled Kuramoto phase
oscillators actuated through ``u * sin(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SolverError

__all__ = [
    "ParameterGrid",
    "ControlSignal",
    "LinearScalar",
    "Kuramoto",
    "EnsembleState",
    "Trajectory",
    "make_uniform_grid",
    "rhs",
    "mean_field",
    "simulate",
]


@dataclass(frozen=True)
class ParameterGrid:
    """Quadrature discretization of the parameter interval.

    ``nodes`` are strictly increasing parameter values, ``weights`` are
    positive quadrature weights summing to one, so the discrete parameter
    measure is a probability measure.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.size < 1:
            raise ConfigError("grid nodes must be a nonempty 1-d array")
        if weights.shape != nodes.shape:
            raise ConfigError("grid weights must match nodes in shape")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ConfigError("grid weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError("grid weights must sum to 1 within 1e-12")

    @property
    def size(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control: one value vector per interval of a uniform time grid."""

    time_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        tg = np.asarray(self.time_grid, dtype=float)
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "time_grid", tg)
        object.__setattr__(self, "values", vals)
        if tg.ndim != 1 or tg.size < 2:
            raise ConfigError("control time grid needs at least two instants")
        steps = np.diff(tg)
        degenerate = np.all(steps == 0.0)  # zero-horizon signal
        if not degenerate and np.any(steps <= 0):
            raise ConfigError("control time grid must be increasing")
        if not np.allclose(steps, steps[0], rtol=0, atol=1e-9 * max(steps[0], 1.0)):
            raise ConfigError("control time grid must be uniform")
        if vals.shape[0] != tg.size - 1:
            raise ConfigError("need one control vector per time interval")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("control values must be finite")

    @classmethod
    def zeros(cls, n_inputs: int, horizon: float, n_intervals: int = 1) -> "ControlSignal":
        return cls(np.linspace(0.0, horizon, n_intervals + 1), np.zeros((n_intervals, n_inputs)))

    @property
    def n_inputs(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.time_grid[-1] - self.time_grid[0])


@dataclass(frozen=True)
class LinearScalar:
    """dx/dt = beta * x + sum_i beta^(i-1) u_i, state on the real line."""

    n_inputs: int = 1

    def __post_init__(self):
        if self.n_inputs < 1:
            raise ConfigError("LinearScalar needs at least one input channel")


@dataclass(frozen=True)
class Kuramoto:
    """dtheta/dt = omega + K r sin(psi - theta) + u sin(theta), phases on the circle.

    The grid nodes play the role of the natural frequencies; (r, psi) is the
    weighted mean field of the current phases.
    """

    coupling: float = 0.0

    def __post_init__(self):
        if self.coupling < 0:
            raise ConfigError("Kuramoto coupling must be nonnegative")

    n_inputs: int = field(default=1, init=False)


@dataclass
class EnsembleState:
    """Member values at one instant; angles for Kuramoto, reals for LinearScalar."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)


@dataclass
class Trajectory:
    """States sampled on a uniform time grid, one row per instant."""

    times: np.ndarray
    states: np.ndarray
    grid: ParameterGrid

    def final_state(self) -> EnsembleState:
        return EnsembleState(float(self.times[-1]), self.states[-1].copy())


def make_uniform_grid(n: int, lo: float, hi: float) -> ParameterGrid:
    """Midpoint-rule discretization of [lo, hi] with equal weights 1/n."""
    if n < 2:
        raise ConfigError("grid needs at least 2 members")
    if not lo < hi:
        raise ConfigError("grid bounds must satisfy lo < hi")
    j = np.arange(n)
    nodes = lo + (j + 0.5) * (hi - lo) / n
    return ParameterGrid(nodes, np.full(n, 1.0 / n))


def mean_field(state, grid: ParameterGrid):
    """Weighted circular mean: returns (r, psi) with r e^{i psi} = sum_j w_j e^{i theta_j}."""
    x = state.x if isinstance(state, EnsembleState) else np.asarray(state, dtype=float)
    z = np.sum(grid.weights * np.exp(1j * x))
    return min(float(np.abs(z)), 1.0), float(np.angle(z))


def _input_profile(model: LinearScalar, nodes: np.ndarray) -> np.ndarray:
    # rows are beta^(i-1) for input channels i = 1..p
    return nodes[None, :] ** np.arange(model.n_inputs)[:, None]


def _derivative(model, x, grid, u, profile=None):
    if isinstance(model, LinearScalar):
        if profile is None:
            profile = _input_profile(model, grid.nodes)
        return grid.nodes * x + u @ profile
    r, psi = mean_field(x, grid)
    return grid.nodes + model.coupling * r * np.sin(psi - x) + u[0] * np.sin(x)


def rhs(model, state: EnsembleState, grid: ParameterGrid, u) -> np.ndarray:
    """Member derivatives under control vector ``u``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if state.x.shape != grid.nodes.shape:
        raise ValueError("state length must equal grid size")
    if u.size != model.n_inputs:
        raise ValueError(f"expected {model.n_inputs} control values, got {u.size}")
    return _derivative(model, state.x, grid, u)


def _steps_per_interval(interval: float, dt: float) -> int:
    n = int(round(interval / dt))
    if n < 1 or abs(n * dt - interval) > 1e-9 * max(1.0, interval):
        raise ValueError(f"dt={dt} does not divide the control interval {interval}")
    return n


def simulate(model, x0, grid: ParameterGrid, control: ControlSignal, dt: float) -> Trajectory:
    """Classical fixed-step RK4 over [0, T], sampled every ``dt``.

    The control is held constant on each of its intervals; ``dt`` must divide
    the interval length.  Kuramoto phases are wrapped to [0, 2*pi) after every
    step.  The run is deterministic: identical inputs give identical output.
    """
    x = (x0.x if isinstance(x0, EnsembleState) else np.asarray(x0, dtype=float)).copy()
    if x.shape != grid.nodes.shape:
        raise ValueError("initial state length must equal grid size")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")
    if control.n_inputs != model.n_inputs:
        raise ValueError("control channel count must match the model input count")

    horizon = control.horizon
    if horizon == 0.0:
        return Trajectory(np.zeros(1), x[None, :].copy(), grid)
    if dt <= 0:
        raise ValueError("dt must be positive")

    n_int = control.values.shape[0]
    interval = horizon / n_int
    per = _steps_per_interval(interval, dt)
    wrap = isinstance(model, Kuramoto)
    profile = _input_profile(model, grid.nodes) if isinstance(model, LinearScalar) else None

    n_steps = per * n_int
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    row = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for seg in range(n_int):
            u = control.values[seg]
            for _ in range(per):
                k1 = _derivative(model, x, grid, u, profile)
                k2 = _derivative(model, x + dt / 2 * k1, grid, u, profile)
                k3 = _derivative(model, x + dt / 2 * k2, grid, u, profile)
                k4 = _derivative(model, x + dt * k3, grid, u, profile)
                x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                if wrap:
                    x = np.mod(x, 2 * np.pi)
                if not np.all(np.isfinite(x)):
                    t_bad = control.time_grid[0] + row * dt
                    raise SolverError(f"non-finite state at t={t_bad:.6g}")
                out[row] = x
                row += 1
    times = control.time_grid[0] + dt * np.arange(n_steps + 1)
    return Trajectory(times, out, grid)


def _simulate_segments_batch(model, x0, grid, U, horizon, dt):
    """Propagate a batch of piecewise-constant controls, recording segment boundaries.

    U has shape (B, n_intervals, p).  Returns states of shape
    (B, n_intervals + 1, n).  Used by the shooting optimizer, where only the
    cost-quadrature nodes are needed; semantics match :func:`simulate`.
    """
    B, n_int, p = U.shape
    if p != model.n_inputs:
        raise ValueError("control channel count must match the model input count")
    per = _steps_per_interval(horizon / n_int, dt)
    n = grid.size
    nodes = grid.nodes[None, :]
    x = np.broadcast_to(np.asarray(x0, dtype=float), (B, n)).copy()
    out = np.empty((B, n_int + 1, n))
    out[:, 0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(model, LinearScalar):
            profile = _input_profile(model, grid.nodes)
            for seg in range(n_int):
                drive = U[:, seg, :] @ profile
                for _ in range(per):
                    k1 = nodes * x + drive
                    k2 = nodes * (x + dt / 2 * k1) + drive
                    k3 = nodes * (x + dt / 2 * k2) + drive
                    k4 = nodes * (x + dt * k3) + drive
                    x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                out[:, seg + 1] = x
        else:
            K = model.coupling
            w = grid.weights[None, :]

            def f(th, us):
                z = np.sum(w * np.exp(1j * th), axis=1)
                r = np.abs(z)[:, None]
                psi = np.angle(z)[:, None]
                return nodes + K * r * np.sin(psi - th) + us * np.sin(th)

            for seg in range(n_int):
                us = U[:, seg, :1]
                for _ in range(per):
                    k1 = f(x, us)
                    k2 = f(x + dt / 2 * k1, us)
                    k3 = f(x + dt / 2 * k2, us)
                    k4 = f(x + dt * k3, us)
                    x = np.mod(x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), 2 * np.pi)
                out[:, seg + 1] = x
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite state in batched simulation")
    return out
