"""Scenario files: strict parsing, and resolution into models, grids,
measures, initial states and transport references.

A scenario is a single JSON document with nested sections.  Unknown keys are
rejected so that typos fail fast; missing required fields are reported by
name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ensembles import Kuramoto, LinearScalar, ParameterGrid, make_uniform_grid
from .measures import (
    EmpiricalMeasure,
    GridDensity,
    cdf,
    quantile,
    truncated_gaussian,
    truncated_gaussian_mixture,
)
from .moments import FOURIER, MONOMIAL_OUTPUT, MONOMIAL_PARAM
from .transport import circular_plan, mccann_plan, ot_moment_reference

__all__ = ["Scenario", "load_scenario"]

_MODEL_KEYS = {"kind", "inputs", "coupling"}
_GRID_KEYS = {"members", "lo", "hi"}
_MEASURE_KEYS = {"kind", "value", "mean", "sigma", "means", "sigmas", "weights"}
_SOLVER_KEYS = {
    "method",
    "r_scale",
    "verify",
    "intervals",
    "iterations",
    "energy_weight",
    "initial_guess",
    "guess_ridge",
    "optimize_dt",
    "optimize_members",
}
_THRESHOLD_KEYS = {"max_residual", "boundary_residual", "final_order_parameter", "w2", "cost"}
_TOP_KEYS = {
    "model",
    "grid",
    "initial",
    "target",
    "basis",
    "q",
    "horizon",
    "dt",
    "solver",
    "thresholds",
    "seed",
    "samples",
    "reference_points",
}


def _check_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required field '{key}' in {where}")
    return section[key]


@dataclass
class Scenario:
    """Validated scenario: everything a pipeline run needs, nothing implicit."""

    model: dict
    grid: dict
    initial: dict
    basis: str
    q: int
    horizon: float
    dt: float
    solver: dict
    target: dict | None = None
    thresholds: dict = field(default_factory=dict)
    seed: int = 0
    samples: int = 1000
    reference_points: int = 201

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        _check_keys(raw, _TOP_KEYS, "scenario")
        model = dict(_need(raw, "model", "scenario"))
        _check_keys(model, _MODEL_KEYS, "model")
        kind = _need(model, "kind", "model")
        if kind not in ("linear", "kuramoto"):
            raise ConfigError(f"unknown model kind '{kind}'")
        grid = dict(_need(raw, "grid", "scenario"))
        _check_keys(grid, _GRID_KEYS, "grid")
        for k in ("members", "lo", "hi"):
            _need(grid, k, "grid")
        initial = dict(_need(raw, "initial", "scenario"))
        _check_keys(initial, _MEASURE_KEYS, "initial")
        target = raw.get("target")
        if target is not None:
            target = dict(target)
            _check_keys(target, _MEASURE_KEYS, "target")
        basis = _need(raw, "basis", "scenario")
        if basis not in (MONOMIAL_PARAM, MONOMIAL_OUTPUT, FOURIER):
            raise ConfigError(f"unknown basis '{basis}'")
        q = int(_need(raw, "q", "scenario"))
        if not 1 <= q <= 16:
            raise ConfigError("q must lie in [1, 16]")
        horizon = float(_need(raw, "horizon", "scenario"))
        if horizon < 0:
            raise ConfigError("horizon must be nonnegative")
        dt = float(_need(raw, "dt", "scenario"))
        if dt <= 0:
            raise ConfigError("dt must be positive")
        solver = dict(_need(raw, "solver", "scenario"))
        _check_keys(solver, _SOLVER_KEYS, "solver")
        method = _need(solver, "method", "solver")
        if method not in ("exact", "tpbvp", "shooting"):
            raise ConfigError(f"unknown solver method '{method}'")
        thresholds = dict(raw.get("thresholds", {}))
        _check_keys(thresholds, _THRESHOLD_KEYS, "thresholds")
        return cls(
            model=model,
            grid=grid,
            initial=initial,
            basis=basis,
            q=q,
            horizon=horizon,
            dt=dt,
            solver=solver,
            target=target,
            thresholds=thresholds,
            seed=int(raw.get("seed", 0)),
            samples=int(raw.get("samples", 1000)),
            reference_points=int(raw.get("reference_points", 201)),
        )

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "grid": self.grid,
            "initial": self.initial,
            "basis": self.basis,
            "q": self.q,
            "horizon": self.horizon,
            "dt": self.dt,
            "solver": self.solver,
        }
        if self.target is not None:
            out["target"] = self.target
        if self.thresholds:
            out["thresholds"] = self.thresholds
        out["seed"] = self.seed
        out["samples"] = self.samples
        out["reference_points"] = self.reference_points
        return out

    def build_model(self):
        if self.model["kind"] == "linear":
            return LinearScalar(int(self.model.get("inputs", 1)))
        return Kuramoto(float(self.model.get("coupling", 0.0)))

    def build_grid(self) -> ParameterGrid:
        g = self.grid
        return make_uniform_grid(int(g["members"]), float(g["lo"]), float(g["hi"]))

    def build_grid_with(self, members: int) -> ParameterGrid:
        g = self.grid
        return make_uniform_grid(int(members), float(g["lo"]), float(g["hi"]))

    def resolve_measure(self, spec: dict, where: str):
        kind = _need(spec, "kind", where)
        if kind == "uniform":
            return GridDensity((0.0, 1.0), np.ones(2001))
        if kind == "truncated_gaussian":
            return truncated_gaussian(float(_need(spec, "mean", where)),
                                      float(_need(spec, "sigma", where)))
        if kind == "gaussian_mixture":
            return truncated_gaussian_mixture(
                _need(spec, "means", where), _need(spec, "sigmas", where),
                _need(spec, "weights", where))
        if kind == "point_mass":
            return EmpiricalMeasure(np.array([float(_need(spec, "value", where))]),
                                    np.array([1.0]))
        if kind == "uniform_circle":
            raise ConfigError(f"'uniform_circle' is only valid as an initial condition ({where})")
        if kind == "constant":
            raise ConfigError(f"'constant' is only valid as an initial condition ({where})")
        raise ConfigError(f"unknown measure kind '{kind}' in {where}")

    def member_levels(self, grid: ParameterGrid) -> np.ndarray:
        return np.cumsum(grid.weights) - grid.weights / 2

    def initial_state(self, grid: ParameterGrid) -> np.ndarray:
        """Member values realizing the initial spec for the chosen basis."""
        kind = _need(self.initial, "kind", "initial")
        if self.basis == MONOMIAL_PARAM:
            if kind == "constant":
                return np.full(grid.size, float(_need(self.initial, "value", "initial")))
            dens = self.resolve_measure(self.initial, "initial")
            if not isinstance(dens, GridDensity):
                raise ConfigError("labeled runs need a density-valued initial condition")
            return np.interp(grid.nodes, dens.xs, dens.values)
        if self.basis == MONOMIAL_OUTPUT:
            if kind == "constant":
                return np.full(grid.size, float(_need(self.initial, "value", "initial")))
            mu0 = self.resolve_measure(self.initial, "initial")
            return np.asarray(quantile(cdf(mu0), self.member_levels(grid)), dtype=float)
        # fourier: phases on the circle
        if kind == "uniform_circle":
            return 2 * np.pi * self.member_levels(grid)
        if kind == "point_mass":
            return np.full(grid.size, float(_need(self.initial, "value", "initial")) % (2 * np.pi))
        raise ConfigError(f"initial kind '{kind}' is not valid for phase ensembles")

    def initial_output_measure(self, grid: ParameterGrid):
        """The initial condition as a measure, for transport planning."""
        if self.basis == MONOMIAL_PARAM:
            kind = _need(self.initial, "kind", "initial")
            if kind == "constant":
                value = float(_need(self.initial, "value", "initial"))
                half = (grid.nodes[1] - grid.nodes[0]) / 2  # midpoint-rule margin
                support = (grid.nodes[0] - half, grid.nodes[-1] + half)
                return GridDensity.normalized(support, np.full(64, value))
            return self.resolve_measure(self.initial, "initial")
        if self.basis == MONOMIAL_OUTPUT:
            kind = _need(self.initial, "kind", "initial")
            if kind == "constant":
                return EmpiricalMeasure(
                    np.array([float(_need(self.initial, "value", "initial"))]), np.array([1.0]))
            return self.resolve_measure(self.initial, "initial")
        return EmpiricalMeasure(self.initial_state(grid), grid.weights.copy())

    def build_reference(self, grid: ParameterGrid, time_grid=None):
        """Transport plan and moment reference from initial to target.

        The unit transport stage is traversed over the scenario horizon.
        """
        if self.target is None:
            raise ConfigError("missing required field 'target' in scenario")
        if self.horizon <= 0:
            raise ConfigError("reference construction needs a positive horizon")
        if time_grid is None:
            time_grid = np.linspace(0.0, self.horizon, self.reference_points)
        if self.basis == FOURIER:
            tkind = _need(self.target, "kind", "target")
            if tkind != "point_mass":
                raise ConfigError("phase ensembles support point-mass targets only")
            theta_star = float(_need(self.target, "value", "target"))
            plan = circular_plan(self.initial_output_measure(grid), theta_star)
        else:
            mu0 = self.initial_output_measure(grid)
            mu1 = self.resolve_measure(self.target, "target")
            plan = mccann_plan(mu0, mu1)
        return plan, ot_moment_reference(plan, self.basis, self.q, time_grid)


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    return Scenario.from_dict(raw)
