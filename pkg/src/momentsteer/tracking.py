"""Control synthesis for moment tracking: pointwise minimum-norm feedback,
fixed-endpoint LQ tracking via a shooting-solved boundary value problem, and
derivative-free direct shooting for nonlinear ensembles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .ensembles import (
    ControlSignal,
    LinearScalar,
    ParameterGrid,
    _simulate_segments_batch,
)
from .errors import SolverError, SolverWarning
from .moment_systems import LinearMomentSystem, MomentTrace
from .moments import FOURIER
from .transport import MomentReference

__all__ = [
    "TrackingResult",
    "LQSetup",
    "exact_tracking_feedback",
    "lq_tracking_tpbvp",
    "direct_shooting",
    "tracking_cost",
    "terminal_profile_guess",
    "tpbvp_ode_residual",
    "tpbvp_optimality_gap",
]


@dataclass
class TrackingResult:
    """Synthesized control with its moment trace and per-instant residuals.

    ``cost`` is the trapezoid quadrature of the squared residual trace (plus
    quadratic control energy where the method includes one), so it can be
    recomputed from the stored traces.  Solver diagnostics live in ``info``.
    """

    control: ControlSignal
    times: np.ndarray
    moments: np.ndarray
    residuals: np.ndarray
    cost: float
    converged: bool = True
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LQSetup:
    """Fixed-endpoint LQ tracking data: control weight and boundary moments."""

    R: np.ndarray
    m_start: np.ndarray
    m_end: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "m_start", np.asarray(self.m_start, dtype=float))
        object.__setattr__(self, "m_end", np.asarray(self.m_end, dtype=float))
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("R must be square")
        if np.any(np.abs(R - R.T) > 1e-12):
            raise ValueError("R must be symmetric")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be positive definite")


def _feedback_gain(sys: LinearMomentSystem):
    sv = np.linalg.svd(sys.H, compute_uv=False)
    if sys.p >= sys.q + 1:
        cond_hht = (sv[0] / sv[-1]) ** 2
    else:
        cond_hht = np.inf
    if cond_hht > 1e14:
        warnings.warn(
            f"H H' condition {cond_hht:.3g} exceeds 1e14; using pseudo-inverse feedback",
            SolverWarning,
            stacklevel=3,
        )
    return np.linalg.pinv(sys.H, rcond=1e-12), cond_hht


def exact_tracking_feedback(
    sys: LinearMomentSystem, ref: MomentReference, m0, dt: float
) -> TrackingResult:
    """Closed-loop integration of the pointwise least-norm tracking law
    u(t) = H^+ (dm*/dt - L m).

    With as many independent input channels as tracked moment components the
    feedback reproduces the reference up to integrator noise; otherwise the
    component of the required drive outside the range of H persists as a
    structural residual, which is reported rather than hidden.
    """
    m = np.asarray(m0, dtype=float).copy()
    if m.shape != (sys.q + 1,):
        raise ValueError(f"initial moments must have length {sys.q + 1}")
    horizon = float(ref.time_grid[-1] - ref.time_grid[0])
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > 1e-9:
        raise ValueError("dt must divide the reference horizon")
    Hp, cond_hht = _feedback_gain(sys)

    t0 = float(ref.time_grid[0])
    dm_half = np.array([ref.derivative(t0 + j * dt / 2) for j in range(2 * n_steps + 1)])
    m_ref = np.array([ref.value(t0 + i * dt) for i in range(n_steps + 1)]).real

    def closed_loop(mm, j):
        u = Hp @ (dm_half[j] - sys.L @ mm)
        return sys.L @ mm + sys.H @ u, u

    times = t0 + dt * np.arange(n_steps + 1)
    moments = np.empty((n_steps + 1, sys.q + 1))
    controls = np.empty((n_steps, sys.p))
    moments[0] = m
    for i in range(n_steps):
        k1, u0 = closed_loop(m, 2 * i)
        k2, _ = closed_loop(m + dt / 2 * k1, 2 * i + 1)
        k3, _ = closed_loop(m + dt / 2 * k2, 2 * i + 1)
        k4, _ = closed_loop(m + dt * k3, 2 * i + 2)
        m = m + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(m)):
            raise SolverError(f"non-finite moments at t={times[i + 1]:.6g}")
        moments[i + 1] = m
        controls[i] = u0
    residuals = np.linalg.norm(moments - m_ref, axis=1)
    cost = float(np.trapezoid(residuals**2, times))
    control = ControlSignal(times, controls)
    return TrackingResult(
        control,
        times,
        moments,
        residuals,
        cost,
        info={"hht_condition": cond_hht, "pseudo_inverse": True, "h_rank": sys.h_rank},
    )


def _hamiltonian_matrix(sys: LinearMomentSystem, R: np.ndarray) -> np.ndarray:
    n = sys.q + 1
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = sys.L
    A[:n, n:] = -0.5 * sys.H @ np.linalg.solve(R, sys.H.T)
    A[n:, :n] = -2.0 * np.eye(n)
    A[n:, n:] = -sys.L.T
    return A


def _rk4_affine(A, z0, forcing_half, dt, dtype=np.float64):
    """RK4 for dz/dt = A z + f(t); forcing sampled on the half-step grid."""
    Ad = A.astype(dtype)
    z = np.asarray(z0, dtype=dtype).copy()
    n_steps = (forcing_half.shape[0] - 1) // 2
    out = np.empty((n_steps + 1, z.size), dtype=dtype)
    out[0] = z
    h = dtype(dt)
    for i in range(n_steps):
        k1 = Ad @ z + forcing_half[2 * i]
        k2 = Ad @ (z + h / 2 * k1) + forcing_half[2 * i + 1]
        k3 = Ad @ (z + h / 2 * k2) + forcing_half[2 * i + 1]
        k4 = Ad @ (z + h * k3) + forcing_half[2 * i + 2]
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = z
    return out


def _tpbvp_forcing(ref: MomentReference, n_steps, dt, dtype=np.float64):
    n = ref.order + 1
    span = dtype(ref.span)
    out = np.zeros((2 * n_steps + 1, 2 * n), dtype=dtype)
    plan = ref.plan
    if plan is not None:
        pts = plan.points.astype(dtype)
        tgt = plan.targets.astype(dtype)
        w = plan.weights.astype(dtype)
    for j in range(2 * n_steps + 1):
        s = dtype(j) * dtype(dt) / 2 / span
        if plan is not None:
            pos = (1 - s) * pts + s * tgt
            power = np.ones_like(pos)
            mv = np.empty(n, dtype=dtype)
            mv[0] = power @ w
            for k in range(1, n):
                power = power * pos
                mv[k] = power @ w
        else:
            mv = ref.value(float(ref.time_grid[0]) + float(j) * dt / 2).astype(dtype)
        out[j, n:] = 2 * mv
    return out


def lq_tracking_tpbvp(
    sys: LinearMomentSystem,
    ref: MomentReference,
    setup: LQSetup,
    dt: float,
    max_refinements: int = 4,
    boundary_tol: float = 1e-10,
) -> TrackingResult:
    """Fixed-endpoint LQ moment tracking solved by single shooting.

    The state-costate system is integrated once per unit costate direction
    plus once for the particular solution; the boundary-matching linear
    system then fixes the initial costate.  Because the matching matrix is
    ill conditioned when inputs are few, the initial costate is polished by
    iterative refinement with extended-precision residual evaluation, and
    the best iterate is kept.
    """
    if setup.R.shape[0] != sys.p:
        raise ValueError("R must be p x p")
    n = sys.q + 1
    if setup.m_start.shape != (n,) or setup.m_end.shape != (n,):
        raise ValueError(f"boundary moments must have length {n}")
    horizon = float(ref.time_grid[-1] - ref.time_grid[0])
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > 1e-9:
        raise ValueError("dt must divide the reference horizon")

    A = _hamiltonian_matrix(sys, setup.R)
    f64 = _tpbvp_forcing(ref, n_steps, dt)

    # endpoint responses of unit initial costates (homogeneous system)
    Z = np.zeros((2 * n, n))
    Z[n:, :] = np.eye(n)
    for _ in range(n_steps):
        k1 = A @ Z
        k2 = A @ (Z + dt / 2 * k1)
        k3 = A @ (Z + dt / 2 * k2)
        k4 = A @ (Z + dt * k3)
        Z = Z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    match = Z[:n, :]
    sv = np.linalg.svd(match, compute_uv=False)
    # ill conditioning up to ~1/eps is handled by the refinement passes below;
    # only a machine-rank deficiency marks a genuinely unreachable endpoint
    rank = int(np.sum(sv > 2 * n * np.finfo(float).eps * sv[0]))
    if rank < n:
        raise SolverError(
            f"boundary matching matrix is singular (rank {rank} of {n}); "
            "the requested endpoint is unreachable within this truncation"
        )
    cond_match = float(sv[0] / sv[-1])

    part = _rk4_affine(A, np.concatenate([setup.m_start, np.zeros(n)]), f64, dt)
    lam0 = np.linalg.lstsq(match, setup.m_end - part[-1, :n], rcond=None)[0]

    # refinement with extended-precision residuals; keep the best iterate
    fld = _tpbvp_forcing(ref, n_steps, dt, dtype=np.longdouble)
    best = (np.inf, lam0, None)
    for _ in range(max_refinements):
        z0 = np.concatenate([setup.m_start, lam0])
        traj_ld = _rk4_affine(A, z0.astype(np.longdouble), fld, dt, dtype=np.longdouble)
        resid = setup.m_end - traj_ld[-1, :n].astype(np.float64)
        rnorm = float(np.linalg.norm(resid))
        if rnorm < best[0]:
            best = (rnorm, lam0.copy(), traj_ld)
        if rnorm < boundary_tol:
            break
        lam0 = lam0 + np.linalg.lstsq(match, resid, rcond=None)[0]
    boundary_end, lam0, traj_ld = best
    if traj_ld is None:  # pragma: no cover - defensive
        raise SolverError("boundary refinement failed to produce a trajectory")

    traj = traj_ld.astype(np.float64)
    times = float(ref.time_grid[0]) + dt * np.arange(n_steps + 1)
    moments = traj[:, :n]
    lam = traj[:, n:]
    u = -0.5 * np.linalg.solve(setup.R, sys.H.T @ lam.T).T
    m_ref = f64[::2, n:] / 2
    residuals = np.linalg.norm(moments - m_ref, axis=1)
    energy = np.einsum("ij,jk,ik->i", u, setup.R, u)
    cost = float(np.trapezoid(residuals**2 + energy, times))
    control = ControlSignal(times, u[:-1])
    return TrackingResult(
        control,
        times,
        moments,
        residuals,
        cost,
        info={
            "lambda0": lam0,
            "lambda_trace": lam,
            "boundary_residual_start": 0.0,
            "boundary_residual_end": boundary_end,
            "matching_condition": cond_match,
            "hamiltonian": A,
        },
    )


def tpbvp_ode_residual(sys: LinearMomentSystem, setup: LQSetup, ref: MomentReference,
                       result: TrackingResult) -> float:
    """Scale-normalized defect of the returned trajectory against an
    independent high-order integration of the same boundary value problem.

    The costate components are orders of magnitude larger than the moment
    components, so the defect is reported relative to the trajectory's sup
    norm.
    """
    n = sys.q + 1
    A = result.info["hamiltonian"]
    z = np.hstack([result.moments, result.info["lambda_trace"]])

    def rhs(t, zz):
        f = np.zeros(2 * n)
        f[n:] = 2 * ref.value(t).real
        return A @ zz + f

    sol = solve_ivp(
        rhs,
        (result.times[0], result.times[-1]),
        z[0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-10,
        t_eval=result.times,
    )
    if not sol.success:
        raise SolverError("verification integration failed")
    scale = max(1.0, float(np.abs(z).max()))
    return float(np.abs(sol.y.T - z).max() / scale)


def _rk4_moment_batch(L, H, m0, U_half, dt, du_steps=None, per=1, eps=0.0):
    """Batched RK4 of dm/dt = L m + H (u(t) + eps * du).

    ``U_half`` samples the smooth part on half steps, (B or 1, 2*n_steps+1, p).
    ``du_steps`` is a zero-order-hold perturbation, (B, n_segments, p) with
    ``per`` steps per segment; every stage of a step uses the step's owning
    segment, matching the semantics of piecewise-constant control.
    """
    n_steps = (U_half.shape[1] - 1) // 2
    B = U_half.shape[0] if du_steps is None else du_steps.shape[0]
    m = np.broadcast_to(m0, (B, m0.size)).copy()
    out = np.empty((B, n_steps + 1, m0.size))
    out[:, 0] = m
    for i in range(n_steps):
        u0, um, u1 = U_half[:, 2 * i], U_half[:, 2 * i + 1], U_half[:, 2 * i + 2]
        if du_steps is not None:
            bump = eps * du_steps[:, i // per, :]
            u0, um, u1 = u0 + bump, um + bump, u1 + bump
        k1 = m @ L.T + u0 @ H.T
        k2 = (m + dt / 2 * k1) @ L.T + um @ H.T
        k3 = (m + dt / 2 * k2) @ L.T + um @ H.T
        k4 = (m + dt * k3) @ L.T + u1 @ H.T
        m = m + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[:, i + 1] = m
    return out


def tpbvp_optimality_gap(
    sys: LinearMomentSystem,
    ref: MomentReference,
    setup: LQSetup,
    result: TrackingResult,
    n_variations: int = 10,
    variation_intervals: int = 25,
    seed: int = 0,
    refine: int = 2,
) -> float:
    """Largest relative directional derivative of the cost over random
    endpoint-preserving control variations.

    The cost is quadratic in the control, so a central difference evaluates
    the directional derivative exactly up to roundoff.  Variations are
    projected onto the kernel of the discrete endpoint map; the derivative is
    normalized by the variation norm and the cost scale.  Verification runs
    at half the solver step to keep discretization bias below the threshold.
    """
    n = sys.q + 1
    dt_solver = float(result.times[1] - result.times[0])
    dt_v = dt_solver / 2
    horizon = float(result.times[-1] - result.times[0])
    n_steps = int(round(horizon / dt_v))

    # nominal control on the quarter grid of the solver (= half grid of dt_v)
    A = result.info["hamiltonian"]
    f_q = _tpbvp_forcing(ref, 2 * n_steps, dt_v / 2)
    z_fine = _rk4_affine(A, np.concatenate([setup.m_start, result.info["lambda0"]]),
                         f_q, dt_v / 2)
    u_nom = -0.5 * np.linalg.solve(setup.R, sys.H.T @ z_fine[:, n:].T).T  # (2*n_steps+1, p)
    m_ref = np.array([ref.value(result.times[0] + i * dt_v) for i in range(n_steps + 1)]).real

    per = n_steps // variation_intervals
    if per * variation_intervals != n_steps:
        raise ValueError("variation intervals must divide the verification grid")

    U0 = u_nom[None]

    def cost_of(du, eps):
        # every stage of a step uses the step's owning variation segment
        # (zero-order-hold semantics), and the energy integrand, which jumps
        # where the variation switches, is integrated segment by segment;
        # the tracking integrand is continuous and integrates globally
        B = du.shape[0]
        m = _rk4_moment_batch(sys.L, sys.H, setup.m_start, U0, dt_v,
                              du_steps=du, per=per, eps=eps)
        e = m - m_ref[None, :, :]
        track = np.trapezoid(np.einsum("bij,bij->bi", e, e), dx=dt_v, axis=1)
        energy = np.zeros(B)
        u_nodes = u_nom[::2]
        for s in range(variation_intervals):
            sl = slice(per * s, per * s + per + 1)
            useg = u_nodes[None, sl, :] + eps * du[:, s, :][:, None, :]
            integrand = np.einsum("bij,jk,bik->bi", useg, setup.R, useg)
            energy += np.trapezoid(integrand, dx=dt_v, axis=1)
        return track + energy

    # discrete endpoint map of the variation coordinates
    nv = variation_intervals * sys.p
    basis = np.zeros((nv, variation_intervals, sys.p))
    basis[np.arange(nv), np.arange(nv) // sys.p, np.arange(nv) % sys.p] = 1.0
    m_end0 = _rk4_moment_batch(sys.L, sys.H, setup.m_start, U0, dt_v)[0, -1]
    resp = _rk4_moment_batch(sys.L, sys.H, setup.m_start, U0, dt_v,
                             du_steps=basis, per=per, eps=1.0)[:, -1, :]
    E = (resp - m_end0).T  # (n, nv)

    rng = np.random.default_rng(seed)
    J0 = cost_of(np.zeros((1, variation_intervals, sys.p)), 0.0)[0]
    scale = max(1.0, abs(J0))
    worst = 0.0
    for _ in range(n_variations):
        v = rng.standard_normal(nv)
        # project onto ker E, with a refinement pass against roundoff
        for _ in range(refine + 1):
            v = v - E.T @ np.linalg.lstsq(E @ E.T, E @ v, rcond=None)[0]
        du = v.reshape(1, variation_intervals, sys.p)
        norm_du = float(np.sqrt(np.sum(du**2) * horizon / variation_intervals))
        gap = abs(cost_of(du, 1.0)[0] - cost_of(du, -1.0)[0]) / 2.0 / (norm_du * scale)
        worst = max(worst, float(gap))
    return worst


def _reference_table(ref: MomentReference, times: np.ndarray) -> np.ndarray:
    return np.array([ref.value(t) for t in times])


def direct_shooting(
    model,
    grid: ParameterGrid,
    x0,
    basis: str,
    q: int,
    ref: MomentReference,
    n_intervals: int = 50,
    energy_weight: float = 1e-3,
    iterations: int = 300,
    dt: float | None = None,
    initial_guess=None,
    fd_step: float = 1e-6,
    seed_step: float = 1.0,
) -> TrackingResult:
    """Moment tracking by gradient descent on a piecewise-constant control.

    The objective is the trapezoid quadrature of the moment-metric gap to the
    reference at the control-interval boundaries plus a quadratic energy
    term.  Gradients are forward differences (one batched ensemble simulation
    per control coordinate per iteration); steps use backtracking line search
    so the cost trace is monotone nonincreasing.  Returns the best iterate,
    flagged unconverged if the iteration budget ran out while descent was
    still succeeding.
    """
    horizon = float(ref.time_grid[-1] - ref.time_grid[0])
    if dt is None:
        dt = horizon / n_intervals / 10
    p = model.n_inputs
    x0 = np.asarray(x0, dtype=float)
    nodes_t = np.linspace(0.0, horizon, n_intervals + 1) + float(ref.time_grid[0])
    m_ref = _reference_table(ref, nodes_t)
    ks = np.arange(q + 1)
    wk = 2.0**-ks.astype(float)
    fourier = basis == FOURIER

    def batch_moments(states):
        # incremental powers / phase factors keep the temporaries at (B, S, n)
        B, S, _ = states.shape
        out = np.empty((B, S, q + 1), dtype=complex if fourier else float)
        with np.errstate(over="ignore", invalid="ignore"):
            if fourier:
                phase = np.exp(-1j * states)
                acc = np.ones_like(phase)
            else:
                acc = np.ones_like(states)
            out[:, :, 0] = acc @ grid.weights
            for k in range(1, q + 1):
                acc = acc * (phase if fourier else states)
                out[:, :, k] = acc @ grid.weights
        return out

    def cost_batch(U):
        states = _simulate_segments_batch(model, x0, grid, U, horizon, dt)
        mom = batch_moments(states)
        gaps = (wk[None, None, :] * np.abs(mom - m_ref[None, :, :])).sum(axis=2)
        track = np.trapezoid(gaps, dx=horizon / n_intervals, axis=1)
        energy = energy_weight * (U**2).sum(axis=(1, 2)) * (horizon / n_intervals)
        return track + energy, mom, gaps

    if initial_guess is None:
        u = np.zeros((n_intervals, p))
    else:
        u = np.array(initial_guess, dtype=float).reshape(n_intervals, p)

    J, mom, gaps = cost_batch(u[None])
    J = float(J[0])
    if not np.isfinite(J):
        raise SolverError("initial control produces a non-finite cost")
    history = [J]
    best = (J, u.copy())
    step = seed_step
    budget_exhausted = False
    nv = n_intervals * p
    rows = np.arange(nv)
    for it in range(iterations):
        U = np.tile(u[None], (nv + 1, 1, 1))
        U[rows + 1, rows // p, rows % p] += fd_step
        Js, _, _ = cost_batch(U)
        J = float(Js[0])
        g = (Js[1:] - J) / fd_step
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            break
        direction = -g.reshape(n_intervals, p)
        alpha, accepted = step, False
        for _ in range(40):
            try:
                Jn = float(cost_batch((u + alpha * direction)[None])[0][0])
            except SolverError:
                Jn = np.inf
            if np.isfinite(Jn) and Jn < J - 1e-4 * alpha * gnorm**2:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        u = u + alpha * direction
        J = Jn
        step = min(alpha * 2.0, 1e4)
        history.append(J)
        if J < best[0]:
            best = (J, u.copy())
        if it == iterations - 1:
            budget_exhausted = True

    J, u = best
    _, mom, gaps = cost_batch(u[None])
    control = ControlSignal(nodes_t, u)
    return TrackingResult(
        control,
        nodes_t,
        mom[0],
        gaps[0],
        float(J),
        converged=not budget_exhausted,
        info={"cost_history": np.array(history), "iterations": len(history) - 1},
    )


def tracking_cost(
    trace: MomentTrace,
    ref: MomentReference,
    metric: str = "d_M",
    control: ControlSignal | None = None,
    R=None,
    energy_weight: float = 0.0,
) -> float:
    """Trapezoid quadrature of the instantaneous tracking metric, plus an
    optional quadratic control-energy term for piecewise-constant controls."""
    times = trace.times
    if times.size != ref.time_grid.size or np.max(np.abs(times - ref.time_grid)) > 1e-9:
        raise ValueError("trace and reference time grids must coincide")
    gap_src = trace.values - ref.m_star
    if metric == "d_M":
        ks = np.arange(gap_src.shape[1], dtype=float)
        inst = (2.0**-ks[None, :] * np.abs(gap_src)).sum(axis=1)
    elif metric == "euclidean":
        inst = np.linalg.norm(gap_src, axis=1) ** 2
    else:
        raise ValueError(f"unknown metric {metric!r}")
    total = float(np.trapezoid(inst, times))
    if control is not None and energy_weight != 0.0:
        Rm = np.eye(control.n_inputs) if R is None else np.asarray(R, dtype=float)
        seg = control.horizon / control.values.shape[0]
        total += energy_weight * float(
            np.einsum("ij,jk,ik->", control.values, Rm, control.values) * seg
        )
    return total


def terminal_profile_guess(
    model: LinearScalar,
    grid: ParameterGrid,
    x0,
    target_profile,
    horizon: float,
    n_intervals: int,
    ridge: float = 1e-4,
) -> np.ndarray:
    """Initial control for shooting on the linear family: ridge fit of the
    closed-form terminal response to the desired final member profile.

    The final state is affine in the piecewise-constant control, with
    channel responses beta^(i-1) (e^{(T-a) beta} - e^{(T-b) beta}) / beta per
    interval [a, b]; fitting those responses to ``target - e^{T beta} x0``
    gives a moderate-energy control whose endpoint is already close.
    """
    beta = grid.nodes
    x0 = np.asarray(x0, dtype=float)
    target = np.asarray(target_profile, dtype=float)
    edges = np.linspace(0.0, horizon, n_intervals + 1)
    p = model.n_inputs
    cols = np.empty((beta.size, n_intervals * p))
    small = np.abs(beta) < 1e-12
    for s in range(n_intervals):
        a, b = edges[s], edges[s + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = (np.exp((horizon - a) * beta) - np.exp((horizon - b) * beta)) / beta
        seg[small] = b - a
        for i in range(p):
            cols[:, s * p + i] = beta**i * seg
    resid = target - np.exp(horizon * beta) * x0
    gram = cols.T @ cols + ridge * np.eye(n_intervals * p)
    return np.linalg.solve(gram, cols.T @ resid).reshape(n_intervals, p)
