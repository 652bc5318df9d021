"""Normalized Ricci-flow potential equation and linear parabolic harness.

The background schedule interpolates between the initial Kahler form and
the negative of its Ricci form,

    omega_t = -Ric(omega_0) + e^{-t} (omega_0 + Ric(omega_0)),

so in radial densities relative to the unit model, S(t) = D0 + expm1(-t)
(D0 + R0) with D0 the initial density and R0 the Ricci density.  The
potential then evolves by

    du/dt = log((S(t) + Delta u) / D0) - u,      u(0) = 0,

where Delta u is the density contribution of the Hessian term, and is
stepped by backward Euler with an inner Newton solve (the log nonlinearity
is stiff near positivity loss; first-order accuracy in time suffices for
the fixed-point and boundary-constant checks this module exists for).
Boundary values at both ends follow the zero-dimensional restriction

    dv/dt = log(S(t, x_end) / D0(x_end)) - v,

integrated by the same backward-Euler rule so that spatially constant
initial data stays exactly spatially constant, with no artificial boundary
layer polluting the density extraction.

The deepest-boundary constant of the evolving metric relaxes as
c_t = 1 + e^{-t} (c_0 - 1); the driven cusp constant obeys dc/dt = 1 - c
with the same closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import SolverError
from .geometry import ModelMetric
from .radial import (
    RadialField,
    RadialGrid,
    laplacian_coefficients,
    solve_tridiagonal,
    unit_laplacian,
    unit_laplacian_interior,
)


# ---------------------------------------------------------------------------
# Cusp-constant ODE
# ---------------------------------------------------------------------------

def cusp_constant_evolution(c0: float, t: float) -> float:
    """Closed-form relaxation 1 + e^{-t} (c0 - 1) of dc/dt = 1 - c."""
    if c0 <= 0:
        raise ValueError(f"cusp constant must be positive, got {c0}")
    return 1.0 + math.exp(-t) * (c0 - 1.0)


def cusp_constant_rk4(c0: float, t: float, dt: float = 1e-3) -> float:
    """Generic RK4 integration of dc/dt = 1 - c, for cross-checking."""
    if c0 <= 0:
        raise ValueError(f"cusp constant must be positive, got {c0}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    steps = max(1, int(math.ceil(t / dt)))
    h = t / steps
    c = c0

    def f(value):
        return 1.0 - value

    for _ in range(steps):
        k1 = f(c)
        k2 = f(c + 0.5 * h * k1)
        k3 = f(c + 0.5 * h * k2)
        k4 = f(c + h * k3)
        c += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return c


# ---------------------------------------------------------------------------
# Zero-dimensional restricted ODE
# ---------------------------------------------------------------------------

@dataclass
class RestrictedOdeResult:
    times: np.ndarray
    quadrature: np.ndarray     # e^{-t} int_0^t e^s source(s) ds per time
    rk4: np.ndarray
    max_discrepancy: float

    def final(self) -> float:
        return float(self.quadrature[-1])


def _restricted_source(c_list: Sequence[float]) -> Callable[[float], float]:
    def source(s: float) -> float:
        return sum(math.log((1.0 + math.exp(-s) * (c - 1.0)) / c) for c in c_list)
    return source


def restricted_ode_solution(c_list: Sequence[float], T: float,
                            dt: float = 1e-3) -> RestrictedOdeResult:
    """du/dt = -u + sum_i log((1 + e^{-t}(c_i - 1)) / c_i), u(0) = 0.

    Solved two independent ways: adaptive quadrature of the
    variation-of-constants integral e^{-t} int_0^t e^s source(s) ds, and an
    RK4 trajectory with step dt.  The two act as mutual oracles; their
    maximum discrepancy over the sample times is reported.  As t -> infty
    the solution tends to -sum_i log c_i, the equilibrium of the source.
    """
    c_list = [float(c) for c in c_list]
    if any(c <= 0 for c in c_list):
        raise ValueError(f"all cusp constants must be positive, got {c_list}")
    if T < 0 or dt <= 0:
        raise ValueError(f"need T >= 0 and dt > 0, got T={T}, dt={dt}")
    source = _restricted_source(c_list)
    steps = max(1, int(math.ceil(T / dt)))
    h = T / steps
    times = np.linspace(0.0, T, steps + 1)

    rk4 = np.zeros(steps + 1)
    u = 0.0
    for m in range(steps):
        tm = times[m]

        def f(s, value):
            return -value + source(s)

        k1 = f(tm, u)
        k2 = f(tm + 0.5 * h, u + 0.5 * h * k1)
        k3 = f(tm + 0.5 * h, u + 0.5 * h * k2)
        k4 = f(tm + h, u + h * k3)
        u += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rk4[m + 1] = u

    quadrature = np.zeros(steps + 1)
    for m, tm in enumerate(times[1:], start=1):
        integral, _ = quad(lambda s: math.exp(s - tm) * source(s), 0.0, tm,
                           epsabs=1e-13, epsrel=1e-13, limit=300)
        quadrature[m] = integral

    max_disc = float(np.max(np.abs(quadrature - rk4)))
    return RestrictedOdeResult(times=times, quadrature=quadrature, rk4=rk4,
                               max_discrepancy=max_disc)


# ---------------------------------------------------------------------------
# Flow background schedule
# ---------------------------------------------------------------------------

def _schedule_data(omega0: ModelMetric, grid: RadialGrid):
    """D0 and the combination D0 + R0, the latter formed stably so that the
    unperturbed cusp gives exactly zero."""
    density = omega0.density(grid)
    phi = omega0.phi_values(grid)
    lap_phi = unit_laplacian(phi, grid.h)
    log_base = 0.5 * math.log(omega0.a * omega0.b)
    # D0 + R0 = sqrt(ab) e^{2 phi} - 1 - 2 Delta(phi), with the leading
    # cancellation done by expm1
    combo = np.expm1(2.0 * phi + log_base) - 2.0 * lap_phi
    return density, combo


def omega_t_schedule(omega0: ModelMetric, t: float,
                     grid: Optional[RadialGrid] = None) -> RadialField:
    """Density of the flow background at time t relative to the unit model.

    S(t) = D0 + expm1(-t) (D0 + R0); for the unperturbed cusp D0 + R0 = 0
    and the schedule is constant in t.  A schedule reaching zero anywhere
    means the background degenerates and is an error.
    """
    grid = omega0._resolve_grid(grid)
    density, combo = _schedule_data(omega0, grid)
    values = density + math.expm1(-t) * combo
    if np.any(values <= 0):
        j = int(np.argmax(values <= 0))
        raise SolverError(
            f"flow background degenerates at t={t:.6g}, node {j} "
            f"(x={grid.x[j]:.6g})")
    return RadialField(grid, values)


# ---------------------------------------------------------------------------
# Normalized flow for the potential
# ---------------------------------------------------------------------------

@dataclass
class FlowProblem:
    omega0: ModelMetric
    T: float
    dt: float
    grid: Optional[RadialGrid] = None
    output_times: Optional[Sequence[float]] = None
    dt_min_factor: float = 2.0 ** -10
    newton_tol: float = 1e-12
    newton_max_iter: int = 30

    def __post_init__(self):
        if self.dt <= 0 or self.T < self.dt:
            raise ValueError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        self.grid = self.omega0._resolve_grid(self.grid)


@dataclass
class FlowState:
    t: float
    u: RadialField
    omega_t_density: RadialField       # schedule S(t)
    flow_metric_density: RadialField   # S(t) + Delta u, the evolving metric
    positivity_margin: float           # min of the evolving density


@dataclass
class FlowResult:
    states: list[FlowState]
    times: np.ndarray
    sup_u: np.ndarray
    positivity_margin: np.ndarray
    newton_iterations: np.ndarray
    newton_residuals: np.ndarray       # accepted residual per recorded time
    boundary_values: np.ndarray        # left-end Dirichlet value per time
    step_rejections: int


def fitted_boundary_constant(state: FlowState, fraction: float = 0.1) -> float:
    """Average of the evolving metric density over the deepest nodes.

    The boundary constant is the x -> 0 limit of the density; averaging the
    deepest tenth of the grid suppresses the O(x) contamination.
    """
    sl = state.u.grid.deepest_indices(fraction)
    return float(np.mean(state.flow_metric_density.values[sl]))


def run_flow(problem: FlowProblem) -> FlowResult:
    """Backward-Euler integration of the normalized potential flow.

    Each step solves the implicit equation with an inner damped Newton
    iteration, maintains positivity of the evolving density S + Delta u,
    and falls back to halving the step on failure (an error below
    dt * dt_min_factor).  Boundary values at both ends follow the
    backward-Euler restriction of the flow to the endpoints.
    """
    grid = problem.grid
    n, h = grid.n_nodes, grid.h
    density, combo = _schedule_data(problem.omega0, grid)
    c_sub, c_diag, c_sup = laplacian_coefficients(h)
    dt_min = problem.dt * problem.dt_min_factor

    output_times = list(problem.output_times) if problem.output_times is not None else None

    def schedule_at(t: float) -> np.ndarray:
        values = density + math.expm1(-t) * combo
        if np.any(values <= 0):
            j = int(np.argmax(values <= 0))
            raise SolverError(
                f"flow background degenerates at t={t:.6g}, node {j} "
                f"(x={grid.x[j]:.6g})")
        return values

    def make_state(t: float, u: np.ndarray) -> FlowState:
        S = schedule_at(t)
        lap = unit_laplacian(u, h)
        evolving = S + lap
        return FlowState(
            t=t,
            u=RadialField(grid, u.copy()),
            omega_t_density=RadialField(grid, S),
            flow_metric_density=RadialField(grid, evolving),
            positivity_margin=float(np.min(evolving)),
        )

    u = np.zeros(n)
    bc = np.array([0.0, 0.0])
    t = 0.0
    states: list[FlowState] = []
    times = [0.0]
    sup_u = [0.0]
    margins = [make_state(0.0, u).positivity_margin]
    newton_iters = [0]
    newton_residuals = [0.0]
    bc_left_values = [0.0]
    rejections = 0

    def want_output(time: float) -> bool:
        if output_times is None:
            return True
        return any(abs(time - ot) <= 1e-9 * max(1.0, abs(ot)) for ot in output_times)

    if want_output(0.0):
        states.append(make_state(0.0, u))

    n_steps = int(round(problem.T / problem.dt))
    if abs(n_steps * problem.dt - problem.T) > 1e-9 * problem.T:
        n_steps = int(math.ceil(problem.T / problem.dt))
    dt_nominal = problem.T / n_steps

    for _ in range(n_steps):
        target = t + dt_nominal
        iters = 0
        res_accept = 0.0
        while t < target - 1e-12 * max(1.0, target):
            dt_loc = min(dt_nominal, target - t)
            while True:
                try:
                    u_new, bc_new, iters, res_accept = _flow_step(
                        u, bc, t, dt_loc, density, schedule_at,
                        (c_sub, c_diag, c_sup), problem)
                    break
                except SolverError:
                    rejections += 1
                    dt_loc /= 2.0
                    if dt_loc < dt_min:
                        raise
            u, bc = u_new, bc_new
            t += dt_loc
        t = target
        state = make_state(t, u)
        if state.positivity_margin <= 0:
            raise SolverError(
                f"Kahler positivity lost at t={t:.6g}: margin "
                f"{state.positivity_margin:.3e}")
        times.append(t)
        sup_u.append(float(np.max(np.abs(u))))
        margins.append(state.positivity_margin)
        newton_iters.append(iters)
        newton_residuals.append(res_accept)
        bc_left_values.append(float(bc[0]))
        if want_output(t):
            states.append(state)

    return FlowResult(
        states=states,
        times=np.asarray(times),
        sup_u=np.asarray(sup_u),
        positivity_margin=np.asarray(margins),
        newton_iterations=np.asarray(newton_iters),
        newton_residuals=np.asarray(newton_residuals),
        boundary_values=np.asarray(bc_left_values),
        step_rejections=rejections,
    )


def _flow_step(u, bc, t, dt, density, schedule_at,
               stencil, problem: FlowProblem):
    """One backward-Euler step of the potential flow; returns the new
    potential, new boundary pair, Newton iteration count and the accepted
    residual."""
    c_sub, c_diag, c_sup = stencil
    n = len(u)
    t_next = t + dt
    S_next = schedule_at(t_next)
    s_minus_d0 = S_next - density

    # backward-Euler update of the endpoint restriction
    bc_new = np.empty(2)
    for pos, j in ((0, 0), (1, n - 1)):
        src = math.log1p(s_minus_d0[j] / density[j])
        bc_new[pos] = (bc[pos] + dt * src) / (1.0 + dt)

    def residual(v: np.ndarray):
        lap = unit_laplacian_interior(v, problem.grid.h)
        r = np.empty(n)
        r[0] = v[0] - bc_new[0]
        r[-1] = v[-1] - bc_new[1]
        arg = S_next[1:-1] + lap[1:-1]
        if np.any(arg <= 0):
            return r, lap, False
        r[1:-1] = ((1.0 + dt) * v[1:-1] - u[1:-1]
                   - dt * np.log1p((s_minus_d0[1:-1] + lap[1:-1]) / density[1:-1]))
        return r, lap, True

    v = u.copy()
    r, lap, ok = residual(v)
    if not ok:
        raise SolverError(f"positivity violated at start of step t={t:.6g}")
    res_norm = float(np.max(np.abs(r)))
    iters = 0
    while res_norm > problem.newton_tol:
        iters += 1
        if iters > problem.newton_max_iter:
            raise SolverError(
                f"flow Newton failed at t={t_next:.6g}; residual {res_norm:.3e}")
        weight = dt / (S_next[1:-1] + lap[1:-1])
        sub = np.zeros(n)
        diag = np.ones(n)
        sup = np.zeros(n)
        sub[1:-1] = -weight * c_sub
        diag[1:-1] = (1.0 + dt) - weight * c_diag
        sup[1:-1] = -weight * c_sup
        step = solve_tridiagonal(sub, diag, sup, -r)
        s = 1.0
        while True:
            cand = v + s * step
            r_new, lap_new, ok = residual(cand)
            new_norm = float(np.max(np.abs(r_new))) if ok else np.inf
            if ok and new_norm <= (1.0 - 1e-4 * s) * res_norm:
                break
            s *= 0.5
            if s < 2.0 ** -30:
                raise SolverError(
                    f"flow Newton damping floor at t={t_next:.6g}; "
                    f"residual {res_norm:.3e}")
        v, r, lap, res_norm = cand, r_new, lap_new, new_norm
    return v, bc_new, iters, res_norm


# ---------------------------------------------------------------------------
# Linear parabolic decay certificate
# ---------------------------------------------------------------------------

@dataclass
class DecayCertificate:
    gamma: float
    times: np.ndarray
    slice_ratios: np.ndarray     # sup |u| / x^gamma per time slice
    sup_ratio: float
    K: float
    growth_rate: float           # fitted c in the bound K e^{c t}

    def bound_at(self, t: float) -> float:
        return self.K * math.exp(self.growth_rate * t)


def decay_certificate(grid: RadialGrid, gamma: float,
                      g: Callable[[np.ndarray, float], np.ndarray],
                      T: float, dt: float) -> DecayCertificate:
    """Empirical barrier bound for du/dt = Delta u - u + x^gamma g(x, t).

    Integrates the linear equation by backward Euler (banded solves, zero
    Dirichlet data, u(0) = 0) and reports, per time slice, the sup over
    interior nodes of |u| / x^gamma, together with fitted constants K and c
    such that every slice ratio is below K e^{c t}.
    """
    if gamma < 0:
        raise ValueError(f"decay weight gamma must be >= 0, got {gamma}")
    if dt <= 0 or T < dt:
        raise ValueError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    n, h = grid.n_nodes, grid.h
    x = grid.x
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * T:
        steps = int(math.ceil(T / dt))
    h_t = T / steps

    c_sub, c_diag, c_sup = laplacian_coefficients(h)
    sub = np.zeros(n)
    diag = np.ones(n)
    sup = np.zeros(n)
    sub[1:-1] = -h_t * c_sub
    diag[1:-1] = (1.0 + h_t) - h_t * c_diag
    sup[1:-1] = -h_t * c_sup

    u = np.zeros(n)
    times = np.linspace(0.0, T, steps + 1)
    ratios = np.zeros(steps + 1)
    weight = x[1:-1] ** gamma
    for m in range(1, steps + 1):
        tm = times[m]
        rhs = u + h_t * (x ** gamma) * np.asarray(g(x, tm), dtype=float)
        rhs[0] = 0.0
        rhs[-1] = 0.0
        u = solve_tridiagonal(sub, diag, sup, rhs)
        ratios[m] = float(np.max(np.abs(u[1:-1]) / weight))

    positive = ratios > 0
    if not np.any(positive):
        return DecayCertificate(gamma, times, ratios, 0.0, 0.0, 0.0)
    # fit c from the later half of the positive slices, then the smallest
    # K making K e^{c t} a true bound
    idx = np.where(positive)[0]
    tail = idx[idx >= idx[0] + (idx[-1] - idx[0]) // 2]
    if len(tail) >= 2:
        slope = _slope(times[tail], np.log(ratios[tail]))
        c_fit = max(0.0, float(slope))
    else:
        c_fit = 0.0
    K = float(np.max(ratios * np.exp(-c_fit * times)))
    return DecayCertificate(gamma, times, ratios, float(np.max(ratios)), K, c_fit)


def _slope(t: np.ndarray, y: np.ndarray) -> float:
    t_mean, y_mean = np.mean(t), np.mean(y)
    return float(np.sum((t - t_mean) * (y - y_mean)) / np.sum((t - t_mean) ** 2))
