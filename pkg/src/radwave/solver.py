"""Explicit leapfrog solver for the radial linear wave equation.

Solves (-d_t^2 + (1+g) Lap) u = F with g = g(t, r) and radial F.  For n = 3
the evolved variable is v = r u (Lap u = (1/r) d_r^2(r u)), so the update is
the plain 1D leapfrog with Dirichlet ends v(t, 0) = v(t, r_max) = 0.  For
n >= 5 the update acts on u directly with the even-symmetry origin closure
u_r(0) = 0, Lap u(0) = n u_rr(0), and a Dirichlet outer end.

Coefficients and forcings are evaluators (t, r_nodes) -> samples, entering
at the step center of the staggered velocity grid (2nd order for
time-dependent g).  The outer boundary is honest: the domain must be large
enough that no signal reaches it, and a guard aborts the run otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .grids import RadialGrid, RadialProfile, sphere_area
from .norms import (
    NormParams,
    SpaceTimeField,
    _check_span,
    _sup_l2,
    _weighted_spacetime_sq,
    sobolev_norm,
)

Evaluator = Callable[[float, NDArray[np.float64]], NDArray[np.float64]]

MAX_CFL = 0.9

# Relative amplitude at the outer guard band that counts as boundary contact.
BOUNDARY_GUARD_TOL = 1e-9


class BlowupSignal(RuntimeError):
    """Controlled abort of a run: a solution-driven guard tripped.

    Carried by lifespan experiments as a measurement, not an error.
    reason is one of "hyperbolicity", "cfl", "amplitude".
    """

    def __init__(self, reason: str, t: float, detail: str = ""):
        self.reason = reason
        self.t = t
        super().__init__(f"{reason} guard tripped at t={t:.6g}" + (f": {detail}" if detail else ""))


class FailureSnapshot(NamedTuple):
    """Raw levels at the failing step; arrays may hold non-finite samples."""

    t: float
    u_curr: NDArray[np.float64]
    u_prev: NDArray[np.float64]


class NumericalFailureError(RuntimeError):
    """Non-finite samples appeared in the update; carries the last state."""

    def __init__(self, t: float, state: "SolverState | FailureSnapshot | None" = None):
        self.t = t
        self.state = state
        super().__init__(f"non-finite update at t={t:.6g}")


class BoundaryContactError(RuntimeError):
    """Signal reached the outer Dirichlet boundary; enlarge r_max."""


def zero_evaluator(t: float, r: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.zeros_like(r)


def static_evaluator(profile: RadialProfile) -> Evaluator:
    """Freeze a radial profile into a time-independent evaluator."""
    vals = profile.values.copy()

    def evaluate(t: float, r: NDArray[np.float64]) -> NDArray[np.float64]:
        return vals

    return evaluate


def _hyperbolicity_guard(g_now: NDArray[np.float64], delta0: float, t: float) -> None:
    lo = float(np.min(1.0 + g_now))
    hi = float(np.max(1.0 + g_now))
    if lo < delta0 or hi > 1.0 / delta0:
        raise BlowupSignal(
            "hyperbolicity", t, f"1+g spans [{lo:.6g}, {hi:.6g}] vs ({delta0:.6g}, {1/delta0:.6g})"
        )


def _cfl_guard(dt: float, cfl: float, dr: float, g_now: NDArray[np.float64], t: float) -> None:
    limit = cfl * dr / float(np.sqrt(np.max(1.0 + g_now)))
    if dt > limit * (1.0 + 1e-12):
        raise BlowupSignal("cfl", t, f"dt={dt:.6g} exceeds {limit:.6g}")


def _acceleration(
    grid: RadialGrid,
    vals: NDArray[np.float64],
    g_now: NDArray[np.float64],
    f_now: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Right side of the second-order update; boundary rows pinned to zero.

    n = 3: vals holds v = r u and the row is (1+g) v_rr - r F.
    n >= 5: vals holds u and the row is (1+g) Lap u - F with the origin
    closure Lap u(0) = 2 n (u_1 - u_0) / dr^2.
    """
    dr = grid.spacing
    out = np.zeros_like(vals)
    if grid.n == 3:
        out[1:-1] = (1.0 + g_now[1:-1]) * (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / dr**2
        out[1:-1] -= grid.r[1:-1] * f_now[1:-1]
        return out
    r = grid.r
    lap = np.zeros_like(vals)
    lap[1:-1] = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / dr**2
    lap[1:-1] += (grid.n - 1) / r[1:-1] * (vals[2:] - vals[:-2]) / (2.0 * dr)
    lap[0] = 2.0 * grid.n * (vals[1] - vals[0]) / dr**2
    out[:-1] = (1.0 + g_now[:-1]) * lap[:-1] - f_now[:-1]
    return out


@dataclass(frozen=True)
class SolverState:
    """Two consecutive levels of the leapfrog plus its evaluators.

    u_curr and u_prev hold the evolved variable at t and t - dt: node values
    of v = r u for n = 3 (origin pinned to zero), u itself for n >= 5.
    """

    t: float
    u_curr: RadialProfile
    u_prev: RadialProfile
    coeff: Evaluator
    forcing: Evaluator
    dt: float
    cfl: float = MAX_CFL
    delta0: float = 0.25

    def __post_init__(self) -> None:
        if self.u_curr.grid != self.u_prev.grid:
            raise ValueError("state levels live on different grids")
        if not 0.0 < self.cfl <= MAX_CFL:
            raise ValueError(f"cfl must lie in (0, {MAX_CFL}], got {self.cfl}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.delta0 < 1.0:
            raise ValueError(f"delta0 must lie in (0, 1), got {self.delta0}")
        grid = self.u_curr.grid
        if grid.n == 3:
            if self.u_curr.values[0] != 0.0 or self.u_prev.values[0] != 0.0:
                raise ValueError("n = 3 state must pin v(t, 0) = 0")
        g_now = np.asarray(self.coeff(self.t, grid.r), dtype=np.float64)
        _hyperbolicity_guard(g_now, self.delta0, self.t)
        _cfl_guard(self.dt, self.cfl, grid.spacing, g_now, self.t)

    @property
    def grid(self) -> RadialGrid:
        return self.u_curr.grid


def step(state: SolverState) -> SolverState:
    """One leapfrog step; re-checks the hyperbolicity and CFL guards."""
    grid = state.grid
    r = grid.r
    g_now = np.asarray(state.coeff(state.t, r), dtype=np.float64)
    _hyperbolicity_guard(g_now, state.delta0, state.t)
    _cfl_guard(state.dt, state.cfl, grid.spacing, g_now, state.t)
    f_now = np.asarray(state.forcing(state.t, r), dtype=np.float64)
    acc = _acceleration(grid, state.u_curr.values, g_now, f_now)
    new = 2.0 * state.u_curr.values - state.u_prev.values + state.dt**2 * acc
    if not np.all(np.isfinite(new)):
        raise NumericalFailureError(state.t, state)
    return replace(
        state,
        t=state.t + state.dt,
        u_prev=state.u_curr,
        u_curr=RadialProfile(grid, new, flags=state.u_curr.flags),
    )


def support_radius(values: NDArray[np.float64], grid: RadialGrid,
                   rel_tol: float = 1e-7) -> float:
    """Largest radius whose sample exceeds rel_tol times the peak."""
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 0.0
    above = np.nonzero(np.abs(values) > rel_tol * peak)[0]
    return float(grid.r[above[-1]]) if above.size else 0.0


def _check_data_clear_of_boundary(u0: RadialProfile, u1: RadialProfile) -> None:
    peak = max(float(np.max(np.abs(u0.values))), float(np.max(np.abs(u1.values))), 1e-300)
    tail = max(float(np.max(np.abs(u0.values[-4:]))), float(np.max(np.abs(u1.values[-4:]))))
    if tail > BOUNDARY_GUARD_TOL * peak:
        raise BoundaryContactError(
            "initial data reaches the outer boundary; enlarge r_max"
        )


def _origin_extrapolate(row: NDArray[np.float64]) -> float:
    # even-symmetry 2nd-order value at r = 0 from the first two interior nodes
    return (4.0 * row[1] - row[2]) / 3.0


def solve_linear(
    data: tuple[RadialProfile, RadialProfile],
    coeff: Evaluator,
    forcing: Evaluator,
    T: float,
    *,
    cfl: float = MAX_CFL,
    delta0: float = 0.25,
    dt: float | None = None,
    store_stride: int = 1,
    boundary_guard: bool = True,
) -> SpaceTimeField:
    """Full trajectory of u on [0, T] with its time-derivative stack.

    The default step is cfl * dr * sqrt(delta0), the worst case the
    hyperbolicity window allows, so the CFL guard cannot trip while the
    coefficients stay inside it.  Stored slices land every store_stride
    steps; the t = 0 slice is the data itself and interior dt slices are
    centered differences at the fine step (more accurate than the stored
    cadence requires).
    """
    u0, u1 = data
    if u0.grid != u1.grid:
        raise ValueError("data profiles live on different grids")
    grid = u0.grid
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    if store_stride < 1:
        raise ValueError(f"store_stride must be >= 1, got {store_stride}")
    if boundary_guard:
        _check_data_clear_of_boundary(u0, u1)
    dr = grid.spacing
    if dt is None:
        dt = cfl * dr * np.sqrt(delta0)
    num_steps = max(int(np.ceil(T / dt - 1e-12)), 1)
    num_steps = store_stride * int(np.ceil(num_steps / store_stride))
    dt = T / num_steps
    r = grid.r

    if grid.n == 3:
        w = r * u0.values
        wdot = r * u1.values
    else:
        w = u0.values.copy()
        wdot = u1.values.copy()

    def to_u(row: NDArray[np.float64]) -> NDArray[np.float64]:
        if grid.n != 3:
            return row.copy()
        out = np.empty_like(row)
        out[1:] = row[1:] / r[1:]
        out[0] = _origin_extrapolate(out)
        return out

    num_stored = num_steps // store_stride + 1
    values = np.empty((num_stored, grid.num_points + 1))
    dt_values = np.empty_like(values)
    values[0] = u0.values
    dt_values[0] = u1.values

    guard_floor = max(float(np.max(np.abs(w))), float(np.max(np.abs(wdot))) * dt)
    g_now = np.asarray(coeff(0.0, r), dtype=np.float64)
    _hyperbolicity_guard(g_now, delta0, 0.0)
    _cfl_guard(dt, cfl, dr, g_now, 0.0)
    f_now = np.asarray(forcing(0.0, r), dtype=np.float64)
    w_prev = w
    w = w + dt * wdot + 0.5 * dt**2 * _acceleration(grid, w_prev, g_now, f_now)
    if grid.n == 3:
        w[0] = 0.0
    w[-1] = 0.0
    # virtual level -1 from time symmetry of the Taylor start; keeps the
    # backward dt difference second order even when num_steps == 1
    w_prev2 = w - 2.0 * dt * wdot

    stored = 1
    for m in range(1, num_steps + 1):
        t_m = m * dt
        if not np.all(np.isfinite(w)):
            raise NumericalFailureError(t_m, FailureSnapshot(t_m, w, w_prev))
        if boundary_guard:
            guard_floor = max(guard_floor, float(np.max(np.abs(w))))
            if float(np.max(np.abs(w[-4:-1]))) > BOUNDARY_GUARD_TOL * guard_floor:
                raise BoundaryContactError(
                    f"signal reached the outer boundary at t={t_m:.6g}; enlarge r_max"
                )
        if m < num_steps:
            g_now = np.asarray(coeff(t_m, r), dtype=np.float64)
            _hyperbolicity_guard(g_now, delta0, t_m)
            _cfl_guard(dt, cfl, dr, g_now, t_m)
            f_now = np.asarray(forcing(t_m, r), dtype=np.float64)
            w_next = 2.0 * w - w_prev + dt**2 * _acceleration(grid, w, g_now, f_now)
            if grid.n == 3:
                w_next[0] = 0.0
            w_next[-1] = 0.0
        else:
            w_next = None
        if m % store_stride == 0:
            values[stored] = to_u(w)
            if w_next is not None:
                dt_values[stored] = to_u((w_next - w_prev) / (2.0 * dt))
            else:
                dt_values[stored] = to_u((3.0 * w - 4.0 * w_prev + w_prev2) / (2.0 * dt))
            stored += 1
        if w_next is not None:
            w_prev2 = w_prev
            w_prev = w
            w = w_next
    times = np.linspace(0.0, T, num_stored)
    return SpaceTimeField(grid, times, values, dt_values)


# ---------------------------------------------------------------------------
# energy and local-energy diagnostics


class EnergyDriftReport(NamedTuple):
    """Scheme-energy conservation plus the growth-vs-majorant comparison.

    scheme_energies: the discrete invariant of the update at half steps
    (exactly conserved for static g on the n = 3 path, stride 1).
    energies / cumulative_bounds: physical energy E(t_m) against
    B(t_m) = int_0^{t_m} int (|F||u_t| + (|g_t| + |g_r|) e0) dx ds.  The
    comparison is integrated in time: pointwise dE/dt of a second-order
    trajectory is dominated by the O(dr^2)/dt discretization wiggle, while
    |E(t) - E(0)| <= C B(t) is the same statement without the noise.
    recorded_C: max |E(t) - E(0)| / B(t) over times where B has grown past
    1% of its final value (identically 0 when B stays 0).
    """

    times: NDArray[np.float64]
    scheme_energies: NDArray[np.float64]
    scheme_drift: float
    energies: NDArray[np.float64]
    cumulative_bounds: NDArray[np.float64]
    recorded_C: float

    def margin(self, C: float) -> float:
        """max over times of |E(t) - E(0)| - C B(t); <= 0 means the bound
        holds with constant C at this resolution."""
        growth = np.abs(self.energies - self.energies[0])
        return float(np.max(growth - C * self.cumulative_bounds))


def energy_drift_check(
    traj: SpaceTimeField,
    coeff: Evaluator,
    forcing: Evaluator = zero_evaluator,
) -> EnergyDriftReport:
    """Conservation and growth-bound report for a stored trajectory.

    The scheme invariant is meaningful at the solver's own cadence
    (store_stride 1); on coarser stores it degrades to the physical
    energy's O(dt^2) oscillation.  The continuum comparison constant is 1:
    dE/dt = int (g_t u_r^2 / 2 - g_r u_t u_r - F u_t) dx, each term
    majorized by the corresponding piece of the bound density.
    """
    grid = traj.grid
    n, dr, dt = grid.n, grid.spacing, traj.dt
    r = grid.r
    area = sphere_area(n)
    g_stack = np.stack([np.asarray(coeff(t, r), dtype=np.float64) for t in traj.times])
    f_stack = np.stack([np.asarray(forcing(t, r), dtype=np.float64) for t in traj.times])

    if n == 3:
        w = traj.values * r
        kin_weight = 1.0 + 0.5 * (g_stack[1:] + g_stack[:-1])
        dw = (w[1:] - w[:-1]) / dt
        kinetic = np.sum(dw**2 / kin_weight, axis=1) * dr
        faces = np.sum(np.diff(w[1:], axis=1) * np.diff(w[:-1], axis=1), axis=1) / dr
        scheme_energies = kinetic + faces
    else:
        ur = np.gradient(traj.values, dr, axis=1)
        dens = ((1.0 + g_stack) * ur**2 + traj.dt_values**2) / 2.0
        scheme_energies = np.trapezoid(dens * r ** (n - 1), dx=dr, axis=1) * area
    scale = float(np.max(np.abs(scheme_energies)))
    if scale == 0.0:
        scheme_drift = 0.0
    else:
        scheme_drift = float(
            (np.max(scheme_energies) - np.min(scheme_energies)) / scale
        )

    ur = np.gradient(traj.values, dr, axis=1)
    e0 = ((1.0 + g_stack) * ur**2 + traj.dt_values**2) / 2.0
    weights = r ** (n - 1)
    energies = area * np.trapezoid(e0 * weights, dx=dr, axis=1)
    g_t = np.gradient(g_stack, dt, axis=0) if len(traj.times) > 1 else np.zeros_like(g_stack)
    g_r = np.gradient(g_stack, dr, axis=1)
    density = np.abs(f_stack) * np.abs(traj.dt_values) + (np.abs(g_t) + np.abs(g_r)) * e0
    majorant = area * np.trapezoid(density * weights, dx=dr, axis=1)
    cumulative = np.concatenate(
        ([0.0], np.cumsum((majorant[1:] + majorant[:-1]) / 2.0 * dt))
    )
    growth = np.abs(energies - energies[0])
    active = cumulative > 0.01 * cumulative[-1] if cumulative[-1] > 0.0 else np.zeros(
        len(cumulative), dtype=bool
    )
    recorded_C = float(np.max(growth[active] / cumulative[active])) if np.any(active) else 0.0
    return EnergyDriftReport(
        traj.times, scheme_energies, scheme_drift, energies, cumulative, recorded_C
    )


def pa_tilde_stack(u: SpaceTimeField) -> list[NDArray[np.float64]]:
    """Component stacks of (u_t, u_r, u/r); the origin column of u/r is
    dropped (zero quadrature weight for n >= 3)."""
    over_r = np.zeros_like(u.values)
    over_r[:, 1:] = u.values[:, 1:] / u.grid.r[1:]
    return [u.dt_values, u.radial_derivative_stack(), over_r]


def pa_tilde_xt_norm(u: SpaceTimeField, p: NormParams) -> float:
    """X_T norm of the extended gradient (u_t, u_r, u/r)."""
    _check_span(u, p)
    stacks = pa_tilde_stack(u)
    sup_term = _sup_l2(u, stacks)
    bulk = _weighted_spacetime_sq(u, stacks, -(1.0 - p.mu), 0.0)
    return float(sup_term + p.T ** (-p.mu / 2.0) * np.sqrt(bulk))


def data_norm(u0: RadialProfile, u1: RadialProfile, theta: float = 0.0) -> float:
    """|| (grad u0, u1) ||_{H^theta homogeneous} via Plancherel."""
    return float(np.hypot(sobolev_norm(u0, theta + 1.0), sobolev_norm(u1, theta)))
