"""Lifespan experiments, local-energy constant sweeps, and run persistence.

The nonlinear driver advances u_tt = (1 + g(u)) Lap u - F(u) with
F(u) = a(u) u_t^2 + b(u) u_r^2 by the same leapfrog family as the linear
solver: g(u) is refreshed from the current level every step and F(u) is
evaluated explicitly from the current and previous levels.  A run ends at
the first unhealthy level -- amplitude past u_clip, coefficient outside the
hyperbolicity window, or non-finite samples -- and the measured lifespan is
the last healthy time, confirmed by repeating the run on a grid ladder.

Two data families probe the two lifespan laws.  Fixing the shape and
sweeping the amplitude probes the almost-global regime, ln T* ~ c / eps.
Fixing the amplitude and concentrating the shape spatially rides the
invariance scaling u(t, x) -> u(lam t, lam x) of the equation, under which
the reachable lifespan obeys the power law T* ~ eps^{-1/(s - n/2)} in the
data size eps = ||(grad u0, u1)||_{H^{s-1} homogeneous}.

Run persistence is content-addressed: a run directory is named by the hash
of its resolved configuration, every metric key is prefixed by the kind of
the artifact it was read from, and delimited output formats floats with
repr so two runs of one config are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from .calculus import fractional_derivative, spectral_radial_derivative
from .grids import RadialGrid, RadialProfile
from .iteration import NonlinearitySpec, ScalarFunction
from .norms import NormParams, SpaceTimeField, _check_span, _weighted_slices, xt_dual_norm
from .solver import (
    BOUNDARY_GUARD_TOL,
    MAX_CFL,
    Evaluator,
    _acceleration,
    _origin_extrapolate,
    data_norm,
    pa_tilde_xt_norm,
    solve_linear,
    zero_evaluator,
)

WORKER_ENV = "RADWAVE_WORKERS"

# relative t_star change under grid halving a reading may show and still
# count as refinement-stable
CONFIRM_GAP = 0.05

# smallest confirmed sample a law fit accepts
MIN_CONFIRMED = 5

STATUSES = ("censored", "amplitude", "hyperbolicity", "nan")


def worker_count() -> int:
    """Sweep worker-pool size from the environment (default 1, serial)."""
    raw = os.environ.get(WORKER_ENV, "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKER_ENV} must be an integer, got {raw!r}") from exc
    return max(1, count)


# ---------------------------------------------------------------------------
# data shapes and catalogued models


@dataclass(frozen=True)
class GaussianPulse:
    """Mirrored-Gaussian data pair, even in the signed radius.

    B(r) = exp(-((r - c)/w)^2) + exp(-((r + c)/w)^2) and the pair is
    (u0, u1) = (u0_amp B, u1_amp B).  scale = lam concentrates the pair to
    spatial extent 1/lam while multiplying u1 by lam, the t = 0 trace of the
    invariance scaling u(t, x) -> u(lam t, lam x); the shape itself carries
    no overall amplitude, callers scale by eps.
    """

    center: float = 0.0
    width: float = 1.0
    u0_amp: float = 0.0
    u1_amp: float = 1.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.width > 0.0:
            raise ValueError(f"width must be positive, got {self.width}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def __call__(
        self, r: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        rr = self.scale * np.asarray(r, dtype=np.float64)
        bump = np.exp(-(((rr - self.center) / self.width) ** 2))
        bump = bump + np.exp(-(((rr + self.center) / self.width) ** 2))
        return self.u0_amp * bump, self.scale * self.u1_amp * bump


DataShape = Callable[[NDArray[np.float64]], tuple[NDArray[np.float64], NDArray[np.float64]]]


def sample_data(
    shape: DataShape, eps: float, grid: RadialGrid
) -> tuple[RadialProfile, RadialProfile]:
    """Evaluate a shape on the grid and scale both components by eps."""
    u0v, u1v = shape(grid.r)
    u0 = RadialProfile(grid, eps * np.asarray(u0v, dtype=np.float64))
    u1 = RadialProfile(grid, eps * np.asarray(u1v, dtype=np.float64))
    return u0, u1


def data_size(shape: DataShape, eps: float, grid: RadialGrid, s: float) -> float:
    """eps_s = ||(grad u0, u1)||_{H^{s-1} homogeneous}, the sweep abscissa."""
    u0, u1 = sample_data(shape, eps, grid)
    return data_norm(u0, u1, s - 1.0)


def utt_square_model() -> NonlinearitySpec:
    """u_tt = Lap u + u_t^2; under the forcing sign convention a = -1."""
    return NonlinearitySpec(a=ScalarFunction("const", (-1.0,)))


def quasilinear_model(kappa: float, a_coeff: float = -1.0) -> NonlinearitySpec:
    """u_tt = (1 + kappa u) Lap u - a_coeff u_t^2."""
    return NonlinearitySpec(
        g=ScalarFunction("linear", (kappa,)), a=ScalarFunction("const", (a_coeff,))
    )


def _check_compact_support(u0: RadialProfile, u1: RadialProfile) -> None:
    peak = max(float(np.max(np.abs(u0.values))), float(np.max(np.abs(u1.values))), 1e-300)
    tail = max(float(np.max(np.abs(u0.values[-4:]))), float(np.max(np.abs(u1.values[-4:]))))
    if tail > BOUNDARY_GUARD_TOL * peak:
        raise ValueError("data must be compactly supported well inside the grid")


# ---------------------------------------------------------------------------
# self-consistent nonlinear runs


class NonlinearOutcome(NamedTuple):
    """End state of one nonlinear run.

    status is "censored" when every level up to t_cap stayed healthy, else
    the first failed check; t_star is the last healthy time (== t_cap when
    censored).  sup_values traces sup_r |u| over the healthy levels, and
    boundary_contact records whether the signal reached the outer nodes, a
    hint that reflections may contaminate late times.
    """

    status: str
    t_star: float
    steps: int
    sup_times: NDArray[np.float64]
    sup_values: NDArray[np.float64]
    boundary_contact: bool


def run_nonlinear(
    data: tuple[RadialProfile, RadialProfile],
    nl: NonlinearitySpec,
    *,
    t_cap: float = 1000.0,
    u_clip: float = 100.0,
    delta0: float = 0.25,
    cfl: float = MAX_CFL,
    dt: float | None = None,
) -> NonlinearOutcome:
    """Advance the quasilinear equation until t_cap or the first blowup signal.

    Each step rebuilds g(u) from the current level for the principal part and
    the explicit forcing F(u) = a(u) u_t^2 + b(u) u_r^2 with u_t from the
    second-order backward difference of the current and previous levels.  The
    default step cfl * dr * sqrt(delta0) keeps the CFL bound valid across the
    whole hyperbolicity window, so the run can only end by amplitude,
    hyperbolicity exit, non-finite samples, or the time cap.
    """
    u0, u1 = data
    if u0.grid != u1.grid:
        raise ValueError("data profiles live on different grids")
    grid = u0.grid
    if not t_cap > 0.0:
        raise ValueError(f"t_cap must be positive, got {t_cap}")
    if not u_clip > 0.0:
        raise ValueError(f"u_clip must be positive, got {u_clip}")
    if not 0.0 < delta0 < 1.0:
        raise ValueError(f"delta0 must lie in (0, 1), got {delta0}")
    _check_compact_support(u0, u1)
    nl.validate_on(u_clip)
    dr = grid.spacing
    r = grid.r
    dt_max = cfl * dr * float(np.sqrt(delta0))
    if dt is None:
        dt = dt_max
    elif not 0.0 < dt <= dt_max * (1.0 + 1e-12):
        raise ValueError(
            f"dt must lie in (0, {dt_max:.6g}] to honor the CFL bound "
            "over the hyperbolicity window"
        )

    if grid.n == 3:
        w = r * u0.values
        wdot = r * u1.values
    else:
        w = u0.values.copy()
        wdot = u1.values.copy()

    def to_u(row: NDArray[np.float64]) -> NDArray[np.float64]:
        if grid.n != 3:
            return row
        out = np.empty_like(row)
        out[1:] = row[1:] / r[1:]
        out[0] = _origin_extrapolate(out)
        return out

    num_cap = int(np.ceil(t_cap / dt - 1e-12))
    sup_t: list[float] = []
    sup_v: list[float] = []
    boundary_contact = False
    guard_floor = max(float(np.max(np.abs(w))), float(np.max(np.abs(wdot))) * dt, 1e-300)
    w_prev = w
    w_prev2 = w
    t_star = 0.0
    status = "censored"
    m = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        while True:
            t_m = m * dt
            if not np.all(np.isfinite(w)):
                status = "nan"
                break
            u_now = to_u(w)
            sup_u = float(np.max(np.abs(u_now)))
            if sup_u > u_clip:
                status = "amplitude"
                break
            g_now = nl.g(u_now)
            lo = float(np.min(1.0 + g_now))
            hi = float(np.max(1.0 + g_now))
            if lo < delta0 or hi > 1.0 / delta0:
                status = "hyperbolicity"
                break
            t_star = t_m
            sup_t.append(t_m)
            sup_v.append(sup_u)
            guard_floor = max(guard_floor, float(np.max(np.abs(w))))
            if not boundary_contact and float(np.max(np.abs(w[-4:-1]))) > (
                BOUNDARY_GUARD_TOL * guard_floor
            ):
                boundary_contact = True
            if m >= num_cap:
                status = "censored"
                t_star = t_cap
                break
            if m == 0:
                ut = u1.values
            else:
                ut = to_u((3.0 * w - 4.0 * w_prev + w_prev2) / (2.0 * dt))
            ur = np.gradient(u_now, dr)
            f_now = nl.forcing_stack(u_now, ut, ur)
            acc = _acceleration(grid, w, g_now, f_now)
            if m == 0:
                w_new = w + dt * wdot + 0.5 * dt**2 * acc
            else:
                w_new = 2.0 * w - w_prev + dt**2 * acc
            if grid.n == 3:
                w_new[0] = 0.0
            w_new[-1] = 0.0
            if m == 0:
                w_prev = w
                w = w_new
                # virtual level -1 from time symmetry of the Taylor start
                w_prev2 = w - 2.0 * dt * wdot
            else:
                w_prev2 = w_prev
                w_prev = w
                w = w_new
            m += 1
    return NonlinearOutcome(
        status,
        float(t_star),
        m,
        np.asarray(sup_t, dtype=np.float64),
        np.asarray(sup_v, dtype=np.float64),
        boundary_contact,
    )


# ---------------------------------------------------------------------------
# lifespan measurement and sweeps


@dataclass(frozen=True)
class LifespanMeasurement:
    """One refinement-checked lifespan reading at data amplitude eps.

    ladder holds (num_points, t_star, status) per rung, coarse to fine; the
    reading itself comes from the finest rung and refinement_gap compares
    the last two.  confirmed requires a finite reading with gap <= 5%.
    """

    eps: float
    t_star: float
    confirmed: bool
    refinement_gap: float
    status: str
    ladder: tuple[tuple[int, float, str], ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")
        if self.confirmed and not self.refinement_gap <= CONFIRM_GAP:
            raise ValueError(
                f"confirmed requires refinement_gap <= {CONFIRM_GAP}, "
                f"got {self.refinement_gap}"
            )
        if self.confirmed and self.status == "censored":
            raise ValueError("a right-censored reading cannot be confirmed")

    @property
    def censored(self) -> bool:
        return self.status == "censored"


def measure_lifespan(
    shape: DataShape,
    eps: float,
    nl: NonlinearitySpec,
    grids: Sequence[RadialGrid],
    *,
    t_cap: float = 1000.0,
    u_clip: float = 100.0,
    delta0: float = 0.25,
    cfl: float = MAX_CFL,
) -> LifespanMeasurement:
    """Run the nonlinear solve on a coarse-to-fine grid ladder at one eps.

    The data must be compactly supported inside every grid; a trivial
    nonlinearity simply runs to t_cap and comes back right-censored.  The
    reading is confirmed when the finest two rungs agree on the outcome and
    their lifespans differ by at most 5%.
    """
    rungs = []
    notes: list[str] = []
    ladder = tuple(grids)
    if not ladder:
        raise ValueError("need at least one grid in the ladder")
    points = [g.num_points for g in ladder]
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValueError(f"ladder must refine coarse to fine, got {points}")
    for grid in ladder:
        data = sample_data(shape, eps, grid)
        out = run_nonlinear(
            data, nl, t_cap=t_cap, u_clip=u_clip, delta0=delta0, cfl=cfl
        )
        rungs.append((grid.num_points, out.t_star, out.status))
        if out.boundary_contact:
            notes.append(f"boundary contact on the {grid.num_points}-point grid")
    status = rungs[-1][2]
    t_star = rungs[-1][1]
    if len(rungs) >= 2:
        prev_t, prev_s = rungs[-2][1], rungs[-2][2]
        if prev_s != status:
            gap = float("inf")
            notes.append("ladder rungs disagree on the outcome")
        elif status == "censored":
            gap = 0.0
        elif t_star > 0.0:
            gap = abs(prev_t - t_star) / t_star
        else:
            gap = 0.0 if prev_t == 0.0 else float("inf")
    else:
        gap = float("inf")
        notes.append("single-rung ladder cannot confirm")
    if status == "censored":
        notes.append(f"right-censored at t_cap={t_cap:g}")
    confirmed = status != "censored" and t_star > 0.0 and gap <= CONFIRM_GAP
    return LifespanMeasurement(
        float(eps), float(t_star), confirmed, float(gap), status,
        tuple(rungs), tuple(notes),
    )


def _sweep_point(args) -> LifespanMeasurement:
    shape, eps, nl, ladder, kwargs = args
    return measure_lifespan(shape, eps, nl, ladder, **kwargs)


def lifespan_sweep(
    shape: DataShape,
    eps_list: Sequence[float],
    nl: NonlinearitySpec,
    grids: Sequence[RadialGrid],
    *,
    t_cap: float = 1000.0,
    u_clip: float = 100.0,
    delta0: float = 0.25,
    cfl: float = MAX_CFL,
) -> list[LifespanMeasurement]:
    """measure_lifespan at every eps, merged in sweep order.

    RADWAVE_WORKERS > 1 fans the points over a process pool; each worker owns
    its own solver state and the results keep the sweep index order.
    """
    kwargs = dict(t_cap=t_cap, u_clip=u_clip, delta0=delta0, cfl=cfl)
    points = [(shape, float(e), nl, tuple(grids), kwargs) for e in eps_list]
    workers = worker_count()
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            return list(pool.map(_sweep_point, points))
    return [_sweep_point(p) for p in points]


def concentration_sweep(
    base: GaussianPulse,
    scales: Sequence[float],
    eps: float,
    nl: NonlinearitySpec,
    grids: Sequence[RadialGrid],
    *,
    s: float = 1.8,
    t_cap: float = 1000.0,
    u_clip: float = 100.0,
    delta0: float = 0.25,
    cfl: float = MAX_CFL,
) -> list[LifespanMeasurement]:
    """Fixed-amplitude sweep over spatial concentration scales.

    Each point re-labels its measurement by the measured data size
    eps_s = ||(grad u0, u1)||_{H^{s-1}} on the finest grid, the abscissa the
    power law T* ~ eps_s^{-1/(s - n/2)} is stated in.
    """
    out = []
    fine = tuple(grids)[-1]
    for lam in scales:
        shape = GaussianPulse(
            base.center, base.width, base.u0_amp, base.u1_amp, scale=float(lam)
        )
        m = measure_lifespan(
            shape, eps, nl, grids, t_cap=t_cap, u_clip=u_clip, delta0=delta0, cfl=cfl
        )
        size = data_size(shape, eps, fine, s)
        out.append(
            LifespanMeasurement(
                size, m.t_star, m.confirmed, m.refinement_gap, m.status,
                m.ladder, m.notes + (f"scale={float(lam)!r}",),
            )
        )
    return out


# ---------------------------------------------------------------------------
# law fits


class LawFit(NamedTuple):
    """Least-squares line y = slope x + intercept with its R^2."""

    slope: float
    intercept: float
    r_squared: float


def _line_fit(x: NDArray[np.float64], y: NDArray[np.float64]) -> LawFit:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return LawFit(float(slope), float(intercept), float(r2))


@dataclass(frozen=True)
class SweepFitReport:
    """Both lifespan-law fits over the confirmed part of a sweep.

    exponential fits ln T* against 1/eps, power fits ln T* against ln eps;
    the power-law exponent p of T* ~ eps^{-p} is -power.slope.  When fewer
    than MIN_CONFIRMED points survive, both fits are absent and error says
    why; excluded lists (eps, reason) per dropped point.
    """

    exponential: LawFit | None
    power: LawFit | None
    used: tuple[float, ...]
    excluded: tuple[tuple[float, str], ...]
    error: str | None = None

    @property
    def power_exponent(self) -> float:
        if self.power is None:
            raise ValueError("no power-law fit available")
        return -self.power.slope

    @property
    def preferred(self) -> str | None:
        if self.exponential is None or self.power is None:
            return None
        if self.exponential.r_squared >= self.power.r_squared:
            return "exponential"
        return "power"


def lifespan_sweep_fit(measurements: Sequence[LifespanMeasurement]) -> SweepFitReport:
    """Fit both candidate laws to the confirmed measurements of a sweep.

    Censored and refinement-unstable points are excluded with a note; with
    fewer than MIN_CONFIRMED survivors the report carries an error and no
    fit rather than an unsupported line.
    """
    used: list[LifespanMeasurement] = []
    excluded: list[tuple[float, str]] = []
    for meas in measurements:
        if meas.confirmed:
            used.append(meas)
        elif meas.censored:
            excluded.append((meas.eps, "right-censored"))
        else:
            excluded.append(
                (meas.eps, f"unconfirmed: refinement gap {meas.refinement_gap:.3g}")
            )
    eps = tuple(m.eps for m in used)
    if len(used) < MIN_CONFIRMED:
        return SweepFitReport(
            None, None, eps, tuple(excluded),
            error=f"need >= {MIN_CONFIRMED} confirmed measurements, have {len(used)}",
        )
    x = np.array([m.eps for m in used])
    y = np.log(np.array([m.t_star for m in used]))
    return SweepFitReport(
        _line_fit(1.0 / x, y), _line_fit(np.log(x), y), eps, tuple(excluded)
    )


# ---------------------------------------------------------------------------
# local-energy constant sweep


@dataclass(frozen=True)
class CoefficientCase:
    """Named coefficient/forcing pair for the constant sweep.

    Evaluators follow the solver contract (t, r array) -> values and must be
    samplable at arbitrary probe times for the smallness check.
    """

    label: str
    coeff: Evaluator = zero_evaluator
    forcing: Evaluator = zero_evaluator


def coefficient_smallness(
    case: CoefficientCase, grid: RadialGrid, T: float, mu: float, probes: int = 33
) -> float:
    """T^mu sup |r^{1-mu} (g_t, g_r)| sampled on a probes-by-grid lattice."""
    times = np.linspace(0.0, T, probes)
    g = np.stack([np.asarray(case.coeff(t, grid.r), dtype=np.float64) for t in times])
    g_t = np.gradient(g, times[1] - times[0], axis=0)
    g_r = np.gradient(g, grid.spacing, axis=1)
    weight = grid.r ** (1.0 - mu)
    return float(T**mu * np.max(weight * np.hypot(g_t, g_r)))


def _stack_xt_norm(
    grid: RadialGrid,
    times: NDArray[np.float64],
    stacks: list[NDArray[np.float64]],
    p: NormParams,
) -> float:
    per_sup = np.zeros(len(times))
    per_bulk = np.zeros(len(times))
    for st in stacks:
        per_sup += _weighted_slices(grid, st, 0.0, 0.0)
        per_bulk += _weighted_slices(grid, st, -(1.0 - p.mu), 0.0)
    sup_term = float(np.sqrt(np.max(per_sup)))
    bulk = float(np.trapezoid(per_bulk, times))
    return sup_term + p.T ** (-p.mu / 2.0) * float(np.sqrt(bulk))


def pa_tilde_theta_norm(u: SpaceTimeField, p: NormParams, theta: float) -> float:
    """X_T norm of the extended gradient (d_t, d_r, 1/r) of D^theta u."""
    if theta == 0.0:
        return pa_tilde_xt_norm(u, p)
    _check_span(u, p)
    vals = np.empty_like(u.values)
    dts = np.empty_like(u.dt_values)
    ur = np.empty_like(u.values)
    for m in range(len(u.times)):
        vals[m] = fractional_derivative(u.profile(m), theta).values
        dts[m] = fractional_derivative(u.dt_profile(m), theta).values
        ur[m] = spectral_radial_derivative(RadialProfile(u.grid, vals[m])).values
    over_r = np.zeros_like(vals)
    over_r[:, 1:] = vals[:, 1:] / u.grid.r[1:]
    return _stack_xt_norm(u.grid, u.times, [dts, ur, over_r], p)


def _theta_field(F: SpaceTimeField, theta: float) -> SpaceTimeField:
    if theta == 0.0:
        return F
    vals = np.empty_like(F.values)
    for m in range(len(F.times)):
        vals[m] = fractional_derivative(F.profile(m), theta).values
    dts = np.gradient(vals, F.dt, axis=0)
    return SpaceTimeField(F.grid, F.times, vals, dts)


class KssRow(NamedTuple):
    """One empirical local-energy ratio."""

    data_index: int
    label: str
    T: float
    theta: float
    numerator: float
    denominator: float
    ratio: float


@dataclass(frozen=True)
class KssTable:
    """Ratio table of a constant sweep with its skip/drop bookkeeping.

    skipped lists (label, T, note) for coefficient/horizon pairs that failed
    the smallness precondition; excluded_zero counts dropped 0/0 rows.
    """

    mu: float
    thetas: tuple[float, ...]
    rows: tuple[KssRow, ...]
    skipped: tuple[tuple[str, float, str], ...]
    excluded_zero: int

    def ratios_at(self, theta: float) -> list[float]:
        return [row.ratio for row in self.rows if row.theta == theta]

    def max_per_theta(self) -> dict[float, float]:
        out: dict[float, float] = {}
        for row in self.rows:
            out[row.theta] = max(out.get(row.theta, 0.0), row.ratio)
        return out

    def spread(self, theta: float) -> float:
        """max/min ratio at one theta; inf when any denominator vanished."""
        vals = self.ratios_at(theta)
        if not vals:
            raise ValueError(f"no rows at theta={theta}")
        lo = min(vals)
        return float("inf") if lo == 0.0 else max(vals) / lo

    def write_csv(self, path: str) -> None:
        header = ("data_index", "label", "T", "theta", "numerator", "denominator", "ratio")
        write_table(path, header, [tuple(row) for row in self.rows])


def kss_constant_sweep(
    data_family: Sequence[tuple[RadialProfile, RadialProfile]],
    cases: Sequence[CoefficientCase],
    T_list: Sequence[float],
    mu: float,
    *,
    thetas: Sequence[float] = (0.0, 0.5, 1.0),
    delta2: float = 0.5,
    delta0: float = 0.25,
    cfl: float = MAX_CFL,
) -> KssTable:
    """Empirical constants of the weighted space-time estimate.

    For every data pair, coefficient case, horizon, and theta the table rows
    hold ||(d_t, d_r, 1/r) D^theta u||_{X_T} over
    ||data||_{H^theta} + ||D^theta F||_{X_T^* upper}.  Pairs (case, T) whose
    coefficient violates T^mu ||r^{1-mu} dg||_inf <= delta2 are skipped with
    a note; 0/0 rows (zero data and forcing) are dropped.
    """
    p0 = NormParams(mu=mu)
    thetas = tuple(float(t) for t in thetas)
    if any(not 0.0 <= t <= 1.0 for t in thetas):
        raise ValueError(f"theta grid must sit inside [0, 1], got {thetas}")
    if not data_family:
        raise ValueError("need at least one data pair")
    grid = data_family[0][0].grid
    for u0, u1 in data_family:
        if u0.grid != grid or u1.grid != grid:
            raise ValueError("data family must share one grid")
    horizons = sorted(float(T) for T in T_list)
    if not horizons or horizons[0] <= 0.0:
        raise ValueError(f"horizons must be positive, got {T_list}")

    admissible: dict[str, list[float]] = {}
    skipped: list[tuple[str, float, str]] = []
    for case in cases:
        keep = []
        for T in horizons:
            small = coefficient_smallness(case, grid, T, p0.mu)
            if small <= delta2:
                keep.append(T)
            else:
                skipped.append(
                    (case.label, T, f"smallness {small:.3g} > delta2 {delta2:.3g}")
                )
        admissible[case.label] = keep

    rows: list[KssRow] = []
    excluded_zero = 0
    for idx, (u0, u1) in enumerate(data_family):
        for case in cases:
            horizons_ok = admissible[case.label]
            if not horizons_ok:
                continue
            T_top = horizons_ok[-1]
            traj = solve_linear(
                (u0, u1), case.coeff, case.forcing, T_top, cfl=cfl, delta0=delta0
            )
            f_stack = np.stack(
                [np.asarray(case.forcing(t, grid.r), dtype=np.float64) for t in traj.times]
            )
            has_forcing = bool(np.any(f_stack))
            for T in horizons_ok:
                sub = traj if T == T_top else traj.restricted(T)
                p = NormParams(mu=p0.mu, T=sub.span)
                if has_forcing:
                    fsub = f_stack[: len(sub.times)]
                    F_field = SpaceTimeField(
                        grid, sub.times, fsub, np.gradient(fsub, sub.dt, axis=0)
                    )
                for theta in thetas:
                    num = pa_tilde_theta_norm(sub, p, theta)
                    denom = data_norm(u0, u1, theta)
                    if has_forcing:
                        denom += xt_dual_norm(_theta_field(F_field, theta), p)
                    if num == 0.0 and denom == 0.0:
                        excluded_zero += 1
                        continue
                    ratio = num / denom if denom > 0.0 else float("inf")
                    rows.append(
                        KssRow(idx, case.label, T, theta, num, denom, float(ratio))
                    )
    return KssTable(p0.mu, thetas, tuple(rows), tuple(skipped), excluded_zero)


# ---------------------------------------------------------------------------
# run records


Config = dict[str, dict[str, str]]


def canonical_config(config: Config) -> str:
    """Sorted text rendering of a sectioned config; what run_id hashes."""
    lines = []
    for section in sorted(config):
        lines.append(f"[{section}]")
        entries = config[section]
        for key in sorted(entries):
            lines.append(f"{key} = {entries[key]}")
        lines.append("")
    return "\n".join(lines)


def config_hash(config: Config) -> str:
    return hashlib.sha256(canonical_config(config).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RunRecord:
    """Persisted description of one run.

    run_id is the content hash of the resolved config, so identical configs
    collide on purpose.  Every metric key reads "<kind>.<name>" where <kind>
    names one of the outputs; the constructor rejects orphaned metrics.
    """

    run_id: str
    config: Config
    outputs: tuple[tuple[str, str], ...]
    metrics: dict[str, float]
    created: str

    def __post_init__(self) -> None:
        expected = config_hash(self.config)
        if self.run_id != expected:
            raise ValueError(
                f"run_id {self.run_id!r} does not match the config hash {expected!r}"
            )
        kinds = {kind for kind, _ in self.outputs}
        for key in self.metrics:
            if key.split(".", 1)[0] not in kinds:
                raise ValueError(
                    f"metric {key!r} is not traceable to an output kind; "
                    f"have {sorted(kinds)}"
                )


def make_record(
    config: Config,
    outputs: Sequence[tuple[str, str]],
    metrics: dict[str, float],
) -> RunRecord:
    created = datetime.now(timezone.utc).isoformat()
    outs = tuple((str(kind), str(path)) for kind, path in outputs)
    return RunRecord(config_hash(config), config, outs, dict(metrics), created)


def store_record(record: RunRecord, path: str) -> None:
    doc = {
        "run_id": record.run_id,
        "config": record.config,
        "outputs": [list(pair) for pair in record.outputs],
        "metrics": record.metrics,
        "created": record.created,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_record(path: str) -> RunRecord:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    return RunRecord(
        doc["run_id"],
        doc["config"],
        tuple((kind, p) for kind, p in doc["outputs"]),
        doc["metrics"],
        doc["created"],
    )


# ---------------------------------------------------------------------------
# deterministic tables


def format_cell(value) -> str:
    """repr for floats (shortest round-trip text), str otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_table(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Delimited output with repr-formatted floats; bytes depend only on rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(cell) for cell in row) + "\n")


def measurements_table(
    path: str, measurements: Sequence[LifespanMeasurement]
) -> None:
    header = ("eps", "t_star", "confirmed", "refinement_gap", "status", "notes")
    rows = [
        (m.eps, m.t_star, m.confirmed, m.refinement_gap, m.status, "; ".join(m.notes))
        for m in measurements
    ]
    write_table(path, header, rows)
