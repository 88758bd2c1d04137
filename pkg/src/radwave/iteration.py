"""Mollified data sequences and the quasilinear Picard iteration.

Starting from u_2 = 0, each iterate solves the linear equation
(-d_t^2 + (1 + g(u_prev)) Lap) u = F(u_prev) with
F(u) = a(u) u_t^2 + b(u) u_r^2 and data mollified at spectral level k.
Diagnostics tabulate per-iterate ratios ||d D^theta u_k||_{X_T} over data
norms, Besov rows, and geometric fits of successive difference norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .calculus import fractional_derivative, smooth_step, spectral_radial_derivative
from .grids import RadialProfile, forward_transform, inverse_transform
from .norms import (
    NormParams,
    SpaceTimeField,
    _check_span,
    _sup_l2,
    _weighted_spacetime_sq,
    besov_norm,
)
from .solver import MAX_CFL, BlowupSignal, _acceleration, data_norm, solve_linear

SCALAR_KINDS = ("zero", "linear", "sine", "const", "poly")

# top of the s0 window [2 - s, s - 1] relative to s
S_WINDOW = (1.5, 2.0)


@dataclass(frozen=True)
class ScalarFunction:
    """One of the built-in smooth scalar functions u -> c(u).

    kinds: zero; linear c(u) = k u; sine c(u) = k sin u; const c(u) = c0;
    poly c(u) = sum coeffs[i] u^i.
    """

    kind: str
    coeffs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in SCALAR_KINDS:
            raise ValueError(f"kind must be one of {SCALAR_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not all(np.isfinite(c) for c in self.coeffs):
            raise ValueError("coefficients must be finite")
        arity = {"zero": 0, "linear": 1, "sine": 1, "const": 1}
        if self.kind in arity and len(self.coeffs) != arity[self.kind]:
            raise ValueError(
                f"{self.kind} takes {arity[self.kind]} coefficient(s), got {len(self.coeffs)}"
            )
        if self.kind == "poly" and not self.coeffs:
            raise ValueError("poly needs at least one coefficient")

    def __call__(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "linear":
            return self.coeffs[0] * u
        if self.kind == "sine":
            return self.coeffs[0] * np.sin(u)
        if self.kind == "const":
            return np.full_like(u, self.coeffs[0])
        return np.polynomial.polynomial.polyval(u, self.coeffs)

    def derivative(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "zero" or self.kind == "const":
            return np.zeros_like(u)
        if self.kind == "linear":
            return np.full_like(u, self.coeffs[0])
        if self.kind == "sine":
            return self.coeffs[0] * np.cos(u)
        der = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(u, der)

    def second_derivative(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        u = np.asarray(u, dtype=np.float64)
        if self.kind in ("zero", "const", "linear"):
            return np.zeros_like(u)
        if self.kind == "sine":
            return -self.coeffs[0] * np.sin(u)
        der2 = np.polynomial.polynomial.polyder(self.coeffs, 2)
        return np.polynomial.polynomial.polyval(u, der2)


ZERO_FUNCTION = ScalarFunction("zero")


@dataclass(frozen=True)
class NonlinearitySpec:
    """Coefficient triple (g, a, b) of the quasilinear equation."""

    g: ScalarFunction = ZERO_FUNCTION
    a: ScalarFunction = ZERO_FUNCTION
    b: ScalarFunction = ZERO_FUNCTION

    def __post_init__(self) -> None:
        if float(self.g(np.zeros(1))[0]) != 0.0:
            raise ValueError("g(0) must vanish")

    @property
    def is_free(self) -> bool:
        return all(f.kind == "zero" for f in (self.g, self.a, self.b))

    def validate_on(self, u_clip: float) -> None:
        """Finite values and derivatives to order 2 on |u| <= u_clip."""
        sample = np.linspace(-u_clip, u_clip, 65)
        for f in (self.g, self.a, self.b):
            probes = (f(sample), f.derivative(sample), f.second_derivative(sample))
            if not all(np.all(np.isfinite(p)) for p in probes):
                raise ValueError(f"{f.kind} evaluator non-finite on |u| <= {u_clip}")

    def forcing_stack(
        self,
        values: NDArray[np.float64],
        dt_values: NDArray[np.float64],
        ur_values: NDArray[np.float64],
    ) -> NDArray[np.float64]:
        return self.a(values) * dt_values**2 + self.b(values) * ur_values**2


class _StackEvaluator:
    """Samples a per-step stack at the solver's own time nodes."""

    def __init__(self, stack: NDArray[np.float64], dt: float):
        self.stack = stack
        self.dt = dt

    def __call__(self, t: float, r: NDArray[np.float64]) -> NDArray[np.float64]:
        m = int(round(t / self.dt))
        if not 0 <= m < len(self.stack) or abs(t - m * self.dt) > 1e-9 * (1.0 + self.dt):
            raise ValueError(f"evaluator sampled off the step grid at t={t!r}")
        return self.stack[m]


@dataclass(frozen=True)
class StageReport:
    """Smallness check T^mu ||r^{1-mu} dg(u_prev)||_inf <= delta at one stage."""

    k: int
    smallness: float
    delta: float
    sup_amplitude: float

    @property
    def passed(self) -> bool:
        return self.smallness <= self.delta


@dataclass(frozen=True)
class IterationRun:
    """Iterates u_2, u_3, ..., their mollified data, and stage reports.

    iterates[0] is u_2 = 0; iterates[j] for j >= 1 is the level k = j + 2
    solution with data[j - 1].  truncated marks a run stopped by the
    smallness check before reaching the requested length.
    """

    iterates: tuple[SpaceTimeField, ...]
    data: tuple[tuple[RadialProfile, RadialProfile], ...]
    source_data: tuple[RadialProfile, RadialProfile]
    T: float
    s: float
    s0: float
    mu: float
    nl: NonlinearitySpec
    stages: tuple[StageReport, ...]
    truncated: bool
    u_clip: float

    def __post_init__(self) -> None:
        if len(self.iterates) != len(self.data) + 1:
            raise ValueError("iterate and data sequences out of step")

    def level(self, j: int) -> int:
        return j + 2


def mollify_data(
    u0: RadialProfile, u1: RadialProfile, k: int
) -> tuple[RadialProfile, RadialProfile]:
    """Spectral mollification at level k: multiply transforms by a smooth
    low-pass equal to 1 on rho <= 2^k and 0 beyond 2^{k+1}.

    The multiplier never exceeds 1, so every homogeneous norm is
    non-increasing, and data band-limited below 2^{k-1} pass through
    untouched up to transform round-trip error.
    """
    if k < 3:
        raise ValueError(f"mollification level k >= 3 required, got {k}")
    if u0.grid != u1.grid:
        raise ValueError("data profiles live on different grids")
    mult = smooth_step(2.0 - u0.grid.rho * 2.0 ** (-k))
    out = []
    for f in (u0, u1):
        fhat = forward_transform(f)
        out.append(inverse_transform(fhat.with_values(fhat.values * mult)))
    return out[0], out[1]


def picard_iterate(
    data: tuple[RadialProfile, RadialProfile],
    nl: NonlinearitySpec,
    T: float,
    K: int,
    *,
    s: float = 1.8,
    s0: float | None = None,
    mu: float = 0.5,
    smallness_delta: float = 0.25,
    cfl: float = MAX_CFL,
    delta0: float = 0.25,
    boundary_guard: bool = True,
) -> IterationRun:
    """K iterates of the Picard scheme, sharing one step grid.

    Every stage first checks T^mu ||r^{1-mu} g'(u_prev)(u_t, u_r)||_inf
    against smallness_delta; failure truncates the run with the stage
    report retained.  Exceeding u_clip = 10 x data amplitude raises the
    amplitude blowup signal; solver guards propagate as-is.
    """
    u0, u1 = data
    if u0.grid != u1.grid:
        raise ValueError("data profiles live on different grids")
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    if K < 1:
        raise ValueError(f"K >= 1 iterates required, got {K}")
    if not S_WINDOW[0] < s <= S_WINDOW[1]:
        raise ValueError(f"s must lie in ({S_WINDOW[0]}, {S_WINDOW[1]}], got {s}")
    if s0 is None:
        s0 = s - 1.0
    if not 2.0 - s <= s0 <= s - 1.0:
        raise ValueError(f"s0 must lie in [{2.0 - s}, {s - 1.0}], got {s0}")
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    grid = u0.grid
    amp = max(float(np.max(np.abs(u0.values))), float(np.max(np.abs(u1.values))))
    u_clip = 10.0 * amp if amp > 0.0 else 1.0
    nl.validate_on(u_clip)

    dt = cfl * grid.spacing * np.sqrt(delta0)
    num_steps = max(int(np.ceil(T / dt - 1e-12)), 1)
    dt = T / num_steps
    times = np.linspace(0.0, T, num_steps + 1)
    shape = (num_steps + 1, grid.num_points + 1)
    prev = SpaceTimeField(grid, times, np.zeros(shape), np.zeros(shape))

    weight = grid.r ** (1.0 - mu)
    iterates = [prev]
    data_seq: list[tuple[RadialProfile, RadialProfile]] = []
    stages: list[StageReport] = []
    truncated = False
    for k in range(3, K + 3):
        ur_stack = prev.radial_derivative_stack()
        grad_mag = np.hypot(prev.dt_values, ur_stack) * np.abs(nl.g.derivative(prev.values))
        smallness = T**mu * float(np.max(weight * grad_mag))
        sup_amp = float(np.max(np.abs(prev.values)))
        stages.append(StageReport(k, smallness, smallness_delta, sup_amp))
        if smallness > smallness_delta:
            truncated = True
            break
        if sup_amp > u_clip:
            rows = np.max(np.abs(prev.values), axis=1)
            m = int(np.argmax(rows > u_clip))
            raise BlowupSignal(
                "amplitude", float(times[m]), f"sup |u| = {sup_amp:.4g} exceeds {u_clip:.4g}"
            )
        g_stack = nl.g(prev.values)
        f_stack = nl.forcing_stack(prev.values, prev.dt_values, ur_stack)
        u0k, u1k = mollify_data(u0, u1, k)
        field = solve_linear(
            (u0k, u1k),
            _StackEvaluator(g_stack, dt),
            _StackEvaluator(f_stack, dt),
            T,
            cfl=cfl,
            delta0=delta0,
            dt=dt,
            boundary_guard=boundary_guard,
        )
        data_seq.append((u0k, u1k))
        iterates.append(field)
        prev = field
    return IterationRun(
        tuple(iterates),
        tuple(data_seq),
        (u0, u1),
        float(T),
        float(s),
        float(s0),
        float(mu),
        nl,
        tuple(stages),
        truncated,
        u_clip,
    )


# ---------------------------------------------------------------------------
# norms of iterates


def partial_xt_norm(u: SpaceTimeField, p: NormParams, theta: float = 0.0) -> float:
    """X_T norm of the space-time gradient (d_t, d_r) of D^theta u."""
    _check_span(u, p)
    if theta == 0.0:
        dvals = u.values
        ddt = u.dt_values
    else:
        dvals = np.stack(
            [fractional_derivative(u.profile(m), theta).values for m in range(len(u.times))]
        )
        ddt = np.stack(
            [
                fractional_derivative(u.dt_profile(m), theta).values
                for m in range(len(u.times))
            ]
        )
    ur = np.stack(
        [
            spectral_radial_derivative(RadialProfile(u.grid, dvals[m])).values
            for m in range(len(u.times))
        ]
    )
    stacks = [ddt, ur]
    sup_term = _sup_l2(u, stacks)
    bulk = _weighted_spacetime_sq(u, stacks, -(1.0 - p.mu), 0.0)
    return float(sup_term + p.T ** (-p.mu / 2.0) * np.sqrt(bulk))


def _besov_gradient(values_row, dt_row, grid) -> float:
    u_t = besov_norm(RadialProfile(grid, dt_row), 0.5, 1.0)
    u_r = besov_norm(
        spectral_radial_derivative(RadialProfile(grid, values_row)), 0.5, 1.0
    )
    return float(np.hypot(u_t, u_r))


class LedgerRow(NamedTuple):
    k: int
    theta: float
    kind: str
    norm: float
    data_norm: float
    ratio: float
    flagged: bool


@dataclass(frozen=True)
class UniformBoundReport:
    rows: tuple[LedgerRow, ...]
    max_ratio: float
    flagged_levels: tuple[int, ...]


def uniform_bound_report(run: IterationRun, theta_points: int = 5) -> UniformBoundReport:
    """Ratio ledger ||d D^theta u_k||_{X_T} / ||(grad u0k, u1k)||_{H^theta}.

    theta ranges over {s0 - 1} and a grid on [0, s - 1]; for n = 3 a Besov
    row at theta = 1/2 compares sup_t of the gradient's B^{1/2}_{2,1} norm
    against the same norm of the data.  A level is flagged when its ratio
    exceeds twice the running max of earlier levels.
    """
    if not run.data:
        raise ValueError("run holds no iterates beyond u_2")
    thetas = sorted({round(float(t), 12) for t in
                     [run.s0 - 1.0, *np.linspace(0.0, run.s - 1.0, theta_points)]})
    p = NormParams(mu=run.mu, T=run.T)
    rows: list[LedgerRow] = []
    flagged: set[int] = set()
    for theta in thetas:
        running = 0.0
        for j, field in enumerate(run.iterates[1:]):
            k = run.level(j + 1)
            u0k, u1k = run.data[j]
            num = partial_xt_norm(field, p, theta)
            den = data_norm(u0k, u1k, theta)
            ratio = num / den if den > 0.0 else (np.inf if num > 0.0 else 0.0)
            is_flagged = running > 0.0 and ratio > 2.0 * running
            if is_flagged:
                flagged.add(k)
            rows.append(LedgerRow(k, theta, "sobolev", num, den, float(ratio), is_flagged))
            running = max(running, ratio)
    grid = run.iterates[0].grid
    if grid.n == 3:
        running = 0.0
        for j, field in enumerate(run.iterates[1:]):
            k = run.level(j + 1)
            u0k, u1k = run.data[j]
            num = max(
                _besov_gradient(field.values[m], field.dt_values[m], grid)
                for m in range(len(field.times))
            )
            den = _besov_gradient(u0k.values, u1k.values, grid)
            ratio = num / den if den > 0.0 else (np.inf if num > 0.0 else 0.0)
            is_flagged = running > 0.0 and ratio > 2.0 * running
            if is_flagged:
                flagged.add(k)
            rows.append(LedgerRow(k, 0.5, "besov", num, den, float(ratio), is_flagged))
            running = max(running, ratio)
    finite = [row.ratio for row in rows if np.isfinite(row.ratio)]
    max_ratio = float(max(finite)) if finite else 0.0
    return UniformBoundReport(tuple(rows), max_ratio, tuple(sorted(flagged)))


def difference_fields(run: IterationRun) -> list[SpaceTimeField]:
    """w_k = u_{k+1} - u_k for consecutive iterates (w_2 = u_3)."""
    out = []
    for a, b in zip(run.iterates, run.iterates[1:]):
        out.append(
            SpaceTimeField(a.grid, a.times, b.values - a.values, b.dt_values - a.dt_values)
        )
    return out


class ConvergenceReport(NamedTuple):
    """Geometric fit of ||D^{s0-1} d w_k||_{X_T} over successive differences.

    non_contraction is None for a contracting run, else the (T, eps) pair
    at which some ratio reached 1.
    """

    difference_norms: NDArray[np.float64]
    ratios: NDArray[np.float64]
    fitted_ratio: float
    fit_r_squared: float
    convergent: bool
    limit_distance: float
    non_contraction: tuple[float, float] | None


def convergence_report(run: IterationRun) -> ConvergenceReport:
    if len(run.iterates) < 5:
        raise ValueError("need at least K = 4 iterates beyond u_2")
    p = NormParams(mu=run.mu, T=run.T)
    theta = run.s0 - 1.0
    norms = np.array(
        [partial_xt_norm(w, p, theta) for w in difference_fields(run)]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(norms[:-1] > 0.0, norms[1:] / norms[:-1], 0.0)
    positive = norms > 0.0
    if np.count_nonzero(positive) >= 2:
        idx = np.nonzero(positive)[0]
        logs = np.log(norms[idx])
        slope, intercept = np.polyfit(idx, logs, 1)
        fitted = float(np.exp(slope))
        pred = slope * idx + intercept
        ss_res = float(np.sum((logs - pred) ** 2))
        ss_tot = float(np.sum((logs - np.mean(logs)) ** 2))
        r_sq = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    else:
        fitted, r_sq = 0.0, 1.0
    eps = data_norm(*run.source_data, run.s - 1.0)
    non_contraction = (run.T, eps) if np.any(ratios >= 1.0) else None
    convergent = non_contraction is None and fitted < 1.0
    if norms[-1] == 0.0:
        limit = 0.0
    elif fitted < 1.0:
        limit = float(norms[-1] * fitted / (1.0 - fitted))
    else:
        limit = np.inf
    return ConvergenceReport(norms, ratios, fitted, r_sq, convergent, limit, non_contraction)


def discrete_equation_residual(run: IterationRun, j: int) -> float:
    """Max interior residual of iterate j >= 1 under its own three-level
    update; rounding-level for a faithful run."""
    if not 1 <= j < len(run.iterates):
        raise ValueError(f"iterate index {j} outside 1..{len(run.iterates) - 1}")
    field = run.iterates[j]
    prev = run.iterates[j - 1]
    grid = field.grid
    dt = field.dt
    r = grid.r
    g_stack = run.nl.g(prev.values)
    f_stack = run.nl.forcing_stack(prev.values, prev.dt_values, prev.radial_derivative_stack())
    if grid.n == 3:
        w = field.values * r
    else:
        w = field.values
    worst = 0.0
    for m in range(1, len(field.times) - 1):
        acc = _acceleration(grid, w[m], g_stack[m], f_stack[m])
        resid = (w[m + 1] - 2.0 * w[m] + w[m - 1]) / dt**2 - acc
        lo = 1 if grid.n == 3 else 0
        worst = max(worst, float(np.max(np.abs(resid[lo:-1]))))
    return worst


def embedding_report(run: IterationRun) -> tuple[float, NDArray[np.float64]]:
    """Recorded constant of sup |u| <= C ||u||_{B^{3/2}_{2,1}} over all
    iterates and times (n = 3)."""
    grid = run.iterates[0].grid
    per_iterate = []
    for field in run.iterates[1:]:
        best = 0.0
        for m in range(len(field.times)):
            sup = float(np.max(np.abs(field.values[m])))
            if sup == 0.0:
                continue
            bnorm = besov_norm(RadialProfile(grid, field.values[m]), 1.5, 1.0)
            if bnorm > 0.0:
                best = max(best, sup / bnorm)
        per_iterate.append(best)
    arr = np.array(per_iterate)
    return (float(np.max(arr)) if arr.size else 0.0), arr
