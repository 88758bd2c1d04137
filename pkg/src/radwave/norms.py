"""Scalar norms on radial profiles and space-time fields.

Sobolev and Besov norms act spectrally on single profiles.  Space-time norms
combine a weighted spatial quadrature with a trapezoid in time: the energy
norm X_T, its dual X_T* (as a certified upper bound over structured
splittings), the four-term local-energy norm LE_T, and the dyadic-shell
functional X_1 that dominates LE_T in the summation argument.

Bracket conventions: <r> = sqrt(2 + r^2) and <T> = sqrt(2 + T^2), so
ln<T> > 0 for every T > 0.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import NDArray

from .calculus import DyadicCutoff, spectral_radial_derivative
from .grids import (
    RadialGrid,
    RadialProfile,
    bracket,
    forward_transform,
    integrate_weighted,
    l2_norm,
    sphere_area,
)


class InvalidFieldError(ValueError):
    """Space-time stack breaks shape, finiteness, or time-derivative consistency."""


@dataclass(frozen=True)
class NormParams:
    """Weight and horizon parameters shared by the space-time norms.

    mu in (0,1) is the main radial weight exponent, mu1 in (0, mu] the
    secondary one, T the time horizon; theta and q parameterize derivative
    order and Besov summability where used.
    """

    mu: float = 0.5
    mu1: float | None = None
    T: float = 1.0
    theta: float = 0.0
    q: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if self.mu1 is None:
            object.__setattr__(self, "mu1", self.mu)
        if not 0.0 < self.mu1 <= self.mu:
            raise ValueError(f"mu1 must lie in (0, mu], got {self.mu1}")
        if not self.T > 0.0:
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def bracket_T(self) -> float:
        return float(np.sqrt(2.0 + self.T**2))

    @property
    def log_bracket_T(self) -> float:
        return float(np.log(self.bracket_T))


@dataclass(frozen=True)
class SpaceTimeField:
    """Stack u(t_m, r_i) on a shared grid with its time-derivative companion.

    times must be uniform; the dt stack has to agree with centered time
    differences of the values up to the O(dt^2) consistency budget estimated
    from the field's own third differences.
    """

    grid: RadialGrid
    times: NDArray[np.float64]
    values: NDArray[np.float64]
    dt_values: NDArray[np.float64]
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        dt_values = np.asarray(self.dt_values, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dt_values", dt_values)
        m = len(times)
        shape = (m, self.grid.num_points + 1)
        if values.shape != shape or dt_values.shape != shape:
            raise InvalidFieldError(
                f"expected stacks of shape {shape}, got {values.shape} and {dt_values.shape}"
            )
        if m < 2:
            raise InvalidFieldError("need at least two time levels")
        steps = np.diff(times)
        if not np.all(steps > 0.0) or np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
            raise InvalidFieldError("times must be uniformly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(dt_values))):
            raise InvalidFieldError("field contains non-finite samples")
        if m >= 4:
            dt = steps[0]
            centered = (values[2:] - values[:-2]) / (2.0 * dt)
            resid = np.max(np.abs(dt_values[1:-1] - centered))
            third = np.diff(values, n=3, axis=0)
            budget = 4.0 * np.max(np.abs(third)) / (6.0 * dt) + 1e-9 * (
                np.max(np.abs(dt_values)) + 1.0
            )
            if resid > budget:
                raise InvalidFieldError(
                    f"dt stack deviates from centered differences: {resid:.3e} > {budget:.3e}"
                )

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])

    def profile(self, m: int) -> RadialProfile:
        return RadialProfile(self.grid, self.values[m], flags=self.flags)

    def dt_profile(self, m: int) -> RadialProfile:
        return RadialProfile(self.grid, self.dt_values[m], flags=self.flags)

    def restricted(self, T: float) -> "SpaceTimeField":
        """Sub-field on [t_0, t_0 + T] (T rounded to the step grid)."""
        m = int(round(T / self.dt))
        if m < 1 or m >= len(self.times):
            raise InvalidFieldError(f"window T={T} outside the field span {self.span}")
        return SpaceTimeField(
            self.grid, self.times[: m + 1], self.values[: m + 1],
            self.dt_values[: m + 1], flags=self.flags,
        )

    def radial_derivative_stack(self) -> NDArray[np.float64]:
        """d/dr of every time slice, spectral path."""
        out = np.empty_like(self.values)
        for m in range(len(self.times)):
            out[m] = spectral_radial_derivative(self.profile(m)).values
        return out


def _check_span(u: SpaceTimeField, p: NormParams) -> None:
    if abs(u.span - p.T) > 0.51 * u.dt:
        raise InvalidFieldError(f"field spans {u.span}, params expect T={p.T}")


# ---------------------------------------------------------------------------
# profile norms


def _spectral_weighted(fhat_values: NDArray[np.float64], grid: RadialGrid, s: float) -> float:
    # int rho^{2s} |fhat|^2 rho^{n-1} drho with the analytic origin limit
    rho = grid.rho
    power = 2.0 * s + grid.n - 1
    integrand = np.empty_like(fhat_values)
    integrand[1:] = fhat_values[1:] ** 2 * rho[1:] ** power
    if power > 0:
        integrand[0] = 0.0
        return float(np.trapezoid(integrand, rho))
    if power == 0:
        integrand[0] = fhat_values[0] ** 2
        return float(np.trapezoid(integrand, rho))
    drho = rho[1]
    cell = fhat_values[0] ** 2 * drho**power * drho / (power + 1.0)
    return float(cell + np.trapezoid(integrand[1:], rho[1:]))


def sobolev_norm(f: RadialProfile, s: float) -> float:
    """Homogeneous Sobolev norm ||D^s f||_{L^2} by spectral Plancherel."""
    if 2.0 * s + f.grid.n - 1 <= -1.0:
        raise ValueError(f"order s={s} not integrable on the spectral grid")
    fhat = forward_transform(f)
    total = _spectral_weighted(fhat.values, f.grid, s)
    return float(np.sqrt(total * sphere_area(f.grid.n) / (2.0 * np.pi) ** f.grid.n))


@dataclass(frozen=True)
class BesovReport:
    """Besov norm value plus the spectral-mass shares outside the dyadic band."""

    value: float
    low_tail_share: float
    high_tail_share: float


def besov_report(f: RadialProfile, s: float, q: float) -> BesovReport:
    """l^q_j of 2^{js} ||P_j f||_{L^2} over the resolvable band, with the
    unresolved low/high spectral mass reported as shares of ||f||^2."""
    if q not in (1.0, 2.0, np.inf):
        raise ValueError(f"q must be 1, 2, or inf, got {q}")
    grid = f.grid
    cutoff = DyadicCutoff.for_grid(grid)
    fhat = forward_transform(f)
    rho = grid.rho
    terms = []
    covered = np.zeros_like(rho)
    for j in cutoff.js:
        phi_j = cutoff.phi(rho * 2.0 ** (-j))
        covered += phi_j
        block_sq = _spectral_weighted(phi_j * fhat.values, grid, 0.0)
        norm_j = np.sqrt(block_sq * sphere_area(grid.n) / (2.0 * np.pi) ** grid.n)
        terms.append(2.0 ** (j * s) * norm_j)
    terms_arr = np.array(terms)
    if q == 1.0:
        value = float(np.sum(terms_arr))
    elif q == 2.0:
        value = float(np.sqrt(np.sum(terms_arr**2)))
    else:
        value = float(np.max(terms_arr))
    total_sq = _spectral_weighted(fhat.values, grid, 0.0)
    if total_sq > 0.0:
        low = rho <= 2.0**cutoff.j_min
        high = rho >= 2.0**cutoff.j_max
        uncov_low = fhat.values * np.where(low, 1.0 - covered, 0.0)
        uncov_high = fhat.values * np.where(high, 1.0 - covered, 0.0)
        low_share = _spectral_weighted(uncov_low, grid, 0.0) / total_sq
        high_share = _spectral_weighted(uncov_high, grid, 0.0) / total_sq
    else:
        low_share = high_share = 0.0
    return BesovReport(value, float(low_share), float(high_share))


def besov_norm(f: RadialProfile, s: float, q: float) -> float:
    return besov_report(f, s, q).value


# ---------------------------------------------------------------------------
# space-time norms


def _weighted_slices(
    grid: RadialGrid, stack: NDArray[np.float64], a: float, b: float
) -> NDArray[np.float64]:
    # integrate_weighted applied to every row of a (time, radius) stack,
    # sharing its three-branch origin handling
    if a <= -grid.n:
        raise ValueError(f"need a > -n = {-grid.n}, got a = {a}")
    r = grid.r
    power = a + grid.n - 1
    w = np.empty(grid.num_points + 1)
    w[1:] = r[1:] ** power * bracket(r[1:]) ** b
    if power > 0:
        w[0] = 0.0
        total = np.trapezoid(stack**2 * w, r, axis=1)
    elif power == 0:
        w[0] = 2.0 ** (b / 2.0)
        total = np.trapezoid(stack**2 * w, r, axis=1)
    else:
        h = grid.spacing
        cell = stack[:, 0] ** 2 * 2.0 ** (b / 2.0) * h**power * h / (power + 1.0)
        total = cell + np.trapezoid(stack[:, 1:] ** 2 * w[1:], r[1:], axis=1)
    return total * sphere_area(grid.n)


def _sup_l2(u: SpaceTimeField, stacks: list[NDArray[np.float64]]) -> float:
    per_time = np.zeros(len(u.times))
    for st in stacks:
        per_time += _weighted_slices(u.grid, st, 0.0, 0.0)
    return float(np.sqrt(np.max(per_time)))


def _weighted_spacetime_sq(
    u: SpaceTimeField, stacks: list[NDArray[np.float64]], a: float, b: float
) -> float:
    per_time = np.zeros(len(u.times))
    for st in stacks:
        per_time += _weighted_slices(u.grid, st, a, b)
    return float(np.trapezoid(per_time, u.times))


def xt_norm(u: SpaceTimeField, p: NormParams) -> float:
    """||u||_{L^inf_t L^2} + T^{-mu/2} ||r^{-(1-mu)/2} u||_{L^2_{t,x}}."""
    _check_span(u, p)
    sup_term = _sup_l2(u, [u.values])
    bulk = _weighted_spacetime_sq(u, [u.values], -(1.0 - p.mu), 0.0)
    return sup_term + p.T ** (-p.mu / 2.0) * float(np.sqrt(bulk))


@dataclass(frozen=True)
class DualSplit:
    """Outcome of the structured splitting search for X_T*."""

    value: float
    kind: str
    threshold: float | None = None


def xt_dual_split(F: SpaceTimeField, p: NormParams) -> DualSplit:
    """Upper bound on inf_{F = F1 + F2} ||F1||_{L^1_t L^2} + T^{mu/2}
    ||r^{(1-mu)/2} F2||_{L^2_{t,x}}.

    Candidates: the two pure splittings and the radial-threshold family
    F1 = F 1_{r > R*} minimized over grid radii R*.  The true infimum can only
    be smaller, so the result is certified as an upper bound.
    """
    _check_span(F, p)
    grid = F.grid
    r = grid.r
    times = F.times
    n = grid.n
    area = sphere_area(n)
    tw = p.T ** (p.mu / 2.0)

    # per-slice cumulative integrals in r of the two weighted densities
    dens1 = F.values**2 * r ** (n - 1)  # for L^2_x
    w2 = np.empty_like(r)
    w2[1:] = r[1:] ** (1.0 - p.mu + n - 1)
    w2[0] = 0.0
    dens2 = F.values**2 * w2

    def cumulative_from(dens: NDArray[np.float64]) -> NDArray[np.float64]:
        # cum[:, i] = trapezoid of dens over [r_i, r_max] per time slice
        inner = np.cumsum(
            0.5 * (dens[:, 1:] + dens[:, :-1]) * np.diff(r)[None, :], axis=1
        )
        total = inner[:, -1:]
        out = np.empty_like(dens)
        out[:, 0] = total[:, 0]
        out[:, 1:] = total - inner
        return out

    outer1 = cumulative_from(dens1) * area  # ||F 1_{r>R}||_{L^2_x}^2 at R = r_i
    inner2 = (
        np.concatenate(
            [
                np.zeros((len(times), 1)),
                np.cumsum(0.5 * (dens2[:, 1:] + dens2[:, :-1]) * np.diff(r)[None, :], axis=1),
            ],
            axis=1,
        )
        * area
    )

    pure_f1 = float(np.trapezoid(np.sqrt(outer1[:, 0]), times))
    pure_f2 = tw * float(np.sqrt(np.trapezoid(inner2[:, -1], times)))

    best = DualSplit(pure_f1, "pure_F1") if pure_f1 <= pure_f2 else DualSplit(pure_f2, "pure_F2")
    idx = np.unique(np.linspace(0, grid.num_points, 65).astype(int))
    for i in idx:
        cand = float(
            np.trapezoid(np.sqrt(outer1[:, i]), times)
            + tw * np.sqrt(np.trapezoid(inner2[:, i], times))
        )
        if cand < best.value:
            best = DualSplit(cand, "threshold", threshold=float(r[i]))
    return best


def xt_dual_norm(F: SpaceTimeField, p: NormParams) -> float:
    return xt_dual_split(F, p).value


def le_norm_terms(u: SpaceTimeField, p: NormParams) -> tuple[float, float, float, float]:
    """The four local-energy terms for the gradient pair (u_t, u_r):

    sup-in-time energy, the fully weighted bulk term, the T-scaled
    homogeneous term, and the log-scaled intermediate term.
    """
    _check_span(u, p)
    du = [u.dt_values, u.radial_derivative_stack()]
    t1 = _sup_l2(u, du)
    t2 = np.sqrt(_weighted_spacetime_sq(u, du, -(1.0 - p.mu), -(p.mu + p.mu1)))
    t3 = p.bracket_T ** (-p.mu / 2.0) * np.sqrt(
        _weighted_spacetime_sq(u, du, -(1.0 - p.mu), 0.0)
    )
    t4 = p.log_bracket_T ** (-0.5) * np.sqrt(
        _weighted_spacetime_sq(u, du, -(1.0 - p.mu), -p.mu)
    )
    return (float(t1), float(t2), float(t3), float(t4))


def le_norm(u: SpaceTimeField, p: NormParams) -> float:
    return float(sum(le_norm_terms(u, p)))


def x1_norm(u: SpaceTimeField, p: NormParams) -> float:
    """Dyadic-shell majorant: near-origin weighted gradient mass, the sup over
    unit-width shells of |du|^2/r mass, and the energy sup."""
    _check_span(u, p)
    grid = u.grid
    r = grid.r
    ur = u.radial_derivative_stack()
    du = [u.dt_values, ur]
    energy = _sup_l2(u, du)

    mask_in = (r <= 1.0).astype(np.float64)
    near = _weighted_spacetime_sq(
        u, [u.dt_values * mask_in, ur * mask_in], -(1.0 - p.mu), 0.0
    )
    near += _weighted_spacetime_sq(u, [u.values * mask_in], -(1.0 - p.mu) - 2.0, 0.0)

    # u/r on the shells; origin node irrelevant since every shell has r > 1/2
    over_r = np.zeros_like(u.values)
    over_r[:, 1:] = u.values[:, 1:] / r[1:]
    shells = 0.0
    R = 1.0
    while R <= grid.r_max:
        mask = ((r > R / 2.0) & (r <= R)).astype(np.float64)
        piece = _weighted_spacetime_sq(
            u, [u.dt_values * mask, ur * mask, over_r * mask], -1.0, 0.0
        )
        shells = max(shells, piece)
        R *= 2.0
    return float(np.sqrt(near + shells + energy**2))


def duality_pairing(F: SpaceTimeField, u: SpaceTimeField) -> float:
    """|iint F u r^{n-1} dr dt| * |S^{n-1}|, trapezoid in both variables."""
    if F.grid != u.grid or len(F.times) != len(u.times):
        raise InvalidFieldError("fields must share grid and times")
    r = F.grid.r
    per_time = np.trapezoid(F.values * u.values * r ** (F.grid.n - 1), r, axis=1)
    return float(abs(np.trapezoid(per_time, F.times)) * sphere_area(F.grid.n))


# ---------------------------------------------------------------------------
# reports


def norm_record(norm_id: str, params: NormParams | dict, value: float,
                flags: tuple[str, ...] = ()) -> dict:
    """JSON-ready record {norm_id, params, value, flags}."""
    if isinstance(params, NormParams):
        params = asdict(params)
    return {"norm_id": norm_id, "params": params, "value": value, "flags": list(flags)}


def write_records(records: list[dict], path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
