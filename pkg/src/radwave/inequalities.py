"""Empirical ratio checks for weighted trace, Stein-Weiss, Hardy, square
function, and fractional chain rule estimates on radial profiles.

Each case evaluates LHS/RHS with both sides computed by the transform and
norm layers, estimates empirical constants over seeded test families, and
sweeps scaling orbits to exhibit divergence outside the admissible parameter
windows.  All mixed-norm expressions use the radial collapse
``|f(r omega)|_{L^2_omega} = |S^{n-1}|^{1/2} |f(r)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .calculus import DyadicCutoff, fd_radial_derivative, fractional_derivative
from .grids import (
    NonIntegrableWeightError,
    RadialGrid,
    RadialProfile,
    UnsupportedDimensionError,
    bracket,
    forward_transform,
    integrate_weighted,
    inverse_transform,
    sphere_area,
)
from .norms import besov_norm, sobolev_norm

CASE_IDS = (
    "trace",
    "trace_lp",
    "weighted_trace",
    "stein_weiss",
    "weighted_hardy",
    "lp_square",
    "chain_rule",
    "weighted_trace_radial",
    # product rule F(u) = u*u; shares the chain_rule machinery
    "leibniz",
)

FAMILY_KINDS = ("gaussian_bumps", "dyadic_packets", "scaling_orbit", "random_smooth")

# ratio sentinels: RHS = 0 with LHS != 0 means the bound failed outright,
# both sides 0 means the ratio carries no information
RATIO_VIOLATION = math.inf
RATIO_UNDEFINED = math.nan

# F, pointwise modulus G with |F'(tau v + (1-tau) w)| <= mu |G(v) + G(w)|,
# and the mass of mu over [0, 1]
CHAIN_NONLINEARITIES: dict[str, tuple[Callable, Callable, float]] = {
    "square": (lambda u: u * u, lambda u: 2.0 * np.abs(u), 1.0),
    "sine": (np.sin, lambda u: np.ones_like(u), 0.5),
}


@dataclass(frozen=True)
class InequalityCase:
    """One estimate to check: exponent tuple plus its admissibility window.

    Args:
        case_id: one of CASE_IDS.
        n: spatial dimension (odd, >= 3).
        s: derivative order (trace, trace_lp, weighted_hardy, chain_rule).
        p: Lebesgue exponent of the radial norm; math.inf allowed where the
            window permits.
        alpha: derivative order of the right-hand side (weighted_trace,
            stein_weiss) or inner weight exponent (weighted_hardy,
            weighted_trace_radial, chain_rule).
        beta: outer weight exponent.
        f_kind: nonlinearity for chain_rule, "square" or "sine".
    """

    case_id: str
    n: int = 3
    s: float = 0.0
    p: float = 2.0
    alpha: float = 0.0
    beta: float = 0.0
    f_kind: str = "square"

    def __post_init__(self) -> None:
        if self.case_id not in CASE_IDS:
            raise ValueError(f"unknown case id {self.case_id!r}")
        if self.n < 3 or self.n % 2 == 0:
            raise UnsupportedDimensionError(
                f"dimension must be odd and >= 3, got n={self.n}"
            )
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.f_kind not in CHAIN_NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity kind {self.f_kind!r}")

    @property
    def admissible(self) -> bool:
        """Whether the exponents sit inside the window where the bound holds."""
        n, s, p = self.n, self.s, self.p
        al, be = self.alpha, self.beta
        if self.case_id == "trace":
            return 0.5 <= s < n / 2.0
        if self.case_id == "trace_lp":
            return 2.0 <= p < math.inf and 0.5 - 1.0 / p <= s < n / 2.0
        if self.case_id == "weighted_trace":
            return (
                2.0 <= p <= math.inf
                and 0.5 - 1.0 / p < al < n / 2.0
                and al - n / 2.0 < be < n / 2.0
            )
        if self.case_id == "stein_weiss":
            return 0.0 < al < n and al - n / 2.0 < be < n / 2.0
        if self.case_id == "weighted_hardy":
            return s >= 0.0 and 0.0 <= al <= be < n / 2.0 - s
        if self.case_id == "lp_square":
            return abs(be) < n / 2.0
        if self.case_id == "weighted_trace_radial":
            return 2.0 <= p < math.inf and 0.0 <= al <= be <= (n - 1) / 2.0
        # chain_rule / leibniz: weights stay Muckenhoupt-admissible after
        # peeling off the integer part of the order
        k = math.floor(s) if s >= 1.0 else 0
        return 0.0 < s and 0.0 <= al <= be < n / 2.0 - k

    @property
    def params(self) -> dict:
        """JSON-ready parameter record."""
        out: dict = {"case": self.case_id, "n": self.n}
        used = {
            "trace": ("s",),
            "trace_lp": ("s", "p"),
            "weighted_trace": ("p", "alpha", "beta"),
            "stein_weiss": ("alpha", "beta"),
            "weighted_hardy": ("s", "alpha", "beta"),
            "lp_square": ("beta",),
            "chain_rule": ("s", "alpha", "beta", "f_kind"),
            "leibniz": ("s", "alpha", "beta"),
            "weighted_trace_radial": ("p", "alpha", "beta"),
        }[self.case_id]
        for name in used:
            out[name] = getattr(self, name)
        out["admissible"] = self.admissible
        return out


# ---------------------------------------------------------------------------
# test families


def symmetric_bump(
    grid: RadialGrid, amp: float, center: float, width: float
) -> RadialProfile:
    """Gaussian bump symmetrized in r so the profile is a smooth radial
    function (even in r, all odd derivatives vanish at the origin)."""
    r = grid.r
    vals = amp * (
        np.exp(-(((r - center) / width) ** 2)) + np.exp(-(((r + center) / width) ** 2))
    )
    return RadialProfile(grid, vals)


def dilated_gaussian(grid: RadialGrid, lam: float, base_width: float) -> RadialProfile:
    """Member f(lam * r) of the scaling orbit of exp(-(r/base_width)^2)."""
    if lam <= 0:
        raise ValueError(f"orbit parameter must be positive, got {lam}")
    vals = np.exp(-((lam * grid.r / base_width) ** 2))
    return RadialProfile(grid, vals)


class FamilyMember(NamedTuple):
    label: str
    profile: RadialProfile


@dataclass(frozen=True)
class TestFamily:
    """Seeded generator of radial test profiles.

    Members are drawn one at a time from a fresh default_rng(seed), so a
    family with a larger count extends a smaller one without changing the
    earlier members.

    Args:
        kind: one of FAMILY_KINDS.
        count: number of members (ignored by scaling_orbit).
        seed: RNG seed.
        lambdas: orbit parameters, scaling_orbit only.
        base_width: width of the orbit's base Gaussian.
    """

    __test__ = False  # not a pytest class, despite the name

    kind: str
    count: int = 20
    seed: int = 0
    lambdas: tuple[float, ...] = ()
    base_width: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.count < 0:
            raise ValueError(f"count must be >= 0, got {self.count}")
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))

    def generate(self, grid: RadialGrid) -> list[FamilyMember]:
        if self.kind == "scaling_orbit":
            return [
                FamilyMember(
                    f"orbit(lam={lam:g})", dilated_gaussian(grid, lam, self.base_width)
                )
                for lam in self.lambdas
            ]
        rng = np.random.default_rng(self.seed)
        out: list[FamilyMember] = []
        if self.kind == "dyadic_packets":
            cutoff = DyadicCutoff.for_grid(grid)
            js = list(cutoff.js)
            js = js[2:-2] if len(js) > 6 else js
            for _ in range(self.count):
                j = js[int(rng.integers(len(js)))]
                center = float(rng.uniform(0.0, grid.r_max / 8.0))
                width = max(2.0 ** (-j), 2.0 * grid.spacing)
                seed_prof = symmetric_bump(grid, 1.0, center, width)
                fhat = forward_transform(seed_prof)
                mult = cutoff.phi(grid.rho * 2.0 ** (-j))
                prof = inverse_transform(fhat.with_values(fhat.values * mult))
                out.append(FamilyMember(f"packet(j={j},c={center:.3g})", prof))
            return out
        for _ in range(self.count):
            if self.kind == "gaussian_bumps":
                amp = float(rng.uniform(0.5, 2.0))
                center = float(rng.uniform(0.0, grid.r_max / 8.0))
                width = float(np.exp(rng.uniform(np.log(0.25), np.log(4.0))))
                prof = symmetric_bump(grid, amp, center, width)
                out.append(FamilyMember(f"bump(c={center:.3g},w={width:.3g})", prof))
            else:  # random_smooth
                vals = np.zeros(grid.num_points + 1)
                for _ in range(4):
                    amp = float(rng.normal())
                    center = float(rng.uniform(0.0, grid.r_max / 6.0))
                    width = float(np.exp(rng.uniform(np.log(0.5), np.log(3.0))))
                    vals += symmetric_bump(grid, amp, center, width).values
                out.append(
                    FamilyMember(f"smooth(seed={self.seed},i={len(out)})",
                                 RadialProfile(grid, vals))
                )
        return out


# ---------------------------------------------------------------------------
# ratio evaluation


def _lp_radial(f: RadialProfile, p: float, a: float, b: float) -> float:
    # L^p_r L^2_omega norm of r^a <r>^b f; measure r^{n-1} dr, angular factor
    # |S^{n-1}|^{1/2}.  Origin node follows the integrate_weighted policy.
    grid = f.grid
    r = grid.r
    root_area = math.sqrt(sphere_area(grid.n))
    if math.isinf(p):
        weighted = np.empty_like(f.values)
        weighted[1:] = np.abs(f.values[1:]) * r[1:] ** a * bracket(r[1:]) ** b
        if a > 0:
            weighted[0] = 0.0
        elif a == 0:
            weighted[0] = abs(f.values[0]) * 2.0 ** (b / 2.0)
        else:
            weighted[0] = math.inf if f.values[0] != 0.0 else 0.0
        return float(root_area * np.max(weighted))
    power = p * a + grid.n - 1
    if power <= -1.0:
        raise NonIntegrableWeightError(
            f"need p*a + n - 1 > -1, got {power} (a={a}, p={p})"
        )
    integrand = np.empty(grid.num_points + 1)
    integrand[1:] = (
        np.abs(f.values[1:]) ** p * r[1:] ** power * bracket(r[1:]) ** (p * b)
    )
    origin = abs(f.values[0]) ** p * 2.0 ** (p * b / 2.0)
    if power > 0:
        integrand[0] = 0.0
        total = np.trapezoid(integrand, r)
    elif power == 0:
        integrand[0] = origin
        total = np.trapezoid(integrand, r)
    else:
        cell = origin * grid.spacing**power * grid.spacing / (power + 1.0)
        total = cell + np.trapezoid(integrand[1:], r[1:])
    return float(root_area * total ** (1.0 / p))


def _weighted_l2(f: RadialProfile, a: float, b: float) -> float:
    # ||r^a <r>^b f||_{L^2(R^n)}
    return math.sqrt(integrate_weighted(f, 2.0 * a, 2.0 * b))


def _square_function_l2(f: RadialProfile, beta: float) -> float:
    # ell^2_j of ||r^beta P_j f||_{L^2} over the resolvable band
    cutoff = DyadicCutoff.for_grid(f.grid)
    fhat = forward_transform(f)
    total = 0.0
    for j in cutoff.js:
        mult = cutoff.phi(f.grid.rho * 2.0 ** (-j))
        block = inverse_transform(fhat.with_values(fhat.values * mult))
        total += integrate_weighted(block, 2.0 * beta, 0.0)
    return math.sqrt(total)


def _besov_weighted(
    f: RadialProfile, theta: float, alpha: float, beta: float, cutoff: DyadicCutoff
) -> float:
    # ell^1_j of 2^{j theta} ||r^{-alpha} <r>^{-(beta-alpha)} P_j f||_{L^2}
    fhat = forward_transform(f)
    total = 0.0
    for j in cutoff.js:
        mult = cutoff.phi(f.grid.rho * 2.0 ** (-j))
        block = inverse_transform(fhat.with_values(fhat.values * mult))
        total += 2.0 ** (j * theta) * _weighted_l2(block, -alpha, -(beta - alpha))
    return total


def _chain_rule_sides(
    u: RadialProfile, f_kind: str, theta: float, weights: tuple[float, float]
) -> tuple[float, float]:
    alpha, beta = weights
    nonlin, modulus, mu_mass = CHAIN_NONLINEARITIES[f_kind]
    cutoff = DyadicCutoff.for_grid(u.grid)
    fu = RadialProfile(u.grid, nonlin(u.values))
    lhs = _besov_weighted(fu, theta, alpha, beta, cutoff)
    rhs = mu_mass * float(np.max(modulus(u.values))) * _besov_weighted(
        u, theta, alpha, beta, cutoff
    )
    k = math.floor(theta) if theta >= 1.0 else 0
    if k >= 1:
        # higher regularity form pays a factor of max_{j<=k} ||r^j d^j u||_inf
        high = float(np.max(np.abs(u.values)))
        du = u
        for j in range(1, k + 1):
            du = fd_radial_derivative(du)
            high = max(high, float(np.max(np.abs(u.grid.r**j * du.values))))
        rhs *= max(1.0, high) ** k
    return lhs, rhs


def check_chain_rule(
    u: RadialProfile,
    f_kind: str,
    theta: float,
    weights: tuple[float, float] = (0.0, 0.0),
) -> float:
    """Ratio of the dyadic-weighted norm of F(u) to the product bound.

    For theta in (0, 1) the right side is the same dyadic norm of u times
    the modulus factor sup|G(u)| and the mass of mu; for theta >= 1 it pays
    an extra max(1, max_{j<=floor(theta)} ||r^j d^j u||_inf)^floor(theta).

    Returns nan when both sides vanish (u == 0 with F(0) = 0).
    """
    if f_kind not in CHAIN_NONLINEARITIES:
        raise ValueError(f"unknown nonlinearity kind {f_kind!r}")
    if not 0.0 < theta < u.grid.n / 2.0:
        raise ValueError(f"need 0 < theta < n/2, got {theta}")
    lhs, rhs = _chain_rule_sides(u, f_kind, theta, weights)
    if rhs == 0.0:
        return RATIO_UNDEFINED if lhs == 0.0 else RATIO_VIOLATION
    return lhs / rhs


def _sides(case: InequalityCase, f: RadialProfile) -> tuple[float, float]:
    n, s, p = case.n, case.s, case.p
    al, be = case.alpha, case.beta
    cid = case.case_id
    if cid == "trace":
        lhs = _lp_radial(f, math.inf, n / 2.0 - s, 0.0)
        # s = 1/2 is the dyadic endpoint; above it a plain derivative norm
        rhs = besov_norm(f, 0.5, 1) if s == 0.5 else sobolev_norm(f, s)
    elif cid == "trace_lp":
        lhs = _lp_radial(f, p, n * (0.5 - 1.0 / p) - s, 0.0)
        rhs = sobolev_norm(f, s)
    elif cid == "weighted_trace":
        lhs = _lp_radial(f, p, n * (0.5 - 1.0 / p) - al + be, 0.0)
        rhs = _weighted_l2(fractional_derivative(f, al), be, 0.0)
    elif cid == "stein_weiss":
        lhs = _weighted_l2(f, be - al, 0.0)
        rhs = _weighted_l2(fractional_derivative(f, al), be, 0.0)
    elif cid == "weighted_hardy":
        lhs = _weighted_l2(f, -al - s, al - be)
        rhs = _weighted_l2(fractional_derivative(f, s), -al, al - be)
    elif cid == "lp_square":
        lhs = _square_function_l2(f, be)
        rhs = _weighted_l2(f, be, 0.0)
    elif cid == "weighted_trace_radial":
        theta = 0.5 - 1.0 / p
        lhs = _lp_radial(f, p, -al + (n - 1) * (0.5 - 1.0 / p), al - be)
        rhs = _weighted_l2(fractional_derivative(f, theta), -al, al - be)
    else:  # chain_rule / leibniz
        kind = "square" if cid == "leibniz" else case.f_kind
        return _chain_rule_sides(f, kind, s, (al, be))
    return lhs, rhs


def ratio(case: InequalityCase, f: RadialProfile) -> float:
    """LHS(f)/RHS(f) for the case's estimate.

    Returns RATIO_VIOLATION (inf) when the right side vanishes but the left
    does not, and RATIO_UNDEFINED (nan) when both vanish.
    """
    if f.grid.n != case.n:
        raise ValueError(
            f"profile lives in dimension {f.grid.n}, case expects {case.n}"
        )
    lhs, rhs = _sides(case, f)
    if rhs == 0.0:
        return RATIO_UNDEFINED if lhs == 0.0 else RATIO_VIOLATION
    return lhs / rhs


# ---------------------------------------------------------------------------
# constant estimation and boundary sweeps


def default_grid(n: int) -> RadialGrid:
    """Evaluation grid used when none is supplied; smaller above n = 3 where
    transforms go through dense quadrature matrices."""
    if n == 3:
        return RadialGrid(n=3, r_max=64.0, num_points=4096)
    return RadialGrid(n=n, r_max=32.0, num_points=1024)


def evaluate_family(
    case: InequalityCase, fam: TestFamily, grid: RadialGrid | None = None
) -> list[tuple[str, float]]:
    """(label, ratio) for every family member, in generation order."""
    grid = grid if grid is not None else default_grid(case.n)
    return [(m.label, ratio(case, m.profile)) for m in fam.generate(grid)]


class BestConstant(NamedTuple):
    value: float
    argmax: str


def _coordinate_ascent(
    case: InequalityCase, grid: RadialGrid, max_rounds: int = 12
) -> tuple[float, str]:
    # greedy walk over (center, width) of a unit symmetric bump from a fixed
    # start, so the refinement does not depend on the family
    w_lo, w_hi = 8.0 * grid.spacing, grid.r_max / 8.0
    c_hi = grid.r_max / 4.0
    center, width = 0.0, 1.0

    def ev(c: float, w: float) -> float:
        val = ratio(case, symmetric_bump(grid, 1.0, c, w))
        return val if math.isfinite(val) else -math.inf

    best = ev(center, width)
    for _ in range(max_rounds):
        moves = (
            (min(c_hi, center + 0.5 * width), width),
            (max(0.0, center - 0.5 * width), width),
            (center, min(w_hi, width * 1.3)),
            (center, max(w_lo, width / 1.3)),
        )
        scored = [(ev(c, w), c, w) for c, w in moves]
        top = max(scored)
        if top[0] <= best * (1.0 + 1e-12):
            break
        best, center, width = top
    return best, f"ascent(c={center:.3g},w={width:.3g})"


def estimate_best_constant(
    case: InequalityCase, fam: TestFamily, grid: RadialGrid | None = None
) -> BestConstant:
    """Empirical constant for the case: max ratio over the family, refined by
    coordinate ascent over bump center and width.

    A lower bound on the true best constant by construction.  The ascent
    starts from a fixed bump, so enlarging the family can only raise the
    estimate.
    """
    grid = grid if grid is not None else default_grid(case.n)
    fam_best, fam_label = -math.inf, "empty"
    for label, val in evaluate_family(case, fam, grid):
        if not math.isnan(val) and val > fam_best:
            fam_best, fam_label = val, label
    asc_best, asc_label = _coordinate_ascent(case, grid)
    if asc_best > fam_best:
        return BestConstant(asc_best, asc_label)
    return BestConstant(fam_best, fam_label)


class SweepRow(NamedTuple):
    lam: float
    value: float


@dataclass(frozen=True)
class SweepTable:
    """Ratio along the scaling orbit f(lam * r).

    growth_factor: max finite ratio over the ratio at the lam closest to 1.
    slope: least-squares slope of log(ratio) against log(lam); a nonzero
        slope means the estimate is not scale-stable at these exponents.
    """

    case: InequalityCase
    rows: tuple[SweepRow, ...]
    growth_factor: float
    slope: float


def boundary_violation_sweep(
    case: InequalityCase,
    lambdas: tuple[float, ...] | list[float],
    grid: RadialGrid | None = None,
    base_width: float = 0.25,
) -> SweepTable:
    """Sweep the case's ratio along a scaling orbit.

    Inside the admissible window both sides scale together and the table is
    flat; at scaling-critical violations the ratio runs off as a power of
    lam, captured by growth_factor and slope.
    """
    lams = tuple(float(l) for l in lambdas)
    if not lams:
        return SweepTable(case, (), math.nan, math.nan)
    grid = grid if grid is not None else default_grid(case.n)
    fam = TestFamily("scaling_orbit", seed=0, lambdas=lams, base_width=base_width)
    rows = tuple(
        SweepRow(lam, ratio(case, member.profile))
        for lam, member in zip(lams, fam.generate(grid))
    )
    finite = [(row.lam, row.value) for row in rows if math.isfinite(row.value) and row.value > 0]
    if not finite:
        return SweepTable(case, rows, math.nan, math.nan)
    anchor = min(finite, key=lambda t: abs(math.log(t[0])))[1]
    growth = max(v for _, v in finite) / anchor
    if len(finite) >= 2:
        logl = np.log([l for l, _ in finite])
        logv = np.log([v for _, v in finite])
        slope = float(np.polyfit(logl, logv, 1)[0])
    else:
        slope = math.nan
    return SweepTable(case, rows, growth, slope)
