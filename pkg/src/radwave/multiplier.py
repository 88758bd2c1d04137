"""Radial multiplier identities, sign conditions, and residual checks.

The multiplier X u = u_r + ((n-1)/(2r)) u turns products of second
derivatives of a radial field against f X u into exact space-time
divergences plus a sign-definite density Q0.  Everything here is exact term
by term (no trailing remainders): the residual checks discretize both sides
of each identity with 2nd-order centered differences and compare on an
interior box, which refinement studies then shrink at order 2.

Radial divergence convention: div_r psi = psi' + ((n-1)/r) psi, so that
int div_r(psi) r^(n-1) dr telescopes to boundary values of r^(n-1) psi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .calculus import ORIGIN_REL_TOL, fd_radial_derivative
from .grids import RadialGrid, RadialProfile, sphere_area
from .norms import SpaceTimeField

FAMILIES = ("power", "ratio", "unit")

# Two-sided order-2 window for defect ratios under 2x refinement.
ORDER2_WINDOW = (3.6, 4.4)

SIGN_MARGIN_TOL = 1e-9


class HyperbolicityError(ValueError):
    """Coefficients leave the uniform window delta0 < 1 + g < 1/delta0."""


# ---------------------------------------------------------------------------
# multiplier weights


@dataclass(frozen=True)
class MultiplierSpec:
    """Radial multiplier weight f(r).

    family "power" is f = (r/(R+r))^mu with mu in (0, 1]; "ratio" is the
    mu = 1 member written explicitly; "unit" is f = 1 (the mu = 0 member).
    All members satisfy 0 <= f <= 1, f' >= 0, f >= r f', -Lap(f/r) >= 0.
    """

    family: str
    mu: float = 1.0
    R: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == "power" and not 0.0 < self.mu <= 1.0:
            raise ValueError(f"power family needs mu in (0, 1], got {self.mu}")
        if not self.R > 0.0:
            raise ValueError(f"R must be positive, got {self.R}")

    @property
    def mu_eff(self) -> float:
        """Exponent in the shared closed forms: power mu, ratio 1, unit 0."""
        if self.family == "power":
            return self.mu
        return 1.0 if self.family == "ratio" else 0.0


def eval_f_fprime(spec: MultiplierSpec, r) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """f and f' sampled at r >= 0.

    Closed forms for f = (r/(R+r))^mu:
        f' = mu R r^(mu-1) / (R+r)^(mu+1).
    At r = 0 the derivative is 1/R for mu = 1 and +inf for mu < 1 (an
    integrable singularity; callers exclude the node).
    """
    r = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if np.any(r < 0.0):
        raise ValueError("radii must be nonnegative")
    if spec.family == "unit":
        return np.ones_like(r), np.zeros_like(r)
    mu, R = spec.mu_eff, spec.R
    f = (r / (R + r)) ** mu
    fp = np.empty_like(f)
    pos = r > 0.0
    fp[pos] = mu * R * r[pos] ** (mu - 1.0) / (R + r[pos]) ** (mu + 1.0)
    fp[~pos] = 1.0 / R if mu == 1.0 else np.inf
    return f, fp


def _mu_term(spec: MultiplierSpec, r: NDArray[np.float64]) -> NDArray[np.float64]:
    # mass part of -Lap(f/r): mu R r^(mu-2) / (R+r)^(mu+2), for r > 0
    mu, R = spec.mu_eff, spec.R
    return mu * R * r ** (mu - 2.0) / (R + r) ** (mu + 2.0)


def neg_laplacian_f_over_r(spec: MultiplierSpec, r, n: int = 3) -> NDArray[np.float64]:
    """-Lap(f/r) in closed form; nonnegative on r > 0 for every member.

    For f = (r/(R+r))^mu:
        -Lap(f/r) = r^(mu-3)/(R+r)^mu (n-3 + mu R/(R+r)) (1 - mu R/(R+r))
                    + mu R r^(mu-2)/(R+r)^(mu+2).
    The unit family is the mu = 0 member, giving (n-3)/r^3.
    """
    r = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if np.any(r < 0.0):
        raise ValueError("radii must be nonnegative")
    mu, R = spec.mu_eff, spec.R
    out = np.empty_like(r)
    pos = r > 0.0
    rp = r[pos]
    ratio = mu * R / (R + rp)
    out[pos] = (rp ** (mu - 3.0) / (R + rp) ** mu) * (n - 3.0 + ratio) * (1.0 - ratio)
    out[pos] += _mu_term(spec, rp)
    out[~pos] = 0.0 if (mu == 0.0 and n == 3) else np.inf
    return out


# ---------------------------------------------------------------------------
# sign-definite density


def q0_density(u: RadialProfile, ut: RadialProfile, spec: MultiplierSpec) -> RadialProfile:
    """Q0 = f'(u_r^2 + u_t^2)/2 + ((n-1)/4)(-Lap(f/r)) u^2 for a snapshot.

    Nonnegative at every node under the family sign conditions.  Where the
    weights blow up (the origin, for every member except unit in n = 3) the
    node is excluded: set to zero, and flagged "singular_origin" when the
    snapshot itself is nonzero there.  The density stays integrable against
    r^(n-1) dr regardless.
    """
    if u.grid != ut.grid:
        raise ValueError("snapshot profiles live on different grids")
    grid = u.grid
    r = grid.r
    ur = fd_radial_derivative(u).values
    _, fp = eval_f_fprime(spec, r)
    neglap = neg_laplacian_f_over_r(spec, r, grid.n)
    out = np.zeros(grid.num_points + 1)
    out[1:] = fp[1:] * (ur[1:] ** 2 + ut.values[1:] ** 2) / 2.0
    out[1:] += (grid.n - 1) / 4.0 * neglap[1:] * u.values[1:] ** 2
    flags = u.flags + tuple(fl for fl in ut.flags if fl not in u.flags)
    if np.isfinite(fp[0]) and np.isfinite(neglap[0]):
        out[0] = fp[0] * (ur[0] ** 2 + ut.values[0] ** 2) / 2.0
        out[0] += (grid.n - 1) / 4.0 * neglap[0] * u.values[0] ** 2
    else:
        peak = max(float(np.max(np.abs(u.values))), float(np.max(np.abs(ut.values))))
        origin = max(abs(float(u.values[0])), abs(float(ut.values[0])))
        if peak > 0.0 and origin > ORIGIN_REL_TOL * peak and "singular_origin" not in flags:
            flags = flags + ("singular_origin",)
    return RadialProfile(grid, out, flags=flags)


def q0_lower_bound_constant(spec: MultiplierSpec, grid: RadialGrid) -> tuple[float, float]:
    """Largest c with Q0 >= c (u_t^2 + u_r^2 + u^2/r^2)/(R^mu r^(1-mu)) on (0, R].

    Q0 is diagonal in (u_t, u_r, u/r), so the sharp grid constant is the
    nodal minimum of min(f'/2, ((n-1)/4)(-Lap(f/r)) r^2) R^mu r^(1-mu);
    returns (c, argmin radius).  Positive for the power family with mu < 1;
    decays to zero with the first node when mu = 1 (the mass part loses a
    power of r at the origin).
    """
    mask = (grid.r > 0.0) & (grid.r <= spec.R)
    if not np.any(mask):
        raise ValueError(f"grid has no nodes in (0, {spec.R}]")
    r = grid.r[mask]
    _, fp = eval_f_fprime(spec, r)
    neglap = neg_laplacian_f_over_r(spec, r, grid.n)
    mu = spec.mu_eff
    nodal = np.minimum(fp / 2.0, (grid.n - 1) / 4.0 * neglap * r**2)
    nodal = nodal * spec.R**mu * r ** (1.0 - mu)
    i = int(np.argmin(nodal))
    return float(nodal[i]), float(r[i])


@dataclass(frozen=True)
class SignConditionReport:
    """Worst margins of the pointwise sign conditions over a probe grid.

    Each entry maps a condition to min(LHS - RHS); nonnegative up to
    roundoff means the condition holds.  Shell entries compare the ratio
    family's coefficients on R/2 <= r <= R against the closed constants
    1/(4R) (gradient part, after the factor 1/2) and 1/(8 R^2 r) (mass
    part), both attained at r = R.
    """

    spec: MultiplierSpec
    n: int
    margins: dict[str, float]

    @property
    def passed(self) -> dict[str, bool]:
        return {name: m >= -SIGN_MARGIN_TOL for name, m in self.margins.items()}

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def sign_condition_report(spec: MultiplierSpec, n: int = 3) -> SignConditionReport:
    """Evaluate f <= 1, f' >= 0, f/r >= f', 2f - rf' >= f >= rf', -Lap(f/r) >= 0.

    Probes a log grid spanning [1e-6, 1e6] x R.  For mu = 1 members the
    report adds the shell coefficient margins described on the report type.
    """
    r = spec.R * np.logspace(-6.0, 6.0, 481)
    f, fp = eval_f_fprime(spec, r)
    neglap = neg_laplacian_f_over_r(spec, r, n)
    margins = {
        "f_le_one": float(np.min(1.0 - f)),
        "fprime_nonneg": float(np.min(fp)),
        "f_over_r_dominates_fprime": float(np.min(f / r - fp)),
        "doubling_lower": float(np.min((2.0 * f - r * fp) - f)),
        "f_dominates_r_fprime": float(np.min(f - r * fp)),
        "neg_laplacian_nonneg": float(np.min(neglap)),
    }
    if spec.mu_eff == 1.0:
        shell = np.linspace(spec.R / 2.0, spec.R, 257)
        _, fp_shell = eval_f_fprime(spec, shell)
        margins["shell_gradient_coefficient"] = float(np.min(fp_shell * 4.0 * spec.R) - 1.0)
        margins["shell_mass_coefficient"] = float(
            np.min(_mu_term(spec, shell) * 8.0 * spec.R**2 * shell) - 1.0
        )
    return SignConditionReport(spec, n, margins)


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class CoefficientField:
    """Metric perturbation g(t_m, r_i) for h = diag(-1, (1+g) delta^{jk}).

    delta0 in (0, 1) is the uniform-hyperbolicity margin; the field is
    usable in identities only while delta0 < 1 + g < 1/delta0 everywhere,
    which validate_hyperbolic enforces.
    """

    grid: RadialGrid
    times: NDArray[np.float64]
    g: NDArray[np.float64]
    delta0: float = 0.25

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "g", g)
        shape = (len(times), self.grid.num_points + 1)
        if g.shape != shape:
            raise ValueError(f"expected coefficient stack of shape {shape}, got {g.shape}")
        if len(times) < 2:
            raise ValueError("need at least two time levels")
        steps = np.diff(times)
        if not np.all(steps > 0.0) or np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
            raise ValueError("times must be uniformly increasing")
        if not np.all(np.isfinite(g)):
            raise ValueError("coefficients contain non-finite samples")
        if not 0.0 < self.delta0 < 1.0:
            raise ValueError(f"delta0 must lie in (0, 1), got {self.delta0}")

    @classmethod
    def static(
        cls, profile: RadialProfile, times, delta0: float = 0.25
    ) -> "CoefficientField":
        """Tile a time-independent g(r) over the given time levels."""
        times = np.asarray(times, dtype=np.float64)
        g = np.tile(profile.values, (len(times), 1))
        return cls(profile.grid, times, g, delta0)

    @classmethod
    def flat(cls, grid: RadialGrid, times, delta0: float = 0.25) -> "CoefficientField":
        """g identically zero (the unperturbed d'Alembertian)."""
        times = np.asarray(times, dtype=np.float64)
        return cls(grid, times, np.zeros((len(times), grid.num_points + 1)), delta0)

    @property
    def hyperbolicity_margin(self) -> float:
        """min distance of 1 + g to the open window (delta0, 1/delta0)."""
        lo = float(np.min(1.0 + self.g))
        hi = float(np.max(1.0 + self.g))
        return min(lo - self.delta0, 1.0 / self.delta0 - hi)

    def validate_hyperbolic(self) -> None:
        if self.hyperbolicity_margin <= 0.0:
            lo = float(np.min(1.0 + self.g))
            hi = float(np.max(1.0 + self.g))
            raise HyperbolicityError(
                f"1 + g spans [{lo:.6g}, {hi:.6g}], outside "
                f"({self.delta0:.6g}, {1.0 / self.delta0:.6g})"
            )


# ---------------------------------------------------------------------------
# residual checks

_AXES = ("t", "r")


def _inv_r(grid: RadialGrid) -> NDArray[np.float64]:
    out = np.zeros(grid.num_points + 1)
    out[1:] = 1.0 / grid.r[1:]
    return out


def _box_indices(
    u: SpaceTimeField,
    r_window: tuple[float, float] | None,
    t_window: tuple[float, float] | None,
) -> tuple[slice, slice]:
    """Index slices of the interior comparison box.

    Defaults exclude 3 radial nodes at each end and 2 time slices at each
    end.  Pass the coarsest level's windows to every refinement level so the
    box stays fixed in physical units; floating the box with the grid lets
    the 1/r factors spoil the order-2 rate near the origin.
    """
    grid = u.grid
    dr, dt = grid.spacing, u.dt
    if r_window is None:
        r_window = (3.0 * dr, grid.r_max - 3.0 * dr)
    if t_window is None:
        t_window = (float(u.times[0]) + 2.0 * dt, float(u.times[-1]) - 2.0 * dt)
    r_keep = np.nonzero(
        (grid.r >= r_window[0] - 1e-9 * dr) & (grid.r <= r_window[1] + 1e-9 * dr)
    )[0]
    t_keep = np.nonzero(
        (u.times >= t_window[0] - 1e-9 * dt) & (u.times <= t_window[1] + 1e-9 * dt)
    )[0]
    if r_keep.size == 0 or t_keep.size == 0:
        raise ValueError("interior box contains no nodes")
    if r_keep[0] == 0:
        raise ValueError("interior box must exclude the origin node")
    return slice(t_keep[0], t_keep[-1] + 1), slice(r_keep[0], r_keep[-1] + 1)


def building_block_residual(
    u: SpaceTimeField,
    alpha: str,
    beta: str,
    *,
    r_window: tuple[float, float] | None = None,
    t_window: tuple[float, float] | None = None,
) -> float:
    """Max interior-box defect of one exact product identity.

    With X u = u_r + ((n-1)/(2r)) u, each second-derivative product against
    X u is a divergence plus lower-order terms:

        u_tt Xu   = d_t(u_t Xu) - div_r(u_t^2 / 2)
        2 u_tr Xu = d_t(u_r Xu) + d_r(u_t Xu) - div_r(u_t u_r)
                    + (n-1) u u_t / (2 r^2)
        2 u_rr Xu = 2 d_r(u_r Xu) - div_r(u_r^2) + (n-1) u u_r / r^2

    All derivatives are 2nd-order centered differences of the value stack,
    so the defect shrinks at order 2 under simultaneous (dr, dt) refinement
    as long as the box is held fixed (see _box_indices).
    """
    if alpha not in _AXES or beta not in _AXES:
        raise ValueError(f"derivative axes must be in {_AXES}, got ({alpha!r}, {beta!r})")
    pair = alpha + beta if (alpha, beta) != ("r", "t") else "tr"
    grid = u.grid
    n, dr, dt = grid.n, grid.spacing, u.dt
    inv_r = _inv_r(grid)
    v = u.values
    ut = np.gradient(v, dt, axis=0)
    ur = np.gradient(v, dr, axis=1)
    X = ur + 0.5 * (n - 1) * inv_r * v

    def d_t(a: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.gradient(a, dt, axis=0)

    def d_r(a: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.gradient(a, dr, axis=1)

    def div_r(a: NDArray[np.float64]) -> NDArray[np.float64]:
        return d_r(a) + (n - 1) * inv_r * a

    if pair == "tt":
        lhs = d_t(ut) * X
        rhs = d_t(ut * X) - div_r(ut**2 / 2.0)
    elif pair == "tr":
        lhs = 2.0 * d_r(ut) * X
        rhs = d_t(ur * X) + d_r(ut * X) - div_r(ut * ur)
        rhs += (n - 1) / 2.0 * v * ut * inv_r**2
    else:
        lhs = 2.0 * d_r(ur) * X
        rhs = 2.0 * d_r(ur * X) - div_r(ur**2) + (n - 1) * v * ur * inv_r**2
    ts, rs = _box_indices(u, r_window, t_window)
    return float(np.max(np.abs((lhs - rhs)[ts, rs])))


class _IdentityPieces(NamedTuple):
    lhs: NDArray[np.float64]
    rhs: NDArray[np.float64]
    p0: NDArray[np.float64]
    radial_flux: NDArray[np.float64]
    volume: NDArray[np.float64]


def _identity_pieces(
    u: SpaceTimeField, coeff: CoefficientField, spec: MultiplierSpec
) -> _IdentityPieces:
    if coeff.grid != u.grid:
        raise ValueError("coefficient field lives on a different grid")
    if coeff.g.shape != u.values.shape or np.max(np.abs(coeff.times - u.times)) > 1e-9:
        raise ValueError("coefficient and field time levels disagree")
    coeff.validate_hyperbolic()
    grid = u.grid
    n, dr, dt = grid.n, grid.spacing, u.dt
    r = grid.r
    inv_r = _inv_r(grid)
    v = u.values
    g = coeff.g
    ut = np.gradient(v, dt, axis=0)
    ur = np.gradient(v, dr, axis=1)
    utt = np.gradient(ut, dt, axis=0)
    urr = np.gradient(ur, dr, axis=1)
    X = ur + 0.5 * (n - 1) * inv_r * v

    f, fp = eval_f_fprime(spec, r)
    neglap = neg_laplacian_f_over_r(spec, r, n)
    # (f/r)' = (r f' - f)/r^2; origin column is excluded by the box anyway
    f_over_r_prime = np.zeros_like(f)
    f_over_r_prime[1:] = (r[1:] * fp[1:] - f[1:]) * inv_r[1:] ** 2
    fp = np.where(np.isfinite(fp), fp, 0.0)
    neglap = np.where(np.isfinite(neglap), neglap, 0.0)

    lap = urr + (n - 1) * inv_r * ur
    lhs = f * X * (-utt + (1.0 + g) * lap)

    p0 = -f * ut * X
    pr = f * ((ut**2 - ur**2) / 2.0 + ur * X) - (n - 1) / 4.0 * v**2 * f_over_r_prime
    q0 = fp * (ut**2 + ur**2) / 2.0 + (n - 1) / 4.0 * neglap * v**2
    psi = ur**2 / 2.0 + (n - 1) / 2.0 * v * ur * inv_r
    fg = f * g
    fg_r = np.gradient(fg, dr, axis=1)
    radial_flux = pr + fg * psi
    volume = -q0 - fg_r * psi + (n - 1) / 2.0 * fg * v * ur * inv_r**2
    rhs = np.gradient(p0, dt, axis=0)
    rhs += np.gradient(radial_flux, dr, axis=1) + (n - 1) * inv_r * radial_flux
    rhs += volume
    return _IdentityPieces(lhs, rhs, p0, radial_flux, volume)


def identity_residual(
    u: SpaceTimeField,
    coeff: CoefficientField,
    spec: MultiplierSpec,
    *,
    r_window: tuple[float, float] | None = None,
    t_window: tuple[float, float] | None = None,
) -> float:
    """Max interior-box defect of the full multiplier identity.

    LHS = f Xu (h^{ab} d_a d_b u) with h = diag(-1, (1+g) delta^{jk}); the
    RHS is the exact expansion

        d_t P0 + div_r(Pr + f g psi) - Q0 - (f g)' psi
        + (n-1)/(2 r^2) f g u u_r,

    P0 = -f u_t Xu,
    Pr = f[(u_t^2 - u_r^2)/2 + u_r Xu] - ((n-1)/4) u^2 (f/r)',
    Q0 = f'(u_t^2 + u_r^2)/2 + ((n-1)/4)(-Lap(f/r)) u^2,
    psi = u_r^2/2 + ((n-1)/(2r)) u u_r.

    Raises HyperbolicityError when the coefficients leave their window.
    """
    pieces = _identity_pieces(u, coeff, spec)
    ts, rs = _box_indices(u, r_window, t_window)
    return float(np.max(np.abs((pieces.lhs - pieces.rhs)[ts, rs])))


def integrated_identity_gap(
    u: SpaceTimeField,
    coeff: CoefficientField,
    spec: MultiplierSpec,
    *,
    r_window: tuple[float, float] | None = None,
    t_window: tuple[float, float] | None = None,
) -> float:
    """Divergence-theorem bookkeeping over the interior box.

    Integrates the identity's LHS against r^(n-1) dr dt and compares with
    boundary values of the fluxes plus the integrated volume terms:

        int LHS = int [r^(n-1) P0]_{t0}^{t1} dr
                + int [r^(n-1) (Pr + f g psi)]_{r0}^{r1} dt
                + int volume terms.

    Returns the absolute gap; trapezoid quadrature keeps it at the same
    2nd order as the pointwise residual.
    """
    pieces = _identity_pieces(u, coeff, spec)
    ts, rs = _box_indices(u, r_window, t_window)
    grid = u.grid
    n, dr, dt = grid.n, grid.spacing, u.dt
    rw = grid.r[rs] ** (n - 1)

    def r_int(a: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.trapezoid(a * rw, dx=dr, axis=-1)

    lhs_int = float(np.trapezoid(r_int(pieces.lhs[ts, rs]), dx=dt))
    time_bdy = float(r_int(pieces.p0[ts, rs][-1]) - r_int(pieces.p0[ts, rs][0]))
    flux = pieces.radial_flux[ts, rs]
    rad_bdy = float(np.trapezoid(flux[:, -1] * rw[-1] - flux[:, 0] * rw[0], dx=dt))
    vol = float(np.trapezoid(r_int(pieces.volume[ts, rs]), dx=dt))
    return abs(lhs_int - (time_bdy + rad_bdy + vol))


def refinement_ratio(
    coarse: float,
    fine: float,
    *,
    window: tuple[float, float] = ORDER2_WINDOW,
    warn: bool = True,
) -> float:
    """Defect ratio for a 2x refinement; warns when order 2 looks broken.

    A smooth field should land the ratio near 4; values outside the window
    signal a rough field or a box that drifted with the grid.
    """
    if fine == 0.0:
        return float("inf") if coarse != 0.0 else float("nan")
    ratio = coarse / fine
    if warn and not window[0] <= ratio <= window[1]:
        warnings.warn(
            f"refinement ratio {ratio:.3g} outside {window}; "
            "order-2 convergence is in doubt",
            RuntimeWarning,
            stacklevel=2,
        )
    return ratio


# ---------------------------------------------------------------------------
# energy bookkeeping


class EnergyReport(NamedTuple):
    """Centered energy rates against the coefficient-gradient majorant.

    rates[m] is dE/dt at interior time m+1; bounds[m] the matching integral
    of (|g_t| + |g_r|) e0.  Callers compare max_rate against C * max_bound
    for a constant of their choosing.
    """

    rates: NDArray[np.float64]
    bounds: NDArray[np.float64]
    energies: NDArray[np.float64]
    max_rate: float
    max_bound: float


def energy_identity_report(u: SpaceTimeField, coeff: CoefficientField) -> EnergyReport:
    """Energy drift of a homogeneous solution against its allowed leak rate.

    E(t) = |S^{n-1}| int e0 r^(n-1) dr with e0 = ((1+g) u_r^2 + u_t^2)/2.
    For solutions of u_tt = (1+g) Lap u the continuum rate is controlled by
    int (|g_t| + |g_r|) e0, up to flux through the outer boundary (absent
    for fields supported away from r_max).
    """
    if coeff.grid != u.grid:
        raise ValueError("coefficient field lives on a different grid")
    if coeff.g.shape != u.values.shape or np.max(np.abs(coeff.times - u.times)) > 1e-9:
        raise ValueError("coefficient and field time levels disagree")
    coeff.validate_hyperbolic()
    grid = u.grid
    n, dr, dt = grid.n, grid.spacing, u.dt
    area = sphere_area(n)
    ur = np.gradient(u.values, dr, axis=1)
    e0 = ((1.0 + coeff.g) * ur**2 + u.dt_values**2) / 2.0
    weights = grid.r ** (n - 1)
    energies = area * np.trapezoid(e0 * weights, dx=dr, axis=1)
    g_t = np.gradient(coeff.g, dt, axis=0)
    g_r = np.gradient(coeff.g, dr, axis=1)
    majorant = area * np.trapezoid((np.abs(g_t) + np.abs(g_r)) * e0 * weights, dx=dr, axis=1)
    rates = (energies[2:] - energies[:-2]) / (2.0 * dt)
    bounds = majorant[1:-1]
    max_rate = float(np.max(np.abs(rates))) if rates.size else 0.0
    max_bound = float(np.max(bounds)) if bounds.size else 0.0
    return EnergyReport(rates, bounds, energies, max_rate, max_bound)
