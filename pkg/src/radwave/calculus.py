"""Fractional and dyadic calculus on radial profiles.

Provides the multiplier operators D^theta = (-Laplacian)^{theta/2} and
P_j = phi(2^{-j} D) acting through the radial transform pair, spectral and
finite-difference radial derivatives, the multiplier field
X = d/dr + (n-1)/(2r), and power weights r^a <r>^b.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.fft import dct
from scipy.special import jv

from .grids import (
    RadialGrid,
    RadialProfile,
    SpectralProfile,
    bracket,
    forward_transform,
    inverse_transform,
)

MAX_ORDER = 4.0
DEFAULT_NEGATIVE_FLOOR = -2.0
HIGH_BAND_SHARE_TOL = 1e-8
ORIGIN_REL_TOL = 1e-9


# ---------------------------------------------------------------------------
# dyadic cutoffs


def smooth_step(x: NDArray[np.float64] | float) -> NDArray[np.float64] | float:
    """C^infinity step: 0 for x <= 0, 1 for x >= 1, built from the exp(-1/x) seed."""
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    lo = np.zeros_like(x)
    hi = np.zeros_like(x)
    pos = x > 0.0
    lo[pos] = np.exp(-1.0 / x[pos])
    neg = x < 1.0
    hi[neg] = np.exp(-1.0 / (1.0 - x[neg]))
    out = lo / (lo + hi)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DyadicCutoff:
    """Smooth dyadic partition of unity phi(2^{-j} xi) on the resolvable band.

    phi = S(xi) - S(2 xi) with S a smooth step equal to 1 on xi <= 1 and 0 on
    xi >= 2, so phi is supported in [1/2, 2], phi(1) = 1, and partial sums
    telescope exactly: sum_{j=a}^{b} phi(2^{-j} xi) = S(2^{-b} xi) - S(2^{1-a} xi).
    j_min and j_max bound the blocks whose support fits inside the grid's
    frequency window.
    """

    j_min: int
    j_max: int

    def __post_init__(self) -> None:
        if self.j_min > self.j_max:
            raise ValueError(f"empty dyadic band [{self.j_min}, {self.j_max}]")

    def low_pass(self, xi: NDArray[np.float64] | float) -> NDArray[np.float64]:
        """S(xi): 1 for xi <= 1, 0 for xi >= 2, smoothly decreasing between."""
        return smooth_step(2.0 - np.asarray(xi, dtype=np.float64))

    def phi(self, xi: NDArray[np.float64] | float) -> NDArray[np.float64]:
        return self.low_pass(xi) - self.low_pass(2.0 * np.asarray(xi, dtype=np.float64))

    @property
    def js(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def resolvable(self, j: int) -> bool:
        return self.j_min <= j <= self.j_max

    @classmethod
    def for_grid(cls, grid: RadialGrid) -> "DyadicCutoff":
        """Band such that supp phi(2^{-j} rho) = [2^{j-1}, 2^{j+1}] fits in
        [rho_1, rho_max]."""
        rho_1 = np.pi / grid.r_max
        rho_max = np.pi / grid.spacing
        j_min = math.ceil(math.log2(rho_1)) + 1
        j_max = math.floor(math.log2(rho_max)) - 1
        return cls(j_min=j_min, j_max=j_max)


def lp_project(f: RadialProfile, j: int, cutoff: DyadicCutoff | None = None) -> RadialProfile:
    """Littlewood-Paley block P_j f = phi(2^{-j} D) f.

    Out-of-band j returns the zero profile flagged "band_limit".
    """
    if cutoff is None:
        cutoff = DyadicCutoff.for_grid(f.grid)
    if not cutoff.resolvable(j):
        return RadialProfile(f.grid, np.zeros_like(f.values), flags=f.flags + ("band_limit",))
    fhat = forward_transform(f)
    mult = cutoff.phi(f.grid.rho * 2.0 ** (-j))
    return inverse_transform(fhat.with_values(fhat.values * mult))


# ---------------------------------------------------------------------------
# fractional derivative


def _high_band_share(spec_values: NDArray[np.float64], grid: RadialGrid) -> float:
    # share of spectral L^2 mass in the top half of the frequency window
    rho = grid.rho
    dens = spec_values**2 * rho ** (grid.n - 1)
    total = np.trapezoid(dens, rho)
    if total <= 0.0:
        return 0.0
    top = rho >= 0.5 * rho[-1]
    return float(np.trapezoid(dens[top], rho[top]) / total)


def fractional_derivative(
    f: RadialProfile, theta: float, *, allow_deep_negative: bool = False
) -> RadialProfile:
    """D^theta f for |theta| <= 4 via the spectral multiplier rho^theta.

    For theta < 0 the rho = 0 mode is set to its analytic limit, zero, which
    is exact on profiles whose spectrum vanishes at the origin; deeper orders
    than the default floor -2 require allow_deep_negative and carry a flag.

    Raises:
        ValueError: theta outside the supported multiplier range.
    """
    n = f.grid.n
    if abs(theta) > MAX_ORDER:
        raise ValueError(f"|theta| <= {MAX_ORDER} supported, got {theta}")
    if theta <= -n:
        raise ValueError(f"need theta > -n = {-n}, got {theta}")
    if theta == 0.0:
        return RadialProfile(f.grid, f.values.copy(), flags=f.flags)
    flags = f.flags
    if theta < DEFAULT_NEGATIVE_FLOOR:
        if not allow_deep_negative:
            raise ValueError(
                f"theta = {theta} below the default floor {DEFAULT_NEGATIVE_FLOOR}; "
                "pass allow_deep_negative=True to proceed"
            )
        flags = flags + ("deep_negative_order",)
    fhat = forward_transform(f)
    rho = f.grid.rho
    out_hat = np.empty_like(fhat.values)
    out_hat[1:] = fhat.values[1:] * rho[1:] ** theta
    out_hat[0] = fhat.values[0] if theta == 0.0 else 0.0
    if _high_band_share(out_hat, f.grid) > HIGH_BAND_SHARE_TOL:
        flags = flags + ("resolution_warning",)
    out = inverse_transform(SpectralProfile(f.grid, out_hat, flags=flags))
    return out


# ---------------------------------------------------------------------------
# radial derivatives


@functools.lru_cache(maxsize=8)
def _hankel_derivative_matrix(grid: RadialGrid) -> NDArray[np.float64]:
    # u'(r) = -(2 pi)^{-n/2} r^{-nu} int fhat(rho) J_{nu+1}(r rho) rho^{n/2+1} drho
    n, r, rho, drho = grid.n, grid.r, grid.rho, np.pi / grid.r_max
    nu = (n - 2) / 2.0
    w = np.full(grid.num_points + 1, drho)
    w[0] = w[-1] = drho / 2.0
    mat = np.zeros((grid.num_points + 1, grid.num_points + 1))
    rr = np.outer(r[1:], rho)
    mat[1:] = (
        -((2.0 * np.pi) ** (-n / 2.0))
        * r[1:, None] ** (-nu)
        * jv(nu + 1.0, rr)
        * rho[None, :] ** (n / 2.0 + 1.0)
        * w[None, :]
    )
    mat[:, 0] = 0.0
    return mat


def spectral_radial_derivative(f: RadialProfile) -> RadialProfile:
    """d/dr of a smooth radial profile through its transform.

    n = 3 differentiates v = r f via a cosine sum of the sine coefficients and
    uses u' = (v' - u)/r; odd n >= 5 applies the Bessel-kernel matrix.  The
    origin derivative is 0, the even-extension limit.
    """
    grid = f.grid
    out = np.empty_like(f.values)
    if grid.n == 3:
        fhat = forward_transform(f)
        rho, drho = grid.rho, np.pi / grid.r_max
        # v'(r_i) = (drho/(2 pi^2)) * sum_k fhat_k rho_k^2 cos(pi i k / N),
        # trapezoid endpoints folded in by DCT-I's half-weight convention
        c = fhat.values * rho**2
        vr = drho / (2.0 * np.pi**2) * dct(c, type=1) / 2.0
        out[1:] = (vr[1:] - f.values[1:]) / grid.r[1:]
        out[0] = 0.0
    else:
        out = _hankel_derivative_matrix(grid) @ forward_transform(f).values
    return RadialProfile(grid, out, flags=f.flags)


def _fd_weights(offsets: NDArray[np.int64], order: int) -> NDArray[np.float64]:
    # solve the Vandermonde system: exactness on monomials up to len(offsets)-1
    m = len(offsets)
    vander = np.vander(offsets.astype(np.float64), m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


@functools.lru_cache(maxsize=4)
def _fd6_stencils() -> dict[int, NDArray[np.float64]]:
    # first-derivative weights on a 7-point stencil; key = index of the
    # evaluation point inside the stencil
    return {
        pos: _fd_weights(np.arange(7) - pos, 1) for pos in range(7)
    }


def fd_radial_derivative(f: RadialProfile) -> RadialProfile:
    """6th-order finite-difference d/dr; local, so origin singularities do not
    pollute the far field."""
    vals = f.values
    num = len(vals)
    if num < 7:
        raise ValueError("need at least 7 nodes for the 6th-order stencil")
    stencils = _fd6_stencils()
    out = np.empty_like(vals)
    centered = stencils[3]
    out[3 : num - 3] = np.convolve(vals, centered[::-1], mode="valid")
    for i in range(3):
        out[i] = stencils[i] @ vals[:7]
        out[num - 1 - i] = stencils[6 - i] @ vals[-7:]
    out /= f.grid.spacing
    return RadialProfile(f.grid, out, flags=f.flags)


# ---------------------------------------------------------------------------
# the multiplier field X


def x_multiplier_apply(u: RadialProfile) -> RadialProfile:
    """X u = u' + ((n-1)/(2r)) u.

    At r = 0: profiles with u(0) = 0 get the limit ((n+1)/2) u'(0); otherwise
    the node is zeroed and the result is flagged "singular_origin" so
    downstream quadratures skip it.
    """
    grid = u.grid
    r = grid.r
    du = fd_radial_derivative(u).values
    out = np.empty_like(u.values)
    out[1:] = du[1:] + (grid.n - 1) / (2.0 * r[1:]) * u.values[1:]
    peak = float(np.max(np.abs(u.values)))
    flags = u.flags
    if peak > 0.0 and abs(u.values[0]) > ORIGIN_REL_TOL * peak:
        out[0] = 0.0
        flags = flags + ("singular_origin",)
    else:
        out[0] = (grid.n + 1) / 2.0 * du[0]
    return RadialProfile(grid, out, flags=flags)


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightSpec:
    """Radial weight r^a <r>^b with Muckenhoupt admissibility tests.

    a is the homogeneous exponent (behaviour at r = 0), a + b the global one
    (behaviour at infinity).
    """

    a: float = 0.0
    b: float = 0.0

    def a_p_admissible(self, p: float, n: int) -> bool:
        """Classical power-weight criterion: both the local exponent a and the
        global exponent a + b lie in (-n, n(p-1)) (upper end closed at p = 1)."""
        if p < 1.0:
            raise ValueError(f"need p >= 1, got {p}")
        upper = n * (p - 1.0)

        def ok(e: float) -> bool:
            return -n < e <= upper if p == 1.0 else -n < e < upper

        return ok(self.a) and ok(self.a + self.b)

    def in_reference_box(self, n: int) -> bool:
        """Sufficient box a <= 0, b <= 0, a + b > -n: inside it the weight is
        A_p for every p in [1, infinity)."""
        return self.a <= 0.0 and self.b <= 0.0 and self.a + self.b > -n

    def values_on(self, grid: RadialGrid) -> NDArray[np.float64]:
        r = grid.r
        out = np.empty(grid.num_points + 1)
        out[1:] = r[1:] ** self.a * bracket(r[1:]) ** self.b
        if self.a > 0.0:
            out[0] = 0.0
        elif self.a == 0.0:
            out[0] = 2.0 ** (self.b / 2.0)  # <0> = sqrt(2)
        else:
            out[0] = 0.0  # singular limit; apply_weight flags the node
        return out


def apply_weight(f: RadialProfile, w: WeightSpec) -> RadialProfile:
    """Pointwise multiply by r^a <r>^b; a singular origin node is zeroed and
    flagged rather than propagated as inf."""
    out = f.values * w.values_on(f.grid)
    flags = f.flags
    if w.a < 0.0 and f.values[0] != 0.0:
        flags = flags + ("singular_origin",)
    return RadialProfile(f.grid, out, flags=flags)
