"""Radial grids, sampled radial profiles, and the radial Fourier transform pair.

A radial function f(|x|) on R^n (n odd, >= 3) is sampled on the uniform grid
r_i = i*dr, i = 0..num_points.  Its radial Fourier transform lives on the dual
grid rho_k = k*pi/r_max, chosen so that r_i * rho_k = pi*i*k/N matches the
kernel of the type-I discrete sine transform.  For n = 3 the transform pair is

    fhat(rho) = (4*pi/rho) * int_0^inf f(r) sin(r*rho) r dr,
    f(r)      = (1/(2*pi^2*r)) * int_0^inf fhat(rho) sin(r*rho) rho drho,

evaluated exactly by a fast sine transform of r*f(r).  For odd n >= 5 the
Bessel-kernel form is used with trapezoid quadrature:

    fhat(rho) = (2*pi)^{n/2} rho^{-(n-2)/2} int_0^inf f(r) J_{(n-2)/2}(r*rho) r^{n/2} dr.

With these conventions a Gaussian e^{-r^2/2} maps to (2*pi)^{n/2} e^{-rho^2/2}
and Parseval reads ||f||_{L^2(R^n)}^2 = (2*pi)^{-n} ||fhat||_{L^2}^2.
"""

from __future__ import annotations

import functools
import struct
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray
from scipy.fft import dst
from scipy.special import gamma, jv

SUPPORT_FRACTION = 0.9
SUPPORT_DECAY_TOL = 1e-12
BINARY_MAGIC = b"RWL1"


class UnsupportedDimensionError(ValueError):
    """Spatial dimension is not an odd integer >= 3."""


class InvalidProfileError(ValueError):
    """Profile samples are non-finite or break the declared support bound."""


class NonIntegrableWeightError(ValueError):
    """Weight exponent makes r^a r^{n-1} non-integrable at the origin."""


def sphere_area(n: int) -> float:
    """Surface measure |S^{n-1}| of the unit sphere in R^n."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0))


def bracket(r: NDArray[np.float64] | float) -> NDArray[np.float64] | float:
    """Japanese bracket <r> = sqrt(2 + r^2)."""
    return np.sqrt(2.0 + np.square(r))


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid r_i = i*dr, i = 0..num_points, r_max = num_points*dr.

    Args:
        n: spatial dimension; must be odd and >= 3.
        r_max: outer radius.
        num_points: number of cells; the grid has num_points + 1 nodes
            including r = 0.
    """

    n: int = 3
    r_max: float = 64.0
    num_points: int = 4096

    def __post_init__(self) -> None:
        if self.n < 3 or self.n % 2 == 0:
            raise UnsupportedDimensionError(
                f"dimension must be odd and >= 3, got n={self.n}"
            )
        if not np.isfinite(self.r_max) or self.r_max <= 0:
            raise ValueError(f"r_max must be positive and finite, got {self.r_max}")
        if self.num_points < 8:
            raise ValueError(f"num_points must be >= 8, got {self.num_points}")

    @property
    def spacing(self) -> float:
        """Node spacing dr."""
        return self.r_max / self.num_points

    @property
    def r(self) -> NDArray[np.float64]:
        """Node positions, shape (num_points + 1,)."""
        return np.linspace(0.0, self.r_max, self.num_points + 1)

    @property
    def rho(self) -> NDArray[np.float64]:
        """Dual frequency nodes rho_k = k*pi/r_max, shape (num_points + 1,)."""
        return np.arange(self.num_points + 1) * (np.pi / self.r_max)

    def refined(self, factor: int = 2) -> "RadialGrid":
        """Same physical domain with num_points scaled by `factor`."""
        return replace(self, num_points=self.num_points * factor)


@dataclass(frozen=True)
class RadialProfile:
    """Samples f(r_i) of a radial function on a RadialGrid.

    Args:
        grid: the sampling grid.
        values: real samples, length grid.num_points + 1.
        r_supp: optional declared support radius; when given it must satisfy
            r_supp <= 0.9*r_max and all samples beyond it must sit below
            1e-12 of the profile's max, so transforms see no boundary wrap.
        flags: diagnostic markers propagated by operations
            (e.g. "resolution_warning", "singular_origin").
    """

    grid: RadialGrid
    values: NDArray[np.float64]
    r_supp: float | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.num_points + 1,):
            raise InvalidProfileError(
                f"expected {self.grid.num_points + 1} samples, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidProfileError("profile contains non-finite samples")
        if self.r_supp is not None:
            if self.r_supp > SUPPORT_FRACTION * self.grid.r_max:
                raise InvalidProfileError(
                    f"declared support {self.r_supp} exceeds "
                    f"{SUPPORT_FRACTION}*r_max = {SUPPORT_FRACTION * self.grid.r_max}"
                )
            peak = float(np.max(np.abs(vals)))
            tail = vals[self.grid.r > self.r_supp]
            if peak > 0 and tail.size and np.max(np.abs(tail)) > SUPPORT_DECAY_TOL * peak:
                raise InvalidProfileError(
                    "samples beyond the declared support radius exceed the decay tolerance"
                )

    def with_values(self, values: NDArray[np.float64], *, extra_flags: tuple[str, ...] = ()) -> "RadialProfile":
        """New profile on the same grid; declared support is not carried over."""
        return RadialProfile(self.grid, values, flags=self.flags + extra_flags)

    def effective_support_radius(self, rel_tol: float = SUPPORT_DECAY_TOL) -> float:
        """Largest radius where |f| still exceeds rel_tol * max|f| (0 if f == 0)."""
        peak = float(np.max(np.abs(self.values)))
        if peak == 0.0:
            return 0.0
        live = np.nonzero(np.abs(self.values) > rel_tol * peak)[0]
        return float(self.grid.r[live[-1]]) if live.size else 0.0


@dataclass(frozen=True)
class SpectralProfile:
    """Samples fhat(rho_k) on the frequency grid dual to `grid`."""

    grid: RadialGrid
    values: NDArray[np.float64]
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.num_points + 1,):
            raise InvalidProfileError(
                f"expected {self.grid.num_points + 1} samples, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidProfileError("spectrum contains non-finite samples")

    def with_values(self, values: NDArray[np.float64], *, extra_flags: tuple[str, ...] = ()) -> "SpectralProfile":
        return SpectralProfile(self.grid, values, flags=self.flags + extra_flags)


# ---------------------------------------------------------------------------
# transforms


def _sine_quad_sum(x: NDArray[np.float64]) -> NDArray[np.float64]:
    # sum_{m=1}^{N-1} x_m sin(pi*m*k/N) for k = 1..N-1; scipy's DST-I carries
    # an extra factor 2.
    return dst(x, type=1) / 2.0


@functools.lru_cache(maxsize=8)
def _hankel_forward_matrix(grid: RadialGrid) -> NDArray[np.float64]:
    # Rows k = 0..N of fhat = M @ f, trapezoid in r with the analytic rho = 0 row.
    n, r, rho, dr = grid.n, grid.r, grid.rho, grid.spacing
    nu = (n - 2) / 2.0
    w = np.full(grid.num_points + 1, dr)
    w[0] = w[-1] = dr / 2.0
    mat = np.empty((grid.num_points + 1, grid.num_points + 1))
    mat[0] = w * (2.0 * np.pi) ** (n / 2.0) / (2.0**nu * gamma(nu + 1.0)) * r ** (n - 1)
    rr = np.outer(rho[1:], r)
    mat[1:] = (
        (2.0 * np.pi) ** (n / 2.0)
        * rho[1:, None] ** (-nu)
        * jv(nu, rr)
        * r[None, :] ** (n / 2.0)
        * w[None, :]
    )
    mat[:, 0] = 0.0  # r^{n/2} and r^{n-1} vanish at the origin node
    return mat


@functools.lru_cache(maxsize=8)
def _hankel_inverse_matrix(grid: RadialGrid) -> NDArray[np.float64]:
    n, r, rho, drho = grid.n, grid.r, grid.rho, np.pi / grid.r_max
    nu = (n - 2) / 2.0
    w = np.full(grid.num_points + 1, drho)
    w[0] = w[-1] = drho / 2.0
    mat = np.empty((grid.num_points + 1, grid.num_points + 1))
    mat[0] = w / ((2.0 * np.pi) ** (n / 2.0) * 2.0**nu * gamma(nu + 1.0)) * rho ** (n - 1)
    rr = np.outer(r[1:], rho)
    mat[1:] = (
        (2.0 * np.pi) ** (-n / 2.0)
        * r[1:, None] ** (-nu)
        * jv(nu, rr)
        * rho[None, :] ** (n / 2.0)
        * w[None, :]
    )
    mat[:, 0] = 0.0  # rho^{n/2} kills the rho = 0 column
    return mat


def forward_transform(f: RadialProfile) -> SpectralProfile:
    """Radial Fourier transform of a profile.

    For n = 3 the sine-transform fast path is exact on the DST-I lattice; the
    rho = 0 mode is the analytic limit 4*pi * int f r^2 dr.  For odd n >= 5 a
    cached Bessel-kernel trapezoid matrix is applied.

    Raises:
        InvalidProfileError: propagated from profile validation (NaN input).
    """
    grid = f.grid
    out = np.empty(grid.num_points + 1)
    if grid.n == 3:
        r = grid.r
        out[1:-1] = 4.0 * np.pi * grid.spacing * _sine_quad_sum(r[1:-1] * f.values[1:-1]) / grid.rho[1:-1]
        out[0] = 4.0 * np.pi * np.trapezoid(f.values * r**2, r)
        out[-1] = 0.0  # Nyquist row: every kernel sample sin(pi*i) vanishes
    else:
        out = _hankel_forward_matrix(grid) @ f.values
    return SpectralProfile(grid, out, flags=f.flags)


def inverse_transform(F: SpectralProfile) -> RadialProfile:
    """Inverse radial Fourier transform; exact inverse of `forward_transform`
    on interior nodes for n = 3, trapezoid Bessel quadrature for odd n >= 5."""
    grid = F.grid
    out = np.empty(grid.num_points + 1)
    if grid.n == 3:
        rho, drho = grid.rho, np.pi / grid.r_max
        out[1:-1] = drho * _sine_quad_sum(rho[1:-1] * F.values[1:-1]) / (
            2.0 * np.pi**2 * grid.r[1:-1]
        )
        out[0] = np.trapezoid(F.values * rho**2, rho) / (2.0 * np.pi**2)
        out[-1] = 0.0
    else:
        out = _hankel_inverse_matrix(grid) @ F.values
    return RadialProfile(grid, out, flags=F.flags)


# ---------------------------------------------------------------------------
# quadrature


def integrate_weighted(f: RadialProfile, a: float, b: float) -> float:
    """Weighted squared integral int |f|^2 r^a <r>^b r^{n-1} dr * |S^{n-1}|.

    Trapezoid rule over the grid.  The r = 0 node uses the analytic limit of
    the integrand: 0 when a + n - 1 > 0, the finite value |f(0)|^2 <0>^b when
    a + n - 1 = 0, and for -n < a < 1 - n the first cell is replaced by the
    exact power-cell integral with the integrand's slowly-varying part frozen
    at the origin.

    Raises:
        NonIntegrableWeightError: when a <= -n.
    """
    if a <= -f.grid.n:
        raise NonIntegrableWeightError(f"need a > -n = {-f.grid.n}, got a = {a}")
    grid = f.grid
    r = grid.r
    power = a + grid.n - 1
    integrand = np.empty(grid.num_points + 1)
    integrand[1:] = f.values[1:] ** 2 * r[1:] ** power * bracket(r[1:]) ** b
    if power > 0:
        integrand[0] = 0.0
        total = np.trapezoid(integrand, r)
    elif power == 0:
        integrand[0] = f.values[0] ** 2 * 2.0 ** (b / 2.0)
        total = np.trapezoid(integrand, r)
    else:
        # integrable singularity: int_0^dr r^power dr = dr^{power+1}/(power+1)
        cell = f.values[0] ** 2 * 2.0 ** (b / 2.0) * grid.spacing**power * grid.spacing / (power + 1.0)
        integrand[0] = 0.0
        total = cell + np.trapezoid(integrand[1:], r[1:])
    return float(total * sphere_area(grid.n))


def l2_norm(f: RadialProfile) -> float:
    """Plain L^2(R^n) norm of the radial profile."""
    return float(np.sqrt(integrate_weighted(f, 0.0, 0.0)))


# ---------------------------------------------------------------------------
# serialization


def write_csv(f: RadialProfile, path: str) -> None:
    """Two-column CSV (r, value) with a header row; deterministic formatting."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("r,value\n")
        for ri, vi in zip(f.grid.r, f.values):
            fh.write(f"{float(ri)!r},{float(vi)!r}\n")


def read_csv(path: str, n: int) -> RadialProfile:
    """Read a (r, value) CSV back into a profile; the grid is rebuilt from the
    r column and the caller-supplied dimension."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    r, values = data[:, 0], data[:, 1]
    grid = RadialGrid(n=n, r_max=float(r[-1]), num_points=len(r) - 1)
    return RadialProfile(grid, values)


def write_binary(f: RadialProfile, path: str) -> None:
    """Binary dump: magic "RWL1", little-endian header (n, num_points, r_max),
    then the f64 sample array."""
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<qqd", f.grid.n, f.grid.num_points, f.grid.r_max))
        fh.write(f.values.astype("<f8").tobytes())


def read_binary(path: str) -> RadialProfile:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BINARY_MAGIC:
            raise InvalidProfileError(f"bad magic bytes {magic!r}")
        n, num_points, r_max = struct.unpack("<qqd", fh.read(24))
        values = np.frombuffer(fh.read(8 * (num_points + 1)), dtype="<f8")
    grid = RadialGrid(n=int(n), r_max=r_max, num_points=int(num_points))
    return RadialProfile(grid, values.copy())
