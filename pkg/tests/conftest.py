"""Shared fixtures: grids, smooth test profiles, and analytic space-time fields."""

import numpy as np
import pytest

from radwave.grids import RadialGrid, RadialProfile
from radwave.norms import SpaceTimeField


def smooth_bump(r: np.ndarray, center: float, width: float) -> np.ndarray:
    """C^infty bump exp(-1/(1-x^2)) with x = (r-center)/width, zero outside."""
    x = (r - center) / width
    out = np.zeros_like(r)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def random_smooth_profile(grid: RadialGrid, rng: np.random.Generator,
                          num_bumps: int = 4, r_supp: float = 24.0) -> RadialProfile:
    """Random superposition of symmetrized Gaussians with compact support.

    Symmetrization in r keeps the profile an even smooth function, i.e. a
    genuinely smooth radial function on R^n, so its spectrum decays fast and
    round trips hit the band-limited tolerance.
    """
    r = grid.r
    vals = np.zeros_like(r)
    for _ in range(num_bumps):
        center = rng.uniform(0.0, 0.5 * r_supp)
        width = rng.uniform(0.5, 3.0)
        amp = rng.uniform(-1.0, 1.0)
        vals += amp * (np.exp(-((r - center) / width) ** 2)
                       + np.exp(-((r + center) / width) ** 2))
    # taper to exactly compact support so declared-support checks hold
    vals *= smooth_bump(r, 0.0, r_supp)
    return RadialProfile(grid, vals, r_supp=r_supp)


def analytic_field(grid: RadialGrid, rng: np.random.Generator, T: float,
                   steps: int | None = None, num_modes: int = 3) -> SpaceTimeField:
    """Separable field sum_k a_k cos(w_k t + phi_k) f_k(r) with an exact
    time-derivative stack."""
    if steps is None:
        steps = max(32, min(int(8 * T), 160))
    times = np.linspace(0.0, T, steps + 1)
    values = np.zeros((steps + 1, grid.num_points + 1))
    dt_values = np.zeros_like(values)
    for _ in range(num_modes):
        w = rng.uniform(0.2, 1.5)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        prof = random_smooth_profile(grid, rng, num_bumps=2,
                                     r_supp=min(24.0, 0.75 * grid.r_max)).values
        values += np.cos(w * times)[:, None] * np.cos(phase) * prof[None, :]
        values += np.sin(w * times)[:, None] * np.sin(phase) * prof[None, :]
        dt_values += -w * np.sin(w * times)[:, None] * np.cos(phase) * prof[None, :]
        dt_values += w * np.cos(w * times)[:, None] * np.sin(phase) * prof[None, :]
    return SpaceTimeField(grid, times, values, dt_values)


@pytest.fixture
def grid3() -> RadialGrid:
    return RadialGrid(n=3, r_max=64.0, num_points=4096)


@pytest.fixture
def grid5() -> RadialGrid:
    return RadialGrid(n=5, r_max=32.0, num_points=512)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)
