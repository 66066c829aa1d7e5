"""Stochastic reaction-diffusion dynamics for a molecular concentration field.

The field lives on a uniform 1D grid with no-flux (reflecting) boundaries.
Each step treats diffusion and decay implicitly (unconditionally stable
tridiagonal solve) while sources and additive white noise enter explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy.linalg import solveh_banded


@dataclass(frozen=True)
class FieldParams:
    """Solver parameters: diffusion D, decay rate, noise amplitude, grid, dt."""

    diffusion: float = 0.1
    decay: float = 0.01
    noise: float = 0.0
    grid_min: float = 0.0
    grid_max: float = 10.0
    num_cells: int = 256
    dt: float = 0.01

    def __post_init__(self):
        if not (self.diffusion >= 0):
            raise ValueError(f"diffusion must be >= 0, got {self.diffusion}")
        if not (self.decay >= 0):
            raise ValueError(f"decay must be >= 0, got {self.decay}")
        if not (self.noise >= 0):
            raise ValueError(f"noise must be >= 0, got {self.noise}")
        if self.num_cells < 3:
            raise ValueError(f"num_cells must be >= 3, got {self.num_cells}")
        if not (self.grid_max > self.grid_min):
            raise ValueError("grid_max must exceed grid_min")
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @property
    def dx(self) -> float:
        return (self.grid_max - self.grid_min) / (self.num_cells - 1)

    def positions(self) -> np.ndarray:
        """Coordinates of the cell centers. Cached; treat as read-only."""
        return _grid_positions(self.grid_min, self.grid_max, self.num_cells)


@lru_cache(maxsize=32)
def _grid_positions(grid_min: float, grid_max: float, num_cells: int) -> np.ndarray:
    pos = np.linspace(grid_min, grid_max, num_cells)
    pos.flags.writeable = False
    return pos


@dataclass
class ConcentrationField:
    """Discretized concentration values plus the current simulation time.

    clamp_count records how many cells were clamped to zero by the step that
    produced this state (noise can push cells negative; clamping restores
    positivity).
    """

    values: np.ndarray
    time: float = 0.0
    clamp_count: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class SecretionProfile:
    """Gaussian secretion source: peak_rate * exp(-(x - center)^2 / (2 width^2))."""

    peak_rate: float = 1.0
    center: float = 4.0
    width: float = 0.5

    def __post_init__(self):
        if not (self.peak_rate >= 0):
            raise ValueError(f"peak_rate must be >= 0, got {self.peak_rate}")
        if not (self.width > 0):
            raise ValueError(f"width must be > 0, got {self.width}")


def zero_field(params: FieldParams) -> ConcentrationField:
    return ConcentrationField(values=np.zeros(params.num_cells), time=0.0)


def secretion_at(profile: SecretionProfile, x):
    """Secretion rate at position(s) x. Accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    rate = profile.peak_rate * np.exp(-((x - profile.center) ** 2) / (2.0 * profile.width**2))
    return rate if rate.ndim else float(rate)


def sample_noise(params: FieldParams, rng: np.random.Generator) -> np.ndarray:
    """Per-cell additive noise increment: sqrt(dt)-scaled i.i.d. N(0, noise^2).

    Cells are uncorrelated, the discrete analogue of delta-correlated
    spatiotemporal white noise. noise == 0 returns zeros without consuming
    the stream.
    """
    if params.noise == 0.0:
        return np.zeros(params.num_cells)
    return params.noise * np.sqrt(params.dt) * rng.standard_normal(params.num_cells)


def _implicit_system(params: FieldParams) -> np.ndarray:
    """Banded (upper) form of (1 + dt*decay)*I - dt*D*L for solveh_banded.

    L is the conservative no-flux Laplacian: row sums of L are zero and
    column sums vanish, so with decay = 0 the solve preserves total mass
    exactly (up to roundoff).
    """
    n = params.num_cells
    r = params.diffusion * params.dt / params.dx**2
    diag = np.full(n, 1.0 + params.decay * params.dt + 2.0 * r)
    diag[0] = 1.0 + params.decay * params.dt + r
    diag[-1] = 1.0 + params.decay * params.dt + r
    upper = np.full(n, -r)
    upper[0] = 0.0  # unused corner of the banded storage
    return np.vstack([upper, diag])


def step_field(
    field: ConcentrationField,
    params: FieldParams,
    sources: np.ndarray,
    rng: np.random.Generator,
) -> ConcentrationField:
    """Advance the field by dt.

    Solves (I - dt*D*L + dt*decay*I) C_new = C_old + dt*S + sqrt(dt)*noise*N
    with no-flux boundaries, then clamps negative cells to zero. The system
    matrix is symmetric positive definite for any D, decay, dt >= 0, so the
    solve cannot be singular.
    """
    sources = np.asarray(sources, dtype=float)
    if sources.shape != (params.num_cells,):
        raise ValueError(
            f"sources must have shape ({params.num_cells},), got {sources.shape}"
        )
    if not np.all(np.isfinite(field.values)):
        raise ValueError("field contains non-finite values")
    if not np.all(np.isfinite(sources)):
        raise ValueError("sources contain non-finite values")

    rhs = field.values + params.dt * sources + sample_noise(params, rng)
    new_values = solveh_banded(_implicit_system(params), rhs)

    negative = new_values < 0.0
    clamp_count = int(np.count_nonzero(negative))
    if clamp_count:
        new_values[negative] = 0.0

    return ConcentrationField(
        values=new_values, time=field.time + params.dt, clamp_count=clamp_count
    )


def gradient_profile(field: ConcentrationField, params: FieldParams) -> np.ndarray:
    """Spatial gradient per cell: central differences inside, one-sided at the ends."""
    return np.gradient(field.values, params.dx)


def gradient_at(field: ConcentrationField, params: FieldParams, cell_index: int) -> float:
    """Concentration gradient at one cell."""
    n = params.num_cells
    if not (0 <= cell_index < n):
        raise IndexError(f"cell_index {cell_index} out of range [0, {n})")
    v = field.values
    if cell_index == 0:
        return float((v[1] - v[0]) / params.dx)
    if cell_index == n - 1:
        return float((v[-1] - v[-2]) / params.dx)
    return float((v[cell_index + 1] - v[cell_index - 1]) / (2.0 * params.dx))


def value_at(field: ConcentrationField, params: FieldParams, x: float) -> float:
    """Linearly interpolated concentration at an arbitrary in-bounds position."""
    return float(np.interp(x, params.positions(), field.values))


def gradient_value_at(field: ConcentrationField, params: FieldParams, x: float) -> float:
    """Linearly interpolated spatial gradient at an arbitrary position."""
    return float(np.interp(x, params.positions(), gradient_profile(field, params)))


def peak_position(field: ConcentrationField, params: FieldParams) -> float:
    """Position of the maximum-concentration cell; ties go to the lowest index."""
    if field.values.size == 0:
        raise ValueError("field is empty")
    if np.all(np.isnan(field.values)):
        raise ValueError("field is all-NaN")
    idx = int(np.nanargmax(field.values))
    return float(params.positions()[idx])


def total_mass(field: ConcentrationField, params: FieldParams) -> float:
    """Integral of the field over the domain (rectangle rule)."""
    return float(np.sum(field.values) * params.dx)
