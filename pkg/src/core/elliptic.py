"""
Node grid on (0, pi) and the screened-Poisson solve V'' - (V - K)/R^2 = 0
with Neumann ends.

The local elliptic solve is the production path. The periodic exponential
kernel convolution is kept as an independent oracle for it.
"""

import functools
import logging
import math

import numpy as np
from scipy.linalg import solve_banded

from src.utils import config

logger = logging.getLogger(__name__)


class Grid:
    """Uniform node grid x_i = i h, i = 0..n_cells, h = pi / n_cells."""

    def __init__(self, n_cells=config.DEFAULT_N_CELLS):
        n_cells = int(n_cells)
        if n_cells < config.MIN_CELLS or n_cells % 2:
            raise ValueError(f"n_cells must be even and >= {config.MIN_CELLS}, got {n_cells}")
        self.n_cells = n_cells
        self.h = math.pi / n_cells
        self.nodes = self.h * np.arange(n_cells + 1)
        weights = np.ones(n_cells + 1)
        weights[0] = weights[-1] = 0.5
        self.weights = weights * self.h

    @property
    def size(self):
        return self.n_cells + 1

    def integrate(self, values):
        """Trapezoid integral over (0, pi)."""
        return float(np.dot(self.weights, values))

    def mean(self, values):
        return self.integrate(values) / math.pi

    def reflect(self, values, closed=False):
        """
        Even reflection about x = 0 onto [-pi, pi).

        Args:
            values: Node values on [0, pi]
            closed: Also include the right end x = pi

        Returns:
            (x, reflected values)
        """
        values = np.asarray(values)
        n = self.n_cells
        count = 2 * n + 1 if closed else 2 * n
        j = np.arange(count)
        return -math.pi + self.h * j, values[np.abs(j - n)]

    def cosine(self, n, amplitude=1.0):
        return amplitude * np.cos(n * self.nodes)

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n_cells == self.n_cells

    def __hash__(self):
        return hash(self.n_cells)

    def __repr__(self):
        return f"Grid(n_cells={self.n_cells})"


class Field:
    """Node samples aligned with a grid."""

    def __init__(self, values, grid):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise ValueError(f"Field needs {grid.size} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Field values must be finite")
        self.values = values
        self.grid = grid


def _values(field):
    return field.values if isinstance(field, Field) else np.asarray(field, dtype=float)


@functools.lru_cache(maxsize=32)
def _laplacian_bands(n_cells):
    h = math.pi / n_cells
    size = n_cells + 1
    bands = np.zeros((3, size))
    bands[0, 1:] = 1.0
    bands[0, 1] = 2.0
    bands[1, :] = -2.0
    bands[2, :-1] = 1.0
    bands[2, -2] = 2.0
    bands /= h * h
    bands.flags.writeable = False
    return bands


def neumann_laplacian(grid, dense=False):
    """
    Second-difference Laplacian with ghost nodes V_{-1} = V_1, V_{N+1} = V_{N-1}.

    Returns:
        (3, N+1) array in solve_banded layout, or the dense matrix
    """
    bands = _laplacian_bands(grid.n_cells)
    if not dense:
        return bands
    matrix = np.diag(bands[1])
    matrix += np.diag(bands[0, 1:], 1)
    matrix += np.diag(bands[2, :-1], -1)
    return matrix


def apply_laplacian(values, grid):
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    h2 = grid.h * grid.h
    out[1:-1] = (values[:-2] - 2.0 * values[1:-1] + values[2:]) / h2
    out[0] = 2.0 * (values[1] - values[0]) / h2
    out[-1] = 2.0 * (values[-2] - values[-1]) / h2
    return out


def discrete_symbol(n, grid):
    """Eigenvalue of the discrete Laplacian for cos(n x): -4 sin^2(n h / 2) / h^2."""
    return -4.0 * math.sin(0.5 * n * grid.h) ** 2 / grid.h ** 2


@functools.lru_cache(maxsize=64)
def shifted_bands(n_cells, scale):
    """Bands of I - scale * L, used by the screened solve and implicit diffusion."""
    bands = -scale * _laplacian_bands(n_cells)
    bands[1] += 1.0
    return bands


def solve_screened(K, R, grid):
    """
    Solve -R^2 V'' + V = K on the grid (banded LU, the Thomas elimination).

    Args:
        K: Field or array of node values
        R: Perceptual radius
        grid: Grid

    Returns:
        numpy array V
    """
    assert R > 0, "screened solve needs R > 0"
    rhs = _values(K)
    bands = shifted_bands(grid.n_cells, R * R)
    return solve_banded((1, 1), bands, rhs, check_finite=False)


def screened_residual(V, K, R, grid):
    """Relative residual of the discrete screened system."""
    V = np.asarray(V, dtype=float)
    K = _values(K)
    residual = V - R * R * apply_laplacian(V, grid) - K
    return float(np.max(np.abs(residual)) / max(1.0, np.max(np.abs(K))))


def periodic_kernel(z, R, periods):
    """Exponential kernel e^{-|z|/R} / (2R) summed over 2*periods + 1 copies of period 2 pi."""
    total = np.zeros_like(z)
    for m in range(-periods, periods + 1):
        total += np.exp(-np.abs(z + 2.0 * math.pi * m) / R)
    return total / (2.0 * R)


def kernel_periods(R, tail=config.KERNEL_TAIL_MASS):
    return max(1, math.ceil(R * math.log(1.0 / tail)))


def convolve_exponential(k_half, R, grid):
    """
    G * k for the exponential kernel, by trapezoid quadrature of the even
    2 pi-periodic extension of k_half.

    Args:
        k_half: Node values on [0, pi]
        R: Perceptual radius
        grid: Grid

    Returns:
        numpy array of G * k at the grid nodes
    """
    values = _values(k_half)
    y, k_full = grid.reflect(values)
    periods = kernel_periods(R)
    distances = grid.nodes[:, None] - y[None, :]
    kernel = periodic_kernel(distances, R, periods)
    logger.debug("convolution with %d periods each side on %r", periods, grid)
    return grid.h * kernel.dot(k_full)


def verify_equivalence(grid, R, n_modes=6, seed=config.DEFAULT_SEED):
    """
    Compare solve_screened with convolve_exponential on a random smooth even field.

    Returns:
        dict with the field and the max abs discrepancy
    """
    rng = np.random.default_rng(seed)
    coefficients = rng.uniform(-1.0, 1.0, n_modes + 1) / (1.0 + np.arange(n_modes + 1)) ** 2
    K = sum(c * np.cos(n * grid.nodes) for n, c in enumerate(coefficients)) + 1.0
    local = solve_screened(K, R, grid)
    nonlocal_ = convolve_exponential(K, R, grid)
    discrepancy = float(np.max(np.abs(local - nonlocal_)))
    logger.info("equivalence check on %r, R=%g: max discrepancy %.3e", grid, R, discrepancy)
    return {'K': K, 'local': local, 'nonlocal': nonlocal_, 'discrepancy': discrepancy}
