"""
Linear stability of the constant state (u*, k*, v*).

Each cosine mode cos(n x) contributes the characteristic polynomial
lambda^2 - T lambda + D; D vanishes at the per-mode threshold alpha_n and the
extremal threshold over n is the critical aggregation strength.
"""

import cmath
import logging
import math

import numpy as np

from src.core import elliptic
from src.core.model import linearize
from src.utils import config
from src.utils.errors import DegenerateMap

logger = logging.getLogger(__name__)


ATTRACTIVE_MAP = 'AttractiveMap'
REPULSIVE_MAP = 'RepulsiveMap'
NEVER_UNSTABLE = 'NeverUnstable'


def regime_of(lin):
    if lin.w_u > 0:
        return ATTRACTIVE_MAP
    if lin.w_u < 0:
        return REPULSIVE_MAP
    return NEVER_UNSTABLE


def _growth_flag(lin, growth_present):
    return lin.growth_present if growth_present is None else growth_present


def _require_map(lin):
    if lin.w_u == 0:
        raise DegenerateMap("w_u = 0: the constant state is stable for every alpha")


def alpha_threshold(lin, d, R, n, growth_present=None):
    """
    Aggregation strength at which mode n loses stability.

    Args:
        lin: LinearizationData
        d: Diffusion rate
        R: Perceptual radius
        n: Wavenumber >= 1
        growth_present: Use the growth formula (defaults to lin.growth_present)

    Returns:
        float: alpha_n, with sign -sign(w_u)

    Raises:
        DegenerateMap: w_u = 0
    """
    _require_map(lin)
    if n < 1:
        raise ValueError(f"Wavenumber must be >= 1, got {n}")
    n2 = float(n) * n
    screen = 1.0 + n2 * R * R
    if _growth_flag(lin, growth_present):
        return screen * (d * n2 - lin.f_u) * lin.w_k / (lin.u_star * lin.w_u * n2)
    return screen * d * lin.w_k / (lin.u_star * lin.w_u)


def continuous_optimum(lin, d, R):
    """Real wavenumber extremizing alpha_n for the growth case: (-f_u / (d R^2))^(1/4)."""
    if lin.f_u >= 0:
        return 1.0
    return (-lin.f_u / (d * R * R)) ** 0.25


def thresholds(lin, d, R, n_values, growth_present=None):
    return {int(n): alpha_threshold(lin, d, R, int(n), growth_present) for n in n_values}


def critical_threshold(lin, d, R, growth_present=None, n_max=config.DEFAULT_N_MAX):
    """
    Extremal threshold over wavenumbers and the smallest wavenumber attaining it.

    The scan range is extended past the continuous optimum, which brackets the
    extremum since alpha_n is unimodal in n^2.

    Returns:
        (alpha_crit, n_crit)
    """
    _require_map(lin)
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not _growth_flag(lin, growth_present):
        return alpha_threshold(lin, d, R, 1, False), 1
    upper = max(n_max, math.ceil(continuous_optimum(lin, d, R)) + 2)
    values = np.array([alpha_threshold(lin, d, R, n, True) for n in range(1, upper + 1)])
    index = int(np.argmax(values)) if lin.w_u > 0 else int(np.argmin(values))
    return float(values[index]), index + 1


def characteristic(lin, d, R, alpha, n):
    """Trace T and determinant D of the per-mode linearization."""
    n2 = float(n) * n
    growth_part = d * n2 - lin.f_u
    trace = -(growth_part - lin.w_k)
    det = -growth_part * lin.w_k + alpha * lin.u_star * lin.w_u * n2 / (1.0 + n2 * R * R)
    return trace, det


def _roots(trace, det):
    disc = trace * trace - 4.0 * det
    if disc < 0:
        s = cmath.sqrt(disc)
        return 0.5 * (trace + s), 0.5 * (trace - s)
    s = math.sqrt(disc)
    if trace <= 0:
        lam_minus = 0.5 * (trace - s)
        lam_plus = det / lam_minus if lam_minus != 0 else 0.5 * (trace + s)
    else:
        lam_plus = 0.5 * (trace + s)
        lam_minus = det / lam_plus
    return lam_plus, lam_minus


def eigenvalues(lin, d, R, alpha, n):
    """
    Roots of lambda^2 - T lambda + D for mode n.

    Returns:
        (lambda_plus, lambda_minus, extra) where extra = w_k is the remaining
        real eigenvalue of the spectrum
    """
    if n == 0:
        pair = sorted((lin.f_u, lin.w_k), reverse=True)
        return pair[0], pair[1], lin.w_k
    lam_plus, lam_minus = _roots(*characteristic(lin, d, R, alpha, n))
    return lam_plus, lam_minus, lin.w_k


def growth_rate(lin, d, R, alpha, n):
    lam_plus, lam_minus, _ = eigenvalues(lin, d, R, alpha, n)
    return max(complex(lam_plus).real, complex(lam_minus).real)


def transversality(lin, d, R, n):
    """d lambda / d alpha of the zero root at alpha = alpha_n."""
    n2 = float(n) * n
    return -lin.u_star * lin.w_u * n2 / ((1.0 + n2 * R * R) * (d * n2 - lin.f_u - lin.w_k))


def dispersion_table(lin, d, R, alpha, n_values):
    """
    Per-mode trace, determinant and roots.

    Returns:
        list of dict rows: n, T, D, re/im of both roots, growth_rate
    """
    rows = []
    for n in n_values:
        trace, det = characteristic(lin, d, R, alpha, n)
        lam_plus, lam_minus, _ = eigenvalues(lin, d, R, alpha, n)
        lam_plus, lam_minus = complex(lam_plus), complex(lam_minus)
        rows.append({
            'n': int(n),
            'T': trace,
            'D': det,
            'lambda_plus_re': lam_plus.real,
            'lambda_plus_im': lam_plus.imag,
            'lambda_minus_re': lam_minus.real,
            'lambda_minus_im': lam_minus.imag,
            'growth_rate': max(lam_plus.real, lam_minus.real),
        })
    return rows


def stability_region(lin, d, growth_present=None, R_range=(config.DEFAULT_R_MIN, config.DEFAULT_R_MAX),
                     n_R_samples=config.DEFAULT_N_R_SAMPLES, n_max=config.DEFAULT_N_MAX, R_values=None):
    """
    Boundary of the stable region in the (R, alpha) plane.

    Args:
        lin: LinearizationData
        d: Diffusion rate
        growth_present: Growth formula flag (defaults to lin.growth_present)
        R_range: (R_min, R_max) sampled uniformly
        n_R_samples: Number of R samples
        n_max: Wavenumber scan limit
        R_values: Explicit radii, used instead of R_range when given

    Returns:
        list of dict rows: R, alpha_crit_signed, abs_alpha_crit, n_crit
    """
    if R_values is None:
        R_min, R_max = R_range
        if not 0 < R_min < R_max:
            raise ValueError(f"R_range must be a positive interval, got {R_range}")
        R_values = np.linspace(R_min, R_max, n_R_samples)
    rows = []
    for R in R_values:
        alpha_crit, n_crit = critical_threshold(lin, d, float(R), growth_present, n_max)
        rows.append({
            'R': float(R),
            'alpha_crit_signed': alpha_crit,
            'abs_alpha_crit': abs(alpha_crit),
            'n_crit': n_crit,
        })
    logger.debug("stability region: %d samples", len(rows))
    return rows


def is_unstable(lin, alpha, alpha_crit):
    """Beyond the critical threshold on the destabilizing side."""
    if lin.w_u > 0:
        return alpha < alpha_crit
    if lin.w_u < 0:
        return alpha > alpha_crit
    return False


def linearized_matrix(lin, d, R, alpha, grid):
    """
    Dense Jacobian of the discretized (u, k) system at the constant state,
    with v eliminated through the screened solve.
    """
    size = grid.size
    lap = elliptic.neumann_laplacian(grid, dense=True)
    eye = np.eye(size)
    screen_inverse = np.linalg.solve(eye - R * R * lap, eye)
    f_u = lin.f_u if lin.growth_present else 0.0
    top = np.hstack([d * lap + f_u * eye, alpha * lin.u_star * lap @ screen_inverse])
    bottom = np.hstack([lin.w_u * eye, lin.w_k * eye])
    return np.vstack([top, bottom])


def discrete_spectrum(lin, d, R, alpha, grid):
    """Eigenvalues of linearized_matrix, sorted by decreasing real part."""
    values = np.linalg.eigvals(linearized_matrix(lin, d, R, alpha, grid))
    return values[np.argsort(-values.real)]


class StabilityReport:
    """Constant state, per-mode thresholds and the critical pair for one radius."""

    def __init__(self, lin, R, alpha_n, alpha_crit, n_crit, regime, eigen):
        self.lin = lin
        self.R = R
        self.alpha_n = alpha_n
        self.alpha_crit = alpha_crit
        self.n_crit = n_crit
        self.regime = regime
        self.eigen = eigen

    def to_dict(self):
        return {
            'R': self.R,
            'regime': self.regime,
            'alpha_crit': self.alpha_crit,
            'n_crit': self.n_crit,
            'alpha_n': {str(n): value for n, value in self.alpha_n.items()},
            'linearization': self.lin.to_dict(),
        }


def stability_report(spec, R=None, n_max=config.DEFAULT_N_MAX, n_report=10):
    """
    Build a StabilityReport for spec at radius R (defaults to spec.R).

    Eigenvalues are evaluated at spec.alpha for n = 0..n_report.
    """
    lin = linearize(spec)
    R = spec.R if R is None else R
    regime = regime_of(lin)
    eigen = {n: eigenvalues(lin, spec.d, R, spec.alpha, n) for n in range(n_report + 1)}
    if regime == NEVER_UNSTABLE:
        return StabilityReport(lin, R, {}, None, None, regime, eigen)
    alpha_crit, n_crit = critical_threshold(lin, spec.d, R, lin.growth_present, n_max)
    alpha_n = thresholds(lin, spec.d, R, range(1, max(n_report, n_crit) + 1))
    return StabilityReport(lin, R, alpha_n, alpha_crit, n_crit, regime, eigen)
