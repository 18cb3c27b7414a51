"""
Pitchfork data at a simple threshold alpha_n.

Along the bifurcating branch

    U(s) = U* + s q + (s^2 / 2) Theta + O(s^3),   alpha(s) = alpha_n + (s^2 / 2) alpha''(0) + ...

with q = (1, M1, M2) cos(n x) spanning the kernel of the linearization and
l = (1, M1*, M2*) cos(n x) spanning the kernel of its adjoint. Theta solves
F_UU[q, q] + F_U[Theta] = 0 on span{1, cos(2 n x)}. The sign of alpha''(0)
together with the sign of w_u decides direction and stability of the branch.

The closed-form curvature is always cross-checked against a quadrature
projection of the third-order equation built from the same Theta.
"""

import collections
import logging
import math

import numpy as np
from scipy.integrate import trapezoid

from src.core.model import linearize
from src.core.stability import alpha_threshold, critical_threshold
from src.utils import config
from src.utils.errors import (CurvatureMismatch, DegenerateCurvature, DegenerateMap,
                              GrowthDegenerate, WrongSide)

logger = logging.getLogger(__name__)


FORWARD = 'Forward'
BACKWARD = 'Backward'
STABLE = 'Stable'
UNSTABLE = 'Unstable'


Theta = collections.namedtuple('Theta', ['u1', 'u2', 'k1', 'k2', 'v1', 'v2'])
Theta.__doc__ = "Second-order correction: component = (.)1 + (.)2 cos(2 n x) for u, k, v."


def eigen_coefficients(lin, d, R, n):
    """
    Kernel and adjoint-kernel coefficients at alpha_n.

    Returns:
        (M1, M2, M1s, M2s)

    Raises:
        DegenerateMap: w_u = 0
    """
    if lin.w_u == 0:
        raise DegenerateMap("w_u = 0: no threshold, no kernel")
    n2 = float(n) * n
    m1 = -lin.w_u / lin.w_k
    m2 = m1 / (1.0 + n2 * R * R)
    m1s = (d * n2 - lin.f_u) / lin.w_u
    m2s = -R * R * lin.w_k * m1s
    return m1, m2, m1s, m2s


def quadratic_map_coefficient(lin, m1):
    """Coefficient of cos^2 in the k-row of F_UU[q, q]."""
    return lin.w_uu + 2.0 * lin.w_uk * m1 + lin.w_kk * m1 * m1


def cubic_map_coefficient(lin, m1, reduced=False):
    """
    Coefficient of cos^3 in the k-row of F_UUU[q, q, q].

    The reduced form drops the k-partials of order >= 2, which vanish for
    w = g1(u) - g2(u) k.
    """
    if reduced:
        return lin.w_uuu + 3.0 * m1 * lin.w_uuk
    return (lin.w_uuu + 3.0 * m1 * lin.w_uuk + 3.0 * m1 * m1 * lin.w_ukk
            + m1 ** 3 * lin.w_kkk)


def _require_growth(lin):
    if lin.f_u == 0:
        raise GrowthDegenerate("f_u = 0 at the constant state: Theta is singular")


def theta_coefficients(lin, d, R, n, alpha_n, method=config.DEFAULT_THETA_METHOD):
    """
    Second-order correction Theta.

    Args:
        lin: LinearizationData
        d, R: Diffusion rate and perceptual radius
        n: Wavenumber
        alpha_n: Threshold of mode n
        method: 'exact' solves the constant and cos(2 n x) blocks of
            F_UU[q, q] + F_U[Theta] = 0; 'printed' uses the closed-form relations
            Theta_u1 = Theta_u2 = -f_uu / (2 f_u),
            Theta_k1 = Theta_k2 = Theta_v1 = (1 + 4 n^2 R^2) Theta_v2

    Returns:
        Theta

    Raises:
        GrowthDegenerate: f_u = 0
    """
    _require_growth(lin)
    if alpha_n == 0:
        raise ValueError("alpha_n must be non-zero")
    m1, m2, _, _ = eigen_coefficients(lin, d, R, n)
    n2 = float(n) * n
    screen2 = 1.0 + 4.0 * n2 * R * R
    u_const = -lin.f_uu / (2.0 * lin.f_u)

    if method == 'printed':
        v2 = (m2 * alpha_n * n2 * lin.f_u - d * n2) / (2.0 * alpha_n * lin.u_star * n2 * lin.f_u)
        k_all = screen2 * v2
        return Theta(u_const, u_const, k_all, k_all, k_all, v2)
    if method != 'exact':
        raise ValueError(f"Unknown theta method: {method}")

    w2 = quadratic_map_coefficient(lin, m1)
    k_const = -(0.5 * w2 + lin.w_u * u_const) / lin.w_k
    matrix = np.array([
        [lin.f_u - 4.0 * d * n2, 0.0, -4.0 * alpha_n * lin.u_star * n2],
        [lin.w_u, lin.w_k, 0.0],
        [0.0, 1.0, -screen2],
    ])
    rhs = np.array([-0.5 * lin.f_uu + 2.0 * alpha_n * m2 * n2, -0.5 * w2, 0.0])
    u2, k2, v2 = np.linalg.solve(matrix, rhs)
    return Theta(u_const, float(u2), k_const, float(k2), k_const, float(v2))


def alpha_curvature_closed_form(lin, d, R, n, alpha_n, theta):
    m1, m2, m1s, _ = eigen_coefficients(lin, d, R, n)
    if m2 == 0:
        raise DegenerateMap("M2 = 0")
    n2 = float(n) * n
    w1 = lin.w_uu + m1 * lin.w_uk
    w2 = lin.w_uk + m1 * lin.w_kk
    u_avg = theta.u1 + 0.5 * theta.u2
    k_avg = theta.k1 + 0.5 * theta.k2
    numerator = (
        0.25 * (lin.f_uuu + m1s * cubic_map_coefficient(lin, m1))
        + lin.f_uu * u_avg
        - m2 * alpha_n * n2 * (theta.u1 - 0.5 * theta.u2)
        - alpha_n * n2 * theta.v2
        + m1s * (w1 * u_avg + w2 * k_avg)
    )
    return numerator / (m2 * lin.u_star * n2)


class _ModeFunction:
    """Values and x-derivatives of a + b cos(m x) for each of u, k, v on a node set."""

    def __init__(self, x, m, constants, amplitudes):
        c, s = np.cos(m * x), np.sin(m * x)
        self.value = [a + b * c for a, b in zip(constants, amplitudes)]
        self.first = [-m * b * s for b in amplitudes]
        self.second = [-m * m * b * c for b in amplitudes]


class _Projection:
    """Quadrature evaluation of the Taylor terms of F at the constant state."""

    def __init__(self, lin, d, R, n, alpha_n, nodes=config.PROJECTION_NODES):
        self.lin, self.d, self.R, self.n, self.alpha = lin, d, R, n, alpha_n
        self.x = np.linspace(0.0, math.pi, nodes + 1)
        m1, m2, m1s, m2s = eigen_coefficients(lin, d, R, n)
        self.q = _ModeFunction(self.x, n, (0.0, 0.0, 0.0), (1.0, m1, m2))
        self.adjoint = (1.0, m1s, m2s)
        self.weight = np.cos(n * self.x)

    def theta(self, theta):
        return _ModeFunction(self.x, 2 * self.n, (theta.u1, theta.k1, theta.v1),
                             (theta.u2, theta.k2, theta.v2))

    def pair(self, a, b):
        """F_UU[a, b]."""
        lin = self.lin
        au, ak, _ = a.value
        bu, bk, _ = b.value
        advection = (a.first[0] * b.first[2] + au * b.second[2]
                     + b.first[0] * a.first[2] + bu * a.second[2])
        row_u = self.alpha * advection + lin.f_uu * au * bu
        row_k = lin.w_uu * au * bu + lin.w_uk * (au * bk + ak * bu) + lin.w_kk * ak * bk
        return row_u, row_k, np.zeros_like(self.x)

    def triple(self, a):
        """F_UUU[a, a, a]."""
        lin = self.lin
        au, ak, _ = a.value
        row_u = lin.f_uuu * au ** 3
        row_k = (lin.w_uuu * au ** 3 + 3.0 * lin.w_uuk * au * au * ak
                 + 3.0 * lin.w_ukk * au * ak * ak + lin.w_kkk * ak ** 3)
        return row_u, row_k, np.zeros_like(self.x)

    def linear(self, phi):
        """F_U[phi]."""
        lin = self.lin
        pu, pk, pv = phi.value
        row_u = self.d * phi.second[0] + self.alpha * lin.u_star * phi.second[2] + lin.f_u * pu
        row_k = lin.w_u * pu + lin.w_k * pk
        row_v = phi.second[2] - (pv - pk) / (self.R * self.R)
        return row_u, row_k, row_v

    def alpha_derivative(self, phi):
        """F_alphaU[phi]."""
        zero = np.zeros_like(self.x)
        return self.lin.u_star * phi.second[2], zero, zero

    def bracket(self, rows):
        """<l, rows> over (0, pi)."""
        integrand = sum(c * r for c, r in zip(self.adjoint, rows)) * self.weight
        return float(trapezoid(integrand, self.x))


def alpha_curvature_projection(lin, d, R, n, alpha_n, theta, nodes=config.PROJECTION_NODES):
    """alpha''(0) = -(<l, F_UUU[q,q,q]> / 3 + <l, F_UU[q, Theta]>) / <l, F_alphaU[q]>."""
    proj = _Projection(lin, d, R, n, alpha_n, nodes)
    q = proj.q
    cubic = proj.bracket(proj.triple(q))
    mixed = proj.bracket(proj.pair(q, proj.theta(theta)))
    denominator = proj.bracket(proj.alpha_derivative(q))
    return -(cubic / 3.0 + mixed) / denominator


def alpha_first_derivative(lin, d, R, n, alpha_n, nodes=config.PROJECTION_NODES):
    """alpha'(0) = -<l, F_UU[q, q]> / (2 <l, F_alphaU[q]>); zero since cos^3 integrates to zero."""
    proj = _Projection(lin, d, R, n, alpha_n, nodes)
    q = proj.q
    return -proj.bracket(proj.pair(q, q)) / (2.0 * proj.bracket(proj.alpha_derivative(q)))


def theta_residual(lin, d, R, n, alpha_n, theta, nodes=config.PROJECTION_NODES):
    """Max abs of F_UU[q, q] + F_U[Theta] over the three rows."""
    proj = _Projection(lin, d, R, n, alpha_n, nodes)
    phi = proj.theta(theta)
    quadratic = proj.pair(proj.q, proj.q)
    linear = proj.linear(phi)
    return float(max(np.max(np.abs(a + b)) for a, b in zip(quadratic, linear)))


def alpha_curvature(lin, d, R, n, alpha_n, theta, check=True):
    """
    Closed-form alpha''(0).

    Args:
        lin, d, R, n, alpha_n: Threshold data
        theta: Theta from theta_coefficients
        check: Compare against the quadrature projection

    Returns:
        float

    Raises:
        CurvatureMismatch: closed form and projection differ by more than
            config.CURVATURE_REL_TOL relative
    """
    _require_growth(lin)
    value = alpha_curvature_closed_form(lin, d, R, n, alpha_n, theta)
    if check:
        oracle = alpha_curvature_projection(lin, d, R, n, alpha_n, theta)
        scale = max(abs(value), abs(oracle), 1e-300)
        if abs(value - oracle) > config.CURVATURE_REL_TOL * scale:
            raise CurvatureMismatch(
                f"closed-form alpha''(0) = {value:.12g} but projection gives {oracle:.12g}")
    return value


def classify(lin, alpha_n, alpha_dd0, w_u_sign=None):
    """
    Direction and stability of the bifurcating branch.

    Returns:
        (direction, branch_stability)

    Raises:
        DegenerateCurvature: alpha''(0) = 0
    """
    if alpha_dd0 == 0:
        raise DegenerateCurvature(f"alpha''(0) = 0 at alpha_n = {alpha_n}")
    sign = w_u_sign if w_u_sign is not None else (lin.w_u > 0) - (lin.w_u < 0)
    if sign == 0:
        raise DegenerateMap("w_u = 0")
    direction = FORWARD if alpha_dd0 > 0 else BACKWARD
    stable = (alpha_dd0 < 0) if sign > 0 else (alpha_dd0 > 0)
    return direction, STABLE if stable else UNSTABLE


def predicted_branch(alpha_n, alpha_dd0, alpha):
    """
    Leading-order amplitude s of the u-perturbation s cos(n x) at alpha.

    Raises:
        WrongSide: alpha lies on the side without a local branch
    """
    if alpha == alpha_n:
        return 0.0
    ratio = 2.0 * (alpha - alpha_n) / alpha_dd0
    if ratio < 0:
        raise WrongSide(f"no branch at alpha = {alpha}: the branch at {alpha_n} "
                        f"is {'forward' if alpha_dd0 > 0 else 'backward'}")
    return math.sqrt(ratio)


class BifurcationCoefficients:
    """Everything computed at one threshold."""

    def __init__(self, n, alpha_n, M1, M2, M1s, M2s, theta, alpha_dd0, direction,
                 branch_stability, R=None, method=config.DEFAULT_THETA_METHOD):
        self.n = n
        self.alpha_n = alpha_n
        self.M1 = M1
        self.M2 = M2
        self.M1s = M1s
        self.M2s = M2s
        self.theta = theta
        self.alpha_dd0 = alpha_dd0
        self.direction = direction
        self.branch_stability = branch_stability
        self.R = R
        self.method = method

    @property
    def supercritical(self):
        return self.branch_stability == STABLE

    def to_dict(self):
        return {
            'R': self.R,
            'n': self.n,
            'alpha_n': self.alpha_n,
            'M1': self.M1,
            'M2': self.M2,
            'M1s': self.M1s,
            'M2s': self.M2s,
            **{f'theta_{name}': value for name, value in self.theta._asdict().items()},
            'alpha_dd0': self.alpha_dd0,
            'direction': self.direction,
            'stability': self.branch_stability,
            'theta_method': self.method,
        }

    def __repr__(self):
        return (f"BifurcationCoefficients(n={self.n}, alpha_n={self.alpha_n:.6g}, "
                f"alpha_dd0={self.alpha_dd0:.6g}, {self.direction}/{self.branch_stability})")


def bifurcation_coefficients(spec, R=None, n=None, method=config.DEFAULT_THETA_METHOD,
                             n_max=config.DEFAULT_N_MAX):
    """
    Full pipeline at radius R for mode n (default: the critical wavenumber).

    Returns:
        BifurcationCoefficients
    """
    lin = linearize(spec)
    R = spec.R if R is None else R
    if n is None:
        _, n = critical_threshold(lin, spec.d, R, lin.growth_present, n_max)
    alpha_n = alpha_threshold(lin, spec.d, R, n, lin.growth_present)
    m1, m2, m1s, m2s = eigen_coefficients(lin, spec.d, R, n)
    theta = theta_coefficients(lin, spec.d, R, n, alpha_n, method)
    alpha_dd0 = alpha_curvature(lin, spec.d, R, n, alpha_n, theta)
    direction, stability = classify(lin, alpha_n, alpha_dd0)
    coeffs = BifurcationCoefficients(n, alpha_n, m1, m2, m1s, m2s, theta, alpha_dd0,
                                     direction, stability, R=R, method=method)
    logger.info("R=%g: %r", R, coeffs)
    return coeffs
