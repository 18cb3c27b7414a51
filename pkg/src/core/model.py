"""
Growth and encoding functions for the population / spatial-map model.

Each family carries its analytic derivatives up to third order, because the
pitchfork curvature needs third derivatives at the constant state and numeric
third differences are too noisy to be used there.
"""

import logging
import math

import numpy as np

from src.utils import config
from src.utils.errors import NoConstantState

logger = logging.getLogger(__name__)


def _zeros(u):
    if np.ndim(u) == 0:
        return 0.0
    return np.zeros(np.shape(u))


def _check_order(order):
    if order not in (0, 1, 2, 3):
        raise ValueError(f"Derivative order must be 0..3, got {order}")


class GrowthModel:
    """Base class for the population growth term f(u)."""

    name = 'growth'

    def value(self, u, order=0):
        raise NotImplementedError("Each growth model must implement value")

    def positive_zero(self):
        """Return the positive zero u* of f, or None when there is none."""
        return None

    @property
    def present(self):
        return True

    def to_dict(self):
        return {'growth': self.name}

    def __repr__(self):
        return f"{type(self).__name__}()"


class Logistic(GrowthModel):
    """f(u) = r u (1 - u / u_cap)."""

    name = 'logistic'

    def __init__(self, rate=1.0, u_cap=1.0):
        if rate <= 0:
            raise ValueError(f"Logistic rate must be positive, got {rate}")
        if u_cap <= 0:
            raise ValueError(f"Logistic capacity must be positive, got {u_cap}")
        self.rate = float(rate)
        self.u_cap = float(u_cap)

    def value(self, u, order=0):
        _check_order(order)
        r, cap = self.rate, self.u_cap
        if order == 0:
            return r * u * (1.0 - u / cap)
        if order == 1:
            return r * (1.0 - 2.0 * u / cap)
        if order == 2:
            return -2.0 * r / cap + _zeros(u)
        return _zeros(u)

    def positive_zero(self):
        return self.u_cap

    def to_dict(self):
        return {'growth': self.name, 'growth_rate': self.rate, 'capacity': self.u_cap}

    def __repr__(self):
        return f"Logistic(rate={self.rate}, u_cap={self.u_cap})"


class NoGrowth(GrowthModel):
    """f identically zero; total population is conserved."""

    name = 'none'

    def value(self, u, order=0):
        _check_order(order)
        return _zeros(u)

    @property
    def present(self):
        return False


class EncodingFamily:
    """
    Excitation g1 and adaptation g2 of the spatial map.

    The adaptation rate is g2(u) = mu + beta u for every family; subclasses
    provide g1.
    """

    name = 'encoding'

    def __init__(self, mu=config.DEFAULT_MU, beta=config.DEFAULT_BETA):
        if mu <= 0:
            raise ValueError(f"mu must be positive, got {mu}")
        if beta < 0:
            raise ValueError(f"beta must be non-negative, got {beta}")
        self.mu = float(mu)
        self.beta = float(beta)

    def g1(self, u, order=0):
        raise NotImplementedError("Each encoding family must implement g1")

    def g2(self, u, order=0):
        _check_order(order)
        if order == 0:
            return self.mu + self.beta * u
        if order == 1:
            return self.beta + _zeros(u)
        return _zeros(u)

    def bind(self, u_star):
        """Hook for families whose shape depends on the constant state."""
        return self

    def to_dict(self):
        return {'encoding': self.name, 'mu': self.mu, 'beta': self.beta}


class RatioQuadratic(EncodingFamily):
    """g1(u) = rho u^2 / (1 + u), written as rho (u - 1 + 1/(1+u))."""

    name = 'ratio_quadratic'

    def __init__(self, rho=config.DEFAULT_RHO, mu=config.DEFAULT_MU, beta=config.DEFAULT_BETA):
        super().__init__(mu, beta)
        if rho <= 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.rho = float(rho)

    def g1(self, u, order=0):
        _check_order(order)
        p = 1.0 + u
        if order == 0:
            return self.rho * u * u / p
        if order == 1:
            return self.rho * (1.0 - p ** -2)
        if order == 2:
            return 2.0 * self.rho * p ** -3
        return -6.0 * self.rho * p ** -4

    def to_dict(self):
        return {**super().to_dict(), 'rho': self.rho}

    def __repr__(self):
        return f"RatioQuadratic(rho={self.rho}, mu={self.mu}, beta={self.beta})"


class RatioLinear(EncodingFamily):
    """g1(u) = rho u / (1 + u), written as rho (1 - 1/(1+u))."""

    name = 'ratio_linear'

    def __init__(self, rho=config.DEFAULT_RHO, mu=config.DEFAULT_MU, beta=config.DEFAULT_BETA):
        super().__init__(mu, beta)
        if rho <= 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.rho = float(rho)

    def g1(self, u, order=0):
        _check_order(order)
        p = 1.0 + u
        if order == 0:
            return self.rho * u / p
        if order == 1:
            return self.rho * p ** -2
        if order == 2:
            return -2.0 * self.rho * p ** -3
        return 6.0 * self.rho * p ** -4

    def to_dict(self):
        return {**super().to_dict(), 'rho': self.rho}

    def __repr__(self):
        return f"RatioLinear(rho={self.rho}, mu={self.mu}, beta={self.beta})"


class Linear(EncodingFamily):
    """g1(u) = rho u."""

    name = 'linear'

    def __init__(self, rho=config.DEFAULT_RHO, mu=config.DEFAULT_MU, beta=config.DEFAULT_BETA):
        super().__init__(mu, beta)
        if rho <= 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.rho = float(rho)

    def g1(self, u, order=0):
        _check_order(order)
        if order == 0:
            return self.rho * u
        if order == 1:
            return self.rho + _zeros(u)
        return _zeros(u)

    def to_dict(self):
        return {**super().to_dict(), 'rho': self.rho}

    def __repr__(self):
        return f"Linear(rho={self.rho}, mu={self.mu}, beta={self.beta})"


class SmoothStepPerturbed(EncodingFamily):
    """
    Base family with g2 raised by a smoothed step of height eps centred at u*:

        g2(u) = mu + beta u + (eps/2) (1 + (2/pi) arctan(gamma (u - center)))

    A steep enough step flips the sign of w_u while keeping g2 arbitrarily
    close to the unperturbed rate.
    """

    name = 'smooth_step'

    def __init__(self, base, eps=config.DEFAULT_STEP_EPS, gamma=config.DEFAULT_STEP_GAMMA, center=None):
        super().__init__(base.mu, base.beta)
        if not 0 < eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        if gamma <= 1:
            raise ValueError(f"gamma must exceed 1, got {gamma}")
        self.base = base
        self.eps = float(eps)
        self.gamma = float(gamma)
        self.center = None if center is None else float(center)

    def bind(self, u_star):
        if self.center is not None:
            return self
        return SmoothStepPerturbed(self.base, self.eps, self.gamma, center=u_star)

    def g1(self, u, order=0):
        return self.base.g1(u, order)

    def step(self, u, order=0):
        _check_order(order)
        if self.center is None:
            raise ValueError("SmoothStepPerturbed has no center; bind it to the constant state first")
        g, e = self.gamma, self.eps
        z = g * (u - self.center)
        q = 1.0 + z * z
        if order == 0:
            return 0.5 * e * (1.0 + (2.0 / math.pi) * np.arctan(z))
        if order == 1:
            return (e / math.pi) * g / q
        if order == 2:
            return (e / math.pi) * (-2.0 * g ** 2 * z) / q ** 2
        return (e / math.pi) * g ** 3 * (6.0 * z * z - 2.0) / q ** 3

    def g2(self, u, order=0):
        return super().g2(u, order) + self.step(u, order)

    def to_dict(self):
        d = self.base.to_dict()
        d.update({'encoding': self.name, 'base_encoding': self.base.name,
                  'eps': self.eps, 'gamma': self.gamma})
        return d

    def __repr__(self):
        return f"SmoothStepPerturbed({self.base!r}, eps={self.eps}, gamma={self.gamma}, center={self.center})"


ENCODING_FAMILIES = {
    'ratio_quadratic': RatioQuadratic,
    'ratio_linear': RatioLinear,
    'linear': Linear,
}

GROWTH_MODELS = {
    'logistic': Logistic,
    'none': NoGrowth,
}


def get_encoding(name, rho=config.DEFAULT_RHO, mu=config.DEFAULT_MU, beta=config.DEFAULT_BETA,
                 base_encoding=config.DEFAULT_BASE_ENCODING, eps=config.DEFAULT_STEP_EPS,
                 gamma=config.DEFAULT_STEP_GAMMA):
    """
    Build an encoding family by name.

    Args:
        name: One of ENCODING_FAMILIES or 'smooth_step'
        rho, mu, beta: Family parameters
        base_encoding: Family wrapped by 'smooth_step'
        eps, gamma: Step height and steepness for 'smooth_step'

    Returns:
        EncodingFamily instance
    """
    if name == SmoothStepPerturbed.name:
        if base_encoding not in ENCODING_FAMILIES:
            raise ValueError(f"Unknown base encoding: {base_encoding}")
        base = ENCODING_FAMILIES[base_encoding](rho=rho, mu=mu, beta=beta)
        return SmoothStepPerturbed(base, eps=eps, gamma=gamma)
    if name not in ENCODING_FAMILIES:
        raise ValueError(f"Unknown encoding family: {name}")
    return ENCODING_FAMILIES[name](rho=rho, mu=mu, beta=beta)


def get_growth(name, rate=1.0, capacity=1.0):
    if name == Logistic.name:
        return Logistic(rate, capacity)
    if name == NoGrowth.name:
        return NoGrowth()
    raise ValueError(f"Unknown growth model: {name}")


def list_encodings():
    return sorted(ENCODING_FAMILIES) + [SmoothStepPerturbed.name]


class ModelSpec:
    """Full parameter set of the coupled population / map model."""

    def __init__(self, d, alpha, R, growth, encoding, u_star_override=None):
        if not d > 0:
            raise ValueError(f"Diffusion rate d must be positive, got {d}")
        if not R > 0:
            raise ValueError(f"Perceptual radius R must be positive, got {R}")
        if u_star_override is not None and not u_star_override > 0:
            raise ValueError(f"u_star_override must be positive, got {u_star_override}")
        if not growth.present and u_star_override is None:
            raise NoConstantState("NoGrowth requires u_star_override (the initial mean density)")
        self.d = float(d)
        self.alpha = float(alpha)
        self.R = float(R)
        self.growth = growth
        self.u_star_override = None if u_star_override is None else float(u_star_override)
        u_star = self.u_star
        self.encoding = encoding if u_star is None else encoding.bind(u_star)

    @property
    def u_star(self):
        if self.u_star_override is not None:
            return self.u_star_override
        return self.growth.positive_zero()

    def with_params(self, **changes):
        """Return a copy with some of d, alpha, R replaced."""
        params = {'d': self.d, 'alpha': self.alpha, 'R': self.R}
        params.update(changes)
        return ModelSpec(params['d'], params['alpha'], params['R'], self.growth,
                         self.encoding, self.u_star_override)

    def to_dict(self):
        out = {'d': self.d, 'alpha': self.alpha, 'R': self.R}
        out.update(self.growth.to_dict())
        out.update(self.encoding.to_dict())
        if self.u_star_override is not None:
            out['u_star'] = self.u_star_override
        return out

    def __repr__(self):
        return (f"ModelSpec(d={self.d}, alpha={self.alpha}, R={self.R}, "
                f"growth={self.growth!r}, encoding={self.encoding!r})")


class LinearizationData:
    """Constant state and the derivatives of f and w = g1 - g2 k there."""

    def __init__(self, u_star, k_star, f_u, f_uu, f_uuu, w_u, w_k,
                 w_uu, w_uk, w_uuu, w_uuk, growth_present=True):
        self.u_star = u_star
        self.k_star = k_star
        self.v_star = k_star
        self.f_u = f_u
        self.f_uu = f_uu
        self.f_uuu = f_uuu
        self.w_u = w_u
        self.w_k = w_k
        self.w_uu = w_uu
        self.w_uk = w_uk
        self.w_uuu = w_uuu
        self.w_uuk = w_uuk
        # w is affine in k
        self.w_kk = 0.0
        self.w_ukk = 0.0
        self.w_kkk = 0.0
        self.growth_present = growth_present

    def to_dict(self):
        return {name: getattr(self, name) for name in (
            'u_star', 'k_star', 'v_star', 'f_u', 'f_uu', 'f_uuu', 'w_u', 'w_k',
            'w_uu', 'w_uk', 'w_kk', 'w_uuu', 'w_uuk', 'w_ukk', 'w_kkk')}

    def __repr__(self):
        return (f"LinearizationData(u*={self.u_star:.6g}, k*={self.k_star:.6g}, "
                f"f_u={self.f_u:.6g}, w_u={self.w_u:.6g}, w_k={self.w_k:.6g})")


def eval_f(spec, u, order=0):
    """Growth term f or its order-th derivative."""
    return spec.growth.value(u, order)


def eval_g(spec, which, u, order=0):
    """
    Encoding function g1 or g2 or one of its derivatives.

    Args:
        spec: ModelSpec
        which: 'g1' or 'g2'
        u: Density (scalar or array)
        order: Derivative order 0..3

    Returns:
        Value with the shape of u
    """
    if which == 'g1':
        return spec.encoding.g1(u, order)
    if which == 'g2':
        return spec.encoding.g2(u, order)
    raise ValueError(f"Unknown encoding function: {which}")


def linearize(spec):
    """
    Constant state (u*, k*, v*) and the partial derivatives used by the
    stability and bifurcation analyses.

    Raises:
        NoConstantState: no positive zero of f and no override
    """
    u = spec.u_star
    if u is None or not u > 0:
        raise NoConstantState(f"No positive constant state for {spec.growth!r}")
    g1 = [eval_g(spec, 'g1', u, m) for m in range(4)]
    g2 = [eval_g(spec, 'g2', u, m) for m in range(4)]
    k_star = g1[0] / g2[0]
    if not k_star > 0:
        raise NoConstantState(f"k* = g1/g2 = {k_star} is not positive at u* = {u}")
    lin = LinearizationData(
        u_star=float(u),
        k_star=float(k_star),
        f_u=float(eval_f(spec, u, 1)),
        f_uu=float(eval_f(spec, u, 2)),
        f_uuu=float(eval_f(spec, u, 3)),
        w_u=float(g1[1] - g2[1] * k_star),
        w_k=float(-g2[0]),
        w_uu=float(g1[2] - g2[2] * k_star),
        w_uk=float(-g2[1]),
        w_uuu=float(g1[3] - g2[3] * k_star),
        w_uuk=float(-g2[2]),
        growth_present=spec.growth.present,
    )
    logger.debug("linearized %r -> %r", spec, lin)
    return lin


def encoding_ratio_gap(spec):
    """g1'/g1 - g2'/g2 at u*; its sign is the sign of w_u whenever g1(u*) > 0."""
    u = spec.u_star
    return (eval_g(spec, 'g1', u, 1) / eval_g(spec, 'g1', u)
            - eval_g(spec, 'g2', u, 1) / eval_g(spec, 'g2', u))


def in_phase_expected(spec):
    """Patterns align with the map when the excitation rises faster than adaptation."""
    return linearize(spec).w_u > 0


def k_upper_bound(spec, u_values):
    """Largest g1/g2 over the given densities, the level k can approach from below."""
    u = np.asarray(u_values, dtype=float)
    return float(np.max(eval_g(spec, 'g1', u) / eval_g(spec, 'g2', u)))


def finite_difference_check(spec, u, step=config.FD_STEP):
    """
    Compare analytic derivatives (orders 1..3) of f, g1, g2 against central
    differences of the next-lower analytic derivative.

    Args:
        spec: ModelSpec
        u: Positive density
        step: Finite-difference step

    Returns:
        dict: 'errors' maps (function, order) to relative error, 'max_rel_error'
        is the largest of them
    """
    if not u > 0:
        raise ValueError(f"finite_difference_check needs u > 0, got {u}")
    h = min(step, 0.5 * u)
    functions = {
        'f': lambda x, m: eval_f(spec, x, m),
        'g1': lambda x, m: eval_g(spec, 'g1', x, m),
        'g2': lambda x, m: eval_g(spec, 'g2', x, m),
    }
    errors = {}
    for name, fn in functions.items():
        for order in (1, 2, 3):
            analytic = float(fn(u, order))
            numeric = float((fn(u + h, order - 1) - fn(u - h, order - 1)) / (2.0 * h))
            errors[(name, order)] = abs(numeric - analytic) / max(1.0, abs(analytic))
    worst = max(errors.values())
    logger.debug("finite-difference check at u=%g: max relative error %.3e", u, worst)
    return {'u': u, 'step': h, 'errors': errors, 'max_rel_error': worst}
