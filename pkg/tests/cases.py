"""Model builders and reference values shared by the test modules."""

from src.core.model import Logistic, ModelSpec, NoGrowth, RatioLinear, RatioQuadratic


# R -> (critical wavenumber, threshold) for the attractive-map example
EXAMPLE1_POINTS = {
    0.12: (3, -2.2328),
    0.3: (2, -3.0242),
    2.0: (1, -17.7895),
}

# alpha''(0) with the exact second-order correction. Steady continuation runs at R = 0.3
# (Grid(128), kick 0.1) give (amplitude/2)^2 / delta = 3.63, 3.28, 2.81 for delta = 0.01, 0.02, 0.04,
# extrapolating to about 3.8-4.0 against 2 / 0.4845 = 4.13.
EXAMPLE1_CURVATURE = {0.12: -0.6100, 0.3: -0.4845, 2.0: 1.9742}

EXAMPLE2_POINTS = {0.12: (3, 6.0604), 0.3: (2, 8.2086), 2.0: (1, 48.2857)}

EXAMPLE2_CURVATURE = {0.12: 5.3708, 0.3: 13.7852, 2.0: 89.2766}


def make_example1(R=0.3, alpha=0.0):
    return ModelSpec(1.0, alpha, R, Logistic(1.0, 1.0), RatioQuadratic(1.0, 0.15, 0.5))


def make_example2(R=0.3, alpha=0.0):
    return ModelSpec(1.0, alpha, R, Logistic(1.0, 1.0), RatioLinear(1.0, 0.15, 0.5))


def make_no_growth(R=0.3, alpha=0.0):
    return ModelSpec(1.0, alpha, R, NoGrowth(), RatioQuadratic(1.0, 0.15, 0.5), u_star_override=1.0)
