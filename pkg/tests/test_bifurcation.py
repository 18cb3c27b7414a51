import pytest

from src.core import bifurcation
from src.core.bifurcation import (BACKWARD, FORWARD, STABLE, UNSTABLE, alpha_curvature,
                                  alpha_curvature_closed_form, alpha_curvature_projection,
                                  alpha_first_derivative, bifurcation_coefficients, classify,
                                  cubic_map_coefficient, eigen_coefficients, predicted_branch,
                                  theta_coefficients, theta_residual)
from src.core.model import Logistic, ModelSpec, RatioQuadratic, SmoothStepPerturbed, linearize
from src.core.stability import alpha_threshold
from src.utils.errors import (CurvatureMismatch, DegenerateCurvature, GrowthDegenerate,
                              WrongSide)

from cases import (EXAMPLE1_CURVATURE, EXAMPLE1_POINTS, EXAMPLE2_CURVATURE, make_example1,
                   make_example2, make_no_growth)


def threshold_data(make, R):
    lin = linearize(make(R))
    n = EXAMPLE1_POINTS[R][0]
    return lin, n, alpha_threshold(lin, 1.0, R, n)


def test_kernel_coefficients():
    lin = linearize(make_example1())
    m1, m2, m1s, m2s = eigen_coefficients(lin, 1.0, 0.3, 2)
    assert m1 == pytest.approx(0.562130, abs=1e-6)
    assert m2 == pytest.approx(0.413331, abs=1e-6)
    assert m1s == pytest.approx(13.6842, abs=1e-4)
    assert m2s == pytest.approx(0.09 * 0.65 * m1s)


@pytest.mark.parametrize("R,m2", [(0.12, 0.497636), (2.0, 0.112426)])
def test_map_amplitude_follows_screening(R, m2):
    lin, n, _ = threshold_data(make_example1, R)
    assert eigen_coefficients(lin, 1.0, R, n)[1] == pytest.approx(m2, abs=1e-6)


def test_kernel_vector_solves_linearization():
    lin, n, alpha_n = threshold_data(make_example1, 0.3)
    m1, m2, m1s, m2s = eigen_coefficients(lin, 1.0, 0.3, n)
    n2 = n * n
    assert -1.0 * n2 + lin.f_u - alpha_n * lin.u_star * n2 * m2 == pytest.approx(0.0, abs=1e-12)
    assert lin.w_u + lin.w_k * m1 == pytest.approx(0.0, abs=1e-15)
    assert -n2 * m2 - (m2 - m1) / 0.09 == pytest.approx(0.0, abs=1e-12)
    # adjoint kernel
    assert -n2 + lin.f_u + lin.w_u * m1s == pytest.approx(0.0, abs=1e-12)
    assert lin.w_k * m1s + m2s / 0.09 == pytest.approx(0.0, abs=1e-12)
    assert -alpha_n * lin.u_star * n2 - m2s * (n2 + 1.0 / 0.09) == pytest.approx(0.0, abs=1e-10)


def test_exact_theta_constant_mode():
    lin, n, alpha_n = threshold_data(make_example1, 0.3)
    theta = theta_coefficients(lin, 1.0, 0.3, n, alpha_n)
    assert theta.u1 == pytest.approx(-1.0)
    assert theta.k1 == pytest.approx(-0.80223, abs=1e-5)
    assert theta.v1 == theta.k1


@pytest.mark.parametrize("R", sorted(EXAMPLE1_POINTS))
@pytest.mark.parametrize("make", [make_example1, make_example2])
def test_exact_theta_solves_second_order_equation(make, R):
    lin, n, alpha_n = threshold_data(make, R)
    theta = theta_coefficients(lin, 1.0, R, n, alpha_n)
    assert theta_residual(lin, 1.0, R, n, alpha_n, theta) < 1e-9


def test_printed_theta_relations():
    lin, n, alpha_n = threshold_data(make_example1, 0.3)
    theta = theta_coefficients(lin, 1.0, 0.3, n, alpha_n, method='printed')
    assert theta.u1 == theta.u2 == pytest.approx(-lin.f_uu / (2.0 * lin.f_u))
    assert theta.k1 == theta.k2 == theta.v1
    assert theta.v1 == pytest.approx((1.0 + 4.0 * n * n * 0.09) * theta.v2)
    assert theta_residual(lin, 1.0, 0.3, n, alpha_n, theta) > 0.1


def test_theta_rejects_unknown_method():
    lin, n, alpha_n = threshold_data(make_example1, 0.3)
    with pytest.raises(ValueError):
        theta_coefficients(lin, 1.0, 0.3, n, alpha_n, method='galerkin')
    with pytest.raises(ValueError):
        theta_coefficients(lin, 1.0, 0.3, n, 0.0)


def test_no_growth_has_no_theta():
    lin = linearize(make_no_growth())
    alpha_1 = alpha_threshold(lin, 1.0, 0.3, 1)
    with pytest.raises(GrowthDegenerate):
        theta_coefficients(lin, 1.0, 0.3, 1, alpha_1)
    with pytest.raises(GrowthDegenerate):
        bifurcation_coefficients(make_no_growth())


@pytest.mark.parametrize("R", sorted(EXAMPLE1_CURVATURE))
def test_attractive_curvature(R):
    lin, n, alpha_n = threshold_data(make_example1, R)
    theta = theta_coefficients(lin, 1.0, R, n, alpha_n)
    assert alpha_curvature(lin, 1.0, R, n, alpha_n, theta) == pytest.approx(EXAMPLE1_CURVATURE[R], abs=1e-4)


@pytest.mark.parametrize("R", sorted(EXAMPLE2_CURVATURE))
def test_repulsive_curvature(R):
    lin, n, alpha_n = threshold_data(make_example2, R)
    theta = theta_coefficients(lin, 1.0, R, n, alpha_n)
    assert alpha_curvature(lin, 1.0, R, n, alpha_n, theta) == pytest.approx(EXAMPLE2_CURVATURE[R], abs=1e-4)


@pytest.mark.parametrize("R,expected", [(0.12, -0.7962), (0.3, -0.4115), (2.0, 2.4938)])
def test_printed_theta_keeps_curvature_sign(R, expected):
    lin, n, alpha_n = threshold_data(make_example1, R)
    theta = theta_coefficients(lin, 1.0, R, n, alpha_n, method='printed')
    value = alpha_curvature(lin, 1.0, R, n, alpha_n, theta)
    assert value == pytest.approx(expected, abs=1e-4)
    assert (value > 0) == (EXAMPLE1_CURVATURE[R] > 0)


@pytest.mark.parametrize("method", ['exact', 'printed'])
@pytest.mark.parametrize("R", sorted(EXAMPLE1_POINTS))
def test_closed_form_matches_projection(R, method):
    lin, n, alpha_n = threshold_data(make_example1, R)
    theta = theta_coefficients(lin, 1.0, R, n, alpha_n, method)
    closed = alpha_curvature_closed_form(lin, 1.0, R, n, alpha_n, theta)
    projected = alpha_curvature_projection(lin, 1.0, R, n, alpha_n, theta)
    assert closed == pytest.approx(projected, rel=1e-6)


def test_curvature_mismatch_is_reported(monkeypatch):
    lin, n, alpha_n = threshold_data(make_example1, 0.3)
    theta = theta_coefficients(lin, 1.0, 0.3, n, alpha_n)
    monkeypatch.setattr(bifurcation, 'alpha_curvature_projection', lambda *args: 1.0)
    with pytest.raises(CurvatureMismatch):
        alpha_curvature(lin, 1.0, 0.3, n, alpha_n, theta)
    assert alpha_curvature(lin, 1.0, 0.3, n, alpha_n, theta, check=False) == pytest.approx(-0.4845, abs=1e-4)


@pytest.mark.parametrize("R", sorted(EXAMPLE1_POINTS))
def test_branch_is_symmetric(R):
    lin, n, alpha_n = threshold_data(make_example1, R)
    assert abs(alpha_first_derivative(lin, 1.0, R, n, alpha_n)) < 1e-10


def test_reduced_cubic_coefficient():
    lin = linearize(make_example1())
    m1 = eigen_coefficients(lin, 1.0, 0.3, 2)[0]
    assert cubic_map_coefficient(lin, m1, reduced=True) == cubic_map_coefficient(lin, m1)


@pytest.mark.parametrize("R,direction,stability", [
    (0.12, BACKWARD, STABLE),
    (0.3, BACKWARD, STABLE),
    (2.0, FORWARD, UNSTABLE),
])
def test_attractive_classification(R, direction, stability):
    coeffs = bifurcation_coefficients(make_example1(R))
    assert coeffs.n == EXAMPLE1_POINTS[R][0]
    assert (coeffs.direction, coeffs.branch_stability) == (direction, stability)
    assert coeffs.supercritical == (stability == STABLE)


@pytest.mark.parametrize("R", sorted(EXAMPLE2_CURVATURE))
def test_repulsive_branches_are_supercritical(R):
    coeffs = bifurcation_coefficients(make_example2(R))
    assert coeffs.direction == FORWARD
    assert coeffs.branch_stability == STABLE


def test_classify_rules():
    attractive = linearize(make_example1())
    repulsive = linearize(make_example2())
    assert classify(attractive, -3.0, -1.0) == (BACKWARD, STABLE)
    assert classify(attractive, -3.0, 1.0) == (FORWARD, UNSTABLE)
    assert classify(repulsive, 8.0, 1.0) == (FORWARD, STABLE)
    assert classify(repulsive, 8.0, -1.0) == (BACKWARD, UNSTABLE)
    with pytest.raises(DegenerateCurvature):
        classify(attractive, -3.0, 0.0)


def test_predicted_branch_amplitude():
    alpha_n, alpha_dd0 = -3.024211, -0.484469
    assert predicted_branch(alpha_n, alpha_dd0, alpha_n) == 0.0
    assert predicted_branch(alpha_n, alpha_dd0, alpha_n - 0.01) == pytest.approx(0.2032, abs=1e-4)
    with pytest.raises(WrongSide):
        predicted_branch(alpha_n, alpha_dd0, alpha_n + 0.01)


def test_subcritical_branch_side():
    coeffs = bifurcation_coefficients(make_example1(2.0))
    with pytest.raises(WrongSide):
        predicted_branch(coeffs.alpha_n, coeffs.alpha_dd0, coeffs.alpha_n - 0.1)
    assert predicted_branch(coeffs.alpha_n, coeffs.alpha_dd0, coeffs.alpha_n + 0.1) > 0


def test_requested_mode_overrides_critical():
    coeffs = bifurcation_coefficients(make_example1(), n=3)
    assert coeffs.n == 3
    assert coeffs.alpha_n == pytest.approx(-3.5777, abs=1e-4)


def test_coefficients_record():
    coeffs = bifurcation_coefficients(make_example1())
    body = coeffs.to_dict()
    assert body['n'] == 2
    assert body['theta_u1'] == pytest.approx(-1.0)
    assert body['direction'] == BACKWARD
    assert body['theta_method'] == 'exact'
    assert 'alpha_dd0' in repr(coeffs)


def test_smooth_step_family_passes_projection_check():
    encoding = SmoothStepPerturbed(RatioQuadratic(1.0, 0.15, 0.5), eps=0.05, gamma=10.0)
    spec = ModelSpec(1.0, 0.0, 0.3, Logistic(), encoding)
    coeffs = bifurcation_coefficients(spec)
    assert coeffs.alpha_n < 0
    assert coeffs.direction in (FORWARD, BACKWARD)

