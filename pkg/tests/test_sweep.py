import math

import numpy as np
import pytest

from src.core.bifurcation import (BACKWARD, FORWARD, STABLE, UNSTABLE, BifurcationCoefficients, Theta,
                                  bifurcation_coefficients)
from src.core.elliptic import Grid
from src.core.solver import SolverConfig
from src.core.sweep import (BRANCH_NAMES, CONTINUATION, FROM_PERTURBATION, BifurcationDiagram,
                            BifurcationRecord, SweepPlan, Window, detect_hysteresis, mass_curve,
                            max_mean_drop, run_sweep, validate_against_normal_form)
from src.utils.errors import InsufficientData, SubcriticalDiagram, SweepError

from cases import make_example1, make_example2, make_no_growth

PERTURBATION = BRANCH_NAMES[FROM_PERTURBATION]
CONTINUED = BRANCH_NAMES[CONTINUATION]


def tiny_config(**changes):
    params = {'dt': 1e-2, 't_max': 2.0, 'steady_tol': 1e-8, 'seed': 3}
    params.update(changes)
    return SolverConfig(Grid(16), **params)


def record(alpha, branch, amplitude, converged=True):
    return BifurcationRecord(alpha, branch, amplitude, 1 if amplitude > 0 else 0, 1.0, converged, 10.0)


def make_coefficients(alpha_n, alpha_dd0, stability=STABLE):
    theta = Theta(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return BifurcationCoefficients(2, alpha_n, 0.5, 0.4, 10.0, 0.8, theta, alpha_dd0,
                                   BACKWARD if alpha_dd0 < 0 else FORWARD, stability)


def test_plan_orders_alphas_from_stable_side():
    attractive = SweepPlan(make_example1(), tiny_config(), n_points=5)
    alphas = attractive.alphas()
    assert attractive.n_crit == 2
    assert attractive.alpha_center == pytest.approx(-3.0242, abs=1e-4)
    assert alphas[0] > alphas[-1]
    assert alphas[0] - attractive.alpha_center == pytest.approx(0.15 * 3.0242, abs=1e-3)

    repulsive = SweepPlan(make_example2(), tiny_config(), n_points=5)
    assert repulsive.alphas()[0] < repulsive.alphas()[-1]


def test_plan_uses_requested_radius():
    plan = SweepPlan(make_example1(), tiny_config(), R=2.0, delta0=1.0, n_points=4)
    assert plan.spec.R == 2.0
    assert plan.n_crit == 1
    assert np.allclose(np.diff(plan.alphas()), -2.0 / 3.0)


def test_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan(make_example1(), tiny_config(), delta0=-1.0)
    with pytest.raises(ValueError):
        SweepPlan(make_example1(), tiny_config(), n_points=1)
    with pytest.raises(ValueError):
        SweepPlan(make_example1(), tiny_config(), directions=('Sideways',))


def test_hysteresis_window_from_disagreeing_branches():
    alphas = np.linspace(-3.0, -2.0, 11)
    records = [record(a, PERTURBATION, 0.0 if a > -2.55 else 1.0) for a in alphas]
    records += [record(a, CONTINUED, 0.0 if a > -2.25 else 1.0) for a in alphas]
    window = detect_hysteresis(BifurcationDiagram(records), amp_tol=0.05)
    assert isinstance(window, Window)
    assert window.alpha_lo == pytest.approx(-2.5)
    assert window.alpha_hi == pytest.approx(-2.3)


def test_no_hysteresis_when_branches_agree():
    alphas = np.linspace(-3.0, -2.0, 11)
    records = [record(a, PERTURBATION, max(0.0, -2.5 - a)) for a in alphas]
    records += [record(a, CONTINUED, max(0.0, -2.5 - a) + 0.01) for a in alphas]
    assert detect_hysteresis(BifurcationDiagram(records), amp_tol=0.05) is None


def test_hysteresis_needs_both_branches():
    records = [record(a, PERTURBATION, 0.0) for a in (-1.0, -2.0)]
    with pytest.raises(InsufficientData):
        detect_hysteresis(BifurcationDiagram(records))
    records.append(record(-1.5, CONTINUED, 0.0))
    with pytest.raises(InsufficientData):
        detect_hysteresis(BifurcationDiagram(records))


def test_diagram_groups_records():
    records = [record(-1.0, CONTINUED, 0.2), record(-2.0, PERTURBATION, 0.0), record(-3.0, PERTURBATION, 0.4)]
    diagram = BifurcationDiagram(records)
    assert diagram.branches == [CONTINUED, PERTURBATION]
    assert [r.alpha for r in diagram.branch(PERTURBATION)] == [-3.0, -2.0]
    assert diagram.rows()[0]['branch'] == CONTINUED


def test_normal_form_on_exact_parabola():
    alpha_n, alpha_dd0 = -3.0, -0.5
    records = []
    for a in np.linspace(-3.5, -2.5, 21):
        ratio = 2.0 * (a - alpha_n) / alpha_dd0
        records.append(record(a, PERTURBATION, 2.0 * math.sqrt(ratio) if ratio > 0 else 0.0))
    report = validate_against_normal_form(BifurcationDiagram(records), make_coefficients(alpha_n, alpha_dd0))
    assert report['relative_deviation'] < 1e-10
    assert report['predicted_slope'] == pytest.approx(-4.0)
    assert len(report['alphas']) == 5
    assert all(a < alpha_n for a in report['alphas'])


def test_normal_form_rejects_subcritical():
    coeffs = make_coefficients(-17.8, 1.97, UNSTABLE)
    with pytest.raises(SubcriticalDiagram):
        validate_against_normal_form(BifurcationDiagram([]), coeffs)


def test_normal_form_needs_converged_points():
    records = [record(a, PERTURBATION, 0.3, converged=False) for a in np.linspace(-3.5, -3.1, 5)]
    records.append(record(-3.2, PERTURBATION, 0.3))
    with pytest.raises(InsufficientData):
        validate_against_normal_form(BifurcationDiagram(records), make_coefficients(-3.0, -0.5))


def test_max_mean_drop():
    rows = [{'R': 2.0, 'mean_u': m} for m in (1.0, 0.99, 0.8, 0.79)]
    rows += [{'R': 0.3, 'mean_u': m} for m in (1.0, 0.995, 0.99)]
    assert max_mean_drop(rows, 2.0) == pytest.approx(0.19)
    assert max_mean_drop(rows, 0.3) == pytest.approx(0.005)
    assert max_mean_drop(rows, 1.0) == 0.0


def test_sweep_records_both_branches():
    plan = SweepPlan(make_example1(), tiny_config(), delta0=0.5, n_points=3)
    diagram = run_sweep(plan)
    assert len(diagram.branch(PERTURBATION)) == 3
    assert len(diagram.branch(CONTINUED)) == 3
    assert sorted(r.alpha for r in diagram.branch(CONTINUED)) == sorted(plan.alphas())


def test_sweep_is_reproducible_across_workers():
    plan = SweepPlan(make_example1(), tiny_config(), delta0=0.5, n_points=3,
                     directions=(FROM_PERTURBATION,))
    serial = run_sweep(plan).rows()
    plan.threads = 2
    parallel = run_sweep(plan).rows()
    assert serial == parallel


def test_mass_curve_on_stable_side():
    rows = mass_curve(make_example1(), [0.3], [-1.0, -1.5], tiny_config(t_max=50.0))
    assert [row['alpha'] for row in rows] == [-1.0, -1.5]
    for row in rows:
        assert row['R'] == 0.3
        assert row['mean_u'] == pytest.approx(1.0, abs=1e-3)
        assert row['peak_count'] == 0 or row['amplitude'] < 1e-3


def test_mass_curve_needs_growth():
    with pytest.raises(SweepError):
        mass_curve(make_no_growth(), [0.3], [-1.0], tiny_config())


def sweep_config():
    return SolverConfig(Grid(64), dt=2e-3, t_max=400.0, steady_tol=1e-6, seed=0)


@pytest.mark.slow
def test_subcritical_branch_shows_hysteresis():
    diagram = run_sweep(SweepPlan(make_example1(2.0), sweep_config(), n_points=40, threads=4))
    window = detect_hysteresis(diagram)
    assert window is not None
    assert window.alpha_hi - window.alpha_lo > 0.1


@pytest.mark.slow
def test_supercritical_branch_has_no_hysteresis():
    spec = make_example1(0.3)
    config = sweep_config()
    plan = SweepPlan(spec, config, n_points=40, threads=4)
    diagram = run_sweep(plan)
    assert detect_hysteresis(diagram) is None

    stable_side = [r for r in diagram.branch(PERTURBATION) if r.alpha > plan.alpha_center]
    assert stable_side
    assert all(r.amplitude <= 2.0 * config.perturb_amp for r in stable_side)

    converged = [r for r in diagram.records if r.converged]
    assert all(r.mean_u <= spec.u_star + 1e-5 for r in converged)

    continued = sorted((r for r in diagram.branch(CONTINUED) if r.converged), key=lambda r: abs(r.alpha))
    for nearer, farther in zip(continued, continued[1:]):
        assert farther.mean_u <= nearer.mean_u + 1e-4


@pytest.mark.slow
def test_mean_density_drops_only_at_subcritical_radius():
    alphas = np.linspace(-1.0, -25.0, 49)
    rows = mass_curve(make_example1(), [0.3, 2.0], alphas, sweep_config())
    assert max_mean_drop(rows, 2.0) > 0.05
    assert max_mean_drop(rows, 0.3) < 0.01


@pytest.mark.slow
def test_supercritical_branch_matches_normal_form():
    spec = make_example1(0.3)
    config = SolverConfig(Grid(64), dt=1e-2, t_max=2000.0, steady_tol=1e-7, seed=0)
    diagram = run_sweep(SweepPlan(spec, config, n_points=40, directions=(CONTINUATION,)))
    report = validate_against_normal_form(diagram, bifurcation_coefficients(spec), branch=CONTINUED)
    assert report['relative_deviation'] < 0.25


@pytest.mark.slow
def test_no_growth_patterns_have_one_peak():
    plan = SweepPlan(make_no_growth(0.3), sweep_config(), delta0=0.2, n_points=5,
                     directions=(FROM_PERTURBATION,))
    diagram = run_sweep(plan)
    patterned = [r for r in diagram.records if r.alpha < plan.alpha_center and r.amplitude > 1e-3]
    assert patterned
    assert all(r.peak_count == 1 for r in patterned)
