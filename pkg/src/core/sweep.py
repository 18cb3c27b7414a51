"""
Numerical bifurcation diagrams around the critical threshold.

Two branches are traced over a window of alpha values. The perturbation
branch runs every alpha independently from a slightly perturbed constant
state. The continuation branch starts beyond the threshold and steps back,
seeding each run with the previous terminal state.
"""

import collections
import logging
import multiprocessing as mp

import numpy as np

from src.core.model import linearize
from src.core.solver import add_mode, make_initial, run_to_steady
from src.core.stability import critical_threshold
from src.utils import config
from src.utils.errors import InsufficientData, SubcriticalDiagram, SweepError

logger = logging.getLogger(__name__)


FROM_PERTURBATION = 'FromPerturbation'
CONTINUATION = 'Continuation'

BRANCH_NAMES = {
    FROM_PERTURBATION: 'Perturbation',
    CONTINUATION: 'Continuation',
}


Window = collections.namedtuple('Window', ['alpha_lo', 'alpha_hi'])


class BifurcationRecord:
    """Steady state reached at one alpha on one branch."""

    def __init__(self, alpha, branch, amplitude, peak_count, mean_u, converged,
                 t_final, phase_sign=None):
        self.alpha = float(alpha)
        self.branch = branch
        self.amplitude = float(amplitude)
        self.peak_count = int(peak_count)
        self.mean_u = float(mean_u)
        self.converged = bool(converged)
        self.t_final = float(t_final)
        self.phase_sign = phase_sign

    @classmethod
    def from_result(cls, alpha, branch, result):
        return cls(alpha, branch, result.amplitude, result.peak_count, result.mean_u,
                   result.converged, result.t_final, result.phase_sign)

    def to_dict(self):
        return {
            'alpha': self.alpha,
            'branch': self.branch,
            'amplitude': self.amplitude,
            'peak_count': self.peak_count,
            'mean_u': self.mean_u,
            'converged': self.converged,
            't_final': self.t_final,
        }

    def __repr__(self):
        return (f"BifurcationRecord({self.branch}, alpha={self.alpha:.6g}, "
                f"amplitude={self.amplitude:.4g}, peaks={self.peak_count})")


class BifurcationDiagram:

    def __init__(self, records, plan=None):
        self.records = sorted(records, key=lambda r: (r.branch, r.alpha))
        self.plan = plan

    def branch(self, name):
        return [r for r in self.records if r.branch == name]

    @property
    def branches(self):
        return sorted({r.branch for r in self.records})

    def rows(self):
        return [r.to_dict() for r in self.records]


class SweepPlan:
    """
    Alpha window around the critical threshold for one radius.

    Args:
        spec: ModelSpec template (its alpha is ignored)
        solver_config: SolverConfig shared by all points
        R: Radius (defaults to spec.R)
        delta0: Half-width (defaults to config.DEFAULT_DELTA_FRACTION of |alpha_crit|)
        n_points: Number of alpha samples
        directions: Branches to trace
        threads: Worker processes for the perturbation branch
    """

    def __init__(self, spec, solver_config, R=None, delta0=None, n_points=config.DEFAULT_N_POINTS,
                 directions=(FROM_PERTURBATION, CONTINUATION), threads=config.DEFAULT_THREADS,
                 n_max=config.DEFAULT_N_MAX):
        R = spec.R if R is None else float(R)
        self.spec = spec.with_params(R=R)
        self.solver_config = solver_config
        self.R = R
        lin = linearize(self.spec)
        self.w_u_sign = 1 if lin.w_u > 0 else -1
        self.alpha_center, self.n_crit = critical_threshold(lin, self.spec.d, R, lin.growth_present, n_max)
        if delta0 is None:
            delta0 = config.DEFAULT_DELTA_FRACTION * abs(self.alpha_center)
        if not delta0 > 0:
            raise ValueError(f"delta0 must be positive, got {delta0}")
        if n_points < 2:
            raise ValueError(f"n_points must be >= 2, got {n_points}")
        if not config.MIN_SWEEP_POINTS <= n_points <= config.MAX_SWEEP_POINTS:
            logger.debug("n_points=%d outside the usual %d-%d range", n_points,
                         config.MIN_SWEEP_POINTS, config.MAX_SWEEP_POINTS)
        unknown = set(directions) - set(BRANCH_NAMES)
        if unknown:
            raise ValueError(f"Unknown sweep directions: {sorted(unknown)}")
        self.delta0 = float(delta0)
        self.n_points = int(n_points)
        self.directions = tuple(directions)
        self.threads = int(threads)

    def alphas(self):
        """Window samples ordered from the stable side into the unstable side."""
        grid = np.linspace(self.alpha_center - self.delta0, self.alpha_center + self.delta0, self.n_points)
        return grid[::-1] if self.w_u_sign > 0 else grid

    def __repr__(self):
        return (f"SweepPlan(R={self.R}, alpha_center={self.alpha_center:.6g}, "
                f"delta0={self.delta0:.4g}, n_points={self.n_points})")


def _perturbation_point(task):
    spec, solver_config, alpha, index = task
    point = spec.with_params(alpha=alpha)
    result = run_to_steady(point, solver_config, make_initial(point, solver_config, index))
    logger.info("perturbation alpha=%.6g: %r", alpha, result)
    return BifurcationRecord.from_result(alpha, BRANCH_NAMES[FROM_PERTURBATION], result)


def _perturbation_branch(plan):
    tasks = [(plan.spec, plan.solver_config, float(alpha), index)
             for index, alpha in enumerate(plan.alphas())]
    if plan.threads > 1:
        with mp.Pool(plan.threads) as pool:
            return list(pool.imap(_perturbation_point, tasks))
    return [_perturbation_point(task) for task in tasks]


def _continuation_branch(plan):
    alphas = plan.alphas()[::-1]
    records = []
    state = None
    for index, alpha in enumerate(alphas):
        point = plan.spec.with_params(alpha=float(alpha))
        if state is None:
            initial = add_mode(make_initial(point, plan.solver_config, index),
                               plan.n_crit, config.CONTINUATION_KICK)
        else:
            initial = state.copy()
            initial.t = 0.0
        result = run_to_steady(point, plan.solver_config, initial)
        state = result.final
        logger.info("continuation alpha=%.6g: %r", alpha, result)
        records.append(BifurcationRecord.from_result(alpha, BRANCH_NAMES[CONTINUATION], result))
    return records


def run_sweep(plan):
    """
    Trace the branches named by plan.directions.

    Returns:
        BifurcationDiagram
    """
    logger.info("sweep %r", plan)
    records = []
    if FROM_PERTURBATION in plan.directions:
        records.extend(_perturbation_branch(plan))
    if CONTINUATION in plan.directions:
        records.extend(_continuation_branch(plan))
    return BifurcationDiagram(records, plan)


def detect_hysteresis(diagram, amp_tol=config.DEFAULT_AMP_TOL):
    """
    Alpha interval where the two branches disagree by more than amp_tol.

    Returns:
        Window or None

    Raises:
        InsufficientData: a branch is missing or the branches share no alpha
    """
    perturbation = {round(r.alpha, 12): r for r in diagram.branch(BRANCH_NAMES[FROM_PERTURBATION])}
    continuation = {round(r.alpha, 12): r for r in diagram.branch(BRANCH_NAMES[CONTINUATION])}
    if not perturbation or not continuation:
        raise InsufficientData("hysteresis detection needs both branches")
    common = sorted(set(perturbation) & set(continuation))
    if not common:
        raise InsufficientData("branches share no alpha values")
    split = [a for a in common
             if abs(perturbation[a].amplitude - continuation[a].amplitude) > amp_tol]
    if not split:
        return None
    return Window(min(split), max(split))


def mass_curve(spec, R_list, alpha_grid, solver_config):
    """
    Mean density along alpha for each radius.

    Each series is chained: the run at alpha_j starts from the steady state at
    alpha_{j-1} plus fresh zero-mean noise of size perturb_amp.

    Returns:
        list of dict rows: R, alpha, mean_u, amplitude, peak_count, converged
    """
    if not spec.growth.present:
        raise SweepError("mass_curve needs a growth model")
    rows = []
    grid = solver_config.grid
    for r_index, R in enumerate(R_list):
        series_spec = spec.with_params(R=float(R))
        state = None
        for j, alpha in enumerate(alpha_grid):
            point = series_spec.with_params(alpha=float(alpha))
            if state is None:
                initial = make_initial(point, solver_config, index=r_index)
            else:
                initial = state.copy()
                initial.t = 0.0
                if solver_config.perturb_amp > 0:
                    rng = np.random.default_rng([solver_config.seed, r_index, j])
                    noise = rng.uniform(-solver_config.perturb_amp, solver_config.perturb_amp, grid.size)
                    initial.u = initial.u + noise - grid.mean(noise)
            result = run_to_steady(point, solver_config, initial)
            state = result.final
            rows.append({
                'R': float(R),
                'alpha': float(alpha),
                'mean_u': result.mean_u,
                'amplitude': result.amplitude,
                'peak_count': result.peak_count,
                'converged': result.converged,
            })
        logger.info("mass curve R=%g: %d points", R, len(alpha_grid))
    return rows


def max_mean_drop(rows, R):
    """Largest single-step decrease of mean_u along the series of radius R."""
    series = [row['mean_u'] for row in rows if row['R'] == R]
    if len(series) < 2:
        return 0.0
    drops = -np.diff(series)
    return float(max(0.0, np.max(drops)))


def validate_against_normal_form(diagram, coeffs, branch=BRANCH_NAMES[FROM_PERTURBATION],
                                 points=config.NORMAL_FORM_POINTS):
    """
    Least-squares slope of (amplitude / 2)^2 against alpha - alpha_n over the
    converged post-onset points nearest the threshold, compared with 2 / alpha''(0).

    Returns:
        dict: slope, predicted_slope, relative_deviation, alphas used

    Raises:
        SubcriticalDiagram: the local branch is unstable
        InsufficientData: fewer than `points` converged post-onset records
    """
    if not coeffs.supercritical:
        raise SubcriticalDiagram("the local branch is unstable; the observed branch is not the normal-form one")
    records = [r for r in diagram.branch(branch)
               if r.converged and r.amplitude > config.FLAT_AMPLITUDE
               and (r.alpha - coeffs.alpha_n) / coeffs.alpha_dd0 > 0]
    if len(records) < points:
        raise InsufficientData(f"need {points} converged post-onset points, got {len(records)}")
    records = sorted(records, key=lambda r: abs(r.alpha - coeffs.alpha_n))[:points]
    x = np.array([r.alpha - coeffs.alpha_n for r in records])
    y = np.array([(0.5 * r.amplitude) ** 2 for r in records])
    slope, intercept = np.polyfit(x, y, 1)
    predicted = 2.0 / coeffs.alpha_dd0
    deviation = abs(slope - predicted) / abs(predicted)
    logger.info("normal-form slope %.6g vs predicted %.6g (deviation %.3g)", slope, predicted, deviation)
    return {
        'slope': float(slope),
        'intercept': float(intercept),
        'predicted_slope': predicted,
        'relative_deviation': float(deviation),
        'alphas': [r.alpha for r in records],
    }
