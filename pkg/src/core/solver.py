"""
Time integration of the local population / map / smoothed-map system on (0, pi)

    u_t = d u_xx + alpha (u v_x)_x + f(u)
    k_t = g1(u) - g2(u) k
    0   = v_xx - (v - k) / R^2

with Neumann ends. Each step is IMEX: implicit diffusion, explicit conservative
advection and growth, then an exact exponential update of k with u frozen.
"""

import logging
import math

import numpy as np
from scipy.linalg import solve_banded
from scipy.signal import find_peaks

from src.core import elliptic
from src.core.model import eval_f, eval_g, linearize
from src.utils import config
from src.utils.errors import BlowUp, NotConverged

logger = logging.getLogger(__name__)


IN_PHASE = 'InPhase'
OUT_OF_PHASE = 'OutOfPhase'
FLAT = 'Flat'


class SolverConfig:
    """Grid, time step and stopping rule for one run."""

    def __init__(self, grid, dt=config.DEFAULT_DT, t_max=config.DEFAULT_T_MAX,
                 steady_tol=config.DEFAULT_STEADY_TOL, seed=config.DEFAULT_SEED,
                 perturb_amp=config.DEFAULT_PERTURB_AMP, stride=0):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if not t_max > 0:
            raise ValueError(f"t_max must be positive, got {t_max}")
        if not steady_tol > 0:
            raise ValueError(f"steady_tol must be positive, got {steady_tol}")
        if perturb_amp < 0:
            raise ValueError(f"perturb_amp must be non-negative, got {perturb_amp}")
        self.grid = grid
        self.dt = float(dt)
        self.t_max = float(t_max)
        self.steady_tol = float(steady_tol)
        self.seed = int(seed)
        self.perturb_amp = float(perturb_amp)
        self.stride = int(stride)

    def replace(self, **changes):
        params = {'grid': self.grid, 'dt': self.dt, 't_max': self.t_max,
                  'steady_tol': self.steady_tol, 'seed': self.seed,
                  'perturb_amp': self.perturb_amp, 'stride': self.stride}
        params.update(changes)
        return SolverConfig(**params)

    def __repr__(self):
        return (f"SolverConfig({self.grid!r}, dt={self.dt}, t_max={self.t_max}, "
                f"steady_tol={self.steady_tol}, seed={self.seed})")


class FieldState:
    """(u, k, v) on a grid at time t."""

    def __init__(self, u, k, v, grid, t=0.0):
        self.u = np.array(u, dtype=float)
        self.k = np.array(k, dtype=float)
        self.v = np.array(v, dtype=float)
        self.grid = grid
        self.t = float(t)

    def copy(self):
        return FieldState(self.u, self.k, self.v, self.grid, self.t)

    def __repr__(self):
        return f"FieldState(t={self.t:.6g}, mean_u={self.grid.mean(self.u):.6g})"


class RunResult:
    """Outcome of run_to_steady with the observables of the final state."""

    def __init__(self, spec, final, converged, t_final, residual, steps, dt,
                 mass_history, k_bound_violation, trajectory=None):
        self.spec = spec
        self.final = final
        self.converged = converged
        self.t_final = t_final
        self.residual = residual
        self.steps = steps
        self.dt = dt
        self.mass_history = mass_history
        self.k_bound_violation = k_bound_violation
        self.trajectory = trajectory or []
        obs = observables(final)
        self.amplitude = obs['amplitude']
        self.peak_count = obs['peak_count']
        self.mean_u = obs['mean_u']
        self.phase_sign = obs['phase_sign']

    def summary(self):
        return {
            'converged': self.converged,
            't_final': self.t_final,
            'residual': self.residual,
            'steps': self.steps,
            'dt': self.dt,
            'amplitude': self.amplitude,
            'peak_count': self.peak_count,
            'mean_u': self.mean_u,
            'phase_sign': self.phase_sign,
            'k_bound_violation': self.k_bound_violation,
        }

    def __repr__(self):
        return (f"RunResult(converged={self.converged}, t={self.t_final:.6g}, "
                f"amplitude={self.amplitude:.4g}, peaks={self.peak_count}, phase={self.phase_sign})")


def make_initial(spec, solver_config, index=0):
    """
    Constant state plus a zero-mean uniform perturbation of u.

    The random stream is seeded with (seed, index) so concurrent runs are
    independent and each one is reproducible.
    """
    lin = linearize(spec)
    grid = solver_config.grid
    u = np.full(grid.size, lin.u_star)
    if solver_config.perturb_amp > 0:
        rng = np.random.default_rng([solver_config.seed, index])
        eta = rng.uniform(-solver_config.perturb_amp, solver_config.perturb_amp, grid.size)
        eta -= grid.mean(eta)
        u = u + eta
    k = np.full(grid.size, lin.k_star)
    v = elliptic.solve_screened(k, spec.R, grid)
    return FieldState(u, k, v, grid)


def add_mode(state, n, amplitude):
    """Copy of state with amplitude * cos(n x) added to u."""
    kicked = state.copy()
    kicked.u = kicked.u + state.grid.cosine(n, amplitude)
    return kicked


def advective_divergence(u, v, alpha, grid):
    """
    d/dx (alpha u v_x) in conservative face form with zero boundary flux.
    Face values of u are arithmetic means; end cells have half width.
    """
    h = grid.h
    flux = alpha * 0.5 * (u[:-1] + u[1:]) * np.diff(v) / h
    div = np.empty_like(u)
    div[1:-1] = (flux[1:] - flux[:-1]) / h
    div[0] = flux[0] / (0.5 * h)
    div[-1] = -flux[-1] / (0.5 * h)
    return div


def update_map(spec, k, u, dt):
    """Exact solution of k_t = g1(u) - g2(u) k over dt with u frozen."""
    g1 = eval_g(spec, 'g1', u)
    g2 = eval_g(spec, 'g2', u)
    return k * np.exp(-g2 * dt) - (g1 / g2) * np.expm1(-g2 * dt)


class _Stepper:

    def __init__(self, spec, grid, dt):
        self.spec = spec
        self.grid = grid
        self.dt = dt
        self.diffusion = elliptic.shifted_bands(grid.n_cells, dt * spec.d)

    def advance(self, u, k):
        spec, grid, dt = self.spec, self.grid, self.dt
        v = elliptic.solve_screened(k, spec.R, grid)
        rhs = u + dt * (advective_divergence(u, v, spec.alpha, grid) + eval_f(spec, u))
        u_new = solve_banded((1, 1), self.diffusion, rhs, check_finite=False)
        if not np.all(np.isfinite(u_new)) or np.max(u_new) > config.BLOWUP_DENSITY:
            raise BlowUp(f"density blew up (max u = {np.max(u_new):.3g}) at dt = {dt}")
        k_new = update_map(spec, k, u_new, dt)
        if not np.all(np.isfinite(k_new)):
            raise BlowUp(f"map became non-finite at dt = {dt}")
        v_new = elliptic.solve_screened(k_new, spec.R, grid)
        return u_new, k_new, v_new


def step(spec, state, dt):
    """
    One IMEX step.

    Raises:
        BlowUp: non-finite values or max(u) above config.BLOWUP_DENSITY
    """
    u, k, v = _Stepper(spec, state.grid, dt).advance(state.u, state.k)
    return FieldState(u, k, v, state.grid, state.t + dt)


def _integrate(spec, solver_config, initial, dt):
    grid = solver_config.grid
    stepper = _Stepper(spec, grid, dt)
    u, k = initial.u.copy(), initial.k.copy()
    v = initial.v.copy()
    t = initial.t
    bound = max(float(np.max(k)), _map_ceiling(spec, u))
    violation = max(0.0, -float(np.min(k)))
    mass_history = [(t, grid.integrate(u))]
    trajectory = []
    if solver_config.stride:
        trajectory.append(FieldState(u, k, v, grid, t))
    residual = math.inf
    steps = 0
    converged = False
    max_steps = int(math.ceil((solver_config.t_max - t) / dt))
    while steps < max_steps:
        u_new, k_new, v = stepper.advance(u, k)
        steps += 1
        t = initial.t + steps * dt
        residual = float(np.max(np.abs(u_new - u))) / dt
        u, k = u_new, k_new

        bound = max(bound, _map_ceiling(spec, u))
        violation = max(violation, float(np.max(k)) - bound, -float(np.min(k)))
        if steps % config.MASS_SAMPLE_EVERY == 0:
            mass_history.append((t, grid.integrate(u)))
        if solver_config.stride and steps % solver_config.stride == 0:
            trajectory.append(FieldState(u, k, v, grid, t))
        if residual <= solver_config.steady_tol:
            converged = True
            break

    if mass_history[-1][0] != t:
        mass_history.append((t, grid.integrate(u)))
    final = FieldState(u, k, v, grid, t)
    return RunResult(spec, final, converged, t, residual, steps, dt, mass_history,
                     max(0.0, violation), trajectory)


def _map_ceiling(spec, u):
    return float(np.max(eval_g(spec, 'g1', u) / eval_g(spec, 'g2', u)))


def _check_cfl(spec, state, dt):
    v_x = np.diff(state.v) / state.grid.h
    speed = abs(spec.alpha) * float(np.max(np.abs(v_x))) if v_x.size else 0.0
    if speed > 0 and dt > state.grid.h / (2.0 * speed):
        logger.warning("dt=%g exceeds the advective CFL bound %g", dt, state.grid.h / (2.0 * speed))


def run_to_steady(spec, solver_config, initial=None, raise_on_fail=False):
    """
    Step until max|u^{m+1} - u^m| / dt <= steady_tol or t > t_max.

    On BlowUp the run restarts from the initial state with dt halved, up to
    config.MAX_DT_HALVINGS times.

    Args:
        spec: ModelSpec
        solver_config: SolverConfig
        initial: FieldState (default: make_initial)
        raise_on_fail: Raise NotConverged instead of returning the partial result

    Returns:
        RunResult

    Raises:
        BlowUp: still blowing up after the last halving
        NotConverged: only when raise_on_fail is set
    """
    if initial is None:
        initial = make_initial(spec, solver_config)
    dt = solver_config.dt
    _check_cfl(spec, initial, dt)
    logger.debug("run start: %r alpha=%g R=%g", solver_config, spec.alpha, spec.R)
    for attempt in range(config.MAX_DT_HALVINGS + 1):
        try:
            result = _integrate(spec, solver_config, initial, dt)
            break
        except BlowUp as e:
            if attempt == config.MAX_DT_HALVINGS:
                raise
            logger.warning("%s; retrying with dt = %g", e, dt / 2)
            dt /= 2.0
    if result.converged:
        logger.info("converged at t=%.4g after %d steps: %r", result.t_final, result.steps, result)
    else:
        logger.warning("not converged by t=%.4g (residual %.3e)", result.t_final, result.residual)
        if raise_on_fail:
            raise NotConverged(f"residual {result.residual:.3e} > {solver_config.steady_tol:g} "
                               f"at t = {result.t_final:g}", result=result)
    return result


def peak_count(u, grid):
    """
    Strict local maxima of u reflected onto [-pi, pi) with periodic wraparound,
    ignoring peaks less prominent than config.PEAK_PROMINENCE_FRACTION * amplitude.
    """
    u = np.asarray(u, dtype=float)
    amplitude = float(np.max(u) - np.min(u))
    if amplitude < config.FLAT_AMPLITUDE:
        return 0
    _, full = grid.reflect(u)
    full = np.roll(full, -int(np.argmin(full)))
    closed = np.append(full, full[0])
    peaks, _ = find_peaks(closed, prominence=config.PEAK_PROMINENCE_FRACTION * amplitude)
    return int(len(peaks))


def phase_sign(state):
    """Sign of the covariance of u and k over the domain."""
    grid = state.grid
    if float(np.max(state.u) - np.min(state.u)) < config.FLAT_AMPLITUDE:
        return FLAT
    covariance = grid.integrate((state.u - grid.mean(state.u)) * (state.k - grid.mean(state.k)))
    return IN_PHASE if covariance > 0 else OUT_OF_PHASE


def observables(state):
    u = state.u
    return {
        'amplitude': float(np.max(u) - np.min(u)),
        'peak_count': peak_count(u, state.grid),
        'mean_u': state.grid.mean(u),
        'phase_sign': phase_sign(state),
    }


def steady_state_identity_check(result):
    """|integral of f(u)| over the domain; vanishes at a steady state."""
    final = result.final
    return abs(final.grid.integrate(eval_f(result.spec, final.u)))


def final_profile_rows(state):
    """Rows x, u, k, v over the reflected domain [-pi, pi]."""
    x, u = state.grid.reflect(state.u, closed=True)
    _, k = state.grid.reflect(state.k, closed=True)
    _, v = state.grid.reflect(state.v, closed=True)
    return [{'x': xi, 'u': ui, 'k': ki, 'v': vi} for xi, ui, ki, vi in zip(x, u, k, v)]


def trajectory_rows(result):
    """Rows t, x, u, k, v for every stored snapshot on [0, pi]."""
    rows = []
    for snapshot in result.trajectory:
        for x, u, k, v in zip(snapshot.grid.nodes, snapshot.u, snapshot.k, snapshot.v):
            rows.append({'t': snapshot.t, 'x': x, 'u': u, 'k': k, 'v': v})
    return rows
