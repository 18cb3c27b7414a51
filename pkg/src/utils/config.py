"""
Configuration for the spatial-memory pattern toolkit.

Module-level constants hold every default. RunConfig and parse_config turn a
flat `key = value` file into a validated configuration; command-line
overrides go through the same validators.
"""

import math
import os


TOOL_NAME = 'memopat'
TOOL_VERSION = '1.0.0'


# Model defaults
DEFAULT_D = 1.0
DEFAULT_ALPHA = 0.0
DEFAULT_R = 1.0
DEFAULT_GROWTH = 'logistic'
DEFAULT_GROWTH_RATE = 1.0
DEFAULT_CAPACITY = 1.0
DEFAULT_RHO = 1.0
DEFAULT_MU = 0.15
DEFAULT_BETA = 0.5
DEFAULT_BASE_ENCODING = 'ratio_quadratic'
DEFAULT_STEP_EPS = 0.05
DEFAULT_STEP_GAMMA = 10.0

FD_STEP = 1e-4


# Stability
DEFAULT_N_MAX = 64
DEFAULT_R_MIN = 0.05
DEFAULT_R_MAX = 3.0
DEFAULT_N_R_SAMPLES = 120


# Bifurcation
THETA_METHODS = ['exact', 'printed']
DEFAULT_THETA_METHOD = 'exact'
CURVATURE_REL_TOL = 1e-6
PROJECTION_NODES = 4096


# Grid and solver
MIN_CELLS = 8
DEFAULT_N_CELLS = 256
DEFAULT_DT = 1e-3
DEFAULT_T_MAX = 2000.0
DEFAULT_STEADY_TOL = 1e-8
DEFAULT_SEED = 0
DEFAULT_PERTURB_AMP = 0.01
BLOWUP_DENSITY = 1e6
MAX_DT_HALVINGS = 6
PEAK_PROMINENCE_FRACTION = 1e-4
FLAT_AMPLITUDE = 1e-6
MASS_SAMPLE_EVERY = 100


# Convolution oracle
KERNEL_TAIL_MASS = 1e-12


# Sweep
DEFAULT_N_POINTS = 50
MIN_SWEEP_POINTS = 40
MAX_SWEEP_POINTS = 60
DEFAULT_DELTA_FRACTION = 0.15
CONTINUATION_KICK = 0.5
DEFAULT_AMP_TOL = 0.05
NORMAL_FORM_POINTS = 5
DEFAULT_THREADS = 1
DEFAULT_N_ALPHA = 40


# Output
OUTPUT_ENV_VAR = 'MEMOPAT_OUTPUT'
DEFAULT_OUTPUT_DIR = 'output'
CSV_FLOAT_FORMAT = '.17g'
SVG_WIDTH_IN = 6.0
SVG_HEIGHT_IN = 4.0

COMMANDS = [
    'stability-region', 'dispersion', 'bifcoef', 'simulate',
    'sweep', 'mass-curve', 'verify-equivalence',
]


DEBUG_MODE = False


LOG_LEVEL = 'INFO'


SEPARATOR = "=" * 60


def _as_bool(text):
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"expected a boolean, got '{text}'")


def _as_float_list(text):
    items = [item for item in text.replace(';', ',').split(',') if item.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of numbers")
    return [float(item) for item in items]


def _finite(value):
    return math.isfinite(value)


def _positive(value):
    return _finite(value) and value > 0


def _non_negative(value):
    return _finite(value) and value >= 0


def _choice(options):
    return lambda value: value in options


# key -> (parser, default, validator, description)
CONFIG_KEYS = {
    'command': (str, 'simulate', _choice(COMMANDS), 'analysis to run'),
    'd': (float, DEFAULT_D, _positive, 'diffusion rate'),
    'alpha': (float, DEFAULT_ALPHA, _finite, 'aggregation strength'),
    'R': (float, DEFAULT_R, _positive, 'perceptual radius'),
    'growth': (str, DEFAULT_GROWTH, _choice(['logistic', 'none']), 'growth model'),
    'growth_rate': (float, DEFAULT_GROWTH_RATE, _positive, 'logistic rate'),
    'capacity': (float, DEFAULT_CAPACITY, _positive, 'logistic capacity'),
    'u_star': (float, None, _positive, 'constant density for the no-growth model'),
    'encoding': (str, None, _choice(['ratio_quadratic', 'ratio_linear', 'linear', 'smooth_step']),
                 'encoding family'),
    'base_encoding': (str, DEFAULT_BASE_ENCODING, _choice(['ratio_quadratic', 'ratio_linear', 'linear']),
                      'family perturbed by smooth_step'),
    'rho': (float, DEFAULT_RHO, _positive, 'excitation scale'),
    'mu': (float, DEFAULT_MU, _positive, 'baseline adaptation rate'),
    'beta': (float, DEFAULT_BETA, _non_negative, 'density-dependent adaptation rate'),
    'eps': (float, DEFAULT_STEP_EPS, lambda v: 0 < v < 1, 'smooth step height'),
    'gamma': (float, DEFAULT_STEP_GAMMA, lambda v: _finite(v) and v > 1, 'smooth step steepness'),
    'n_cells': (int, DEFAULT_N_CELLS, lambda v: v >= MIN_CELLS and v % 2 == 0, 'grid cells (even, >= 8)'),
    'dt': (float, DEFAULT_DT, _positive, 'time step'),
    't_max': (float, DEFAULT_T_MAX, _positive, 'time horizon'),
    'steady_tol': (float, DEFAULT_STEADY_TOL, _positive, 'steady-state tolerance'),
    'seed': (int, DEFAULT_SEED, lambda v: v >= 0, 'random seed'),
    'perturb_amp': (float, DEFAULT_PERTURB_AMP, _non_negative, 'initial perturbation amplitude'),
    'n_max': (int, DEFAULT_N_MAX, lambda v: v >= 1, 'largest wavenumber scanned'),
    'mode': (int, None, lambda v: v >= 1, 'wavenumber for bifcoef (default: critical)'),
    'theta_method': (str, DEFAULT_THETA_METHOD, _choice(THETA_METHODS), 'second-order correction'),
    'delta0': (float, None, _positive, 'sweep half-width (default 15% of threshold)'),
    'n_points': (int, DEFAULT_N_POINTS, lambda v: v >= 2, 'sweep points'),
    'R_min': (float, DEFAULT_R_MIN, _positive, 'smallest R for stability-region'),
    'R_max': (float, DEFAULT_R_MAX, _positive, 'largest R for stability-region'),
    'n_R_samples': (int, DEFAULT_N_R_SAMPLES, lambda v: v >= 2, 'R samples for stability-region'),
    'R_list': (_as_float_list, None, lambda v: all(_positive(x) for x in v), 'radii for mass-curve'),
    'alpha_min': (float, None, _finite, 'first alpha for mass-curve'),
    'alpha_max': (float, None, _finite, 'last alpha for mass-curve'),
    'n_alpha': (int, DEFAULT_N_ALPHA, lambda v: v >= 2, 'alpha samples for mass-curve'),
    'stride': (int, 0, lambda v: v >= 0, 'trajectory snapshot stride in steps (0 = off)'),
    'threads': (int, DEFAULT_THREADS, lambda v: v >= 1, 'worker processes for sweeps'),
    'amp_tol': (float, DEFAULT_AMP_TOL, _positive, 'hysteresis amplitude tolerance'),
    'output': (str, DEFAULT_OUTPUT_DIR, lambda v: bool(v.strip()), 'output directory'),
    'emit_svg': (_as_bool, False, lambda v: True, 'write SVG figures'),
    'log_level': (str, LOG_LEVEL, _choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']), 'logging level'),
}


class RunConfig:
    """A fully validated configuration: every key of CONFIG_KEYS is set."""

    def __init__(self, values):
        self.values = dict(values)

    def __getattr__(self, name):
        values = self.__dict__.get('values', {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def replace(self, **changes):
        values = dict(self.values)
        values.update(changes)
        return RunConfig(values)

    def resolved_items(self):
        """Sorted (key, value) pairs, used in output metadata."""
        return sorted(self.values.items())

    def model_spec(self):
        """Build the ModelSpec these keys describe."""
        from src.core import model
        from src.utils.errors import ModelError, ValidationError

        try:
            growth = model.get_growth(self.growth, self.growth_rate, self.capacity)
            encoding = model.get_encoding(
                self.encoding, rho=self.rho, mu=self.mu, beta=self.beta,
                base_encoding=self.base_encoding, eps=self.eps, gamma=self.gamma)
            return model.ModelSpec(self.d, self.alpha, self.R, growth, encoding,
                                   u_star_override=self.u_star)
        except (ValueError, ModelError) as e:
            raise ValidationError(str(e)) from e

    def solver_config(self):
        from src.core.elliptic import Grid
        from src.core.solver import SolverConfig

        return SolverConfig(Grid(self.n_cells), dt=self.dt, t_max=self.t_max,
                            steady_tol=self.steady_tol, seed=self.seed,
                            perturb_amp=self.perturb_amp, stride=self.stride)

    def __repr__(self):
        return f"RunConfig(command={self.values.get('command')!r})"


def convert_value(key, raw, line=None):
    """
    Parse and validate one raw string value for key.

    Raises:
        UnknownKey, ValidationError
    """
    from src.utils.errors import UnknownKey, ValidationError

    if key not in CONFIG_KEYS:
        raise UnknownKey("unknown configuration key", key=key, line=line)
    parser, _, validator, description = CONFIG_KEYS[key]
    try:
        value = parser(raw.strip())
    except ValueError as e:
        raise ValidationError(f"cannot parse '{raw.strip()}' as {description}: {e}", key=key, line=line)
    if not validator(value):
        raise ValidationError(f"invalid value {value!r} for {description}", key=key, line=line)
    return value


def parse_assignments(text):
    """
    Split config text into (key, raw_value, line_number) triples.

    Raises:
        ParseError: a non-comment line without '=' or with an empty key
    """
    from src.utils.errors import ParseError

    assignments = []
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ParseError(f"expected 'key = value', got '{raw_line.strip()}'", line=number)
        key, value = line.split('=', 1)
        key = key.strip()
        if not key or not value.strip():
            raise ParseError(f"expected 'key = value', got '{raw_line.strip()}'", key=key or None, line=number)
        assignments.append((key, value, number))
    return assignments


def parse_config(text, overrides=None, environ=None):
    """
    Parse flat `key = value` text into a RunConfig.

    Args:
        text: Configuration text; '#' starts a comment
        overrides: Optional list of (key, raw_value) pairs applied after the file
        environ: Environment mapping (defaults to os.environ) for MEMOPAT_OUTPUT

    Returns:
        RunConfig with defaults applied

    Raises:
        ParseError, UnknownKey, ValidationError
    """
    from src.utils.errors import ValidationError

    values = {key: spec[1] for key, spec in CONFIG_KEYS.items()}
    seen = {}
    for key, raw, number in parse_assignments(text):
        if key in seen:
            raise ValidationError(f"duplicate key (first set on line {seen[key]})", key=key, line=number)
        seen[key] = number
        values[key] = convert_value(key, raw, number)

    for key, raw in overrides or []:
        values[key] = convert_value(key, raw)

    environ = os.environ if environ is None else environ
    if environ.get(OUTPUT_ENV_VAR):
        values['output'] = convert_value('output', environ[OUTPUT_ENV_VAR])

    needs_model = values['command'] != 'verify-equivalence'
    if needs_model and values['encoding'] is None:
        raise ValidationError("the map encoding family must be set", key='encoding')
    if values['growth'] == 'none' and values['u_star'] is None:
        raise ValidationError("growth = none needs u_star (the initial mean density)", key='u_star')
    if values['R_min'] >= values['R_max']:
        raise ValidationError("R_min must be smaller than R_max", key='R_min', line=seen.get('R_min'))

    run_config = RunConfig(values)
    if needs_model:
        run_config.model_spec()
    return run_config
