import pytest

from src.core.model import NoGrowth, RatioLinear, SmoothStepPerturbed
from src.utils import config
from src.utils.errors import ConfigError, ParseError, UnknownKey, ValidationError

BASE = """
# example 1 at the quarter radius
encoding = ratio_quadratic
mu = 0.15
beta = 0.5
R = 0.3
"""


def test_defaults_fill_missing_keys():
    run_config = config.parse_config(BASE, environ={})
    assert run_config.command == 'simulate'
    assert run_config.R == 0.3
    assert run_config.d == config.DEFAULT_D
    assert run_config.n_cells == config.DEFAULT_N_CELLS
    assert run_config.emit_svg is False
    assert run_config.output == config.DEFAULT_OUTPUT_DIR


def test_comments_and_blank_lines():
    text = "encoding = linear   # trailing comment\n\n   # only a comment\nalpha = -2.5\n"
    run_config = config.parse_config(text, environ={})
    assert run_config.encoding == 'linear'
    assert run_config.alpha == -2.5


def test_empty_file_names_the_missing_key():
    with pytest.raises(ValidationError) as info:
        config.parse_config('', environ={})
    assert info.value.key == 'encoding'
    assert 'encoding' in str(info.value)


def test_empty_file_is_enough_for_equivalence_check():
    run_config = config.parse_config('', [('command', 'verify-equivalence')], environ={})
    assert run_config.encoding is None
    assert run_config.R == config.DEFAULT_R


def test_line_without_assignment():
    with pytest.raises(ParseError) as info:
        config.parse_config(BASE + "R 0.3\n", environ={})
    assert info.value.line == 7
    assert 'line 7' in str(info.value)


def test_unknown_key():
    with pytest.raises(UnknownKey) as info:
        config.parse_config(BASE + "radius = 2\n", environ={})
    assert info.value.key == 'radius'


def test_duplicate_key():
    with pytest.raises(ValidationError) as info:
        config.parse_config(BASE + "R = 2.0\n", environ={})
    assert info.value.key == 'R'
    assert 'line 6' in str(info.value)


@pytest.mark.parametrize("line,key", [
    ("R = -1", 'R'),
    ("n_cells = 33", 'n_cells'),
    ("n_cells = 4", 'n_cells'),
    ("dt = zero", 'dt'),
    ("eps = 1.5", 'eps'),
    ("gamma = 1", 'gamma'),
    ("growth = exponential", 'growth'),
    ("theta_method = guess", 'theta_method'),
    ("emit_svg = maybe", 'emit_svg'),
    ("R_list = 0.3,-2", 'R_list'),
])
def test_invalid_values(line, key):
    with pytest.raises(ValidationError) as info:
        config.parse_config(BASE + line + "\n", environ={})
    assert info.value.key == key


def test_model_level_validation_is_reported_as_config_error():
    with pytest.raises(ConfigError):
        config.parse_config("encoding = ratio_linear\nmu = 0\n", environ={})


def test_no_growth_needs_constant_density():
    with pytest.raises(ValidationError) as info:
        config.parse_config(BASE + "growth = none\n", environ={})
    assert info.value.key == 'u_star'
    run_config = config.parse_config(BASE + "growth = none\nu_star = 1.5\n", environ={})
    spec = run_config.model_spec()
    assert isinstance(spec.growth, NoGrowth)
    assert spec.u_star == 1.5


def test_radius_range_order():
    with pytest.raises(ValidationError):
        config.parse_config(BASE + "R_min = 2\nR_max = 1\n", environ={})


def test_overrides_win_over_file():
    run_config = config.parse_config(BASE, [('R', '2.0'), ('encoding', 'ratio_linear')], environ={})
    assert run_config.R == 2.0
    assert isinstance(run_config.model_spec().encoding, RatioLinear)


def test_output_environment_variable():
    run_config = config.parse_config(BASE + "output = here\n", environ={config.OUTPUT_ENV_VAR: '/tmp/elsewhere'})
    assert run_config.output == '/tmp/elsewhere'
    assert config.parse_config(BASE, environ={config.OUTPUT_ENV_VAR: ''}).output == config.DEFAULT_OUTPUT_DIR


def test_list_and_bool_values():
    run_config = config.parse_config(BASE + "R_list = 0.3, 2.0\nemit_svg = yes\n", environ={})
    assert run_config.R_list == [0.3, 2.0]
    assert run_config.emit_svg is True


def test_smooth_step_spec():
    text = "encoding = smooth_step\nbase_encoding = ratio_quadratic\neps = 0.05\ngamma = 100\n"
    spec = config.parse_config(text, environ={}).model_spec()
    assert isinstance(spec.encoding, SmoothStepPerturbed)
    assert spec.encoding.center == spec.u_star


def test_solver_config_from_keys():
    run_config = config.parse_config(BASE + "n_cells = 64\ndt = 0.01\nseed = 5\nstride = 20\n", environ={})
    solver_config = run_config.solver_config()
    assert solver_config.grid.n_cells == 64
    assert solver_config.dt == 0.01
    assert solver_config.seed == 5
    assert solver_config.stride == 20


def test_run_config_access():
    run_config = config.parse_config(BASE, environ={})
    with pytest.raises(AttributeError):
        run_config.missing_key
    assert run_config.replace(R=1.0).R == 1.0
    assert run_config.R == 0.3
    keys = [key for key, _ in run_config.resolved_items()]
    assert keys == sorted(config.CONFIG_KEYS)


def test_config_errors_are_value_errors():
    assert issubclass(ConfigError, ValueError)
    assert str(ConfigError('bad', key='R', line=3)) == "bad (key 'R', line 3)"
