"""
Command-line entry point for the spatial-memory pattern toolkit.
Parses the configuration, runs the selected analysis and writes CSV/SVG artifacts.
"""

import argparse
import pathlib
import sys
import traceback

import numpy as np

from src.core import bifurcation, elliptic, solver, stability, sweep
from src.core.model import linearize
from src.utils import config, utils
from src.utils.errors import ConfigError, MemopatError, ValidationError


def _metadata(run_config):
    return utils.metadata_lines(run_config, command=run_config.command, seed=run_config.seed)


def _svg(run_config, out_dir, name, plot, *args):
    if run_config.emit_svg:
        from src.utils import plotting

        getattr(plotting, plot)(*args, out_dir / name)


def run_stability_region(run_config, out_dir):
    spec = run_config.model_spec()
    lin = linearize(spec)
    rows = stability.stability_region(lin, spec.d, lin.growth_present,
                                      (run_config.R_min, run_config.R_max),
                                      run_config.n_R_samples, run_config.n_max)
    utils.write_csv(out_dir / 'stability_region.csv', rows,
                    ['R', 'alpha_crit_signed', 'abs_alpha_crit', 'n_crit'], _metadata(run_config))
    _svg(run_config, out_dir, 'stability_region.svg', 'plot_stability_region', rows)
    print(f"regime: {stability.regime_of(lin)}  samples: {len(rows)}")
    return {'rows': rows}


def run_dispersion(run_config, out_dir):
    spec = run_config.model_spec()
    lin = linearize(spec)
    rows = stability.dispersion_table(lin, spec.d, spec.R, spec.alpha, range(run_config.n_max + 1))
    columns = ['n', 'T', 'D', 'lambda_plus_re', 'lambda_plus_im',
               'lambda_minus_re', 'lambda_minus_im', 'growth_rate']
    utils.write_csv(out_dir / 'dispersion.csv', rows, columns, _metadata(run_config))
    unstable = [row['n'] for row in rows if row['growth_rate'] > 0]
    print(f"unstable modes at alpha={spec.alpha:g}: {unstable or 'none'}")
    return {'rows': rows}


def run_bifcoef(run_config, out_dir):
    spec = run_config.model_spec()
    coeffs = bifurcation.bifurcation_coefficients(spec, spec.R, run_config.mode,
                                                  run_config.theta_method, run_config.n_max)
    row = coeffs.to_dict()
    utils.write_csv(out_dir / 'bifcoef.csv', [row], list(row), _metadata(run_config))
    print(f"n={coeffs.n}  alpha_n={coeffs.alpha_n:.4f}  alpha_dd0={coeffs.alpha_dd0:.4f}  "
          f"{coeffs.direction}/{coeffs.branch_stability}")
    return {'coefficients': coeffs}


def run_simulate(run_config, out_dir):
    spec = run_config.model_spec()
    solver_config = run_config.solver_config()
    result = solver.run_to_steady(spec, solver_config)
    rows = solver.final_profile_rows(result.final)
    utils.write_csv(out_dir / 'final_state.csv', rows, ['x', 'u', 'k', 'v'], _metadata(run_config))
    if solver_config.stride:
        utils.write_csv(out_dir / 'trajectory.csv', solver.trajectory_rows(result),
                        ['t', 'x', 'u', 'k', 'v'], _metadata(run_config))
    _svg(run_config, out_dir, 'final_state.svg', 'plot_profile', rows)
    print(utils.format_table([result.summary()], list(result.summary())))
    return {'result': result}


def run_sweep(run_config, out_dir):
    spec = run_config.model_spec()
    plan = sweep.SweepPlan(spec, run_config.solver_config(), delta0=run_config.delta0,
                           n_points=run_config.n_points, threads=run_config.threads,
                           n_max=run_config.n_max)
    diagram = sweep.run_sweep(plan)
    columns = ['alpha', 'branch', 'amplitude', 'peak_count', 'mean_u', 'converged', 't_final']
    utils.write_csv(out_dir / 'diagram.csv', diagram.rows(), columns, _metadata(run_config))
    _svg(run_config, out_dir, 'diagram.svg', 'plot_diagram', diagram)
    window = sweep.detect_hysteresis(diagram, run_config.amp_tol)
    if window is None:
        print(f"alpha_crit={plan.alpha_center:.4f}  n_crit={plan.n_crit}  hysteresis: none")
    else:
        print(f"alpha_crit={plan.alpha_center:.4f}  n_crit={plan.n_crit}  "
              f"hysteresis: [{window.alpha_lo:.4f}, {window.alpha_hi:.4f}]")
    return {'diagram': diagram, 'window': window}


def mass_curve_alphas(run_config, spec, R_list):
    """Alpha grid ordered from the stable side into the unstable side."""
    lin = linearize(spec)
    given = [key for key in ('alpha_min', 'alpha_max') if getattr(run_config, key) is not None]
    if len(given) == 1:
        missing = 'alpha_max' if given == ['alpha_min'] else 'alpha_min'
        raise ValidationError(f"{given[0]} needs {missing} as well", key=missing)
    if given:
        grid = np.linspace(run_config.alpha_min, run_config.alpha_max, run_config.n_alpha)
        return np.sort(grid)[::-1] if lin.w_u > 0 else np.sort(grid)
    centers = [abs(stability.critical_threshold(lin, spec.d, R, lin.growth_present, run_config.n_max)[0])
               for R in R_list]
    sign = -1.0 if lin.w_u > 0 else 1.0
    return sign * np.linspace(0.8 * min(centers), 1.2 * max(centers), run_config.n_alpha)


def run_mass_curve(run_config, out_dir):
    spec = run_config.model_spec()
    R_list = run_config.R_list or [spec.R]
    alphas = mass_curve_alphas(run_config, spec, R_list)
    rows = sweep.mass_curve(spec, R_list, alphas, run_config.solver_config())
    utils.write_csv(out_dir / 'mass_curve.csv', rows,
                    ['R', 'alpha', 'mean_u', 'amplitude', 'peak_count', 'converged'], _metadata(run_config))
    _svg(run_config, out_dir, 'mass_curve.svg', 'plot_mass_curve', rows)
    for R in R_list:
        print(f"R={R:g}: largest single-step mean drop {sweep.max_mean_drop(rows, float(R)):.4g}")
    return {'rows': rows}


def run_verify_equivalence(run_config, out_dir):
    grid = elliptic.Grid(run_config.n_cells)
    check = elliptic.verify_equivalence(grid, run_config.R, seed=run_config.seed)
    rows = [{'x': x, 'K': k, 'local': a, 'nonlocal': b}
            for x, k, a, b in zip(grid.nodes, check['K'], check['local'], check['nonlocal'])]
    utils.write_csv(out_dir / 'equivalence.csv', rows, ['x', 'K', 'local', 'nonlocal'], _metadata(run_config))
    print(f"max discrepancy: {check['discrepancy']:.3e}")
    return check


COMMAND_HANDLERS = {
    'stability-region': run_stability_region,
    'dispersion': run_dispersion,
    'bifcoef': run_bifcoef,
    'simulate': run_simulate,
    'sweep': run_sweep,
    'mass-curve': run_mass_curve,
    'verify-equivalence': run_verify_equivalence,
}


def dispatch(run_config):
    """
    Run the configured command.

    Returns:
        (exit status, handler output or None)
    """
    command = run_config.command
    try:
        out_dir = utils.ensure_output_dir(run_config.output)
        output = COMMAND_HANDLERS[command](run_config, out_dir)
    except ConfigError as e:
        print(f"error: {command}: {e}", file=sys.stderr)
        return 2, None
    except MemopatError as e:
        print(f"error: {command}: {e}", file=sys.stderr)
        if config.DEBUG_MODE:
            traceback.print_exc()
        return 1, None
    return 0, output


def build_parser():
    parser = argparse.ArgumentParser(
        prog=config.TOOL_NAME,
        description='Pattern formation with a dynamically updated spatial map.',
        epilog='Any configuration key can be overridden with --key value.')
    parser.add_argument('command', choices=config.COMMANDS)
    parser.add_argument('--config', type=pathlib.Path, help='flat key = value configuration file')
    return parser


def parse_overrides(extra):
    """Turn ['--R', '0.3', '--dt=1e-3'] into [('R', '0.3'), ('dt', '1e-3')]."""
    overrides = []
    items = list(extra)
    while items:
        token = items.pop(0)
        if not token.startswith('--') or len(token) <= 2:
            raise ConfigError(f"unexpected argument '{token}'")
        key = token[2:]
        if '=' in key:
            key, value = key.split('=', 1)
        elif items:
            value = items.pop(0)
        else:
            raise ConfigError("missing value", key=key)
        overrides.append((key, value))
    return overrides


def main(argv=None):
    """Main entry point; returns the process exit status."""
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        text = args.config.read_text(encoding='utf-8') if args.config else ''
        overrides = [('command', args.command)] + parse_overrides(extra)
        run_config = config.parse_config(text, overrides)
    except OSError as e:
        print(f"error: {args.command}: cannot read config: {e}", file=sys.stderr)
        return 2
    except ConfigError as e:
        print(f"error: {args.command}: {e}", file=sys.stderr)
        return 2

    utils.setup_logging(run_config.log_level)
    utils.print_separator()
    print(f"{config.TOOL_NAME} {config.TOOL_VERSION}: {run_config.command}")
    utils.print_separator()
    status, _ = dispatch(run_config)
    if status == 0:
        utils.log_message(f"{run_config.command} finished, artifacts in {run_config.output}")
    else:
        utils.log_message(f"{run_config.command} failed with exit status {status}", level='WARNING')
    return status


if __name__ == "__main__":
    sys.exit(main())
