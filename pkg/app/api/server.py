"""
Flask API server for the spatial-memory pattern toolkit.
Provides REST endpoints for stability thresholds, bifurcation coefficients and simulation runs.
"""

from flask import Flask, request, jsonify
from flask_cors import CORS
import sys
import os

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.abspath(os.path.join(current_dir, '../..'))
sys.path.insert(0, project_root)

from src.core import bifurcation, model, solver, stability
from src.utils import config
from src.utils.errors import ConfigError, MemopatError

app = Flask(__name__)
CORS(app)

active_runs = {}


def config_from_request(command):
    """Validate the JSON body as configuration keys for command."""
    data = request.get_json(silent=True) or {}
    if not isinstance(data, dict):
        raise ConfigError('request body must be a JSON object')
    overrides = [('command', command)]
    for key, value in data.items():
        if isinstance(value, list):
            value = ','.join(str(v) for v in value)
        overrides.append((key, str(value)))
    return config.parse_config('', overrides, environ={})


def error_response(e):
    if isinstance(e, ConfigError):
        return jsonify({'error': str(e), 'key': e.key}), 400
    return jsonify({'error': str(e), 'type': type(e).__name__}), 500


@app.route('/api/families', methods=['GET'])
def get_families():
    """List the available growth models, encoding families and commands."""
    return jsonify({
        'growth': sorted(model.GROWTH_MODELS),
        'encodings': model.list_encodings(),
        'theta_methods': config.THETA_METHODS,
        'commands': config.COMMANDS,
    })


@app.route('/api/stability', methods=['POST'])
def get_stability():
    """Thresholds, critical pair and per-mode eigenvalues for the posted model."""
    try:
        run_config = config_from_request('dispersion')
        spec = run_config.model_spec()
        report = stability.stability_report(spec, n_max=run_config.n_max)
        body = report.to_dict()
        body['eigenvalues'] = [
            {'n': n, 'lambda_plus': str(complex(lp)), 'lambda_minus': str(complex(lm))}
            for n, (lp, lm, _) in sorted(report.eigen.items())
        ]
        return jsonify(body)
    except MemopatError as e:
        return error_response(e)


@app.route('/api/bifurcation', methods=['POST'])
def get_bifurcation():
    """Pitchfork coefficients at the critical (or requested) wavenumber."""
    try:
        run_config = config_from_request('bifcoef')
        spec = run_config.model_spec()
        coeffs = bifurcation.bifurcation_coefficients(spec, spec.R, run_config.mode,
                                                      run_config.theta_method, run_config.n_max)
        return jsonify(coeffs.to_dict())
    except MemopatError as e:
        return error_response(e)


@app.route('/api/runs', methods=['POST'])
def start_run():
    """Run a simulation to steady state and keep the result."""
    try:
        run_config = config_from_request('simulate')
        spec = run_config.model_spec()
        result = solver.run_to_steady(spec, run_config.solver_config())
    except MemopatError as e:
        return error_response(e)

    run_id = f'run_{len(active_runs)}'
    active_runs[run_id] = result
    return jsonify({'run_id': run_id, **result.summary()}), 201


@app.route('/api/runs/<run_id>', methods=['GET'])
def get_run(run_id):
    """Summary and final profile of a stored run."""
    if run_id not in active_runs:
        return jsonify({'error': 'Run not found'}), 404

    result = active_runs[run_id]
    return jsonify({
        'run_id': run_id,
        **result.summary(),
        'profile': solver.final_profile_rows(result.final),
    })


if __name__ == '__main__':
    app.run(debug=config.DEBUG_MODE, port=5000)
