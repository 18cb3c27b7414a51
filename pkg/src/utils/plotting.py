"""
Static SVG figures for diagrams, stability regions, mass curves and profiles.
"""

import logging

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt

from src.utils import config

logger = logging.getLogger(__name__)


BRANCH_STYLES = {
    'Perturbation': {'marker': 'o', 'color': 'goldenrod', 'linestyle': 'none'},
    'Continuation': {'marker': 'x', 'color': 'navy', 'linestyle': 'none'},
}


def _save(fig, path):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.debug("wrote %s", path)
    return path


def _figure():
    return plt.subplots(figsize=(config.SVG_WIDTH_IN, config.SVG_HEIGHT_IN), constrained_layout=True)


def plot_diagram(diagram, path, title=None):
    """Amplitude against alpha, one marker style per branch."""
    fig, ax = _figure()
    for name in diagram.branches:
        records = diagram.branch(name)
        style = BRANCH_STYLES.get(name, {'marker': '.'})
        ax.plot([r.alpha for r in records], [r.amplitude for r in records], label=name, **style)
    if diagram.plan is not None:
        ax.axvline(diagram.plan.alpha_center, color='grey', linestyle='--', linewidth=0.8)
    ax.set_xlabel('alpha')
    ax.set_ylabel('max u - min u')
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_stability_region(rows, path):
    """|alpha_crit| against R, with the critical wavenumber as colour."""
    fig, ax = _figure()
    R = [row['R'] for row in rows]
    ax.plot(R, [row['abs_alpha_crit'] for row in rows], color='black', linewidth=1.0)
    points = ax.scatter(R, [row['abs_alpha_crit'] for row in rows],
                        c=[row['n_crit'] for row in rows], s=8, cmap='viridis')
    fig.colorbar(points, ax=ax, label='n_crit')
    ax.set_xlabel('R')
    ax.set_ylabel('|alpha_crit|')
    return _save(fig, path)


def plot_mass_curve(rows, path):
    """Mean density against alpha, one line per radius."""
    fig, ax = _figure()
    for R in sorted({row['R'] for row in rows}):
        series = [row for row in rows if row['R'] == R]
        ax.plot([row['alpha'] for row in series], [row['mean_u'] for row in series],
                marker='.', label=f'R = {R:g}')
    ax.set_xlabel('alpha')
    ax.set_ylabel('mean u')
    ax.legend()
    return _save(fig, path)


def plot_profile(rows, path):
    """u, k, v over the reflected domain."""
    fig, ax = _figure()
    x = [row['x'] for row in rows]
    for key in ('u', 'k', 'v'):
        ax.plot(x, [row[key] for row in rows], label=key)
    ax.set_xlabel('x')
    ax.legend()
    return _save(fig, path)
