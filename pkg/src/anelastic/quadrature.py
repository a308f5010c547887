"""Composite Gauss-Legendre rules on [0, 1] graded toward z = 0.

Weights like (z + eps)**k are smooth on [0, 1] but vary on the scale eps
near the origin, so panels are refined geometrically down to that scale.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=256)
def _graded_rule(scale, n, n_uniform, floor):
    breaks = {0.0, 1.0}
    breaks.update(np.linspace(0.0, 1.0, n_uniform + 1).tolist())
    h = 0.5
    stop = max(min(scale, 1.0) * 1e-2, floor)
    while h > stop:
        breaks.add(h)
        h *= 0.5
    breaks.add(h)
    edges = np.array(sorted(breaks))
    x, w = _legendre(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    nodes, weights = nodes.ravel(), weights.ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def graded_rule(scale=0.0, n=20, n_uniform=16, floor=1e-14):
    """Nodes and weights on [0, 1].

    Parameters
    ----------
    scale : float
        Length scale of the near-origin variation (typically eps). Zero
        grades all the way down to `floor`.
    n : int
        Gauss-Legendre points per panel.
    n_uniform : int
        Number of uniform panels overlaid for oscillatory integrands.
    floor : float
        Smallest panel edge used for the geometric grading.
    """
    return _graded_rule(float(scale), int(n), int(n_uniform), float(floor))
