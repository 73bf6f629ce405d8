"""
Fourth-order finite-difference stencils along one array axis.

Interior nodes use centred stencils. The two nodes at each end use one-sided
fourth-order stencils unless ``periodic`` is set.
"""

from __future__ import annotations

import numpy as np

__all__ = ["d1", "d2", "cumulative_integral", "interpolate_at"]


def _move(u, axis):
    return np.moveaxis(np.asarray(u), axis, 0)


def d1(u, h: float, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """First derivative, 4th order."""
    a = _move(u, axis)
    if periodic:
        out = (np.roll(a, 2, 0) - 8 * np.roll(a, 1, 0) + 8 * np.roll(a, -1, 0) - np.roll(a, -2, 0)) / (12 * h)
        return np.moveaxis(out, 0, axis)
    out = np.empty_like(a, dtype=np.result_type(a, float))
    out[2:-2] = (a[:-4] - 8 * a[1:-3] + 8 * a[3:-1] - a[4:]) / (12 * h)
    out[0] = (-25 * a[0] + 48 * a[1] - 36 * a[2] + 16 * a[3] - 3 * a[4]) / (12 * h)
    out[1] = (-3 * a[0] - 10 * a[1] + 18 * a[2] - 6 * a[3] + a[4]) / (12 * h)
    out[-1] = (25 * a[-1] - 48 * a[-2] + 36 * a[-3] - 16 * a[-4] + 3 * a[-5]) / (12 * h)
    out[-2] = (3 * a[-1] + 10 * a[-2] - 18 * a[-3] + 6 * a[-4] - a[-5]) / (12 * h)
    return np.moveaxis(out, 0, axis)


def d2(u, h: float, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """Second derivative, 4th order."""
    a = _move(u, axis)
    h2 = 12 * h * h
    if periodic:
        out = (-np.roll(a, 2, 0) + 16 * np.roll(a, 1, 0) - 30 * a + 16 * np.roll(a, -1, 0) - np.roll(a, -2, 0)) / h2
        return np.moveaxis(out, 0, axis)
    out = np.empty_like(a, dtype=np.result_type(a, float))
    out[2:-2] = (-a[:-4] + 16 * a[1:-3] - 30 * a[2:-2] + 16 * a[3:-1] - a[4:]) / h2
    out[0] = (45 * a[0] - 154 * a[1] + 214 * a[2] - 156 * a[3] + 61 * a[4] - 10 * a[5]) / h2
    out[1] = (10 * a[0] - 15 * a[1] - 4 * a[2] + 14 * a[3] - 6 * a[4] + a[5]) / h2
    out[-1] = (45 * a[-1] - 154 * a[-2] + 214 * a[-3] - 156 * a[-4] + 61 * a[-5] - 10 * a[-6]) / h2
    out[-2] = (10 * a[-1] - 15 * a[-2] - 4 * a[-3] + 14 * a[-4] - 6 * a[-5] + a[-6]) / h2
    return np.moveaxis(out, 0, axis)


def cumulative_integral(y, h: float, axis: int = 0) -> np.ndarray:
    """
    Running integral from the first node, 4th-order accurate.

    Each cell [x_i, x_{i+1}] is integrated with the midpoint-corrected
    trapezoid rule h/2 (y_i + y_{i+1}) - h^2/12 (y'_{i+1} - y'_i), the
    derivatives taken from :func:`d1`.
    """
    a = _move(y, axis)
    dy = d1(a, h, axis=0)
    cell = 0.5 * h * (a[:-1] + a[1:]) - h * h / 12.0 * (dy[1:] - dy[:-1])
    out = np.zeros_like(a, dtype=np.result_type(a, float))
    out[1:] = np.cumsum(cell, axis=0)
    return np.moveaxis(out, 0, axis)


def interpolate_at(u, x, x0: float, n_nodes: int = 6):
    """
    Lagrange interpolation of samples u(x) at x0 from the n_nodes nearest
    nodes of a uniform grid (order n_nodes accurate).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u)
    h = x[1] - x[0]
    i0 = int(np.floor((x0 - x[0]) / h)) - n_nodes // 2 + 1
    i0 = min(max(i0, 0), len(x) - n_nodes)
    xs = x[i0:i0 + n_nodes]
    w = np.ones(n_nodes)
    for j in range(n_nodes):
        for k in range(n_nodes):
            if k != j:
                w[j] *= (x0 - xs[k]) / (xs[j] - xs[k])
    return np.sum(w * u[i0:i0 + n_nodes])
