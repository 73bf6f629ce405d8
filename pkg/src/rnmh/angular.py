"""
Angular operators on a pole-offset polar grid with one azimuthal mode.

Fields carry an e^{i m phi} dependence, so d/dphi acts as i m. With the
tetrad M = d_theta + (i/sin) d_phi this gives

    M u     = u' - (m/sin) u
    Mbar u  = u' + (m/sin) u
    M1 u    = M u + cot u
    Mbar1 u = Mbar u + cot u
    Delta_S = u'' - (m^2/sin^2) u + cot u'

Derivatives are 4th-order centred differences along the last axis. Two ghost
nodes beyond each pole are filled by reflection with a parity sign; a scalar
of azimuthal number m has parity (-1)^m, and a spin-weight +-1 quantity has
parity (-1)^(m+1).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse
from scipy.special import lpmv

__all__ = [
    "AngularGrid",
    "apply_M",
    "apply_Mbar",
    "apply_M1",
    "apply_Mbar1",
    "apply_laplacian_S",
    "legendre_profile",
    "fejer_weights",
]


def fejer_weights(n: int) -> np.ndarray:
    """
    Fejer first-rule weights for int_0^pi g sin(theta) d theta on the
    nodes theta_j = (j + 1/2) pi / n. Exact for polynomials in cos(theta) of
    degree < n.
    """
    theta = (np.arange(n) + 0.5) * np.pi / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, k)) / (4.0 * k * k - 1.0)
    return 2.0 / n * (1.0 - 2.0 * s.sum(axis=1))


class AngularGrid:
    """
    Polar grid theta_j = (j + 1/2) pi / n_theta, j = 0..n_theta-1.

    Parameters
    ----------
    n_theta : int
        Number of nodes, at least 8.
    m : int
        Azimuthal mode number.
    """

    def __init__(self, n_theta: int, m: int = 0):
        if n_theta < 8:
            raise ValueError("n_theta must be at least 8")
        self.n_theta = int(n_theta)
        self.m = int(m)
        self.h = math.pi / self.n_theta
        self.theta = (np.arange(self.n_theta) + 0.5) * self.h
        self.sin = np.sin(self.theta)
        self.cos = np.cos(self.theta)
        self.cot = self.cos / self.sin
        self.weights = fejer_weights(self.n_theta)

    def scalar_parity(self) -> int:
        return -1 if self.m % 2 else 1

    def spin_parity(self) -> int:
        return -self.scalar_parity()

    def integrate(self, g) -> np.ndarray:
        """int_0^pi g sin(theta) d theta along the last axis."""
        # elementwise product and pairwise sum rather than BLAS, so the result
        # does not depend on the thread count
        return np.sum(np.asarray(g) * self.weights, axis=-1)

    # raw derivatives --------------------------------------------------

    def _pad(self, u: np.ndarray, parity: int) -> np.ndarray:
        s = parity
        return np.concatenate(
            [s * u[..., 1:2], s * u[..., 0:1], u, s * u[..., -1:], s * u[..., -2:-1]], axis=-1
        )

    def _operator(self, order: int, parity: int) -> sparse.csr_matrix:
        """Banded matrix of the stencil with the parity ghosts folded in."""
        key = (order, parity)
        cache = self.__dict__.setdefault("_ops", {})
        if key not in cache:
            n, h = self.n_theta, self.h
            if order == 1:
                coef = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}
                scale = 12.0 * h
            else:
                coef = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
                scale = 12.0 * h * h
            D = np.zeros((n, n))
            for j in range(n):
                for off, c in coef.items():
                    k, sgn = j + off, 1.0
                    if k < 0:
                        k, sgn = -k - 1, float(parity)
                    elif k >= n:
                        k, sgn = 2 * n - 1 - k, float(parity)
                    D[j, k] += sgn * c / scale
            cache[key] = sparse.csr_matrix(D)
        return cache[key]

    def _apply(self, u, order: int, parity: int | None) -> np.ndarray:
        parity = self.scalar_parity() if parity is None else parity
        u = np.asarray(u)
        D = self._operator(order, parity)
        if u.ndim == 1:
            return D @ u
        flat = u.reshape(-1, u.shape[-1])
        return np.ascontiguousarray((D @ flat.T).T).reshape(u.shape)

    def dtheta(self, u, parity: int | None = None) -> np.ndarray:
        return self._apply(u, 1, parity)

    def dtheta2(self, u, parity: int | None = None) -> np.ndarray:
        return self._apply(u, 2, parity)


def _grid_for(u, m: int, grid: AngularGrid | None) -> AngularGrid:
    if grid is None:
        grid = AngularGrid(np.shape(u)[-1], m)
    elif grid.m != m:
        grid_m = AngularGrid.__new__(AngularGrid)
        grid_m.__dict__.update(grid.__dict__)
        grid_m.m = int(m)
        grid = grid_m
    return grid


def apply_M(u, m: int, grid: AngularGrid | None = None, parity: int | None = None) -> np.ndarray:
    """M u = d_theta u - (m / sin) u."""
    g = _grid_for(u, m, grid)
    return g.dtheta(u, parity) - (m / g.sin) * np.asarray(u)


def apply_Mbar(u, m: int, grid: AngularGrid | None = None, parity: int | None = None) -> np.ndarray:
    """Mbar u = d_theta u + (m / sin) u."""
    g = _grid_for(u, m, grid)
    return g.dtheta(u, parity) + (m / g.sin) * np.asarray(u)


def apply_M1(u, m: int, grid: AngularGrid | None = None, parity: int | None = None) -> np.ndarray:
    """M1 u = M u + cot(theta) u."""
    g = _grid_for(u, m, grid)
    return apply_M(u, m, g, parity) + g.cot * np.asarray(u)


def apply_Mbar1(u, m: int, grid: AngularGrid | None = None, parity: int | None = None) -> np.ndarray:
    """Mbar1 u = Mbar u + cot(theta) u (conjugate partner of M1)."""
    g = _grid_for(u, m, grid)
    return apply_Mbar(u, m, g, parity) + g.cot * np.asarray(u)


def apply_laplacian_S(u, m: int, grid: AngularGrid | None = None, parity: int | None = None) -> np.ndarray:
    """Delta_S u = u'' - (m^2 / sin^2) u + cot u'."""
    g = _grid_for(u, m, grid)
    u = np.asarray(u)
    return g.dtheta2(u, parity) - (m * m / g.sin ** 2) * u + g.cot * g.dtheta(u, parity)


def legendre_profile(ell: int, m: int, theta) -> np.ndarray:
    """
    Normalised P_l^|m|(cos theta): 2 pi int |U|^2 sin d theta = 1, so that
    U e^{i m phi} is a unit spherical harmonic.
    """
    if ell < abs(m):
        raise ValueError(f"need ell >= |m|, got ell={ell}, m={m}")
    am = abs(m)
    norm = math.sqrt((2 * ell + 1) / (4 * math.pi) * math.factorial(ell - am) / math.factorial(ell + am))
    return norm * lpmv(am, ell, np.cos(np.asarray(theta, dtype=float)))
