"""
Reissner-Nordström exterior geometry.

Metric factor, horizons, the tortoise coordinate and its inverse, the wave
potential V = f/r^2 and the Morawetz factor I = 1 + r*(f'/2 - f/r).

Conventions
-----------
- Geometric units, M > 0.
- dr*/dr = 1/f with the integration constant fixed by the closed form
  r* = r + A ln((r - r+)/r+) - B ln((r - r-)/r-),
  A = r+^2/(r+ - r-), B = r-^2/(r+ - r-).
- Close to the horizon r is numerically indistinguishable from r+, so every
  grid quantity is built from delta = r - r+ rather than from r itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

__all__ = [
    "RNBackground",
    "RadialGrid",
    "metric_factor",
    "metric_factor_prime",
    "horizons",
    "tortoise_from_radius",
    "radius_from_tortoise",
    "morawetz_factor",
    "potential",
]

_NEWTON_CAP = 200


def horizons(M: float, Q: float) -> Tuple[float, float]:
    """
    Inner and outer horizon radii.

    Parameters
    ----------
    M : float
        Mass, M > 0.
    Q : float
        Charge, |Q| <= M.

    Returns
    -------
    (r_minus, r_plus) : tuple of float

    Raises
    ------
    ValueError
        If M <= 0 or |Q| > M (naked singularity).
    """
    if not M > 0:
        raise ValueError(f"mass must be positive, got {M}")
    if abs(Q) > M:
        raise ValueError(f"|Q| = {abs(Q)} exceeds M = {M}: naked singularity refused")
    root = math.sqrt(max(M * M - Q * Q, 0.0))
    return M - root, M + root


@dataclass(frozen=True)
class RNBackground:
    """
    Black-hole parameters and derived horizon data.

    Construction accepts the extremal case |Q| = M; evolution code calls
    :meth:`require_subextremal` and refuses it.
    """

    mass: float = 1.0
    charge: float = 0.5
    r_minus: float = field(init=False)
    r_plus: float = field(init=False)
    tortoise_anchor: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        r_minus, r_plus = horizons(self.mass, self.charge)
        object.__setattr__(self, "r_minus", r_minus)
        object.__setattr__(self, "r_plus", r_plus)

    @property
    def extremal(self) -> bool:
        return self.r_plus - self.r_minus <= 1e-14 * self.mass

    @property
    def surface_gravity(self) -> float:
        """kappa = f'(r+)/2 = (r+ - r-)/(2 r+^2)."""
        return (self.r_plus - self.r_minus) / (2.0 * self.r_plus ** 2)

    def require_subextremal(self) -> None:
        if self.extremal:
            raise ValueError("extremal background |Q| = M cannot be evolved")

    # f written through delta = r - r+ so that it stays accurate at the horizon
    def f_from_delta(self, delta):
        r = self.r_plus + delta
        return delta * (delta + self.r_plus - self.r_minus) / (r * r)

    def tortoise_from_delta(self, delta):
        """r* as a function of delta = r - r+ > 0 (vectorised)."""
        delta = np.asarray(delta, dtype=float)
        rp, rm = self.r_plus, self.r_minus
        r = rp + delta
        if self.extremal:
            m = self.mass
            return r + 2.0 * m * np.log(delta / m) - m * m / delta
        A = rp * rp / (rp - rm)
        out = r + A * np.log(delta / rp)
        if rm > 0.0:
            B = rm * rm / (rp - rm)
            out = out - B * np.log((delta + rp - rm) / rm)
        return out


def _check_radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("areal radius must be positive")
    return r


def metric_factor(r, bg: RNBackground):
    """
    f(r) = 1 - 2M/r + Q^2/r^2.

    Raises
    ------
    ValueError
        For r <= 0.
    """
    r = _check_radius(r)
    out = 1.0 - 2.0 * bg.mass / r + bg.charge ** 2 / r ** 2
    return float(out) if out.ndim == 0 else out


def metric_factor_prime(r, bg: RNBackground):
    """f'(r) = 2M/r^2 - 2Q^2/r^3."""
    r = _check_radius(r)
    out = 2.0 * bg.mass / r ** 2 - 2.0 * bg.charge ** 2 / r ** 3
    return float(out) if out.ndim == 0 else out


def potential(r, bg: RNBackground):
    """V = f/r^2."""
    r = _check_radius(r)
    out = metric_factor(r, bg) / r ** 2
    return float(out) if np.ndim(out) == 0 else out


def tortoise_from_radius(r, bg: RNBackground):
    """
    Tortoise coordinate r*(r) on the exterior r > r+.

    Parameters
    ----------
    r : float or ndarray
        Areal radius.
    bg : RNBackground

    Returns
    -------
    float or ndarray

    Raises
    ------
    ValueError
        If any r <= r+.
    """
    r = np.asarray(r, dtype=float)
    if np.any(~(r > bg.r_plus)):
        raise ValueError(f"tortoise coordinate needs r > r+ = {bg.r_plus}")
    out = bg.tortoise_from_delta(r - bg.r_plus)
    return float(out) if out.ndim == 0 else out


def _delta_from_tortoise(rstar, bg: RNBackground) -> np.ndarray:
    """Solve r*(r+ + e^y) = rstar for y by safeguarded Newton; returns delta."""
    target = np.atleast_1d(np.asarray(rstar, dtype=float)).copy()
    rp, rm = bg.r_plus, bg.r_minus
    if bg.extremal:
        slope = bg.mass
    else:
        slope = rp * rp / (rp - rm)

    def F(y):
        return bg.tortoise_from_delta(np.exp(y)) - target

    def dF(y):
        d = np.exp(y)
        return (rp + d) ** 2 / (d + rp - rm)

    # seeds: exponential approach near the horizon, r ~ r* far out
    far = target > 2.0 * rp + 10.0 * slope
    seed_near = math.log(rp) + (target - rp) / slope
    seed_far = np.log(np.maximum(target - rp, 1e-300))
    if bg.extremal:
        # r* ~ -M^2/delta near a degenerate horizon
        seed_near = np.log(bg.mass ** 2 / np.maximum(rp - target, bg.mass))
    y = np.where(far, seed_far, seed_near)

    # bracket by expansion
    lo = y - 1.0
    hi = y + 1.0
    for _ in range(_NEWTON_CAP):
        bad = F(lo) > 0
        if not bad.any():
            break
        lo = np.where(bad, lo - 2.0 * (hi - lo), lo)
    for _ in range(_NEWTON_CAP):
        bad = F(hi) < 0
        if not bad.any():
            break
        hi = np.where(bad, hi + 2.0 * (hi - lo), hi)
    y = np.clip(y, lo, hi)

    tol = 1e-13 * np.maximum(1.0, np.abs(target))
    for _ in range(_NEWTON_CAP):
        val = F(y)
        done = np.abs(val) <= tol
        if done.all():
            return np.exp(y)
        lo = np.where(val < 0, y, lo)
        hi = np.where(val > 0, y, hi)
        step = val / dF(y)
        y_new = y - step
        outside = (y_new <= lo) | (y_new >= hi) | ~np.isfinite(y_new)
        y_new = np.where(outside, 0.5 * (lo + hi), y_new)
        # stagnation at the resolution limit of y counts as converged
        stalled = (y_new == y) | (hi - lo <= 4 * np.spacing(np.abs(y) + 1.0))
        y = np.where(done, y, y_new)
        if np.all(done | stalled):
            return np.exp(y)
    raise RuntimeError("radius_from_tortoise: root finder did not converge")


def radius_from_tortoise(rstar, bg: RNBackground):
    """
    Inverse tortoise map r(r*), always > r+.

    Uses Newton iteration in log(r - r+) with bisection safeguarding.

    Raises
    ------
    RuntimeError
        If the iteration cap is reached.
    """
    scalar = np.ndim(rstar) == 0
    r = bg.r_plus + _delta_from_tortoise(rstar, bg)
    return float(r[0]) if scalar else r.reshape(np.shape(rstar))


def morawetz_factor(r, bg: RNBackground):
    """
    I = 1 + r*(f'/2 - f/r).

    Raises
    ------
    ValueError
        If any r <= r+.
    """
    rs = tortoise_from_radius(r, bg)
    r = np.asarray(r, dtype=float)
    out = 1.0 + rs * (0.5 * metric_factor_prime(r, bg) - metric_factor(r, bg) / r)
    return float(out) if np.ndim(out) == 0 else out


class RadialGrid:
    """
    Uniform lattice in r* with cached background arrays.

    Attributes
    ----------
    rstar : ndarray
        Nodes.
    delta, r, f, fprime, V, I, dV : ndarray
        r - r+, areal radius, metric factor and derivative, potential,
        Morawetz factor and dV/dr*.
    """

    def __init__(self, bg: RNBackground, rstar_min: float, rstar_max: float, n_points: int):
        if n_points < 16:
            raise ValueError("n_points must be at least 16")
        if not rstar_max > rstar_min:
            raise ValueError("rstar_max must exceed rstar_min")
        self.bg = bg
        self.rstar_min = float(rstar_min)
        self.rstar_max = float(rstar_max)
        self.n_points = int(n_points)
        self.rstar = np.linspace(rstar_min, rstar_max, n_points)
        self.spacing = (self.rstar_max - self.rstar_min) / (self.n_points - 1)
        self.delta = _delta_from_tortoise(self.rstar, bg)
        self.r = bg.r_plus + self.delta
        self.f = bg.f_from_delta(self.delta)
        self.fprime = 2.0 * bg.mass / self.r ** 2 - 2.0 * bg.charge ** 2 / self.r ** 3
        self.V = self.f / self.r ** 2
        self.I = 1.0 + self.rstar * (0.5 * self.fprime - self.f / self.r)
        # dV/dr* = f dV/dr = V (f' - 2f/r)
        self.dV = self.V * (self.fprime - 2.0 * self.f / self.r)

    def __len__(self) -> int:
        return self.n_points
