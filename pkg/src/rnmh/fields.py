"""
Field containers and field algebra.

Spin components from a Faraday tensor, covariant derivatives of the charged
scalar, the bilinear currents, the wave-equation source rho and the exact
Coulomb reference solution.

Index convention: directions (0, 1, 2, 3) = (t, r*, theta, phi). Fields live
on the (r*, theta) lattice with shape (n_points, n_theta) and carry a single
azimuthal mode e^{i m phi}.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .angular import AngularGrid, apply_M1
from .geometry import RadialGrid, RNBackground
from .stencils import d1, d2

__all__ = [
    "Grids",
    "SpinTriple",
    "GaugePotential",
    "ScalarState",
    "spin_from_faraday",
    "covariant_derivative",
    "bracket",
    "current",
    "scalar_acceleration",
    "scalar_acceleration_pointwise",
    "source_rho",
    "coulomb_reference",
]


class Grids:
    """Radial and polar lattices with broadcast-ready background arrays."""

    def __init__(self, radial: RadialGrid, angular: AngularGrid):
        self.radial = radial
        self.angular = angular
        self.bg: RNBackground = radial.bg
        self.m = angular.m
        self.shape = (radial.n_points, angular.n_theta)
        self.dr = radial.spacing
        col = lambda a: a[:, None]
        self.rstar = col(radial.rstar)
        self.r = col(radial.r)
        self.f = col(radial.f)
        self.V = col(radial.V)
        self.I = col(radial.I)
        self.dV = col(radial.dV)
        self.sin = angular.sin[None, :]
        self.cos = angular.cos[None, :]
        self.cot = angular.cot[None, :]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex)

    def dr1(self, u) -> np.ndarray:
        return d1(u, self.dr, axis=0)

    def dr2(self, u) -> np.ndarray:
        return d2(u, self.dr, axis=0)

    def integrate(self, density) -> float:
        """int density dr* d^2 omega, with the phi integral giving 2 pi."""
        radial = np.sum(np.asarray(density), axis=0) * self.dr
        return float(2.0 * np.pi * self.angular.integrate(radial))


@dataclass
class SpinTriple:
    """Maxwell spin components (Phi_-1, Phi_0, Phi_1)."""

    minus1: np.ndarray
    zero: np.ndarray
    plus1: np.ndarray

    def copy(self) -> "SpinTriple":
        return SpinTriple(self.minus1.copy(), self.zero.copy(), self.plus1.copy())


@dataclass
class GaugePotential:
    """
    Static background potential A_mu on the lattice.

    A1 is the r* component and A2 the theta component; their derivatives
    along their own direction enter the scalar equation.
    """

    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    coupling_charge: float = 0.0

    @classmethod
    def coulomb(cls, grids: Grids, q_A: float) -> "GaugePotential":
        z = np.zeros(grids.shape)
        A0 = np.broadcast_to(q_A / grids.r, grids.shape).copy()
        return cls(A0, z.copy(), z.copy(), z.copy(), float(q_A))

    @classmethod
    def zero(cls, grids: Grids) -> "GaugePotential":
        return cls.coulomb(grids, 0.0)

    def component(self, direction: int) -> np.ndarray:
        return (self.A0, self.A1, self.A2, self.A3)[direction]


@dataclass
class ScalarState:
    """Charged scalar phi, its time derivative pi and the gauge background."""

    phi: np.ndarray
    pi: np.ndarray
    gauge: GaugePotential

    def __post_init__(self) -> None:
        if np.shape(self.phi) != np.shape(self.pi):
            raise ValueError("phi and pi must share a shape")

    def copy(self) -> "ScalarState":
        return replace(self, phi=self.phi.copy(), pi=self.pi.copy())


# ---------------------------------------------------------------------------
# Spin components
# ---------------------------------------------------------------------------

def spin_from_faraday(F, bg: RNBackground, grids: Grids) -> SpinTriple:
    """
    Spin components of a Faraday tensor given in (t, r*, theta, phi).

    Phi_0  = (r^2/f) F_10 + (i/sin) F_23
    Phi_1  = F_02 + (i/sin) F_03 + F_12 + (i/sin) F_13
    Phi_-1 = F_02 + (i/sin) F_30 + F_21 + (i/sin) F_13

    Parameters
    ----------
    F : array_like, shape (4, 4, ...)
        Antisymmetric components broadcastable to the lattice.
    """
    F = np.asarray(F)
    inv_sin = 1.0 / grids.sin
    phi0 = F[1, 0] / grids.V + 1j * inv_sin * F[2, 3]
    phi1 = F[0, 2] + 1j * inv_sin * F[0, 3] + F[1, 2] + 1j * inv_sin * F[1, 3]
    phim = F[0, 2] + 1j * inv_sin * F[3, 0] + F[2, 1] + 1j * inv_sin * F[1, 3]
    shape = grids.shape
    return SpinTriple(
        np.broadcast_to(phim, shape).astype(complex),
        np.broadcast_to(phi0, shape).astype(complex),
        np.broadcast_to(phi1, shape).astype(complex),
    )


def coulomb_reference(bg: RNBackground, grids: Grids, q_F: float) -> SpinTriple:
    """Exact stationary solution Phi_0 = q_F, Phi_+-1 = 0."""
    z = grids.zeros()
    return SpinTriple(z.copy(), z + q_F, z.copy())


# ---------------------------------------------------------------------------
# Scalar sector
# ---------------------------------------------------------------------------

def covariant_derivative(s: ScalarState, direction: int, grids: Grids) -> np.ndarray:
    """
    D_mu phi = d_mu phi - i A_mu phi.

    d_t phi is read from pi; d_phi acts as i m.
    """
    if direction not in (0, 1, 2, 3):
        raise ValueError(f"direction must be 0..3, got {direction}")
    A = s.gauge.component(direction)
    if direction == 0:
        d = s.pi
    elif direction == 1:
        d = grids.dr1(s.phi)
    elif direction == 2:
        d = grids.angular.dtheta(s.phi)
    else:
        d = 1j * grids.m * s.phi
    return d - 1j * A * s.phi


def bracket_from(phi, dphi):
    """D phi conj(phi) - phi conj(D phi), purely imaginary."""
    return dphi * np.conj(phi) - phi * np.conj(dphi)


def bracket(s: ScalarState, direction: int, grids: Grids) -> np.ndarray:
    return bracket_from(s.phi, covariant_derivative(s, direction, grids))


def current(s: ScalarState, direction: int, grids: Grids) -> np.ndarray:
    """J_gamma = -i (D_gamma phi conj(phi) - phi conj(D_gamma phi)), real up to rounding."""
    return -1j * bracket(s, direction, grids)


def scalar_acceleration_pointwise(phi, pi, phi_r, phi_rr, phi_th, phi_thth,
                                  A0, A1, dA1, A2, dA2, A3,
                                  r, f, sin, cos, m):
    """
    d_t pi from D^mu D_mu phi = 0 on the RN exterior, given derivative values.

    In (t, r*, theta, phi) the metric is -f dt^2 + f dr*^2 + r^2 dOmega^2 with
    sqrt(-g) = f r^2 sin. Writing the covariant wave operator as
    (1/sqrt(-g)) D_mu (sqrt(-g) g^{mu nu} D_nu phi) and multiplying by f:

        D_t D_t phi = (1/r^2) D_r (r^2 D_r phi)
                      + V [ (1/sin) D_th (sin D_th phi) + D_ph D_ph phi / sin^2 ]

    with dr/dr* = f, so (1/r^2) d_r* (r^2 X) = d_r* X + (2 f / r) X. For a
    static potential, D_t D_t phi = d_t pi - 2 i A0 pi - A0^2 phi, and

        D_r D_r phi    = phi_rr - i dA1 phi - 2 i A1 phi_r - A1^2 phi
        D_th D_th phi  = phi_thth - i dA2 phi - 2 i A2 phi_th - A2^2 phi
        D_ph D_ph phi  = -(m - A3)^2 phi
    """
    V = f / r ** 2
    cot = cos / sin
    D1 = phi_r - 1j * A1 * phi
    D2 = phi_th - 1j * A2 * phi
    D11 = phi_rr - 1j * dA1 * phi - 2j * A1 * phi_r - A1 ** 2 * phi
    D22 = phi_thth - 1j * dA2 * phi - 2j * A2 * phi_th - A2 ** 2 * phi
    D33 = -((m - A3) ** 2) * phi
    angular = D22 + cot * D2 + D33 / sin ** 2
    return 2j * A0 * pi + A0 ** 2 * phi + D11 + (2.0 * f / r) * D1 + V * angular


def scalar_acceleration(s: ScalarState, grids: Grids) -> np.ndarray:
    """d_t pi on the lattice (4th-order differences)."""
    g = s.gauge
    ang = grids.angular
    if not (np.any(g.A1) or np.any(g.A2) or np.any(g.A3)):
        # same expansion with the vanishing spatial components dropped
        phi = s.phi
        angular = ang.dtheta2(phi) + grids.cot * ang.dtheta(phi) - (grids.m / grids.sin) ** 2 * phi
        return (2j * g.A0 * s.pi + g.A0 ** 2 * phi + grids.dr2(phi)
                + (2.0 * grids.f / grids.r) * grids.dr1(phi) + grids.V * angular)
    return scalar_acceleration_pointwise(
        s.phi, s.pi,
        grids.dr1(s.phi), grids.dr2(s.phi),
        ang.dtheta(s.phi), ang.dtheta2(s.phi),
        g.A0, g.A1, grids.dr1(g.A1), g.A2, ang.dtheta(g.A2, parity=-1), g.A3,
        grids.r, grids.f, grids.sin, grids.cos, grids.m,
    )


def source_rho(s: ScalarState, bg: RNBackground, grids: Grids, pi_t: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Wave-equation source

        rho = -M1(i f B_2) - M1(i (f/sin) B_3) + L(i r^2 (B_0 + B_1)),

    with B_g = D_g phi conj(phi) - phi conj(D_g phi) and L = d_t + d_r*. The
    time derivative of the bilinears uses pi and d_t pi from the scalar
    equation, so rho depends on the instantaneous state only.

    The bilinears carry azimuthal number zero, so M1 acts with m = 0 and
    odd parity at the poles.
    """
    ang = grids.angular
    if pi_t is None:
        pi_t = scalar_acceleration(s, grids)
    phi, pi = s.phi, s.pi
    g = s.gauge
    D0 = pi - 1j * g.A0 * phi
    D1 = grids.dr1(phi) - 1j * g.A1 * phi
    D2 = ang.dtheta(phi) - 1j * g.A2 * phi
    D3 = 1j * (grids.m - g.A3) * phi
    B0, B1, B2, B3 = (bracket_from(phi, D) for D in (D0, D1, D2, D3))

    angular_part = -apply_M1(1j * grids.f * B2, 0, ang, parity=-1)
    angular_part -= apply_M1(1j * grids.f / grids.sin * B3, 0, ang, parity=-1)

    # d_t of the bilinears through the equation of motion
    dD0 = pi_t - 1j * g.A0 * pi
    dD1 = grids.dr1(pi) - 1j * g.A1 * pi
    dB0 = bracket_from(phi, dD0) + D0 * np.conj(pi) - pi * np.conj(D0)
    dB1 = bracket_from(phi, dD1) + D1 * np.conj(pi) - pi * np.conj(D1)
    r2 = grids.r ** 2
    L_part = 1j * r2 * (dB0 + dB1) + grids.dr1(1j * r2 * (B0 + B1))
    return angular_part + L_part
