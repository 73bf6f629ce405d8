import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from rnmh.angular import AngularGrid
from rnmh.fields import (
    GaugePotential,
    Grids,
    ScalarState,
    SpinTriple,
    coulomb_reference,
    covariant_derivative,
    current,
    scalar_acceleration,
    scalar_acceleration_pointwise,
    source_rho,
    spin_from_faraday,
)
from rnmh.geometry import RadialGrid, RNBackground

BG = RNBackground(1.0, 0.5)


@pytest.fixture(scope="module")
def grids():
    return Grids(RadialGrid(BG, -40, 40, 801), AngularGrid(32, 0))


def _scalar(grids, phi, pi=None, gauge=None):
    phi = np.broadcast_to(phi, grids.shape).astype(complex)
    pi = np.zeros_like(phi) if pi is None else np.broadcast_to(pi, grids.shape).astype(complex)
    return ScalarState(phi, pi, gauge or GaugePotential.zero(grids))


# --- symbolic oracle for the charged wave operator -----------------------------

def _wave_oracle():
    """
    d_t^2 phi solved from the covariant wave equation written in (t, r, theta)
    with d_r* = f d_r, using an explicit test field and potential.
    """
    t, r, th = sp.symbols("t r theta", real=True)
    M, Q, m = sp.symbols("M Q m", real=True)
    c = sp.symbols("c0:10", real=True)
    f = 1 - 2 * M / r + Q ** 2 / r ** 2
    # test field (phi-dependence e^{i m phi} handled through D_3 = i(m - A3))
    F = (c[0] + sp.I * c[1]) * sp.exp(-(r - 4) ** 2 / 3) * sp.cos(th) ** 2 * sp.exp(sp.I * c[2] * t) \
        + (c[3] + sp.I * c[4] * r) * sp.sin(th) ** 2
    A0 = c[5] / r
    A1 = c[6] * sp.cos(th) / r
    A2 = c[7] * sp.sin(th) * sp.exp(-r / 5)
    A3 = c[8] * sp.sin(th) ** 2
    dx = lambda e: f * sp.diff(e, r)
    Dx = lambda e: dx(e) - sp.I * A1 * e
    Dth = lambda e: sp.diff(e, th) - sp.I * A2 * e
    Dph = lambda e: sp.I * (m - A3) * e
    sg = r ** 2 * sp.sin(th)
    spatial = (dx(sg * Dx(F)) - sp.I * A1 * sg * Dx(F)) / sg
    ang = (sp.diff(sp.sin(th) * Dth(F), th) - sp.I * A2 * sp.sin(th) * Dth(F)) / sp.sin(th) \
        + Dph(Dph(F)) / sp.sin(th) ** 2
    Ft = sp.diff(F, t)
    # D_t D_t F = F_tt - 2 i A0 F_t - A0^2 F
    Ftt = spatial + f / r ** 2 * ang + 2 * sp.I * A0 * Ft + A0 ** 2 * F
    pieces = dict(
        phi=F, pi=Ft, phi_r=dx(F), phi_rr=dx(dx(F)), phi_th=sp.diff(F, th), phi_thth=sp.diff(F, th, 2),
        A0=A0, A1=A1, dA1=dx(A1), A2=A2, dA2=sp.diff(A2, th), A3=A3, f=f,
    )
    syms = (t, r, th, M, Q, m) + c
    return sp.lambdify(syms, Ftt, "numpy"), {k: sp.lambdify(syms, v, "numpy") for k, v in pieces.items()}


def test_scalar_acceleration_symbolic_oracle():
    Ftt, pieces = _wave_oracle()
    rng = np.random.default_rng(11)
    for _ in range(20):
        t, r, th = rng.uniform(0, 3), rng.uniform(2.2, 9), rng.uniform(0.2, 2.9)
        M, Q, m = 1.0, rng.uniform(0, 0.9), int(rng.integers(-2, 3))
        c = rng.uniform(-1, 1, 10)
        args = (t, r, th, M, Q, m, *c)
        p = {k: complex(fn(*args)) for k, fn in pieces.items()}
        got = scalar_acceleration_pointwise(
            p["phi"], p["pi"], p["phi_r"], p["phi_rr"], p["phi_th"], p["phi_thth"],
            p["A0"], p["A1"], p["dA1"], p["A2"], p["dA2"], p["A3"],
            r, p["f"].real, np.sin(th), np.cos(th), m,
        )
        assert got == pytest.approx(complex(Ftt(*args)), rel=1e-11, abs=1e-12)


def test_scalar_fast_path_matches_general(grids):
    x, th = grids.rstar, grids.angular.theta[None, :]
    phi = np.exp(-(x - 3) ** 2 / 8) * (1 + 0.3j * np.cos(th))
    pi = 0.2j * phi
    gauge = GaugePotential.coulomb(grids, 0.3)
    fast = scalar_acceleration(ScalarState(phi, pi, gauge), grids)
    tiny = GaugePotential(gauge.A0, gauge.A1, gauge.A2, gauge.A3 + 1e-300, 0.3)
    slow = scalar_acceleration(ScalarState(phi, pi, tiny), grids)
    np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-14)


# --- source rho ----------------------------------------------------------------

def test_rho_vanishes_for_zero_and_real_fields(grids):
    assert not np.any(source_rho(_scalar(grids, 0.0), BG, grids))
    x = grids.rstar
    real = _scalar(grids, np.exp(-x ** 2 / 10) * (1 + 0 * grids.cos), pi=0.1 * np.exp(-x ** 2 / 10))
    assert np.max(np.abs(source_rho(real, BG, grids))) == 0.0


def test_rho_symbolic_oracle(grids):
    """phi = e^{ikt} g(r*), A = 0: rho = d_r*( i r^2 (B0 + B1) ) with exact B's."""
    x = sp.symbols("x", real=True)
    k, a, b, x0, w = sp.symbols("k a b x0 w", real=True)
    g = (a + sp.I * b * x) * sp.exp(-(x - x0) ** 2 / w ** 2)
    gb = sp.conjugate(g)
    B0 = 2 * sp.I * k * g * gb
    B1 = sp.diff(g, x) * gb - g * sp.diff(gb, x)
    S = sp.I * (B0 + B1)
    dS = sp.lambdify((x, k, a, b, x0, w), sp.diff(S, x), "numpy")
    S_f = sp.lambdify((x, k, a, b, x0, w), S, "numpy")
    g_f = sp.lambdify((x, a, b, x0, w), g, "numpy")
    rng = np.random.default_rng(5)
    xs = grids.radial.rstar
    r, f = grids.radial.r, grids.radial.f
    for _ in range(20):
        kk, aa, bb = rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(-0.3, 0.3)
        xx0, ww = rng.uniform(-8, 8), rng.uniform(3, 6)
        gv = g_f(xs, aa, bb, xx0, ww)
        phi = np.repeat(gv[:, None], grids.shape[1], axis=1)
        s = _scalar(grids, phi, pi=1j * kk * phi)
        rho = source_rho(s, BG, grids, pi_t=-kk * kk * phi)
        # d/dr* (r^2 S) = 2 r f S + r^2 dS/dr*
        oracle = 2 * r * f * S_f(xs, kk, aa, bb, xx0, ww) + r ** 2 * dS(xs, kk, aa, bb, xx0, ww)
        scale = np.max(np.abs(oracle)) + 1e-300
        assert np.max(np.abs(rho[:, 5] - oracle)) / scale < 1e-5


def test_rho_gauge_invariant_under_constant_phase(grids):
    x, th = grids.rstar, grids.angular.theta[None, :]
    phi = np.exp(-(x - 2) ** 2 / 9) * (1 + 0.5j * np.cos(th) ** 2)
    pi = (0.3 - 0.2j) * phi
    gauge = GaugePotential.coulomb(grids, 0.2)
    base = source_rho(ScalarState(phi, pi, gauge), BG, grids)
    rot = np.exp(0.7j)
    turned = source_rho(ScalarState(rot * phi, rot * pi, gauge), BG, grids)
    np.testing.assert_allclose(turned, base, atol=1e-12 * np.max(np.abs(base)))


@given(st.floats(-3, 3), st.floats(0.1, 2))
def test_gauge_covariance_of_radial_derivative(alpha, beta):
    g = Grids(RadialGrid(BG, -20, 20, 401), AngularGrid(8, 0))
    x = g.rstar
    chi = alpha * np.tanh(x / 5)
    dchi = alpha / 5 / np.cosh(x / 5) ** 2
    phi = np.exp(-x ** 2 / (4 * beta + 4)) * np.ones(g.shape)
    A = GaugePotential.zero(g)
    moved = GaugePotential(A.A0, A.A1 + dchi, A.A2, A.A3)
    s0 = ScalarState(phi.astype(complex), np.zeros(g.shape, complex), A)
    s1 = ScalarState(np.exp(1j * chi) * phi, np.zeros(g.shape, complex), moved)
    J0 = current(s0, 1, g)
    J1 = current(s1, 1, g)
    np.testing.assert_allclose(J1, J0, atol=1e-4)


# --- currents and covariant derivatives ----------------------------------------

def test_covariant_derivative_examples(grids):
    x = grids.rstar
    s = _scalar(grids, np.exp(-x ** 2 / 10))
    assert np.max(np.abs(covariant_derivative(s, 0, grids))) == 0
    q = 0.7
    c = _scalar(grids, 1.0, gauge=GaugePotential.coulomb(grids, q))
    np.testing.assert_allclose(covariant_derivative(c, 0, grids), np.broadcast_to(-1j * q / grids.r, grids.shape))
    g2 = Grids(grids.radial, AngularGrid(32, 2))
    phi = np.exp(-x ** 2 / 10) * g2.sin ** 2
    A3 = 0.4 * np.ones(g2.shape)
    gauge = GaugePotential(np.zeros(g2.shape), np.zeros(g2.shape), np.zeros(g2.shape), A3)
    s3 = ScalarState(phi.astype(complex), np.zeros(g2.shape, complex), gauge)
    np.testing.assert_allclose(covariant_derivative(s3, 3, g2), (2j - 0.4j) * phi)
    with pytest.raises(ValueError):
        covariant_derivative(s3, 4, g2)


def test_current_examples(grids):
    x = grids.rstar
    real = _scalar(grids, np.exp(-x ** 2 / 10))
    for k in range(4):
        assert np.max(np.abs(current(real, k, grids))) == 0
    omega = 1.3
    wave = _scalar(grids, 1.0, pi=1j * omega)
    np.testing.assert_allclose(current(wave, 0, grids), 2 * omega)


@given(st.integers(0, 2 ** 31 - 1))
def test_current_is_real(seed):
    g = Grids(RadialGrid(BG, -10, 10, 64), AngularGrid(8, 1))
    rng = np.random.default_rng(seed)
    z = lambda: rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    gauge = GaugePotential(*(rng.standard_normal(g.shape) for _ in range(4)))
    s = ScalarState(z(), z(), gauge)
    for k in range(4):
        J = current(s, k, g)
        assert np.all(np.abs(J.imag) <= 1e-14 * np.maximum(np.abs(J), 1.0))


# --- spin components -----------------------------------------------------------

def test_faraday_examples(grids):
    zero = spin_from_faraday(np.zeros((4, 4)), BG, grids)
    assert not any(np.any(c) for c in (zero.minus1, zero.zero, zero.plus1))
    q = 0.8
    F = np.zeros((4, 4) + grids.shape)
    Ftr = grids.f * q / grids.r ** 2
    F[1, 0], F[0, 1] = Ftr, -Ftr
    cou = spin_from_faraday(F, BG, grids)
    np.testing.assert_allclose(cou.zero, q, rtol=1e-13)
    assert not np.any(cou.plus1) and not np.any(cou.minus1)
    F = np.zeros((4, 4) + grids.shape)
    F[2, 3], F[3, 2] = grids.sin * 0.6, -grids.sin * 0.6
    ang = spin_from_faraday(F, BG, grids)
    np.testing.assert_allclose(ang.zero, 0.6j, rtol=1e-13)


def test_coulomb_reference(grids):
    c = coulomb_reference(BG, grids, 0.9)
    assert np.all(c.zero == 0.9) and not np.any(c.plus1) and not np.any(c.minus1)
    z = coulomb_reference(BG, grids, 0.0)
    assert isinstance(z, SpinTriple) and not np.any(z.zero)
