import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnmh.angular import AngularGrid
from rnmh.diagnostics import MultiplierParams
from rnmh.evolution import (
    CFLViolation,
    CoupledState,
    ModeState,
    NumericalFault,
    cfl_limit,
    constraint_residual,
    coupled_initial_data,
    coupled_rhs,
    evolve_coupled,
    evolve_mode,
    mode_initial_data,
    mode_rhs,
    plan_steps,
    step_rk4,
)
from rnmh.fields import GaugePotential, Grids, ScalarState, SpinTriple, coulomb_reference
from rnmh.geometry import RadialGrid, RNBackground
from rnmh.stencils import d1, d2

BG = RNBackground(1.0, 0.5)


def _grids(n=401, nt=24, m=0, lo=-40.0, hi=40.0):
    return Grids(RadialGrid(BG, lo, hi, n), AngularGrid(nt, m))


def _state(grids, spin, phi=None, q_A=0.0):
    z = grids.zeros()
    scalar = ScalarState(z.copy() if phi is None else phi, z.copy(), GaugePotential.coulomb(grids, q_A))
    return CoupledState(spin, scalar, 0.0)


# --- per-mode right-hand side ----------------------------------------------------

def test_mode_rhs_zero_and_l0():
    grid = RadialGrid(BG, -30, 30, 241)
    z = np.zeros(241)
    du, dut = mode_rhs(ModeState(z, z, 2), BG, grid)
    assert not np.any(du) and not np.any(dut)
    u = np.exp(-grid.rstar ** 2 / 8)
    ut = 0.3 * u
    src = 0.1 * np.cos(grid.rstar)
    du, dut = mode_rhs(ModeState(u, ut, 0), BG, grid, source=src)
    inner = slice(2, -2)
    np.testing.assert_allclose(du[inner], ut[inner])
    np.testing.assert_allclose(dut[inner], (d2(u, grid.spacing) + src)[inner])


def test_mode_rhs_isolated_edges_frozen():
    grid = RadialGrid(BG, -30, 30, 241)
    u = np.cos(grid.rstar)
    du, dut = mode_rhs(ModeState(u, u, 1), BG, grid)
    assert not np.any(du[:2]) and not np.any(dut[-2:])
    with pytest.raises(ValueError):
        mode_rhs(ModeState(u, u, 1), BG, grid, boundary="reflecting")


def _advected_error(n):
    # far from the hole V ~ 1/r^2 is tiny: an l = 0 pulse travels at unit speed
    grid = RadialGrid(BG, 2000.0, 2200.0, n)
    s = mode_initial_data(grid, 0, 0, "gaussian", 2060.0, 4.0, 1.0, "outgoing")
    _, final = evolve_mode(s, grid, 40.0, report_cadence=40.0, snapshots=False)
    exact = np.exp(-0.5 * ((grid.rstar - 2100.0) / 4.0) ** 2)
    return np.max(np.abs(final.u - exact))


def test_plane_wave_phase_speed():
    e = [_advected_error(n) for n in (401, 801, 1601)]
    assert e[2] < 2e-4
    assert np.log2(e[0] / e[1]) > 3.0


# --- coupled right-hand side -----------------------------------------------------

def test_coulomb_is_stationary():
    g = _grids()
    s = _state(g, coulomb_reference(BG, g, 0.7), q_A=0.2)
    # zero analytically; the theta stencils leave rounding of 0.7 * coefficients
    for arr in coupled_rhs(s, BG, g):
        assert np.max(np.abs(arr)) <= 1e-15
    assert constraint_residual(s, g) <= 1e-14
    z = _state(g, coulomb_reference(BG, g, 0.0))
    assert constraint_residual(z, g) == 0.0


def _a3_state(g, w, wp, b):
    """Spin data of A = a dphi with a = sin^2(theta) w(r*), d_t a = sin^2(theta) b(r*)."""
    s, c = g.sin, g.cos
    P0 = 2j * c * w[:, None]
    P1 = 1j * s * (b + wp)[:, None]
    Pm = 1j * s * (-b + wp)[:, None]
    return SpinTriple(np.broadcast_to(Pm, g.shape).astype(complex), np.broadcast_to(P0, g.shape).astype(complex),
                      np.broadcast_to(P1, g.shape).astype(complex))


def test_vacuum_maxwell_oracle_consistent_system():
    """
    F = dA with A = sin^2(theta) w dphi is a vacuum field iff d_t^2 a obeys the
    l = 1 wave equation, giving exact time derivatives of all three components.
    """
    g = _grids(n=801, nt=64)
    x = g.radial.rstar
    V = g.radial.V
    w = np.exp(-(x - 3) ** 2 / 18)
    wp = d1(w, g.dr)
    wpp = d2(w, g.dr)
    b = 0.4 * np.exp(-(x + 2) ** 2 / 12)
    bp = d1(b, g.dr)
    spin = _a3_state(g, w, wp, b)
    dPm, dP0, dP1, _, _ = coupled_rhs(_state(g, spin), BG, g, "consistent")
    s, c = g.sin, g.cos
    exp1 = 1j * s * (wpp - 2 * V * w + bp)[:, None]
    expm = 1j * s * (-wpp + 2 * V * w + bp)[:, None]
    exp0 = 2j * c * b[:, None]
    inner = slice(4, -4)
    assert np.max(np.abs(dP1 - exp1)[inner]) < 1e-5
    assert np.max(np.abs(dPm - expm)[inner]) < 1e-5
    assert np.max(np.abs(dP0 - exp0)[inner]) < 1e-5
    assert constraint_residual(_state(g, spin), g) < 1e-5
    # the literal transcription gets the potential term of Phi_-1 wrong
    lit = coupled_rhs(_state(g, spin), BG, g, "literal")[0]
    assert np.max(np.abs(lit - expm)[inner]) > 1e-2


def test_literal_system_breaks_constraint():
    g = _grids(n=401, nt=24, lo=-60, hi=60)
    res = {}
    for system in ("consistent", "literal"):
        s = coupled_initial_data(g, 1, width=3.0, spin_system=system)
        r0 = constraint_residual(s, g, system)
        dt = 0.25 * cfl_limit(g)
        for _ in range(int(5.0 / dt)):
            s = step_rk4(s, dt, BG, g, spin_system=system)
        res[system] = constraint_residual(s, g, system) / max(r0, 1e-300)
    assert res["consistent"] < 2.0
    assert res["literal"] > 100.0


def test_spin_components_advect():
    # Phi_1 obeys d_t Phi_1 = d_r* Phi_1 + ...: it moves towards -r*
    g = _grids(n=801, nt=16, lo=1000, hi=1200)
    x = g.rstar
    pulse = np.exp(-(x - 1100) ** 2 / 20) * g.sin
    spin = SpinTriple(pulse.astype(complex), g.zeros(), pulse.astype(complex))
    s = _state(g, spin)
    dt = 0.25 * cfl_limit(g)
    for _ in range(int(round(10.0 / dt))):
        s = step_rk4(s, dt, BG, g)
    peak1 = x[np.argmax(np.abs(s.spin.plus1[:, 8])), 0]
    peakm = x[np.argmax(np.abs(s.spin.minus1[:, 8])), 0]
    assert peak1 == pytest.approx(1100 - s.time, abs=0.5)
    assert peakm == pytest.approx(1100 + s.time, abs=0.5)


@given(st.floats(-3, 3).filter(lambda a: abs(a) > 1e-3))
@settings(max_examples=20)
def test_spin_linearity(alpha):
    g = _grids(n=64, nt=8, lo=-10, hi=10)
    rng = np.random.default_rng(0)
    z = lambda: rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    spin = SpinTriple(z(), z(), z())
    phi = np.exp(-g.rstar ** 2 / 6) * (1 + 0.2j * g.cos)
    base = _state(g, spin, phi=phi, q_A=0.1)
    scaled = _state(g, SpinTriple(alpha * spin.minus1, alpha * spin.zero, alpha * spin.plus1), phi=phi, q_A=0.1)
    none = _state(g, SpinTriple(g.zeros(), g.zeros(), g.zeros()), phi=phi, q_A=0.1)
    r1, ra, r0 = (coupled_rhs(s, BG, g) for s in (base, scaled, none))
    for k in range(3):
        # (rhs(alpha Phi) - rhs(0)) = alpha (rhs(Phi) - rhs(0)); current terms cancel
        np.testing.assert_allclose(ra[k] - r0[k], alpha * (r1[k] - r0[k]), atol=1e-9 * (1 + abs(alpha)) * np.max(np.abs(r1[k])))
    for k in (3, 4):
        np.testing.assert_array_equal(ra[k], r1[k])


# --- constraint-solved data --------------------------------------------------------

def test_constraint_solved_data_converges():
    res = []
    for n, nt in ((201, 16), (401, 32), (801, 64)):
        g = _grids(n=n, nt=nt, lo=-40, hi=40)
        res.append(constraint_residual(coupled_initial_data(g, 2, width=3.0), g))
    assert res[2] < res[1] < res[0]
    assert np.log2(res[1] / res[2]) > 3.0


# --- stepping ----------------------------------------------------------------------

def test_zero_state_stays_zero():
    grid = RadialGrid(BG, -20, 20, 101)
    s = ModeState(np.zeros(101), np.zeros(101), 1)
    out = step_rk4(s, 0.1, BG, grid)
    assert not np.any(out.u) and not np.any(out.u_t) and out.time == pytest.approx(0.1)


def test_cfl_refused():
    grid = RadialGrid(BG, -20, 20, 101)
    s = mode_initial_data(grid, 1)
    with pytest.raises(CFLViolation):
        step_rk4(s, 2 * grid.spacing, BG, grid)


def test_rk4_local_error_order():
    grid = RadialGrid(BG, -30, 30, 301)
    s = mode_initial_data(grid, 2, direction="outgoing", width=3.0)
    dt = 0.2
    diffs = []
    for h in (dt, dt / 2, dt / 4):
        one = step_rk4(s, h, BG, grid)
        two = step_rk4(step_rk4(s, h / 2, BG, grid), h / 2, BG, grid)
        diffs.append(np.max(np.abs(one.u - two.u)))
    # local error O(dt^5)
    assert np.log2(diffs[1] / diffs[2]) > 4.5


def test_global_time_error_fourth_order():
    grid = RadialGrid(BG, -30, 30, 241)
    s0 = mode_initial_data(grid, 2, width=3.0)
    ref = s0
    for _ in range(64):
        ref = step_rk4(ref, 1.0 / 64, BG, grid)
    errs = []
    for n in (8, 16, 32):
        s = s0
        for _ in range(n):
            s = step_rk4(s, 1.0 / n, BG, grid)
        errs.append(np.max(np.abs(s.u - ref.u)))
    assert np.log2((errs[0] - 0) / errs[1]) > 3.5


def test_plan_steps():
    p = plan_steps(0.1, 0.25, 1.0, 2, 10.0)
    assert p.dt <= 0.025 and p.steps_per_report % 2 == 0
    assert p.steps_per_report * p.dt == pytest.approx(1.0)
    with pytest.raises(ValueError):
        plan_steps(0.1, 0.25, 1.0, 2, 10.5)
    with pytest.raises(ValueError):
        plan_steps(0.1, 1.5, 1.0, 2, 10.0)


# --- drivers -----------------------------------------------------------------------

def test_evolve_t0_single_report():
    grid = RadialGrid(BG, -50, 50, 201)
    hist, final = evolve_mode(mode_initial_data(grid, 2), grid, 0.0)
    assert len(hist.reports) == 1 and hist.reports[0].time == 0.0
    assert final.time == 0.0


def test_evolve_reports_increasing_and_energy_flat():
    grid = RadialGrid(BG, -100, 100, 801)
    hist, _ = evolve_mode(mode_initial_data(grid, 2), grid, 20.0, snapshots=False)
    t = hist.times()
    assert np.all(np.diff(t) > 0) and t[-1] == pytest.approx(20.0)
    E = hist.column("E")
    assert abs(E[-1] - E[0]) / E[0] < 1e-5


def test_numerical_fault_raised():
    grid = RadialGrid(BG, -50, 50, 201)
    s = mode_initial_data(grid, 2)
    s.u[100] = np.nan
    with pytest.raises(NumericalFault) as info:
        evolve_mode(s, grid, 2.0, snapshots=False)
    assert info.value.step >= 0


def test_coulomb_fixed_point_short():
    g = _grids(n=256, nt=16, lo=-50, hi=50)
    s = coupled_initial_data(g, 2, amplitude=0.0, q_F=1.0, q_A=0.3)
    hist, final = evolve_coupled(s, g, 5.0, q_F=1.0)
    assert np.max(np.abs(final.spin.zero - 1.0)) == 0.0
    assert hist.column("E").max() <= 1e-28


def test_two_d_energy_matches_mode_energy():
    # an axisymmetric l-mode on the lattice has the per-mode energy
    from rnmh.diagnostics import coupled_view, mode_view, total_energy
    from rnmh.angular import legendre_profile

    g = _grids(n=401, nt=64)
    ms = mode_initial_data(g.radial, 2, width=3.0, direction="outgoing")
    U = legendre_profile(2, 0, g.angular.theta)[None, :]
    e2 = total_energy(coupled_view(ms.u[:, None] * U, ms.u_t[:, None] * U, None, g, 0.0))
    e1 = total_energy(mode_view(ms.u, ms.u_t, g.radial, 2, 0.0))
    assert e2 == pytest.approx(e1, rel=1e-5)
