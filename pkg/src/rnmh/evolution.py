"""
Time evolution on the RN exterior.

Two solver paths share the RK4 stepper:

- per-mode radial wave equation
      d_t^2 u = d_r*^2 u - l(l+1) V u + rho_l
- (r*, theta) first-order spin system coupled to the charged scalar.

The spin system ships in two variants. ``consistent`` (default) is

    d_t Phi_1  =  d_r* Phi_1  + V M Phi_0     + J
    d_t Phi_-1 = -d_r* Phi_-1 - V Mbar Phi_0  + J
    d_t Phi_0  = 1/2 (Mbar1 Phi_1 - M1 Phi_-1) + c_0
    constraint:  d_r* Phi_0 = 1/2 (Mbar1 Phi_1 + M1 Phi_-1)

with J = i f B_2 + i (f/sin) B_3 and c_0 = i r^2 (B_0 + B_1). This is what
the vacuum Maxwell equations give in the tetrad, it preserves its constraint
and it reduces to d_t^2 Phi_0 = d_r*^2 Phi_0 + V Delta_S Phi_0. ``literal``
keeps Mbar in place of Mbar1 and +V Mbar Phi_0 in the Phi_-1 equation; it
does not preserve its constraint and is kept only for comparison.

Boundaries: ``isolated`` freezes the two outer radial rows (the domain is
sized so no signal reaches them); ``sommerfeld`` imposes outgoing conditions
with one-sided stencils and zero incoming characteristics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .angular import apply_M, apply_M1, apply_Mbar, apply_Mbar1, legendre_profile
from .diagnostics import (
    EnergyReport,
    MultiplierParams,
    RunHistory,
    Snapshot,
    _h_over_r,
    conformal_energy,
    coupled_view,
    e_gamma,
    gauge_local_norms,
    identity_integrands,
    laplacian_energy,
    local_energy,
    mode_view,
    slice_local_norms,
    spectral_energy,
    total_energy,
)
from .fields import (
    GaugePotential,
    Grids,
    ScalarState,
    SpinTriple,
    bracket_from,
    scalar_acceleration,
    source_rho,
)
from .geometry import RadialGrid, RNBackground
from .stencils import cumulative_integral, d1, d2, interpolate_at

__all__ = [
    "ModeState",
    "CoupledState",
    "NumericalFault",
    "CFLViolation",
    "mode_rhs",
    "coupled_rhs",
    "constraint_residual",
    "cfl_limit",
    "step_rk4",
    "plan_steps",
    "radial_profile",
    "mode_initial_data",
    "coupled_initial_data",
    "evolve_mode",
    "evolve_coupled",
]

BOUNDARIES = ("isolated", "sommerfeld")
SPIN_SYSTEMS = ("consistent", "literal")
# step_rk4 refuses dt above this multiple of the CFL limit
CFL_MAX = 1.0
_EDGE = 2


class NumericalFault(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step: int, time: float):
        super().__init__(f"non-finite field values at step {step} (t = {time!r})")
        self.step = step
        self.time = time


class CFLViolation(ValueError):
    pass


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

@dataclass
class ModeState:
    """Radial profile of one (l, m) mode and its time derivative."""

    u: np.ndarray
    u_t: np.ndarray
    ell: int
    m: int = 0
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.ell < 0 or abs(self.m) > self.ell:
            raise ValueError(f"need ell >= 0 and |m| <= ell, got ell={self.ell}, m={self.m}")
        self.u = np.asarray(self.u, dtype=complex)
        self.u_t = np.asarray(self.u_t, dtype=complex)
        if self.u.shape != self.u_t.shape:
            raise ValueError("u and u_t must share a shape")

    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.u, self.u_t)

    def replaced(self, arrays: Sequence[np.ndarray], time: float) -> "ModeState":
        return ModeState(arrays[0], arrays[1], self.ell, self.m, time)


@dataclass
class CoupledState:
    spin: SpinTriple
    scalar: ScalarState
    time: float = 0.0

    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.spin.minus1, self.spin.zero, self.spin.plus1, self.scalar.phi, self.scalar.pi)

    def replaced(self, arrays: Sequence[np.ndarray], time: float) -> "CoupledState":
        spin = SpinTriple(arrays[0], arrays[1], arrays[2])
        scalar = ScalarState(arrays[3], arrays[4], self.scalar.gauge)
        return CoupledState(spin, scalar, time)


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def _check_boundary(boundary: str) -> None:
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")


def _freeze_edges(*arrays: np.ndarray) -> None:
    for a in arrays:
        a[:_EDGE] = 0.0
        a[-_EDGE:] = 0.0


def mode_rhs(s: ModeState, bg: RNBackground, grid: RadialGrid, source=None,
             boundary: str = "isolated") -> Tuple[np.ndarray, np.ndarray]:
    """
    (d_t u, d_t u_t) = (u_t, d_r*^2 u - l(l+1) V u + source).

    Parameters
    ----------
    source : ndarray, optional
        rho_l sampled on the grid; zero when omitted.
    """
    _check_boundary(boundary)
    h = grid.spacing
    lam = s.ell * (s.ell + 1)
    du = s.u_t.copy()
    dut = d2(s.u, h) - lam * grid.V * s.u
    if source is not None:
        dut = dut + source
    if boundary == "isolated":
        _freeze_edges(du, dut)
    else:
        # left end: ingoing into the horizon, (d_t - d_r*) u = 0
        ur, utr = d1(s.u, h), d1(s.u_t, h)
        du[:_EDGE], dut[:_EDGE] = ur[:_EDGE], utr[:_EDGE]
        du[-_EDGE:], dut[-_EDGE:] = -ur[-_EDGE:], -utr[-_EDGE:]
    return du, dut


def _currents(scalar: ScalarState, grids: Grids):
    """J = i f B_2 + i (f/sin) B_3 and c_0 = i r^2 (B_0 + B_1); None when phi = 0."""
    phi = scalar.phi
    if not np.any(phi):
        return None, None
    g = scalar.gauge
    ang = grids.angular
    D0 = scalar.pi - 1j * g.A0 * phi
    D1 = grids.dr1(phi) - 1j * g.A1 * phi
    D2 = ang.dtheta(phi) - 1j * g.A2 * phi
    D3 = 1j * (grids.m - g.A3) * phi
    B0, B1, B2, B3 = (bracket_from(phi, D) for D in (D0, D1, D2, D3))
    J = 1j * grids.f * B2 + 1j * grids.f / grids.sin * B3
    c0 = 1j * grids.r ** 2 * (B0 + B1)
    return J, c0


def coupled_rhs(s: CoupledState, bg: RNBackground, grids: Grids,
                spin_system: str = "consistent", boundary: str = "isolated"):
    """
    Time derivatives (dPhi_-1, dPhi_0, dPhi_1, dphi, dpi) of the coupled system.

    See the module docstring for the two spin-system variants. The scalar
    obeys D^mu D_mu phi = 0 on the fixed gauge background.
    """
    if spin_system not in SPIN_SYSTEMS:
        raise ValueError(f"spin_system must be one of {SPIN_SYSTEMS}, got {spin_system!r}")
    _check_boundary(boundary)
    ang, m = grids.angular, grids.m
    p0, ps = ang.scalar_parity(), ang.spin_parity()
    sp = s.spin
    V = grids.V

    dP1 = grids.dr1(sp.plus1) + V * apply_M(sp.zero, m, ang, p0)
    if spin_system == "consistent":
        dPm = -grids.dr1(sp.minus1) - V * apply_Mbar(sp.zero, m, ang, p0)
        dP0 = 0.5 * (apply_Mbar1(sp.plus1, m, ang, ps) - apply_M1(sp.minus1, m, ang, ps))
    else:
        dPm = -grids.dr1(sp.minus1) + V * apply_Mbar(sp.zero, m, ang, p0)
        dP0 = 0.5 * (apply_Mbar(sp.plus1, m, ang, ps) - apply_M1(sp.minus1, m, ang, ps))

    J, c0 = _currents(s.scalar, grids)
    if J is not None:
        dP1 = dP1 + J
        dPm = dPm + J
        dP0 = dP0 + c0

    if np.any(s.scalar.phi) or np.any(s.scalar.pi):
        dphi = s.scalar.pi.copy()
        dpi = scalar_acceleration(s.scalar, grids)
    else:
        # the scalar equation is linear and homogeneous in phi
        dphi, dpi = grids.zeros(), grids.zeros()

    if boundary == "isolated":
        _freeze_edges(dPm, dP0, dP1, dphi, dpi)
    else:
        # Phi_1 moves towards -r*, Phi_-1 towards +r*: zero what enters
        dP1[-_EDGE:] = 0.0
        dPm[:_EDGE] = 0.0
        phr, pir = grids.dr1(s.scalar.phi), grids.dr1(s.scalar.pi)
        dphi[:_EDGE], dpi[:_EDGE] = phr[:_EDGE], pir[:_EDGE]
        dphi[-_EDGE:], dpi[-_EDGE:] = -phr[-_EDGE:], -pir[-_EDGE:]
    return dPm, dP0, dP1, dphi, dpi


def constraint_field(spin: SpinTriple, grids: Grids, spin_system: str = "consistent") -> np.ndarray:
    """d_r* Phi_0 - 1/2 (Mbar1 Phi_1 + M1 Phi_-1) on the lattice."""
    ang, m = grids.angular, grids.m
    ps = ang.spin_parity()
    mbar = apply_Mbar1 if spin_system == "consistent" else apply_Mbar
    return grids.dr1(spin.zero) - 0.5 * (mbar(spin.plus1, m, ang, ps) + apply_M1(spin.minus1, m, ang, ps))


def constraint_residual(s, grids: Grids, spin_system: str = "consistent") -> float:
    """L2 norm (dr* d^2 omega) of the constraint field."""
    spin = s.spin if isinstance(s, CoupledState) else s
    C = constraint_field(spin, grids, spin_system)
    return math.sqrt(max(grids.integrate(np.abs(C) ** 2), 0.0))


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------

def cfl_limit(grids) -> float:
    """
    Largest stable-by-design step: min(dr*, dtheta / (sqrt(max V) (1 + |m|))).

    The (1 + |m|) factor accounts for the m/sin(theta) terms next to the
    poles. A bare RadialGrid only has the radial bound.
    """
    if isinstance(grids, RadialGrid):
        return grids.spacing
    ang = grids.angular
    vmax = float(np.max(grids.V))
    return min(grids.dr, ang.h / (math.sqrt(vmax) * (1 + abs(grids.m))))


def _rk4(arrays, rhs: Callable, dt: float):
    k1 = rhs(arrays)
    k2 = rhs([a + 0.5 * dt * k for a, k in zip(arrays, k1)])
    k3 = rhs([a + 0.5 * dt * k for a, k in zip(arrays, k2)])
    k4 = rhs([a + dt * k for a, k in zip(arrays, k3)])
    return [a + dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4) for a, q1, q2, q3, q4 in zip(arrays, k1, k2, k3, k4)]


def step_rk4(state, dt: float, bg: RNBackground, grids, *, spin_system: str = "consistent",
             boundary: str = "isolated", source: Optional[Callable[[float], np.ndarray]] = None):
    """
    One classical RK4 step of a ModeState (grids a RadialGrid) or a
    CoupledState (grids a Grids).

    Raises
    ------
    CFLViolation
        If dt exceeds CFL_MAX times :func:`cfl_limit`.
    """
    limit = cfl_limit(grids)
    if not 0 < dt <= CFL_MAX * limit * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt} outside (0, {CFL_MAX * limit}] (CFL limit {limit})")
    t0 = state.time
    if isinstance(state, ModeState):
        # the stage times of the source follow the classical tableau
        times = iter((t0, t0 + 0.5 * dt, t0 + 0.5 * dt, t0 + dt))

        def rhs(arrs):
            t = next(times)
            src = source(t) if source is not None else None
            return mode_rhs(state.replaced(arrs, t), bg, grids, src, boundary)
    elif isinstance(state, CoupledState):
        def rhs(arrs):
            return coupled_rhs(state.replaced(arrs, t0), bg, grids, spin_system, boundary)
    else:
        raise TypeError(f"cannot step {type(state).__name__}")
    return state.replaced(_rk4(list(state.arrays()), rhs, dt), t0 + dt)


@dataclass(frozen=True)
class StepPlan:
    dt: float
    steps_per_report: int
    snapshot_every: int
    n_reports: int

    @property
    def n_steps(self) -> int:
        return self.steps_per_report * self.n_reports


def plan_steps(limit: float, cfl: float, report_cadence: float, snapshot_cadence: int,
               t_final: float) -> StepPlan:
    """
    Choose dt <= cfl * limit so that report times fall on steps and the
    snapshot spacing (in steps) divides the steps per report.
    """
    if not 0 < cfl <= CFL_MAX:
        raise ValueError(f"cfl must lie in (0, {CFL_MAX}]")
    if not report_cadence > 0:
        raise ValueError("report_cadence must be positive")
    if not 1 <= snapshot_cadence <= 4:
        raise ValueError("snapshot_cadence must be 1..4 steps")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    n_reports = int(round(t_final / report_cadence))
    if abs(n_reports * report_cadence - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError("t_final must be a whole number of report intervals")
    n = math.ceil(report_cadence / (cfl * limit) - 1e-12)
    n = snapshot_cadence * math.ceil(n / snapshot_cadence)
    return StepPlan(report_cadence / n, n, snapshot_cadence, n_reports)


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def radial_profile(x, shape: str, center: float, width: float, amplitude: float):
    """
    Radial pulse and its r* derivative.

    ``gaussian``: A exp(-(x-c)^2 / (2 w^2)); ``bump``: A (1 - s^2)^4 for
    |s| = |x-c|/w < 1, compactly supported.
    """
    x = np.asarray(x, dtype=float)
    s = (x - center) / width
    if shape == "gaussian":
        val = amplitude * np.exp(-0.5 * s * s)
        der = -s / width * val
    elif shape == "bump":
        inside = np.abs(s) < 1
        q = np.where(inside, 1.0 - s * s, 0.0)
        val = amplitude * q ** 4
        der = amplitude * 4.0 * q ** 3 * (-2.0 * s / width)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return val, der


def _direction_ut(val, der, direction: str):
    if direction == "static":
        return np.zeros_like(val)
    if direction == "outgoing":
        return -der
    if direction == "ingoing":
        return der
    raise ValueError(f"unknown direction {direction!r}")


def mode_initial_data(grid: RadialGrid, ell: int, m: int = 0, shape: str = "gaussian",
                      center: float = 0.0, width: float = 4.0, amplitude: float = 1.0,
                      direction: str = "static") -> ModeState:
    val, der = radial_profile(grid.rstar, shape, center, width, amplitude)
    ut = _direction_ut(val, der, direction)
    return ModeState(val.astype(complex), ut.astype(complex), ell, m, 0.0)


def coupled_initial_data(grids: Grids, ell: int, *, shape: str = "gaussian", center: float = 0.0,
                         width: float = 4.0, amplitude: float = 1.0, constraint_solved: bool = True,
                         q_F: float = 0.0, q_A: float = 0.0, scalar_amplitude: float = 0.0,
                         scalar_center: float = 0.0, scalar_width: float = 4.0,
                         direction: str = "static", spin_system: str = "consistent") -> CoupledState:
    """
    Spin and scalar data on the (r*, theta) lattice.

    Constraint-solved spin data (time symmetric): with U the unit P_l^m
    profile, lam = l(l+1) and psi the radial pulse,

        Phi_1 = -(psi'/lam) M U,   Phi_-1 = -(psi'/lam) Mbar U,
        Phi_0 = q_F + int_{-inf}^{r*} 1/2 (Mbar1 Phi_1 + M1 Phi_-1),

    which is q_F + psi U in the continuum. Free data sets Phi_0 = q_F + psi U
    and Phi_+-1 = 0. The scalar is a pulse times U, static or outgoing.
    """
    ang, m = grids.angular, grids.m
    U = legendre_profile(ell, m, ang.theta)[None, :]
    psi, dpsi = radial_profile(grids.rstar, shape, center, width, amplitude)
    z = grids.zeros()
    if amplitude == 0.0:
        spin = SpinTriple(z.copy(), z + q_F, z.copy())
    elif constraint_solved:
        if ell < 1:
            raise ValueError("constraint-solved spin data needs ell >= 1")
        lam = ell * (ell + 1)
        p0 = ang.scalar_parity()
        Ub = np.broadcast_to(U, grids.shape).astype(complex)
        P1 = -(dpsi / lam) * apply_M(Ub, m, ang, p0)
        Pm = -(dpsi / lam) * apply_Mbar(Ub, m, ang, p0)
        spin = SpinTriple(Pm, z, P1)
        integrand = grids.dr1(spin.zero) - constraint_field(spin, grids, spin_system)
        spin.zero = q_F + cumulative_integral(integrand, grids.dr, axis=0)
    else:
        spin = SpinTriple(z.copy(), (q_F + psi * U).astype(complex), z.copy())

    gauge = GaugePotential.coulomb(grids, q_A)
    if scalar_amplitude != 0.0:
        sv, sd = radial_profile(grids.rstar, shape, scalar_center, scalar_width, scalar_amplitude)
        phi = (sv * U).astype(complex)
        pi = (_direction_ut(sv, sd, direction) * U).astype(complex)
    else:
        phi, pi = z.copy(), z.copy()
    return CoupledState(spin, ScalarState(phi, pi, gauge), 0.0)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def _finite(arrays) -> bool:
    return all(np.isfinite(np.sum(a)) for a in arrays)


@dataclass
class _Recorder:
    """Collects reports and snapshots during a run."""

    params: MultiplierParams
    history: RunHistory = field(default_factory=RunHistory)

    def snapshot(self, view, gcache) -> Snapshot:
        snap = Snapshot(view.t, total_energy(view), conformal_energy(view),
                        e_gamma(view, self.params, gcache), identity_integrands(view, self.params, gcache))
        self.history.snapshots.append(snap)
        return snap


def evolve_mode(state: ModeState, grid: RadialGrid, t_final: float, *,
                params: MultiplierParams = MultiplierParams(), cfl: float = 0.25,
                report_cadence: float = 1.0, snapshot_cadence: int = 2,
                boundary: str = "isolated",
                source: Optional[Callable[[float], np.ndarray]] = None,
                snapshots: bool = True, probe: Optional[float] = None) -> Tuple[RunHistory, ModeState]:
    """
    Evolve one radial mode, recording an EnergyReport every report_cadence
    and identity snapshots every snapshot_cadence steps.

    Raises
    ------
    NumericalFault
        On the first non-finite value, with the step index.
    """
    bg = grid.bg
    bg.require_subextremal()
    plan = plan_steps(cfl_limit(grid), cfl, report_cadence, snapshot_cadence, t_final)
    rec = _Recorder(params)
    hist = rec.history
    hist.meta.update(kind="mode", dt=plan.dt, ell=state.ell, m=state.m,
                     multiplier=(params.epsilon, params.sigma), steps_per_report=plan.steps_per_report)
    hcache = _h_over_r(grid.rstar, params)

    def view_of(s: ModeState):
        if source is None:
            return mode_view(s.u, s.u_t, grid, s.ell, s.time)
        src = source(s.time)
        return mode_view(s.u, s.u_t, grid, s.ell, s.time, rho=src)

    def report(s: ModeState):
        v = view_of(s)
        if snapshots:
            snap = rec.snapshot(v, hcache)
            E, EC, Eg = snap.E, snap.E_C, snap.E_gamma
        else:
            E, EC, Eg = total_energy(v), conformal_energy(v), e_gamma(v, params, hcache)
        hist.append(EnergyReport(s.time, E, EC, local_energy(v), Eg))
        if probe is not None:
            hist.meta.setdefault("probe", []).append(complex(interpolate_at(s.u, grid.rstar, probe)))

    v0 = view_of(state)
    hist.meta["initial"] = {
        "E": total_energy(v0), "E_C": conformal_energy(v0), "E_lap2": spectral_energy(v0, 2),
    }
    report(state)
    s = state
    for k in range(1, plan.n_steps + 1):
        s = step_rk4(s, plan.dt, bg, grid, boundary=boundary, source=source)
        s.time = k * plan.dt
        if not _finite(s.arrays()):
            raise NumericalFault(k, s.time)
        if k % plan.steps_per_report == 0:
            s.time = (k // plan.steps_per_report) * report_cadence
            report(s)
        elif snapshots and k % plan.snapshot_every == 0:
            rec.snapshot(view_of(s), hcache)
    return hist, s


def evolve_coupled(state: CoupledState, grids: Grids, t_final: float, *,
                   params: MultiplierParams = MultiplierParams(), cfl: float = 0.25,
                   report_cadence: float = 1.0, snapshot_cadence: int = 2,
                   boundary: str = "isolated", spin_system: str = "consistent",
                   q_F: float = 0.0, snapshots: bool = False,
                   on_report: Optional[Callable[[CoupledState], None]] = None) -> Tuple[RunHistory, CoupledState]:
    """
    Evolve the coupled spin/scalar system, reporting energies of
    u = Phi_0 - q_F (with u_t read from the system), the constraint
    residual and local norms of phi and A.

    Raises
    ------
    NumericalFault
        On the first non-finite value, with the step index.
    """
    bg = grids.bg
    bg.require_subextremal()
    plan = plan_steps(cfl_limit(grids), cfl, report_cadence, snapshot_cadence, t_final)
    rec = _Recorder(params)
    hist = rec.history
    hist.meta.update(kind="coupled", dt=plan.dt, m=grids.m, spin_system=spin_system,
                     multiplier=(params.epsilon, params.sigma), steps_per_report=plan.steps_per_report)
    hcache = _h_over_r(np.broadcast_to(grids.rstar, grids.shape[:1] + (1,)), params)
    has_scalar = bool(np.any(state.scalar.phi))

    def view_of(s: CoupledState, with_rho: bool = False):
        dP0 = coupled_rhs(s, bg, grids, spin_system, boundary)[1]
        rho = source_rho(s.scalar, bg, grids) if (with_rho and has_scalar) else None
        return coupled_view(s.spin.zero - q_F, dP0, s.scalar, grids, s.time, rho=rho)

    def report(s: CoupledState):
        v = view_of(s, with_rho=snapshots)
        if snapshots:
            snap = rec.snapshot(v, hcache)
            E, EC, Eg = snap.E, snap.E_C, snap.E_gamma
        else:
            E, EC, Eg = total_energy(v), conformal_energy(v), e_gamma(v, params, hcache)
        pn = slice_local_norms(s.scalar.phi, grids, s.time)
        an = gauge_local_norms(s.scalar, grids, s.time)
        hist.append(EnergyReport(
            s.time, E, EC, local_energy(v), Eg,
            constraint_residual(s, grids, spin_system),
            pn["linf"], an["linf"], pn["h4"], an["h4"], pn["l2"],
        ))
        if on_report is not None:
            on_report(s)

    v0 = view_of(state)
    hist.meta["initial"] = {
        "E": total_energy(v0), "E_C": conformal_energy(v0),
        "E_lap2": laplacian_energy(v0.u, v0.u_t, grids, 0.0, power=2),
    }
    report(state)
    s = state
    for k in range(1, plan.n_steps + 1):
        s = step_rk4(s, plan.dt, bg, grids, spin_system=spin_system, boundary=boundary)
        s.time = k * plan.dt
        if not _finite(s.arrays()):
            raise NumericalFault(k, s.time)
        if k % plan.steps_per_report == 0:
            s.time = (k // plan.steps_per_report) * report_cadence
            report(s)
        elif snapshots and k % plan.snapshot_every == 0:
            rec.snapshot(view_of(s, with_rho=True), hcache)
    return hist, s
