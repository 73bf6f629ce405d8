"""
Energy functionals, the multiplier family and the exact-identity residuals.

Densities (complex fields pair through Re(a conj(b))):

    e   = |u_t|^2 + |u_r|^2 + V |grad_S u|^2 + |D_0 phi|^2 + sum_i |D_i phi|^2
    e_C = (t^2 + r*^2)/2 e + 2 t r* Re(u_t conj(u_r)) + e

    E = 1/2 int e,   E_C = 1/2 int e_C,   E_l = 1/2 int_{|r*| <= max(3t/4, a)} e
    E_gamma = int Re(gamma conj(u_t)),   gamma = g u_r + (g_r / 2) u

On the per-mode radial path u is the coefficient of a unit spherical
harmonic, so the sphere integral is 1 and |grad_S u|^2 -> l(l+1)|u|^2. On the
(r*, theta) path the sphere integral is 2 pi times the Fejer quadrature.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sp_integrate

from .angular import apply_laplacian_S
from .fields import Grids, ScalarState, covariant_derivative
from .geometry import RadialGrid
from .stencils import d1, d2

__all__ = [
    "MultiplierParams",
    "EnergyReport",
    "Snapshot",
    "RunHistory",
    "SliceView",
    "mode_view",
    "coupled_view",
    "energy_density",
    "total_energy",
    "conformal_energy",
    "local_energy",
    "conformal_density",
    "multiplier_h",
    "bump_mu",
    "radial_g",
    "radial_g_derivatives",
    "e_gamma",
    "identity_integrands",
    "morawetz_balance_residual",
    "egamma_identity_residual",
    "local_region_mask",
    "slice_local_norms",
    "local_norms",
    "gauge_local_norms",
    "spectral_energy",
    "laplacian_energy",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "t", "E", "E_C", "E_l", "E_gamma", "constraint_l2",
    "linf_phi_loc", "linf_A_loc", "h4_phi_loc", "h4_A_loc",
)


# ---------------------------------------------------------------------------
# Multiplier family h, mu, g
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierParams:
    """eps > 0, sigma in [1, 2]; the bump uses the exp(-1/x) smoothstep."""

    epsilon: float = 1.0
    sigma: float = 1.0
    bump: str = "exp-smoothstep"

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 1.0 <= self.sigma <= 2.0:
            raise ValueError("sigma must lie in [1, 2]")
        if self.bump != "exp-smoothstep":
            raise ValueError(f"unknown bump profile {self.bump!r}")


def _h_quad(x: float, p: MultiplierParams) -> float:
    val, _ = sp_integrate.quad(
        lambda y: (1.0 + (p.epsilon * y) ** 2) ** (-p.sigma), 0.0, x,
        epsabs=1e-13, epsrel=1e-13, limit=200,
    )
    return val


def multiplier_h(rstar, params: MultiplierParams, deriv: int = 0, method: str = "auto"):
    """
    h(r*) = int_0^r* (1 + (eps y)^2)^(-sigma) dy and its derivatives.

    sigma = 1 uses arctan(eps r*)/eps; other sigma use adaptive
    Gauss-Kronrod quadrature (``method="quad"`` forces it for sigma = 1).
    """
    x = np.asarray(rstar, dtype=float)
    eps, sig = params.epsilon, params.sigma
    q = 1.0 + (eps * x) ** 2
    if deriv == 0:
        if sig == 1.0 and method != "quad":
            out = np.arctan(eps * x) / eps
        else:
            out = np.vectorize(lambda v: _h_quad(float(v), params), otypes=[float])(x)
    elif deriv == 1:
        out = q ** (-sig)
    elif deriv == 2:
        out = -2.0 * eps ** 2 * sig * x * q ** (-sig - 1.0)
    elif deriv == 3:
        out = 2.0 * eps ** 2 * sig * ((2.0 * sig + 1.0) * (eps * x) ** 2 - 1.0) * q ** (-sig - 2.0)
    else:
        raise ValueError("deriv must be 0..3")
    return float(out) if out.ndim == 0 else out


def _h_over_r(x: np.ndarray, params: MultiplierParams, hvals: Optional[np.ndarray] = None):
    """H = h/r and its first three derivatives, regular at r* = 0."""
    eps, sig = params.epsilon, params.sigma
    h = multiplier_h(x, params) if hvals is None else hvals
    h1 = multiplier_h(x, params, 1)
    h2 = multiplier_h(x, params, 2)
    h3 = multiplier_h(x, params, 3)
    small = np.abs(eps * x) < 0.1
    safe = np.where(small, 1.0, x)
    H = h / safe
    H1 = (h1 - H) / safe
    H2 = (h2 - 2.0 * H1) / safe
    H3 = (h3 - 3.0 * H2) / safe
    if small.any():
        # H = sum_k c_k (eps x)^(2k) / (2k+1), c_k = binom(-sigma, k)
        xs = x[small]
        T = [np.zeros_like(xs) for _ in range(4)]
        c = 1.0
        for k in range(12):
            a = c / (2 * k + 1) * eps ** (2 * k)
            n = 2 * k
            T[0] += a * xs ** n
            if n >= 1:
                T[1] += a * n * xs ** (n - 1)
            if n >= 2:
                T[2] += a * n * (n - 1) * xs ** (n - 2)
            if n >= 3:
                T[3] += a * n * (n - 1) * (n - 2) * xs ** (n - 3)
            c *= (-sig - k) / (k + 1)
        H[small], H1[small], H2[small], H3[small] = T
    return H, H1, H2, H3


def _psi(x, k):
    """k-th derivative of exp(-1/x) for x > 0 (zero elsewhere)."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    e = np.where(pos, np.exp(-1.0 / xs), 0.0)
    if k == 0:
        return e
    if k == 1:
        return e / xs ** 2
    if k == 2:
        return e * (1.0 - 2.0 * xs) / xs ** 4
    return e * (6.0 * xs ** 2 - 6.0 * xs + 1.0) / xs ** 6


def _smoothstep(x):
    """S = psi(x)/(psi(x)+psi(1-x)) and three derivatives on (0, 1)."""
    A = [_psi(x, k) for k in range(4)]
    B = [(-1) ** k * _psi(1.0 - x, k) for k in range(4)]
    D = [a + b for a, b in zip(A, B)]
    S0 = A[0] / D[0]
    S1 = (A[1] - S0 * D[1]) / D[0]
    S2 = (A[2] - 2 * S1 * D[1] - S0 * D[2]) / D[0]
    S3 = (A[3] - 3 * S2 * D[1] - 3 * S1 * D[2] - S0 * D[3]) / D[0]
    return S0, S1, S2, S3


def _bump_all(tau) -> Tuple[np.ndarray, ...]:
    """mu and its first three derivatives in one pass."""
    tau = np.asarray(tau, dtype=float)
    a = np.abs(tau)
    trans = (a > 0.5) & (a < 0.75)
    s = np.where(trans, 4.0 * (a - 0.5), 0.5)
    S = _smoothstep(s)
    # 1 - S as its own ratio, which stays positive up to the support edge
    ps, pc = _psi(s, 0), _psi(1.0 - s, 0)
    sgn = np.sign(tau)
    out = [np.where(a <= 0.5, 1.0, np.where(trans, pc / (ps + pc), 0.0))]
    for k in (1, 2, 3):
        val = np.where(trans, -(4.0 ** k) * S[k], 0.0)
        out.append(val * sgn if k % 2 else val)
    return tuple(out)


def bump_mu(tau, deriv: int = 0):
    """
    C-infinity bump: 1 on [-1/2, 1/2], 0 outside (-3/4, 3/4).

    The transition is 1 - S(4(|tau| - 1/2)) with S the normalised
    exp(-1/x) smoothstep. Derivatives up to third order are analytic.
    """
    if deriv not in (0, 1, 2, 3):
        raise ValueError("deriv must be 0..3")
    out = _bump_all(tau)[deriv]
    return float(out) if out.ndim == 0 else out


_T_MIN = 1e-100


def radial_g_derivatives(t: float, rstar, params: MultiplierParams,
                         hcache: Optional[Tuple[np.ndarray, ...]] = None) -> Dict[str, np.ndarray]:
    """
    g = (t/r*) mu(r*/t) h(r*) = t mu H with H = h/r*, and its derivatives.

    Returns a dict with keys g, g_r, g_rr, g_rrr, g_t, g_tr.
    """
    x = np.asarray(rstar, dtype=float)
    # the support |r*| < 3t/4 has no extent (and 1/t^2 overflows) for tiny t
    if t <= _T_MIN:
        z = np.zeros_like(x)
        return dict(g=z, g_r=z, g_rr=z, g_rrr=z, g_t=z, g_tr=z)
    H, H1, H2, H3 = hcache if hcache is not None else _h_over_r(x, params)
    tau = x / t
    m0, m1, m2, m3 = _bump_all(tau)
    g = t * m0 * H
    g_r = m1 * H + t * m0 * H1
    g_rr = m2 * H / t + 2 * m1 * H1 + t * m0 * H2
    g_rrr = m3 * H / t ** 2 + 3 * m2 * H1 / t + 3 * m1 * H2 + t * m0 * H3
    g_t = H * (m0 - tau * m1)
    g_tr = H1 * (m0 - tau * m1) - H * tau * m2 / t
    return dict(g=g, g_r=g_r, g_rr=g_rr, g_rrr=g_rrr, g_t=g_t, g_tr=g_tr)


def radial_g(t: float, rstar, params: MultiplierParams):
    """g(t, r*) = (t/r*) mu(r*/t) h(r*), equal to t mu(0) at r* = 0."""
    out = radial_g_derivatives(t, np.atleast_1d(rstar), params)["g"]
    return float(out[0]) if np.ndim(rstar) == 0 else out


# ---------------------------------------------------------------------------
# Slice views
# ---------------------------------------------------------------------------

@dataclass
class SliceView:
    """
    Everything the functionals need from one time slice.

    ``integrate`` maps a density (broadcast over the lattice) to
    int density dr* d^2 omega; ``grad2`` is |grad_S u|^2.
    """

    t: float
    rstar: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    u_r: np.ndarray
    grad2: np.ndarray
    V: np.ndarray
    I: np.ndarray
    dV: np.ndarray
    scalar_density: np.ndarray
    integrate: Callable[[np.ndarray], float]
    ang_weight: Optional[np.ndarray] = None  # l(l+1) on the per-mode path
    rho: Optional[np.ndarray] = None
    u_rr: Optional[np.ndarray] = None


def mode_view(u, u_t, grid: RadialGrid, ell: int, t: float,
              rho: Optional[np.ndarray] = None) -> SliceView:
    """View of a per-mode radial profile (unit spherical harmonic)."""
    u = np.asarray(u)
    u_t = np.asarray(u_t)
    lam = ell * (ell + 1)
    h = grid.spacing
    return SliceView(
        t=float(t), rstar=grid.rstar, u=u, u_t=u_t, u_r=d1(u, h),
        grad2=lam * np.abs(u) ** 2, V=grid.V, I=grid.I, dV=grid.dV,
        scalar_density=np.zeros(grid.n_points),
        integrate=lambda dens: float(np.sum(dens) * h),
        ang_weight=np.full(grid.n_points, float(lam)),
        rho=rho, u_rr=d2(u, h),
    )


def scalar_energy_density(s: ScalarState, grids: Grids) -> np.ndarray:
    """|D_0 phi|^2 + sum_i |D_i phi|^2 with coordinate components."""
    return sum(np.abs(covariant_derivative(s, k, grids)) ** 2 for k in range(4))


def coupled_view(u, u_t, scalar: Optional[ScalarState], grids: Grids, t: float,
                 rho: Optional[np.ndarray] = None) -> SliceView:
    """View of a (r*, theta) field u with optional scalar contribution."""
    ang = grids.angular
    u = np.asarray(u)
    u_th = ang.dtheta(u)
    grad2 = np.abs(u_th) ** 2 + (grids.m ** 2 / grids.sin ** 2) * np.abs(u) ** 2
    sd = scalar_energy_density(scalar, grids) if scalar is not None else np.zeros(grids.shape)
    return SliceView(
        t=float(t), rstar=grids.rstar, u=u, u_t=np.asarray(u_t), u_r=grids.dr1(u),
        grad2=grad2, V=grids.V, I=grids.I, dV=grids.dV,
        scalar_density=sd, integrate=grids.integrate, rho=rho, u_rr=grids.dr2(u),
    )


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def energy_density(view: SliceView) -> np.ndarray:
    """e = |u_t|^2 + |u_r|^2 + V |grad_S u|^2 + scalar terms."""
    return np.abs(view.u_t) ** 2 + np.abs(view.u_r) ** 2 + view.V * view.grad2 + view.scalar_density


def conformal_density(view: SliceView) -> np.ndarray:
    """e_C = (t^2 + r*^2)/2 e + 2 t r* Re(u_t conj(u_r)) + e."""
    e = energy_density(view)
    t, x = view.t, view.rstar
    cross = np.real(view.u_t * np.conj(view.u_r))
    return 0.5 * (t * t + x * x) * e + 2.0 * t * x * cross + e


def total_energy(view: SliceView) -> float:
    """
    E = 1/2 int e.

    When the view carries u_rr, the radial gradient term is integrated in
    summation-by-parts form -Re(conj(u) u_rr), equal to |u_r|^2 after
    integration by parts for data vanishing at the ends. This is the energy
    the semi-discrete centred scheme conserves exactly, so the measured drift
    is the time-integration error rather than a quadrature artefact.
    """
    e = energy_density(view)
    if view.u_rr is not None:
        e = e - np.abs(view.u_r) ** 2 - np.real(np.conj(view.u) * view.u_rr)
    return 0.5 * view.integrate(e)


def conformal_energy(view: SliceView) -> float:
    return 0.5 * view.integrate(conformal_density(view))


def local_energy(view: SliceView, a: float = 1.0) -> float:
    """1/2 int over |r*| <= max(3t/4, a) of e; 0 for an empty region."""
    R = max(0.75 * view.t, a)
    mask = np.abs(view.rstar) <= R
    return 0.5 * view.integrate(np.where(mask, energy_density(view), 0.0))


def e_gamma(view: SliceView, params: MultiplierParams, gcache=None) -> float:
    """E_gamma = int Re(gamma conj(u_t)), gamma = g u_r + g_r u / 2."""
    if view.t <= 0:
        return 0.0
    G = radial_g_derivatives(view.t, view.rstar, params, gcache)
    gamma = G["g"] * view.u_r + 0.5 * G["g_r"] * view.u
    return view.integrate(np.real(gamma * np.conj(view.u_t)))


# ---------------------------------------------------------------------------
# Identity integrands and residuals
# ---------------------------------------------------------------------------

def identity_integrands(view: SliceView, params: MultiplierParams, gcache=None) -> Dict[str, float]:
    """
    Slice integrals whose time integrals enter the two exact identities.

    morawetz      : int t V I |grad_S u|^2            (rate of E_C as defined)
    morawetz_lit  : int 2 t V I |grad_S u|^2          (displayed form)
    morawetz_src  : 1/2 int Q + int Re(u_t rho)       (Q = K(u) rho)
    morawetz_Q    : int Q
    egamma        : bulk of the E_gamma identity
    egamma_src2   : 2 int Re(gamma rho)
    egamma_src1   : int Re(gamma rho)                 (displayed form)
    """
    t = view.t
    out = {}
    bulk = view.V * view.I * view.grad2
    out["morawetz"] = view.integrate(t * bulk)
    out["morawetz_lit"] = view.integrate(2.0 * t * bulk)
    if view.rho is not None:
        x = view.rstar
        Kr = (t * t + x * x) * view.u_t + 2.0 * t * x * view.u_r
        Q = view.integrate(np.real(Kr * np.conj(view.rho)))
        out["morawetz_Q"] = Q
        out["morawetz_src"] = 0.5 * Q + view.integrate(np.real(view.u_t * np.conj(view.rho)))
    else:
        out["morawetz_Q"] = 0.0
        out["morawetz_src"] = 0.0
    if t > 0:
        G = radial_g_derivatives(t, view.rstar, params, gcache)
        u, ut, ur = view.u, view.u_t, view.u_r
        dens = (
            -2.0 * G["g_r"] * np.abs(ur) ** 2
            + 0.5 * G["g_rrr"] * np.abs(u) ** 2
            + G["g"] * view.dV * view.grad2
            + 2.0 * G["g_t"] * np.real(ut * np.conj(ur))
            + G["g_tr"] * np.real(u * np.conj(ut))
        )
        out["egamma"] = view.integrate(dens)
        if view.rho is not None:
            gamma = G["g"] * ur + 0.5 * G["g_r"] * u
            src = view.integrate(np.real(gamma * np.conj(view.rho)))
        else:
            src = 0.0
    else:
        out["egamma"] = 0.0
        src = 0.0
    out["egamma_src2"] = 2.0 * src
    out["egamma_src1"] = src
    return out


@dataclass
class EnergyReport:
    time: float
    E: float
    E_C: float
    E_l: float
    E_gamma: float
    constraint_residual: float = 0.0
    linf_phi_loc: float = 0.0
    linf_A_loc: float = 0.0
    h4_phi_loc: float = 0.0
    h4_A_loc: float = 0.0
    l2_phi_loc: float = 0.0

    def csv_row(self) -> Tuple[float, ...]:
        return (self.time, self.E, self.E_C, self.E_l, self.E_gamma, self.constraint_residual,
                self.linf_phi_loc, self.linf_A_loc, self.h4_phi_loc, self.h4_A_loc)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in asdict(self).values())


@dataclass
class Snapshot:
    """Identity-checkpoint record at one time level."""

    time: float
    E: float
    E_C: float
    E_gamma: float
    integrands: Dict[str, float]


@dataclass
class RunHistory:
    reports: List[EnergyReport] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    meta: Dict[str, object] = field(default_factory=dict)

    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.reports])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports], dtype=float)

    def append(self, report: EnergyReport) -> None:
        if self.reports and not report.time > self.reports[-1].time:
            raise ValueError("report times must increase strictly")
        self.reports.append(report)


def _snapshot_window(history: RunHistory, t1: float, t2: float) -> List[Snapshot]:
    snaps = history.snapshots
    if len(snaps) < 3:
        raise ValueError("identity check needs at least three snapshots")
    times = np.array([s.time for s in snaps])
    tol = 1e-9 * max(1.0, abs(t2))
    i1 = np.flatnonzero(np.abs(times - t1) <= tol)
    i2 = np.flatnonzero(np.abs(times - t2) <= tol)
    if not len(i1) or not len(i2):
        raise ValueError(f"[{t1}, {t2}] endpoints are not snapshot times")
    window = snaps[i1[0]: i2[0] + 1]
    if len(window) < 3:
        raise ValueError("window too short for Simpson quadrature")
    steps = np.diff([s.time for s in window])
    if np.ptp(steps) > 1e-9 * max(1.0, steps.max()):
        raise ValueError("snapshot spacing must be uniform")
    dt = history.meta.get("dt")
    if dt is not None and steps[0] > 4.0 * float(dt) * (1 + 1e-12):
        raise ValueError(f"snapshot spacing {steps[0]} exceeds 4 dt = {4 * float(dt)}")
    return window


def _time_integral(window: Sequence[Snapshot], key: str) -> float:
    ts = np.array([s.time for s in window])
    ys = np.array([s.integrands[key] for s in window])
    return float(sp_integrate.simpson(ys, x=ts))


def morawetz_balance_residual(history: RunHistory, t1: float, t2: float, convention: str = "consistent") -> float:
    """
    |E_C(t2) - E_C(t1) - bulk - source| from stored snapshots.

    ``consistent`` balances E_C as defined: bulk = int t V I |grad_S u|^2,
    source = 1/2 int Q + int Re(u_t rho). ``displayed`` uses the literal
    bulk 2 t V I |grad_S u|^2 and source int Q, which matches the time
    derivative of int (e_C - e) rather than of E_C.
    """
    w = _snapshot_window(history, t1, t2)
    lhs = w[-1].E_C - w[0].E_C
    if convention == "consistent":
        rhs = _time_integral(w, "morawetz") + _time_integral(w, "morawetz_src")
    elif convention == "displayed":
        rhs = _time_integral(w, "morawetz_lit") + _time_integral(w, "morawetz_Q")
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return abs(lhs - rhs)


def egamma_identity_residual(history: RunHistory, t1: float, t2: float,
                             params: Optional[MultiplierParams] = None,
                             convention: str = "consistent") -> float:
    """
    |2 E_gamma(t2) - 2 E_gamma(t1) - int bulk - source|.

    The multiplier parameters are fixed when the snapshots are recorded;
    ``params`` is checked against them when given. ``consistent`` uses the
    source 2 int Re(gamma rho); ``displayed`` the literal int Re(gamma rho).
    """
    if params is not None:
        stored = history.meta.get("multiplier")
        if stored is not None and tuple(stored) != (params.epsilon, params.sigma):
            raise ValueError("multiplier parameters differ from those recorded in the run")
    w = _snapshot_window(history, t1, t2)
    lhs = 2.0 * (w[-1].E_gamma - w[0].E_gamma)
    key = "egamma_src2" if convention == "consistent" else "egamma_src1"
    rhs = _time_integral(w, "egamma") + _time_integral(w, key)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Local norms
# ---------------------------------------------------------------------------

def local_region_mask(rstar, t: float) -> np.ndarray:
    """{t/2 <= |r*| <= 3t/4}; empty at t = 0."""
    a = np.abs(np.asarray(rstar))
    if t <= 0:
        return np.zeros(a.shape, dtype=bool)
    return (a >= 0.5 * t) & (a <= 0.75 * t)


def _derivative_family(u: np.ndarray, grids: Grids, parity: int, order: int = 4):
    """Yield d_r^a d_theta^b (i m)^c u for a + b + c <= order."""
    ang = grids.angular
    rows = [u]
    for _ in range(order):
        rows.append(grids.dr1(rows[-1]))
    for a, ra in enumerate(rows):
        cur, par = ra, parity
        for b in range(order - a + 1):
            if b > 0:
                cur = ang.dtheta(cur, par)
                par = -par
            for c in range(order - a - b + 1):
                yield cur * (1j * grids.m) ** c


def slice_local_norms(field_: np.ndarray, grids: Grids, t: float, parity: Optional[int] = None) -> Dict[str, float]:
    """L2, Linf and H4 of a lattice field over the local region at time t."""
    mask = np.broadcast_to(local_region_mask(grids.rstar, t), grids.shape)
    if not mask.any():
        return {"l2": 0.0, "linf": 0.0, "h4": 0.0}
    parity = grids.angular.scalar_parity() if parity is None else parity
    u = np.broadcast_to(field_, grids.shape)
    l2sq = grids.integrate(np.where(mask, np.abs(u) ** 2, 0.0))
    h4sq = sum(grids.integrate(np.where(mask, np.abs(d) ** 2, 0.0)) for d in _derivative_family(u, grids, parity))
    return {"l2": math.sqrt(l2sq), "linf": float(np.max(np.abs(u[mask]))), "h4": math.sqrt(h4sq)}


def gauge_local_norms(scalar: ScalarState, grids: Grids, t: float) -> Dict[str, float]:
    """Local norms of the background potential, summed over components."""
    comps = [scalar.gauge.component(k) for k in range(4)]
    parts = [slice_local_norms(c, grids, t, parity=1 if k != 2 else -1) for k, c in enumerate(comps)]
    mask = np.broadcast_to(local_region_mask(grids.rstar, t), grids.shape)
    linf = float(np.max(np.sqrt(sum(np.abs(c) ** 2 for c in comps))[mask])) if mask.any() else 0.0
    return {
        "l2": math.sqrt(sum(p["l2"] ** 2 for p in parts)),
        "linf": linf,
        "h4": math.sqrt(sum(p["h4"] ** 2 for p in parts)),
    }


def local_norms(samples: Sequence[Tuple[float, ScalarState]], grids: Grids,
                window: Tuple[float, float]) -> Dict[str, float]:
    """
    Spacetime norms over [t1, t2] x {t/2 <= |r*| <= 3t/4} x S^2 with measure
    dt dr* d^2 omega for phi and A. L2 and H4 integrate the squared slice
    norms in time (Simpson); Linf is the maximum over the region.
    """
    t1, t2 = window
    chosen = [(t, s) for t, s in samples if t1 - 1e-12 <= t <= t2 + 1e-12]
    keys = ("l2_phi", "linf_phi", "h4_phi", "l2_A", "linf_A", "h4_A")
    if len(chosen) < 2:
        return {k: 0.0 for k in keys}
    ts = np.array([t for t, _ in chosen])
    phi_parts = [slice_local_norms(s.phi, grids, t) for t, s in chosen]
    A_parts = [gauge_local_norms(s, grids, t) for t, s in chosen]

    def tint(vals):
        return math.sqrt(max(float(sp_integrate.simpson(np.square(vals), x=ts)), 0.0))

    return {
        "l2_phi": tint([p["l2"] for p in phi_parts]),
        "linf_phi": max(p["linf"] for p in phi_parts),
        "h4_phi": tint([p["h4"] for p in phi_parts]),
        "l2_A": tint([p["l2"] for p in A_parts]),
        "linf_A": max(p["linf"] for p in A_parts),
        "h4_A": tint([p["h4"] for p in A_parts]),
    }


def spectral_energy(view: SliceView, power: int) -> float:
    """E of the field (-Delta_S)^power u on the per-mode path: lam^(2 power) E_u."""
    if view.ang_weight is None:
        raise ValueError("spectral_energy applies to per-mode views")
    lam = view.ang_weight
    scaled = SliceView(**{**view.__dict__,
                          "u": lam ** power * view.u, "u_t": lam ** power * view.u_t,
                          "u_r": lam ** power * view.u_r, "grad2": lam ** (2 * power) * view.grad2,
                          "u_rr": None if view.u_rr is None else lam ** power * view.u_rr,
                          "scalar_density": np.zeros_like(view.scalar_density)})
    return total_energy(scaled)


def laplacian_energy(view_u: np.ndarray, view_ut: np.ndarray, grids: Grids, t: float, power: int = 2) -> float:
    """E of Delta_S^power applied to (u, u_t) on the lattice."""
    u, ut = view_u, view_ut
    for _ in range(power):
        u = apply_laplacian_S(u, grids.m, grids.angular)
        ut = apply_laplacian_S(ut, grids.m, grids.angular)
    return total_energy(coupled_view(u, ut, None, grids, t))
