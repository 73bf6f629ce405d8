"""
Executable checks of the energy identities and inequality chains.

Every unknown constant is fitted on a calibration split and tested on the
held-out split; each check returns an AuditReport whose JSON form is
{id, pass, constants, worst_ratio, samples, tolerance}.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sp_integrate

from .diagnostics import MultiplierParams, RunHistory

__all__ = [
    "AuditReport",
    "check_energy_conservation",
    "hardy_sides",
    "random_bumps",
    "check_hardy",
    "holder_sides",
    "check_holder_interpolation",
    "check_gronwall_envelope",
    "check_conformal_growth",
    "check_linf_growth",
    "check_el_vs_ec",
    "observed_order",
    "convergence_study",
]


@dataclass
class AuditReport:
    id: str
    passed: bool
    constants: Dict[str, object] = field(default_factory=dict)
    worst_ratio: float = 0.0
    samples: int = 0
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "pass": bool(self.passed),
            "constants": self.constants,
            "worst_ratio": float(self.worst_ratio),
            "samples": int(self.samples),
            "tolerance": float(self.tolerance),
        }


def _halves(n: int, fraction: float = 0.5) -> Tuple[slice, slice]:
    """Calibration and validation slices; the calibration part takes ``fraction`` of n."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("calibration fraction must lie in (0, 1)")
    k = min(max(int(round(n * fraction)), 1), n - 1) if n > 1 else n
    return slice(0, k), slice(k, n)


# ---------------------------------------------------------------------------
# Energy conservation
# ---------------------------------------------------------------------------

def check_energy_conservation(history: RunHistory, tol: float = 1e-8, abs_tol: float = 1e-14) -> AuditReport:
    """max_t |E(t) - E(0)| / E(0) <= tol; absolute tolerance when E(0) = 0."""
    E = history.column("E")
    if len(E) == 0:
        raise ValueError("empty history")
    dev = float(np.max(np.abs(E - E[0])))
    if E[0] > 0:
        drift = dev / E[0]
        limit = tol
    else:
        drift = dev
        limit = abs_tol
    return AuditReport("energy_conservation", drift <= limit,
                       {"E0": float(E[0]), "max_drift": drift, "relative": bool(E[0] > 0)},
                       drift / limit, len(E), limit)


# ---------------------------------------------------------------------------
# Hardy-type inequality
# ---------------------------------------------------------------------------

def hardy_sides(u, rstar, params: MultiplierParams = MultiplierParams(), support: float = 1.0) -> Tuple[float, float]:
    """
    LHS = int |u|^2 / q^(sigma+1),  RHS = int |u'|^2 / q^sigma + int_{|r*|<=support} |u|^2,

    q = 1 + (eps r*)^2, by Simpson quadrature on the sample points.
    """
    x = np.asarray(rstar, dtype=float)
    u = np.asarray(u)
    q = 1.0 + (params.epsilon * x) ** 2
    du = np.gradient(u, x, edge_order=2)
    lhs = sp_integrate.simpson(np.abs(u) ** 2 / q ** (params.sigma + 1.0), x=x)
    near = np.where(np.abs(x) <= support, np.abs(u) ** 2, 0.0)
    rhs = sp_integrate.simpson(np.abs(du) ** 2 / q ** params.sigma, x=x) + sp_integrate.simpson(near, x=x)
    return float(lhs), float(rhs)


def random_bumps(n: int, rstar, seed: int = 0, max_terms: int = 3) -> List[np.ndarray]:
    """Sums of 1..max_terms compact (1 - s^2)^4 bumps with random centre, width and sign."""
    rng = np.random.default_rng(seed)
    x = np.asarray(rstar, dtype=float)
    span = 0.4 * (x[-1] - x[0])
    out = []
    for _ in range(n):
        u = np.zeros_like(x)
        for _ in range(int(rng.integers(1, max_terms + 1))):
            c = rng.uniform(-span, span) * rng.uniform(0.0, 1.0) ** 2
            w = math.exp(rng.uniform(math.log(0.5), math.log(12.0)))
            s = (x - c) / w
            u += rng.normal() * np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)
        out.append(u)
    return out


def check_hardy(samples: Sequence[np.ndarray], rstar, params: MultiplierParams = MultiplierParams(),
                slack: float = 1.05, support: float = 1.0, threads: int = 1,
                split_seed: Optional[int] = None, calibration_fraction: float = 0.5) -> AuditReport:
    """
    Fit C = max LHS/RHS on the calibration part of the non-zero samples and
    require LHS <= slack * C * RHS on the rest. ``split_seed`` shuffles the
    samples before the split.
    """
    def sides(u):
        return hardy_sides(u, rstar, params, support)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            pairs = list(ex.map(sides, samples))
    else:
        pairs = [sides(u) for u in samples]
    pairs = [(l, r) for l, r in pairs if r > 0 or l > 0]
    if len(pairs) < 2:
        return AuditReport("hardy", True, {"C": 0.0, "skipped": len(samples) - len(pairs)}, 0.0, len(pairs), slack)
    if split_seed is not None:
        order = np.random.default_rng(split_seed).permutation(len(pairs))
        pairs = [pairs[i] for i in order]
    cal, val = _halves(len(pairs), calibration_fraction)
    ratios = np.array([l / r if r > 0 else math.inf for l, r in pairs])
    C = float(np.max(ratios[cal]))
    worst = float(np.max(ratios[val] / C)) if C > 0 else (0.0 if np.all(ratios[val] == 0) else math.inf)
    constants = {"C": C, "calibration": cal.stop, "validation": len(pairs) - cal.stop,
                 "sigma": params.sigma, "epsilon": params.epsilon,
                 "skipped": len(samples) - len(pairs), "violations": int(np.sum(ratios[val] / C > slack)) if C > 0 else 0}
    return AuditReport("hardy", worst <= slack, constants, worst, len(pairs), slack)


# ---------------------------------------------------------------------------
# Hoelder interpolation
# ---------------------------------------------------------------------------

def holder_sides(modes: Sequence[Tuple[int, float]]) -> Tuple[float, float]:
    """
    For u = sum of orthogonal harmonics with local energies a_l,
    E_l[grad u] = sum lam a_l and E_l[Delta^2 u] = sum lam^4 a_l, lam = l(l+1).

    Returns (LHS, RHS) = (E_l[grad u], E_l[Delta^2 u]^(1/4) E_l[u]^(3/4)).
    """
    lam = np.array([ell * (ell + 1.0) for ell, _ in modes])
    a = np.array([float(v) for _, v in modes])
    if np.any(a < 0):
        raise ValueError("local energies must be non-negative")
    lhs = float(np.sum(lam * a))
    rhs = float(np.sum(lam ** 4 * a)) ** 0.25 * float(np.sum(a)) ** 0.75
    return lhs, rhs


def check_holder_interpolation(samples: Sequence[Sequence[Tuple[int, float]]], rel_tol: float = 1e-8) -> AuditReport:
    """Pass iff LHS <= RHS (1 + rel_tol) for every sample."""
    worst = 0.0
    gaps = []
    for modes in samples:
        lhs, rhs = holder_sides(modes)
        if rhs > 0:
            worst = max(worst, lhs / rhs)
            gaps.append(1.0 - lhs / rhs)
        elif lhs > 0:
            worst = math.inf
    constants = {"min_relative_gap": float(min(gaps)) if gaps else 0.0,
                 "max_relative_gap": float(max(gaps)) if gaps else 0.0}
    return AuditReport("holder_interpolation", worst <= 1.0 + rel_tol, constants, worst, len(samples), rel_tol)


# ---------------------------------------------------------------------------
# Growth envelopes
# ---------------------------------------------------------------------------

def _cumtrapz(y, t):
    return np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))])


def check_gronwall_envelope(history: RunHistory, slack: float = 0.05,
                            calibration_fraction: float = 0.5) -> AuditReport:
    """
    Fit Cbar = sup over report pairs (i < j) of the first half of
    [E_C(t_j) - E_C(t_i)] / int_{t_i}^{t_j} (t^3 + t^2) E_C dt, then require
    E_C(t) <= (1 + slack) E_C(t_0) exp(Cbar [(t - t_0)^4 + (t - t_0)^3])
    on the second half.
    """
    t = history.times()
    EC = history.column("E_C")
    n = len(t)
    if n < 4:
        return AuditReport("gronwall_envelope", True, {"Cbar": 0.0, "vacuous": True}, 0.0, n, slack)
    cal, val = _halves(n, calibration_fraction)
    I = _cumtrapz((t ** 3 + t ** 2) * EC, t)
    Cbar = 0.0
    tc, ec, ic = t[cal], EC[cal], I[cal]
    for i in range(len(tc) - 1):
        dI = ic[i + 1:] - ic[i]
        dE = ec[i + 1:] - ec[i]
        ok = dI > 0
        if ok.any():
            Cbar = max(Cbar, float(np.max(dE[ok] / dI[ok])))
    dt = t[val] - t[0]
    with np.errstate(over="ignore"):
        env = EC[0] * np.exp(Cbar * (dt ** 4 + dt ** 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(env > 0, EC[val] / env, np.where(EC[val] > 0, np.inf, 0.0))
    worst = float(np.max(ratio))
    return AuditReport("gronwall_envelope", worst <= 1.0 + slack,
                       {"Cbar": Cbar, "calibration": cal.stop, "validation": n - cal.stop},
                       worst, n, slack)


def _initial_denominator(history: RunHistory) -> float:
    init = history.meta.get("initial")
    if not init:
        raise ValueError("history lacks initial energies E_C(0), E[lap^2 u](0), E(0)")
    return float(init["E_C"]) + float(init["E_lap2"]) + float(init["E"])


def check_conformal_growth(history: RunHistory, slope_max: float = 2.2,
                           denominator: Optional[float] = None) -> AuditReport:
    """
    R(t) = E_C(t) / ((1+t)^2 D), D = E_C(0) + E[lap^2 u](0) + E(0).
    Pass iff sup R is finite and the least-squares slope of log E_C against
    log(1+t) over the last half of the reports is at most slope_max.
    """
    D = _initial_denominator(history) if denominator is None else float(denominator)
    if not D > 0:
        raise ValueError("zero initial-energy denominator")
    t = history.times()
    EC = history.column("E_C")
    R = EC / ((1.0 + t) ** 2 * D)
    supR = float(np.max(R))
    _, tail = _halves(len(t))
    tt, ee = t[tail], EC[tail]
    keep = ee > 0
    if keep.sum() >= 2 and np.ptp(np.log1p(tt[keep])) > 0:
        slope = float(np.polyfit(np.log1p(tt[keep]), np.log(ee[keep]), 1)[0])
    else:
        slope = 0.0
    ok = math.isfinite(supR) and slope <= slope_max
    return AuditReport("conformal_growth", ok,
                       {"sup_R": supR, "tail_slope": slope, "denominator": D},
                       slope / slope_max, len(t), slope_max)


def check_linf_growth(history: RunHistory, factor: float = 1.5, t_min: float = 1.0,
                      calibration_fraction: float = 0.5) -> AuditReport:
    """
    ||phi||_Linf_loc/(1+t) and ||phi||_L2_loc/(1+t) on the second half of
    the reports (t >= t_min) stay below factor times their sup on the first half.
    The L2 part is skipped when the history carries no L2 column.
    """
    t = history.times()
    keep = t >= t_min
    t = t[keep]
    series = {"linf": history.column("linf_phi_loc")[keep]}
    if history.meta.get("has_l2", True):
        series["l2"] = history.column("l2_phi_loc")[keep]
    n = len(t)
    if n < 2:
        return AuditReport("linf_growth", True, {"vacuous": True}, 0.0, n, factor)
    first, second = _halves(n, calibration_fraction)
    worst = 0.0
    constants: Dict[str, object] = {}
    for name, vals in series.items():
        r = vals / (1.0 + t)
        bound = float(np.max(r[first]))
        late = float(np.max(r[second]))
        constants[f"{name}_sup_first_half"] = bound
        constants[f"{name}_sup_second_half"] = late
        if bound > 0:
            worst = max(worst, late / bound)
        elif late > 0:
            worst = math.inf
    if "l2" not in series:
        constants["l2"] = "skipped: not in history"
    return AuditReport("linf_growth", worst <= factor, constants, worst, n, factor)


def check_el_vs_ec(history: RunHistory, slack: float = 0.05, abs_tol: float = 1e-14,
                   t_min: float = 1.0, calibration_fraction: float = 0.5) -> AuditReport:
    """
    E_l(t) <= C (E_C(t)/t^2 + E(0)) with C fitted on the first half of the
    reports with t >= t_min and checked with slack on the second half.
    """
    t_all = history.times()
    E0 = float(history.column("E")[0]) if len(t_all) else 0.0
    keep = t_all >= t_min
    t = t_all[keep]
    El = history.column("E_l")[keep]
    EC = history.column("E_C")[keep]
    n = len(t)
    if n < 2:
        return AuditReport("el_vs_ec", True, {"C": 0.0, "vacuous": True}, 0.0, n, slack)
    den = EC / t ** 2 + E0
    if np.all(den <= 0):
        worst = float(np.max(El))
        return AuditReport("el_vs_ec", worst <= abs_tol, {"C": 0.0, "absolute": True}, worst, n, abs_tol)
    cal, val = _halves(n, calibration_fraction)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, El / den, np.where(El > abs_tol, np.inf, 0.0))
    C = float(np.max(ratio[cal]))
    worst = float(np.max(ratio[val] / C)) if C > 0 else (0.0 if np.all(ratio[val] == 0) else math.inf)
    return AuditReport("el_vs_ec", worst <= 1.0 + slack,
                       {"C": C, "E0": E0, "calibration": cal.stop, "validation": n - cal.stop},
                       worst, n, slack)


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

def observed_order(values: Sequence[float]) -> float:
    """p = log2(|Q1 - Q2| / |Q2 - Q3|) for three levels refined by 2."""
    q1, q2, q3 = values
    e1, e2 = abs(q1 - q2), abs(q2 - q3)
    if e2 == 0 or e1 == 0:
        return math.inf if e2 == 0 else -math.inf
    return math.log2(e1 / e2)


def convergence_study(measure: Callable[[int], float], resolutions: Sequence[int], order: float = 4.0,
                      tol: float = 0.5, threads: int = 1, diagnostic: str = "diagnostic") -> AuditReport:
    """
    Three-level Richardson order estimate of measure(n) over resolutions in
    2:1 ratio. Pass iff |p - order| <= tol; non-monotone differences are
    reported as inconclusive (and fail).

    Raises
    ------
    ValueError
        Fewer than three resolutions, repeated resolutions or a ratio other than 2.
    """
    res = [int(n) for n in resolutions]
    if len(res) < 3:
        raise ValueError("need at least three resolutions")
    if len(set(res)) != len(res):
        raise ValueError("resolutions must be distinct")
    res = sorted(res)
    for a, b in zip(res, res[1:]):
        # n counts nodes; allow both n and n - 1 intervals doubling
        if not (b == 2 * a or b - 1 == 2 * (a - 1)):
            raise ValueError(f"resolutions must be in 2:1 ratio, got {a} and {b}")
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            values = list(ex.map(measure, res))
    else:
        values = [measure(n) for n in res]
    values = [float(v) for v in values]
    diffs = [abs(a - b) for a, b in zip(values, values[1:])]
    orders = [observed_order(values[i:i + 3]) for i in range(len(values) - 2)]
    monotone = all(d1 > d2 for d1, d2 in zip(diffs, diffs[1:]))
    p = orders[-1]
    constants = {"diagnostic": diagnostic, "resolutions": res, "values": values,
                 "differences": diffs, "orders": orders, "order": p,
                 "inconclusive": not monotone}
    passed = monotone and abs(p - order) <= tol
    return AuditReport("convergence", passed, constants, abs(p - order) / tol if math.isfinite(p) else math.inf,
                       len(res), tol)
