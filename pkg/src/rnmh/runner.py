"""
Config-driven orchestration shared by the service handlers and the CLI.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import audit
from .angular import AngularGrid
from .config import RunConfig, validate
from .diagnostics import MultiplierParams, RunHistory
from .evolution import (
    CoupledState,
    ModeState,
    coupled_initial_data,
    evolve_coupled,
    evolve_mode,
    mode_initial_data,
)
from .fields import Grids
from .geometry import RadialGrid, RNBackground

__all__ = [
    "background",
    "radial_grid",
    "lattice",
    "multiplier",
    "run_mode",
    "run_coupled",
    "coulomb_check",
    "holder_samples",
    "audit_history",
    "converge",
    "CHECKS",
    "DIAGNOSTICS",
]

CHECKS = ("energy_conservation", "conformal_growth", "gronwall_envelope", "el_vs_ec", "linf_growth",
          "hardy", "holder_interpolation")
DIAGNOSTICS = ("drift", "probe", "energy")
COULOMB_TOL = 1e-12
PROBE_RSTAR = 10.0


def background(cfg: RunConfig) -> RNBackground:
    return RNBackground(cfg.mass, cfg.charge)


def radial_grid(cfg: RunConfig) -> RadialGrid:
    return RadialGrid(background(cfg), cfg.rstar_min, cfg.rstar_max, cfg.n_points)


def lattice(cfg: RunConfig) -> Grids:
    return Grids(radial_grid(cfg), AngularGrid(cfg.n_theta, cfg.m))


def multiplier(cfg: RunConfig) -> MultiplierParams:
    return MultiplierParams(cfg.epsilon, cfg.sigma)


def _stepping(cfg: RunConfig) -> dict:
    return dict(params=multiplier(cfg), cfl=cfg.cfl, report_cadence=cfg.report_cadence,
                snapshot_cadence=cfg.snapshot_cadence, boundary=cfg.boundary)


def run_mode(cfg: RunConfig, *, snapshots: bool = True, probe: Optional[float] = None) -> Tuple[RunHistory, ModeState]:
    """Per-mode radial run of the configured (ell, m) Gaussian or bump."""
    grid = radial_grid(cfg)
    state = mode_initial_data(grid, cfg.ell, cfg.m, cfg.shape, cfg.center, cfg.width,
                              cfg.amplitude, cfg.direction)
    hist, final = evolve_mode(state, grid, cfg.t_final, snapshots=snapshots, probe=probe, **_stepping(cfg))
    hist.meta["config"] = cfg.to_dict()
    return hist, final


def _coupled_state(cfg: RunConfig, grids: Grids) -> CoupledState:
    return coupled_initial_data(
        grids, cfg.ell, shape=cfg.shape, center=cfg.center, width=cfg.width, amplitude=cfg.amplitude,
        constraint_solved=cfg.constraint_solved, q_F=cfg.q_F, q_A=cfg.q_A,
        scalar_amplitude=cfg.scalar_amplitude, scalar_center=cfg.scalar_center,
        scalar_width=cfg.scalar_width, direction=cfg.direction, spin_system=cfg.spin_system,
    )


def run_coupled(cfg: RunConfig, *, snapshots: bool = False, on_report=None) -> Tuple[RunHistory, CoupledState]:
    """(r*, theta) run of the spin system coupled to the charged scalar."""
    grids = lattice(cfg)
    state = _coupled_state(cfg, grids)
    hist, final = evolve_coupled(state, grids, cfg.t_final, spin_system=cfg.spin_system, q_F=cfg.q_F,
                                 snapshots=snapshots, on_report=on_report, **_stepping(cfg))
    hist.meta["config"] = cfg.to_dict()
    return hist, final


def coulomb_check(cfg: RunConfig, tol: float = COULOMB_TOL) -> Tuple[Dict[str, object], RunHistory]:
    """
    Evolve the exact Coulomb state Phi_0 = q_F, Phi_+-1 = 0, phi = 0 and
    record max |Phi_0 - q_F| and max |Phi_+-1| over all reports. A zero q_F
    in the config is replaced by 1 so the check is not vacuous.
    """
    q_F = cfg.q_F if cfg.q_F != 0 else 1.0
    cfg = validate(replace(cfg, q_F=q_F, amplitude=0.0, scalar_amplitude=0.0))
    worst = {"phi0": 0.0, "spin": 0.0}

    def track(s: CoupledState):
        worst["phi0"] = max(worst["phi0"], float(np.max(np.abs(s.spin.zero - q_F))))
        worst["spin"] = max(worst["spin"], float(np.max(np.abs(s.spin.plus1))), float(np.max(np.abs(s.spin.minus1))))

    hist, _ = run_coupled(cfg, on_report=track)
    result = {"q_F": q_F, "t_final": cfg.t_final, "max_drift": worst["phi0"], "max_spin": worst["spin"],
              "tolerance": tol, "pass": worst["phi0"] <= tol}
    return result, hist


def holder_samples(cfg: RunConfig, n_pairs: int = 50, seed: int = 0,
                   ells: Sequence[int] = (1, 3)) -> Tuple[List, List]:
    """
    Local energies a_l of evolved single modes at t_final, and random
    two-mode superpositions with weights w_l^2 a_l.

    Returns (single-mode samples, two-mode samples) in the form taken by
    :func:`audit.check_holder_interpolation`.
    """
    a = {}
    for ell in ells:
        hist, _ = run_mode(replace(cfg, ell=ell, m=0), snapshots=False)
        a[ell] = hist.reports[-1].E_l
    rng = np.random.default_rng(seed)
    singles = [[(ell, a[ell])] for ell in ells]
    pairs = []
    for _ in range(n_pairs):
        w = rng.uniform(0.1, 2.0, size=len(ells))
        pairs.append([(ell, float(wi * wi * a[ell])) for ell, wi in zip(ells, w)])
    return singles, pairs


def _auto_checks(history: RunHistory) -> List[str]:
    coupled = history.meta.get("kind") == "coupled" or bool(np.any(history.column("linf_phi_loc")))
    names = ["gronwall_envelope", "el_vs_ec"]
    names = (["linf_growth"] + names) if coupled else (["energy_conservation"] + names)
    if history.meta.get("initial"):
        names.append("conformal_growth")
    return names


def audit_history(history: RunHistory, checks: Sequence[str] = ("auto",), *, cfg: Optional[RunConfig] = None,
                  drift_tol: float = 1e-8, threads: int = 1, seed: int = 0) -> List[audit.AuditReport]:
    """
    Run the named checks (``auto`` picks the mode or coupled set from the
    history). ``hardy`` and ``holder_interpolation`` do not read the history;
    they sample on the grid of ``cfg``.
    """
    names: List[str] = []
    for c in checks:
        names.extend(_auto_checks(history) if c == "auto" else [c])
    cfg = cfg or RunConfig()
    out = []
    for name in names:
        if name == "energy_conservation":
            out.append(audit.check_energy_conservation(history, drift_tol))
        elif name == "conformal_growth":
            out.append(audit.check_conformal_growth(history))
        elif name == "gronwall_envelope":
            out.append(audit.check_gronwall_envelope(history))
        elif name == "el_vs_ec":
            out.append(audit.check_el_vs_ec(history))
        elif name == "linf_growth":
            out.append(audit.check_linf_growth(history))
        elif name == "hardy":
            x = radial_grid(cfg).rstar
            out.append(audit.check_hardy(audit.random_bumps(100, x, seed), x, multiplier(cfg), threads=threads))
        elif name == "holder_interpolation":
            singles, pairs = holder_samples(cfg, seed=seed)
            out.append(audit.check_holder_interpolation(singles + pairs))
        else:
            raise ValueError(f"unknown check {name!r}; choose from auto, {', '.join(CHECKS)}")
    return out


def _measure(cfg: RunConfig, diagnostic: str, n: int) -> float:
    hist, _ = run_mode(replace(cfg, n_points=n), snapshots=False,
                       probe=PROBE_RSTAR if diagnostic == "probe" else None)
    E = hist.column("E")
    if diagnostic == "drift":
        return float(abs(E[-1] - E[0]) / E[0])
    if diagnostic == "energy":
        return float(E[-1])
    return float(hist.meta["probe"][-1].real)


def converge(cfg: RunConfig, resolutions: Sequence[int], diagnostic: str = "drift",
             threads: int = 1) -> audit.AuditReport:
    """Three-level order estimate of a mode-run diagnostic over n_points."""
    if diagnostic not in DIAGNOSTICS:
        raise ValueError(f"diagnostic must be one of {DIAGNOSTICS}")
    for n in resolutions:
        validate(replace(cfg, n_points=int(n)))
    return audit.convergence_study(lambda n: _measure(cfg, diagnostic, n), resolutions,
                                   threads=threads, diagnostic=diagnostic)


def run_parallel(fn, items, threads: int = 1):
    """Map fn over items, in a thread pool when threads > 1; order preserved."""
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]
