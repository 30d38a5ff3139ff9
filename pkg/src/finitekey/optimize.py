"""Constrained maximisation of the secure key length.

Deterministic coarse grid seeding followed by Nelder-Mead refinement from
the best seed, with box constraints enforced by clipping inside the
objective. The objective is the key length itself (key length and key rate
share their argmax at fixed block size). All evaluations go through the
fused kernels of the active backend.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.optimize import minimize

from finitekey._backend import kernels as _default_kernels
from finitekey.channel import SystemParams, channel_transmissivity
from finitekey.errors import NoPositiveKeyError, NotConvergedError
from finitekey.finite_stats import SecurityParams
from finitekey.photon_source import SpsSource
from finitekey.results import KeyResult, abort_from_code

PX_LO, PX_HI = 0.5, 1.0 - 1e-4
ETA_LO, ETA_HI = 1e-9, 1.0
ETA_GRID_LO = 1e-3
MU1_LO, MU1_HI = 0.05, 1.0
MU1_GRID_LO = 0.07
R_LO, R_HI = 0.02, 0.95
R_GRID_HI = 0.9
PMU_LO, PMU_HI = 0.05, 0.95

_VARIANT_CODES = {"plain": 0, "exact-vacuum": 1, "bounded-vacuum": 2}


@dataclass(frozen=True)
class GridSpec:
    """Seed-grid densities and refinement tolerances."""

    px_points: int = 12
    eta_points: int = 12
    mu_points: int = 12
    pmu_seeds: tuple = ((0.5, 0.4), (0.5, 0.6), (0.5, 0.8),
                        (0.7, 0.4), (0.7, 0.6), (0.7, 0.8),
                        (0.9, 0.4), (0.9, 0.6), (0.9, 0.8))
    refine: bool = True
    xatol: float = 1e-6
    fatol: float = 1e-3
    maxiter_sps: int = 600
    maxiter_wcp: int = 2000


@dataclass(frozen=True)
class OptimizationResult:
    best_params: dict
    best_key: KeyResult
    evaluations: int
    converged: bool
    seed_skl: float  # best value seen on the seed grid alone


@dataclass(frozen=True)
class MaxLossResult:
    loss_db: float
    at_loss: OptimizationResult
    probes: int
    monotone: bool = True


@dataclass(frozen=True)
class AsymptoticResult:
    result: OptimizationResult
    rel_change: float
    n_sent: float


def _linspace(lo: float, hi: float, n: int) -> list:
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _logspace(lo: float, hi: float, n: int) -> list:
    if n == 1:
        return [hi]
    ratio = hi / lo
    return [lo * ratio ** (i / (n - 1)) for i in range(n)]


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else (x if x < hi else hi)


def optimize_sps(system: SystemParams, source: SpsSource, loss_db: float,
                 n_sent: float, security: SecurityParams | None = None,
                 variant: str = "plain", grid: GridSpec | None = None,
                 kernels=None) -> OptimizationResult:
    """Maximise the non-decoy key length over (p_x, eta_tr)."""
    k = kernels or _default_kernels
    sec = security or SecurityParams()
    grid = grid or GridSpec()
    var_code = _VARIANT_CODES[variant]
    eta_sys = channel_transmissivity(loss_db) * system.eta_det
    state = {"evals": 0}

    def objective(p_x: float, eta_tr: float) -> float:
        state["evals"] += 1
        skl, _, _ = k.sps_key_length(n_sent, p_x, eta_tr, source.mean, source.g2,
                                     eta_sys, system.p_dc, system.p_mis,
                                     sec.eps_sec, sec.eps_cor, sec.phi_threshold,
                                     var_code)
        return skl

    best_skl, best_u = -1.0, (PX_LO, 1.0)
    for px in _linspace(PX_LO, PX_HI, grid.px_points):
        for eta in _logspace(ETA_GRID_LO, ETA_HI, grid.eta_points):
            v = objective(px, eta)
            if v > best_skl:
                best_skl, best_u = v, (px, eta)
    seed_skl = best_skl

    converged = True
    if grid.refine:
        def neg(u):
            return -objective(_clip(u[0], PX_LO, PX_HI), _clip(u[1], ETA_LO, ETA_HI))

        res = minimize(neg, x0=list(best_u), method="Nelder-Mead",
                       options={"xatol": grid.xatol, "fatol": grid.fatol,
                                "maxiter": grid.maxiter_sps,
                                "maxfev": 2 * grid.maxiter_sps})
        cand = (_clip(float(res.x[0]), PX_LO, PX_HI),
                _clip(float(res.x[1]), ETA_LO, ETA_HI))
        cand_skl = objective(*cand)
        converged = bool(res.success)
        if cand_skl > best_skl:
            best_skl, best_u = cand_skl, cand

    skl, code, phib = k.sps_key_length(n_sent, best_u[0], best_u[1], source.mean,
                                       source.g2, eta_sys, system.p_dc, system.p_mis,
                                       sec.eps_sec, sec.eps_cor, sec.phi_threshold,
                                       var_code)
    key = KeyResult(skl=skl, skr=skl / n_sent, abort_reason=abort_from_code(code),
                    phi_bar=phib)
    return OptimizationResult(best_params={"p_x": best_u[0], "eta_tr": best_u[1]},
                              best_key=key, evaluations=state["evals"],
                              converged=converged, seed_skl=seed_skl)


def optimize_wcp(system: SystemParams, loss_db: float, n_sent: float,
                 security: SecurityParams | None = None,
                 grid: GridSpec | None = None, kernels=None) -> OptimizationResult:
    """Maximise the 2-decoy key length over (p_x, mu1, mu2, p_mu1, p_mu2).

    Internally mu2 is parametrised as a fraction of mu1 and the intensity
    probabilities by stick-breaking, so every box point is a valid
    configuration (mu1 > mu2 > 0, probabilities in the open simplex).
    """
    k = kernels or _default_kernels
    sec = security or SecurityParams()
    grid = grid or GridSpec()
    eta_sys = channel_transmissivity(loss_db) * system.eta_det
    state = {"evals": 0}

    def objective(px: float, mu1: float, r: float, a: float, b: float) -> float:
        state["evals"] += 1
        mu2 = r * mu1
        pmu2 = (1.0 - a) * b
        skl, _, _ = k.wcp_key_length(n_sent, px, mu1, mu2, 0.0, a, pmu2,
                                     eta_sys, system.p_dc, system.p_mis,
                                     sec.eps_sec, sec.eps_cor, sec.phi_threshold)
        return skl

    best_skl, best_u = -1.0, (0.7, 0.5, 0.2, 0.7, 0.6)
    for px in _linspace(PX_LO, PX_HI, grid.px_points):
        for mu1 in _logspace(MU1_GRID_LO, MU1_HI, grid.mu_points):
            for r in _logspace(R_LO, R_GRID_HI, grid.mu_points):
                for a, b in grid.pmu_seeds:
                    v = objective(px, mu1, r, a, b)
                    if v > best_skl:
                        best_skl, best_u = v, (px, mu1, r, a, b)
    seed_skl = best_skl

    converged = True
    if grid.refine:
        def neg(u):
            return -objective(_clip(u[0], PX_LO, PX_HI),
                              _clip(u[1], MU1_LO, MU1_HI),
                              _clip(u[2], R_LO, R_HI),
                              _clip(u[3], PMU_LO, PMU_HI),
                              _clip(u[4], PMU_LO, PMU_HI))

        res = minimize(neg, x0=list(best_u), method="Nelder-Mead",
                       options={"xatol": grid.xatol, "fatol": grid.fatol,
                                "maxiter": grid.maxiter_wcp,
                                "maxfev": 2 * grid.maxiter_wcp})
        cand = (_clip(float(res.x[0]), PX_LO, PX_HI),
                _clip(float(res.x[1]), MU1_LO, MU1_HI),
                _clip(float(res.x[2]), R_LO, R_HI),
                _clip(float(res.x[3]), PMU_LO, PMU_HI),
                _clip(float(res.x[4]), PMU_LO, PMU_HI))
        cand_skl = objective(*cand)
        converged = bool(res.success)
        if cand_skl > best_skl:
            best_skl, best_u = cand_skl, cand

    px, mu1, r, a, b = best_u
    mu2 = r * mu1
    pmu2 = (1.0 - a) * b
    skl, code, phib = k.wcp_key_length(n_sent, px, mu1, mu2, 0.0, a, pmu2,
                                       eta_sys, system.p_dc, system.p_mis,
                                       sec.eps_sec, sec.eps_cor, sec.phi_threshold)
    key = KeyResult(skl=skl, skr=skl / n_sent, abort_reason=abort_from_code(code),
                    phi_bar=phib)
    params = {"p_x": px, "mu1": mu1, "mu2": mu2, "p_mu1": a, "p_mu2": pmu2}
    return OptimizationResult(best_params=params, best_key=key,
                              evaluations=state["evals"], converged=converged,
                              seed_skl=seed_skl)


def _optimizer_for(system: SystemParams, protocol: str, n_sent: float,
                   source: SpsSource | None, security, variant: str,
                   grid, kernels):
    if protocol == "sps":
        if source is None:
            raise ValueError("an SpsSource is required for the sps protocol")
        return lambda loss: optimize_sps(system, source, loss, n_sent, security,
                                         variant, grid, kernels)
    if protocol == "wcp":
        return lambda loss: optimize_wcp(system, loss, n_sent, security, grid, kernels)
    raise ValueError(f"unknown protocol: {protocol!r}")


def max_tolerable_loss(system: SystemParams, protocol: str, n_sent: float,
                       tol_db: float = 0.05, source: SpsSource | None = None,
                       security: SecurityParams | None = None,
                       variant: str = "plain", grid: GridSpec | None = None,
                       lo_db: float = 0.0, hi_db: float = 60.0,
                       kernels=None) -> MaxLossResult:
    """Largest channel loss with a positive optimised key, to tol_db.

    Bisection assumes the optimised key is monotone in loss; two safety
    probes above the found cutoff detect a violation and re-bracket the
    search instead of silently returning the first zero crossing.
    """
    if tol_db <= 0.0:
        raise ValueError(f"loss tolerance must be positive: {tol_db!r}")
    opt = _optimizer_for(system, protocol, n_sent, source, security, variant,
                         grid, kernels)
    probes = 0

    def positive(loss):
        nonlocal probes
        probes += 1
        r = opt(loss)
        return (r.best_key.skl > 0.0), r

    ok_lo, r_lo = positive(lo_db)
    if not ok_lo:
        raise NoPositiveKeyError(
            f"no positive key at {lo_db} dB for protocol {protocol!r}")
    ok_hi, r_hi = positive(hi_db)
    if ok_hi:
        return MaxLossResult(loss_db=hi_db, at_loss=r_hi, probes=probes)

    monotone = True
    lo, hi, best = lo_db, hi_db, r_lo
    for _ in range(3):  # re-bracket rounds if the tail is not monotone
        while hi - lo > tol_db:
            mid = 0.5 * (lo + hi)
            ok, r = positive(mid)
            if ok:
                lo, best = mid, r
            else:
                hi = mid
        rebracketed = False
        for step in (tol_db, 5.0 * tol_db):
            probe = hi + step
            if probe >= hi_db:
                continue
            ok, r = positive(probe)
            if ok:
                monotone = False
                lo, best = probe, r
                hi = hi_db
                rebracketed = True
                break
        if not rebracketed:
            break
    return MaxLossResult(loss_db=lo, at_loss=best, probes=probes, monotone=monotone)


def asymptotic_key_rate(system: SystemParams, protocol: str, loss_db: float,
                        source: SpsSource | None = None,
                        security: SecurityParams | None = None,
                        variant: str = "plain", grid: GridSpec | None = None,
                        n_large: float = 1e15, n_check: float = 1e14,
                        rel_tol: float = 0.005, kernels=None) -> AsymptoticResult:
    """Optimised key rate at a block size large enough to be loss-limited.

    Evaluates at ``n_large`` and verifies the rate moved by less than
    ``rel_tol`` relative to ``n_check``; raises NotConvergedError otherwise.
    """
    def at(n_sent):
        o = _optimizer_for(system, protocol, n_sent, source, security, variant,
                           grid, kernels)
        return o(loss_db)

    r_check = at(n_check)
    r_large = at(n_large)
    skr_c = r_check.best_key.skr
    skr_l = r_large.best_key.skr
    if skr_c == 0.0 and skr_l == 0.0:
        return AsymptoticResult(result=r_large, rel_change=0.0, n_sent=n_large)
    rel = abs(skr_l - skr_c) / max(skr_c, skr_l)
    if rel >= rel_tol:
        raise NotConvergedError(
            f"key rate still moving between {n_check:g} and {n_large:g} "
            f"sent signals (relative change {rel:.3%})")
    return AsymptoticResult(result=r_large, rel_change=rel, n_sent=n_large)
