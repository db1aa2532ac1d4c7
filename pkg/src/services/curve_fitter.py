import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.errors import InsufficientDataError, MissingAnchorError, ShapeError
from src.models.fit_models import AlphaFit, AlphaSource, DecayFit, FitReport, FitSettings, ResidualMode
from src.models.game_models import GameParams
from src.models.sim_models import PruneCurve
from src.services.game_core import best_response_k
from src.services.line_search import golden_section

logger = logging.getLogger(__name__)

ANCHOR_TOL = 1e-12


def r_squared(observed: Sequence[float], predicted: Sequence[float]) -> float:
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if observed.shape != predicted.shape:
        raise ShapeError(f"observed and predicted differ in length ({observed.size} vs {predicted.size})")
    if observed.size < 2:
        raise ShapeError("r_squared needs at least two points")

    ss_res = float(np.sum((observed - predicted) ** 2))
    ss_tot = float(np.sum((observed - observed.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot

def fit_alpha(curve: PruneCurve, k_small_max: float = 0.05) -> AlphaFit:
    """
    OLS of accuracy against k on the small-budget range.

    Replicates are averaged per k first. Alpha is the negated slope, so a
    positive alpha means accuracy is lost to pruning.
    """
    ks, acc, _ = curve.averaged()
    keep = ks <= k_small_max + ANCHOR_TOL
    ks, acc = ks[keep], acc[keep]
    if ks.size < 2:
        raise InsufficientDataError(f"need at least 2 distinct budgets <= {k_small_max} to fit alpha, got {ks.size}")

    result = stats.linregress(ks, acc)
    stderr = float(result.stderr) if ks.size > 2 else 0.0
    return AlphaFit(alpha=-float(result.slope), intercept=float(result.intercept), stderr=stderr, n_points=int(ks.size))

def _anchor(ks: np.ndarray, wsr: np.ndarray) -> float:
    zero = np.flatnonzero(np.abs(ks) <= ANCHOR_TOL)
    if zero.size == 0:
        raise MissingAnchorError("curve has no k = 0 point to anchor WSR0")
    return float(wsr[zero[0]])

def _upper_offset(w0: float) -> float:
    return float(np.nextafter(w0, 0.0)) if w0 > 0 else 0.0

def _profile_offset(a: float, ks: np.ndarray, wsr: np.ndarray, w0: float) -> Tuple[float, float, bool]:
    """Closed-form least-squares eps_res for a fixed a; returns (eps_res, sse, clamped)."""
    g = np.exp(-a * ks)
    h = 1.0 - g
    base = w0 * g
    denom = float(np.dot(h, h))
    if denom == 0.0:
        eps, clamped = 0.0, False
    else:
        raw = float(np.dot(wsr - base, h)) / denom
        eps = min(max(raw, 0.0), _upper_offset(w0))
        clamped = eps != raw
    residual = wsr - (base + eps * h)
    return eps, float(np.dot(residual, residual)), clamped

def _pinned_sse(a: float, ks: np.ndarray, wsr: np.ndarray, w0: float) -> float:
    residual = wsr - w0 * np.exp(-a * ks)
    return float(np.dot(residual, residual))

def _search_decay(
    ks: np.ndarray,
    wsr: np.ndarray,
    w0: float,
    settings: FitSettings,
    with_offset: bool,
) -> Tuple[float, float, float, bool, bool]:
    """
    Grid plus golden-section search on a; returns (a, eps_res, sse, clamped, at_ceiling).

    The coarse grid spans [0, a_max] and refinement only searches the cells
    next to the best grid point, keeping that point if refinement does no better.
    """
    if with_offset:
        def sse(a: float) -> float:
            return _profile_offset(a, ks, wsr, w0)[1]
    else:
        def sse(a: float) -> float:
            return _pinned_sse(a, ks, wsr, w0)

    grid = np.linspace(0.0, settings.a_max, settings.grid_steps + 1)
    grid_sse = np.array([sse(float(a)) for a in grid])
    best = int(np.argmin(grid_sse))

    lo = float(grid[max(best - 1, 0)])
    hi = float(grid[min(best + 1, grid.size - 1)])
    tol = settings.rel_tol * max(hi, np.finfo(float).tiny)
    refined_a, refined_sse = golden_section(sse, lo, hi, tol)

    if refined_sse < grid_sse[best]:
        a = refined_a
    else:
        a = float(grid[best])
    at_ceiling = best == grid.size - 1 and a == float(grid[-1])

    if with_offset:
        eps, value, clamped = _profile_offset(a, ks, wsr, w0)
    else:
        eps, value, clamped = 0.0, _pinned_sse(a, ks, wsr, w0), False
    return a, eps, value, clamped, at_ceiling

def _prefers_offset(sse_pinned: float, sse_free: float, dof: int, level: float) -> bool:
    """Nested F-test: keep eps_res only when it significantly reduces the SSE."""
    if sse_free >= sse_pinned or dof <= 0:
        return False
    if sse_free == 0.0:
        return True
    statistic = (sse_pinned - sse_free) / (sse_free / dof)
    return float(stats.f.sf(statistic, 1, dof)) < level

def fit_wsr_decay(curve: PruneCurve, settings: Optional[FitSettings] = None) -> DecayFit:
    """
    Fits (a, eps_res) of W(k) = (W0 - eps_res) * exp(-a k) + eps_res to the
    seed-averaged curve, with W0 pinned to the measured k = 0 mean.

    A perfectly flat curve returns a = 0, eps_res = 0 and r2 = 1 by convention.
    A rate at the a_max ceiling is flagged in a_at_ceiling.
    """
    settings = settings or FitSettings()
    ks, _, wsr = curve.averaged()
    w0 = _anchor(ks, wsr)
    if ks.size < 3:
        raise InsufficientDataError(f"need at least 3 distinct budgets to fit the decay, got {ks.size}")

    if np.all(wsr == wsr[0]):
        logger.debug("Flat WSR curve; reporting a = 0")
        return DecayFit(a=0.0, eps_res=0.0, r2=1.0, wsr0_anchor=w0, sse=0.0, residual_term=False)

    mode = settings.residual_mode
    if mode == ResidualMode.ZERO:
        a, eps, sse, clamped, at_ceiling = _search_decay(ks, wsr, w0, settings, with_offset=False)
        with_offset = False
    else:
        a, eps, sse, clamped, at_ceiling = _search_decay(ks, wsr, w0, settings, with_offset=True)
        with_offset = True
        if mode == ResidualMode.AUTO:
            a0, _, sse0, _, ceiling0 = _search_decay(ks, wsr, w0, settings, with_offset=False)
            dof = ks.size - 1 - 2
            if not _prefers_offset(sse0, sse, dof, settings.residual_alpha):
                a, eps, sse, clamped, at_ceiling = a0, 0.0, sse0, False, ceiling0
                with_offset = False

    if clamped:
        logger.warning(f"Least-squares residual offset fell outside [0, W0) and was truncated to {eps:.6g}")
    if at_ceiling:
        logger.warning(f"Decay rate hit the search ceiling a_max={settings.a_max:g}; the curve may fall faster than the range allows")

    predicted = (w0 - eps) * np.exp(-a * ks) + eps
    return DecayFit(
        a=a,
        eps_res=eps,
        r2=r_squared(wsr, predicted),
        wsr0_anchor=w0,
        sse=sse,
        eps_res_clamped=clamped,
        a_at_ceiling=at_ceiling,
        residual_term=with_offset,
    )

def empirical_k_best(curve: PruneCurve, beta1: float, c: float) -> float:
    """Measured budget maximising acc - beta1 * wsr - c * k; ties go to the smaller k."""
    ks, acc, wsr = curve.averaged()
    if ks.size == 0:
        raise InsufficientDataError("curve has no points")

    best_k, best_value = float(ks[0]), -math.inf
    for k, a_k, w_k in zip(ks, acc, wsr):
        value = a_k - beta1 * w_k - c * k
        if value > best_value:
            best_k, best_value = float(k), value
    return best_k

def build_report(
    curve: PruneCurve,
    p: GameParams,
    settings: Optional[FitSettings] = None,
    name: str = "curve",
) -> FitReport:
    """
    One parameter-estimation row: alpha, (a, eps_res, r2), k*_theory and k_best.

    k*_theory substitutes the fitted decay rate and the decaying amplitude
    W0 - eps_res of the fitted model into the closed form, together with the
    configured beta1 and c. Alpha is the fitted one unless settings say otherwise.
    """
    settings = settings or FitSettings()
    alpha_fit = fit_alpha(curve, settings.k_small_max)
    decay = fit_wsr_decay(curve, settings)

    alpha_used = alpha_fit.alpha if settings.alpha_source == AlphaSource.FITTED else p.alpha
    amplitude = decay.wsr0_anchor - decay.eps_res
    k_star = best_response_k(p.beta1, amplitude, decay.a, alpha_used, p.c, p.k_max)
    k_best = empirical_k_best(curve, p.beta1, p.c)

    logger.debug(f"{name}: alpha={alpha_fit.alpha:.6g} a={decay.a:.6g} eps_res={decay.eps_res:.6g} r2={decay.r2:.6g} k*={k_star:.6g}")

    return FitReport(
        curve=name,
        alpha=alpha_fit.alpha,
        alpha_stderr=alpha_fit.stderr,
        a=decay.a,
        eps_res=decay.eps_res,
        r2=decay.r2,
        k_star_theory=k_star,
        k_best_empirical=k_best,
        wsr0_anchor=decay.wsr0_anchor,
        n_points=len(curve.points),
        metadata={
            "fit_model": "(W0 - eps_res) * exp(-a k) + eps_res, W0 anchored at k = 0",
            "residual_mode": settings.residual_mode.value,
            "residual_term": decay.residual_term,
            "eps_res_clamped": decay.eps_res_clamped,
            "a_at_ceiling": decay.a_at_ceiling,
            "alpha_source": settings.alpha_source.value,
            "alpha_used": alpha_used,
        },
    )
