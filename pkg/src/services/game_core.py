import logging
import math
from typing import Iterable, Optional, Tuple

from src.errors import InvalidParametersError
from src.models.game_models import (
    AttackerStrategy,
    BestResponseOutcome,
    DefenderStrategy,
    EtaModelParams,
    GameParams,
    ResModelParams,
)

logger = logging.getLogger(__name__)


def _clamp(value: float, low: float, high: float) -> float:
    return min(max(value, low), high)

def eta_effectiveness(d: DefenderStrategy, L: int, epsilon: float, m: EtaModelParams) -> float:
    """
    Per-unit pruning effectiveness.

    Each factor carries one monotonicity: saturating growth in L, exponential
    attenuation in delta and rho, and a linear exploration penalty. The product
    is clamped to [eta_min, 1].
    """
    raw = (
        m.eta0
        * (1.0 - math.exp(-L / m.L_half))
        * math.exp(-d.delta / m.delta_scale)
        * math.exp(-d.rho / m.rho_scale)
        * (1.0 - m.eps_penalty * epsilon)
    )
    return _clamp(raw, m.eta_min, 1.0)

def residual_rate(delta: float, r: ResModelParams) -> float:
    """Irreducible residual watermark rate left by imperfect trigger inversion."""
    return r.eps_max * (1.0 - math.exp(-delta / r.delta_res))

def effective_residual(d: DefenderStrategy, p: GameParams) -> float:
    if p.eps_res_override is not None:
        return p.eps_res_override
    return residual_rate(d.delta, p.res_model)

def effective_decay_rate(d: DefenderStrategy, eta: float) -> float:
    return (d.gamma / d.rho) * eta

def wsr_post_bound(wsr0: float, a: float, k: float, eps_res: float) -> float:
    """Exponential upper bound on the post-pruning watermark success rate."""
    return wsr0 * math.exp(-a * k) + eps_res

def acc_post_linear(acc0: float, alpha: float, k: float) -> float:
    return _clamp(acc0 - alpha * k, 0.0, 1.0)

def attacker_cost(k: float, c: float) -> float:
    return c * k

def defender_cost(d: DefenderStrategy, p: GameParams) -> float:
    c_rho, c_delta, c_gamma = p.defender_cost_coeffs
    return c_rho * d.rho + c_delta * d.delta + c_gamma * d.gamma

def defender_utility(d: DefenderStrategy, acc_post: float, wsr_post: float, p: GameParams) -> float:
    return p.beta1 * wsr_post + p.beta2 * acc_post - defender_cost(d, p)

def attacker_utility(acc_post: float, wsr_post: float, k: float, p: GameParams) -> float:
    return acc_post - p.beta1 * wsr_post - attacker_cost(k, p.c)

def attacker_objective(k: float, beta1: float, wsr0: float, a: float, alpha: float, c: float) -> float:
    return beta1 * wsr0 * (1.0 - math.exp(-a * k)) - (alpha + c) * k

def objective_derivatives(k: float, beta1: float, wsr0: float, a: float, alpha: float, c: float) -> Tuple[float, float]:
    """Returns (f'(k), f''(k))."""
    decay = beta1 * wsr0 * a * math.exp(-a * k)
    return decay - (alpha + c), -a * decay

def is_degenerate(beta1: float, wsr0: float, a: float, alpha: float, c: float) -> bool:
    """True when f'(0) <= 0, i.e. no pruning budget beats doing nothing."""
    return beta1 * wsr0 * a <= alpha + c

def best_response_k(beta1: float, wsr0: float, a: float, alpha: float, c: float, k_max: float) -> float:
    """
    Closed-form optimal pruning budget on [0, k_max].

    The attacker objective beta1 * wsr0 * (1 - exp(-a k)) - (alpha + c) k is
    strictly concave for a > 0, so the first-order condition gives the unique
    maximiser whenever pruning pays at k = 0.

    Raises:
        InvalidParametersError: when alpha + c <= 0 or a < 0; the logarithm in
            the first-order condition needs a positive marginal cost.
    """
    marginal_cost = alpha + c
    if marginal_cost <= 0:
        raise InvalidParametersError(
            f"alpha + c must be positive for the closed-form budget (alpha={alpha}, c={c})"
        )
    if a < 0:
        raise InvalidParametersError(f"decay rate a must be non-negative, got {a}")
    if not 0 < k_max <= 1:
        raise InvalidParametersError(f"k_max must lie in (0, 1], got {k_max}")

    if is_degenerate(beta1, wsr0, a, alpha, c):
        return 0.0

    k_star = math.log(beta1 * wsr0 * a / marginal_cost) / a
    return _clamp(k_star, 0.0, k_max)

def evaluate_attack(
    d: DefenderStrategy,
    p: GameParams,
    L: int,
    epsilon: float,
) -> BestResponseOutcome:
    """Best pruning budget for a fixed (L, epsilon) and the outcome it induces."""
    eta = eta_effectiveness(d, L, epsilon, p.eta_model)
    a = effective_decay_rate(d, eta)
    eps_res = effective_residual(d, p)
    k_star = best_response_k(p.beta1, p.wsr0, a, p.alpha, p.c, p.k_max)

    acc_post = acc_post_linear(p.acc0, p.alpha, k_star)
    wsr_post = wsr_post_bound(p.wsr0, a, k_star, eps_res)

    return BestResponseOutcome(
        strategy=AttackerStrategy(k=k_star, L=L, epsilon=epsilon),
        eta=eta,
        eps_res=eps_res,
        a=a,
        k_star=k_star,
        objective=attacker_objective(k_star, p.beta1, p.wsr0, a, p.alpha, p.c),
        attacker_utility=attacker_utility(acc_post, wsr_post, k_star, p),
        defender_utility=defender_utility(d, acc_post, wsr_post, p),
        acc_post=acc_post,
        wsr_post=wsr_post,
        degenerate=is_degenerate(p.beta1, p.wsr0, a, p.alpha, p.c),
    )

def solve_best_response(
    d0: DefenderStrategy,
    p: GameParams,
    L_grid: Iterable[int],
    eps_grid: Iterable[float],
) -> BestResponseOutcome:
    """
    Searches the (L, epsilon) grid for the attacker's best response.

    Cells are visited in ascending (L, epsilon) order and only a strictly
    larger utility replaces the incumbent, so ties resolve to the smallest L,
    then the smallest epsilon.
    """
    L_values = sorted(set(L_grid))
    eps_values = sorted(set(eps_grid))
    if not L_values or not eps_values:
        raise InvalidParametersError("L_grid and eps_grid must be non-empty")

    best: Optional[BestResponseOutcome] = None
    for L in L_values:
        for epsilon in eps_values:
            outcome = evaluate_attack(d0, p, L, epsilon)
            logger.debug(f"L={L} epsilon={epsilon}: k*={outcome.k_star:.6g} U_A={outcome.attacker_utility:.6g}")
            if best is None or outcome.attacker_utility > best.attacker_utility:
                best = outcome

    return best

def best_response(
    d0: DefenderStrategy,
    p: GameParams,
    L_grid: Iterable[int],
    eps_grid: Iterable[float],
) -> AttackerStrategy:
    return solve_best_response(d0, p, L_grid, eps_grid).strategy
