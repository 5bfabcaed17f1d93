"""Lower bounds on the interactive capacity of the binary erasure channel.

Two routes are combined.  The direct bound comes from the rate of the
two-bit relay simulation and is the better one at small erasure
probabilities.  For noisy channels, repeating every transmission rho times
turns BEC(epsilon) into an effective BEC(epsilon**rho); running the relay on
the reduced channel gives a bound that takes over past the crossover near
0.615, and a closed-form relaxation of it yields an epsilon-free ratio
floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Reduction target used for the headline ratio floor.
DEFAULT_EPS_PRIME = 0.073
# Guaranteed best_lb / shannon floor over the whole open interval (0, 1).
RATIO_FLOOR = 0.104


def shannon_capacity(epsilon: float) -> float:
    """One-way capacity of BEC(epsilon): 1 - epsilon."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon!r}")
    return 1.0 - epsilon


def direct_lb(epsilon: float) -> float:
    """Rate guarantee of the two-bit relay: (1-e)^2 / (2 (2 - (1-e)^2))."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon!r}")
    q = (1.0 - epsilon) ** 2
    return q / (2.0 * (2.0 - q))


def repetition_factor(epsilon: float, eps_prime: float) -> int:
    """Fewest per-bit repetitions rho with epsilon**rho <= eps_prime."""
    if not 0.0 < eps_prime < epsilon < 1.0:
        raise ValueError(
            f"need 0 < eps_prime < epsilon < 1, got eps_prime={eps_prime!r}, "
            f"epsilon={epsilon!r}"
        )
    rho = max(1, math.ceil(math.log(eps_prime) / math.log(epsilon)))
    while epsilon**rho > eps_prime:  # float-rounding safety for exact ratios
        rho += 1
    return rho


def repetition_lb_ratio(eps_prime: float, r: float) -> float:
    """Capacity-ratio floor r / (1 - ln eps_prime) implied by a rate-r scheme
    on the reduced channel, valid for every epsilon above eps_prime."""
    if not 0.0 < eps_prime < 1.0:
        raise ValueError(f"eps_prime must be in (0, 1), got {eps_prime!r}")
    if r < 0.0:
        raise ValueError(f"rate must be non-negative, got {r!r}")
    return r / (1.0 - math.log(eps_prime))


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bounds at one epsilon.

    The repetition fields are None when the reduction does not apply
    (epsilon <= eps_prime).  `repetition_lb` is the exact rho-based value;
    `repetition_lb_relaxed` the closed-form relaxation, never larger.
    """

    epsilon: float
    shannon: float
    direct_lb: float
    repetition_lb: float | None
    repetition_lb_relaxed: float | None
    best_lb: float
    ratio: float
    rho: int | None
    eps_prime: float | None


def best_lb(epsilon: float, eps_prime: float = DEFAULT_EPS_PRIME) -> BoundReport:
    """Best available lower bound at `epsilon` and its ratio to 1 - epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be strictly inside (0, 1), got {epsilon!r}")
    sh = shannon_capacity(epsilon)
    direct = direct_lb(epsilon)
    rep = relaxed = rho = used_prime = None
    if epsilon > eps_prime:
        base = direct_lb(eps_prime)
        rho = repetition_factor(epsilon, eps_prime)
        rep = base / rho
        relaxed = repetition_lb_ratio(eps_prime, base) * sh
        used_prime = eps_prime
    best = max(v for v in (direct, rep, relaxed) if v is not None)
    return BoundReport(
        epsilon=epsilon,
        shannon=sh,
        direct_lb=direct,
        repetition_lb=rep,
        repetition_lb_relaxed=relaxed,
        best_lb=best,
        ratio=best / sh,
        rho=rho,
        eps_prime=used_prime,
    )
