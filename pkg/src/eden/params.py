"""Security analysis of (tau, theta) under the normal approximation.

With honest online stake ``S_h = h*alpha*K`` and adversarial online stake
``S_a = (1-h)*alpha*K``, the selected-token counts are ``X_h ~ B(S_h, p)``
and ``X_a ~ B(S_a, p)`` with ``p = tau/K``.  A message must gather
``theta*tau`` votes, so

* honest envoys alone reach it w.h.p. while
  ``theta < h*alpha - Z*sqrt(h*alpha/tau)``;
* adversaries alone fall short w.h.p. while
  ``theta > (1-h)*alpha + Z*sqrt((1-h)*alpha/tau)``;
* the supermajority statistic ``Y = X_h - 2*X_a`` stays positive w.h.p.
  while ``tau > 40.5*(4-3h) / ((3h-2)**2 * alpha)``,

where ``Z = 6.36`` is the standard normal quantile for a 1e-10 tail.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import DomainError
from .sortition import to_fraction

QUANTILE = 6.36
TAU_CONSTANT = Fraction(81, 2)  # 40.5
DEFAULT_SUPPLY = 10**9
TWO_THIRDS = Fraction(2, 3)
# standard normal tails past this are reported as exactly 0 or 1
Z_SATURATION = 38.0


def normal_cdf(z: float) -> float:
    """Standard normal CDF via ``erfc``; relative error near machine precision."""
    if z < -Z_SATURATION:
        return 0.0
    if z > Z_SATURATION:
        return 1.0
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class SecurityModel:
    h: float
    alpha: float
    tau: int
    theta: float | None = None
    K: int = DEFAULT_SUPPLY

    def __post_init__(self):
        h, alpha = to_fraction(self.h), to_fraction(self.alpha)
        if not TWO_THIRDS < h <= 1:
            raise DomainError(f"honest fraction h must lie in (2/3, 1], got {self.h}")
        if not 0 < alpha <= 1:
            raise DomainError(f"activity alpha must lie in (0, 1], got {self.alpha}")
        if self.tau < 1:
            raise DomainError(f"tau must be a positive integer, got {self.tau}")
        if self.theta is not None and not 0 < to_fraction(self.theta) < 1:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        if self.K <= self.tau:
            raise DomainError(f"total supply K={self.K} must exceed tau={self.tau}")

    @property
    def p(self) -> float:
        return self.tau / self.K

    @property
    def honest_stake(self) -> float:
        return float(self.h) * float(self.alpha) * self.K

    @property
    def adversary_stake(self) -> float:
        return (1 - float(self.h)) * float(self.alpha) * self.K

    @property
    def approximation_valid(self) -> bool:
        """Whether both cohorts have more than 5 expected selected tokens."""
        return self.honest_stake * self.p > 5 and self.adversary_stake * self.p > 5

    def with_theta(self, theta: float) -> "SecurityModel":
        return SecurityModel(self.h, self.alpha, self.tau, theta, self.K)


def _require_theta(model: SecurityModel) -> float:
    if model.theta is None:
        raise DomainError("this analysis needs theta")
    return float(model.theta)


def theta_max_honest(model: SecurityModel, with_variance_factor: bool = False) -> float:
    """Largest theta that honest envoys alone still reach w.h.p.

    ``with_variance_factor`` keeps the ``(1 - p)`` binomial variance factor
    that the simplified bound drops.
    """
    share = float(model.h) * float(model.alpha)
    spread = share / model.tau
    if with_variance_factor:
        spread *= 1 - model.p
    return share - QUANTILE * math.sqrt(spread)


def theta_min_adversary(model: SecurityModel, with_variance_factor: bool = False) -> float:
    """Smallest theta that adversaries alone cannot reach w.h.p."""
    share = (1 - float(model.h)) * float(model.alpha)
    spread = share / model.tau
    if with_variance_factor:
        spread *= 1 - model.p
    return share + QUANTILE * math.sqrt(spread)


def tau_min_bound(h, alpha) -> Fraction:
    """``40.5 (4 - 3h) / ((3h - 2)^2 alpha)``, exact for decimal inputs."""
    h, alpha = to_fraction(h), to_fraction(alpha)
    if h <= TWO_THIRDS:
        raise DomainError(f"the supermajority bound needs h > 2/3, got {h}")
    if h > 1:
        raise DomainError(f"h cannot exceed 1, got {h}")
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    return TAU_CONSTANT * (4 - 3 * h) / ((3 * h - 2) ** 2 * alpha)


def tau_min(h, alpha) -> int:
    """Smallest integer tau meeting the supermajority bound (ceiling of the bound)."""
    return math.ceil(tau_min_bound(h, alpha))


@dataclass(frozen=True)
class TailBoundReport:
    mu_h: float
    sigma_h: float
    mu_a: float
    sigma_a: float
    mu_y: float
    sigma_y: float
    p_honest_shortfall: float
    p_adversary_reach: float
    p_supermajority_fail: float
    approximation_valid: bool
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d


def tail_report(model: SecurityModel) -> TailBoundReport:
    theta = _require_theta(model)
    p = model.p
    target = theta * model.tau
    mu_h = model.honest_stake * p
    var_h = model.honest_stake * p * (1 - p)
    mu_a = model.adversary_stake * p
    var_a = model.adversary_stake * p * (1 - p)
    h, alpha = float(model.h), float(model.alpha)
    mu_y = (3 * h - 2) * alpha * model.tau
    var_y = (4 - 3 * h) * alpha * model.tau

    def below(mu, var):  # Pr(X < target)
        if var == 0:
            return 1.0 if mu < target else 0.0
        return normal_cdf((target - mu) / math.sqrt(var))

    p_honest = below(mu_h, var_h)
    if var_a > 0:
        # upper tail taken directly, not as 1 - cdf, to keep tiny values exact
        p_adv = normal_cdf((mu_a - target) / math.sqrt(var_a))
    else:
        p_adv = 1.0 if mu_a >= target else 0.0
    p_y = normal_cdf(-mu_y / math.sqrt(var_y)) if var_y > 0 else float(mu_y <= 0)

    warnings = []
    if not model.approximation_valid:
        warnings.append(
            f"normal approximation outside its validity range: S_h*p={mu_h:.3g}, "
            f"S_a*p={mu_a:.3g} (both should exceed 5)"
        )
    if p >= 0.001:
        warnings.append(f"p={p:.3g} is not small; the simplified bounds drop a (1-p) factor")
    return TailBoundReport(
        mu_h, math.sqrt(var_h), mu_a, math.sqrt(var_a), mu_y, math.sqrt(var_y),
        p_honest, p_adv, p_y, model.approximation_valid, tuple(warnings),
    )


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    theta_min: float
    theta_max: float
    tau_min: int
    honest_margin: float
    adversary_margin: float
    tau_margin: int

    def to_dict(self) -> dict:
        return asdict(self)


def feasibility(model: SecurityModel) -> Feasibility:
    """Feasible iff theta_min < theta < theta_max and tau >= tau_min."""
    theta = _require_theta(model)
    lo = theta_min_adversary(model)
    hi = theta_max_honest(model)
    t_min = tau_min(model.h, model.alpha)
    honest_margin = hi - theta
    adversary_margin = theta - lo
    tau_margin = model.tau - t_min
    ok = honest_margin > 0 and adversary_margin > 0 and tau_margin >= 0
    return Feasibility(ok, lo, hi, t_min, honest_margin, adversary_margin, tau_margin)
