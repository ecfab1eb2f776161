"""Closed-form constants and inequalities behind the slow-phase argument.

Everything here is plain arithmetic, kept in log space wherever the
linear-domain value can overflow (kappa_d already does for d >= 3).
Comparisons carry a 1e-12 slack; a margin inside the slack means the
inputs sit on the critical surface and is reported as not satisfied.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

SLACK = 1e-12


class Kappa(NamedTuple):
    value: float  # inf when exp overflows; log is authoritative
    log: float


def kappa(d: int) -> Kappa:
    """Geometric constant kappa_d = 2 exp((2 d^2)^d / (1 - 2^-d)).

    Bounds the product of greedy-order gaps: the gaps of any subset of
    the n-torus multiply to at most kappa_d^(n^d).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    log = math.log(2.0) + (2.0 * d * d) ** d / (1.0 - 2.0 ** (-d))
    try:
        value = math.exp(log)
    except OverflowError:
        value = math.inf
    return Kappa(value=value, log=log)


class PhaseCondition(NamedTuple):
    satisfied: bool
    log_margin: float  # ln RHS - ln LHS; positive margin = satisfied
    log_lhs: float
    log_rhs: float


def active_phase_condition(d: int, mu: float, lam: float) -> PhaseCondition:
    """Check kappa_d (2 d lambda)^mu < mu^mu (1-mu)^(1-mu), in logs.

    Satisfied (with margin beyond the slack) means the slow-phase
    machinery applies at density mu and sleep rate lambda.
    """
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    log_lhs = kappa(d).log + mu * math.log(2 * d * lam)
    log_rhs = mu * math.log(mu) + (1 - mu) * math.log(1 - mu)
    margin = log_rhs - log_lhs
    return PhaseCondition(
        satisfied=margin > SLACK, log_margin=margin, log_lhs=log_lhs, log_rhs=log_rhs
    )


def admissible_c(d: int, mu: float, lam: float) -> Optional[float]:
    """Largest c with kappa_d (2 d lambda)^mu <= mu^mu (1-mu)^(1-mu) e^(-2c).

    Returns half the log margin, or None when the phase condition fails;
    any shrink of the returned c by a factor < 1 satisfies the inequality
    strictly.
    """
    cond = active_phase_condition(d, mu, lam)
    if not cond.satisfied:
        return None
    return cond.log_margin / 2.0


_CALIB_LIMIT = 10**6


@lru_cache(maxsize=64)
def _binomial_constant(mu: float) -> float:
    """ln C(mu): calibrated so C(mu)/(mu^(mu m) (1-mu)^((1-mu) m) sqrt(m))
    dominates C(m, ceil(mu m)) for every m up to 10^6."""
    m = np.arange(1, _CALIB_LIMIT + 1, dtype=np.float64)
    r = np.ceil(mu * m)
    exact = gammaln(m + 1) - gammaln(r + 1) - gammaln(m - r + 1)
    main = -mu * m * math.log(mu) - (1 - mu) * m * math.log(1 - mu) - 0.5 * np.log(m)
    return float(np.max(exact - main))


def log_binomial_bound(m: int, mu: float):
    """(ln C(m, ceil(mu m)), ln of the Stirling-form bound).

    The bound is C(mu) / (mu^(mu m) (1-mu)^((1-mu) m) sqrt(m)) with C(mu)
    calibrated over m <= 10^6; exact <= bound on that whole range.
    """
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if not 1 <= m <= _CALIB_LIMIT:
        raise ValueError(f"m must lie in 1 .. {_CALIB_LIMIT}")
    r = math.ceil(mu * m)
    exact = float(gammaln(m + 1) - gammaln(r + 1) - gammaln(m - r + 1))
    bound = (
        _binomial_constant(mu)
        - mu * m * math.log(mu)
        - (1 - mu) * m * math.log(1 - mu)
        - 0.5 * math.log(m)
    )
    return exact, float(bound)


@dataclass(frozen=True)
class StageParams:
    """Box ratio a and escape tolerance epsilon for the staged procedure,
    derived from an admissible constant c."""

    c: float
    d: int
    mu: float
    lam: float
    beta: float
    a: float
    epsilon: float


def stage_params(c: float, d: int, mu: float, lam: float, beta: float = 0.1) -> StageParams:
    """Pick (a, epsilon) strictly inside the constraints set by c.

    a = 0.9 min(c/(96 d mu), c/(72 d ln(1 + 1/lambda)), 1/3) and
    epsilon = 0.9 min(beta a^d / 4^d, c/24).  beta is the density the
    spread-estimate tolerates; 0.1 is a safe default and the knob is
    exposed for experiments.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not beta > 0:
        raise ValueError("beta must be positive")
    a = 0.9 * min(
        c / (96.0 * d * mu),
        c / (72.0 * d * math.log1p(1.0 / lam)),
        1.0 / 3.0,
    )
    epsilon = 0.9 * min(beta * a**d / 4.0**d, c / 24.0)
    return StageParams(c=c, d=d, mu=mu, lam=lam, beta=beta, a=a, epsilon=epsilon)
