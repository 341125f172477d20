"""Scalar closed forms shared by the state and channel bounds.

These are the analytic pieces of the key-distillation bounds: the privacy
test pass-probability ceiling, the bound function f(J, eps), the admissible
range of twirled overlaps q, the zero-key threshold, and the exact value of
the smooth-min measure on maximal entanglement.  They double as independent
oracles for the SDP pipeline.
"""

from __future__ import annotations

import math


def _safe_sqrt(x: float) -> float:
    # radicals may go slightly negative from floating-point cancellation
    if x < -1e-14:
        raise ValueError(f"negative radicand {x}")
    return math.sqrt(max(x, 0.0))


def varsigma(eps: float, k: int) -> float:
    """Largest privacy-test pass probability of any extension marginal.

    Defined for eps in [0, 1 - 1/k^2]; equals 1/k^2 at eps = 0 and grows to
    1 at the right endpoint.
    """
    if k < 1:
        raise ValueError(f"key dimension must be positive, got {k}")
    if not 0.0 <= eps <= 1.0 - 1.0 / k**2 + 1e-12:
        raise ValueError(f"eps {eps} outside [0, 1 - 1/k^2] for k = {k}")
    return eps + (1.0 - 2.0 * eps) / k**2 + 2.0 * _safe_sqrt((k**2 - 1) * eps * (1.0 - eps)) / k**2


def f_bound(J: float, eps: float) -> float:
    """Key-bound function, decreasing in J and increasing in eps.

    f(J, eps) = (1/2) log2[ ((sqrt(J(1-J)) + sqrt(eps(1-eps))) / (J-eps))^2 + 1 ]
    for J in (eps, 1-eps]; at eps = 0 it collapses to (1/2) log2(1/J).
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps {eps} outside [0, 1]")
    if J <= eps:
        raise ValueError(f"J = {J} must exceed eps = {eps}")
    num = _safe_sqrt(J * (1.0 - J)) + _safe_sqrt(eps * (1.0 - eps))
    return 0.5 * math.log2((num / (J - eps)) ** 2 + 1.0)


def alpha_q(eps: float, k: int):
    """Roots (alpha_-, alpha_+) of the twirled-overlap fidelity equation."""
    rad = 2.0 * _safe_sqrt((k**2 - 1) * eps * (1.0 - eps)) / k**2
    mid = eps + (1.0 - 2.0 * eps) / k**2
    return mid - rad, mid + rad


def q_range(eps: float, k: int):
    """Admissible range of the twirled overlap q for fidelity >= 1 - eps.

    Piecewise in eps: below 1/k^2 both endpoints are the roots alpha_-+;
    between 1/k^2 and 1 - 1/k^2 the lower endpoint drops to 0; above that
    every q in [0, 1] is admissible.
    """
    if k < 2:
        raise ValueError(f"key dimension must be at least 2, got {k}")
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps {eps} outside [0, 1]")
    if eps > 1.0 - 1.0 / k**2:
        return 0.0, 1.0
    lo, hi = alpha_q(eps, k)
    if eps <= 1.0 / k**2:
        return lo, hi
    return 0.0, hi


def zero_threshold(eps: float) -> float:
    """J above this value forces the one-shot key to zero (k = 2 ceiling).

    Equals varsigma(eps, 2) on its domain and clamps to the trivial ceiling
    1 for eps > 3/4, where no state can exceed it (J <= 1 - eps).
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps {eps} outside [0, 1]")
    if eps > 0.75:
        return 1.0
    return varsigma(eps, 2)


def prop3_value(d: int, eps: float) -> float:
    """Smooth-min unextendible entanglement of maximal entanglement of rank d."""
    if d < 2:
        raise ValueError(f"Schmidt rank must be at least 2, got {d}")
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps {eps} outside [0, 1)")
    return math.log2(d) - 0.5 * math.log2(1.0 - eps)
