"""Unextendible-entanglement measures of states and one-way key bounds.

The smooth-min and max measures are computed by semidefinite programs over
extensions of the state; the key bounds combine them with the closed-form
machinery.  Every bound is returned as a :class:`BoundReport` carrying the
regime (NoBound / Finite / Zero) instead of sentinel numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms, sdpcore
from .qcore import BipartiteState
from .sdpcore import BlockTerm, Equality, Objective, PTrace, ScalarTerm, SdpProblem

NO_BOUND = "NoBound"
FINITE = "Finite"
ZERO = "Zero"


@dataclass
class BoundReport:
    """A computed bound in bits together with the quantities behind it."""

    method: str
    regime: str
    bound: float | None
    E: float
    J: float
    epsilon: float
    n: int = 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "bound": self.bound,
                "regime": self.regime,
                "E": self.E,
                "J": self.J,
                "epsilon": self.epsilon,
                "n": self.n,
            },
            sort_keys=True,
        )


def _require_optimal(solution, name):
    if solution.status != sdpcore.OPTIMAL:
        raise sdpcore.SdpError(f"{name} SDP ended with status {solution.status}")
    return solution


def _smooth_min_problem(rho: BipartiteState, eps: float) -> SdpProblem:
    dA, dB = rho.dA, rho.dB
    nw = 2 * dA * dB * dB
    nz = 2 * dA * dB
    rho_e = sdpcore.embed_hermitian(rho.matrix)
    return SdpProblem(
        sense="max",
        blocks=[("w", nw), ("Z", nz), ("S", nz)],
        scalars=[("mu", sdpcore.NONNEG)],
        # complex traces halve against embedded blocks
        objective=Objective(blocks={"Z": -0.5 * np.eye(nz)}, scalars={"mu": 1.0 - eps}),
        equalities=[
            Equality(
                (BlockTerm("w", ops=(PTrace((2, dA, dB, dB), 3),)),),
                rho_e,
                symmetric=True,
            ),
            # mu*rho <= Tr_B w + Z, rewritten with the slack S
            Equality(
                (
                    BlockTerm("w", ops=(PTrace((2, dA, dB, dB), 2),)),
                    BlockTerm("Z"),
                    ScalarTerm("mu", coeff=-1.0, matrix=rho_e),
                    BlockTerm("S", coeff=-1.0),
                ),
                np.zeros((nz, nz)),
                symmetric=True,
            ),
        ],
        name="smooth_min_state",
    )


def smooth_min_unext_ent(rho: BipartiteState, eps: float, tol: float = 1e-8) -> float:
    """Smooth-min unextendible entanglement of a bipartite state, in bits."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps {eps} outside [0, 1)")
    solution = _require_optimal(sdpcore.solve(_smooth_min_problem(rho, eps), tol), "smooth-min")
    return -0.5 * math.log2(solution.primal)


def _max_unext_problem(rho: BipartiteState) -> SdpProblem:
    dA, dB = rho.dA, rho.dB
    nw = 2 * dA * dB * dB
    nz = 2 * dA * dB
    rho_e = sdpcore.embed_hermitian(rho.matrix)
    return SdpProblem(
        sense="max",
        blocks=[("w", nw), ("S", nz)],
        scalars=[("lam", sdpcore.FREE)],
        objective=Objective(scalars={"lam": 1.0}),
        equalities=[
            Equality(
                (BlockTerm("w", ops=(PTrace((2, dA, dB, dB), 3),)),),
                rho_e,
                symmetric=True,
            ),
            # lam*rho <= Tr_B w
            Equality(
                (
                    BlockTerm("w", ops=(PTrace((2, dA, dB, dB), 2),)),
                    ScalarTerm("lam", coeff=-1.0, matrix=rho_e),
                    BlockTerm("S", coeff=-1.0),
                ),
                np.zeros((nz, nz)),
                symmetric=True,
            ),
        ],
        name="max_unext_state",
    )


def max_unext_ent(rho: BipartiteState, tol: float = 1e-8) -> float:
    """Max-unextendible entanglement; additive under tensor products."""
    solution = _require_optimal(sdpcore.solve(_max_unext_problem(rho), tol), "max-unext")
    return -0.5 * math.log2(solution.primal)


def j_min(rho: BipartiteState, eps: float, tol: float = 1e-8) -> float:
    """Worst-case type-II error against extension marginals, 2^(-2E)."""
    return 2.0 ** (-2.0 * smooth_min_unext_ent(rho, eps, tol))


def _classify(J: float, eps: float):
    """Regime split of the one-shot theorem; boundary J = threshold is Finite."""
    if J <= eps:
        return NO_BOUND
    if J > closed_forms.zero_threshold(eps):
        return ZERO
    return FINITE


def _report(method, J, eps, E, n, finite_bound):
    regime = _classify(J, eps)
    if regime == NO_BOUND:
        bound = None
    elif regime == ZERO:
        bound = 0.0
    else:
        bound = finite_bound(J)
    return BoundReport(method=method, regime=regime, bound=bound, E=E, J=J, epsilon=eps, n=n)


def key_bound_oneshot(rho: BipartiteState, eps: float, tol: float = 1e-8) -> BoundReport:
    """Upper bound on the one-shot, one-way distillable key of a state."""
    E = smooth_min_unext_ent(rho, eps, tol)
    J = 2.0 ** (-2.0 * E)
    return _report("state-oneshot", J, eps, E, 1, lambda j: closed_forms.f_bound(j, eps))


def key_bound_relaxed_alg(rho: BipartiteState, eps: float, tol: float = 1e-8) -> BoundReport:
    """Simpler, weaker bound -log2(sqrt(J) - sqrt(eps))."""
    E = smooth_min_unext_ent(rho, eps, tol)
    J = 2.0 ** (-2.0 * E)
    return _report(
        "state-relaxed-alg", J, eps, E, 1,
        lambda j: -math.log2(math.sqrt(j) - math.sqrt(eps)),
    )


def key_bound_relaxed_td(rho: BipartiteState, eps: float, tol: float = 1e-8) -> BoundReport:
    """Trace-distance relaxation -(1/2) log2(J - sqrt(eps)); needs J > sqrt(eps)."""
    E = smooth_min_unext_ent(rho, eps, tol)
    J = 2.0 ** (-2.0 * E)
    root = math.sqrt(eps)
    regime = _classify(J, eps)
    if J <= root:
        return BoundReport("state-relaxed-td", NO_BOUND, None, E, J, eps, 1)
    if regime == ZERO:
        return BoundReport("state-relaxed-td", ZERO, 0.0, E, J, eps, 1)
    return BoundReport("state-relaxed-td", FINITE, -0.5 * math.log2(J - root), E, J, eps, 1)


def key_bound_nshot_max(rho: BipartiteState, eps: float, n: int, tol: float = 1e-8) -> BoundReport:
    """n-shot bound through the additive max measure: J = 2^(-2nE_max)(1-eps)."""
    if n < 1:
        raise ValueError(f"copy count must be positive, got {n}")
    E = max_unext_ent(rho, tol)
    J = (1.0 - eps) * 2.0 ** (-2.0 * n * E)
    return _report("state-nshot-emax", J, eps, E, n, lambda j: closed_forms.f_bound(j, eps))
