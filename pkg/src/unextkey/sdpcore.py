"""Block-structured semidefinite programs and a certified solve contract.

A problem is a list of real symmetric PSD blocks plus sign-constrained
scalars, a linear objective, and linear equality constraints; inequalities
are expressed by the caller through explicit PSD slack blocks.  Complex
Hermitian data enters through :func:`embed_hermitian`, which maps a
Hermitian matrix to a real symmetric one of twice the dimension while
preserving positive semidefiniteness.

Solving is delegated to the Clarabel primal-dual interior-point backend
via cvxpy, behind this module's contract: the reported solution carries
primal and dual objective values and their gap, and a status of Optimal
is only returned when the gap certificate meets the requested tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

# Signs for scalar variables.
NONNEG = "nonneg"
NONPOS = "nonpos"
FREE = "free"

# Solution statuses.
OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NUMERICAL_TROUBLE = "NumericalTrouble"


class SdpError(Exception):
    """Raised for malformed problems or solver failures."""


def embed_hermitian(H, tol: float = 1e-10):
    """Embed a complex Hermitian d x d matrix as a real symmetric 2d x 2d one.

    Returns ``[[Re H, -Im H], [Im H, Re H]]``.  The embedding preserves the
    PSD order and doubles every eigenvalue's multiplicity; inner products
    pick up a factor of two: <embed(A), embed(B)> = 2 <A, B>.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise SdpError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, np.abs(H).max()) if H.size else 1.0
    if np.abs(H - H.conj().T).max() > tol * scale:
        raise SdpError("matrix is not Hermitian within tolerance")
    re, im = H.real, H.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    M = np.vstack([top, bot])
    return 0.5 * (M + M.T)


# ---------------------------------------------------------------------------
# linear operators appearing in constraint terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PTrace:
    """Partial trace over one tensor factor; dims are the factor sizes."""

    dims: tuple
    axis: int


@dataclass(frozen=True)
class SubBlock:
    """Square sub-block of size ``size`` at offset (row, col)."""

    row: int
    col: int
    size: int


@dataclass(frozen=True)
class Conjugate:
    """X -> K X K^T with a constant real matrix K."""

    matrix: np.ndarray


@dataclass(frozen=True)
class Inner:
    """X -> <M, X> (Frobenius inner product, scalar output)."""

    matrix: np.ndarray


@dataclass(frozen=True)
class BlockTerm:
    """coeff * (ops applied left-to-right to the named PSD block)."""

    block: str
    coeff: float = 1.0
    ops: tuple = ()


@dataclass(frozen=True)
class ScalarTerm:
    """coeff * scalar, or coeff * scalar * matrix when a matrix is given."""

    scalar: str
    coeff: float = 1.0
    matrix: np.ndarray | None = None


@dataclass(frozen=True)
class Equality:
    """sum(terms) == rhs, entrywise.  rhs is a scalar or a real matrix."""

    terms: tuple
    rhs: np.ndarray | float
    symmetric: bool = False


@dataclass
class Objective:
    """Linear functional: sum_j <C_j, X_j> + sum_k c_k s_k + offset."""

    blocks: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    offset: float = 0.0


@dataclass
class SdpProblem:
    """A conic program over PSD blocks and sign-constrained scalars.

    blocks: list of (label, dim) for real symmetric PSD variables.
    scalars: list of (label, sign) with sign in {nonneg, nonpos, free}.
    """

    sense: str
    blocks: list
    scalars: list
    objective: Objective
    equalities: list
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise SdpError(f"unknown sense {self.sense!r}")
        labels = [b[0] for b in self.blocks] + [s[0] for s in self.scalars]
        if len(set(labels)) != len(labels):
            raise SdpError("duplicate variable labels")
        dims = dict(self.blocks)
        known = set(labels)
        for eq in self.equalities:
            for t in eq.terms:
                ref = t.block if isinstance(t, BlockTerm) else t.scalar
                if ref not in known:
                    raise SdpError(f"constraint references undeclared variable {ref!r}")
                if isinstance(t, BlockTerm):
                    _check_chain(dims[t.block], t.ops, np.shape(eq.rhs))
        for label in list(self.objective.blocks) + list(self.objective.scalars):
            if label not in known:
                raise SdpError(f"objective references undeclared variable {label!r}")


def _chain_output_dim(dim, ops):
    for op in ops:
        if isinstance(op, PTrace):
            if int(np.prod(op.dims)) != dim:
                raise SdpError("PTrace dims do not match operand dimension")
            dim = dim // op.dims[op.axis]
        elif isinstance(op, SubBlock):
            if op.row + op.size > dim or op.col + op.size > dim:
                raise SdpError("SubBlock exceeds operand dimension")
            dim = op.size
        elif isinstance(op, Conjugate):
            K = np.asarray(op.matrix)
            if K.shape[1] != dim:
                raise SdpError("Conjugate matrix shape mismatch")
            dim = K.shape[0]
        elif isinstance(op, Inner):
            if np.asarray(op.matrix).shape != (dim, dim):
                raise SdpError("Inner matrix shape mismatch")
            dim = 0  # scalar
        else:
            raise SdpError(f"unknown operator {op!r}")
    return dim


def _check_chain(dim, ops, rhs_shape):
    out = _chain_output_dim(dim, ops)
    if rhs_shape == ():
        want = {0}
    elif rhs_shape in ((1,), (1, 1)):
        want = {0, 1}
    else:
        want = {rhs_shape[0]}
    if out not in want:
        raise SdpError(f"term output dim {out} does not match rhs shape {rhs_shape}")


# ---------------------------------------------------------------------------
# lowering to cvxpy and solving
# ---------------------------------------------------------------------------


@dataclass
class SdpSolution:
    status: str
    primal: float
    dual: float
    gap: float
    block_values: dict
    scalar_values: dict


def _apply_ops(expr, ops):
    for op in ops:
        if isinstance(op, PTrace):
            expr = cp.partial_trace(expr, dims=list(op.dims), axis=op.axis)
        elif isinstance(op, SubBlock):
            expr = expr[op.row : op.row + op.size, op.col : op.col + op.size]
        elif isinstance(op, Conjugate):
            K = np.asarray(op.matrix)
            expr = K @ expr @ K.T
        elif isinstance(op, Inner):
            expr = cp.sum(cp.multiply(np.asarray(op.matrix), expr))
    return expr


def _term_expr(term, variables):
    if isinstance(term, BlockTerm):
        return term.coeff * _apply_ops(variables[term.block], term.ops)
    if term.matrix is None:
        return term.coeff * variables[term.scalar]
    return term.coeff * variables[term.scalar] * np.asarray(term.matrix)


def _objective_expr(obj, variables):
    expr = obj.offset
    for label, C in obj.blocks.items():
        expr = expr + cp.sum(cp.multiply(np.asarray(C), variables[label]))
    for label, c in obj.scalars.items():
        expr = expr + c * variables[label]
    return expr


_STATUS_MAP = {
    cp.OPTIMAL: OPTIMAL,
    cp.INFEASIBLE: INFEASIBLE,
    cp.UNBOUNDED: UNBOUNDED,
}


def solve(problem: SdpProblem, tol: float = 1e-8) -> SdpSolution:
    """Solve with the Clarabel interior-point backend; certify the gap.

    The returned dual value is recovered from the equality multipliers, so
    the reported gap is an honest certificate rather than the solver's own
    bookkeeping.  Statuses other than Optimal never carry bound values.
    """
    if not (1e-10 <= tol <= 1e-4):
        raise SdpError(f"tolerance {tol} out of supported range [1e-10, 1e-4]")
    variables = {}
    for label, dim in problem.blocks:
        variables[label] = cp.Variable((dim, dim), PSD=True, name=label)
    for label, sign in problem.scalars:
        if sign == NONNEG:
            variables[label] = cp.Variable(nonneg=True, name=label)
        elif sign == NONPOS:
            variables[label] = cp.Variable(nonpos=True, name=label)
        elif sign == FREE:
            variables[label] = cp.Variable(name=label)
        else:
            raise SdpError(f"unknown scalar sign {sign!r}")

    constraints = []
    for eq in problem.equalities:
        lhs = sum(_term_expr(t, variables) for t in eq.terms)
        constraints.append(lhs == np.asarray(eq.rhs))

    obj_expr = _objective_expr(problem.objective, variables)
    objective = cp.Maximize(obj_expr) if problem.sense == "max" else cp.Minimize(obj_expr)
    cvx_problem = cp.Problem(objective, constraints)
    solver_tol = max(tol * 0.1, 1e-12)
    try:
        cvx_problem.solve(
            solver=cp.CLARABEL,
            tol_gap_abs=solver_tol,
            tol_gap_rel=solver_tol,
            tol_feas=solver_tol,
            max_iter=400,
        )
    except cp.error.SolverError as exc:
        raise SdpError(f"solver failure: {exc}") from exc

    status = _STATUS_MAP.get(cvx_problem.status)
    if status in (INFEASIBLE, UNBOUNDED):
        return SdpSolution(status, np.nan, np.nan, np.nan, {}, {})
    if status is None:
        return SdpSolution(NUMERICAL_TROUBLE, np.nan, np.nan, np.nan, {}, {})

    primal = float(cvx_problem.value)
    pairing = 0.0
    for eq, con in zip(problem.equalities, constraints):
        Y = con.dual_value
        if Y is None:
            pairing = np.nan
            break
        pairing += float(np.sum(np.asarray(eq.rhs) * np.asarray(Y)))
    # cvxpy multiplier signs follow the minimization convention
    if problem.sense == "max":
        dual = problem.objective.offset + pairing
    else:
        dual = problem.objective.offset - pairing

    gap = abs(primal - dual)
    if np.isnan(dual) or gap > tol * max(1.0, abs(primal)):
        status = NUMERICAL_TROUBLE
    block_values = {label: np.asarray(variables[label].value) for label, _ in problem.blocks}
    scalar_values = {label: float(variables[label].value) for label, _ in problem.scalars}
    return SdpSolution(status, primal, dual, gap, block_values, scalar_values)


# ---------------------------------------------------------------------------
# scalarization and the conic dual
# ---------------------------------------------------------------------------


def _ptrace_adjoint(Y, dims, axis):
    left = int(np.prod(dims[:axis])) if axis > 0 else 1
    mid = int(dims[axis])
    right = int(np.prod(dims[axis + 1 :])) if axis + 1 < len(dims) else 1
    Y = np.asarray(Y).reshape(left, right, left, right)
    out = np.zeros((left, mid, right, left, mid, right))
    for m in range(mid):
        out[:, m, :, :, m, :] = Y
    n = left * mid * right
    return out.reshape(n, n)


def _op_adjoint(Y, op, in_dim):
    """Apply the adjoint of a single operator to the functional matrix Y."""
    if isinstance(op, PTrace):
        return _ptrace_adjoint(Y, op.dims, op.axis)
    if isinstance(op, SubBlock):
        big = np.zeros((in_dim, in_dim))
        big[op.row : op.row + op.size, op.col : op.col + op.size] = Y
        return big
    if isinstance(op, Conjugate):
        K = np.asarray(op.matrix)
        return K.T @ Y @ K
    if isinstance(op, Inner):
        return float(Y) * np.asarray(op.matrix)
    raise SdpError(f"unknown operator {op!r}")


def _row_functional(term, entry, block_dims):
    """Coefficient matrix A with <A, X> = [term(X)]_entry for PSD block terms."""
    out_dim = _chain_output_dim(block_dims[term.block], term.ops)
    if out_dim == 0:
        Y = 1.0
    else:
        r, c = entry
        Y = np.zeros((out_dim, out_dim))
        Y[r, c] = 1.0
    dims_along = [block_dims[term.block]]
    d = block_dims[term.block]
    for op in term.ops:
        d = _chain_output_dim(dims_along[-1], (op,))
        dims_along.append(d)
    A = Y
    for op, din in zip(reversed(term.ops), reversed(dims_along[:-1])):
        A = _op_adjoint(A, op, din)
    A = np.asarray(A, dtype=float) * term.coeff
    return 0.5 * (A + A.T)


@dataclass
class _Row:
    """One scalarized equality: sum_j <A_j, X_j> + sum_k a_k s_k = b."""

    block_coeffs: dict
    scalar_coeffs: dict
    rhs: float


def scalarize(problem: SdpProblem):
    """Expand matrix equalities into scalar rows (entrywise functionals)."""
    block_dims = dict(problem.blocks)
    rows = []
    for eq in problem.equalities:
        rhs = np.asarray(eq.rhs, dtype=float)
        if rhs.shape == ():
            entries = [(None, float(rhs))]
        else:
            m = rhs.shape[0]
            if eq.symmetric:
                entries = [((r, c), rhs[r, c]) for r in range(m) for c in range(r, m)]
            else:
                entries = [((r, c), rhs[r, c]) for r in range(m) for c in range(m)]
        for entry, b in entries:
            bc, sc = {}, {}
            for t in eq.terms:
                if isinstance(t, BlockTerm):
                    A = _row_functional(t, entry if entry else (0, 0), block_dims)
                    bc[t.block] = bc.get(t.block, 0) + A
                else:
                    if t.matrix is None:
                        if entry is not None and entry != (0, 0):
                            raise SdpError("bare scalar term in a matrix-shaped equality")
                        a = t.coeff
                    else:
                        M = np.asarray(t.matrix)
                        r, c = entry
                        a = t.coeff * 0.5 * (M[r, c] + M[c, r])
                    sc[t.scalar] = sc.get(t.scalar, 0.0) + a
            rows.append(_Row(bc, sc, b))
    return rows


def dualize(problem: SdpProblem) -> SdpProblem:
    """Standard conic dual; weak duality holds against the primal by design."""
    rows = scalarize(problem)
    block_dims = dict(problem.blocks)
    n = len(rows)
    y_labels = [f"y{i}" for i in range(n)]
    dual_sense = "min" if problem.sense == "max" else "max"
    sgn = 1.0 if problem.sense == "max" else -1.0

    blocks = [(f"Z_{label}", dim) for label, dim in problem.blocks]
    scalars = [(y, FREE) for y in y_labels]
    equalities = []

    # one matrix equality per primal block, written in sign-normalized form:
    # max primal:  sum_i y_i A_ij - Z_j = C_j   (Z_j >= 0)
    # min primal: -sum_i y_i A_ij - Z_j = -C_j  (i.e. Z_j = C_j - sum y A)
    for label, dim in problem.blocks:
        C = np.asarray(problem.objective.blocks.get(label, np.zeros((dim, dim))), dtype=float)
        terms = [BlockTerm(f"Z_{label}", coeff=-1.0)]
        for i, row in enumerate(rows):
            A = row.block_coeffs.get(label)
            if A is not None and np.any(A):
                terms.append(ScalarTerm(y_labels[i], coeff=sgn, matrix=A))
        equalities.append(Equality(tuple(terms), sgn * 0.5 * (C + C.T), symmetric=True))

    # scalar dual constraints, one per primal scalar
    for k, (label, sign) in enumerate(problem.scalars):
        c = float(problem.objective.scalars.get(label, 0.0))
        terms = [
            ScalarTerm(y_labels[i], coeff=sgn * row.scalar_coeffs[label])
            for i, row in enumerate(rows)
            if label in row.scalar_coeffs and row.scalar_coeffs[label] != 0.0
        ]
        if sign == FREE:
            equalities.append(Equality(tuple(terms), sgn * c))
        else:
            slack = f"t{k}_{label}"
            # sign-normalized slack keeps the same coefficient in both senses
            coeff = -1.0 if sign == NONNEG else 1.0
            scalars.append((slack, NONNEG))
            equalities.append(Equality(tuple(terms) + (ScalarTerm(slack, coeff=coeff),), sgn * c))

    objective = Objective(
        blocks={},
        scalars={y_labels[i]: rows[i].rhs for i in range(n)},
        offset=problem.objective.offset,
    )
    return SdpProblem(
        sense=dual_sense,
        blocks=blocks,
        scalars=scalars,
        objective=objective,
        equalities=equalities,
        name=f"dual({problem.name})" if problem.name else "dual",
    )


# ---------------------------------------------------------------------------
# JSON debug format
# ---------------------------------------------------------------------------


def _triplets(A, tol=0.0):
    A = np.asarray(A)
    idx = np.argwhere(np.abs(A) > tol)
    return [[int(r), int(c), float(A[r, c])] for r, c in idx]


def problem_to_json(problem: SdpProblem) -> str:
    """Serialize a problem (scalarized, sparse triplet maps) for reproduction."""
    rows = scalarize(problem)
    payload = {
        "name": problem.name,
        "sense": problem.sense,
        "blocks": [[label, dim] for label, dim in problem.blocks],
        "scalars": [[label, sign] for label, sign in problem.scalars],
        "objective": {
            "blocks": {label: _triplets(C) for label, C in problem.objective.blocks.items()},
            "scalars": dict(problem.objective.scalars),
            "offset": problem.objective.offset,
        },
        "rows": [
            {
                "blocks": {label: _triplets(A) for label, A in row.block_coeffs.items()},
                "scalars": dict(row.scalar_coeffs),
                "rhs": row.rhs,
            }
            for row in rows
        ],
    }
    return json.dumps(payload, indent=1, sort_keys=True)


def problem_from_json(text: str) -> SdpProblem:
    """Rebuild a (scalarized) problem from the JSON debug format."""
    payload = json.loads(text)
    block_dims = {label: dim for label, dim in payload["blocks"]}

    def _dense(trips, dim):
        A = np.zeros((dim, dim))
        for r, c, v in trips:
            A[r, c] = v
        return A

    equalities = []
    for row in payload["rows"]:
        terms = [
            BlockTerm(label, ops=(Inner(_dense(trips, block_dims[label])),))
            for label, trips in row["blocks"].items()
        ]
        terms += [ScalarTerm(label, coeff=a) for label, a in row["scalars"].items()]
        equalities.append(Equality(tuple(terms), float(row["rhs"])))
    objective = Objective(
        blocks={
            label: _dense(trips, block_dims[label])
            for label, trips in payload["objective"]["blocks"].items()
        },
        scalars={label: float(c) for label, c in payload["objective"]["scalars"].items()},
        offset=float(payload["objective"]["offset"]),
    )
    return SdpProblem(
        sense=payload["sense"],
        blocks=[(label, dim) for label, dim in payload["blocks"]],
        scalars=[(label, sign) for label, sign in payload["scalars"]],
        objective=objective,
        equalities=equalities,
        name=payload.get("name", ""),
    )
