"""Linear programs for recovery-map norms, hull membership and free robustness.

All programs are in equality standard form ``min c^T x  s.t.  A x = b, x >= 0``
and are solved by a dense two-phase revised simplex. Pivoting is Dantzig's
rule with lowest-index tie breaking, falling back to Bland's rule after a run
of degenerate pivots, so results are reproducible for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve, qr

from .errors import (
    DimensionError,
    ParameterError,
    SingularChannelError,
    SolverError,
    UnboundedError,
)
from .pauli import TransferMatrix, transfer_matrix, unitary_ptm

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-9
DEGENERATE_SWITCH = 50
MAX_ITER = 50_000


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        a = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
        b = np.asarray(self.b_eq, dtype=float).ravel()
        if a.shape != (len(b), len(c)):
            raise DimensionError(f"A has shape {a.shape}, expected {(len(b), len(c))}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ParameterError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a_eq", a)
        object.__setattr__(self, "b_eq", b)


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible"
    value: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    certificate: np.ndarray | None = None  # Farkas vector when infeasible
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _factor(bmat: np.ndarray):
    try:
        lu = lu_factor(bmat, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError("basis factorization failed", {"cond": float(np.linalg.cond(bmat))}) from exc
    if np.min(np.abs(np.diag(lu[0]))) < 1e-13:
        raise SolverError("basis matrix is singular", {"cond": float(np.linalg.cond(bmat))})
    return lu


def _iterate(a: np.ndarray, b: np.ndarray, c: np.ndarray, basis: list[int], allowed: int) -> int:
    """Revised simplex on columns ``0..allowed-1`` of ``a`` from a feasible ``basis``.

    The basis is refactorized every iteration, trading speed for stability on
    the heavily degenerate programs built from transfer matrices.
    """
    iterations = 0
    degenerate = 0
    while True:
        lu = _factor(a[:, basis])
        xb = lu_solve(lu, b)
        y = lu_solve(lu, c[basis], trans=1)
        rc = c[:allowed] - y @ a[:, :allowed]
        rc[basis] = 0.0
        if degenerate >= DEGENERATE_SWITCH:
            candidates = np.flatnonzero(rc < -COST_TOL)
            if candidates.size == 0:
                return iterations
            col = int(candidates[0])
        else:
            col = int(np.argmin(rc))
            if rc[col] >= -COST_TOL:
                return iterations
        d = lu_solve(lu, a[:, col])
        rows = np.flatnonzero(d > PIVOT_TOL)
        if rows.size == 0:
            raise UnboundedError(f"objective unbounded along column {col}")
        ratios = np.maximum(xb[rows], 0.0) / d[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, best)]
        r = int(min(ties, key=lambda i: basis[i]))
        # steps that barely move the objective count as degenerate
        degenerate = degenerate + 1 if best * -rc[col] <= 1e-12 else 0
        basis[r] = col
        iterations += 1
        if iterations > MAX_ITER:
            raise SolverError("iteration limit reached", {"iterations": iterations})


def _independent_rows(a: np.ndarray, b: np.ndarray):
    """Drop linearly dependent equality rows; detect inconsistency.

    Returns ``(rows, certificate)``. ``certificate`` is a Farkas vector when
    the dropped rows contradict the kept ones, else ``None``.
    """
    m = a.shape[0]
    if m == 0:
        return [], None
    _, r, piv = qr(a.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > 1e-10 * max(1.0, diag.max(initial=0.0))))
    rows = sorted(int(i) for i in piv[:rank])
    if rank < m:
        coef = np.linalg.lstsq(a[rows].T, a.T, rcond=None)[0]  # a ~ coef.T @ a[rows]
        resid = b - coef.T @ b[rows]
        if np.abs(resid).max() > 1e-9 * max(1.0, np.abs(b).max()):
            # y = resid is orthogonal to the row space of a, and b @ y = |resid|^2 > 0
            return rows, resid
    return rows, None


def _perturbed_phase(a, b, c, basis, allowed, eta) -> int:
    """Run a simplex phase on ``b`` shifted so the starting basic solution is strictly positive."""
    m = len(basis)
    w = 0.5 + 0.5 * ((np.arange(m) * 0.6180339887498949) % 1.0)
    b_shift = b + eta * (a[:, basis] @ w)
    return _iterate(a, b_shift, c, basis, allowed)


def _simplex(c: np.ndarray, a: np.ndarray, b: np.ndarray) -> LPResult:
    m0 = a.shape[0]
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    rows, cert = _independent_rows(a, b)
    if cert is not None:
        return LPResult("infeasible", certificate=cert)
    if not rows:
        # no binding constraints: x = 0 unless some cost is negative
        if np.any(c < -COST_TOL):
            raise UnboundedError("objective unbounded on the nonnegative orthant")
        return LPResult("optimal", 0.0, np.zeros(a.shape[1]), np.zeros(m0))
    sign = np.where(b[rows] < 0, -1.0, 1.0)
    a_r = a[rows] * sign[:, None]
    b_r = b[rows] * sign
    m, n = a_r.shape
    iterations = 0

    for eta in (1e-7 * scale, 1e-10 * scale, 0.0):
        # phase one: minimise the sum of artificial variables
        aug = np.hstack([a_r, np.eye(m)])
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        basis = list(range(n, n + m))
        iterations += _perturbed_phase(aug, b_r, c1, basis, n + m, eta)
        lu = _factor(aug[:, basis])
        xb = lu_solve(lu, b_r)
        if float(c1[basis] @ np.maximum(xb, 0.0)) > FEAS_TOL * scale and xb.min() >= -FEAS_TOL * scale:
            # Farkas vector from the phase-one multipliers: y^T A <= 0, y^T b > 0
            y = lu_solve(lu, c1[basis], trans=1)
            full = np.zeros(m0)
            full[rows] = y * sign
            return LPResult("infeasible", certificate=full, iterations=iterations)
        if xb.min() < -FEAS_TOL * scale:
            continue

        # pivot zero-level artificials out of the basis (rows are independent, so this succeeds)
        for pos in range(m):
            if basis[pos] < n:
                continue
            e = np.zeros(m)
            e[pos] = 1.0
            row = lu_solve(_factor(aug[:, basis]), e, trans=1) @ a_r
            row[[j for j in basis if j < n]] = 0.0
            basis[pos] = int(np.argmax(np.abs(row)))

        iterations += _perturbed_phase(a_r, b_r, c, basis, n, eta)
        lu = _factor(a_r[:, basis])
        xb = lu_solve(lu, b_r)
        if xb.min() < -FEAS_TOL * scale:
            continue
        y_kept = lu_solve(lu, c[basis], trans=1)
        x = np.zeros(n)
        x[basis] = np.maximum(xb, 0.0)
        y = np.zeros(m0)
        y[rows] = y_kept * sign
        residual = float(np.abs(a @ x - b).max(initial=0.0))
        if residual > 1e-9 * scale:
            raise SolverError(
                "feasibility residue too large",
                {"residual": residual, "cond": float(np.linalg.cond(a_r[:, basis]))},
            )
        return LPResult("optimal", float(c @ x), x, y, iterations=iterations)
    raise SolverError("perturbed bases stayed primal infeasible", {"iterations": iterations})


def _highs(c: np.ndarray, a: np.ndarray, b: np.ndarray) -> LPResult:
    from scipy.optimize import linprog

    res = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        raise UnboundedError("objective unbounded")
    if res.status != 0:
        raise SolverError(res.message, {"status": res.status})
    return LPResult("optimal", float(res.fun), res.x, res.eqlin.marginals, iterations=res.nit)


def lp_solve(lp: LinearProgram, method: str = "simplex") -> LPResult:
    """Solve ``min c^T x, A x = b, x >= 0``.

    ``method="highs"`` delegates to :func:`scipy.optimize.linprog`; it is a
    faster alternative for large robustness programs and a cross-check.
    """
    a, b = lp.a_eq, lp.b_eq
    zero = np.all(np.abs(a) <= 1e-12, axis=1)
    if np.any(zero & (np.abs(b) > 1e-12)):
        r = int(np.flatnonzero(zero & (np.abs(b) > 1e-12))[0])
        cert = np.zeros(len(b))
        cert[r] = np.sign(b[r])
        return LPResult("infeasible", certificate=cert)
    keep = ~zero
    if method == "simplex":
        res = _simplex(lp.c, a[keep], b[keep])
    elif method == "highs":
        res = _highs(lp.c, a[keep], b[keep])
    else:
        raise ParameterError(f"unknown LP method {method!r}")
    for attr in ("duals", "certificate"):
        v = getattr(res, attr)
        if v is not None:
            full = np.zeros(len(b))
            full[keep] = v
            setattr(res, attr, full)
    return res


# --- hull membership and robustness ----------------------------------------------


def _flat(ms) -> np.ndarray:
    """Stack transfer matrices (or raw arrays) as columns of a 2-D array."""
    cols = [m.matrix.ravel() if isinstance(m, TransferMatrix) else np.asarray(m).ravel() for m in ms]
    if len({c.size for c in cols}) > 1:
        raise DimensionError("hull elements have different shapes")
    return np.stack(cols, axis=1)


@dataclass
class HullResult:
    inside: bool
    weights: np.ndarray | None = None
    residual: float = math.nan
    certificate: np.ndarray | None = None

    def __bool__(self):
        return self.inside


def hull_membership(target, hull: Sequence, method: str = "simplex") -> HullResult:
    """Convex weights ``q`` with ``sum q_i M_i = target``, or an infeasibility certificate."""
    if len(hull) == 0:
        raise ParameterError("hull must be nonempty")
    cols = _flat(hull)
    t = target.matrix.ravel() if isinstance(target, TransferMatrix) else np.asarray(target).ravel()
    if t.size != cols.shape[0]:
        raise DimensionError("target and hull elements differ in shape")
    a = np.vstack([cols, np.ones((1, cols.shape[1]))])
    b = np.append(t, 1.0)
    res = lp_solve(LinearProgram(np.zeros(cols.shape[1]), a, b), method)
    if not res.optimal:
        return HullResult(False, certificate=res.certificate)
    return HullResult(True, res.x, float(np.abs(cols @ res.x - t).max()))


@dataclass
class RobustnessResult:
    gamma: float
    status: str
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    circuit_id: int | None = None
    residual: float = math.nan
    per_circuit: list[float] = field(default_factory=list)
    method: str = ""


def free_robustness(c_k, hull_k1: Sequence, method: str = "simplex") -> RobustnessResult:
    """Least ``gamma`` with ``c_k = (1 + gamma) C1 - gamma C2`` for hull points ``C1, C2``.

    Solved as ``min sum b`` over ``c_k = sum a_i M_i - sum b_i M_i`` with
    ``a, b >= 0`` and ``sum a - sum b = 1``; then ``gamma = sum b`` and the
    normalised ``a``, ``b`` are the two hull points.
    """
    if len(hull_k1) == 0:
        raise ParameterError("hull must be nonempty")
    cols = _flat(hull_k1)
    t = c_k.matrix.ravel() if isinstance(c_k, TransferMatrix) else np.asarray(c_k).ravel()
    if t.size != cols.shape[0]:
        raise DimensionError("circuit and hull elements differ in shape")
    n = cols.shape[1]
    a_eq = np.vstack([np.hstack([cols, -cols]), np.hstack([np.ones(n), -np.ones(n)])])
    b_eq = np.append(t, 1.0)
    c = np.concatenate([np.zeros(n), np.ones(n)])
    res = lp_solve(LinearProgram(c, a_eq, b_eq), method)
    if not res.optimal:
        return RobustnessResult(math.inf, "infeasible")
    a, b = res.x[:n], res.x[n:]
    residual = float(np.abs(cols @ (a - b) - t).max())
    return RobustnessResult(float(b.sum()), "optimal", a, b, residual=residual)


def gamma_class(class_k: Sequence, class_k1: Sequence, method: str = "simplex") -> RobustnessResult:
    """``max_{C in class_k} free_robustness(C, class_k1)``; ties keep the lowest id."""
    if len(class_k) == 0 or len(class_k1) == 0:
        raise ParameterError("both classes must be nonempty")
    best = None
    values = []
    for i, ck in enumerate(class_k):
        r = free_robustness(ck, class_k1, method)
        values.append(r.gamma)
        if best is None or r.gamma > best.gamma + 1e-12:
            r.circuit_id = i
            best = r
    best.per_circuit = values
    return best


def recovery_decomposition(channel, gate_set: Sequence[np.ndarray], method: str = "simplex"):
    """Minimal-l1 coefficients ``v`` with ``sum v_i M^{U_i} = (M^channel)^{-1}``.

    Returns ``(l1, v)``; ``l1`` is ``inf`` (and ``v`` is ``None``) when no
    decomposition over ``gate_set`` exists.
    """
    m = transfer_matrix(channel).matrix
    if abs(np.linalg.det(m)) < 1e-10:
        raise SingularChannelError("channel transfer matrix is singular; no recovery map")
    target = np.linalg.inv(m)
    cols = _flat([unitary_ptm(u) for u in gate_set])
    k = cols.shape[1]
    lp = LinearProgram(np.ones(2 * k), np.hstack([cols, -cols]), target.ravel())
    res = lp_solve(lp, method)
    if not res.optimal:
        return math.inf, None
    v = res.x[:k] - res.x[k:]
    return float(np.abs(v).sum()), v


def l1_recovery_norm(channel, gate_set: Sequence[np.ndarray], method: str = "simplex") -> float:
    return recovery_decomposition(channel, gate_set, method)[0]
