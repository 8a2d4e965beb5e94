"""Linear programs in inequality/equality form with box bounds.

``solve_lp`` is the single entry point used by every relaxation builder.  Two
backends sit behind it:

* ``"highs"`` (default) - the HiGHS simplex solver, used for the large
  scheduling LPs.  :class:`WarmLp` keeps a session alive for re-solves.
* ``"simplex"`` - a dense revised simplex (two-phase, Dantzig pricing with a
  Bland's-rule fallback on degenerate stalls).  Slow, but dependency-free and
  used to cross-check the default backend on small problems.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import highspy
import numpy as np
import scipy.sparse as sp
from scipy.linalg import qr

FEAS_TOL = 1e-7
CENTRAL_GAP = 1e-7


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class LpNumericalError(RuntimeError):
    """Solver failed or returned a point violating the constraints."""


@dataclass
class LpProblem:
    """maximize ``c @ v`` s.t. ``A_ub v <= b_ub``, ``A_eq v = b_eq``, ``lb <= v <= ub``."""

    c: np.ndarray
    A_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "ub")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "eq")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.c.size

    def with_objective(self, c: np.ndarray) -> "LpProblem":
        return LpProblem(c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, self.lb, self.ub)

    def max_violation(self, v: np.ndarray) -> float:
        viol = [0.0, float(np.max(self.lb - v, initial=0.0)), float(np.max(v - self.ub, initial=0.0))]
        if self.A_ub.shape[0]:
            viol.append(float(np.max(self.A_ub @ v - self.b_ub, initial=0.0)))
        if self.A_eq.shape[0]:
            viol.append(float(np.max(np.abs(self.A_eq @ v - self.b_eq))))
        return max(viol)


def _rows(A, b, n, tag):
    if A is None:
        return sp.csr_matrix((0, n)), np.zeros(0)
    A = sp.csr_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != n or A.shape[0] != b.size:
        raise ValueError(f"A_{tag} is {A.shape}, expected ({b.size}, {n})")
    return A, b


@dataclass
class LpSolution:
    status: LpStatus
    v: np.ndarray | None = None
    objective_value: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(problem: LpProblem, method: str = "highs") -> LpSolution:
    """Solve ``problem``; optimal points are verified against all constraints."""
    if method == "highs":
        sol = _solve_highs(problem)
    elif method == "simplex":
        sol = _solve_simplex(problem)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.optimal:
        viol = problem.max_violation(sol.v)
        if viol > FEAS_TOL:
            raise LpNumericalError(f"{method} solution violates constraints by {viol:.3g}")
    return sol


def _solve_highs(problem: LpProblem) -> LpSolution:
    return WarmLp(problem).solve()


class WarmLp:
    """A HiGHS session over one constraint matrix.

    Objective and bounds may be changed between solves; each re-solve starts
    from the previous optimal basis.

    With ``central=True`` the returned point comes from an interior-point run
    stopped before crossover, so it sits in the relative interior of the
    optimal face instead of at a vertex.  The simplex optimum is still computed
    and certifies the interior point's objective; if the two disagree the
    vertex is returned.
    """

    def __init__(self, problem: LpProblem, central: bool = False):
        self.problem = problem
        self.central = central
        n = problem.num_vars
        A = sp.vstack([problem.A_ub, problem.A_eq], format="csc")
        m_ub = problem.A_ub.shape[0]
        inf = highspy.kHighsInf
        lp = highspy.HighsLp()
        lp.num_col_ = n
        lp.num_row_ = A.shape[0]
        lp.sense_ = highspy.ObjSense.kMaximize
        lp.col_cost_ = problem.c
        lp.col_lower_ = np.where(np.isinf(problem.lb), -inf, problem.lb)
        lp.col_upper_ = np.where(np.isinf(problem.ub), inf, problem.ub)
        lp.row_lower_ = np.concatenate([np.full(m_ub, -inf), problem.b_eq])
        lp.row_upper_ = np.concatenate([problem.b_ub, problem.b_eq])
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        self._h = highspy.Highs()
        for key, val in [("output_flag", False), ("threads", 1), ("solver", "simplex"),
                         ("primal_feasibility_tolerance", 1e-9),
                         ("dual_feasibility_tolerance", 1e-9)]:
            self._h.setOptionValue(key, val)
        if central:
            self._ipm = highspy.Highs()
            for key, val in [("output_flag", False), ("threads", 1), ("solver", "ipm"),
                             ("run_crossover", "off"), ("ipm_optimality_tolerance", 1e-9)]:
                self._ipm.setOptionValue(key, val)
            self._ipm.passModel(lp)
        self._h.passModel(lp)
        self._idx = np.arange(n, dtype=np.int32)
        self.num_solves = 0

    def set_objective(self, c: np.ndarray) -> None:
        c = np.asarray(c, dtype=float)
        self.problem = self.problem.with_objective(c)
        self._h.changeColsCost(c.size, self._idx, c)
        if self.central:
            self._ipm.changeColsCost(c.size, self._idx, c)

    def set_bounds(self, lb: np.ndarray, ub: np.ndarray) -> None:
        p = self.problem
        self.problem = LpProblem(p.c, p.A_ub, p.b_ub, p.A_eq, p.b_eq, lb, ub)
        self._h.changeColsBounds(lb.size, self._idx, np.asarray(lb, float), np.asarray(ub, float))
        if self.central:
            self._ipm.changeColsBounds(lb.size, self._idx, np.asarray(lb, float),
                                       np.asarray(ub, float))

    def solve(self) -> LpSolution:
        self.num_solves += 1
        self._h.run()
        status = self._h.getModelStatus()
        M = highspy.HighsModelStatus
        if status == M.kInfeasible:
            return LpSolution(LpStatus.INFEASIBLE)
        if status in (M.kUnbounded, M.kUnboundedOrInfeasible):
            if status == M.kUnboundedOrInfeasible and not _has_feasible_point(self.problem):
                return LpSolution(LpStatus.INFEASIBLE)
            return LpSolution(LpStatus.UNBOUNDED)
        if status != M.kOptimal:
            raise LpNumericalError(f"HiGHS ended with status {self._h.modelStatusToString(status)}")
        v = self._checked(self._h)
        if v is None:
            raise LpNumericalError("HiGHS solution violates the constraints")
        value = float(self.problem.c @ v)
        if self.central:
            w = self._interior_point(value)
            if w is not None:
                v = w
        return LpSolution(LpStatus.OPTIMAL, v, float(self.problem.c @ v))

    def _checked(self, h) -> np.ndarray | None:
        v = np.clip(np.array(h.getSolution().col_value), self.problem.lb, self.problem.ub)
        return v if self.problem.max_violation(v) <= FEAS_TOL else None

    def _interior_point(self, value: float) -> np.ndarray | None:
        """Interior-point solution if it is feasible and matches the vertex optimum."""
        self._ipm.run()
        # without crossover HiGHS reports "unknown" even on success; the primal
        # point is judged on its own merits
        if self._ipm.getInfo().primal_solution_status != 2:
            return None
        w = self._checked(self._ipm)
        if w is None or float(self.problem.c @ w) < value - CENTRAL_GAP * max(1.0, abs(value)):
            return None
        return w


def _has_feasible_point(problem: LpProblem) -> bool:
    probe = WarmLp(problem.with_objective(np.zeros(problem.num_vars)))
    return probe.solve().optimal


# ---------------------------------------------------------------------------
# dense revised simplex


def _standard_form(problem: LpProblem):
    """Rewrite as ``min cs @ y, As y = bs, y >= 0`` with ``v = shift + S y``.

    Each variable becomes ``v = lb + y`` (finite lb), ``v = ub - y`` (only ub
    finite) or ``v = y+ - y-`` (free).  Finite two-sided bounds add a row.
    """
    n = problem.num_vars
    lb, ub = problem.lb, problem.ub
    cols = []  # (original index, sign)
    shift = np.zeros(n)
    for k in range(n):
        if np.isfinite(lb[k]):
            shift[k] = lb[k]
            cols.append((k, 1.0))
        elif np.isfinite(ub[k]):
            shift[k] = ub[k]
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    S = np.zeros((n, len(cols)))
    for col, (k, sgn) in enumerate(cols):
        S[k, col] = sgn
    A_ub = problem.A_ub.toarray()
    A_eq = problem.A_eq.toarray()
    b_ub = problem.b_ub - A_ub @ shift
    b_eq = problem.b_eq - A_eq @ shift
    ub_rows = [(col, ub[k] - lb[k]) for col, (k, sgn) in enumerate(cols)
               if np.isfinite(lb[k]) and np.isfinite(ub[k])]
    rows_ub = [A_ub @ S]
    rhs_ub = [b_ub]
    if ub_rows:
        U = np.zeros((len(ub_rows), len(cols)))
        for r, (col, width) in enumerate(ub_rows):
            U[r, col] = 1.0
        rows_ub.append(U)
        rhs_ub.append(np.array([w for _, w in ub_rows]))
    Aub = np.vstack(rows_ub)
    bub = np.concatenate(rhs_ub)
    m_ub = Aub.shape[0]
    # slacks for inequality rows
    As = np.block([[Aub, np.eye(m_ub)], [A_eq @ S, np.zeros((A_eq.shape[0], m_ub))]])
    bs = np.concatenate([bub, b_eq])
    cs = np.concatenate([-(problem.c @ S), np.zeros(m_ub)])
    return As, bs, cs, S, shift


def _revised_simplex(A, b, c, basis, max_iter, tol=1e-9):
    """Primal revised simplex from a feasible basis.  Returns (status, basis)."""
    m, n = A.shape
    basis = list(basis)
    degenerate_run = 0
    in_basis = np.zeros(n, dtype=bool)
    in_basis[basis] = True
    for _ in range(max_iter):
        Bm = A[:, basis]
        try:
            xB = np.linalg.solve(Bm, b)
            y = np.linalg.solve(Bm.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise LpNumericalError("singular basis") from exc
        reduced = c - A.T @ y
        reduced[in_basis] = 0.0
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return LpStatus.OPTIMAL, basis
        bland = degenerate_run > 50
        enter = int(candidates[0]) if bland else int(candidates[np.argmin(reduced[candidates])])
        d = np.linalg.solve(Bm, A[:, enter])
        pos = d > tol
        if not pos.any():
            return LpStatus.UNBOUNDED, basis
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xB[pos], 0.0) / d[pos]
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + tol)
        # Bland: among tied rows leave with the smallest variable index
        leave = int(min(ties, key=lambda r: basis[r])) if bland else int(ties[0])
        degenerate_run = degenerate_run + 1 if theta <= tol else 0
        in_basis[basis[leave]] = False
        basis[leave] = enter
        in_basis[enter] = True
    raise LpNumericalError("simplex iteration limit reached")


def _solve_simplex(problem: LpProblem, max_iter: int = 50_000) -> LpSolution:
    A, b, c, S, shift = _standard_form(problem)
    m, n = A.shape
    if m == 0:
        if np.any(c < 0):
            return LpSolution(LpStatus.UNBOUNDED)
        v = shift.copy()
        return LpSolution(LpStatus.OPTIMAL, v, float(problem.c @ v))
    neg = b < 0
    A = A.copy()
    b = b.copy()
    A[neg] *= -1
    b[neg] *= -1
    # phase one with one artificial per row
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    status, basis = _revised_simplex(A1, b, c1, range(n, n + m), max_iter)
    xB = np.linalg.solve(A1[:, basis], b)
    if c1[basis] @ xB > 1e-7 * max(1.0, np.abs(b).max()):
        return LpSolution(LpStatus.INFEASIBLE)
    # drive remaining artificials out of the basis where possible
    for r, var in enumerate(list(basis)):
        if var < n:
            continue
        row = np.linalg.solve(A1[:, basis].T, np.eye(m)[r])
        alt = row @ A
        alt[[v for v in basis if v < n]] = 0.0
        k = int(np.argmax(np.abs(alt)))
        if abs(alt[k]) > 1e-9:
            basis[r] = k
    keep = [r for r, var in enumerate(basis) if var < n]
    if len(keep) < m:
        # redundant equality rows: drop them together with their artificials
        rows = _independent_rows(A, [basis[r] for r in keep])
        A, b = A[rows], b[rows]
        basis = [basis[r] for r in keep]
        m = A.shape[0]
        if len(basis) != m:
            raise LpNumericalError("could not repair phase-one basis")
    status, basis = _revised_simplex(A, b, c, basis, max_iter)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(status)
    y = np.zeros(n)
    y[basis] = np.linalg.solve(A[:, basis], b)
    y = np.maximum(y, 0.0)
    v = shift + S @ y[: S.shape[1]]
    return LpSolution(LpStatus.OPTIMAL, v, float(problem.c @ v))


def _independent_rows(A, basic_cols):
    _, _, piv = qr(A[:, basic_cols].T, pivoting=True)
    return sorted(piv[: len(basic_cols)])


# ---------------------------------------------------------------------------


def write_mps(problem: LpProblem, path: str | Path, name: str = "FDSCHED") -> Path:
    """Dump ``problem`` in fixed-column MPS for cross-checking elsewhere.

    MPS minimises, so the objective row carries ``-c``.
    """
    path = Path(path)
    n = problem.num_vars
    lines = [f"NAME          {name}", "ROWS", " N  OBJ"]
    rows = []
    for r in range(problem.A_ub.shape[0]):
        rows.append((f"U{r}", "L", problem.A_ub.getrow(r), problem.b_ub[r]))
    for r in range(problem.A_eq.shape[0]):
        rows.append((f"E{r}", "E", problem.A_eq.getrow(r), problem.b_eq[r]))
    lines += [f" {kind}  {rname}" for rname, kind, _, _ in rows]
    lines.append("COLUMNS")
    A_all = sp.vstack([problem.A_ub, problem.A_eq]).tocsc()
    rnames = [r[0] for r in rows]
    for k in range(n):
        cname = f"C{k}"
        if problem.c[k] != 0:
            lines.append(f"    {cname:<8}  {'OBJ':<8}  {-problem.c[k]:>12.6g}")
        col = A_all.getcol(k)
        for r, val in zip(col.indices, col.data):
            lines.append(f"    {cname:<8}  {rnames[r]:<8}  {val:>12.6g}")
    lines.append("RHS")
    for rname, _, _, rhs in rows:
        if rhs != 0:
            lines.append(f"    {'RHS':<8}  {rname:<8}  {rhs:>12.6g}")
    lines.append("BOUNDS")
    for k in range(n):
        lo, hi = problem.lb[k], problem.ub[k]
        cname = f"C{k}"
        if lo == hi:
            lines.append(f" FX BND       {cname:<8}  {lo:>12.6g}")
            continue
        if np.isinf(lo):
            lines.append(f" MI BND       {cname:<8}")
        elif lo != 0:
            lines.append(f" LO BND       {cname:<8}  {lo:>12.6g}")
        if np.isfinite(hi):
            lines.append(f" UP BND       {cname:<8}  {hi:>12.6g}")
    lines.append("ENDATA")
    path.write_text("\n".join(lines) + "\n")
    return path
