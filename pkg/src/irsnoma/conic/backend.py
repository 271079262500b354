"""Clarabel backend.

Clarabel solves ``min qᵀx  s.t.  s = b − A x ∈ K`` over real cones.  Each
Hermitian block X = A + iB enters as n² real parameters and its PSD
constraint is imposed on the real embedding [[A, −B], [B, A]].
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import clarabel
import numpy as np
from scipy import sparse

from .program import HERMITIAN, Affine, ConicProgram

SQRT2 = np.sqrt(2.0)


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_ERROR = "numerical_error"


@dataclass
class SolveResult:
    status: Status
    scalars: np.ndarray = field(default_factory=lambda: np.zeros(0))
    blocks: list[np.ndarray] = field(default_factory=list)
    objective: float = float("nan")
    iterations: int = 0
    solve_time: float = 0.0
    raw_status: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def value(self, expr: Affine) -> float:
        return expr.evaluate(self.scalars, self.blocks)


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 200
    accept_almost: bool = True
    method: str = "auto"  # Clarabel direct_solve_method


class _Layout:
    """Positions of every block parameter in the global variable vector."""

    def __init__(self, prog: ConicProgram):
        self.prog = prog
        self.offsets = []
        off = prog.n_scalars
        self.iu = {}
        for b in prog.blocks:
            self.offsets.append(off)
            off += b.n_params
            if b.dim not in self.iu:
                self.iu[b.dim] = np.triu_indices(b.dim, 1)
        self.n = off

    def block_coeffs(self, b: int, coeff: np.ndarray) -> np.ndarray:
        """Coefficients of Re Tr(C X_b) on the parameters of block b."""
        blk = self.prog.blocks[b]
        n = blk.dim
        iu = self.iu[n]
        if blk.kind == HERMITIAN:
            cs = 0.5 * (coeff + coeff.conj().T)
            return np.concatenate([np.real(np.diag(cs)), 2 * cs.real[iu], 2 * cs.imag[iu]])
        cr = coeff.real
        return np.concatenate([np.diag(cr), (cr + cr.T)[iu]])

    def row(self, expr: Affine) -> tuple[np.ndarray, np.ndarray, float]:
        idx = list(expr.terms.keys())
        val = list(expr.terms.values())
        cols = [np.asarray(idx, dtype=int)]
        vals = [np.asarray(val, dtype=float)]
        for b, c in expr.blocks.items():
            coef = self.block_coeffs(b, c)
            cols.append(self.offsets[b] + np.arange(coef.size))
            vals.append(coef)
        return np.concatenate(cols), np.concatenate(vals), expr.const

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        scal = x[: self.prog.n_scalars].copy()
        mats = []
        for b, off in zip(self.prog.blocks, self.offsets):
            n = b.dim
            iu = self.iu[n]
            p = x[off: off + b.n_params]
            m = n * (n - 1) // 2
            if b.kind == HERMITIAN:
                X = np.zeros((n, n), complex)
                X[iu] = p[n: n + m] + 1j * p[n + m:]
                X = X + X.conj().T
            else:
                X = np.zeros((n, n))
                X[iu] = p[n: n + m]
                X = X + X.T
            X[np.diag_indices(n)] = p[:n]
            mats.append(X)
        return scal, mats

    def psd_rows(self, b: int):
        """(row, col, value) triplets, relative row numbering, of the svec
        of the (embedded) block; Clarabel takes upper triangles column-wise
        with off-diagonals scaled by √2."""
        blk = self.prog.blocks[b]
        n = blk.dim
        off = self.offsets[b]
        m = n * (n - 1) // 2
        pair = {}
        for t, (i, j) in enumerate(zip(*self.iu[n])):
            pair[(i, j)] = t

        def a_entry(i, j):  # Re X_ij
            if i == j:
                return off + i, 1.0
            i, j = min(i, j), max(i, j)
            return off + n + pair[(i, j)], 1.0

        def b_entry(i, j):  # Im X_ij
            if i == j:
                return None
            if i < j:
                return off + n + m + pair[(i, j)], 1.0
            return off + n + m + pair[(j, i)], -1.0

        if blk.kind == HERMITIAN:
            dim = 2 * n

            def entry(r, c):
                bi, i = divmod(r, n)
                bj, j = divmod(c, n)
                if bi == bj:
                    return a_entry(i, j)
                e = b_entry(i, j)
                if e is None:
                    return None
                return (e[0], -e[1]) if bi == 0 else e
        else:
            dim = n

            def entry(r, c):
                return a_entry(r, c)

        rows, cols, vals = [], [], []
        k = 0
        for c in range(dim):
            for r in range(c + 1):
                e = entry(r, c)
                if e is not None:
                    rows.append(k)
                    cols.append(e[0])
                    vals.append(e[1] * (1.0 if r == c else SQRT2))
                k += 1
        return dim, k, rows, cols, vals


def solve(prog: ConicProgram, settings: SolverSettings = SolverSettings()) -> SolveResult:
    """Solve ``prog`` (maximization).  Deterministic for identical inputs."""
    prog.validate()
    lay = _Layout(prog)
    A_rows, A_cols, A_vals, b = [], [], [], []
    cones = []
    nrow = 0

    def push_exprs(exprs):
        nonlocal nrow
        for e in exprs:
            cols, vals, const = lay.row(e)
            A_rows.append(np.full(cols.size, nrow))
            A_cols.append(cols)
            A_vals.append(-vals)
            b.append(const)
            nrow += 1

    def push_cone(cone):
        if cones and type(cone) is type(cones[-1]) and isinstance(
                cone, (clarabel.ZeroConeT, clarabel.NonnegativeConeT)):
            prev = cones.pop()
            cone = type(cone)(prev.dim + cone.dim)
        cones.append(cone)

    # Clarabel wants cones in row order; group zero/nonneg runs.
    for c in prog.constraints:
        if c.kind == "eq":
            push_exprs(c.exprs)
            push_cone(clarabel.ZeroConeT(1))
        elif c.kind == "nonneg":
            push_exprs(c.exprs)
            push_cone(clarabel.NonnegativeConeT(1))
        elif c.kind == "soc":
            push_exprs(c.exprs)
            cones.append(clarabel.SecondOrderConeT(len(c.exprs)))
        elif c.kind == "rsoc":
            x, y, *zs = c.exprs
            # x·y >= ‖z‖²  <=>  ‖(2z, x − y)‖ <= x + y
            push_exprs([x + y] + [2.0 * z for z in zs] + [x - y])
            cones.append(clarabel.SecondOrderConeT(len(zs) + 2))
        elif c.kind == "exp":
            push_exprs(c.exprs)
            cones.append(clarabel.ExponentialConeT())
        elif c.kind == "pow":
            push_exprs(c.exprs)
            cones.append(clarabel.PowerConeT(c.param))
        elif c.kind == "psd":
            dim, k, rows, cols, vals = lay.psd_rows(c.block)
            A_rows.append(np.asarray(rows, dtype=int) + nrow)
            A_cols.append(np.asarray(cols, dtype=int))
            A_vals.append(-np.asarray(vals))
            b.extend([0.0] * k)
            nrow += k
            cones.append(clarabel.PSDTriangleConeT(dim))

    n = lay.n
    A = sparse.csc_matrix(
        (np.concatenate(A_vals) if A_vals else np.zeros(0),
         (np.concatenate(A_rows) if A_rows else np.zeros(0, int),
          np.concatenate(A_cols) if A_cols else np.zeros(0, int))),
        shape=(nrow, n))
    q = np.zeros(n)
    cols, vals, const = lay.row(prog.objective)
    np.add.at(q, cols, -vals)
    P = sparse.csc_matrix((n, n))

    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_gap_abs = s.tol_gap_rel = s.tol_feas = settings.tol
    s.max_iter = settings.max_iter
    s.direct_solve_method = settings.method
    t0 = time.perf_counter()
    solver = clarabel.DefaultSolver(P, q, A, np.asarray(b, float), cones, s)
    sol = solver.solve()
    elapsed = time.perf_counter() - t0
    raw = str(sol.status)
    if raw.endswith("Solved") and (raw == "Solved" or settings.accept_almost):
        status = Status.OPTIMAL
    elif "PrimalInfeasible" in raw:
        status = Status.INFEASIBLE
    else:
        status = Status.NUMERICAL_ERROR
    x = np.asarray(sol.x, float)
    if status is not Status.OPTIMAL or not np.all(np.isfinite(x)):
        status = Status.INFEASIBLE if status is Status.INFEASIBLE else Status.NUMERICAL_ERROR
        return SolveResult(status, iterations=sol.iterations, solve_time=elapsed, raw_status=raw)
    scal, mats = lay.unpack(x)
    res = SolveResult(status, scal, mats, 0.0, sol.iterations, elapsed, raw)
    res.objective = res.value(prog.objective)
    return res
