"""Canonical conic programs and a residual-verified solve contract.

A :class:`ConicProgram` is the common target every optimization in this
package is lowered to: a linear objective, one linear-equality block, and a
list of cone blocks (nonnegative orthant, second-order cone, rotated
second-order cone).  :func:`solve_conic` hands the program to the Clarabel
interior-point solver and then re-derives primal/dual feasibility and the
duality gap from scratch before reporting a solution as optimal, so the
backend choice stays encapsulated behind the residual contract.

Convention: minimize c.x + offset subject to
    A_eq x = b_eq,
    for each block (G, h):  G x + h  in  cone.
A second-order cone row list (r_0, ..., r_k) means r_0 >= ||(r_1..r_k)||;
a rotated block (u, v, w_1..w_k) means 2 u v >= ||w||^2 with u, v >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

import clarabel

__all__ = [
    "ConeBlock",
    "ConicProgram",
    "ConicSolution",
    "Residuals",
    "ResidualReport",
    "ProgramBuilder",
    "SolverFailure",
    "solve_conic",
    "validate_solution",
]

NONNEG = "nonneg"
SOC = "soc"
RSOC = "rotated-soc"

DEFAULT_TOL = 1e-8


class SolverFailure(RuntimeError):
    """The conic backend did not return a usable solution."""


@dataclass(frozen=True)
class ConeBlock:
    """One cone constraint: ``matrix @ x + offset`` lies in the cone."""

    kind: str
    matrix: sparse.csr_matrix
    offset: np.ndarray

    def __post_init__(self):
        if self.kind not in (NONNEG, SOC, RSOC):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.matrix.shape[0] != self.offset.shape[0]:
            raise ValueError("cone block matrix/offset row mismatch")
        if self.kind == SOC and self.matrix.shape[0] < 2:
            raise ValueError("second-order cone blocks need dimension >= 2")
        if self.kind == RSOC and self.matrix.shape[0] < 3:
            raise ValueError("rotated cone blocks need dimension >= 3")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ConicProgram:
    """Immutable canonical form; see the module docstring for conventions."""

    num_vars: int
    objective: np.ndarray
    eq_matrix: sparse.csr_matrix
    eq_rhs: np.ndarray
    blocks: tuple[ConeBlock, ...]
    offset: float = 0.0

    def __post_init__(self):
        if self.objective.shape != (self.num_vars,):
            raise ValueError("objective length does not match variable count")
        if self.eq_matrix.shape != (self.eq_rhs.shape[0], self.num_vars):
            raise ValueError("equality block shape mismatch")
        for blk in self.blocks:
            if blk.matrix.shape[1] != self.num_vars:
                raise ValueError("cone block column count mismatch")


@dataclass(frozen=True)
class Residuals:
    """Scale-normalized optimality residuals, all nonnegative."""

    primal: float
    dual: float
    gap: float

    def max(self) -> float:
        return max(self.primal, self.dual, self.gap)


@dataclass(frozen=True)
class ConicSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "max-iter"
    primal: np.ndarray
    dual: np.ndarray
    objective: float
    residuals: Residuals
    certificate: np.ndarray | None = None


@dataclass
class ResidualReport:
    """Per-block violations recomputed from scratch by validate_solution."""

    entries: list[tuple[str, float]] = field(default_factory=list)
    tol: float = DEFAULT_TOL

    def add(self, name: str, violation: float) -> None:
        if violation > self.tol:
            self.entries.append((name, float(violation)))

    @property
    def ok(self) -> bool:
        return not self.entries


class ProgramBuilder:
    """Incrementally assemble a :class:`ConicProgram`.

    Affine rows are given as ``terms`` (iterables of (coefficient, var))
    plus a constant.  Example::

        b = ProgramBuilder()
        x = b.new_vars(2)
        t = b.new_var()
        b.add_cost(t, 1.0)
        b.add_soc([([(1.0, t)], 0.0), ([(1.0, x[0])], 0.0), ([(1.0, x[1])], 0.0)])
    """

    def __init__(self):
        self._num_vars = 0
        self._cost: dict[int, float] = {}
        self._offset = 0.0
        self._eq_rows: list[tuple[list, float]] = []
        self._nonneg_rows: list[tuple[list, float]] = []
        self._cone_blocks: list[tuple[str, list[tuple[list, float]]]] = []

    def new_var(self) -> int:
        self._num_vars += 1
        return self._num_vars - 1

    def new_vars(self, n: int) -> np.ndarray:
        start = self._num_vars
        self._num_vars += int(n)
        return np.arange(start, self._num_vars)

    @property
    def num_vars(self) -> int:
        return self._num_vars

    def add_cost(self, var: int, coeff: float) -> None:
        self._cost[int(var)] = self._cost.get(int(var), 0.0) + float(coeff)

    def add_cost_terms(self, terms: Iterable[tuple[float, int]]) -> None:
        for coeff, var in terms:
            self.add_cost(var, coeff)

    def add_offset(self, value: float) -> None:
        self._offset += float(value)

    def add_eq(self, terms: Iterable[tuple[float, int]], rhs: float = 0.0) -> None:
        """sum(coeff * x[var]) == rhs."""
        self._eq_rows.append((list(terms), float(rhs)))

    def add_nonneg(self, terms: Iterable[tuple[float, int]], const: float = 0.0) -> None:
        """sum(coeff * x[var]) + const >= 0."""
        self._nonneg_rows.append((list(terms), float(const)))

    def add_soc(self, rows: Sequence[tuple[Iterable[tuple[float, int]], float]]) -> None:
        """rows[0] >= || rows[1:] || for affine rows (terms, const)."""
        self._cone_blocks.append((SOC, [(list(t), float(c)) for t, c in rows]))

    def add_rsoc(self, rows: Sequence[tuple[Iterable[tuple[float, int]], float]]) -> None:
        """2 * rows[0] * rows[1] >= || rows[2:] ||^2 with rows[0], rows[1] >= 0."""
        self._cone_blocks.append((RSOC, [(list(t), float(c)) for t, c in rows]))

    @staticmethod
    def _stack(rows: list[tuple[list, float]], n: int) -> tuple[sparse.csr_matrix, np.ndarray]:
        data, ri, ci = [], [], []
        consts = np.zeros(len(rows))
        for r, (terms, const) in enumerate(rows):
            consts[r] = const
            for coeff, var in terms:
                data.append(float(coeff))
                ri.append(r)
                ci.append(int(var))
        mat = sparse.coo_matrix((data, (ri, ci)), shape=(len(rows), n)).tocsr()
        return mat, consts

    def build(self) -> ConicProgram:
        n = self._num_vars
        cost = np.zeros(n)
        for var, coeff in self._cost.items():
            cost[var] = coeff
        eq_mat, _ = self._stack([(terms, 0.0) for terms, _ in self._eq_rows], n)
        eq_rhs = np.array([rhs for _, rhs in self._eq_rows])
        blocks = []
        if self._nonneg_rows:
            mat, consts = self._stack(self._nonneg_rows, n)
            blocks.append(ConeBlock(NONNEG, mat, consts))
        for kind, rows in self._cone_blocks:
            mat, consts = self._stack(rows, n)
            blocks.append(ConeBlock(kind, mat, consts))
        return ConicProgram(
            num_vars=n,
            objective=cost,
            eq_matrix=eq_mat,
            eq_rhs=eq_rhs,
            blocks=tuple(blocks),
            offset=self._offset,
        )


def _rsoc_to_soc(matrix: sparse.csr_matrix, offset: np.ndarray):
    """Map (u, v, w) with 2uv >= ||w||^2 onto (u+v, u-v, sqrt(2) w) in SOC."""
    m = matrix.tolil()
    u, v, w = m[0], m[1], m[2:]
    top = (u + v).tocsr()
    mid = (u - v).tocsr()
    rest = (w * np.sqrt(2.0)).tocsr()
    mat = sparse.vstack([top, mid, rest]).tocsr()
    off = np.concatenate(
        [[offset[0] + offset[1]], [offset[0] - offset[1]], np.sqrt(2.0) * offset[2:]]
    )
    return mat, off


def _to_backend(program: ConicProgram):
    """Stack the program into Clarabel's  A x + s = b, s in K  layout."""
    mats = [program.eq_matrix]
    rhs = [program.eq_rhs]
    cones = [clarabel.ZeroConeT(program.eq_rhs.shape[0])]
    for blk in program.blocks:
        if blk.kind == RSOC:
            mat, off = _rsoc_to_soc(blk.matrix, blk.offset)
        else:
            mat, off = blk.matrix, blk.offset
        # want G x + h in K, backend wants s = b - A x in K: A = -G, b = h
        mats.append(-mat)
        rhs.append(off)
        if blk.kind == NONNEG:
            cones.append(clarabel.NonnegativeConeT(blk.dim))
        else:
            cones.append(clarabel.SecondOrderConeT(mat.shape[0]))
    a = sparse.vstack(mats).tocsc()
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return a, b, cones


def _soc_violation(s: np.ndarray) -> float:
    return max(0.0, float(np.linalg.norm(s[1:]) - s[0]))


def _block_violation(kind: str, s: np.ndarray) -> float:
    if kind == NONNEG:
        return max(0.0, float(-np.min(s))) if s.size else 0.0
    if kind == SOC:
        return _soc_violation(s)
    # rotated: check through the self-dual SOC image
    u, v, w = s[0], s[1], s[2:]
    img = np.concatenate([[u + v], [u - v], np.sqrt(2.0) * w])
    return _soc_violation(img)


def _residuals(program: ConicProgram, x: np.ndarray, z: np.ndarray) -> Residuals:
    """Recompute normalized residuals from the raw program data."""
    c = program.objective
    neq = program.eq_rhs.shape[0]
    scale_b = 1.0 + max(
        float(np.max(np.abs(program.eq_rhs))) if neq else 0.0,
        max((float(np.max(np.abs(b.offset))) for b in program.blocks if b.dim), default=0.0),
    )
    # backend convention: dual feasibility c + A_eq' y - sum G' z = 0,
    # dual objective -b_eq.y - sum h.z  (verified against Clarabel)
    primal = 0.0
    if neq:
        primal = float(np.max(np.abs(program.eq_matrix @ x - program.eq_rhs)))
    dual_vec = c.copy()
    if neq:
        dual_vec += program.eq_matrix.T @ z[:neq]
    pos = neq
    dual_cone = 0.0
    dual_obj = -float(program.eq_rhs @ z[:neq]) if neq else 0.0
    for blk in program.blocks:
        zi = z[pos : pos + blk.dim]
        pos += blk.dim
        s = blk.matrix @ x + blk.offset
        primal = max(primal, _block_violation(blk.kind, s))
        if blk.kind == RSOC:
            mat, off = _rsoc_to_soc(blk.matrix, blk.offset)
        else:
            mat, off = blk.matrix, blk.offset
        dual_vec -= mat.T @ zi
        dual_cone = max(dual_cone, _block_violation(NONNEG if blk.kind == NONNEG else SOC, zi))
        dual_obj -= float(off @ zi)
    pobj = float(c @ x)
    dual = max(float(np.max(np.abs(dual_vec))) if dual_vec.size else 0.0, dual_cone)
    gap = abs(pobj - dual_obj) / (1.0 + abs(pobj) + abs(dual_obj))
    scale_c = 1.0 + float(np.max(np.abs(c))) if c.size else 1.0
    return Residuals(primal=primal / scale_b, dual=dual / scale_c, gap=gap)


def dual_objective(program: ConicProgram, z: np.ndarray) -> float:
    """Lagrangian dual value of a stacked multiplier vector."""
    neq = program.eq_rhs.shape[0]
    val = -float(program.eq_rhs @ z[:neq]) if neq else 0.0
    pos = neq
    for blk in program.blocks:
        zi = z[pos : pos + blk.dim]
        pos += blk.dim
        off = _rsoc_to_soc(blk.matrix, blk.offset)[1] if blk.kind == RSOC else blk.offset
        val -= float(off @ zi)
    return val + program.offset


def solve_conic(program: ConicProgram, tol: float = DEFAULT_TOL) -> ConicSolution:
    """Solve the program, verifying optimality residuals independently.

    A solution is reported as ``optimal`` only when primal feasibility, dual
    feasibility, and the relative duality gap, all recomputed here from the
    raw program data, come in at or below ``tol``.  Infeasible and unbounded
    statuses carry the backend's certificate direction.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if program.num_vars == 0:
        infeas = max(
            (float(np.max(np.abs(program.eq_rhs))) if program.eq_rhs.size else 0.0),
            max((_block_violation(b.kind, b.offset) for b in program.blocks), default=0.0),
        )
        status = "optimal" if infeas <= tol else "infeasible"
        return ConicSolution(
            status=status,
            primal=np.zeros(0),
            dual=np.zeros(0),
            objective=program.offset,
            residuals=Residuals(infeas, 0.0, 0.0),
        )

    a, b, cones = _to_backend(program)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_threads = 1  # deterministic solves
    inner = min(tol, 1e-8)
    settings.tol_feas = inner * 0.2
    settings.tol_gap_abs = inner * 0.2
    settings.tol_gap_rel = inner * 0.2
    solver = clarabel.DefaultSolver(
        sparse.csc_matrix((program.num_vars, program.num_vars)),
        program.objective,
        a,
        b,
        cones,
        settings,
    )
    raw = solver.solve()
    status = str(raw.status)
    x = np.asarray(raw.x)
    z = np.asarray(raw.z)

    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution(
            status="infeasible",
            primal=x,
            dual=z,
            objective=float("inf"),
            residuals=Residuals(float("inf"), 0.0, 0.0),
            certificate=z,
        )
    if status in ("DualInfeasible", "AlmostDualInfeasible"):
        return ConicSolution(
            status="unbounded",
            primal=x,
            dual=z,
            objective=float("-inf"),
            residuals=Residuals(0.0, float("inf"), 0.0),
            certificate=x,
        )
    if status not in ("Solved", "AlmostSolved"):
        return ConicSolution(
            status="max-iter",
            primal=x,
            dual=z,
            objective=float(program.objective @ x) + program.offset,
            residuals=Residuals(float("inf"), float("inf"), float("inf")),
        )

    res = _residuals(program, x, z)
    ok = res.max() <= tol
    return ConicSolution(
        status="optimal" if ok else "max-iter",
        primal=x,
        dual=z,
        objective=float(program.objective @ x) + program.offset,
        residuals=res,
    )


def dump_program(program: ConicProgram, path) -> None:
    """Debug dump of the canonical form as JSON, for external cross-checks."""
    import json

    def rows(mat: sparse.csr_matrix) -> list:
        coo = mat.tocoo()
        return [[int(r), int(c), float(v)] for r, c, v in zip(coo.row, coo.col, coo.data)]

    payload = {
        "num_vars": program.num_vars,
        "objective": program.objective.tolist(),
        "offset": program.offset,
        "equality": {"rows": rows(program.eq_matrix), "rhs": program.eq_rhs.tolist()},
        "blocks": [
            {"kind": blk.kind, "rows": rows(blk.matrix), "offset": blk.offset.tolist()}
            for blk in program.blocks
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def validate_solution(
    program: ConicProgram, solution: ConicSolution, tol: float = DEFAULT_TOL
) -> ResidualReport:
    """Recompute every residual from scratch and list violated blocks."""
    report = ResidualReport(tol=tol)
    if program.num_vars == 0:
        return report
    x = solution.primal
    neq = program.eq_rhs.shape[0]
    if neq:
        report.add("equality", float(np.max(np.abs(program.eq_matrix @ x - program.eq_rhs))))
    for i, blk in enumerate(program.blocks):
        s = blk.matrix @ x + blk.offset
        report.add(f"block[{i}]:{blk.kind}", _block_violation(blk.kind, s))
    if solution.dual.shape == (neq + sum(b.dim for b in program.blocks),):
        res = _residuals(program, x, solution.dual)
        report.add("dual-feasibility", res.dual)
        report.add("duality-gap", res.gap)
    return report
