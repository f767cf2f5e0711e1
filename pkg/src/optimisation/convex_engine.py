"""
Convex Subproblem Engine

Primal log-barrier interior-point solver for the small smooth programs produced
by the SCA optimiser:

    maximise    sum_j w_j log(1 + a_j.x + b_j) + c.x + offset
    subject to  x'Px + q.x + r <= 0      (P positive semidefinite)
                a.x + b <= 0,  a.x + b == 0
                ||Ax + b|| <= c.x + d
                lower <= x <= upper

Complex decision vectors enter through the interleaved real embedding
[re(z0), im(z0), re(z1), ...]; helpers below build the real rows and quadratic
forms of the usual complex expressions.
"""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from src.exceptions import NonConvexProgramError

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-9
INITIAL_BARRIER = 1.0
BARRIER_REDUCTION = 0.2
ARMIJO_ALPHA = 0.01
BACKTRACK_BETA = 0.5
MAX_NEWTON_PER_STAGE = 50
MAX_NEWTON_TOTAL = 500
MIN_STEP = 1e-14
EXTRA_STAGES = 3
CENTRING_TOLERANCE = 1e-16
QUADRATIC_REGION = 1e-2


# --------------------------------------------------------------------------
# Real embedding of complex expressions
# --------------------------------------------------------------------------

def embed_complex(z):
    """Interleave real and imaginary parts: [re0, im0, re1, im1, ...]."""
    z = np.asarray(z, dtype=complex).ravel()
    x = np.empty(2 * z.size)
    x[0::2] = z.real
    x[1::2] = z.imag
    return x


def lift_real(x):
    """Inverse of embed_complex."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size % 2:
        raise ValueError(f"real embedding needs an even length, got {x.size}")
    return x[0::2] + 1j * x[1::2]


def real_part_row(c):
    """Row r with r . embed_complex(v) == Re(c^T v)."""
    return embed_complex(np.conj(c))


def imag_part_row(c):
    """Row r with r . embed_complex(v) == Im(c^T v)."""
    c = np.asarray(c, dtype=complex).ravel()
    row = np.empty(2 * c.size)
    row[0::2] = c.imag
    row[1::2] = c.real
    return row


def squared_modulus_form(c, d=0.0):
    """(P, q, r) with x'Px + q.x + r == |c^T v + d|^2 for x = embed_complex(v)."""
    r1 = real_part_row(c)
    r2 = imag_part_row(c)
    d = complex(d)
    P = np.outer(r1, r1) + np.outer(r2, r2)
    q = 2.0 * (d.real * r1 + d.imag * r2)
    return P, q, abs(d) ** 2


# --------------------------------------------------------------------------
# Program description
# --------------------------------------------------------------------------

@dataclass
class QuadraticConstraint:
    P: np.ndarray
    q: np.ndarray
    r: float
    name: str

    def value(self, x):
        return float(x @ self.P @ x + self.q @ x + self.r)

    def gradient(self, x):
        return 2.0 * self.P @ x + self.q


@dataclass
class NormConeConstraint:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    name: str

    def parts(self, x):
        return self.A @ x + self.b, float(self.c @ x + self.d)

    def value(self, x):
        u, t = self.parts(x)
        return float(np.linalg.norm(u) - t)

    def gradient(self, x):
        u, _ = self.parts(x)
        norm = np.linalg.norm(u)
        grad = -self.c.copy()
        if norm > 0:
            grad += self.A.T @ u / norm
        return grad


@dataclass
class _Compiled:
    log_rows: np.ndarray
    log_offsets: np.ndarray
    log_weights: np.ndarray
    affine_rows: np.ndarray
    affine_offsets: np.ndarray
    equality_rows: np.ndarray
    equality_offsets: np.ndarray


class ConvexProgram:
    """
    A maximisation problem with a concave objective and convex constraints on a
    real vector of length ``dim``. Convexity of every quadratic constraint is
    checked when it is added.
    """

    def __init__(self, dim, name="program", warm_start=None):
        if dim < 1:
            raise ValueError(f"program dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.name = name
        self.warm_start = None if warm_start is None else self._vector(warm_start, "warm start")
        self.quadratics = []
        self.cones = []
        self._log_rows, self._log_offsets, self._log_weights = [], [], []
        self._affine_rows, self._affine_offsets, self._affine_names = [], [], []
        self._equality_rows, self._equality_offsets, self._equality_names = [], [], []
        self._linear = np.zeros(self.dim)
        self._offset = 0.0
        self._cache = None

    def _vector(self, values, label):
        vector = np.asarray(values, dtype=float).ravel()
        if vector.shape != (self.dim,):
            raise ValueError(f"{label} must have length {self.dim}, got shape {vector.shape}")
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"{label} contains non-finite entries")
        return vector

    # ---------------------------------------------------------------- builders

    def add_log_term(self, a, b=0.0, weight=1.0):
        """Add weight * log(1 + a.x + b) to the objective."""
        if weight < 0:
            raise NonConvexProgramError(f"log term weight must be nonnegative, got {weight}")
        self._log_rows.append(self._vector(a, "log term row"))
        self._log_offsets.append(float(b))
        self._log_weights.append(float(weight))
        self._cache = None

    def add_linear_objective(self, c, offset=0.0):
        self._linear = self._linear + self._vector(c, "linear objective")
        self._offset += float(offset)

    def add_quadratic(self, P, q, r, name="quadratic"):
        """Add x'Px + q.x + r <= 0; P must be positive semidefinite."""
        P = np.asarray(P, dtype=float)
        if P.shape != (self.dim, self.dim):
            raise ValueError(f"quadratic {name!r} needs a {self.dim}x{self.dim} matrix, got {P.shape}")
        P = 0.5 * (P + P.T)
        eigenvalues = linalg.eigvalsh(P)
        scale = max(1.0, float(np.max(np.abs(eigenvalues))))
        if eigenvalues[0] < -PSD_TOLERANCE * scale:
            raise NonConvexProgramError(
                f"constraint {name!r} is not convex: smallest eigenvalue {eigenvalues[0]:.3e}"
            )
        self.quadratics.append(QuadraticConstraint(P, self._vector(q, f"{name} linear part"), float(r), name))

    def add_affine(self, a, b, name="affine"):
        """Add a.x + b <= 0."""
        self._affine_rows.append(self._vector(a, f"{name} row"))
        self._affine_offsets.append(float(b))
        self._affine_names.append(name)
        self._cache = None

    def add_equality(self, a, b, name="equality"):
        """Add a.x + b == 0."""
        self._equality_rows.append(self._vector(a, f"{name} row"))
        self._equality_offsets.append(float(b))
        self._equality_names.append(name)
        self._cache = None

    def add_bounds(self, lower=None, upper=None, name="bound"):
        """Box bounds; infinite or None entries are skipped."""
        lower = np.full(self.dim, -np.inf) if lower is None else np.broadcast_to(np.asarray(lower, float), (self.dim,))
        upper = np.full(self.dim, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, float), (self.dim,))
        for i in range(self.dim):
            if lower[i] > upper[i]:
                raise ValueError(f"{name}[{i}]: lower bound {lower[i]} exceeds upper bound {upper[i]}")
            if np.isfinite(lower[i]):
                row = np.zeros(self.dim)
                row[i] = -1.0
                self.add_affine(row, lower[i], f"{name}_lower[{i}]")
            if np.isfinite(upper[i]):
                row = np.zeros(self.dim)
                row[i] = 1.0
                self.add_affine(row, -upper[i], f"{name}_upper[{i}]")

    def add_norm_cone(self, A, b, c, d, name="cone"):
        """Add ||Ax + b|| <= c.x + d."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[1] != self.dim:
            raise ValueError(f"cone {name!r} needs {self.dim} columns, got {A.shape}")
        b = np.asarray(b, dtype=float).ravel()
        if b.shape != (A.shape[0],):
            raise ValueError(f"cone {name!r}: offset length {b.shape} does not match {A.shape[0]} rows")
        self.cones.append(NormConeConstraint(A, b, self._vector(c, f"{name} row"), float(d), name))

    # ---------------------------------------------------------------- queries

    def _compiled(self):
        if self._cache is None:
            n = self.dim
            self._cache = _Compiled(
                log_rows=np.array(self._log_rows, dtype=float).reshape(-1, n),
                log_offsets=np.array(self._log_offsets, dtype=float),
                log_weights=np.array(self._log_weights, dtype=float),
                affine_rows=np.array(self._affine_rows, dtype=float).reshape(-1, n),
                affine_offsets=np.array(self._affine_offsets, dtype=float),
                equality_rows=np.array(self._equality_rows, dtype=float).reshape(-1, n),
                equality_offsets=np.array(self._equality_offsets, dtype=float),
            )
        return self._cache

    @property
    def barrier_degree(self):
        """Number of barrier terms, cones counting twice."""
        return len(self.quadratics) + len(self._affine_rows) + 2 * len(self.cones)

    @property
    def num_inequalities(self):
        return len(self.quadratics) + len(self._affine_rows) + len(self.cones)

    @property
    def constraint_names(self):
        """Names in the order of inequality_values."""
        return ([q.name for q in self.quadratics] + list(self._affine_names)
                + [cone.name for cone in self.cones])

    def constraint_index(self, name):
        return self.constraint_names.index(name)

    @property
    def equality_matrix(self):
        return self._compiled().equality_rows

    def log_arguments(self, x):
        compiled = self._compiled()
        return 1.0 + compiled.log_rows @ x + compiled.log_offsets

    def objective_value(self, x):
        compiled = self._compiled()
        args = self.log_arguments(x)
        if np.any(args <= 0):
            return -np.inf
        return float(compiled.log_weights @ np.log(args) + self._linear @ x + self._offset)

    def objective_gradient(self, x):
        compiled = self._compiled()
        args = self.log_arguments(x)
        return compiled.log_rows.T @ (compiled.log_weights / args) + self._linear

    def objective_hessian(self, x):
        compiled = self._compiled()
        args = self.log_arguments(x)
        return -(compiled.log_rows.T * (compiled.log_weights / args ** 2)) @ compiled.log_rows

    def inequality_values(self, x):
        """g_i(x) for every inequality g_i(x) <= 0; cones report ||u|| - t."""
        compiled = self._compiled()
        return np.concatenate([
            [q.value(x) for q in self.quadratics],
            compiled.affine_rows @ x + compiled.affine_offsets,
            [cone.value(x) for cone in self.cones],
        ])

    def inequality_jacobian(self, x):
        compiled = self._compiled()
        rows = [q.gradient(x) for q in self.quadratics]
        rows.extend(compiled.affine_rows)
        rows.extend(cone.gradient(x) for cone in self.cones)
        return np.array(rows, dtype=float).reshape(-1, self.dim)

    def equality_residuals(self, x):
        compiled = self._compiled()
        return compiled.equality_rows @ x + compiled.equality_offsets

    def max_violation(self, x):
        """Largest constraint violation at x (zero when feasible)."""
        values = np.concatenate([self.inequality_values(x), np.abs(self.equality_residuals(x)), [0.0]])
        return float(np.max(values))

    def _raw_infeasibility(self, x):
        values = np.concatenate([self.inequality_values(x), -self.log_arguments(x)])
        return float(np.max(values)) if values.size else -np.inf

    def strictly_feasible(self, x, equality_tolerance=1e-8):
        compiled = self._compiled()
        if np.any(self.log_arguments(x) <= 0):
            return False
        if np.any(compiled.affine_rows @ x + compiled.affine_offsets >= 0):
            return False
        if any(q.value(x) >= 0 for q in self.quadratics):
            return False
        for cone in self.cones:
            u, t = cone.parts(x)
            if t <= 0 or t * t - u @ u <= 0:
                return False
        residuals = self.equality_residuals(x)
        return bool(np.all(np.abs(residuals) <= equality_tolerance * (1.0 + np.abs(compiled.equality_offsets))))

    def _barrier(self, x, t, derivatives=True):
        """
        Value (and gradient, Hessian) of -t f0(x) - sum log(-g_i(x)); +inf
        outside the strict domain.
        """
        compiled = self._compiled()
        n = self.dim
        args = self.log_arguments(x)
        slack = -(compiled.affine_rows @ x + compiled.affine_offsets)
        if np.any(args <= 0) or np.any(slack <= 0):
            return np.inf, None, None
        value = -t * (compiled.log_weights @ np.log(args) + self._linear @ x + self._offset)
        value -= np.sum(np.log(slack))
        grad = hess = None
        if derivatives:
            grad = -t * (compiled.log_rows.T @ (compiled.log_weights / args) + self._linear)
            grad += compiled.affine_rows.T @ (1.0 / slack)
            hess = t * (compiled.log_rows.T * (compiled.log_weights / args ** 2)) @ compiled.log_rows
            hess += (compiled.affine_rows.T * (1.0 / slack ** 2)) @ compiled.affine_rows
        for quadratic in self.quadratics:
            g = quadratic.value(x)
            if g >= 0:
                return np.inf, None, None
            value -= np.log(-g)
            if derivatives:
                dg = quadratic.gradient(x)
                grad += dg / -g
                hess += np.outer(dg, dg) / g ** 2 + 2.0 * quadratic.P / -g
        for cone in self.cones:
            u, tc = cone.parts(x)
            psi = tc * tc - u @ u
            if tc <= 0 or psi <= 0:
                return np.inf, None, None
            value -= np.log(psi)
            if derivatives:
                dpsi = 2.0 * tc * cone.c - 2.0 * cone.A.T @ u
                grad -= dpsi / psi
                hess += np.outer(dpsi, dpsi) / psi ** 2 - (2.0 * np.outer(cone.c, cone.c) - 2.0 * cone.A.T @ cone.A) / psi
        return float(value), grad, hess

    def phase_one(self):
        """
        Feasibility program over [x, s]: minimise s subject to every inequality
        relaxed by s, log arguments kept positive, equalities kept and s >= -1.
        """
        n = self.dim
        aux = ConvexProgram(n + 1, name=f"{self.name}/phase-one")
        objective = np.zeros(n + 1)
        objective[-1] = -1.0
        aux.add_linear_objective(objective)
        for quadratic in self.quadratics:
            P = np.zeros((n + 1, n + 1))
            P[:n, :n] = quadratic.P
            aux.quadratics.append(QuadraticConstraint(P, np.append(quadratic.q, -1.0), quadratic.r, quadratic.name))
        for row, offset, name in zip(self._affine_rows, self._affine_offsets, self._affine_names):
            aux.add_affine(np.append(row, -1.0), offset, name)
        for j, (row, offset) in enumerate(zip(self._log_rows, self._log_offsets)):
            aux.add_affine(np.append(-row, -1.0), -(1.0 + offset), f"log_domain[{j}]")
        for cone in self.cones:
            A = np.hstack([cone.A, np.zeros((cone.A.shape[0], 1))])
            aux.add_norm_cone(A, cone.b, np.append(cone.c, 1.0), cone.d, cone.name)
        for row, offset, name in zip(self._equality_rows, self._equality_offsets, self._equality_names):
            aux.add_equality(np.append(row, 0.0), offset, name)
        floor = np.zeros(n + 1)
        floor[-1] = -1.0
        aux.add_affine(floor, -1.0, "slack_floor")
        return aux

    def describe(self):
        """Plain-text listing of the program for debugging."""
        compiled = self._compiled()
        lines = [f"program {self.name}: dim={self.dim} log_terms={len(self._log_weights)} "
                 f"inequalities={self.num_inequalities} equalities={len(self._equality_rows)}",
                 "maximise"]
        for j in range(len(self._log_weights)):
            lines.append(f"  {compiled.log_weights[j]:.6g} * log(1 + {_sparse(compiled.log_rows[j])} "
                         f"+ {compiled.log_offsets[j]:.6g})")
        lines.append(f"  + {_sparse(self._linear)} + {self._offset:.6g}")
        lines.append("subject to")
        for quadratic in self.quadratics:
            lines.append(f"  [quadratic] {quadratic.name}: x'Px (nnz={np.count_nonzero(quadratic.P)}) "
                         f"+ {_sparse(quadratic.q)} + {quadratic.r:.6g} <= 0")
        for row, offset, name in zip(self._affine_rows, self._affine_offsets, self._affine_names):
            lines.append(f"  [affine] {name}: {_sparse(row)} + {offset:.6g} <= 0")
        for cone in self.cones:
            lines.append(f"  [cone] {cone.name}: ||A x + b|| (rows={cone.A.shape[0]}) "
                         f"<= {_sparse(cone.c)} + {cone.d:.6g}")
        for row, offset, name in zip(self._equality_rows, self._equality_offsets, self._equality_names):
            lines.append(f"  [equality] {name}: {_sparse(row)} + {offset:.6g} == 0")
        return "\n".join(lines)


def _sparse(vector):
    entries = [f"{value:.6g}*x{i}" for i, value in enumerate(vector) if value != 0]
    return " + ".join(entries) if entries else "0"


# --------------------------------------------------------------------------
# Solver
# --------------------------------------------------------------------------

class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolveOutcome:
    status: SolveStatus
    x_star: np.ndarray
    objective_value: float
    kkt_residual: float
    iterations: int
    phase_one_iterations: int = 0
    gap_history: list = field(default_factory=list)
    message: str = ""

    @property
    def usable(self):
        """A strictly interior point was reached, possibly short of full accuracy."""
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.ITERATION_LIMIT)


@dataclass
class _BarrierRun:
    x: np.ndarray
    status: SolveStatus
    gaps: list
    steps: int
    kkt: float
    stopped_early: bool = False


class _NumericalBreakdown(Exception):
    pass


def _cholesky(matrix):
    if not np.all(np.isfinite(matrix)):
        raise _NumericalBreakdown("non-finite Hessian")
    n = matrix.shape[0]
    scale = max(1.0, float(np.max(np.abs(np.diag(matrix)))))
    shift = 0.0
    for _ in range(12):
        try:
            return linalg.cho_factor(matrix + shift * np.eye(n), lower=True)
        except linalg.LinAlgError:
            shift = 1e-12 * scale if shift == 0.0 else shift * 100.0
    raise _NumericalBreakdown("Hessian could not be factorised")


def _newton_direction(hessian, gradient, equality_rows):
    factor = _cholesky(hessian)
    h_grad = linalg.cho_solve(factor, gradient)
    if equality_rows.shape[0] == 0:
        return -h_grad
    h_eq = linalg.cho_solve(factor, equality_rows.T)
    schur = equality_rows @ h_eq
    multipliers = np.linalg.lstsq(schur, -(equality_rows @ h_grad), rcond=None)[0]
    return -(h_grad + h_eq @ multipliers)


class InteriorPointSolver:
    """Barrier method with Newton centring, phase-one start and warm starts."""

    def __init__(self, tolerance=1e-6, max_newton_per_stage=MAX_NEWTON_PER_STAGE,
                 max_newton_total=MAX_NEWTON_TOTAL):
        if tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {tolerance}")
        self.tolerance = tolerance
        self.max_newton_per_stage = max_newton_per_stage
        self.max_newton_total = max_newton_total

    def solve(self, program, warm_start=None):
        start = program.warm_start if warm_start is None else np.asarray(warm_start, dtype=float)
        self._phase_one_steps = 0
        try:
            outcome = self._solve(program, start)
        except (_NumericalBreakdown, linalg.LinAlgError, FloatingPointError) as exc:
            logger.debug("Numerical failure on %s: %s", program.name, exc)
            fallback = np.zeros(program.dim) if start is None else np.array(start, dtype=float)
            outcome = SolveOutcome(SolveStatus.NUMERICAL_FAILURE, fallback, float("nan"), float("inf"), 0,
                                   self._phase_one_steps, message=str(exc))
        logger.debug("Solved %s: status=%s value=%.6g kkt=%.2e newton=%d (+%d phase one)",
                     program.name, outcome.status.value, outcome.objective_value, outcome.kkt_residual,
                     outcome.iterations, outcome.phase_one_iterations)
        return outcome

    def _solve(self, program, start):
        candidates = []
        if start is not None:
            candidates.append(self._project_equalities(program, start))
        candidates.append(self._project_equalities(program, np.zeros(program.dim)))
        for x0 in candidates:
            if program.strictly_feasible(x0):
                return self._phase_two(program, x0)
            interior = self._phase_one(program, x0)
            if interior is not None:
                return self._phase_two(program, interior)
            logger.debug("Phase one on %s found no interior point", program.name)
        return SolveOutcome(SolveStatus.INFEASIBLE, candidates[0], float("nan"), float("inf"), 0,
                            self._phase_one_steps, message="no strictly feasible point")

    @staticmethod
    def _project_equalities(program, x):
        x = np.array(x, dtype=float).ravel()
        if x.shape != (program.dim,):
            raise ValueError(f"start point must have length {program.dim}, got {x.shape}")
        rows = program.equality_matrix
        if rows.shape[0] == 0:
            return x
        correction = np.linalg.lstsq(rows, program.equality_residuals(x), rcond=None)[0]
        return x - correction

    def _phase_one(self, program, x0):
        aux = program.phase_one()
        slack = max(program._raw_infeasibility(x0), -0.5) + 1.0
        run = self._barrier_method(aux, np.append(x0, slack), stop=lambda y: program.strictly_feasible(y[:-1]))
        self._phase_one_steps += run.steps
        candidate = run.x[:-1]
        return candidate if program.strictly_feasible(candidate) else None

    def _phase_two(self, program, x0):
        run = self._barrier_method(program, x0)
        status = run.status
        if status is SolveStatus.OPTIMAL and program.max_violation(run.x) > self.tolerance:
            status = SolveStatus.NUMERICAL_FAILURE
        return SolveOutcome(status, run.x, program.objective_value(run.x), run.kkt, run.steps,
                            self._phase_one_steps, gap_history=run.gaps)

    def _barrier_method(self, program, x, stop=None):
        degree = program.barrier_degree
        equality_rows = program.equality_matrix
        mu = INITIAL_BARRIER
        gaps, steps, extra = [], 0, 0
        while True:
            x, used, early = self._centre(program, x, 1.0 / mu, equality_rows,
                                          self.max_newton_total - steps, stop)
            steps += used
            if early:
                return _BarrierRun(x, SolveStatus.OPTIMAL, gaps, steps, float("nan"), stopped_early=True)
            f0 = program.objective_value(x)
            if not np.isfinite(f0) or not np.all(np.isfinite(x)):
                raise _NumericalBreakdown("non-finite iterate")
            gap = degree * mu
            gaps.append(gap)
            kkt = self._kkt_residual(program, x, mu, equality_rows, f0, gap)
            if gap / max(1.0, abs(f0)) <= self.tolerance:
                if kkt <= self.tolerance:
                    return _BarrierRun(x, SolveStatus.OPTIMAL, gaps, steps, kkt)
                if extra >= EXTRA_STAGES:
                    return _BarrierRun(x, SolveStatus.ITERATION_LIMIT, gaps, steps, kkt)
                extra += 1
            if steps >= self.max_newton_total:
                return _BarrierRun(x, SolveStatus.ITERATION_LIMIT, gaps, steps, kkt)
            mu *= BARRIER_REDUCTION

    def _centre(self, program, x, t, equality_rows, budget, stop):
        """
        Newton's method on the barrier at parameter t. Inside the quadratic
        region full steps are taken without a line search, since the barrier
        value changes there are below roundoff; a decrement that stops shrinking
        marks the attainable accuracy.
        """
        used = 0
        previous = np.inf
        for _ in range(max(0, min(self.max_newton_per_stage, budget))):
            value, grad, hess = program._barrier(x, t)
            if not np.isfinite(value):
                raise _NumericalBreakdown("iterate left the barrier domain")
            direction = _newton_direction(hess, grad, equality_rows)
            decrement = -float(grad @ direction)
            if not np.isfinite(decrement):
                raise _NumericalBreakdown("non-finite Newton direction")
            if decrement <= CENTRING_TOLERANCE:
                break
            step = None
            if decrement < QUADRATIC_REGION:
                if decrement > 0.5 * previous:
                    break
                previous = decrement
                trial, _, _ = program._barrier(x + direction, t, derivatives=False)
                if np.isfinite(trial):
                    step = 1.0
            else:
                previous = np.inf
            if step is None:
                step = self._backtrack(program, x, direction, t, value, -decrement)
                if step is None:
                    # stalled: accept the current point as centred
                    return x, used, False
            x = x + step * direction
            used += 1
            if stop is not None and stop(x):
                return x, used, True
        return x, used, False

    @staticmethod
    def _backtrack(program, x, direction, t, value, slope):
        """Armijo step length along direction, or None below MIN_STEP."""
        step = 1.0
        trial, _, _ = program._barrier(x + direction, t, derivatives=False)
        while trial > value + ARMIJO_ALPHA * step * slope:
            step *= BACKTRACK_BETA
            if step < MIN_STEP:
                return None
            trial, _, _ = program._barrier(x + step * direction, t, derivatives=False)
        return step

    @staticmethod
    def _kkt_residual(program, x, mu, equality_rows, f0, gap):
        objective_grad = program.objective_gradient(x)
        _, barrier_grad, _ = program._barrier(x, 0.0)
        residual = -objective_grad + mu * barrier_grad
        if equality_rows.shape[0]:
            multipliers = np.linalg.lstsq(equality_rows.T, -residual, rcond=None)[0]
            residual = residual + equality_rows.T @ multipliers
        stationarity = float(np.max(np.abs(residual))) / max(1.0, float(np.max(np.abs(objective_grad))))
        return max(gap / max(1.0, abs(f0)), stationarity)


def solve(program, tolerance=1e-6, warm_start=None):
    """Solve a ConvexProgram; see SolveOutcome for the result contract."""
    return InteriorPointSolver(tolerance).solve(program, warm_start)
