"""Scenario (dual) representations on a finite space.

On a finite space every finitely additive probability that is absolutely
continuous with respect to P is an ordinary probability vector, so the
scenario sets used here are polytopes inside the probability simplex.  The
linear programs involved are tiny and are solved with a dense two-phase
tableau simplex using Bland's rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from riskenv.errors import (
    DimensionTooLarge,
    GeneratorNotAccepted,
    Infeasible,
    InfeasibleScenarioSet,
    InvalidInput,
    NonPositiveTheta,
    SpaceMismatch,
)
from riskenv.space import ProbSpace, as_position

PIVOT_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-12
MAX_SCENARIO_DIM = 64


@dataclass(frozen=True)
class ScenarioMeasure:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInput("scenario weights must be a nonempty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidInput("scenario weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInput(f"scenario weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def expectation(self, X) -> float:
        return float(np.dot(self.array, np.asarray(X, dtype=float)))


@dataclass(frozen=True)
class ScenarioSet:
    """Probability vectors q with ``a . q >= b`` for every stored (a, b)."""

    dim: int
    ineqs: tuple[tuple[tuple[float, ...], float], ...] = ()

    def __post_init__(self):
        clean = []
        for a, b in self.ineqs:
            a = tuple(float(v) for v in a)
            if len(a) != self.dim:
                raise InvalidInput(f"inequality has {len(a)} coefficients, expected {self.dim}")
            if not all(math.isfinite(v) for v in a) or not math.isfinite(float(b)):
                raise InvalidInput("inequality coefficients must be finite")
            clean.append((a, float(b)))
        object.__setattr__(self, "ineqs", tuple(clean))

    @classmethod
    def full(cls, n: int) -> "ScenarioSet":
        return cls(n)

    @classmethod
    def singleton(cls, probs: Sequence[float]) -> "ScenarioSet":
        n = len(probs)
        rows = []
        for i, p in enumerate(probs):
            e = [0.0] * n
            e[i] = 1.0
            rows.append((tuple(e), float(p)))
            rows.append((tuple(-v for v in e), -float(p)))
        return cls(n, tuple(rows))

    def contains(self, q, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        if np.any(q < -tol) or abs(q.sum() - 1.0) > tol:
            return False
        return all(np.dot(a, q) >= b - tol for a, b in self.ineqs)


@dataclass(frozen=True)
class LinearProgramResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = float("nan")
    argmax: ScenarioMeasure | None = None
    x: np.ndarray | None = field(default=None, compare=False, repr=False)


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run_simplex(T: np.ndarray, basis: list[int], ncols: int, tol: float, max_iter: int) -> str:
    """Bland-rule iterations on a tableau whose last row holds reduced costs."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        obj = T[m, :ncols]
        entering = next((j for j in range(ncols) if obj[j] < -tol), None)
        if entering is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i, entering]
            if a > tol:
                ratio = T[i, -1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        leave = best[1]
        _pivot(T, leave, entering)
        basis[leave] = entering
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(c, A_eq, b_eq, tol: float = PIVOT_TOL, max_iter: int = 50_000) -> LinearProgramResult:
    """Maximise ``c . x`` subject to ``A_eq x = b_eq`` and ``x >= 0``.

    Phase one minimises the sum of one artificial per row; rows whose
    artificial cannot leave the basis are redundant and dropped.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float, ndmin=2)
    b = np.array(b_eq, dtype=float).reshape(-1)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n, n + m))
    # phase one: maximise -sum(artificials)
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    _run_simplex(T, basis, n + m, tol, max_iter)
    if T[m, -1] < -tol * max(1.0, float(np.abs(b).max(initial=0.0))):
        return LinearProgramResult("infeasible")

    keep = []
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if abs(T[i, j]) > tol), None)
            if j is None:
                continue
            _pivot(T, i, j)
            basis[i] = j
        keep.append(i)
    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[:-1, :n] = T[keep, :n]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[i] for i in keep]
    T2[-1, :n] = -c
    for i, j in enumerate(basis):
        T2[-1] += c[j] * T2[i]
    status = _run_simplex(T2, basis, n, tol, max_iter)
    if status != "optimal":
        return LinearProgramResult(status)
    x = np.zeros(n)
    for i, j in enumerate(basis):
        x[j] = T2[i, -1]
    x = np.maximum(x, 0.0)
    return LinearProgramResult("optimal", float(c @ x), None, x)


def lp_max(objective, scenarios: ScenarioSet) -> LinearProgramResult:
    """Maximise ``objective . q`` over the probability vectors in ``scenarios``."""
    c = np.asarray(objective, dtype=float).reshape(-1)
    n = c.shape[0]
    if n != scenarios.dim:
        raise SpaceMismatch(f"objective has {n} entries, scenario set has dimension {scenarios.dim}")
    if n > MAX_SCENARIO_DIM:
        raise DimensionTooLarge(f"dimension {n} exceeds {MAX_SCENARIO_DIM}")
    if not np.all(np.isfinite(c)):
        raise InvalidInput("objective must be finite")
    k = len(scenarios.ineqs)
    A = np.zeros((k + 1, n + k))
    b = np.zeros(k + 1)
    A[0, :n] = 1.0
    b[0] = 1.0
    for r, (a, rhs) in enumerate(scenarios.ineqs, start=1):
        A[r, :n] = a
        A[r, n + r - 1] = -1.0
        b[r] = rhs
    res = solve_lp(np.concatenate([c, np.zeros(k)]), A, b)
    if res.status == "infeasible":
        raise Infeasible("scenario set is empty")
    q = res.x[:n]
    q = q / q.sum()
    return LinearProgramResult("optimal", float(c @ q), ScenarioMeasure(tuple(q)), res.x)


def scenario_set_from_Z(Z) -> ScenarioSet:
    """Scenarios under which the accepted position Z has nonnegative mean."""
    z = tuple(float(v) for v in np.asarray(Z, dtype=float).reshape(-1))
    return ScenarioSet(len(z), ((z, 0.0),))


def coherent_value(space: ProbSpace, X, scenarios: ScenarioSet) -> float:
    x = as_position(space, X)
    try:
        return lp_max(-x, scenarios).value
    except Infeasible as exc:
        raise InfeasibleScenarioSet(str(exc)) from exc


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (theta > 0) or not math.isfinite(theta):
        raise NonPositiveTheta(f"theta must be a positive number, got {theta!r}")
    return theta


def entropic_penalty(space: ProbSpace, Q: ScenarioMeasure, theta: float) -> float:
    """Relative entropy of Q with respect to P, divided by theta."""
    theta = _check_theta(theta)
    q = Q.array
    if q.shape[0] != space.n:
        raise SpaceMismatch("scenario and space dimensions differ")
    p = space.probs
    mask = q > 0
    return float(np.sum(q[mask] * np.log(q[mask] / p[mask]))) / theta


def gibbs_measure(space: ProbSpace, X, theta: float) -> ScenarioMeasure:
    theta = _check_theta(theta)
    x = as_position(space, X)
    logits = np.log(space.probs) - theta * x
    w = np.exp(logits - logits.max())
    return ScenarioMeasure(tuple(w / w.sum()))


def dual_eval_entropic(space: ProbSpace, X, theta: float) -> tuple[float, ScenarioMeasure]:
    """Value of the penalised expected loss at the exponentially tilted scenario."""
    x = as_position(space, X)
    q = gibbs_measure(space, x, theta)
    return q.expectation(-x) - entropic_penalty(space, q, theta), q


def penalty_from_acceptance(spec, space: ProbSpace, Q: ScenarioMeasure, generators: Sequence) -> float:
    """Lower bound sup over the given accepted Z of E_Q[-Z]."""
    from riskenv.measures import acceptance_indicator

    if len(generators) == 0:
        raise InvalidInput("at least one accepted generator is required")
    best = -math.inf
    for i, Z in enumerate(generators):
        z = as_position(space, Z)
        if not acceptance_indicator(spec, space, z):
            raise GeneratorNotAccepted(f"generator {i} is not in the acceptance set")
        best = max(best, Q.expectation(-z))
    return best
