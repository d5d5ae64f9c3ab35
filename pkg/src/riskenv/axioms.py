"""Seeded property checks for risk-measure axioms and envelope identities.

Every trial draws its inputs from its own generator, derived from
``(seed, trial index)``, so a report does not depend on how trials are
scheduled.  A failed check carries a witness holding the exact inputs; the
violation can be recomputed from those inputs alone with
:func:`replay_witness`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from riskenv.duality import ScenarioSet, coherent_value, lp_max, scenario_set_from_Z, solve_lp
from riskenv.errors import (
    InvalidInput,
    NonUniformSpace,
    NoWitnessFound,
    SpecNotPositivelyHomogeneous,
)
from riskenv.measures import (
    DiscreteMeasure,
    RiskMeasureSpec,
    acceptance_indicator,
    avar_grid,
    distortion_var,
    evaluate,
    mixed_avar,
    psi_from_w,
    rho_dominated,
    rho_fsd_env,
    rho_ssd_env,
)
from riskenv.space import (
    ProbSpace,
    _require_uniform,
    as_position,
    avar_from_quantile,
    quantile_function,
    ssd_dominates,
    var,
)

VIOLATION_TOL = 1e-9
ATTAIN_TOL = 1e-9
FUBINI_TOL = 1e-10
CERT_TOL = 1e-9
VALUE_RANGE = 10.0


class AxiomKind(enum.Enum):
    MONOTONICITY = "monotonicity"
    TRANSLATION_INVARIANCE = "translation-invariance"
    POSITIVE_HOMOGENEITY = "positive-homogeneity"
    CONVEXITY = "convexity"
    COM_CONVEXITY = "com-convexity"
    COM_ADDITIVITY = "com-additivity"
    LAW_INVARIANCE = "law-invariance"
    FSD_CONSISTENCY = "fsd-consistency"
    SSD_CONSISTENCY = "ssd-consistency"
    ID_CONVEXITY = "id-convexity"

    @classmethod
    def parse(cls, name: "str | AxiomKind") -> "AxiomKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for kind in cls:
            if key in (kind.value, kind.name.lower().replace("_", "-")):
                return kind
        raise InvalidInput(f"unknown axiom {name!r}; choose from {', '.join(k.value for k in cls)}")


LAW_DEPENDENT = frozenset(
    {AxiomKind.LAW_INVARIANCE, AxiomKind.FSD_CONSISTENCY, AxiomKind.SSD_CONSISTENCY, AxiomKind.ID_CONVEXITY}
)


class EnvelopeFlavor(enum.Enum):
    MONETARY = "monetary"
    POS_HOMOGENEOUS = "coherent"
    LAW_INVARIANT = "law"
    SSD = "ssd"
    SSD_POS_HOMOGENEOUS = "ssd-coherent"


@dataclass(frozen=True)
class Witness:
    inputs: dict[str, Any]
    lhs: float
    rhs: float
    margin: float


@dataclass(frozen=True)
class PropertyReport:
    axiom: "AxiomKind | EnvelopeFlavor | str"
    trials: int
    holds: bool
    seed: int
    witness: Witness | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.axiom.value if isinstance(self.axiom, enum.Enum) else str(self.axiom)


# ---------------------------------------------------------------------------
# samplers


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def random_position(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.uniform(-VALUE_RANGE, VALUE_RANGE, n)
    # integer grids produce ties, which exercise step-function edge cases
    if rng.random() < 0.5:
        x = np.round(x)
    return x


def random_comonotonic_pair(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.sort(random_position(rng, n))
    b = np.sort(random_position(rng, n))
    order = rng.permutation(n)
    X = np.empty(n)
    Y = np.empty(n)
    X[order] = a
    Y[order] = b
    return X, Y


def random_doubly_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random convex combination of permutation matrices."""
    k = int(rng.integers(1, n + 2))
    lam = rng.dirichlet(np.ones(k))
    D = np.zeros((n, n))
    for weight in lam:
        D[np.arange(n), rng.permutation(n)] += weight
    return D


def _ssd_pair(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) with X second-order dominating Y: sorted X = D sorted Y + e."""
    Y = random_position(rng, n)
    D = random_doubly_stochastic(rng, n)
    e = rng.uniform(0.0, 2.0, n) * (rng.random(n) < 0.5)
    X = rng.permutation(D @ np.sort(Y) + e)
    return X, Y


def _sample(kind: AxiomKind, rng: np.random.Generator, n: int) -> dict[str, Any]:
    if kind is AxiomKind.MONOTONICITY:
        X = random_position(rng, n)
        bump = rng.uniform(0.0, 5.0, n) * (rng.random(n) < 0.5)
        return {"X": X, "Y": X + bump}
    if kind is AxiomKind.TRANSLATION_INVARIANCE:
        return {"X": random_position(rng, n), "m": float(rng.uniform(-VALUE_RANGE, VALUE_RANGE))}
    if kind is AxiomKind.POSITIVE_HOMOGENEITY:
        return {"X": random_position(rng, n), "alpha": float(rng.uniform(0.0, 5.0))}
    if kind is AxiomKind.CONVEXITY:
        return {"X": random_position(rng, n), "Y": random_position(rng, n), "alpha": float(rng.random())}
    if kind in (AxiomKind.COM_CONVEXITY, AxiomKind.COM_ADDITIVITY):
        X, Y = random_comonotonic_pair(rng, n)
        return {"X": X, "Y": Y, "alpha": float(rng.random())}
    if kind is AxiomKind.LAW_INVARIANCE:
        return {"X": random_position(rng, n), "perm": rng.permutation(n)}
    if kind is AxiomKind.FSD_CONSISTENCY:
        Y = random_position(rng, n)
        bump = rng.uniform(0.0, 3.0, n) * (rng.random(n) < 0.5)
        return {"X": rng.permutation(np.sort(Y) + bump), "Y": Y}
    if kind is AxiomKind.SSD_CONSISTENCY:
        X, Y = _ssd_pair(rng, n)
        return {"X": X, "Y": Y}
    if kind is AxiomKind.ID_CONVEXITY:
        k = int(rng.integers(2, max(n, 2) + 1))
        return {
            "X": random_position(rng, n),
            "perms": [rng.permutation(n) for _ in range(k)],
            "weights": rng.dirichlet(np.ones(k)),
        }
    raise AssertionError(kind)


def _sides(kind: AxiomKind, spec: RiskMeasureSpec, space: ProbSpace, inp: dict[str, Any]) -> tuple[float, float]:
    """Both sides of the axiom's (in)equality, lhs <= rhs or lhs == rhs."""

    def rho(v):
        return evaluate(spec, space, v)

    X = np.asarray(inp["X"], dtype=float)
    if kind is AxiomKind.MONOTONICITY:
        return rho(inp["Y"]), rho(X)
    if kind is AxiomKind.TRANSLATION_INVARIANCE:
        return rho(X + inp["m"]), rho(X) - inp["m"]
    if kind is AxiomKind.POSITIVE_HOMOGENEITY:
        return rho(inp["alpha"] * X), inp["alpha"] * rho(X)
    if kind in (AxiomKind.CONVEXITY, AxiomKind.COM_CONVEXITY):
        a = inp["alpha"]
        Y = np.asarray(inp["Y"], dtype=float)
        return rho(a * X + (1 - a) * Y), a * rho(X) + (1 - a) * rho(Y)
    if kind is AxiomKind.COM_ADDITIVITY:
        Y = np.asarray(inp["Y"], dtype=float)
        return rho(X + Y), rho(X) + rho(Y)
    if kind is AxiomKind.LAW_INVARIANCE:
        return rho(X[np.asarray(inp["perm"])]), rho(X)
    if kind in (AxiomKind.FSD_CONSISTENCY, AxiomKind.SSD_CONSISTENCY):
        return rho(X), rho(inp["Y"])
    if kind is AxiomKind.ID_CONVEXITY:
        copies = [X[np.asarray(p)] for p in inp["perms"]]
        w = np.asarray(inp["weights"], dtype=float)
        mix = sum(wk * c for wk, c in zip(w, copies))
        return rho(mix), float(sum(wk * rho(c) for wk, c in zip(w, copies)))
    raise AssertionError(kind)


_EQUALITIES = frozenset(
    {
        AxiomKind.TRANSLATION_INVARIANCE,
        AxiomKind.POSITIVE_HOMOGENEITY,
        AxiomKind.COM_ADDITIVITY,
        AxiomKind.LAW_INVARIANCE,
    }
)


def _margin(kind: AxiomKind, lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) if kind in _EQUALITIES else lhs - rhs


def _freeze(inp: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for key, val in inp.items():
        if isinstance(val, list):
            out[key] = [tuple(np.asarray(v).tolist()) for v in val]
        elif isinstance(val, np.ndarray):
            out[key] = tuple(val.tolist())
        else:
            out[key] = float(val)
    return out


def replay_witness(kind, spec: RiskMeasureSpec, space: ProbSpace, witness: Witness) -> Witness:
    """Recompute both sides of a recorded violation from its stored inputs."""
    kind = AxiomKind.parse(kind)
    inp = {k: (np.asarray(v) if isinstance(v, tuple) else v) for k, v in witness.inputs.items()}
    lhs, rhs = _sides(kind, spec, space, inp)
    return Witness(witness.inputs, lhs, rhs, _margin(kind, lhs, rhs))


def check_axiom(kind, spec: RiskMeasureSpec, space: ProbSpace, trials: int = 1000, seed: int = 42) -> PropertyReport:
    """Search for a violation of one axiom over seeded random inputs.

    Stops at the first trial whose margin exceeds 1e-9.
    """
    kind = AxiomKind.parse(kind)
    if kind in LAW_DEPENDENT and not space.is_uniform:
        raise NonUniformSpace(f"{kind.value} is only checked on equal-probability spaces")
    for t in range(trials):
        inp = _sample(kind, trial_rng(seed, t), space.n)
        lhs, rhs = _sides(kind, spec, space, inp)
        margin = _margin(kind, lhs, rhs)
        if margin > VIOLATION_TOL:
            return PropertyReport(kind, t + 1, False, seed, Witness(_freeze(inp), lhs, rhs, margin))
    return PropertyReport(kind, trials, True, seed)


# ---------------------------------------------------------------------------
# envelope identities


def ssd_coherent_value(space: ProbSpace, Z, X) -> float:
    """max of int AVaR_t(X) dw(t) over mixing measures w with int AVaR_t(Z) dw(t) <= 0.

    Between grid levels k/n both AVaR curves are affine in 1/t, so the
    optimum is attained by measures supported on the grid.
    """
    _require_uniform(space)
    grid = avar_grid(space)
    qx = quantile_function(space, X)
    qz = quantile_function(space, Z)
    ax = np.array([avar_from_quantile(qx, t) for t in grid])
    az = np.array([avar_from_quantile(qz, t) for t in grid])
    return lp_max(ax, ScenarioSet(len(grid), ((tuple(-az), 0.0),))).value


_GENERATORS: dict[EnvelopeFlavor, Callable[[ProbSpace, np.ndarray, np.ndarray], float]] = {
    EnvelopeFlavor.MONETARY: rho_dominated,
    EnvelopeFlavor.POS_HOMOGENEOUS: lambda space, Z, X: coherent_value(space, X, scenario_set_from_Z(Z)),
    EnvelopeFlavor.LAW_INVARIANT: rho_fsd_env,
    EnvelopeFlavor.SSD: rho_ssd_env,
    EnvelopeFlavor.SSD_POS_HOMOGENEOUS: ssd_coherent_value,
}


def homogeneity_probe(spec: RiskMeasureSpec, space: ProbSpace, seed: int = 0, probes: int = 8) -> bool:
    for t in range(probes):
        rng = trial_rng(seed, t)
        X = random_position(rng, space.n)
        alpha = float(rng.uniform(0.1, 5.0))
        if abs(evaluate(spec, space, alpha * X) - alpha * evaluate(spec, space, X)) > VIOLATION_TOL:
            return False
    return True


def verify_envelope(
    flavor,
    spec: RiskMeasureSpec,
    space: ProbSpace,
    X,
    sampled_Z: int = 50,
    seed: int = 42,
) -> PropertyReport:
    """Check that rho(X) is the minimum of the envelope generators over accepted Z.

    With Z0 = X + rho(X): Z0 must be accepted, its generator must return
    rho(X), and every sampled accepted Z must give a value >= rho(X).
    """
    flavor = flavor if isinstance(flavor, EnvelopeFlavor) else EnvelopeFlavor(flavor)
    if flavor not in (EnvelopeFlavor.MONETARY, EnvelopeFlavor.POS_HOMOGENEOUS) and not space.is_uniform:
        raise NonUniformSpace(f"the {flavor.value} envelope needs equal-probability atoms")
    if flavor in (EnvelopeFlavor.POS_HOMOGENEOUS, EnvelopeFlavor.SSD_POS_HOMOGENEOUS):
        if not homogeneity_probe(spec, space, seed):
            raise SpecNotPositivelyHomogeneous("measure failed the positive homogeneity probe")
    gen = _GENERATORS[flavor]
    x = as_position(space, X)
    rho_x = evaluate(spec, space, x)
    Z0 = x + rho_x

    def fail(check: str, Z, lhs: float, rhs: float, trials: int) -> PropertyReport:
        inputs = {"check": check, "X": tuple(x.tolist()), "Z": tuple(np.asarray(Z).tolist())}
        return PropertyReport(flavor, trials, False, seed, Witness(inputs, lhs, rhs, abs(lhs - rhs)))

    if not acceptance_indicator(spec, space, Z0):
        return fail("acceptance", Z0, evaluate(spec, space, Z0), 0.0, 1)
    attained = gen(space, Z0, x)
    if abs(attained - rho_x) > ATTAIN_TOL:
        return fail("attainment", Z0, attained, rho_x, 2)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    for k in range(sampled_Z):
        R = random_position(rng, space.n)
        extra = 0.0 if rng.random() < 0.5 else float(rng.uniform(0.0, 1.0))
        Z = R + evaluate(spec, space, R) + extra
        if not acceptance_indicator(spec, space, Z):
            return fail("acceptance", Z, evaluate(spec, space, Z), 0.0, k + 3)
        value = gen(space, Z, x)
        if value < rho_x - ATTAIN_TOL:
            return fail("lower-bound", Z, value, rho_x, k + 3)
    return PropertyReport(flavor, sampled_Z + 2, True, seed, details={"rho": rho_x, "attained": attained})


# ---------------------------------------------------------------------------
# SSD certificate


@dataclass(frozen=True)
class SsdCertificate:
    """sorted(X) = D sorted(Y) + e with D doubly stochastic and e >= 0."""

    matrix: np.ndarray
    slack: np.ndarray
    x_sorted: np.ndarray
    y_sorted: np.ndarray

    def residual(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.y_sorted + self.slack - self.x_sorted)))

    def is_valid(self, tol: float = CERT_TOL) -> bool:
        D = self.matrix
        return (
            np.all(np.abs(D.sum(axis=0) - 1) <= tol)
            and np.all(np.abs(D.sum(axis=1) - 1) <= tol)
            and np.all(D >= -1e-12)
            and np.all(self.slack >= -1e-12)
            and self.residual() <= tol
        )


def ssd_certificate(space: ProbSpace, X, Y) -> SsdCertificate | None:
    """Doubly stochastic D and slack e >= 0 with sorted(X) = D sorted(Y) + e.

    Returns None when the feasibility program has no solution, which happens
    exactly when X does not second-order dominate Y.
    """
    _require_uniform(space)
    xs = np.sort(as_position(space, X))
    ys = np.sort(as_position(space, Y))
    n = space.n
    nv = n * n + n
    A = np.zeros((3 * n, nv))
    b = np.zeros(3 * n)
    for i in range(n):
        A[i, i * n : (i + 1) * n] = 1.0  # row sums
        A[n + i, i : n * n : n] = 1.0  # column sums
        A[2 * n + i, i * n : (i + 1) * n] = ys
        A[2 * n + i, n * n + i] = 1.0
        b[i] = b[n + i] = 1.0
        b[2 * n + i] = xs[i]
    res = solve_lp(np.zeros(nv), A, b)
    if res.status != "optimal":
        return None
    D = res.x[: n * n].reshape(n, n)
    e = res.x[n * n :]
    return SsdCertificate(D, e, xs, ys)


# ---------------------------------------------------------------------------
# VaR gap witness

# pair reported by the gap demo on four equally likely states at level 1/2
DEMO_PAIR = ((0.0, 2.0, 3.0, 7.0), (0.0, 0.0, 4.0, 4.0))
MAX_ENUMERATED = 5000


@dataclass(frozen=True)
class GapWitness:
    X: tuple[float, ...]
    Y: tuple[float, ...]
    var_X: float
    var_Y: float
    ssd_holds: bool
    level: float


def _is_gap(space: ProbSpace, X, Y, t: float) -> bool:
    return ssd_dominates(space, X, Y) and var(space, X, t) > var(space, Y, t) + VIOLATION_TOL


def gap_witness_var(space: ProbSpace, t: float = 0.5, trials: int = 20_000, seed: int = 42) -> GapWitness:
    """Pair with X second-order dominating Y yet VaR_t(X) > VaR_t(Y).

    Tries the documented demo pair, then sorted integer vectors in [0, 8]^n,
    then seeded random integer vectors.
    """
    _require_uniform(space)
    n = space.n

    def found(X, Y) -> GapWitness:
        X = tuple(float(v) for v in X)
        Y = tuple(float(v) for v in Y)
        return GapWitness(X, Y, var(space, X, t), var(space, Y, t), ssd_dominates(space, X, Y), t)

    if n == len(DEMO_PAIR[0]) and _is_gap(space, *DEMO_PAIR, t):
        return found(*DEMO_PAIR)

    cands = np.array(list(itertools.islice(itertools.combinations_with_replacement(range(9), n), MAX_ENUMERATED)), float)
    sums = np.cumsum(cands, axis=1)
    qs = np.array([quantile_function(space, c)(t) for c in cands])
    for j in range(len(cands)):
        ok = np.all(sums >= sums[j] - 1e-12, axis=1) & (qs < qs[j] - VIOLATION_TOL)
        hits = np.flatnonzero(ok)
        if hits.size:
            return found(cands[hits[0]], cands[j])

    rng = np.random.default_rng(seed)
    for _ in range(trials):
        X = np.sort(rng.integers(-8, 9, n)).astype(float)
        Y = np.sort(rng.integers(-8, 9, n)).astype(float)
        if _is_gap(space, X, Y, t):
            return found(X, Y)
    raise NoWitnessFound(f"no SSD/VaR gap found for n={n}, t={t}")


# ---------------------------------------------------------------------------
# distortion identity


def fubini_check(space: ProbSpace, X, w: DiscreteMeasure) -> PropertyReport:
    """Compare int VaR_t d psi(t) for psi = J(w) with int AVaR_t dw(t)."""
    _require_uniform(space)
    psi = psi_from_w(w)
    lhs = distortion_var(space, X, psi)
    rhs = mixed_avar(space, X, w)
    margin = abs(lhs - rhs)
    inputs = {"X": tuple(as_position(space, X).tolist()), "atoms": w.atoms, "weights": w.weights}
    witness = Witness(inputs, lhs, rhs, margin)
    return PropertyReport("fubini", 1, margin <= FUBINI_TOL, 0, witness if margin > FUBINI_TOL else None, {"lhs": lhs, "rhs": rhs})
