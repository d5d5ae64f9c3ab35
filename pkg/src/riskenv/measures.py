"""Risk measures on a finite space and their building blocks.

Measures are described by small frozen spec objects and evaluated by
:func:`evaluate`.  Weights on [0, 1] are piecewise constant densities,
discrete measures, or piecewise linear concave distortions, so every
integral against a step quantile function is computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from riskenv.duality import ScenarioMeasure, ScenarioSet, coherent_value
from riskenv.errors import (
    CapacityTooLarge,
    InvalidCapacity,
    InvalidSpec,
    InvalidWeight,
    LevelOutOfRange,
    MassNotOne,
    NonPositiveTheta,
    NotConcave,
    NotNormalized,
    SpecSpaceMismatch,
    WeightKindUnsupported,
)
from riskenv.space import (
    ProbSpace,
    QuantileFunction,
    _require_uniform,
    as_position,
    avar,
    avar_from_quantile,
    quantile_function,
    sort_order,
    var,
)

WEIGHT_TOL = 1e-12
ACCEPT_TOL = 1e-12
MAX_TABLE_ATOMS = 16
# weights of w below this are treated as rounding noise when inverting psi
ATOM_DROP_TOL = 1e-13


# ---------------------------------------------------------------------------
# weights on the unit interval


@dataclass(frozen=True)
class Density:
    """Piecewise constant density: ``heights[i]`` on ``[breaks[i], breaks[i+1])``."""

    breaks: tuple[float, ...]
    heights: tuple[float, ...]
    decreasing: bool = False

    def __post_init__(self):
        b = tuple(float(v) for v in self.breaks)
        h = tuple(float(v) for v in self.heights)
        if len(b) != len(h) + 1 or not h:
            raise InvalidWeight("a density needs len(breaks) == len(heights) + 1 >= 2")
        if b[0] != 0.0 or b[-1] != 1.0 or any(x >= y for x, y in zip(b, b[1:])):
            raise InvalidWeight("density breaks must increase strictly from 0 to 1")
        if any(v < 0 or not math.isfinite(v) for v in h):
            raise InvalidWeight("density heights must be finite and nonnegative")
        mass = math.fsum(v * (y - x) for v, x, y in zip(h, b, b[1:]))
        if abs(mass - 1.0) > WEIGHT_TOL:
            raise MassNotOne(f"density integrates to {mass!r}")
        if self.decreasing and any(y > x for x, y in zip(h, h[1:])):
            raise InvalidWeight("density flagged decreasing has an increasing piece")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "heights", h)


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(v) for v in self.atoms)
        w = tuple(float(v) for v in self.weights)
        if len(t) != len(w) or not t:
            raise InvalidWeight("a discrete measure needs matching, nonempty atoms and weights")
        if any(not (0.0 <= v <= 1.0) for v in t):
            raise LevelOutOfRange("atoms of a discrete measure must lie in [0, 1]")
        if any(x >= y for x, y in zip(t, t[1:])):
            raise InvalidWeight("atoms must be strictly increasing")
        if any(not (v > 0) or not math.isfinite(v) for v in w):
            raise InvalidWeight("atom weights must be positive")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise MassNotOne(f"atom weights sum to {math.fsum(w)!r}")
        object.__setattr__(self, "atoms", t)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "DiscreteMeasure":
        """Build from (t, w) pairs in any order, merging repeated atoms."""
        merged: dict[float, float] = {}
        for t, w in pairs:
            merged[float(t)] = merged.get(float(t), 0.0) + float(w)
        ts = sorted(merged)
        return cls(tuple(ts), tuple(merged[t] for t in ts))

    @classmethod
    def point(cls, t: float) -> "DiscreteMeasure":
        return cls((t,), (1.0,))


@dataclass(frozen=True)
class ConcaveDistortion:
    """Continuous piecewise linear concave psi through (knots[i], values[i]).

    ``values[0]`` is psi(0); as a distribution function on [0, 1] that value
    is the mass psi puts on the point 0.
    """

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        k = tuple(float(v) for v in self.knots)
        v = tuple(float(x) for x in self.values)
        if len(k) != len(v) or len(k) < 2:
            raise InvalidWeight("a distortion needs at least the knots 0 and 1")
        if k[0] != 0.0 or k[-1] != 1.0 or any(a >= b for a, b in zip(k, k[1:])):
            raise InvalidWeight("distortion knots must increase strictly from 0 to 1")
        if abs(v[-1] - 1.0) > WEIGHT_TOL:
            raise NotNormalized(f"psi(1) = {v[-1]!r}, expected 1")
        if v[0] < 0:
            raise NotNormalized(f"psi(0) = {v[0]!r} is negative")
        slopes = [(b - a) / (y - x) for a, b, x, y in zip(v, v[1:], k, k[1:])]
        if any(s < -WEIGHT_TOL for s in slopes):
            raise NotConcave("distortion must be non-decreasing")
        scale = max(1.0, max(abs(s) for s in slopes))
        if any(s2 > s1 + WEIGHT_TOL * scale for s1, s2 in zip(slopes, slopes[1:])):
            raise NotConcave("distortion slopes must be non-increasing")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    @property
    def slopes(self) -> tuple[float, ...]:
        k, v = self.knots, self.values
        return tuple((b - a) / (y - x) for a, b, x, y in zip(v, v[1:], k, k[1:]))

    def __call__(self, u: float) -> float:
        return float(np.interp(u, self.knots, self.values))

    @classmethod
    def identity(cls) -> "ConcaveDistortion":
        return cls((0.0, 1.0), (0.0, 1.0))


WeightOnUnitInterval = Union[Density, DiscreteMeasure, ConcaveDistortion]


def psi_from_w(w: DiscreteMeasure) -> ConcaveDistortion:
    """Concave distortion with right slope sum_{t_i > t} w_i / t_i and psi(0) = w({0})."""
    if not isinstance(w, DiscreteMeasure):
        raise WeightKindUnsupported("psi_from_w expects a DiscreteMeasure")
    interior = [t for t in w.atoms if 0.0 < t < 1.0]
    knots = [0.0] + interior + [1.0]
    mass_at_zero = sum(wt for t, wt in zip(w.atoms, w.weights) if t == 0.0)
    values = [mass_at_zero]
    for a, b in zip(knots, knots[1:]):
        slope = math.fsum(wt / t for t, wt in zip(w.atoms, w.weights) if t > a)
        values.append(values[-1] + slope * (b - a))
    if abs(values[-1] - 1.0) > WEIGHT_TOL:
        raise MassNotOne(f"psi(1) came out as {values[-1]!r}")
    values[-1] = 1.0
    return ConcaveDistortion(tuple(knots), tuple(values))


def w_from_psi(psi: ConcaveDistortion) -> DiscreteMeasure:
    """Inverse of :func:`psi_from_w`: slope drops become atoms, psi(0) the atom at 0."""
    if not isinstance(psi, ConcaveDistortion):
        raise WeightKindUnsupported("w_from_psi expects a ConcaveDistortion")
    slopes = psi.slopes
    pairs = [(0.0, psi.values[0])]
    for j in range(1, len(psi.knots) - 1):
        pairs.append((psi.knots[j], psi.knots[j] * (slopes[j - 1] - slopes[j])))
    pairs.append((1.0, slopes[-1]))
    kept = [(t, wt) for t, wt in pairs if wt > ATOM_DROP_TOL]
    return DiscreteMeasure.from_pairs(kept)


# ---------------------------------------------------------------------------
# capacities


@dataclass(frozen=True)
class ExplicitTable:
    """Capacity given by its value on every event; bit i of the index is atom i."""

    n: int
    table: tuple[float, ...]

    def __post_init__(self):
        if self.n > MAX_TABLE_ATOMS:
            raise CapacityTooLarge(f"explicit capacities are limited to {MAX_TABLE_ATOMS} atoms")
        if self.n < 1 or len(self.table) != 1 << self.n:
            raise InvalidCapacity(f"expected {1 << max(self.n, 0)} table entries, got {len(self.table)}")
        c = np.asarray(self.table, dtype=float)
        if not np.all(np.isfinite(c)):
            raise InvalidCapacity("capacity values must be finite")
        if c[0] != 0.0 or abs(c[-1] - 1.0) > WEIGHT_TOL:
            raise InvalidCapacity("capacity must vanish on the empty set and be 1 on the whole space")
        masks = np.arange(1 << self.n)
        for i in range(self.n):
            without = masks[(masks >> i) & 1 == 0]
            if np.any(c[without | (1 << i)] < c[without] - WEIGHT_TOL):
                raise InvalidCapacity("capacity is not monotone")
        object.__setattr__(self, "table", tuple(float(v) for v in c))

    @classmethod
    def from_set_function(cls, n: int, fn: Callable[[frozenset], float]) -> "ExplicitTable":
        if n > MAX_TABLE_ATOMS:
            raise CapacityTooLarge(f"explicit capacities are limited to {MAX_TABLE_ATOMS} atoms")
        table = [fn(frozenset(i for i in range(n) if mask >> i & 1)) for mask in range(1 << n)]
        return cls(n, tuple(table))


@dataclass(frozen=True)
class DistortionOfP:
    """c(A) = psi(P(A)) for nonempty A, c(empty) = 0."""

    psi: Union[ConcaveDistortion, Callable[[float], float]]

    def __post_init__(self):
        grid = [self.psi(u) for u in np.linspace(0.0, 1.0, 101)]
        if abs(grid[-1] - 1.0) > WEIGHT_TOL or grid[0] < 0:
            raise InvalidCapacity("distortion must satisfy psi(0) >= 0 and psi(1) = 1")
        if any(b < a - WEIGHT_TOL for a, b in zip(grid, grid[1:])):
            raise InvalidCapacity("distortion must be non-decreasing")


Capacity = Union[ExplicitTable, DistortionOfP]


def choquet(space: ProbSpace, X, c: Capacity) -> float:
    """Choquet integral of -X with respect to c.

    Sums each distinct level of -X times the capacity increment between the
    upper level sets above and at that level.
    """
    x = as_position(space, X)
    f = -x
    order = sort_order(x)  # ascending x is descending f
    if isinstance(c, ExplicitTable):
        if c.n != space.n:
            raise SpecSpaceMismatch(f"capacity is on {c.n} atoms, space has {space.n}")

        def cap(k: int, mask: int, mass: float) -> float:
            return c.table[mask]

    elif isinstance(c, DistortionOfP):

        def cap(k: int, mask: int, mass: float) -> float:
            if k == space.n:
                return 1.0
            return c.psi(k / space.n if space.is_uniform else mass)

    else:
        raise InvalidCapacity(f"unsupported capacity {type(c).__name__}")

    probs = space.probs
    total = 0.0
    prev = 0.0
    mask = 0
    mass = 0.0
    for k, i in enumerate(order, start=1):
        mask |= 1 << int(i)
        mass += probs[i]
        if k < space.n and f[order[k]] == f[i]:
            continue
        cur = cap(k, mask, mass)
        total += f[i] * (cur - prev)
        prev = cur
    return total


# ---------------------------------------------------------------------------
# integrals of VaR against weights


def _var_integral(q: QuantileFunction, a: float, b: float) -> float:
    return -q.integral(a, b)


def spectral_var(space: ProbSpace, X, weight: WeightOnUnitInterval) -> float:
    """Integral of t -> VaR_t(X) against a density or a discrete measure."""
    q = quantile_function(space, X)
    if isinstance(weight, Density):
        b = weight.breaks
        return math.fsum(h * _var_integral(q, lo, hi) for h, lo, hi in zip(weight.heights, b, b[1:]))
    if isinstance(weight, DiscreteMeasure):
        return math.fsum(wt * -q(t) for t, wt in zip(weight.atoms, weight.weights))
    raise WeightKindUnsupported(f"spectral_var does not take {type(weight).__name__}")


def distortion_var(space: ProbSpace, X, psi: ConcaveDistortion) -> float:
    """Stieltjes integral of VaR_t(X) d psi(t) over [0, 1], including psi's mass at 0."""
    if not isinstance(psi, ConcaveDistortion):
        raise WeightKindUnsupported("distortion_var expects a ConcaveDistortion")
    q = quantile_function(space, X)
    k = psi.knots
    parts = [psi.values[0] * -q(0.0)]
    parts += [s * _var_integral(q, lo, hi) for s, lo, hi in zip(psi.slopes, k, k[1:])]
    return math.fsum(parts)


def mixed_avar(space: ProbSpace, X, w: DiscreteMeasure) -> float:
    """Mixture of AVaR levels: sum_i w_i AVaR_{t_i}(X)."""
    if not isinstance(w, DiscreteMeasure):
        raise WeightKindUnsupported("mixed_avar expects a DiscreteMeasure")
    q = quantile_function(space, X)
    return math.fsum(wt * avar_from_quantile(q, t) for t, wt in zip(w.atoms, w.weights))


# ---------------------------------------------------------------------------
# envelope generators and the entropic benchmark


def rho_dominated(space: ProbSpace, Z, X) -> float:
    """Least cash m with X + m >= Z on every atom."""
    return float(np.max(as_position(space, Z) - as_position(space, X)))


def _merged_midpoints(*qs: QuantileFunction) -> list[float]:
    pts = sorted({0.0, 1.0}.union(*(q.cum for q in qs)))
    return [(a + b) / 2 for a, b in zip(pts, pts[1:])]


def rho_fsd_env(space: ProbSpace, Z, X) -> float:
    """Least cash making X first-order dominate Z: sup_t VaR_t(X) - VaR_t(Z)."""
    _require_uniform(space)
    qx = quantile_function(space, X)
    qz = quantile_function(space, Z)
    return max(qz(t) - qx(t) for t in _merged_midpoints(qx, qz))


def avar_grid(space: ProbSpace) -> list[float]:
    """Levels at which AVaR differences on a uniform space attain their extremes."""
    n = space.n
    return [0.0] + [k / n for k in range(1, n + 1)]


def rho_ssd_env(space: ProbSpace, Z, X) -> float:
    """Least cash making X second-order dominate Z: sup_t AVaR_t(X) - AVaR_t(Z)."""
    _require_uniform(space)
    qx = quantile_function(space, X)
    qz = quantile_function(space, Z)
    return max(avar_from_quantile(qx, t) - avar_from_quantile(qz, t) for t in avar_grid(space))


def entropic(space: ProbSpace, theta: float, X) -> float:
    theta = float(theta)
    if not (theta > 0) or not math.isfinite(theta):
        raise NonPositiveTheta(f"theta must be a positive number, got {theta!r}")
    x = as_position(space, X)
    a = -theta * x
    shift = a.max()
    return float((shift + np.log(np.dot(space.probs, np.exp(a - shift)))) / theta)


# ---------------------------------------------------------------------------
# measure specifications


class RiskMeasureSpec:
    """Marker base class for the frozen measure descriptions below."""

    __slots__ = ()


def _level(t: float) -> float:
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise LevelOutOfRange(f"level {t!r} is outside [0, 1]")
    return t


def _vector(v) -> tuple[float, ...]:
    out = tuple(float(x) for x in np.asarray(v, dtype=float).reshape(-1))
    if not out or not all(math.isfinite(x) for x in out):
        raise InvalidSpec("positions inside a spec must be nonempty and finite")
    return out


@dataclass(frozen=True)
class VaR(RiskMeasureSpec):
    level: float

    def __post_init__(self):
        object.__setattr__(self, "level", _level(self.level))


@dataclass(frozen=True)
class AVaR(RiskMeasureSpec):
    level: float

    def __post_init__(self):
        object.__setattr__(self, "level", _level(self.level))


@dataclass(frozen=True)
class WorstCase(RiskMeasureSpec):
    pass


@dataclass(frozen=True)
class ExpectedLossUnder(RiskMeasureSpec):
    scenario: ScenarioMeasure


@dataclass(frozen=True)
class Entropic(RiskMeasureSpec):
    theta: float

    def __post_init__(self):
        theta = float(self.theta)
        if not (theta > 0) or not math.isfinite(theta):
            raise NonPositiveTheta(f"theta must be a positive number, got {theta!r}")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class SpectralVaR(RiskMeasureSpec):
    weight: WeightOnUnitInterval


@dataclass(frozen=True)
class MixedAVaR(RiskMeasureSpec):
    weight: DiscreteMeasure

    def __post_init__(self):
        if not isinstance(self.weight, DiscreteMeasure):
            raise WeightKindUnsupported("MixedAVaR needs a DiscreteMeasure")


@dataclass(frozen=True)
class ChoquetOf(RiskMeasureSpec):
    capacity: Capacity


@dataclass(frozen=True)
class DominatedEnvGen(RiskMeasureSpec):
    z: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", _vector(self.z))


@dataclass(frozen=True)
class FsdEnvGen(RiskMeasureSpec):
    z: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", _vector(self.z))


@dataclass(frozen=True)
class SsdEnvGen(RiskMeasureSpec):
    z: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", _vector(self.z))


@dataclass(frozen=True)
class LowerEnvelope(RiskMeasureSpec):
    members: tuple[RiskMeasureSpec, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidSpec("a lower envelope needs at least one member")
        if not all(isinstance(m, RiskMeasureSpec) for m in members):
            raise InvalidSpec("lower envelope members must be measure specs")
        object.__setattr__(self, "members", members)


@dataclass(frozen=True)
class ScenarioMax(RiskMeasureSpec):
    scenarios: ScenarioSet


def _same_dim(space: ProbSpace, size: int, what: str) -> None:
    if size != space.n:
        raise SpecSpaceMismatch(f"{what} has dimension {size}, space has {space.n} atoms")


def evaluate(spec: RiskMeasureSpec, space: ProbSpace, X) -> float:
    """rho(X) for the measure described by ``spec``."""
    x = as_position(space, X)
    match spec:
        case VaR(level=t):
            return var(space, x, t)
        case AVaR(level=t):
            return avar(space, x, t)
        case WorstCase():
            return float(np.max(-x))
        case ExpectedLossUnder(scenario=Q):
            _same_dim(space, len(Q.weights), "scenario")
            return Q.expectation(-x)
        case Entropic(theta=theta):
            return entropic(space, theta, x)
        case SpectralVaR(weight=w) if isinstance(w, ConcaveDistortion):
            return distortion_var(space, x, w)
        case SpectralVaR(weight=w):
            return spectral_var(space, x, w)
        case MixedAVaR(weight=w):
            return mixed_avar(space, x, w)
        case ChoquetOf(capacity=c):
            return choquet(space, x, c)
        case DominatedEnvGen(z=z):
            _same_dim(space, len(z), "generator")
            return rho_dominated(space, z, x)
        case FsdEnvGen(z=z):
            _same_dim(space, len(z), "generator")
            return rho_fsd_env(space, z, x)
        case SsdEnvGen(z=z):
            _same_dim(space, len(z), "generator")
            return rho_ssd_env(space, z, x)
        case LowerEnvelope(members=members):
            return min(evaluate(m, space, x) for m in members)
        case ScenarioMax(scenarios=S):
            _same_dim(space, S.dim, "scenario set")
            return coherent_value(space, x, S)
    raise InvalidSpec(f"unknown measure spec {spec!r}")


def acceptance_indicator(spec: RiskMeasureSpec, space: ProbSpace, Z) -> bool:
    """Whether Z lies in the acceptance set {rho <= 0}."""
    return evaluate(spec, space, Z) <= ACCEPT_TOL


def spec_name(spec: RiskMeasureSpec) -> str:
    match spec:
        case VaR(level=t):
            return f"VaR({t:g})"
        case AVaR(level=t):
            return f"AVaR({t:g})"
        case Entropic(theta=theta):
            return f"Entropic({theta:g})"
        case LowerEnvelope(members=ms):
            return "LowerEnvelope(" + ", ".join(spec_name(m) for m in ms) + ")"
    return type(spec).__name__

