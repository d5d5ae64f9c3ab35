"""Finite probability spaces, positions and the quantile machinery built on them.

A position is a plain float vector with one entry per atom.  Everything here
is a pure function of its arguments; spaces and quantile functions are frozen.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from riskenv.errors import (
    EmptySpace,
    IrrationalProbability,
    LevelOutOfRange,
    NonPositiveProbability,
    NonUniformSpace,
    RefinementTooLarge,
    SpaceMismatch,
)

PROB_SUM_TOL = 1e-12
DOMINANCE_TOL = 1e-12
# cumulative masses within this distance of a level count as equal to it
BREAKPOINT_TOL = 1e-12
SNAP_TOL = 1e-9
MAX_REFINEMENT = 10**6


@dataclass(frozen=True)
class ProbSpace:
    atom_probs: tuple[float, ...]
    is_uniform: bool

    @property
    def n(self) -> int:
        return len(self.atom_probs)

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.atom_probs, dtype=float)


def build_space(probs: Sequence[float]) -> ProbSpace:
    """Validate and normalise atom probabilities.

    Equal inputs yield a uniform space whose atoms all carry exactly ``1/n``.
    """
    ps = [float(p) for p in probs]
    if not ps:
        raise EmptySpace("a probability space needs at least one atom")
    for i, p in enumerate(ps):
        if not (p > 0) or not math.isfinite(p):
            raise NonPositiveProbability(f"atom {i} has probability {p!r}; all must be > 0")
    n = len(ps)
    if all(p == ps[0] for p in ps):
        return ProbSpace(tuple([1.0 / n] * n), True)
    total = math.fsum(ps)
    normed = tuple(p / total for p in ps)
    return ProbSpace(normed, all(p == normed[0] for p in normed))


def uniform_space(n: int) -> ProbSpace:
    return build_space([1.0] * n)


def as_position(space: ProbSpace, X) -> np.ndarray:
    x = np.asarray(X, dtype=float).reshape(-1)
    if x.shape[0] != space.n:
        raise SpaceMismatch(f"position has {x.shape[0]} entries, space has {space.n} atoms")
    if not np.all(np.isfinite(x)):
        raise SpaceMismatch("position values must be finite")
    return x


def _require_uniform(space: ProbSpace) -> None:
    if not space.is_uniform:
        raise NonUniformSpace(
            "law-based comparisons need equal-probability atoms; call uniform_refine first"
        )


def _check_level(t: float) -> float:
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise LevelOutOfRange(f"level {t!r} is outside [0, 1]")
    return t


def sort_order(x: np.ndarray) -> np.ndarray:
    """Atom indices sorted by (value, atom index)."""
    return np.argsort(x, kind="stable")


def snap_rational(p: float, max_den: int = MAX_REFINEMENT) -> Fraction:
    frac = Fraction(p).limit_denominator(max_den)
    if abs(float(frac) - p) > SNAP_TOL:
        raise IrrationalProbability(f"probability {p!r} has no rational form with denominator <= {max_den}")
    return frac


def uniform_refine(
    space: ProbSpace, positions: Sequence, fractions: Sequence[Fraction] | None = None
) -> tuple[ProbSpace, list[np.ndarray]]:
    """Split every atom of mass k/L into k atoms of mass 1/L.

    ``fractions`` may supply the exact rational atom masses; otherwise each
    probability is snapped to a fraction with denominator at most 10**6.
    Replicas of an atom are contiguous and keep the original atom order.
    """
    if fractions is None:
        fracs = [snap_rational(p) for p in space.atom_probs]
    else:
        fracs = [Fraction(f) for f in fractions]
        if len(fracs) != space.n:
            raise SpaceMismatch("one fraction per atom is required")
    if sum(fracs) != 1:
        raise IrrationalProbability(f"snapped probabilities sum to {sum(fracs)}, not 1")
    lcd = math.lcm(*(f.denominator for f in fracs))
    if lcd > MAX_REFINEMENT:
        raise RefinementTooLarge(f"common denominator {lcd} exceeds {MAX_REFINEMENT}")
    counts = [f.numerator * (lcd // f.denominator) for f in fracs]
    refined = uniform_space(lcd)
    out = [np.repeat(as_position(space, X), counts) for X in positions]
    return refined, out


@dataclass(frozen=True)
class QuantileFunction:
    """Right-continuous step function q on [0, 1).

    ``cum[j]`` is the cumulative mass up to and including ``values[j]``; the
    function equals ``values[j]`` on ``[cum[j-1], cum[j])`` and q(1) is the
    left limit, i.e. the largest value.
    """

    cum: tuple[float, ...]
    values: tuple[float, ...]

    @property
    def steps(self) -> list[tuple[float, float]]:
        return list(zip(self.cum, self.values))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0,) + self.cum

    def __call__(self, t: float) -> float:
        t = _check_level(t)
        if t >= 1.0:
            return self.values[-1]
        j = bisect.bisect_right(self.cum, t + BREAKPOINT_TOL)
        return self.values[min(j, len(self.values) - 1)]

    def integral(self, a: float, b: float) -> float:
        """Exact integral of q over [a, b] with 0 <= a <= b <= 1."""
        total = 0.0
        lo = 0.0
        for c, v in zip(self.cum, self.values):
            width = min(c, b) - max(lo, a)
            if width > 0:
                total += v * width
            lo = c
            if lo >= b:
                break
        return total


def quantile_function(space: ProbSpace, X) -> QuantileFunction:
    x = as_position(space, X)
    order = sort_order(x)
    xs = x[order]
    ends = np.flatnonzero(np.append(xs[1:] != xs[:-1], True))
    if space.is_uniform:
        cum = (ends + 1) / space.n
    else:
        cum = np.cumsum(space.probs[order])[ends]
    cum[-1] = 1.0
    return QuantileFunction(tuple(cum.tolist()), tuple(xs[ends].tolist()))


def quantile(space: ProbSpace, X, t: float) -> float:
    """Upper quantile inf{x : F(x) > t}; at t = 1 the left limit."""
    return quantile_function(space, X)(_check_level(t))


def var(space: ProbSpace, X, t: float) -> float:
    return -quantile(space, X, t) + 0.0


def avar_from_quantile(q: QuantileFunction, t: float) -> float:
    if t == 0.0:
        return -q(0.0) + 0.0
    return -q.integral(0.0, t) / t + 0.0


def avar(space: ProbSpace, X, t: float) -> float:
    """Average of VaR_s over s in (0, t); at t = 0 this is VaR_0."""
    t = _check_level(t)
    return avar_from_quantile(quantile_function(space, X), t)


def distribution(space: ProbSpace, X) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Distinct values and the cumulative mass at each of them."""
    q = quantile_function(space, X)
    return q.values, q.cum


def same_distribution(space: ProbSpace, X, Y) -> bool:
    vx, cx = distribution(space, X)
    vy, cy = distribution(space, Y)
    if vx != vy:
        return False
    return all(abs(a - b) <= PROB_SUM_TOL for a, b in zip(cx, cy))


def is_comonotonic(space: ProbSpace, X, Y) -> bool:
    """No pair of atoms where X goes up while Y goes down."""
    x = as_position(space, X)
    y = as_position(space, Y)
    order = np.lexsort((y, x))
    return bool(np.all(np.diff(y[order]) >= 0))


def fsd_dominates(space: ProbSpace, X, Y) -> bool:
    """VaR_t(X) <= VaR_t(Y) at every level; sorted values compared pointwise."""
    _require_uniform(space)
    x = np.sort(as_position(space, X))
    y = np.sort(as_position(space, Y))
    return bool(np.all(x >= y - DOMINANCE_TOL))


def ssd_dominates(space: ProbSpace, X, Y) -> bool:
    """AVaR_t(X) <= AVaR_t(Y) at every level, as ascending partial sums."""
    _require_uniform(space)
    sx = np.cumsum(np.sort(as_position(space, X)))
    sy = np.cumsum(np.sort(as_position(space, Y)))
    return bool(np.all(sx >= sy - DOMINANCE_TOL))
