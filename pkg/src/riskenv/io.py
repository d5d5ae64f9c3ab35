"""Reading scenario tables and measure descriptor files.

Scenario tables are comma-separated with a header row.  An optional first
column literally named ``prob`` carries atom probabilities; without it the
atoms are equally likely.  Every other column is one position.

Measure files are JSON: a list of objects (or ``{"measures": [...]}``), each
with a ``kind`` and the fields that kind needs.  See README.md for the schema.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from riskenv.duality import ScenarioMeasure, ScenarioSet
from riskenv.errors import InvalidInput
from riskenv.measures import (
    AVaR,
    ChoquetOf,
    ConcaveDistortion,
    Density,
    DiscreteMeasure,
    DistortionOfP,
    DominatedEnvGen,
    Entropic,
    ExpectedLossUnder,
    ExplicitTable,
    FsdEnvGen,
    LowerEnvelope,
    MixedAVaR,
    RiskMeasureSpec,
    ScenarioMax,
    SpectralVaR,
    SsdEnvGen,
    VaR,
    WorstCase,
)
from riskenv.space import ProbSpace, build_space, uniform_space

PROB_COLUMN = "prob"
PROB_TOL = 1e-9


class FormatError(InvalidInput):
    """Malformed input file; the message names the offending location."""


@dataclass(frozen=True)
class ScenarioTable:
    position_names: tuple[str, ...]
    probs: tuple[float, ...] | None
    matrix: np.ndarray  # atoms x positions

    @property
    def space(self) -> ProbSpace:
        if self.probs is None:
            return uniform_space(self.matrix.shape[0])
        return build_space(self.probs)

    def position(self, name: str) -> np.ndarray:
        try:
            return self.matrix[:, self.position_names.index(name)].copy()
        except ValueError:
            raise FormatError(f"no position named {name!r}; have {', '.join(self.position_names)}") from None


def _number(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"{where}: {text!r} is not a decimal number") from None
    if not math.isfinite(value):
        raise FormatError(f"{where}: {text!r} is not finite")
    return value


def read_scenarios(path) -> ScenarioTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    has_prob = header[0] == PROB_COLUMN
    names = header[1:] if has_prob else header
    if not names:
        raise FormatError(f"{path}: no position columns")
    if len(set(names)) != len(names) or PROB_COLUMN in names or any(not n for n in names):
        raise FormatError(f"{path}: position names must be nonempty and unique")
    if len(rows) < 2:
        raise FormatError(f"{path}: no scenario rows")
    probs: list[float] = []
    data: list[list[float]] = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: row {r} has {len(row)} fields, header has {len(header)}")
        cells = [c.strip() for c in row]
        if has_prob:
            p = _number(cells[0], f"{path}: row {r}, column {PROB_COLUMN!r}")
            if not p > 0:
                raise FormatError(f"{path}: row {r}, column {PROB_COLUMN!r}: probability {p!r} must be positive")
            probs.append(p)
            cells = cells[1:]
        data.append([_number(c, f"{path}: row {r}, column {name!r}") for c, name in zip(cells, names)])
    if has_prob:
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise FormatError(f"{path}: column {PROB_COLUMN!r} sums to {total!r}, expected 1")
    return ScenarioTable(tuple(names), tuple(probs) if has_prob else None, np.array(data, dtype=float))


# ---------------------------------------------------------------------------
# measure descriptors

_FIELDS = {
    "var": {"level"},
    "avar": {"level"},
    "worst-case": set(),
    "expected-loss": {"scenario"},
    "entropic": {"theta"},
    "spectral-var": {"weights", "density", "distortion"},
    "mixed-avar": {"weights"},
    "choquet": {"capacity"},
    "dominated-env": {"z"},
    "fsd-env": {"z"},
    "ssd-env": {"z"},
    "lower-envelope": {"members"},
    "scenario-max": {"dim", "constraints"},
}


@dataclass(frozen=True)
class NamedMeasure:
    name: str
    spec: RiskMeasureSpec


def _get(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise FormatError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _numlist(value: Any, where: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise FormatError(f"{where}: expected a nonempty list of numbers")
    return [_num(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _discrete(value: Any, where: str) -> DiscreteMeasure:
    if not isinstance(value, list) or not value:
        raise FormatError(f"{where}: expected a nonempty list of {{t, w}} objects")
    pairs = []
    for i, item in enumerate(value):
        if not isinstance(item, dict) or set(item) != {"t", "w"}:
            raise FormatError(f"{where}[{i}]: expected an object with fields t and w")
        pairs.append((_num(item["t"], f"{where}[{i}].t"), _num(item["w"], f"{where}[{i}].w")))
    return DiscreteMeasure.from_pairs(pairs)


def _capacity(value: Any, where: str):
    if not isinstance(value, dict) or len(value) != 1:
        raise FormatError(f"{where}: expected exactly one of distortion, power, table")
    (key, body), = value.items()
    if key == "distortion":
        return DistortionOfP(_distortion(body, f"{where}.distortion"))
    if key == "power":
        p = _num(body, f"{where}.power")
        if not p > 0:
            raise FormatError(f"{where}.power: exponent must be positive")
        return DistortionOfP(lambda u, p=p: u**p)
    if key == "table":
        table = _numlist(body, f"{where}.table")
        n = len(table).bit_length() - 1
        if len(table) != 1 << n:
            raise FormatError(f"{where}.table: length {len(table)} is not a power of two")
        return ExplicitTable(n, tuple(table))
    raise FormatError(f"{where}: unknown capacity type {key!r}")


def _distortion(value: Any, where: str) -> ConcaveDistortion:
    if not isinstance(value, dict) or set(value) != {"knots", "values"}:
        raise FormatError(f"{where}: expected an object with fields knots and values")
    return ConcaveDistortion(
        tuple(_numlist(value["knots"], f"{where}.knots")), tuple(_numlist(value["values"], f"{where}.values"))
    )


def parse_spec(obj: Any, where: str) -> RiskMeasureSpec:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    kind = _get(obj, "kind", where)
    if kind not in _FIELDS:
        raise FormatError(f"{where}.kind: unknown measure kind {kind!r}")
    extra = set(obj) - _FIELDS[kind] - {"kind", "name"}
    if extra:
        raise FormatError(f"{where}: unexpected field(s) {', '.join(sorted(extra))} for kind {kind!r}")
    try:
        if kind == "var":
            return VaR(_num(_get(obj, "level", where), f"{where}.level"))
        if kind == "avar":
            return AVaR(_num(_get(obj, "level", where), f"{where}.level"))
        if kind == "worst-case":
            return WorstCase()
        if kind == "expected-loss":
            return ExpectedLossUnder(ScenarioMeasure(tuple(_numlist(_get(obj, "scenario", where), f"{where}.scenario"))))
        if kind == "entropic":
            return Entropic(_num(_get(obj, "theta", where), f"{where}.theta"))
        if kind == "spectral-var":
            given = [k for k in ("weights", "density", "distortion") if k in obj]
            if len(given) != 1:
                raise FormatError(f"{where}: give exactly one of weights, density, distortion")
            if "weights" in obj:
                return SpectralVaR(_discrete(obj["weights"], f"{where}.weights"))
            if "distortion" in obj:
                return SpectralVaR(_distortion(obj["distortion"], f"{where}.distortion"))
            dens = obj["density"]
            if not isinstance(dens, dict) or not {"breaks", "heights"} <= set(dens) <= {"breaks", "heights", "decreasing"}:
                raise FormatError(f"{where}.density: expected breaks, heights and optional decreasing")
            return SpectralVaR(
                Density(
                    tuple(_numlist(dens["breaks"], f"{where}.density.breaks")),
                    tuple(_numlist(dens["heights"], f"{where}.density.heights")),
                    bool(dens.get("decreasing", False)),
                )
            )
        if kind == "mixed-avar":
            return MixedAVaR(_discrete(_get(obj, "weights", where), f"{where}.weights"))
        if kind == "choquet":
            return ChoquetOf(_capacity(_get(obj, "capacity", where), f"{where}.capacity"))
        if kind in ("dominated-env", "fsd-env", "ssd-env"):
            z = tuple(_numlist(_get(obj, "z", where), f"{where}.z"))
            return {"dominated-env": DominatedEnvGen, "fsd-env": FsdEnvGen, "ssd-env": SsdEnvGen}[kind](z)
        if kind == "lower-envelope":
            members = _get(obj, "members", where)
            if not isinstance(members, list) or not members:
                raise FormatError(f"{where}.members: expected a nonempty list")
            return LowerEnvelope(tuple(parse_spec(m, f"{where}.members[{i}]") for i, m in enumerate(members)))
        if kind == "scenario-max":
            rows = []
            for i, row in enumerate(obj.get("constraints", [])):
                if not isinstance(row, dict) or set(row) != {"a", "b"}:
                    raise FormatError(f"{where}.constraints[{i}]: expected an object with fields a and b")
                rows.append((tuple(_numlist(row["a"], f"{where}.constraints[{i}].a")), _num(row["b"], f"{where}.constraints[{i}].b")))
            if "dim" in obj:
                dim = _num(obj["dim"], f"{where}.dim")
            elif rows:
                dim = len(rows[0][0])
            else:
                raise FormatError(f"{where}: scenario-max needs dim or constraints")
            return ScenarioMax(ScenarioSet(int(dim), tuple(rows)))
    except FormatError:
        raise
    except InvalidInput as exc:
        raise FormatError(f"{where}: {exc}") from None
    raise AssertionError(kind)


def parse_measures(doc: Any, source: str = "measures") -> list[NamedMeasure]:
    if isinstance(doc, dict) and set(doc) == {"measures"}:
        doc = doc["measures"]
    if not isinstance(doc, list):
        raise FormatError(f"{source}: expected a list of measure objects")
    if not doc:
        raise FormatError(f"{source}: no measures given")
    out = []
    for i, obj in enumerate(doc):
        where = f"{source}[{i}]"
        spec = parse_spec(obj, where)
        name = obj.get("name", f"{obj['kind']}#{i}")
        if not isinstance(name, str) or not name:
            raise FormatError(f"{where}.name: expected a nonempty string")
        out.append(NamedMeasure(name, spec))
    names = [m.name for m in out]
    if len(set(names)) != len(names):
        raise FormatError(f"{source}: measure names must be unique")
    return out


def read_measures(path) -> list[NamedMeasure]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_measures(doc, str(path))
