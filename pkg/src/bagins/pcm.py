"""Linguistic pairwise comparison matrices and their numeric realization.

A decision-maker's judgments are stored as upper-triangle entries carrying an
integer intensity grade (1..9) and a direction.  A :class:`ScaleAssignment`
maps every grade to a number; :func:`realize` turns the linguistic matrix into
a positive reciprocal matrix under that mapping.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

N_GRADES = 9
DEFAULT_EPS_GAP = 0.01
DEFAULT_V_MAX = 9.0

# Saaty-style wording; only the grade is part of the data contract.
DEFAULT_LABEL_NAMES = (
    "Equally",
    "Equally to moderately",
    "Moderately",
    "Moderately to strongly",
    "Strongly",
    "Strongly to very strongly",
    "Very strongly",
    "Very strongly to extremely",
    "Extremely",
)


class PCMFormatError(ValueError):
    """Raised when a serialized PCM cannot be parsed; ``location`` names the field or line."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ScaleError(ValueError):
    pass


class Direction(str, Enum):
    I_OVER_J = "i_over_j"
    J_OVER_I = "j_over_i"

    def flipped(self):
        return Direction.J_OVER_I if self is Direction.I_OVER_J else Direction.I_OVER_J


@dataclass(frozen=True)
class LinguisticLabel:
    index: int
    name: str

    def __post_init__(self):
        if not 1 <= self.index <= N_GRADES:
            raise ValueError(f"label grade out of range: {self.index}")


def label_set(names=DEFAULT_LABEL_NAMES, suffix=""):
    """Build the 9 labels of a scale, e.g. ``label_set(suffix=" Dense")``."""
    if len(names) != N_GRADES or len(set(names)) != N_GRADES:
        raise ValueError("a scale needs exactly 9 distinct label names")
    return tuple(LinguisticLabel(k + 1, name + suffix) for k, name in enumerate(names))


@dataclass(frozen=True)
class Judgment:
    i: int
    j: int
    grade: int
    direction: Direction = Direction.I_OVER_J

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.grade == 1:
            object.__setattr__(self, "direction", Direction.I_OVER_J)

    @property
    def pair(self):
        return (self.i, self.j)

    def label(self, labels=None):
        labels = labels or label_set()
        return labels[self.grade - 1]


def default_items(n):
    return [f"a{k + 1}" for k in range(n)]


@dataclass(frozen=True)
class LinguisticPCM:
    """Complete set of upper-triangle judgments for ``n`` alternatives.

    Judgments are kept sorted by pair so that two PCMs holding the same
    judgments compare equal regardless of input order.
    """

    id: str
    n: int
    judgments: tuple
    items: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(
            self, "judgments", tuple(sorted(self.judgments, key=lambda jd: (jd.i, jd.j)))
        )
        items = default_items(self.n) if self.items is None else self.items
        object.__setattr__(self, "items", tuple(items))

    def grades_used(self):
        """Distinct grades above 1 appearing in the judgments, ascending."""
        return sorted({jd.grade for jd in self.judgments if jd.grade > 1})


@dataclass(frozen=True)
class ScaleAssignment:
    """Numeric value for each grade: ``values[k - 1]`` is assigned to grade ``k``."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != N_GRADES:
            raise ScaleError(f"scale needs {N_GRADES} values, got {len(vals)}")
        if vals[0] != 1.0:
            raise ScaleError("indifference (grade 1) must map to exactly 1")
        if not all(np.isfinite(vals)) or min(vals) <= 0:
            raise ScaleError("scale values must be positive and finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls):
        return cls(tuple(range(1, N_GRADES + 1)))

    def __getitem__(self, grade):
        return self.values[grade - 1]

    def violations(self, eps_gap=DEFAULT_EPS_GAP, v_max=DEFAULT_V_MAX, tol=1e-9):
        out = []
        for k in range(1, N_GRADES):
            if self.values[k] < self.values[k - 1] + eps_gap - tol:
                out.append(f"gap between grades {k} and {k + 1} below {eps_gap}")
        if self.values[-1] > v_max + tol:
            out.append(f"grade 9 value {self.values[-1]} exceeds v_max {v_max}")
        return out

    def check(self, eps_gap=DEFAULT_EPS_GAP, v_max=DEFAULT_V_MAX):
        bad = self.violations(eps_gap, v_max)
        if bad:
            raise ScaleError("; ".join(bad))
        return self


def validate_pcm(pcm):
    """Return a list of invariant violations (empty when the PCM is well formed)."""
    problems = []
    n = pcm.n
    if not isinstance(n, int) or n < 2:
        return [f"n must be an integer >= 2, got {n!r}"]
    if len(pcm.items) != n:
        problems.append(f"expected {n} item names, got {len(pcm.items)}")
    expected = n * (n - 1) // 2
    if len(pcm.judgments) != expected:
        problems.append(f"expected {expected} judgments, got {len(pcm.judgments)}")
    seen = set()
    for jd in pcm.judgments:
        if not (0 <= jd.i < n and 0 <= jd.j < n):
            problems.append(f"index out of range in pair ({jd.i},{jd.j})")
            continue
        if jd.i == jd.j:
            problems.append(f"diagonal pair not allowed ({jd.i},{jd.j})")
            continue
        if jd.i > jd.j:
            problems.append(f"pair ({jd.i},{jd.j}) not in upper triangle")
            continue
        if not 1 <= jd.grade <= N_GRADES:
            problems.append(f"label grade out of range in pair ({jd.i},{jd.j}): {jd.grade}")
        if jd.pair in seen:
            problems.append(f"duplicate pair ({jd.i},{jd.j})")
        seen.add(jd.pair)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in seen:
                problems.append(f"missing pair ({i},{j})")
    return problems


def realize(pcm, scale, eps_gap=DEFAULT_EPS_GAP, v_max=DEFAULT_V_MAX):
    """Numeric reciprocal matrix of ``pcm`` under ``scale``."""
    scale.check(eps_gap, v_max)
    problems = validate_pcm(pcm)
    if problems:
        raise ValueError(f"invalid PCM {pcm.id!r}: " + "; ".join(problems))
    a = np.ones((pcm.n, pcm.n))
    for jd in pcm.judgments:
        v = scale[jd.grade]
        if jd.direction is Direction.I_OVER_J:
            a[jd.i, jd.j], a[jd.j, jd.i] = v, 1.0 / v
        else:
            a[jd.j, jd.i], a[jd.i, jd.j] = v, 1.0 / v
    return a


# --- serialization -----------------------------------------------------------

def _int_field(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise PCMFormatError(f"expected integer, got {value!r}", where)
    return value


def judgment_from_fields(i, j, grade, direction, n, where):
    i = _int_field(i, f"{where}.i")
    j = _int_field(j, f"{where}.j")
    grade = _int_field(grade, f"{where}.grade")
    if not 1 <= grade <= N_GRADES:
        raise PCMFormatError(f"label grade out of range: {grade}", f"{where}.grade")
    if i == j:
        raise PCMFormatError(f"diagonal pair not allowed ({i},{j})", where)
    if not (0 <= i < n and 0 <= j < n):
        raise PCMFormatError(f"index out of range ({i},{j}) for n={n}", where)
    if i > j:
        raise PCMFormatError(f"pair ({i},{j}) must have i < j", where)
    try:
        direction = Direction(direction)
    except ValueError:
        raise PCMFormatError(f"unknown direction {direction!r}", f"{where}.direction") from None
    return Judgment(i, j, grade, direction)


def pcm_from_dict(doc, where="$"):
    """Build a PCM from a decoded JSON document; keys beyond the schema are ignored."""
    if not isinstance(doc, dict):
        raise PCMFormatError("expected a JSON object", where)
    for key in ("id", "n", "items", "judgments"):
        if key not in doc:
            raise PCMFormatError(f"missing field {key!r}", where)
    if not isinstance(doc["id"], str):
        raise PCMFormatError("id must be a string", f"{where}.id")
    n = _int_field(doc["n"], f"{where}.n")
    if n < 2:
        raise PCMFormatError("n must be >= 2", f"{where}.n")
    items = doc["items"]
    if not isinstance(items, list) or len(items) != n or not all(isinstance(s, str) for s in items):
        raise PCMFormatError(f"items must be a list of {n} strings", f"{where}.items")
    if not isinstance(doc["judgments"], list):
        raise PCMFormatError("judgments must be a list", f"{where}.judgments")
    judgments = []
    for k, jd in enumerate(doc["judgments"]):
        loc = f"{where}.judgments[{k}]"
        if not isinstance(jd, dict):
            raise PCMFormatError("expected an object", loc)
        missing = [key for key in ("i", "j", "grade", "direction") if key not in jd]
        if missing:
            raise PCMFormatError(f"missing field(s) {missing}", loc)
        judgments.append(judgment_from_fields(jd["i"], jd["j"], jd["grade"], jd["direction"], n, loc))
    return LinguisticPCM(doc["id"], n, tuple(judgments), tuple(items))


def pcm_to_dict(pcm):
    return {
        "id": pcm.id,
        "n": pcm.n,
        "items": list(pcm.items),
        "judgments": [
            {"i": jd.i, "j": jd.j, "grade": jd.grade, "direction": jd.direction.value}
            for jd in pcm.judgments
        ],
    }


_CSV_HEADER = re.compile(r"^#\s*id=(?P<id>.*)\s+n=(?P<n>\d+)\s*$")


def _parse_csv(text):
    lines = text.splitlines()
    if not lines:
        raise PCMFormatError("empty input", "line 1")
    m = _CSV_HEADER.match(lines[0])
    if not m:
        raise PCMFormatError("expected comment line '# id=<id> n=<n>'", "line 1")
    pcm_id, n = m.group("id"), int(m.group("n"))
    if n < 2:
        raise PCMFormatError("n must be >= 2", "line 1")
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header != ["i", "j", "grade", "direction"]:
        raise PCMFormatError("expected header 'i,j,grade,direction'", "line 2")
    judgments = []
    for lineno, row in enumerate(reader, start=3):
        if not row:
            continue
        loc = f"line {lineno}"
        if len(row) != 4:
            raise PCMFormatError(f"expected 4 fields, got {len(row)}", loc)
        try:
            i, j, grade = (int(x) for x in row[:3])
        except ValueError:
            raise PCMFormatError(f"non-integer field in {row[:3]}", loc) from None
        judgments.append(judgment_from_fields(i, j, grade, row[3].strip(), n, loc))
    return LinguisticPCM(pcm_id, n, tuple(judgments))


def parse_pcm(text, fmt="json"):
    """Parse a PCM from UTF-8 text (or bytes) in ``json`` or ``csv`` format.

    CSV files carry no item names; parsed PCMs get the default names.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PCMFormatError(f"not UTF-8: {exc}") from None
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PCMFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
        return pcm_from_dict(doc)
    if fmt == "csv":
        return _parse_csv(text)
    raise ValueError(f"unknown format {fmt!r}")


def serialize_pcm(pcm, fmt="json"):
    if fmt == "json":
        return json.dumps(pcm_to_dict(pcm))
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# id={pcm.id} n={pcm.n}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "grade", "direction"])
        for jd in pcm.judgments:
            writer.writerow([jd.i, jd.j, jd.grade, jd.direction.value])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")
