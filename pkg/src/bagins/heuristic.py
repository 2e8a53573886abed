"""Individualized numerical scales (BAGINS).

Each decision-maker gets their own mapping from linguistic grades to numbers,
chosen to make their realized pairwise comparison matrix as consistent as
possible.  The search is a deterministic coordinate descent over the values
of the grades the decision-maker actually used, with a coarse-to-fine step
schedule.  :func:`oracle_grid_search` enumerates a lattice exhaustively and
exists to validate the heuristic on small inputs.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .pcm import N_GRADES, Direction, ScaleAssignment, realize, validate_pcm
from .priority import (
    batch_lambda_max,
    consistency_index,
    consistency_ratio,
    default_ri_table,
    eigen_priority,
)

OBJECTIVES = ("cr", "ci", "lambda_max_gap")
# Objective decreases smaller than this are treated as numerical noise.
IMPROVE_TOL = 1e-12
ORACLE_TIE_TOL = 1e-9
ORACLE_MAX_GRADES = 4


@dataclass(frozen=True)
class IndividualizationConfig:
    objective: str = "cr"
    step_schedule: tuple = (1.0, 0.5, 0.25, 0.1, 0.05, 0.01)
    eps_gap: float = 0.01
    v_max: float = 9.0
    max_passes: int = 50
    tie_break: str = "prefer_default_scale"

    def __post_init__(self):
        object.__setattr__(self, "step_schedule", tuple(float(s) for s in self.step_schedule))
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        steps = self.step_schedule
        if not steps or any(s <= 0 for s in steps) or any(b >= a for a, b in zip(steps, steps[1:])):
            raise ValueError("step_schedule must be non-empty, positive and strictly decreasing")
        if self.eps_gap <= 0:
            raise ValueError("eps_gap must be positive")
        # the fixed 1..9 scale must stay feasible so it can serve as the baseline
        if self.v_max < N_GRADES or self.v_max < 1 + (N_GRADES - 1) * self.eps_gap:
            raise ValueError("v_max must be >= 9 and >= 1 + 8 * eps_gap")
        if self.eps_gap > 1.0:
            raise ValueError("eps_gap must not exceed the unit spacing of the default scale")
        if not isinstance(self.max_passes, int) or self.max_passes < 1:
            raise ValueError("max_passes must be a positive integer")
        if self.tie_break != "prefer_default_scale":
            raise ValueError(f"unknown tie_break {self.tie_break!r}")

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self):
        d = asdict(self)
        d["step_schedule"] = list(self.step_schedule)
        return d


@dataclass(frozen=True)
class IndividualizationResult:
    id: str
    scale: ScaleAssignment
    objective_value: float
    baseline_objective: float
    evaluations: int
    trace: list = field(default=None, compare=False)

    @property
    def improvement(self):
        return self.baseline_objective - self.objective_value

    def to_dict(self):
        return {
            "id": self.id,
            "scale": list(self.scale.values),
            "objective": self.objective_value,
            "baseline": self.baseline_objective,
            "improvement": self.improvement,
            "evaluations": self.evaluations,
        }


def _measure(lam, n, kind, ri):
    if kind == "lambda_max_gap":
        return max(0.0, lam - n)
    ci = consistency_index(lam, n)
    if kind == "ci":
        return ci
    return consistency_ratio(ci, n, ri)


def objective(pcm, scale, cfg=None, ri=None):
    """Inconsistency of ``realize(pcm, scale)`` as selected by ``cfg.objective``."""
    cfg = cfg or IndividualizationConfig()
    ri = ri or default_ri_table()
    a = realize(pcm, scale, cfg.eps_gap, cfg.v_max)
    _, lam, _ = eigen_priority(a)
    return _measure(lam, pcm.n, cfg.objective, ri)


def complete_scale(anchors, v_max=9.0):
    """Full 9-value scale from values of the used grades.

    Grades between two anchors are interpolated linearly; grades above the
    highest anchor keep unit spacing when ``v_max`` allows it, otherwise they
    are spread evenly up to ``v_max``.  With the default values as anchors the
    default scale comes back unchanged.
    """
    pts = sorted({1: 1.0, **{int(g): float(v) for g, v in anchors.items()}}.items())
    values = [0.0] * N_GRADES
    for (ga, va), (gb, vb) in zip(pts, pts[1:]):
        for k in range(ga, gb):
            values[k - 1] = va + (vb - va) * (k - ga) / (gb - ga)
    g_top, v_top = pts[-1]
    values[g_top - 1] = v_top
    if g_top < N_GRADES:
        room = N_GRADES - g_top
        spacing = 1.0 if v_top + room <= v_max else (v_max - v_top) / room
        for k in range(g_top + 1, N_GRADES + 1):
            values[k - 1] = v_top + spacing * (k - g_top)
    return ScaleAssignment(tuple(values))


class _Realizer:
    """Index arrays to rebuild a PCM's numeric matrix quickly for many scales."""

    def __init__(self, pcm, used):
        self.n = pcm.n
        pos = {g: k for k, g in enumerate(used)}
        rows, cols, slots = [], [], []
        for jd in pcm.judgments:
            if jd.grade == 1:
                continue
            hi, lo = (jd.i, jd.j) if jd.direction is Direction.I_OVER_J else (jd.j, jd.i)
            rows.append(hi)
            cols.append(lo)
            slots.append(pos[jd.grade])
        self.rows = np.array(rows, dtype=int)
        self.cols = np.array(cols, dtype=int)
        self.slots = np.array(slots, dtype=int)

    def matrix(self, used_values):
        v = np.asarray(used_values, dtype=float)[self.slots]
        a = np.ones((self.n, self.n))
        a[self.rows, self.cols] = v
        a[self.cols, self.rows] = 1.0 / v
        return a

    def stack(self, used_values):
        v = np.asarray(used_values, dtype=float)[:, self.slots]
        m = np.ones((v.shape[0], self.n, self.n))
        m[:, self.rows, self.cols] = v
        m[:, self.cols, self.rows] = 1.0 / v
        return m


class _Evaluator:
    def __init__(self, pcm, used, cfg, ri):
        self.realizer = _Realizer(pcm, used)
        self.n = pcm.n
        self.cfg = cfg
        self.ri = ri
        self.cache = {}

    def __call__(self, key):
        hit = self.cache.get(key)
        if hit is None:
            _, lam, _ = eigen_priority(self.realizer.matrix(key))
            hit = self.cache[key] = _measure(lam, self.n, self.cfg.objective, self.ri)
        return hit


def _limits(used, cfg):
    """Absolute range of each used grade that still leaves room for all other grades."""
    lo = [1.0 + (g - 1) * cfg.eps_gap for g in used]
    hi = [cfg.v_max - (N_GRADES - g) * cfg.eps_gap for g in used]
    return lo, hi


def _move(x, used, idx, target, cfg, limits):
    """Set grade ``used[idx]`` to ``target`` (clamped to its absolute range) and push
    any neighbours that end up closer than the minimum gap along with it."""
    lo, hi = limits
    y = list(x)
    y[idx] = min(max(target, lo[idx]), hi[idx])
    for k in range(idx + 1, len(used)):
        floor = y[k - 1] + (used[k] - used[k - 1]) * cfg.eps_gap
        if y[k] >= floor:
            break
        y[k] = floor
    for k in range(idx - 1, -1, -1):
        ceil = y[k + 1] - (used[k + 1] - used[k]) * cfg.eps_gap
        if y[k] <= ceil:
            break
        y[k] = ceil
    # keeps repeated +/- step arithmetic from accumulating float drift
    return [round(v, 10) for v in y]


def individualize_scale(pcm, cfg=None, ri=None, start=None, keep_trace=False):
    """Search for the scale that minimizes the inconsistency of ``pcm``.

    Only grades present in the PCM are free variables; the remaining grades
    are filled in by :func:`complete_scale`.  Each sweep visits the used
    grades in ascending order and tries ``v +/- step``; a move that would
    come within ``eps_gap`` of a neighbouring grade pushes that neighbour
    along instead of being cut short, so tied-up grades can shift together.
    The better candidate is taken if it strictly improves.  A sweep without
    improvement moves on to the next step size; after the finest step the
    coarser steps are re-checked, and the search ends once a sweep at every
    step size leaves the scale unchanged, or after ``max_passes`` sweeps.
    """
    cfg = cfg or IndividualizationConfig()
    ri = ri or default_ri_table()
    problems = validate_pcm(pcm)
    if problems:
        raise ValueError(f"invalid PCM {pcm.id!r}: " + "; ".join(problems))
    used = pcm.grades_used()
    default = ScaleAssignment.default()
    if not used:
        base = objective(pcm, default, cfg, ri)
        return IndividualizationResult(pcm.id, default, base, base, 1, [] if keep_trace else None)

    ev = _Evaluator(pcm, used, cfg, ri)
    baseline = ev(tuple(float(g) for g in used))
    if start is None:
        x = [float(g) for g in used]
    else:
        start.check(cfg.eps_gap, cfg.v_max)
        x = [start[g] for g in used]
    cur = ev(tuple(x))
    trace = [(0, cur)]

    limits = _limits(used, cfg)

    def sweep(step):
        nonlocal x, cur
        improved = False
        for idx, g in enumerate(used):
            v = x[idx]
            best_y, best_val = None, None
            for target in (v + step, v - step):
                y = _move(x, used, idx, target, cfg, limits)
                if y == x:
                    continue
                val = ev(tuple(y))
                if best_val is None or val < best_val - IMPROVE_TOL or (
                    abs(val - best_val) <= IMPROVE_TOL and abs(y[idx] - g) < abs(best_y[idx] - g)
                ):
                    best_y, best_val = y, val
            if best_val is not None and best_val < cur - IMPROVE_TOL:
                x, cur = best_y, best_val
                improved = True
        return improved

    n_levels = len(cfg.step_schedule)
    level, clean, passes = 0, set(), 0
    while passes < cfg.max_passes:
        improved = sweep(cfg.step_schedule[level])
        passes += 1
        trace.append((passes, cur))
        if improved:
            clean.clear()
            continue
        clean.add(level)
        pending = [(level + d) % n_levels for d in range(1, n_levels + 1)]
        pending = [lv for lv in pending if lv not in clean]
        if not pending:
            break
        level = pending[0]

    if cur > baseline:
        x, cur = [float(g) for g in used], baseline
    scale = complete_scale(dict(zip(used, x)), cfg.v_max)
    return IndividualizationResult(
        pcm.id, scale, cur, baseline, len(ev.cache), trace if keep_trace else None
    )


def oracle_grid_search(pcm, grid_step=0.25, cfg=None, ri=None):
    """Exhaustive minimum over lattice values ``{1, 1 + grid_step, ..., v_max}``.

    Every feasible strictly increasing assignment of lattice values to the
    used grades is scored with LAPACK eigenvalues.  Near-ties (1e-9) go to
    the assignment closest to the default scale in L1 distance.  Returns
    ``(scale, objective)``.
    """
    cfg = cfg or IndividualizationConfig()
    ri = ri or default_ri_table()
    problems = validate_pcm(pcm)
    if problems:
        raise ValueError(f"invalid PCM {pcm.id!r}: " + "; ".join(problems))
    if grid_step < 0.25:
        raise ValueError("grid_step must be >= 0.25")
    used = pcm.grades_used()
    if len(used) > ORACLE_MAX_GRADES:
        raise ValueError(
            f"{len(used)} distinct grades above 1; enumeration supports at most {ORACLE_MAX_GRADES}"
        )
    realizer = _Realizer(pcm, used)
    if not used:
        lam = batch_lambda_max(realizer.stack(np.zeros((1, 0))))[0]
        return ScaleAssignment.default(), _measure(lam, pcm.n, cfg.objective, ri)

    count = int(np.floor((cfg.v_max - 1.0) / grid_step + 1e-9))
    lattice = 1.0 + grid_step * np.arange(1, count + 1)
    eps = cfg.eps_gap
    grades = np.array(used)
    gaps = np.diff(np.concatenate(([1], grades))) * eps
    upper = cfg.v_max - (N_GRADES - grades) * eps
    combos = np.array(list(itertools.combinations(lattice, len(used))))
    prev = np.concatenate((np.ones((len(combos), 1)), combos[:, :-1]), axis=1)
    ok = np.all(combos - prev >= gaps - 1e-12, axis=1) & np.all(combos <= upper + 1e-12, axis=1)
    combos = combos[ok]

    scores = np.empty(len(combos))
    for start in range(0, len(combos), 20_000):
        chunk = combos[start:start + 20_000]
        lam = batch_lambda_max(realizer.stack(chunk))
        scores[start:start + len(chunk)] = [_measure(x, pcm.n, cfg.objective, ri) for x in lam]

    near = np.flatnonzero(scores <= scores.min() + ORACLE_TIE_TOL)
    dist = np.abs(combos[near] - grades).sum(axis=1)
    best = near[np.argmin(dist)]
    return complete_scale(dict(zip(used, combos[best])), cfg.v_max), float(scores[best])
