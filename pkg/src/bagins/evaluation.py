"""Compare recovered priorities against ground truth, per participant and in aggregate."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .heuristic import IndividualizationConfig, individualize_scale
from .pcm import PCMFormatError, ScaleAssignment, parse_pcm, pcm_from_dict, realize, validate_pcm
from .priority import consistency, default_ri_table

EXPERIMENTS = ("visual", "mass", "synthetic")
METHODS = ("fixed_saaty", "bagins")
METRICS = ("euclidean", "mae", "kendall_tau", "cr_before", "cr_after")

# Natural scales of the two laboratory experiments (dots per image, grams per bottle).
VISUAL_DOTS = (10, 20, 30, 40, 50, 60, 70, 80, 90)
MASS_GRAMS = (50, 100, 150, 200, 250, 300, 350, 400, 450)

# Weights are rounded before ranking so float noise cannot split true ties.
RANK_DECIMALS = 12


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    experiment: str
    natural_values: tuple

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        vals = tuple(float(v) for v in self.natural_values)
        if not vals or min(vals) <= 0:
            raise ValueError("natural values must be positive")
        object.__setattr__(self, "natural_values", vals)

    @property
    def n(self):
        return len(self.natural_values)

    @property
    def weights(self):
        v = np.asarray(self.natural_values)
        return v / v.sum()

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(doc["experiment"], tuple(doc["natural_values"]))


@dataclass(frozen=True)
class EvaluationRecord:
    participant: str
    method: str
    euclidean: float
    mae: float
    kendall_tau: float
    cr_before: float
    cr_after: float


def kendall_tau_b(x, y):
    """Kendall tau-b by pair counting, on values rounded to ``RANK_DECIMALS``.

    Tau-b is undefined when a side is entirely tied; that case scores 1 if
    both sides tie the same pairs (identical rankings) and 0 otherwise.
    """
    x = np.round(np.asarray(x, dtype=float), RANK_DECIMALS)
    y = np.round(np.asarray(y, dtype=float), RANK_DECIMALS)
    i, j = np.triu_indices(len(x), 1)
    sx, sy = np.sign(x[i] - x[j]), np.sign(y[i] - y[j])
    untied_x, untied_y = int(np.count_nonzero(sx)), int(np.count_nonzero(sy))
    if untied_x == 0 or untied_y == 0:
        return 1.0 if np.array_equal(sx, sy) else 0.0
    s = int(np.sum(sx * sy))
    if s * s == untied_x * untied_y:
        return float(np.sign(s))
    return s / math.sqrt(untied_x * untied_y)


def distance_metrics(derived, truth):
    """``(euclidean, mae, kendall_tau)`` between two priority vectors."""
    d = np.asarray(derived, dtype=float)
    t = np.asarray(truth, dtype=float)
    if d.shape != t.shape:
        raise ValueError(f"dimension mismatch: {d.shape} vs {t.shape}")
    diff = d - t
    return float(np.sqrt(np.sum(diff * diff))), float(np.mean(np.abs(diff))), kendall_tau_b(d, t)


def evaluate_participant(pcm, truth, cfg=None, ri=None, method="eigenvector"):
    """Evaluate the fixed 1..9 scale and the individualized scale for one PCM.

    Returns ``(fixed_record, bagins_record)``.  Both records carry the
    baseline objective as ``cr_before``; ``cr_after`` is the objective the
    respective scale achieves.
    """
    cfg = cfg or IndividualizationConfig()
    ri = ri or default_ri_table()
    if truth.n != pcm.n:
        raise DatasetError(f"{pcm.id}: truth has {truth.n} values, PCM has n={pcm.n}")
    result = individualize_scale(pcm, cfg, ri)
    records = []
    for name, scale, after in (
        ("fixed_saaty", ScaleAssignment.default(), result.baseline_objective),
        ("bagins", result.scale, result.objective_value),
    ):
        rep = consistency(realize(pcm, scale, cfg.eps_gap, cfg.v_max), ri, method)
        euc, mae, tau = distance_metrics(rep.weights, truth.weights)
        records.append(EvaluationRecord(pcm.id, name, euc, mae, tau, result.baseline_objective, after))
    return tuple(records)


def _summary(values):
    return {
        "mean": math.fsum(values) / len(values),
        "median": statistics.median(values),
        "stdev": statistics.pstdev(values),
    }


def aggregate(records):
    """Per-method mean/median/population stdev of each metric plus paired statistics.

    Records are sorted by (participant, method) first, so the result does not
    depend on input order.
    """
    if not records:
        raise ValueError("cannot aggregate an empty record list")
    records = sorted(records, key=lambda r: (r.participant, r.method))
    by_method = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r)
    summary = {"count": len(records), "methods": {}}
    for m in sorted(by_method):
        rows = by_method[m]
        summary["methods"][m] = {"participants": len(rows)}
        for metric in METRICS:
            summary["methods"][m][metric] = _summary([getattr(r, metric) for r in rows])

    fixed = {r.participant: r for r in by_method.get("fixed_saaty", [])}
    paired = [(fixed[r.participant], r) for r in by_method.get("bagins", []) if r.participant in fixed]
    if paired:
        d_euc = [b.euclidean - f.euclidean for f, b in paired]
        d_cr = [b.cr_after - f.cr_after for f, b in paired]
        summary["paired"] = {
            "participants": len(paired),
            "mean_delta_euclidean": math.fsum(d_euc) / len(paired),
            "mean_delta_mae": math.fsum(b.mae - f.mae for f, b in paired) / len(paired),
            "mean_delta_kendall_tau": math.fsum(b.kendall_tau - f.kendall_tau for f, b in paired) / len(paired),
            "mean_delta_cr": math.fsum(d_cr) / len(paired),
            "fraction_improved_euclidean": sum(d < 0 for d in d_euc) / len(paired),
            "fraction_improved_cr": sum(d < 0 for d in d_cr) / len(paired),
        }
    return summary


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in fields(EvaluationRecord)])
    for r in sorted(records, key=lambda r: (r.participant, METHODS.index(r.method))):
        writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])
    return buf.getvalue()


# --- dataset ingestion -------------------------------------------------------

def _checked(pcm, where):
    problems = validate_pcm(pcm)
    if problems:
        raise DatasetError(f"{where}: " + "; ".join(problems))
    return pcm


def _load_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: {exc.msg}") from None
            try:
                pcm = pcm_from_dict(doc)
            except PCMFormatError as exc:
                raise DatasetError(f"{where}: {exc}") from None
            _checked(pcm, where)
            truth = None
            if "true_weights" in doc:
                truth = GroundTruth("synthetic", tuple(doc["true_weights"]))
            out.append((pcm, truth))
    return out


def _load_dir(path):
    out = []
    for f in sorted(path.iterdir()):
        if f.suffix not in (".csv", ".json") or f.name == "truth.json":
            continue
        try:
            pcm = parse_pcm(f.read_bytes(), f.suffix[1:])
        except PCMFormatError as exc:
            raise DatasetError(f"{f}: {exc}") from None
        out.append((_checked(pcm, f), None))
    return out


def load_dataset(path, fmt=None, truth=None):
    """Load PCMs (and ground truth where known) from a JSON-lines file or a directory.

    ``fmt`` is ``"jsonl"`` or ``"csv_dir"`` (a directory of ``.csv`` and/or
    single-document ``.json`` PCM files); it is inferred from ``path`` when
    omitted.  A ``truth`` sidecar (path or :class:`GroundTruth`) applies to
    every matrix; a directory's own ``truth.json`` is used when no sidecar is
    given.  Returns a list of ``(pcm, truth_or_None)``.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file or directory")
    if fmt is None:
        fmt = "csv_dir" if path.is_dir() else "jsonl"
    if fmt == "jsonl":
        rows = _load_jsonl(path)
    elif fmt == "csv_dir":
        if not path.is_dir():
            raise DatasetError(f"{path}: not a directory")
        rows = _load_dir(path)
        if truth is None and (path / "truth.json").exists():
            truth = path / "truth.json"
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")

    if truth is not None and not isinstance(truth, GroundTruth):
        try:
            truth = GroundTruth.from_json(Path(truth).read_text(encoding="utf-8"))
        except (OSError, KeyError, ValueError) as exc:
            raise DatasetError(f"{truth}: bad ground-truth sidecar: {exc}") from None
    if truth is not None:
        rows = [(pcm, truth) for pcm, _ in rows]
    for pcm, t in rows:
        if t is not None and t.n != pcm.n:
            raise DatasetError(f"{pcm.id}: truth has {t.n} values, PCM has n={pcm.n}")
    return rows
