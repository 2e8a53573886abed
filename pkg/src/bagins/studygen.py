"""Synthetic numerical studies: known weights, verbalized by a simulated decision-maker.

Every random draw comes from a substream keyed by ``(seed, stream_index,
purpose)``, so instance ``k`` of a batch depends only on ``(seed, k)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .pcm import Direction, Judgment, LinguisticPCM, ScaleAssignment, pcm_to_dict

WEIGHT_MODELS = ("uniform_simplex", "table1_fixed")
_WEIGHTS, _PERTURB = 0, 1


@dataclass(frozen=True)
class StudyConfig:
    n: int = 9
    matrices: int = 100
    true_scale: ScaleAssignment = field(default_factory=ScaleAssignment.default)
    perturb_prob: float = 0.0
    weight_model: str = "uniform_simplex"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.true_scale, ScaleAssignment):
            object.__setattr__(self, "true_scale", ScaleAssignment(tuple(self.true_scale)))
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.matrices < 1:
            raise ValueError("matrices must be >= 1")
        if not 0.0 <= self.perturb_prob <= 1.0:
            raise ValueError("perturb_prob must lie in [0, 1]")
        if self.weight_model not in WEIGHT_MODELS:
            raise ValueError(f"weight_model must be one of {WEIGHT_MODELS}")

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self):
        return {
            "n": self.n,
            "matrices": self.matrices,
            "true_scale": list(self.true_scale.values),
            "perturb_prob": self.perturb_prob,
            "weight_model": self.weight_model,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SyntheticInstance:
    true_weights: tuple
    pcm: LinguisticPCM
    true_scale: ScaleAssignment
    perturbed_pairs: tuple = ()

    def to_dict(self):
        doc = pcm_to_dict(self.pcm)
        doc["true_weights"] = list(self.true_weights)
        doc["true_scale"] = list(self.true_scale.values)
        doc["perturbed_pairs"] = [list(p) for p in self.perturbed_pairs]
        return doc

    def to_json(self):
        return json.dumps(self.to_dict())


def _rng(seed, stream_index, purpose):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_index, purpose)))


def table1_weights(n=9):
    """w_i proportional to i; for n = 9 these are 1/45 .. 9/45."""
    total = n * (n + 1) / 2
    return np.arange(1, n + 1) / total


def sample_weights(cfg, stream_index):
    if cfg.weight_model == "table1_fixed":
        return table1_weights(cfg.n)
    draw = _rng(cfg.seed, stream_index, _WEIGHTS).exponential(size=cfg.n)
    return draw / draw.sum()


def discretize(w, true_scale, pcm_id="synthetic", items=None):
    """Verbalize weight ratios: each pair gets the grade whose value is nearest its ratio."""
    w = np.asarray(w, dtype=float)
    vals = np.asarray(true_scale.values)
    n = len(w)
    judgments = []
    for i in range(n):
        for j in range(i + 1, n):
            r = max(w[i], w[j]) / min(w[i], w[j])
            # argmin returns the first minimum, i.e. ties go to the lower grade
            grade = int(np.argmin(np.abs(vals - r))) + 1
            direction = Direction.I_OVER_J if w[i] >= w[j] else Direction.J_OVER_I
            judgments.append(Judgment(i, j, grade, direction))
    return LinguisticPCM(pcm_id, n, tuple(judgments), items)


def _shift(jd, up):
    if up:
        if jd.grade == 9:
            return Judgment(jd.i, jd.j, 8, jd.direction)
        return Judgment(jd.i, jd.j, jd.grade + 1, jd.direction)
    if jd.grade == 1:
        return Judgment(jd.i, jd.j, 2, Direction.J_OVER_I)
    return Judgment(jd.i, jd.j, jd.grade - 1, jd.direction)


def perturb(pcm, perturb_prob, seed, stream_index):
    """Shift each judgment by one grade with probability ``perturb_prob``.

    Up and down are equally likely.  Grade 9 cannot go up and drops to 8;
    grade 1 going down becomes grade 2 in the opposite direction.
    Returns ``(new_pcm, perturbed_pairs)``.
    """
    rng = _rng(seed, stream_index, _PERTURB)
    m = len(pcm.judgments)
    hit = rng.random(m) < perturb_prob
    up = rng.random(m) < 0.5
    out, pairs = [], []
    for k, jd in enumerate(pcm.judgments):
        if hit[k]:
            out.append(_shift(jd, bool(up[k])))
            pairs.append(jd.pair)
        else:
            out.append(jd)
    return LinguisticPCM(pcm.id, pcm.n, tuple(out), pcm.items), tuple(pairs)


def generate_instance(cfg, k):
    w = sample_weights(cfg, k)
    pcm = discretize(w, cfg.true_scale, pcm_id=f"syn-{cfg.seed}-{k:05d}")
    pcm, pairs = perturb(pcm, cfg.perturb_prob, cfg.seed, k)
    return SyntheticInstance(tuple(float(x) for x in w), pcm, cfg.true_scale, pairs)


def generate_batch(cfg):
    return [generate_instance(cfg, k) for k in range(cfg.matrices)]


def write_jsonl(instances, fh):
    for inst in instances:
        fh.write(inst.to_json() + "\n")
