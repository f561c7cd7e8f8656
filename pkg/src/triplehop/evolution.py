"""Single-island MAP-Elites over operator-triple candidates.

The archive is keyed by fitness alone, discretized into 150 bins over a fixed
per-problem range; each bin keeps the strictly best candidate ever assigned to
it. Parents are drawn from the archive with probability shifted-proportional
to fitness, offspring come from a pluggable mutation operator, and every child
is scored by a short basin-hopping run under the discard policy.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import CandidateDiscarded

BINS = 150


@dataclass
class Candidate:
    id: str
    kind: str                    # "builtin-parametric" or "external-process"
    payload: dict                # hyperparameters, or a launch spec for a process
    generation: int = 0
    parent_ids: tuple = ()
    fitness: Optional[float] = None
    metrics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "payload": self.payload,
                "generation": self.generation, "parent_ids": list(self.parent_ids),
                "fitness": self.fitness, "metrics": self.metrics}

    @classmethod
    def from_json(cls, obj: dict) -> "Candidate":
        return cls(id=obj["id"], kind=obj["kind"], payload=obj["payload"],
                   generation=obj.get("generation", 0),
                   parent_ids=tuple(obj.get("parent_ids", ())),
                   fitness=obj.get("fitness"), metrics=obj.get("metrics", {}))


class Archive:
    """150 fitness-binned elite slots with strictly-improving replacement."""

    def __init__(self, fitness_range: tuple[float, float], generation: int = 0):
        lo, hi = float(fitness_range[0]), float(fitness_range[1])
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("fitness_range must be a finite (lo, hi) with lo < hi")
        self.fitness_range = (lo, hi)
        self.bins: list[Optional[Candidate]] = [None] * BINS
        self.generation = generation

    def bin_index(self, fitness: float) -> int:
        lo, hi = self.fitness_range
        idx = int(math.floor(BINS * (fitness - lo) / (hi - lo)))
        return min(max(idx, 0), BINS - 1)

    def insert(self, cand: Candidate) -> tuple[bool, Optional[str]]:
        """Insert iff the bin is empty or strictly beaten; returns (inserted, reason)."""
        if cand.fitness is None or not math.isfinite(cand.fitness):
            return False, "non-finite fitness"
        idx = self.bin_index(cand.fitness)
        incumbent = self.bins[idx]
        if incumbent is not None and cand.fitness <= incumbent.fitness:
            return False, f"bin {idx} held by fitness {incumbent.fitness}"
        self.bins[idx] = cand
        return True, None

    def occupied(self) -> list[Candidate]:
        return [c for c in self.bins if c is not None]

    def best(self) -> Optional[Candidate]:
        occ = self.occupied()
        return max(occ, key=lambda c: c.fitness) if occ else None

    def stats(self) -> dict:
        occ = self.occupied()
        if not occ:
            return {"occupancy": 0, "best": None, "mean": None}
        fit = [c.fitness for c in occ]
        return {"occupancy": len(occ), "best": max(fit),
                "mean": sum(fit) / len(fit)}

    def save(self, path) -> None:
        obj = {"fitness_range": list(self.fitness_range),
               "generation": self.generation,
               "bins": [c.to_json() if c else None for c in self.bins]}
        Path(path).write_text(json.dumps(obj, indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "Archive":
        obj = json.loads(Path(path).read_text())
        archive = cls(tuple(obj["fitness_range"]), generation=obj["generation"])
        for idx, entry in enumerate(obj["bins"]):
            if entry is not None:
                archive.bins[idx] = Candidate.from_json(entry)
        return archive


def select_elites(archive: Archive, n: int, seed: int,
                  mode: str = "shifted-proportional") -> list[Candidate]:
    """Sample n candidates with replacement, weighted by shifted fitness.

    Weights are fitness - min + eps so that negative fitness ranges stay
    normalizable; when every fitness ties the sampling is uniform. The
    rank-proportional mode weighs candidates by their fitness rank instead.
    """
    occ = archive.occupied()
    if not occ:
        raise ValueError("archive is empty")
    fit = np.array([c.fitness for c in occ])
    if mode == "rank-proportional":
        order = np.argsort(np.argsort(fit))
        weights = order + 1.0
    else:
        span = fit.max() - fit.min()
        if span == 0.0:
            weights = np.ones(len(occ))
        else:
            eps = 1e-6 * (span + 1.0)
            weights = fit - fit.min() + eps
    probs = weights / weights.sum()
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(occ), size=n, replace=True, p=probs)
    return [occ[i] for i in picks]


def mutate_builtin(parents: list[dict], seed: int, spec: dict,
                   scale: float = 0.2, flip_prob: float = 0.1) -> dict:
    """Field-wise parent mixing plus bounded multiplicative jitter.

    Each field is copied from a random parent; numeric fields are then scaled
    by exp(N(0, scale)) and clamped to their declared bounds, enum fields flip
    to another option with probability flip_prob. scale=0, flip_prob=0 is the
    zero-variance hook used to test determinism.
    """
    if not parents:
        raise ValueError("need at least one parent payload")
    rng = np.random.default_rng(seed)
    child: dict = {}
    for name, fieldspec in spec.items():
        src = parents[int(rng.integers(len(parents)))]
        value = src[name]
        kind = fieldspec[0]
        if kind == "enum":
            options = fieldspec[1]
            if rng.random() < flip_prob:
                others = [o for o in options if o != value]
                value = others[int(rng.integers(len(others)))] if others else value
        else:
            lo, hi = fieldspec[1], fieldspec[2]
            factor = math.exp(rng.normal(0.0, scale)) if scale > 0 else 1.0
            value = min(max(value * factor, lo), hi)
            if kind == "int":
                value = int(round(value))
        child[name] = value
    return child


# mutation operator: (parent_payloads, context, seed) -> (kind, payload)
MutationOperator = Callable[[list[dict], dict, int], tuple[str, dict]]
# evaluator: (candidate, seed) -> (fitness, metrics); raises CandidateDiscarded
Evaluator = Callable[[Candidate, int], tuple[float, dict]]


@dataclass
class OffspringRecord:
    index: int
    candidate_id: str
    parent_ids: tuple
    status: str                  # inserted | rejected | discarded | mutation-failed
    fitness: Optional[float] = None
    bin: Optional[int] = None
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {"index": self.index, "candidate_id": self.candidate_id,
                "parent_ids": list(self.parent_ids), "status": self.status,
                "fitness": self.fitness, "bin": self.bin, "reason": self.reason}


@dataclass
class GenerationReport:
    generation: int
    records: list = field(default_factory=list)

    @property
    def births(self) -> int:
        return sum(1 for r in self.records if r.status != "mutation-failed")

    @property
    def discards(self) -> int:
        return sum(1 for r in self.records if r.status == "discarded")

    @property
    def inserts(self) -> int:
        return sum(1 for r in self.records if r.status == "inserted")

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)


@dataclass(frozen=True)
class EvolutionParams:
    n_elites: int = 6
    n_parents: int = 2
    n_offspring: int = 10
    generations: int = 1
    selection: str = "shifted-proportional"
    workers: int = 1
    eval_params: object = None   # BasinHopParams with a small R; evaluators own it

    def __post_init__(self):
        if self.n_parents > self.n_elites:
            raise ValueError("n_parents must be <= n_elites")
        if self.n_offspring < 1:
            raise ValueError("need at least one offspring")


def step_generation(archive: Archive, params: EvolutionParams,
                    mutate: MutationOperator, evaluate: Evaluator,
                    seed: int) -> GenerationReport:
    """One generation: select elites, mutate, evaluate offspring, insert survivors.

    Offspring evaluations may run on a worker pool; all seeds are assigned by
    offspring index up front and insertion happens in index order, so reports
    are identical whatever the pool size.
    """
    rng = np.random.default_rng(seed)
    gen = archive.generation + 1
    elites = select_elites(archive, params.n_elites, int(rng.integers(2 ** 63)),
                           params.selection)
    stats = archive.stats()

    plans = []
    for i in range(params.n_offspring):
        parents = [elites[int(rng.integers(len(elites)))]
                   for _ in range(params.n_parents)]
        plans.append((i, parents, int(rng.integers(2 ** 63)),
                      int(rng.integers(2 ** 63))))

    def build_and_eval(plan):
        i, parents, mseed, eseed = plan
        cid = f"g{gen}o{i}"
        pids = tuple(p.id for p in parents)
        context = {"parents": [{"id": p.id, "kind": p.kind, "fitness": p.fitness,
                                "payload": p.payload, "metrics": p.metrics}
                               for p in parents],
                   "archive": stats}
        try:
            kind, payload = mutate([p.payload for p in parents], context, mseed)
        except Exception as exc:
            return OffspringRecord(i, cid, pids, "mutation-failed", reason=str(exc)), None
        cand = Candidate(id=cid, kind=kind, payload=payload,
                         generation=gen, parent_ids=pids)
        try:
            fitness, metrics = evaluate(cand, eseed)
        except CandidateDiscarded as exc:
            return OffspringRecord(i, cid, pids, "discarded", reason=str(exc)), None
        except Exception as exc:
            return OffspringRecord(i, cid, pids, "discarded",
                                   reason=f"evaluation failed: {exc}"), None
        cand.fitness = float(fitness)
        cand.metrics = metrics
        return OffspringRecord(i, cid, pids, "evaluated", fitness=cand.fitness), cand

    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as pool:
            outcomes = list(pool.map(build_and_eval, plans))
    else:
        outcomes = [build_and_eval(p) for p in plans]

    report = GenerationReport(generation=gen)
    for record, cand in outcomes:  # index order: deterministic insertion
        if cand is not None:
            inserted, reason = archive.insert(cand)
            record.status = "inserted" if inserted else "rejected"
            record.reason = reason
            record.bin = archive.bin_index(cand.fitness)
        report.records.append(record)
    archive.generation = gen
    return report
