"""Two-stage monotonic basin-hopping over a generate/improve/perturb triple.

Stage A refines K seeded starts and keeps the best (ties go to the lowest
seed). Stage B runs R rounds of perturb-then-improve with a per-iteration
sigma schedule that restarts every round, accepting a move iff its fitness is
>= the current best (temperature-zero acceptance, so plateau moves are taken).

Operator failures, invalid outputs and per-call timeouts all route through the
invalid policy: "discard" aborts the whole candidate evaluation (used while
evolving programs), "skip" drops the iteration and keeps going (used for final
validation runs).
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .errors import CandidateDiscarded, CallTimeout, NoValidStartError

STAGE_MODES = ("A-only", "B-only", "A+B")
INVALID_POLICIES = ("discard", "skip")


@dataclass(frozen=True)
class OperatorTriple:
    """The three operators the harness drives; solutions are opaque to it."""

    generate: Callable[[int], Any]
    improve: Callable[..., Any]          # (solution, deadline=None) -> solution
    perturb: Callable[[Any, float, int], Any]


@dataclass(frozen=True)
class SigmaSchedule:
    kind: str                            # "explicit-list" or "geometric"
    values: tuple = ()
    sigma_max: float = 0.0
    sigma_min: float = 0.0
    steps: int = 0

    @classmethod
    def explicit(cls, values) -> "SigmaSchedule":
        values = tuple(float(v) for v in values)
        if not values or any(v <= 0 for v in values):
            raise ValueError("explicit schedule needs a non-empty positive list")
        return cls(kind="explicit-list", values=values)

    @classmethod
    def geometric(cls, sigma_max: float, sigma_min: float, steps: int) -> "SigmaSchedule":
        if not (sigma_max >= sigma_min > 0):
            raise ValueError("need sigma_max >= sigma_min > 0")
        if steps < 2:
            raise ValueError("geometric schedule needs at least 2 steps")
        return cls(kind="geometric", sigma_max=float(sigma_max),
                   sigma_min=float(sigma_min), steps=int(steps))

    @property
    def iterations(self) -> int:
        return len(self.values) if self.kind == "explicit-list" else self.steps

    def sigma_at(self, t: int) -> float:
        """Sigma for iteration t in 1..M."""
        if self.kind == "explicit-list":
            return self.values[t - 1]
        m = self.steps
        return self.sigma_max * (self.sigma_min / self.sigma_max) ** ((t - 1) / (m - 1))

    def sequence(self) -> list[float]:
        return [self.sigma_at(t) for t in range(1, self.iterations + 1)]


@dataclass(frozen=True)
class BasinHopParams:
    schedule: SigmaSchedule
    seeds: int = 10                      # K
    rounds: int = 15                     # R
    per_call_timeout: float = 300.0      # seconds
    invalid_policy: str = "skip"
    stage_mode: str = "A+B"

    def __post_init__(self):
        if self.stage_mode not in STAGE_MODES:
            raise ValueError(f"stage_mode must be one of {STAGE_MODES}")
        if self.invalid_policy not in INVALID_POLICIES:
            raise ValueError(f"invalid_policy must be one of {INVALID_POLICIES}")
        if self.stage_mode != "B-only" and self.seeds < 1:
            raise ValueError("need at least one Stage-A seed")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if not self.per_call_timeout > 0:
            raise ValueError("per_call_timeout must be positive")


@dataclass
class TraceEvent:
    stage: str                           # "A" or "B"
    round: int
    iteration: int
    fitness_before: Optional[float]
    fitness_after: Optional[float]
    accepted: bool
    elapsed: float
    invalid: bool
    sigma: Optional[float] = None        # absent in Stage A

    def to_dict(self) -> dict:
        d = {"stage": self.stage, "round": self.round, "iteration": self.iteration,
             "fitness_before": self.fitness_before, "fitness_after": self.fitness_after,
             "accepted": self.accepted, "elapsed": self.elapsed, "invalid": self.invalid}
        if self.sigma is not None:
            d["sigma"] = self.sigma
        return d


@dataclass
class RunTrace:
    events: list = field(default_factory=list)
    best_fitness_curve: list = field(default_factory=list)

    def record(self, event: TraceEvent, best: Optional[float]) -> None:
        self.events.append(event)
        if best is not None:
            self.best_fitness_curve.append(best)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev.to_dict()))
                fh.write("\n")


def apply_invalid_policy(policy: str, context: str, exc: Exception | None = None):
    """discard -> the candidate evaluation aborts; skip -> caller drops the step."""
    if policy == "discard":
        raise CandidateDiscarded(f"{context}: {exc}" if exc else context)
    return "skip"


def _call_with_watchdog(fn, args, kwargs, timeout: float):
    """Run fn in a daemon thread; give cooperative code a grace window past the
    deadline, then declare the call timed out. The worker may linger but the
    engine does not block past timeout + 1s."""
    box: dict = {}

    def runner():
        try:
            box["value"] = fn(*args, **kwargs)
        except Exception as exc:  # delivered to the caller below
            box["error"] = exc

    th = threading.Thread(target=runner, daemon=True)
    th.start()
    th.join(timeout + 0.5)
    if th.is_alive():
        raise CallTimeout(f"operator call exceeded {timeout:.1f}s")
    if "error" in box:
        raise box["error"]
    return box["value"]


def run_validation(ops: OperatorTriple, fitness: Callable[[Any], float],
                   params: BasinHopParams, seed: int = 0,
                   start: Any = None) -> tuple[Any, float, RunTrace]:
    """Execute the two-stage scheme; returns (best solution, fitness, trace).

    `start` short-circuits initialization with an externally supplied solution
    (warm start); it is refined once by improve() before Stage B.
    """
    trace = RunTrace()
    timeout = params.per_call_timeout
    best = None
    best_f = None

    def attempt(op_seed: int) -> tuple[Any, float]:
        x = _call_with_watchdog(ops.generate, (op_seed,), {}, timeout)
        deadline = time.monotonic() + timeout
        x = _call_with_watchdog(ops.improve, (x,), {"deadline": deadline}, timeout)
        return x, float(fitness(x))

    if start is not None:
        t0 = time.monotonic()
        try:
            deadline = t0 + timeout
            x = _call_with_watchdog(ops.improve, (start,), {"deadline": deadline},
                                    timeout)
            best, best_f = x, float(fitness(x))
        except Exception as exc:
            apply_invalid_policy(params.invalid_policy, "warm start", exc)
            raise NoValidStartError("warm start failed") from exc
        trace.record(TraceEvent("A", 0, 0, None, best_f, True,
                                time.monotonic() - t0, False), best_f)
    elif params.stage_mode in ("A-only", "A+B"):
        for s in range(1, params.seeds + 1):
            before = best_f
            t0 = time.monotonic()
            try:
                x, f = attempt(s)
            except Exception as exc:
                apply_invalid_policy(params.invalid_policy, f"Stage A seed {s}", exc)
                trace.record(TraceEvent("A", 0, s, before, None, False,
                                        time.monotonic() - t0, True), best_f)
                continue
            accepted = best_f is None or f > best_f  # strict: lowest seed wins ties
            if accepted:
                best, best_f = x, f
            trace.record(TraceEvent("A", 0, s, before, f, accepted,
                                    time.monotonic() - t0, False), best_f)
        if best is None:
            raise NoValidStartError(f"all {params.seeds} Stage-A attempts failed")
    else:  # B-only: a single seeded start
        t0 = time.monotonic()
        try:
            best, best_f = attempt(seed)
        except Exception as exc:
            apply_invalid_policy(params.invalid_policy, "B-only start", exc)
            raise NoValidStartError("B-only start failed") from exc
        trace.record(TraceEvent("A", 0, seed, None, best_f, True,
                                time.monotonic() - t0, False), best_f)

    if params.stage_mode == "A-only" or params.rounds == 0:
        return best, best_f, trace

    rng = np.random.default_rng(seed)
    m = params.schedule.iterations
    for rnd in range(1, params.rounds + 1):
        for t in range(1, m + 1):  # schedule restarts every round
            sigma = params.schedule.sigma_at(t)
            pseed = int(rng.integers(2 ** 63))
            before = best_f
            t0 = time.monotonic()
            try:
                x = _call_with_watchdog(ops.perturb, (best, sigma, pseed), {}, timeout)
                deadline = time.monotonic() + timeout
                x = _call_with_watchdog(ops.improve, (x,), {"deadline": deadline},
                                        timeout)
                f = float(fitness(x))
            except Exception as exc:
                apply_invalid_policy(params.invalid_policy,
                                     f"round {rnd} iteration {t}", exc)
                trace.record(TraceEvent("B", rnd, t, before, None, False,
                                        time.monotonic() - t0, True, sigma), best_f)
                continue
            accepted = f >= best_f  # monotonic acceptance; plateau moves taken
            if accepted:
                best, best_f = x, f
            trace.record(TraceEvent("B", rnd, t, before, f, accepted,
                                    time.monotonic() - t0, False, sigma), best_f)
    return best, best_f, trace
