"""Command-line surface: validate / solve / evolve / render / bench.

Configuration precedence for solve and evolve: explicit flags beat keys from a
--config JSON file, which beat the chosen --preset. Exit codes are stable for
scripting: validate returns 0 (valid), 1 (constraint violation) or 2 (parse or
structural error); other commands return 0 on success and 1 on failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import autocorr, hexpack, solutions
from .basinhop import BasinHopParams, SigmaSchedule, run_validation
from .errors import (CandidateDiscarded, InvalidSolutionError,
                     MalformedSolutionError, ProtocolError, TripleHopError)
from .evolution import (Archive, Candidate, EvolutionParams, mutate_builtin,
                        step_generation)
from .known_best import SOURCE_LABELS, compare, rows_for
from .protocol import MutationRequest, RemoteTriple, mutation_service_call, spawn_candidate

TABLE3_HEX_SCHEDULE = (1e2, 5e1, 1e1, 5.0, 1.0, 5e-1, 1e-1, 5e-2, 1e-2, 5e-3, 1e-3)
TABLE3_ACI_SCHEDULE = (1e2, 1e1, 1.0, 1e-1, 1e-2, 1e-3)

PRESETS = {
    "table3-hex": {"seeds": 10, "rounds": 15, "schedule": TABLE3_HEX_SCHEDULE,
                   "timeout": 300.0},
    "table3-aci": {"seeds": 3, "rounds": 5, "schedule": TABLE3_ACI_SCHEDULE,
                   "timeout": 1200.0},
    "final-hex": {"seeds": 100, "rounds": 100, "timeout": 300.0,
                  "sigma_max": 1000.0, "sigma_min": 0.001, "steps": 25},
}

# Fitness bins for the archive; the hex range envelopes the n=11 values.
DEFAULT_FITNESS_RANGE = {"hex": (-6.0, -3.85), "aci": (0.5, 1.0)}


def _layered_config(args, known_keys) -> dict:
    cfg: dict = {}
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise SystemExit(f"unknown preset: {args.preset}")
        cfg.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        cfg.update({k: v for k, v in file_cfg.items() if k in known_keys})
    for key in known_keys:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _build_schedule(cfg, problem) -> SigmaSchedule:
    sched = cfg.get("schedule")
    if isinstance(sched, str):
        sched = [float(tok) for tok in sched.split(",") if tok.strip()]
    if sched:
        return SigmaSchedule.explicit(sched)
    if cfg.get("sigma_max") is not None:
        return SigmaSchedule.geometric(cfg["sigma_max"], cfg.get("sigma_min", 1e-3),
                                       int(cfg.get("steps", 10)))
    default = TABLE3_HEX_SCHEDULE if problem == "hex" else TABLE3_ACI_SCHEDULE
    return SigmaSchedule.explicit(default)


def _problem_setup(problem, cfg):
    if problem == "hex":
        n = int(cfg.get("n", 11))
        payload = hexpack.default_payload(cfg.get("optimizer", "gradient"))
        triple = hexpack.make_triple(n, payload)
        fitness = hexpack.hex_fitness
        size = n
    else:
        size = int(cfg.get("resolution", 1024))
        payload = autocorr.default_payload(cfg.get("grid_mode", "default"))
        triple = autocorr.make_triple(size, payload)
        fitness = lambda f: autocorr.aci_fitness(f).c_value  # noqa: E731
    return triple, fitness, size, payload


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        obj = solutions.load_solution(args.file)
        if obj["problem"] == "hex":
            config = hexpack.HexConfig.from_json(obj)
            report = hexpack.hex_validate(config)
            print(f"problem hex  n={config.n}  L={report.side_length:.6f}")
            if report.valid:
                print("valid")
                return 0
            for i, j, depth in report.overlaps:
                print(f"overlap pair ({i}, {j}) depth {depth:.3e}")
            return 1
        func = autocorr.StepFunction.from_json(obj)
        report = autocorr.aci_fitness(func)
        print(f"problem aci  N={func.resolution}  C={report.c_value:.6f}")
        print("valid")
        return 0
    except InvalidSolutionError as exc:
        print(f"invalid: {exc}")
        return 1
    except (MalformedSolutionError, OSError) as exc:
        print(f"error: {exc}")
        return 2


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

_SOLVE_KEYS = ("n", "resolution", "seeds", "rounds", "schedule", "sigma_max",
               "sigma_min", "steps", "timeout", "stage_mode", "invalid_policy",
               "optimizer", "grid_mode", "seed", "out", "trace", "warm_start")


def cmd_solve(args) -> int:
    cfg = _layered_config(args, _SOLVE_KEYS)
    problem = args.problem
    schedule = _build_schedule(cfg, problem)
    triple, fitness, _, _ = _problem_setup(problem, cfg)
    hexp = problem == "hex"
    params = BasinHopParams(
        schedule=schedule,
        seeds=int(cfg.get("seeds", 10 if hexp else 3)),
        rounds=int(cfg.get("rounds", 15 if hexp else 5)),
        per_call_timeout=float(cfg.get("timeout", 300.0 if hexp else 1200.0)),
        invalid_policy=cfg.get("invalid_policy", "skip"),
        stage_mode=cfg.get("stage_mode", "A+B"),
    )
    start = None
    if cfg.get("warm_start"):
        obj = solutions.load_solution(cfg["warm_start"])
        start = (hexpack.HexConfig.from_json(obj) if problem == "hex"
                 else autocorr.StepFunction.from_json(obj))
    t0 = time.monotonic()
    best, best_f, trace = run_validation(triple, fitness, params,
                                         seed=int(cfg.get("seed", 0)), start=start)
    if problem == "aci":
        best = autocorr.aci_finalize(best)
        best_f = autocorr.aci_fitness(best).c_value
    out = Path(cfg.get("out", "solution.json"))
    solutions.save_solution(best.to_json(), out)
    trace_path = Path(cfg.get("trace", str(out) + ".trace.jsonl"))
    trace.write_jsonl(trace_path)
    label = "L" if problem == "hex" else "C"
    value = -best_f if problem == "hex" else best_f
    print(f"fitness {best_f:.6f}  ({label} = {value:.6f})  "
          f"elapsed {time.monotonic() - t0:.1f}s")
    print(f"solution -> {out}")
    print(f"trace    -> {trace_path}")
    return 0


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

_EVOLVE_KEYS = ("n", "resolution", "generations", "mutation", "endpoint",
                "archive", "seed", "workers", "eval_seeds", "eval_rounds",
                "timeout", "fitness_range", "report")

_IMPROVER_CONSTRAINTS = {
    "hex": ("Implement class Improver with __init__(self, hex_num, seed), "
            "generate_config(self, seed=None) -> (centers (n,2), angles (n,)), "
            "improve(self, input_config, seed=None), and "
            "perturb(self, input_config, intensity, seed=None); finish with "
            "def entrypoint(): return Improver. Hexagons are unit circumradius; "
            "the container is a flat-topped regular hexagon centered at the "
            "origin; smaller enclosing side is better; overlaps are fatal."),
    "aci": ("Implement class Improver with __init__(self, seed=0), "
            "generate_config(self, initial_resolution=1000) -> 1D array, "
            "improve(self, input_f) -> 1D array (resolution may change), and "
            "perturb(self, input_f, intensity) -> 1D array; finish with "
            "def entrypoint(): return Improver. Arrays must be non-negative, "
            "finite and not all zero; higher autoconvolution ratio is better."),
}


def _parent_source(kind: str, payload: dict) -> str:
    if kind == "external-process":
        src = Path(payload.get("cwd", ".")) / "improver.py"
        if src.exists():
            return src.read_text()
    return json.dumps(payload, indent=1, sort_keys=True)


def cmd_evolve(args) -> int:
    cfg = _layered_config(args, _EVOLVE_KEYS)
    problem = args.problem
    mutation = cfg.get("mutation", "builtin")
    endpoint = None
    if mutation == "external":
        if not cfg.get("endpoint"):
            print("error: --endpoint is required for external mutation")
            return 1
        with open(cfg["endpoint"]) as fh:
            endpoint = json.load(fh)

    size = int(cfg.get("n", 11)) if problem == "hex" else int(cfg.get("resolution", 1024))
    spec = hexpack.PARAM_SPEC if problem == "hex" else autocorr.PARAM_SPEC
    default_payload = (hexpack.default_payload() if problem == "hex"
                       else autocorr.default_payload())
    fitness = (hexpack.hex_fitness if problem == "hex"
               else (lambda f: autocorr.aci_fitness(f).c_value))
    timeout = float(cfg.get("timeout", 300.0 if problem == "hex" else 1200.0))
    sched = (TABLE3_HEX_SCHEDULE if problem == "hex" else TABLE3_ACI_SCHEDULE)
    eval_params = BasinHopParams(
        schedule=SigmaSchedule.explicit(sched),
        seeds=int(cfg.get("eval_seeds", 3)),
        rounds=int(cfg.get("eval_rounds", 3)),  # reduced R for rapid estimation
        per_call_timeout=timeout,
        invalid_policy="discard",
        stage_mode="A+B",
    )

    archive_path = Path(cfg.get("archive", f"archive-{problem}.json"))
    if archive_path.exists():
        archive = Archive.load(archive_path)
    else:
        rng_cfg = cfg.get("fitness_range")
        fitness_range = (tuple(float(v) for v in rng_cfg.split(","))
                         if isinstance(rng_cfg, str) else
                         tuple(rng_cfg) if rng_cfg else DEFAULT_FITNESS_RANGE[problem])
        archive = Archive(fitness_range)

    children_root = archive_path.parent / (archive_path.stem + "-children")

    def evaluate(cand: Candidate, eseed: int):
        t0 = time.monotonic()
        session = None
        try:
            if cand.kind == "external-process":
                init = {"problem": problem, "seed": eseed}
                init["n" if problem == "hex" else "resolution"] = size
                try:
                    session = spawn_candidate(cand.payload["command"],
                                              cand.payload.get("cwd"),
                                              init, timeout=timeout)
                except (ProtocolError, KeyError) as exc:
                    raise CandidateDiscarded(f"spawn failed: {exc}") from exc
                triple = RemoteTriple(session, problem, n=size if problem == "hex"
                                      else None, timeout=timeout)
            else:
                triple = (hexpack.make_triple(size, cand.payload)
                          if problem == "hex"
                          else autocorr.make_triple(size, cand.payload))
            _, best_f, trace = run_validation(triple, fitness, eval_params,
                                              seed=eseed)
            invalid = sum(1 for ev in trace.events if ev.invalid)
            metrics = {"wall_time": time.monotonic() - t0,
                       "invalid_rate": invalid / max(len(trace.events), 1),
                       "iterations": len(trace.events)}
            return best_f, metrics
        finally:
            if session is not None:
                session.close()

    def mutate(parent_payloads, context, mseed):
        if mutation == "builtin":
            return "builtin-parametric", mutate_builtin(parent_payloads, mseed, spec)
        parents = context["parents"]
        request = MutationRequest(
            parent_sources=[_parent_source(p.get("kind", "builtin-parametric"),
                                           p["payload"]) for p in parents],
            context=json.dumps({"archive": context["archive"],
                                "parent_fitness": [p["fitness"] for p in parents]},
                               indent=1),
            constraints=_IMPROVER_CONSTRAINTS[problem],
        )
        out_dir = children_root / f"seed{mseed % 10 ** 9}"
        payload = mutation_service_call(request, endpoint, out_dir)
        payload["command"] += ["--problem", problem,
                               "--n" if problem == "hex" else "--resolution",
                               str(size)]
        return "external-process", payload

    if not archive.occupied():
        seed_candidate = Candidate(id="g0builtin", kind="builtin-parametric",
                                   payload=default_payload, generation=0)
        f0, metrics = evaluate(seed_candidate, int(cfg.get("seed", 0)))
        seed_candidate.fitness = f0
        seed_candidate.metrics = metrics
        archive.insert(seed_candidate)
        print(f"generation 0: seeded builtin candidate, fitness {f0:.6f}")

    params = EvolutionParams(
        n_elites=6, n_parents=2, n_offspring=int(cfg.get("n_offspring", 10)),
        workers=int(cfg.get("workers") or os.environ.get("IMPROVOLVE_WORKERS", 1)),
        eval_params=eval_params,
    )
    report_path = Path(cfg.get("report", str(archive_path) + ".reports.jsonl"))
    base_seed = int(cfg.get("seed", 0))
    for g in range(int(cfg.get("generations", 1))):
        report = step_generation(archive, params, mutate, evaluate,
                                 seed=base_seed + archive.generation + 1)
        with open(report_path, "a") as fh:
            fh.write(report.to_jsonl())
        archive.save(archive_path)
        best = archive.best()
        print(f"generation {report.generation}: births {report.births} "
              f"inserts {report.inserts} discards {report.discards} "
              f"best-ever {best.fitness:.6f}")
    print(f"archive -> {archive_path}")
    return 0


# ---------------------------------------------------------------------------
# render / bench
# ---------------------------------------------------------------------------

def cmd_render(args) -> int:
    from . import svgplot

    path = Path(args.input)
    try:
        first = path.read_text().lstrip()
    except OSError as exc:
        print(f"error: {exc}")
        return 2
    try:
        if first.startswith("{") and '"stage"' in first.splitlines()[0]:
            events = [json.loads(line) for line in first.splitlines() if line.strip()]
            svg = svgplot.render_trace(events)
        else:
            obj = solutions.load_solution(path)
            if obj["problem"] == "hex":
                svg = svgplot.render_hex(hexpack.HexConfig.from_json(obj))
            else:
                svg = svgplot.render_aci(autocorr.StepFunction.from_json(obj))
    except (TripleHopError, json.JSONDecodeError) as exc:
        print(f"error: {exc}")
        return 2
    Path(args.out).write_text(svg)
    print(f"svg -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    rc = cmd_validate(args)
    if rc != 0:
        return rc
    obj = solutions.load_solution(args.file)
    if obj["problem"] == "hex":
        config = hexpack.HexConfig.from_json(obj)
        value = hexpack.hex_validate(config).side_length
        rows = rows_for("hex", config.n)
    else:
        value = autocorr.aci_fitness(autocorr.StepFunction.from_json(obj)).c_value
        rows = rows_for("aci")
    if not rows:
        print("no published values for this problem size")
        return 0
    for row in rows:
        verdict = compare(row, value)
        gap = abs(value - row.value)
        print(f"{verdict:7s} {SOURCE_LABELS[row.source]} {row.printed}  "
              f"(yours {value:.5f}, gap {gap:.5f})")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triplehop",
        description="Basin-hopping harness over generate/improve/perturb triples")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a solution file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="run the two-stage scheme with built-in operators")
    p.add_argument("problem", choices=("hex", "aci"))
    p.add_argument("--n", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--preset", choices=tuple(PRESETS))
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--seeds", type=int, help="Stage-A seed count K")
    p.add_argument("--rounds", type=int, help="Stage-B rounds R")
    p.add_argument("--schedule", help="comma-separated explicit sigma list")
    p.add_argument("--sigma-max", dest="sigma_max", type=float)
    p.add_argument("--sigma-min", dest="sigma_min", type=float)
    p.add_argument("--steps", type=int, help="geometric schedule length M")
    p.add_argument("--timeout", type=float, help="per-call timeout, seconds")
    p.add_argument("--stage-mode", dest="stage_mode",
                   choices=("A-only", "B-only", "A+B"))
    p.add_argument("--invalid-policy", dest="invalid_policy",
                   choices=("discard", "skip"))
    p.add_argument("--optimizer", choices=("gradient", "sqp"))
    p.add_argument("--grid-mode", dest="grid_mode", choices=("default", "extended"))
    p.add_argument("--warm-start", dest="warm_start",
                   help="solution file to resume from (skips Stage A)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evolve", help="MAP-Elites over operator-triple candidates")
    p.add_argument("problem", choices=("hex", "aci"))
    p.add_argument("--n", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--generations", type=int)
    p.add_argument("--mutation", choices=("builtin", "external"))
    p.add_argument("--endpoint", help="JSON endpoint config for external mutation")
    p.add_argument("--archive", help="archive checkpoint path (resumes if present)")
    p.add_argument("--report", help="generation report JSONL path")
    p.add_argument("--fitness-range", dest="fitness_range",
                   help="archive fitness range as 'lo,hi'")
    p.add_argument("--eval-seeds", dest="eval_seeds", type=int)
    p.add_argument("--eval-rounds", dest="eval_rounds", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("render", help="solution or trace file to SVG")
    p.add_argument("input")
    p.add_argument("--out", default="render.svg")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="compare a solution against published values")
    p.add_argument("file")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TripleHopError as exc:
        print(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
