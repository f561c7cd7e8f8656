"""Self-host worker: exposes the built-in operator triples over the wire
protocol, so the harness can exercise the full external-candidate path against
a known-good implementation.

    python -m triplehop.builtin_worker [--problem hex|aci] [--n N]
           [--resolution N] [--payload JSON]

The init message may override problem, size and payload; exits 0 on shutdown.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import autocorr, hexpack, protocol, solutions


def _make_state(problem: str, n: int, resolution: int, payload: dict | None):
    if problem == "hex":
        triple = hexpack.make_triple(n, payload)
        decode = hexpack.HexConfig.from_json
    elif problem == "aci":
        triple = autocorr.make_triple(resolution, payload)
        decode = autocorr.StepFunction.from_json
    else:
        raise ValueError(f"unknown problem: {problem}")
    return triple, decode


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="triplehop-builtin-worker")
    parser.add_argument("--problem", choices=("hex", "aci"), default="hex")
    parser.add_argument("--n", type=int, default=11)
    parser.add_argument("--resolution", type=int, default=1024)
    parser.add_argument("--payload", type=json.loads, default=None)
    args = parser.parse_args(argv)

    state = {}

    def ensure():
        if "triple" not in state:
            state["triple"], state["decode"] = _make_state(
                args.problem, args.n, args.resolution, args.payload)

    def handle_init(params):
        problem = params.get("problem", args.problem)
        n = int(params.get("n", args.n))
        resolution = int(params.get("resolution", args.resolution))
        state["triple"], state["decode"] = _make_state(
            problem, n, resolution, args.payload)
        return {"ok": True}

    def decode_solution(params):
        obj = solutions.resolve_payload(params["solution"])
        return state["decode"](obj)

    def handle_generate(params):
        ensure()
        return state["triple"].generate(int(params["seed"])).to_json()

    def handle_improve(params):
        ensure()
        sol = decode_solution(params)
        deadline = None
        if params.get("deadline_ms"):
            deadline = time.monotonic() + params["deadline_ms"] / 1000.0
        return state["triple"].improve(sol, deadline=deadline).to_json()

    def handle_perturb(params):
        ensure()
        sol = decode_solution(params)
        return state["triple"].perturb(sol, float(params["sigma"]),
                                       int(params["seed"])).to_json()

    return protocol.serve({
        "init": handle_init,
        "generate": handle_generate,
        "improve": handle_improve,
        "perturb": handle_perturb,
    })


if __name__ == "__main__":
    sys.exit(main())
