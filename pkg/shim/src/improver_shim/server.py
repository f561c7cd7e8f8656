"""Protocol server hosting one Improver instance per process."""
from __future__ import annotations

import argparse
import importlib.util
import inspect
import json
import sys
from pathlib import Path

import numpy as np


def load_improver_class(source: str):
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"source file not found: {path}")
    spec = importlib.util.spec_from_file_location("hosted_improver", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    if not hasattr(module, "entrypoint"):
        raise AttributeError("source must define entrypoint() returning the class")
    return module.entrypoint()


def _accepts(func, name: str) -> bool:
    try:
        params = inspect.signature(func).parameters
    except (TypeError, ValueError):
        return False
    return name in params or any(p.kind is inspect.Parameter.VAR_KEYWORD
                                 for p in params.values())


def _call_with_optional_seed(func, args: tuple, seed):
    if seed is not None and _accepts(func, "seed"):
        return func(*args, seed=seed)
    return func(*args)


def _read_payload(obj: dict) -> dict:
    """Inline solution object or a {"file": path} reference."""
    if isinstance(obj, dict) and "file" in obj and "problem" not in obj:
        with open(obj["file"]) as fh:
            return json.load(fh)
    return obj


class HexAdapter:
    """(centers, angles) tuple interface; constructor (hex_num, seed)."""

    def __init__(self, cls, n: int, seed: int):
        self.n = n
        self.improver = cls(hex_num=n, seed=seed)

    def decode(self, obj: dict):
        payload = _read_payload(obj)
        centers = np.asarray(payload["centers"], dtype=float)
        angles = np.asarray(payload["angles"], dtype=float)
        return centers, angles

    def encode(self, result) -> dict:
        try:
            centers, angles = result
            centers = np.asarray(centers, dtype=float)
            angles = np.asarray(angles, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"expected a (centers, angles) pair: {exc}") from exc
        if centers.shape != (self.n, 2):
            raise ValueError(f"wrong shape: centers {centers.shape}, "
                             f"expected ({self.n}, 2)")
        if angles.shape != (self.n,):
            raise ValueError(f"wrong shape: angles {angles.shape}, "
                             f"expected ({self.n},)")
        if not (np.isfinite(centers).all() and np.isfinite(angles).all()):
            raise ValueError("non-finite value in configuration")
        return {"problem": "hex", "n": self.n,
                "centers": [[float(x), float(y)] for x, y in centers],
                "angles": [float(a) for a in angles]}

    def generate(self, seed):
        return _call_with_optional_seed(self.improver.generate_config, (), seed)

    def improve(self, solution, seed=None):
        return _call_with_optional_seed(self.improver.improve, (solution,), seed)

    def perturb(self, solution, intensity, seed=None):
        return _call_with_optional_seed(self.improver.perturb,
                                        (solution, intensity), seed)


class FunctionAdapter:
    """Single 1D-array interface; constructor (seed)."""

    def __init__(self, cls, resolution: int, seed: int):
        self.resolution = resolution
        self.improver = cls(seed=seed)

    def decode(self, obj: dict):
        payload = _read_payload(obj)
        return np.asarray(payload["values"], dtype=float)

    def encode(self, result) -> dict:
        values = np.asarray(result, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"wrong shape: expected a non-empty 1D array, "
                             f"got {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("non-finite sample in function")
        if (values < 0).any():
            raise ValueError("negative sample in function")
        if not (values > 0).any():
            raise ValueError("all-zero function")
        return {"problem": "aci", "values": [float(v) for v in values]}

    def generate(self, seed):
        func = self.improver.generate_config
        kwargs = {}
        if _accepts(func, "initial_resolution"):
            kwargs["initial_resolution"] = self.resolution
        if seed is not None and _accepts(func, "seed"):
            kwargs["seed"] = seed
        return func(**kwargs)

    def improve(self, solution, seed=None):
        return _call_with_optional_seed(self.improver.improve, (solution,), seed)

    def perturb(self, solution, intensity, seed=None):
        return _call_with_optional_seed(self.improver.perturb,
                                        (solution, intensity), seed)


def serve(source: str, problem: str, n: int, resolution: int, seed: int,
          stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    state: dict = {}

    def reply(obj):
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    def build(problem, n, resolution, seed):
        cls = load_improver_class(source)
        if problem == "hex":
            return HexAdapter(cls, n, seed)
        if problem == "aci":
            return FunctionAdapter(cls, resolution, seed)
        raise ValueError(f"unknown problem: {problem}")

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        rid = None
        try:
            msg = json.loads(line)
            rid = msg.get("id")
            method = msg.get("method")
            params = msg.get("params") or {}
            if method == "shutdown":
                reply({"id": rid, "result": {"ok": True}})
                return 0
            if method == "init":
                state["adapter"] = build(params.get("problem", problem),
                                         int(params.get("n", n)),
                                         int(params.get("resolution", resolution)),
                                         int(params.get("seed", seed)))
                reply({"id": rid, "result": {"ok": True}})
                continue
            if "adapter" not in state:
                state["adapter"] = build(problem, n, resolution, seed)
            adapter = state["adapter"]
            if method == "generate":
                out = adapter.generate(params.get("seed"))
            elif method == "improve":
                out = adapter.improve(adapter.decode(params["solution"]))
            elif method == "perturb":
                out = adapter.perturb(adapter.decode(params["solution"]),
                                      float(params["sigma"]),
                                      seed=params.get("seed"))
            else:
                reply({"id": rid, "error": {"code": "unknown-method",
                                            "message": str(method)}})
                continue
            reply({"id": rid, "result": adapter.encode(out)})
        except Exception as exc:
            reply({"id": rid, "error": {"code": type(exc).__name__,
                                        "message": str(exc)}})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="improver-shim")
    parser.add_argument("--source", required=True,
                        help="file defining entrypoint() -> Improver class")
    parser.add_argument("--problem", choices=("hex", "aci"), required=True)
    parser.add_argument("--n", type=int, default=11)
    parser.add_argument("--resolution", type=int, default=1024)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    return serve(args.source, args.problem, args.n, args.resolution, args.seed)


if __name__ == "__main__":
    sys.exit(main())
