"""Solution file formats shared by the CLI and the wire protocol.

Hexagon packing: {"problem": "hex", "n": int, "centers": [[x, y], ...], "angles": [...]}
Step function:   {"problem": "aci", "values": [...]}

Numbers are plain JSON doubles; Python's json emits the shortest round-trip
decimal form, so payloads round-trip bit-exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MalformedSolutionError


def _finite_array(values, shape_hint: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.isfinite(arr).all():
        raise MalformedSolutionError(f"{shape_hint}: non-finite value")
    return arr


def encode_hex(centers: np.ndarray, angles: np.ndarray) -> dict:
    return {
        "problem": "hex",
        "n": int(len(angles)),
        "centers": [[float(x), float(y)] for x, y in np.asarray(centers)],
        "angles": [float(a) for a in np.asarray(angles)],
    }


def decode_hex(obj: dict) -> tuple[np.ndarray, np.ndarray]:
    if obj.get("problem") != "hex":
        raise MalformedSolutionError("not a hex solution")
    try:
        n = int(obj["n"])
        centers = _finite_array(obj["centers"], "centers")
        angles = _finite_array(obj["angles"], "angles")
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSolutionError(f"bad hex payload: {exc}") from exc
    if centers.shape != (n, 2):
        raise MalformedSolutionError(
            f"centers shape {centers.shape} does not match n={n}")
    if angles.shape != (n,):
        raise MalformedSolutionError(
            f"angles shape {angles.shape} does not match n={n}")
    return centers, angles


def encode_aci(values: np.ndarray) -> dict:
    return {"problem": "aci", "values": [float(v) for v in np.asarray(values)]}


def decode_aci(obj: dict) -> np.ndarray:
    if obj.get("problem") != "aci":
        raise MalformedSolutionError("not an aci solution")
    try:
        values = _finite_array(obj["values"], "values")
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSolutionError(f"bad aci payload: {exc}") from exc
    if values.ndim != 1 or values.size == 0:
        raise MalformedSolutionError("values must be a non-empty 1D array")
    return values


def resolve_payload(obj: dict, base_dir: Path | None = None) -> dict:
    """Accept either an inline solution object or a {"file": path} reference."""
    if not isinstance(obj, dict):
        raise MalformedSolutionError("solution payload must be an object")
    if "file" in obj and "problem" not in obj:
        path = Path(obj["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            with open(path) as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedSolutionError(f"bad file reference {path}: {exc}") from exc
    return obj


def save_solution(obj: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_solution(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedSolutionError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("problem") not in ("hex", "aci"):
        raise MalformedSolutionError("missing or unknown 'problem' field")
    return obj
