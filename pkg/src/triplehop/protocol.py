"""Line-delimited JSON protocol for external operator-triple processes.

One JSON object per UTF-8 line. Requests are {"id": k, "method": m, "params": p}
with strictly increasing ids; responses echo the id and carry either "result"
or "error": {"code", "message"}. Methods: init{problem, n?, resolution?, seed},
generate{seed}, improve{solution, deadline_ms}, perturb{solution, sigma, seed},
shutdown{}. Solutions travel inline up to INLINE_VALUES_CAP samples; larger
payloads switch to a {"file": path} reference, and readers accept both forms.

Remote processes are untrusted: every returned solution is validated
structurally here and re-validated by the problem before use, and a call that
outlives its deadline gets the process killed.
"""
from __future__ import annotations

import json
import queue
import re
import subprocess
import sys
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from . import solutions
from .errors import CallTimeout, ProtocolError, SpawnError

INLINE_VALUES_CAP = 65536


# ---------------------------------------------------------------------------
# client side
# ---------------------------------------------------------------------------

class CandidateSession:
    """Single-threaded request/response channel to one candidate process."""

    def __init__(self, proc: subprocess.Popen, spool_dir: Path):
        self.proc = proc
        self.spool_dir = spool_dir
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        try:
            for line in self.proc.stdout:
                self._lines.put(line)
        except ValueError:
            pass
        self._lines.put(None)  # EOF sentinel

    @property
    def alive(self) -> bool:
        return self.proc.poll() is None

    def close(self, grace: float = 2.0) -> int | None:
        try:
            self.request("shutdown", {}, timeout=grace)
        except ProtocolError:
            pass
        try:
            return self.proc.wait(timeout=grace)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            return self.proc.wait()

    def kill(self):
        if self.alive:
            self.proc.kill()
            self.proc.wait()

    def request(self, method: str, params: dict, timeout: float) -> dict:
        """Send one request and block for its response; kills on deadline."""
        self._next_id += 1
        rid = self._next_id
        line = json.dumps({"id": rid, "method": method, "params": params},
                          allow_nan=False)
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            self.kill()
            raise ProtocolError(f"candidate process closed its pipe: {exc}") from exc
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.kill()
                raise CallTimeout(f"{method} exceeded {timeout:.1f}s")
            try:
                raw = self._lines.get(timeout=min(remaining, 0.25))
            except queue.Empty:
                continue
            if raw is None:
                raise ProtocolError(f"candidate exited during {method}")
            raw = raw.strip()
            if not raw:
                continue
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"non-JSON response line: {raw[:120]!r}") from exc
            if not isinstance(msg, dict) or msg.get("id") != rid:
                raise ProtocolError(f"response id mismatch (wanted {rid}): {raw[:120]!r}")
            if "error" in msg:
                err = msg["error"] or {}
                raise ProtocolError(
                    f"{method} failed: [{err.get('code')}] {err.get('message')}")
            if "result" not in msg:
                raise ProtocolError(f"response carries neither result nor error")
            return msg["result"]


def spawn_candidate(command: list[str], cwd: str | None, problem_params: dict,
                    timeout: float, spool_dir: str | Path | None = None) -> CandidateSession:
    """Start a candidate process and complete the init handshake."""
    try:
        proc = subprocess.Popen(command, cwd=cwd, stdin=subprocess.PIPE,
                                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                                text=True, bufsize=1)
    except OSError as exc:
        raise SpawnError(f"could not start {command!r}: {exc}") from exc
    spool = Path(spool_dir) if spool_dir else Path(cwd or ".")
    session = CandidateSession(proc, spool)
    try:
        session.request("init", problem_params, timeout=timeout)
    except ProtocolError as exc:
        session.kill()
        raise SpawnError(f"handshake failed: {exc}") from exc
    return session


def _encode_for_wire(sol_obj: dict, spool_dir: Path) -> dict:
    values = sol_obj.get("values")
    if values is not None and len(values) > INLINE_VALUES_CAP:
        spool_dir.mkdir(parents=True, exist_ok=True)
        path = spool_dir / f"sol-{time.monotonic_ns()}.json"
        solutions.save_solution(sol_obj, path)
        return {"file": str(path)}
    return sol_obj


class RemoteTriple:
    """OperatorTriple facade over a protocol session for one problem."""

    def __init__(self, session: CandidateSession, problem: str,
                 n: int | None = None, timeout: float = 300.0):
        self.session = session
        self.problem = problem
        self.n = n
        self.timeout = timeout

    def _decode(self, result) -> object:
        from .autocorr import StepFunction
        from .hexpack import HexConfig

        obj = solutions.resolve_payload(result, self.session.spool_dir)
        if self.problem == "hex":
            config = HexConfig.from_json(obj)
            if self.n is not None and config.n != self.n:
                raise ProtocolError(f"expected {self.n} hexagons, got {config.n}")
            return config
        return StepFunction.from_json(obj)

    def generate(self, seed: int):
        return self._decode(self.session.request("generate", {"seed": int(seed)},
                                                 self.timeout))

    def improve(self, solution, deadline: float | None = None):
        budget = self.timeout
        if deadline is not None:
            budget = max(min(budget, deadline - time.monotonic()), 0.001)
        params = {"solution": _encode_for_wire(solution.to_json(), self.session.spool_dir),
                  "deadline_ms": int(budget * 1000)}
        return self._decode(self.session.request("improve", params, budget + 5.0))

    def perturb(self, solution, sigma: float, seed: int):
        params = {"solution": _encode_for_wire(solution.to_json(), self.session.spool_dir),
                  "sigma": float(sigma), "seed": int(seed)}
        return self._decode(self.session.request("perturb", params, self.timeout))


# ---------------------------------------------------------------------------
# server side (used by the built-in worker; external candidates may speak the
# same protocol from any language)
# ---------------------------------------------------------------------------

def serve(handlers: dict, stdin=None, stdout=None) -> int:
    """Blocking request loop; returns the process exit code (0 on shutdown)."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def reply(obj):
        stdout.write(json.dumps(obj, allow_nan=False) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        rid = None
        try:
            msg = json.loads(line)
            rid = msg.get("id")
            method = msg.get("method")
            if method == "shutdown":
                reply({"id": rid, "result": {"ok": True}})
                return 0
            if method not in handlers:
                reply({"id": rid, "error": {"code": "unknown-method",
                                            "message": str(method)}})
                continue
            result = handlers[method](msg.get("params") or {})
            reply({"id": rid, "result": result})
        except Exception as exc:
            reply({"id": rid, "error": {"code": type(exc).__name__,
                                        "message": str(exc)}})
    return 0


# ---------------------------------------------------------------------------
# mutation service: chat-completion endpoint producing child program sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MutationRequest:
    parent_sources: list
    context: str
    constraints: str


_CODE_FENCE = re.compile(r"```(?:[a-zA-Z0-9_+-]*)\n(.*?)```", re.DOTALL)


def mutation_service_call(request: MutationRequest, endpoint: dict,
                          out_dir: str | Path) -> dict:
    """Ask a chat-completion endpoint for a mutated child program.

    Writes the first fenced code block of the reply to out_dir/improver.py and
    a launch spec invoking the configured shim command; returns the payload for
    an external-process candidate. Raises ProtocolError when the endpoint is
    unreachable or the reply has no code block (the offspring is then skipped).
    """
    if not request.parent_sources:
        raise ValueError("need at least one parent source")
    url = endpoint["base_url"].rstrip("/") + "/chat/completions"
    parents_blob = "\n\n".join(
        f"# Parent program {i + 1}\n{src}" for i, src in
        enumerate(request.parent_sources))
    body = {
        "model": endpoint.get("model", "default"),
        "temperature": endpoint.get("temperature", 1.0),
        "messages": [
            {"role": "system", "content": request.constraints},
            {"role": "user", "content": parents_blob + "\n\n" + request.context},
        ],
    }
    headers = {"Content-Type": "application/json"}
    if endpoint.get("api_key"):
        headers["Authorization"] = f"Bearer {endpoint['api_key']}"
    req = urllib.request.Request(url, data=json.dumps(body).encode(),
                                 headers=headers, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=endpoint.get("timeout", 120)) as resp:
            reply = json.loads(resp.read().decode())
        content = reply["choices"][0]["message"]["content"]
    except (urllib.error.URLError, OSError, KeyError, IndexError,
            json.JSONDecodeError) as exc:
        raise ProtocolError(f"mutation endpoint failed: {exc}") from exc
    match = _CODE_FENCE.search(content)
    if match is None:
        raise ProtocolError("mutation reply contains no fenced code block")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source_path = out / "improver.py"
    source_path.write_text(match.group(1))
    command = list(endpoint.get("shim_command",
                                [sys.executable, "-m", "improver_shim"]))
    command += ["--source", str(source_path)]
    payload = {"command": command, "cwd": str(out)}
    (out / "launch.json").write_text(json.dumps(payload, indent=1) + "\n")
    return payload
