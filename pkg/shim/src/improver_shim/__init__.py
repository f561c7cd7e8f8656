"""Adapter that hosts a user-supplied Improver class behind the candidate wire
protocol: one JSON object per stdin line in, one response per stdout line out.

The loaded module must define entrypoint() returning the Improver class. The
hex flavor is constructed as Improver(hex_num=n, seed=seed) and exchanges
(centers, angles) array pairs; the sampled-function flavor is constructed as
Improver(seed=seed) and exchanges a single 1D array. Per-call seed arguments
are forwarded only when the target method's signature accepts them. Exceptions
inside the hosted class become protocol error responses, never process deaths;
deadlines are the harness's job (it kills the process), not this adapter's.
"""
from .server import main, serve

__all__ = ["main", "serve"]
