"""Exception hierarchy shared across the harness."""
from __future__ import annotations


class TripleHopError(Exception):
    """Base class for all harness errors."""


class MalformedSolutionError(TripleHopError):
    """Solution payload is structurally broken (wrong shape, non-finite, bad type)."""


class InvalidSolutionError(TripleHopError):
    """Solution is well-formed but violates a problem constraint."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ImprovementFailedError(TripleHopError):
    """improve() could not produce a valid solution and the input was invalid too."""


class CandidateDiscarded(TripleHopError):
    """One invalid operator output under the discard policy kills the candidate."""


class NoValidStartError(TripleHopError):
    """Every initialization attempt failed; basin hopping has no starting point."""


class ProtocolError(TripleHopError):
    """Wire-protocol violation by an external candidate process."""


class SpawnError(ProtocolError):
    """Candidate process could not be started or never completed the handshake."""


class CallTimeout(ProtocolError):
    """A remote operator call exceeded its deadline; the process was terminated."""
