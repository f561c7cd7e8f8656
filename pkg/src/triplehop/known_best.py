"""Published best-known values the bench command compares against.

Values are embedded verbatim as printed strings (the float is parsed from the
string) and never fetched from anywhere. Hexagon rows are side lengths (lower
is better); the autoconvolution row is the ratio C (higher is better).
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class KnownBest:
    problem: str            # "hex" | "aci"
    n: int | None           # hexagon count; None for aci
    source: str             # human | alphaevolve | improvevolve | improvevolve+E
    printed: str            # digits exactly as published
    direction: str          # "min" | "max"

    @property
    def value(self) -> float:
        return float(self.printed)

    @property
    def decimals(self) -> int:
        return len(self.printed.split(".")[1]) if "." in self.printed else 0


SOURCE_LABELS = {
    "human": "Human",
    "alphaevolve": "AlphaEvolve",
    "improvevolve": "ImprovEvolve",
    "improvevolve+E": "ImprovEvolve+E",
}


def _hex(n, source, printed):
    return KnownBest("hex", n, source, printed, "min")


KNOWN_BEST = (
    _hex(11, "human", "3.9434"),
    _hex(11, "alphaevolve", "3.9301"),
    _hex(11, "improvevolve", "3.9245"),
    _hex(11, "improvevolve+E", "3.9245"),
    _hex(12, "human", "4.0000"),
    _hex(12, "alphaevolve", "3.9419"),
    _hex(12, "improvevolve", "3.9416"),
    _hex(12, "improvevolve+E", "3.9416"),
    _hex(13, "human", "4.0000"),
    _hex(13, "improvevolve", "4.0000"),
    _hex(13, "improvevolve+E", "4.0000"),
    _hex(14, "human", "4.2724"),
    _hex(14, "improvevolve", "4.2724"),
    _hex(14, "improvevolve+E", "4.2690"),
    _hex(15, "human", "4.4541"),
    _hex(15, "improvevolve", "4.4473"),
    _hex(15, "improvevolve+E", "4.4473"),
    _hex(16, "human", "4.5363"),
    _hex(16, "improvevolve", "4.5275"),
    _hex(16, "improvevolve+E", "4.5275"),
    _hex(17, "human", "4.6188"),
    _hex(17, "improvevolve", "4.6188"),
    _hex(17, "improvevolve+E", "4.6136"),
    _hex(18, "human", "4.6188"),
    _hex(18, "improvevolve", "4.6188"),
    _hex(18, "improvevolve+E", "4.6188"),
    _hex(19, "human", "4.6188"),
    _hex(19, "improvevolve", "4.6188"),
    _hex(19, "improvevolve+E", "4.6188"),
    _hex(20, "human", "5.0000"),
    _hex(20, "improvevolve", "5.0000"),
    _hex(20, "improvevolve+E", "5.0000"),
    _hex(21, "human", "5.0000"),
    _hex(21, "improvevolve", "5.0000"),
    _hex(21, "improvevolve+E", "5.0000"),
    _hex(22, "human", "5.2856"),
    _hex(22, "improvevolve", "5.2857"),
    _hex(22, "improvevolve+E", "5.2856"),
    _hex(23, "human", "5.4286"),
    _hex(23, "improvevolve", "5.4848"),
    _hex(23, "improvevolve+E", "5.4000"),
    _hex(24, "human", "5.4848"),
    _hex(24, "improvevolve", "5.4848"),
    _hex(24, "improvevolve+E", "5.4848"),
    _hex(25, "improvevolve", "5.6510"),
    _hex(25, "improvevolve+E", "5.6239"),
    _hex(26, "improvevolve", "5.7142"),
    _hex(26, "improvevolve+E", "5.7097"),
    _hex(27, "improvevolve", "5.7142"),
    _hex(27, "improvevolve+E", "5.7142"),
    _hex(28, "improvevolve", "5.9723"),
    _hex(28, "improvevolve+E", "5.9089"),
    _hex(29, "improvevolve", "6.0000"),
    _hex(29, "improvevolve+E", "6.0000"),
    _hex(30, "improvevolve", "6.0045"),
    _hex(30, "improvevolve+E", "6.0000"),
    KnownBest("aci", None, "human", "0.94136", "max"),
    KnownBest("aci", None, "alphaevolve", "0.96102", "max"),
    KnownBest("aci", None, "improvevolve", "0.9512", "max"),
    KnownBest("aci", None, "improvevolve+E", "0.96258", "max"),
)


def rows_for(problem: str, n: int | None = None) -> list[KnownBest]:
    return [r for r in KNOWN_BEST if r.problem == problem
            and (problem == "aci" or r.n == n)]


def compare(row: KnownBest, value: float) -> str:
    """'matches', 'beats' or 'unmet' at the row's printed precision."""
    rounded = round(value, row.decimals)
    if rounded == row.value:
        return "matches"
    if (rounded < row.value) == (row.direction == "min"):
        return "beats"
    return "unmet"
