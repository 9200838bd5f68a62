"""Operation counters for group arithmetic.

Only three operation kinds are counted as costs: exponentiation in G (``exps``),
multiplication in G (``muls``) and pairings (``pairings``). Everything else the
backends do (hashing to the group, scalar inversion, GT comparisons, group
inversion) lands in ``aux`` and is never part of a cost comparison.
"""

from __future__ import annotations

import contextlib
from collections import Counter
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Iterator

_active: ContextVar["OpCounters | None"] = ContextVar("avatrace_counters", default=None)


@dataclass
class OpCounters:
    exps: int = 0
    muls: int = 0
    pairings: int = 0
    aux: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {
            "E": self.exps,
            "M": self.muls,
            "P": self.pairings,
            "aux": dict(sorted(self.aux.items())),
        }

    def cost(self) -> tuple[int, int, int]:
        return (self.exps, self.muls, self.pairings)


@contextlib.contextmanager
def counting() -> Iterator[OpCounters]:
    """Count group operations performed in the current context."""
    counters = OpCounters()
    token = _active.set(counters)
    try:
        yield counters
    finally:
        _active.reset(token)


def record(kind: str, n: int = 1) -> None:
    c = _active.get()
    if c is None:
        return
    if kind == "exp":
        c.exps += n
    elif kind == "mul":
        c.muls += n
    elif kind == "pair":
        c.pairings += n
    else:
        c.aux[kind] += n
