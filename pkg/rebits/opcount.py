"""
Operation Accounting

Deterministic op counts stand in for runtime and energy measurements.
Counting goes through an explicit CountScope handed to the arithmetic
backend; there is no thread-local or global counter.
"""

from dataclasses import dataclass, fields
from enum import Enum
from typing import Dict, Optional


class OpKind(str, Enum):
    FPADD = "fpadd"
    FPMULT = "fpmult"
    FPDIV = "fpdiv"
    FPCOMP = "fpcomp"
    MOVE_FPERR = "move_fperr"


COUNTER_FIELDS = [kind.value for kind in OpKind]


@dataclass(frozen=True)
class OpCounters:
    """Immutable snapshot of operation counts"""

    fpadd: int = 0
    fpmult: int = 0
    fpdiv: int = 0
    fpcomp: int = 0
    move_fperr: int = 0

    def __add__(self, other: "OpCounters") -> "OpCounters":
        return OpCounters(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def as_dict(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in COUNTER_FIELDS}

    def describe(self) -> str:
        """Compact form used in count reports, e.g. '6 fpadd, 4 move_fperr'"""
        parts = [f"{value} {name}" for name, value in self.as_dict().items() if value]
        return ", ".join(parts) if parts else "0"


class CountScope:
    """
    Mutable recording context.

    A child scope forwards every record to its parent, so nested scopes sum
    into all enclosing ones. One scope belongs to one worker at a time;
    cross-worker totals are built with `merge` after the workers join.
    """

    def __init__(self, label: str = "", parent: Optional["CountScope"] = None):
        self.label = label
        self.parent = parent
        self._counts = {name: 0 for name in COUNTER_FIELDS}

    def record(self, kind: OpKind, n: int = 1) -> None:
        if n < 0:
            raise ValueError(f"Cannot record a negative count: {n}")
        scope = self
        key = kind.value
        while scope is not None:
            scope._counts[key] += n
            scope = scope.parent

    def report(self) -> OpCounters:
        return OpCounters(**self._counts)

    def child(self, label: str) -> "CountScope":
        return CountScope(label, parent=self)

    def merge(self, counters: OpCounters) -> None:
        """Fold a finished worker's snapshot into this scope (and its parents)"""
        for name, value in counters.as_dict().items():
            if value:
                self.record(OpKind(name), value)

    def __repr__(self) -> str:
        return f"CountScope({self.label!r}, {self.report().describe()})"


def record(scope: Optional[CountScope], kind: OpKind, n: int = 1) -> None:
    """Increment a counter; a None scope means uninstrumented"""
    if scope is not None:
        scope.record(kind, n)


def report(scope: Optional[CountScope]) -> OpCounters:
    return scope.report() if scope is not None else OpCounters()
