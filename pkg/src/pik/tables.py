"""Communication tables: which ``C^opt_{n,t}`` a system can implement."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .commat import gen_copt
from .implsearch import SearchBudget, SearchStatus, SystemSpec, find_implementation
from .ultraweak import check_certificate, copt_edges

__all__ = [
    "Cell",
    "CellStatus",
    "CommTable",
    "Violation",
    "build_table",
    "check_table_consistency",
    "inconsistent_fixtures",
    "render_csv",
    "render_grid",
]


class CellStatus(enum.Enum):
    IMPLEMENTABLE = "implementable"
    IMPOSSIBLE = "impossible"
    UNKNOWN = "unknown"


SYMBOLS = {CellStatus.IMPLEMENTABLE: "✓", CellStatus.IMPOSSIBLE: "✗", CellStatus.UNKNOWN: "?"}


@dataclass(frozen=True)
class Cell:
    status: CellStatus
    provenance: str = ""


@dataclass
class CommTable:
    system: Optional[SystemSpec]
    n_max: int
    cells: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")

    @staticmethod
    def pairs(n_max: int):
        return [(n, t) for n in range(2, n_max + 1) for t in range(1, n)]

    def validate(self) -> None:
        if set(self.cells) != set(self.pairs(self.n_max)):
            raise ValueError(f"cells must cover exactly 2 <= n <= {self.n_max}, 1 <= t <= n-1")

    def with_status(self, status: CellStatus) -> list[tuple[int, int]]:
        return sorted(k for k, c in self.cells.items() if c.status is status)

    def to_dict(self) -> dict:
        return {
            "system": None if self.system is None else str(self.system),
            "n_max": self.n_max,
            "cells": [
                {"n": n, "t": t, "status": self.cells[(n, t)].status.value,
                 "provenance": self.cells[(n, t)].provenance}
                for n, t in self.pairs(self.n_max)
            ],
        }

    @classmethod
    def from_statuses(cls, n_max: int, implementable, system=None, provenance="fixture") -> "CommTable":
        """Table with the given pairs implementable and every other pair impossible."""
        implementable = set(implementable)
        cells = {
            k: Cell(CellStatus.IMPLEMENTABLE if k in implementable else CellStatus.IMPOSSIBLE, provenance)
            for k in cls.pairs(n_max)
        }
        return cls(system, n_max, cells)


@lru_cache(maxsize=None)
def _relations(n_max: int) -> dict:
    """Successors of each pair under the certified constructive relations.

    Every edge certificate is checked exactly once before it is used.
    """
    succ: dict = {}
    for node in CommTable.pairs(n_max):
        out = []
        for nxt, make in copt_edges(node, n_max):
            if check_certificate(gen_copt(*node), gen_copt(*nxt), make()):
                out.append(nxt)
        succ[node] = out
    return succ


def _above(node, n_max) -> set:
    """All pairs that ``C^opt_node`` is certified to be majorized by."""
    succ = _relations(n_max)
    seen, stack = set(), [node]
    while stack:
        for nxt in succ[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    seen.discard(node)
    return seen


def build_table(sys: SystemSpec, n_max: int, budget: Optional[SearchBudget] = None) -> CommTable:
    """Fill every cell, then propagate implementability down the order and
    impossibility up it for cells the search left unknown."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    budget = budget or SearchBudget(restarts=4, iters=300)
    cells = {}
    for n, t in CommTable.pairs(n_max):
        v = find_implementation(gen_copt(n, t), sys, budget)
        status = {
            SearchStatus.REALIZABLE: CellStatus.IMPLEMENTABLE,
            SearchStatus.IMPOSSIBLE: CellStatus.IMPOSSIBLE,
            SearchStatus.UNKNOWN: CellStatus.UNKNOWN,
        }[v.status]
        prov = v.provenance
        if v.status is SearchStatus.UNKNOWN and v.residual is not None:
            prov = f"{prov} (residual {v.residual:.3g})"
        cells[(n, t)] = Cell(status, prov)

    changed = True
    while changed:
        changed = False
        for node in CommTable.pairs(n_max):
            if cells[node].status is not CellStatus.UNKNOWN:
                continue
            for other in sorted(_above(node, n_max)):
                if cells[other].status is CellStatus.IMPLEMENTABLE:
                    cells[node] = Cell(CellStatus.IMPLEMENTABLE, f"closure:below C^opt_{other}")
                    changed = True
                    break
            else:
                for other in CommTable.pairs(n_max):
                    if cells[other].status is CellStatus.IMPOSSIBLE and node in _above(other, n_max):
                        cells[node] = Cell(CellStatus.IMPOSSIBLE, f"closure:above C^opt_{other}")
                        changed = True
                        break
    return CommTable(sys, n_max, cells)


@dataclass(frozen=True)
class Violation:
    smaller: tuple[int, int]
    larger: tuple[int, int]

    def __str__(self):
        (a, b), (c, d) = self.smaller, self.larger
        return (f"C^opt_{{{a},{b}}} is marked impossible but is majorized by "
                f"C^opt_{{{c},{d}}}, which is marked implementable")


def check_table_consistency(table: CommTable) -> list[Violation]:
    """Pairs where an impossible cell lies below an implementable one."""
    table.validate()
    out = []
    for node in CommTable.pairs(table.n_max):
        if table.cells[node].status is not CellStatus.IMPOSSIBLE:
            continue
        for other in sorted(_above(node, table.n_max)):
            if table.cells[other].status is CellStatus.IMPLEMENTABLE:
                out.append(Violation(node, other))
    return out


def inconsistent_fixtures() -> dict[str, CommTable]:
    """Two tables that no physical system can have.

    Each marks a pair implementable while a pair below it on the diagonal
    chain ``C^opt_{n,t} ⊑ C^opt_{n+1,t+1}`` is marked impossible.
    """
    return {
        "c42-without-c31": CommTable.from_statuses(4, [(2, 1), (4, 2)]),
        "c43-without-c32": CommTable.from_statuses(4, [(2, 1), (3, 1), (4, 1), (4, 3)]),
    }


def render_grid(table: CommTable) -> str:
    """Aligned grid: one row per n, one column per t."""
    ts = range(1, table.n_max)
    width = max(3, len(str(table.n_max)) + 2)
    head = "n\\t".ljust(width) + "".join(str(t).center(width) for t in ts)
    lines = [head.rstrip()]
    for n in range(2, table.n_max + 1):
        cells = "".join(
            (SYMBOLS[table.cells[(n, t)].status] if t < n else "").center(width) for t in ts
        )
        lines.append(str(n).ljust(width) + cells.rstrip())
    lines.append("✓ implementable   ✗ impossible   ? unknown")
    return "\n".join(lines)


def render_csv(table: CommTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "t", "status", "provenance"])
    for n, t in CommTable.pairs(table.n_max):
        c = table.cells[(n, t)]
        w.writerow([n, t, c.status.value, c.provenance])
    return buf.getvalue()
