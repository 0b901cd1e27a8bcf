"""Communication matrices and the success functionals of the box test.

Entries are :class:`fractions.Fraction` throughout, so every matrix built
here is exactly row-stochastic and comparisons are exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CommMatrix",
    "MatrixFormatError",
    "TupleIndex",
    "as_fraction",
    "gen_copt",
    "gen_vn",
    "identity",
    "psuc",
    "psuc_prime",
    "tuple_index",
]


class MatrixFormatError(ValueError):
    """Raised when a matrix payload is malformed or not row-stochastic."""


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions, floats or ``"p/q"`` strings to a Fraction.

    Floats are converted exactly (binary value), not rounded.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not matrix entries")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    if isinstance(value, np.integer):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return Fraction(float(value))
    raise TypeError(f"cannot convert {value!r} to a rational")


@dataclass(frozen=True)
class CommMatrix:
    """Row-stochastic k x n matrix with exact rational entries."""

    data: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(x) for x in row) for row in self.data)
        if not rows or not rows[0]:
            raise MatrixFormatError("communication matrix must be non-empty")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MatrixFormatError(f"row {i} has length {len(row)}, expected {width}")
            if any(x < 0 for x in row):
                raise MatrixFormatError(f"row {i} has a negative entry")
            if sum(row) != 1:
                raise MatrixFormatError(f"row {i} sums to {sum(row)}, not 1")
        object.__setattr__(self, "data", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "CommMatrix":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def rows(self) -> int:
        return len(self.data)

    @property
    def cols(self) -> int:
        return len(self.data[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.data[i][j]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.data])

    def transpose_rows(self) -> list[list[Fraction]]:
        """Plain nested-list transpose (not stochastic in general)."""
        return [list(col) for col in zip(*self.data)]

    def row_multiset(self) -> list[tuple[Fraction, ...]]:
        return sorted(self.data)

    def same_rows_as(self, other: "CommMatrix") -> bool:
        """Equality up to a permutation of rows."""
        return self.shape == other.shape and self.row_multiset() == other.row_multiset()

    # -- serialization -------------------------------------------------
    def to_dict(self, decimal: bool = False) -> dict:
        if decimal:
            data = [float(f"{float(x):.12g}") for row in self.data for x in row]
        else:
            data = [_fmt(x) for row in self.data for x in row]
        return {"rows": self.rows, "cols": self.cols, "data": data}

    def to_json(self, decimal: bool = False) -> str:
        return json.dumps(self.to_dict(decimal))

    @classmethod
    def from_dict(cls, payload: dict) -> "CommMatrix":
        if not isinstance(payload, dict):
            raise MatrixFormatError("matrix payload must be a JSON object")
        for key in ("rows", "cols", "data"):
            if key not in payload:
                raise MatrixFormatError(f"missing field '{key}'")
        k, n, data = payload["rows"], payload["cols"], payload["data"]
        if not isinstance(k, int) or not isinstance(n, int) or k < 1 or n < 1:
            raise MatrixFormatError("fields 'rows' and 'cols' must be positive integers")
        if not isinstance(data, list) or len(data) != k * n:
            raise MatrixFormatError(f"field 'data' must be a list of {k}*{n} entries")
        try:
            values = [as_fraction(x) for x in data]
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise MatrixFormatError(f"field 'data': {exc}") from None
        return cls(tuple(tuple(values[i * n:(i + 1) * n]) for i in range(k)))

    @classmethod
    def from_json(cls, text: str) -> "CommMatrix":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MatrixFormatError(f"invalid JSON: {exc}") from None
        return cls.from_dict(payload)

    def pretty(self, decimal: bool = False) -> str:
        cells = [[(f"{float(x):.12g}" if decimal else _fmt(x)) for x in row] for row in self.data]
        width = max(len(c) for row in cells for c in row)
        return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells)


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class TupleIndex:
    """Lexicographically ordered strictly increasing t-tuples over 1..n."""

    n: int
    t: int
    tuples: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.tuples)

    def position(self, tup: Sequence[int]) -> int:
        """0-based row index of a tuple."""
        return self.tuples.index(tuple(tup))


def _check_nt(n: int, t: int) -> None:
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    if not 1 <= t <= n - 1:
        raise ValueError(f"need 1 <= t <= n-1, got n={n}, t={t}")


def tuple_index(n: int, t: int) -> TupleIndex:
    _check_nt(n, t)
    # itertools.combinations emits lexicographic order for a sorted pool
    tuples = tuple(combinations(range(1, n + 1), t))
    assert len(tuples) == comb(n, t)
    return TupleIndex(n, t, tuples)


def gen_copt(n: int, t: int = 1) -> CommMatrix:
    """Optimal communication matrix for n boxes with t revealed empty boxes.

    Rows follow :func:`tuple_index`; the row of ``(i_1, ..., i_t)`` is zero
    at those columns and ``1/(n-t)`` elsewhere.
    """
    index = tuple_index(n, t)
    p = Fraction(1, n - t)
    zero = Fraction(0)
    rows = []
    for tup in index.tuples:
        empty = set(tup)
        rows.append(tuple(zero if j in empty else p for j in range(1, n + 1)))
    return CommMatrix(tuple(rows))


def gen_vn(n: int) -> CommMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    return CommMatrix(tuple(tuple(Fraction(1, n) for _ in range(n)) for _ in range(n)))


def uniform(rows: int, cols: int) -> CommMatrix:
    """The rows x cols matrix with every entry 1/cols."""
    return CommMatrix(tuple(tuple(Fraction(1, cols) for _ in range(cols)) for _ in range(rows)))


def identity(n: int) -> CommMatrix:
    return CommMatrix(tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))


def _require_square(C: CommMatrix) -> int:
    if C.rows != C.cols:
        raise ValueError(f"success probability needs a square matrix, got {C.rows}x{C.cols}")
    if C.rows < 2:
        raise ValueError("success probability needs n >= 2")
    return C.rows


def psuc(C: CommMatrix) -> Fraction:
    """Worst-case success probability: smallest off-diagonal entry."""
    n = _require_square(C)
    return min(C[i, j] for i in range(n) for j in range(n) if i != j)


def psuc_prime(C: CommMatrix) -> Fraction:
    """Success probability when the revealed empty box is uniformly random."""
    n = _require_square(C)
    return sum((min(C[i, j] for j in range(n) if j != i) for i in range(n)), Fraction(0)) / n
