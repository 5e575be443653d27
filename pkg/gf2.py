"""
Rateless Toolkit - GF(2) Module
Sparse binary matrices and the GF(2) elimination used to verify parity-check structure.
"""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from errors import InconsistentSystemError, InsufficientRankError
from logger import get_logger

logger = get_logger(__name__)

UNKNOWN = -1


@dataclass(frozen=True)
class SparseBinMatrix:
    """Row-major sparse binary matrix: each row lists the columns holding a 1."""

    rows: int
    cols: int
    row_support: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.row_support) != self.rows:
            raise ValueError(f"Expected {self.rows} row supports, got {len(self.row_support)}")
        for r, support in enumerate(self.row_support):
            for a, b in zip(support, support[1:]):
                if a >= b:
                    raise ValueError(f"Row {r} support not strictly increasing: {support}")
            if support and (support[0] < 0 or support[-1] >= self.cols):
                raise ValueError(f"Row {r} has a column index outside [0, {self.cols})")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], cols: int) -> "SparseBinMatrix":
        """Build from unsorted per-row column collections (duplicates cancel mod 2)."""
        support = []
        for row in rows:
            counts: Dict[int, int] = {}
            for c in row:
                counts[c] = counts.get(c, 0) ^ 1
            support.append(tuple(sorted(c for c, bit in counts.items() if bit)))
        return cls(len(support), cols, tuple(support))

    @classmethod
    def from_dense(cls, dense) -> "SparseBinMatrix":
        arr = np.asarray(dense) % 2
        rows, cols = arr.shape
        return cls(rows, cols, tuple(tuple(int(c) for c in np.flatnonzero(arr[r])) for r in range(rows)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for r, support in enumerate(self.row_support):
            out[r, list(support)] = 1
        return out

    @cached_property
    def col_support(self) -> Tuple[Tuple[int, ...], ...]:
        """Per-column sorted row lists, derived once."""
        cols = [[] for _ in range(self.cols)]
        for r, support in enumerate(self.row_support):
            for c in support:
                cols[c].append(r)
        return tuple(tuple(c) for c in cols)

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        indptr = np.zeros(self.rows + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(s) for s in self.row_support])
        indices = np.fromiter((c for s in self.row_support for c in s), dtype=np.int64, count=int(indptr[-1]))
        data = np.ones(len(indices), dtype=np.int64)
        return sparse.csr_matrix((data, indices, indptr), shape=(self.rows, self.cols))

    @property
    def nnz(self) -> int:
        return sum(len(s) for s in self.row_support)

    def take_rows(self, row_indices: Sequence[int]) -> "SparseBinMatrix":
        return SparseBinMatrix(len(row_indices), self.cols, tuple(self.row_support[r] for r in row_indices))

    def take_cols(self, col_indices: Sequence[int]) -> "SparseBinMatrix":
        """Restrict to the given columns, renumbering them 0..len-1 in the given order."""
        remap = {c: j for j, c in enumerate(col_indices)}
        rows = [[remap[c] for c in s if c in remap] for s in self.row_support]
        return SparseBinMatrix(self.rows, len(col_indices), tuple(tuple(sorted(r)) for r in rows))

    def row_bits(self, row: int) -> int:
        """Row as a Python int bitset (bit c set iff entry (row, c) is 1)."""
        value = 0
        for c in self.row_support[row]:
            value |= 1 << c
        return value


def _insert_row(pivots: Dict[int, int], value: int) -> int:
    """
    Reduce a bitset row against the current basis and add it if independent.

    Pivots are keyed by their lowest set bit. Returns the reduced value
    (0 when the row was dependent).
    """
    while value:
        low = value & -value
        pivot = pivots.get(low)
        if pivot is None:
            pivots[low] = value
            return value
        value ^= pivot
    return 0


def rank(m: SparseBinMatrix) -> int:
    """
    GF(2) rank by Gaussian elimination on bit-packed copies of the rows.

    Args:
        m: Matrix to inspect (left untouched)

    Returns:
        The rank of m over GF(2)
    """
    pivots: Dict[int, int] = {}
    for r in range(m.rows):
        _insert_row(pivots, m.row_bits(r))
        if len(pivots) == min(m.rows, m.cols):
            break
    return len(pivots)


def _normalize_knowns(knowns, cols: int) -> np.ndarray:
    """Accept a mapping {col: bit} or a sequence with -1/None for unknown entries."""
    out = np.full(cols, UNKNOWN, dtype=np.int64)
    if knowns is None:
        return out
    if isinstance(knowns, Mapping):
        for c, bit in knowns.items():
            out[int(c)] = int(bit) & 1
        return out
    seq = list(knowns)
    if len(seq) != cols:
        raise ValueError(f"Known assignment has length {len(seq)}, expected {cols}")
    for c, bit in enumerate(seq):
        if bit is not None and bit != UNKNOWN:
            out[c] = int(bit) & 1
    return out


def solve_noiseless(m: SparseBinMatrix, rhs: Optional[Sequence[int]] = None,
                    knowns: Union[Mapping[int, int], Sequence, None] = None) -> np.ndarray:
    """
    Complete a partial assignment so that every parity equation m·x = rhs holds.

    Args:
        m: Parity-check matrix
        rhs: Per-row parity targets (all zero when omitted)
        knowns: Partial assignment, mapping {column: bit} or a full-length
            sequence using -1/None for unknown entries

    Returns:
        Full bit-vector (uint8) of length m.cols

    Raises:
        InconsistentSystemError: a row with no free variable is violated
        InsufficientRankError: the unknowns are not uniquely determined
    """
    rhs_arr = np.zeros(m.rows, dtype=np.int64) if rhs is None else np.asarray(rhs, dtype=np.int64) % 2
    known = _normalize_knowns(knowns, m.cols)
    unknown_cols = np.flatnonzero(known == UNKNOWN)
    n_u = len(unknown_cols)
    position = {int(c): j for j, c in enumerate(unknown_cols)}
    rhs_bit = 1 << n_u

    pivots: Dict[int, int] = {}
    for r, support in enumerate(m.row_support):
        value = 0
        parity = int(rhs_arr[r])
        for c in support:
            j = position.get(c)
            if j is None:
                parity ^= int(known[c])
            else:
                value |= 1 << j
        if parity:
            value |= rhs_bit
        reduced = _insert_row(pivots, value)
        if reduced == rhs_bit:
            raise InconsistentSystemError(f"Row {r} is violated by the known values")

    if len(pivots) < n_u:
        raise InsufficientRankError(f"Rank {len(pivots)} is below the {n_u} unknowns")

    # Back substitution from the highest pivot bit down: higher bits are solved first.
    solution = np.zeros(n_u, dtype=np.int64)
    for low in sorted(pivots, reverse=True):
        row = pivots[low]
        j = low.bit_length() - 1
        bit = 1 if row & rhs_bit else 0
        rest = (row & ~rhs_bit) ^ low
        while rest:
            top = rest & -rest
            bit ^= int(solution[top.bit_length() - 1])
            rest ^= top
        solution[j] = bit

    out = known.copy()
    out[unknown_cols] = solution
    return out.astype(np.uint8)


def syndrome(m: SparseBinMatrix, word: Sequence[int]) -> np.ndarray:
    """Return m·word over GF(2); all-zero iff every parity equation holds."""
    w = np.asarray(word, dtype=np.int64)
    if w.shape[0] != m.cols:
        raise ValueError(f"Word length {w.shape[0]} != {m.cols} columns")
    return (m.csr @ w % 2).astype(np.uint8)


def dump_matrix(m: SparseBinMatrix, path: Union[str, Path], header: Optional[Tuple[int, int]] = None) -> Path:
    """
    Write a debugging dump: header line `K L`, then one `row: c1 c2 ...` line per row.

    For a parity-check matrix with L rows and K+L columns the header defaults to `K L`.
    """
    path = Path(path)
    if header is None:
        header = (m.cols - m.rows, m.rows)
    lines = [f"{header[0]} {header[1]}"]
    lines += [f"{r}: " + " ".join(str(c) for c in s) for r, s in enumerate(m.row_support)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote matrix dump {path} ({m.rows}x{m.cols}, {m.nnz} ones)")
    return path


def load_matrix(path: Union[str, Path], cols: Optional[int] = None) -> Tuple[SparseBinMatrix, Tuple[int, int]]:
    """Read a dump written by dump_matrix; returns the matrix and its header."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    k, l = (int(x) for x in text[0].split())
    rows = []
    for line in text[1:]:
        if not line.strip():
            continue
        _, _, body = line.partition(":")
        rows.append(tuple(int(c) for c in body.split()))
    return SparseBinMatrix(len(rows), cols if cols is not None else k + l, tuple(rows)), (k, l)
