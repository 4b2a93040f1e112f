"""Dense linear algebra over GF(2).

Matrices are immutable.  Entries are exposed as a read-only ``uint8`` array;
products are computed on rows packed into 64-bit words (AND, popcount, parity).
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BinaryMatrix",
    "ShapeError",
    "mat_mul",
    "kron",
    "rank",
    "hstack",
    "vstack",
    "transpose",
    "identity",
    "zeros",
    "hamming_parity_check",
    "parse_matrix_text",
    "format_matrix_text",
    "read_matrix",
    "write_matrix",
    "pack_rows",
    "row_basis",
]


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into ``(rows, ceil(cols/64))`` uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    rows, cols = bits.shape
    n_words = (cols + 63) // 64
    padded = np.zeros((rows, n_words * 64), dtype=np.uint8)
    padded[:, :cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").reshape(rows, n_words).astype(np.uint64)


class BinaryMatrix:
    """A rows x cols matrix with entries in {0, 1}."""

    __slots__ = ("_bits", "_packed")

    def __init__(self, bits: Sequence[Sequence[int]] | np.ndarray):
        arr = np.array(bits, dtype=np.int64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-D array, got {arr.ndim} dimensions")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"matrix must have at least one row and column, got {arr.shape}")
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("entries must be 0 or 1")
        out = arr.astype(np.uint8)
        out.setflags(write=False)
        self._bits = out
        self._packed: np.ndarray | None = None

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def rows(self) -> int:
        return self._bits.shape[0]

    @property
    def cols(self) -> int:
        return self._bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._bits.shape

    @property
    def packed(self) -> np.ndarray:
        if self._packed is None:
            packed = pack_rows(self._bits)
            packed.setflags(write=False)
            self._packed = packed
        return self._packed

    def __getitem__(self, idx):
        return self._bits[idx]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self.shape, self._bits.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.rows}x{self.cols})"

    def __str__(self) -> str:
        return format_matrix_text(self).rstrip("\n")

    def is_zero(self) -> bool:
        return not self._bits.any()

    def to_rows(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self._bits]

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> "BinaryMatrix":
        rows = list(rows)
        if not rows:
            raise ShapeError("matrix must have at least one row")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ShapeError(f"ragged rows: widths {sorted(widths)}")
        for r in rows:
            if set(r) - {"0", "1"}:
                raise ValueError(f"row {r!r} contains characters other than '0'/'1'")
        return cls([[int(c) for c in r] for r in rows])


def identity(n: int) -> BinaryMatrix:
    return BinaryMatrix(np.eye(n, dtype=np.uint8))


def zeros(rows: int, cols: int) -> BinaryMatrix:
    return BinaryMatrix(np.zeros((rows, cols), dtype=np.uint8))


def transpose(a: BinaryMatrix) -> BinaryMatrix:
    return BinaryMatrix(a.bits.T)


def mat_mul(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    """Product over GF(2): ``C[i, j] = sum_k A[i, k] B[k, j] mod 2``."""
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    left = a.packed
    right = transpose(b).packed
    # popcount of (row_i AND col_j), summed over words, parity taken at the end
    counts = np.zeros((a.rows, b.cols), dtype=np.int64)
    for w in range(left.shape[1]):
        counts += np.bitwise_count(left[:, w, None] & right[None, :, w]).astype(np.int64)
    return BinaryMatrix(counts & 1)


def kron(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    """Kronecker product; block ``(i, j)`` of the result is ``A[i, j] * B``."""
    return BinaryMatrix(np.kron(a.bits, b.bits))


def hstack(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    if a.rows != b.rows:
        raise ShapeError(f"hstack needs equal row counts, got {a.rows} and {b.rows}")
    return BinaryMatrix(np.hstack([a.bits, b.bits]))


def vstack(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    if a.cols != b.cols:
        raise ShapeError(f"vstack needs equal column counts, got {a.cols} and {b.cols}")
    return BinaryMatrix(np.vstack([a.bits, b.bits]))


def _rows_as_ints(bits: np.ndarray) -> list[int]:
    return [int("".join("1" if v else "0" for v in row), 2) for row in bits]


def rank(a: BinaryMatrix | np.ndarray) -> int:
    """Row rank over GF(2) by Gaussian elimination on a copy."""
    bits = a.bits if isinstance(a, BinaryMatrix) else np.asarray(a, dtype=np.uint8)
    if bits.size == 0:
        return 0
    work = _rows_as_ints(bits)
    r = 0
    for col in range(bits.shape[1] - 1, -1, -1):
        mask = 1 << col
        pivot = next((i for i in range(r, len(work)) if work[i] & mask), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        for i in range(len(work)):
            if i != r and work[i] & mask:
                work[i] ^= work[r]
        r += 1
        if r == len(work):
            break
    return r


def row_basis(a: BinaryMatrix) -> BinaryMatrix | None:
    """A full-rank matrix with the same row space as ``a`` (None if ``a`` is zero).

    Rows of ``a`` are kept greedily in their original order when independent of
    the rows already kept.
    """
    kept: list[np.ndarray] = []
    for row in a.bits:
        if rank(np.array(kept + [row])) == len(kept) + 1:
            kept.append(row)
    return BinaryMatrix(np.array(kept)) if kept else None


def hamming_parity_check(r: int = 3) -> BinaryMatrix:
    """Parity-check matrix of the [2^r - 1, 2^r - 1 - r] Hamming code.

    Column ``j`` (0-based) is the binary expansion of ``j + 1`` with the most
    significant bit in the first row.
    """
    n = 2**r - 1
    cols = [[(j + 1) >> (r - 1 - i) & 1 for i in range(r)] for j in range(n)]
    return BinaryMatrix(np.array(cols, dtype=np.uint8).T)


def parse_matrix_text(text: str) -> BinaryMatrix:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append(line)
    return BinaryMatrix.from_rows(rows)


def format_matrix_text(a: BinaryMatrix) -> str:
    return "".join(row + "\n" for row in a.to_rows())


def read_matrix(path: str | Path) -> BinaryMatrix:
    return parse_matrix_text(Path(path).read_text())


def write_matrix(a: BinaryMatrix, path: str | Path) -> None:
    Path(path).write_text(format_matrix_text(a))
