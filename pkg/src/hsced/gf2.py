"""Bit-packed linear algebra over GF(2).

Matrices and vectors store 64 bits per machine word (LSB-first within a
word), so row operations, syndromes and popcounts run on whole uint64
lanes via numpy. All objects are immutable and hashable, which lets
higher layers cache derived structures (edge lists, RREF bases) keyed on
the matrix itself.
"""

from __future__ import annotations

import numpy as np

_WORD = 64


def _nwords(nbits: int) -> int:
    return (nbits + _WORD - 1) // _WORD


def _tail_mask(nbits: int) -> np.uint64:
    """Mask of valid bits in the final word."""
    used = nbits % _WORD
    if used == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << used) - 1)


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into (rows, nwords) uint64, LSB-first."""
    rows, cols = bits.shape
    w = _nwords(cols)
    padded = np.zeros((rows, w * _WORD), dtype=np.uint8)
    padded[:, :cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view(np.uint64).reshape(rows, w)


def _unpack(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if rows == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    as_bytes = words.reshape(rows, -1).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return np.ascontiguousarray(bits[:, :cols])


def _validate_binary(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if not np.isin(a, (0, 1)).all():
        raise ValueError("entries must be 0 or 1")
    return a.astype(np.uint8)


class BitVector:
    """Immutable GF(2) vector packed into uint64 words."""

    __slots__ = ("nbits", "_words", "_hash")

    def __init__(self, words: np.ndarray, nbits: int):
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (_nwords(nbits),):
            raise ValueError("word count does not match length")
        words = words.copy()
        if nbits:
            words[-1] &= _tail_mask(nbits)
        words.setflags(write=False)
        self.nbits = int(nbits)
        self._words = words
        self._hash = None

    @classmethod
    def from_array(cls, bits) -> "BitVector":
        bits = _validate_binary(bits)
        if bits.ndim != 1:
            raise ValueError("expected a 1-D array")
        return cls(_pack(bits[None, :])[0], bits.shape[0])

    @classmethod
    def from_support(cls, nbits: int, support) -> "BitVector":
        support = np.asarray(support, dtype=np.int64)
        if support.size and (support.min() < 0 or support.max() >= nbits):
            raise ValueError("support index out of range")
        bits = np.zeros(nbits, dtype=np.uint8)
        bits[support] = 1
        return cls.from_array(bits)

    @classmethod
    def zeros(cls, nbits: int) -> "BitVector":
        return cls(np.zeros(_nwords(nbits), dtype=np.uint64), nbits)

    @property
    def words(self) -> np.ndarray:
        return self._words

    def to_array(self) -> np.ndarray:
        return _unpack(self._words[None, :], self.nbits)[0]

    def weight(self) -> int:
        return int(np.bitwise_count(self._words).sum())

    def is_zero(self) -> bool:
        return not self._words.any()

    def support(self) -> np.ndarray:
        return np.nonzero(self.to_array())[0]

    def get(self, i: int) -> int:
        if not 0 <= i < self.nbits:
            raise IndexError("bit index out of range")
        return int((self._words[i // _WORD] >> np.uint64(i % _WORD)) & np.uint64(1))

    __getitem__ = get

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.nbits != other.nbits:
            raise ValueError("length mismatch")
        return BitVector(self._words ^ other._words, self.nbits)

    def __and__(self, other: "BitVector") -> "BitVector":
        if self.nbits != other.nbits:
            raise ValueError("length mismatch")
        return BitVector(self._words & other._words, self.nbits)

    def __len__(self) -> int:
        return self.nbits

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.nbits == other.nbits and bool(
            np.array_equal(self._words, other._words)
        )

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(
                self, "_hash", hash((self.nbits, self._words.tobytes()))
            )
        return self._hash

    def __setattr__(self, name, value):
        if name in self.__slots__ and hasattr(self, "_hash") and name != "_hash":
            raise AttributeError("BitVector is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self) -> str:
        body = "".join(map(str, self.to_array())) if self.nbits <= 80 else (
            f"len={self.nbits} weight={self.weight()}"
        )
        return f"BitVector({body})"


class BitMatrix:
    """Immutable GF(2) matrix packed row-major into uint64 words."""

    __slots__ = ("rows", "cols", "_words", "_hash")

    def __init__(self, words: np.ndarray, rows: int, cols: int):
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (rows, _nwords(cols)):
            raise ValueError("word array does not match dimensions")
        words = words.copy()
        if cols and rows:
            words[:, -1] &= _tail_mask(cols)
        words.setflags(write=False)
        self.rows = int(rows)
        self.cols = int(cols)
        self._words = words
        self._hash = None

    @classmethod
    def from_array(cls, bits) -> "BitMatrix":
        bits = _validate_binary(bits)
        if bits.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(_pack(bits), bits.shape[0], bits.shape[1])

    @classmethod
    def from_rows(cls, vectors) -> "BitMatrix":
        vectors = list(vectors)
        if not vectors:
            raise ValueError("need at least one row")
        nbits = vectors[0].nbits
        if any(v.nbits != nbits for v in vectors):
            raise ValueError("length mismatch")
        words = np.stack([v.words for v in vectors])
        return cls(words, len(vectors), nbits)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8))

    @property
    def words(self) -> np.ndarray:
        return self._words

    def to_array(self) -> np.ndarray:
        return _unpack(self._words, self.cols)

    def row(self, i: int) -> BitVector:
        if not 0 <= i < self.rows:
            raise IndexError("row index out of range")
        return BitVector(self._words[i], self.cols)

    def with_row(self, vec: BitVector) -> "BitMatrix":
        """New matrix with ``vec`` appended as the final row."""
        if vec.nbits != self.cols:
            raise ValueError("length mismatch")
        words = np.vstack([self._words, vec.words[None, :]])
        return BitMatrix(words, self.rows + 1, self.cols)

    def get(self, r: int, c: int) -> int:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError("index out of range")
        return int((self._words[r, c // _WORD] >> np.uint64(c % _WORD)) & np.uint64(1))

    def ones_count(self) -> int:
        return int(np.bitwise_count(self._words).sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and bool(np.array_equal(self._words, other._words))
        )

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(
                self, "_hash", hash((self.rows, self.cols, self._words.tobytes()))
            )
        return self._hash

    def __setattr__(self, name, value):
        if name in self.__slots__ and hasattr(self, "_hash") and name != "_hash":
            raise AttributeError("BitMatrix is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols}, {self.ones_count()} ones)"


def rref(m: BitMatrix) -> BitMatrix:
    """Reduced row echelon form; zero rows dropped.

    Leftmost-pivot, full reduction above and below each pivot. The result
    is the canonical representative of the row space: two matrices have
    equal row spaces iff their rref is identical.
    """
    a = m.words.copy()
    r = 0
    for c in range(m.cols):
        if r == m.rows:
            break
        w, b = divmod(c, _WORD)
        col = (a[r:, w] >> np.uint64(b)) & np.uint64(1)
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        hits = (a[:, w] >> np.uint64(b)) & np.uint64(1)
        hits[r] = 0
        sel = np.nonzero(hits)[0]
        if sel.size:
            a[sel] ^= a[r]
        r += 1
    return BitMatrix(a[:r], r, m.cols)


def rank(m: BitMatrix) -> int:
    return rref(m).rows


def _pivot_cols(echelon: BitMatrix) -> np.ndarray:
    """Leading-one column of each row of an echelon-form matrix."""
    pivots = np.empty(echelon.rows, dtype=np.int64)
    words = echelon.words
    for i in range(echelon.rows):
        row = words[i]
        nz = np.nonzero(row)[0]
        if nz.size == 0:
            raise ValueError("echelon matrix has a zero row")
        w = int(nz[0])
        v = int(row[w])
        pivots[i] = w * _WORD + ((v & -v).bit_length() - 1)
    return pivots


def _leading_bit(words: np.ndarray) -> int:
    nz = np.nonzero(words)[0]
    i = int(nz[0])
    v = int(words[i])
    return i * _WORD + ((v & -v).bit_length() - 1)


class RowBasis:
    """Incremental row-space tracker (online Gaussian elimination).

    The stored rows are kept fully reduced (each has the only 1 among
    all pivot columns at its own pivot), which makes ``residual`` a
    linear map onto canonical coset representatives: residual(a ^ b) ==
    residual(a) ^ residual(b), and residual is zero exactly on the span.
    """

    def __init__(self, m: BitMatrix | None = None):
        self._rows: dict[int, np.ndarray] = {}
        self._nbits = None if m is None else m.cols
        if m is not None:
            for i in range(m.rows):
                self.add(m.row(i))

    @property
    def rank(self) -> int:
        return len(self._rows)

    def copy(self) -> "RowBasis":
        # stored arrays are never mutated in place, so sharing is safe
        clone = RowBasis()
        clone._nbits = self._nbits
        clone._rows = dict(self._rows)
        return clone

    def residual(self, vec: BitVector) -> BitVector:
        """Canonical representative of vec's coset; zero iff in the span."""
        if self._nbits is None:
            return vec
        if vec.nbits != self._nbits:
            raise ValueError("length mismatch")
        w = vec.words.copy()
        one = np.uint64(1)
        for piv, row in self._rows.items():
            if (w[piv // _WORD] >> np.uint64(piv % _WORD)) & one:
                w ^= row
        return BitVector(w, self._nbits)

    def contains(self, vec: BitVector) -> bool:
        return self.residual(vec).is_zero()

    def add(self, vec: BitVector) -> bool:
        """Add ``vec`` to the span. Returns True if the rank grew."""
        if self._nbits is None:
            self._nbits = vec.nbits
        res = self.residual(vec)
        if res.is_zero():
            return False
        w = res.words.copy()
        piv = _leading_bit(w)
        one = np.uint64(1)
        # back-eliminate the new pivot from existing rows (new arrays,
        # never in-place, so copies sharing these rows stay intact)
        for q, row in list(self._rows.items()):
            if (row[piv // _WORD] >> np.uint64(piv % _WORD)) & one:
                self._rows[q] = row ^ w
        self._rows[piv] = w
        return True


def in_row_space(m: BitMatrix, vec: BitVector) -> bool:
    """True iff ``vec`` is a GF(2) combination of the rows of ``m``."""
    return RowBasis(m).contains(vec)


def syndrome(m: BitMatrix, x: BitVector) -> BitVector:
    """m @ x over GF(2): one parity bit per row."""
    if x.nbits != m.cols:
        raise ValueError("length mismatch")
    if m.rows == 0:
        return BitVector.zeros(0)
    overlap = np.bitwise_count(m.words & x.words[None, :]).sum(axis=1)
    return BitVector.from_array((overlap & 1).astype(np.uint8))


def null_space_basis(m: BitMatrix) -> list[BitVector]:
    """Basis of {x : m x = 0}, one vector per free column of rref(m)."""
    e = rref(m)
    pivots = _pivot_cols(e) if e.rows else np.empty(0, dtype=np.int64)
    free = np.setdiff1d(np.arange(m.cols), pivots)
    ebits = e.to_array()
    basis = []
    for f in free:
        v = np.zeros(m.cols, dtype=np.uint8)
        v[f] = 1
        if e.rows:
            v[pivots] = ebits[:, f]
        basis.append(BitVector.from_array(v))
    return basis


def null_space_codewords(m: BitMatrix, max_nullity: int = 20) -> list[BitVector]:
    """All 2^nullity vectors of the null space, zero vector first.

    Refuses nullity > max_nullity to keep enumeration bounded.
    """
    basis = null_space_basis(m)
    if len(basis) > max_nullity:
        raise ValueError(
            f"nullity {len(basis)} exceeds enumeration bound {max_nullity}"
        )
    words = np.zeros((1, _nwords(m.cols)), dtype=np.uint64)
    for b in basis:
        words = np.vstack([words, words ^ b.words[None, :]])
    return [BitVector(w, m.cols) for w in words]


def matrix_to_text(m: BitMatrix) -> str:
    """One row per line, each a string of '0'/'1' characters."""
    bits = m.to_array()
    return "\n".join("".join(map(str, row)) for row in bits) + "\n"


def matrix_from_text(text: str) -> BitMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    width = len(lines[0])
    rows = []
    for ln in lines:
        if len(ln) != width or set(ln) - {"0", "1"}:
            raise ValueError("rows must be equal-length strings of 0/1")
        rows.append([int(ch) for ch in ln])
    return BitMatrix.from_array(np.array(rows, dtype=np.uint8))


def write_matrix_text(m: BitMatrix, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(matrix_to_text(m))


def read_matrix_text(path) -> BitMatrix:
    with open(path, "r", encoding="ascii") as fh:
        return matrix_from_text(fh.read())


def read_alist(path) -> BitMatrix:
    """Read a parity-check matrix in alist format (MacKay convention).

    Only the column adjacency lists are needed; degree sections are
    validated for consistency.
    """
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    try:
        cols, rows = int(next(it)), int(next(it))
        max_col_deg, max_row_deg = int(next(it)), int(next(it))
        col_degs = [int(next(it)) for _ in range(cols)]
        row_degs = [int(next(it)) for _ in range(rows)]
        if max(col_degs, default=0) > max_col_deg or max(row_degs, default=0) > max_row_deg:
            raise ValueError("alist degree exceeds declared maximum")
        bits = np.zeros((rows, cols), dtype=np.uint8)
        for c in range(cols):
            for _ in range(max_col_deg):
                r = int(next(it))
                if r:  # zero-padded entries mean "unused slot"
                    bits[r - 1, c] = 1
    except StopIteration:
        raise ValueError("truncated alist file") from None
    if list(bits.sum(axis=0)) != col_degs or list(bits.sum(axis=1)) != row_degs:
        raise ValueError("alist adjacency does not match degree lists")
    return BitMatrix.from_array(bits)
