"""Polar code construction in the 5G NR convention.

Codes use the natural-order transform x = v G_N with G_N = F^(kron n),
F = [[1,0],[1,1]], and no bit-reversal permutation. Frozen positions come
from the NR universal reliability sequence (valid for any N <= 1024),
restricted to indices below N. The parity-check matrix collects the
columns of G_N indexed by the frozen set, so H x recovers exactly the
frozen coordinates of v = x G_N (G_N is self-inverse over GF(2)).
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .gf2 import BitMatrix, BitVector, rref

_SEQUENCE_LEN = 1024
# SHA-256 of the sequence tokens joined by single spaces; guards the data
# asset against accidental edits.
_SEQUENCE_SHA256 = "a857f2fcc90980289a71fb0d53dbd87960e95c74e60f1e3d45338c2f2e90c796"


@functools.lru_cache(maxsize=1)
def reliability_sequence() -> np.ndarray:
    """The universal NR reliability sequence, least reliable first.

    Returns a read-only permutation of 0..1023.
    """
    text = (
        resources.files("hsced")
        .joinpath("_data/nr_reliability_sequence.txt")
        .read_text(encoding="ascii")
    )
    tokens = text.split()
    digest = hashlib.sha256(" ".join(tokens).encode("ascii")).hexdigest()
    if digest != _SEQUENCE_SHA256:
        raise RuntimeError("reliability sequence asset is corrupted")
    seq = np.array([int(t) for t in tokens], dtype=np.int64)
    if seq.shape != (_SEQUENCE_LEN,) or not np.array_equal(
        np.sort(seq), np.arange(_SEQUENCE_LEN)
    ):
        raise RuntimeError("reliability sequence asset is corrupted")
    seq.setflags(write=False)
    return seq


def _check_block_length(n_block: int) -> int:
    if n_block < 2 or n_block & (n_block - 1):
        raise ValueError("block length must be a power of two, >= 2")
    return int(n_block).bit_length() - 1


@functools.lru_cache(maxsize=16)
def kron_power(n: int) -> BitMatrix:
    """G_N = F^(kron n) for F = [[1,0],[1,1]], natural order, N = 2^n."""
    if not 1 <= n <= 12:
        raise ValueError("kronecker power must be in 1..12")
    g = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    for _ in range(n - 1):
        size = g.shape[0]
        nxt = np.zeros((2 * size, 2 * size), dtype=np.uint8)
        nxt[:size, :size] = g
        nxt[size:, :size] = g
        nxt[size:, size:] = g
        g = nxt
    return BitMatrix.from_array(g)


def frozen_set(n_block: int, k: int) -> tuple[int, ...]:
    """Indices of the N-K least reliable synthetic channels, ascending."""
    _check_block_length(n_block)
    if n_block > _SEQUENCE_LEN:
        raise ValueError(f"block length above {_SEQUENCE_LEN} is not supported")
    if not 0 < k < n_block:
        raise ValueError("dimension must satisfy 0 < K < N")
    seq = reliability_sequence()
    restricted = seq[seq < n_block]
    return tuple(sorted(int(i) for i in restricted[: n_block - k]))


@dataclass(frozen=True)
class PolarCode:
    """An (N, K) polar code with its transform and frozen/information sets."""

    n: int
    block_length: int
    dimension: int
    frozen: tuple[int, ...]
    info: tuple[int, ...]
    gen: BitMatrix

    @property
    def rate(self) -> float:
        return self.dimension / self.block_length


def polar_code(n_block: int, k: int) -> PolarCode:
    n = _check_block_length(n_block)
    fro = frozen_set(n_block, k)
    info = tuple(sorted(set(range(n_block)) - set(fro)))
    return PolarCode(
        n=n,
        block_length=n_block,
        dimension=k,
        frozen=fro,
        info=info,
        gen=kron_power(n),
    )


def encode(code: PolarCode, u) -> BitVector:
    """Map K information bits to a codeword: scatter into v, then v G_N."""
    u = np.asarray(u)
    if u.shape != (code.dimension,):
        raise ValueError("message length must equal the code dimension")
    if not np.isin(u, (0, 1)).all():
        raise ValueError("entries must be 0 or 1")
    v = np.zeros(code.block_length, dtype=np.uint8)
    v[list(code.info)] = u
    sel = np.nonzero(v)[0]
    if sel.size == 0:
        return BitVector.zeros(code.block_length)
    words = np.bitwise_xor.reduce(code.gen.words[sel], axis=0)
    return BitVector(words, code.block_length)


@functools.lru_cache(maxsize=64)
def pcm(code: PolarCode) -> BitMatrix:
    """Parity-check matrix: rows are the frozen-indexed columns of G_N."""
    g = code.gen.to_array()
    return BitMatrix.from_array(np.ascontiguousarray(g[:, list(code.frozen)].T))


@functools.lru_cache(maxsize=64)
def base_pcm(code: PolarCode) -> BitMatrix:
    """Canonical (RREF) form of the parity-check matrix; same null space."""
    return rref(pcm(code))
