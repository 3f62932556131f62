"""Tanner-graph metric tests against a literal-definition brute force."""

import itertools

import numpy as np
import pytest

from hsced import tanner
from hsced.gf2 import BitMatrix


def brute_4cycles(bits):
    rows = bits.shape[0]
    total = 0
    for i in range(rows):
        for j in range(i + 1, rows):
            ov = int((bits[i] & bits[j]).sum())
            total += ov * (ov - 1) // 2
    return total


def brute_stopping_sets(bits, s):
    """Count subsets straight from the definition."""
    cols = bits.shape[1]
    count = 0
    for subset in itertools.combinations(range(cols), s):
        touched = bits[:, subset].sum(axis=1)
        if not ((touched == 1).any()):
            count += 1
    return count


def test_density_and_edges():
    m = BitMatrix.identity(4)
    assert tanner.density(m) == 0.25
    assert tanner.edge_count(m) == 4
    m = BitMatrix.from_array([[1, 1, 1], [0, 1, 0]])
    assert tanner.density(m) == pytest.approx(4 / 6)
    assert tanner.edge_count(m) == 4


def test_4cycles_hand_examples():
    assert tanner.count_4cycles(BitMatrix.identity(5)) == 0
    assert tanner.count_4cycles(BitMatrix.from_array([[1, 1], [1, 1]])) == 1
    m = BitMatrix.from_array([[1, 1, 1], [1, 1, 1]])
    # one row pair with overlap 3 -> C(3,2) = 3
    assert tanner.count_4cycles(m) == 3


def test_4cycles_matches_brute_force():
    rng = np.random.default_rng(6)
    for _ in range(30):
        rows, cols = int(rng.integers(2, 9)), int(rng.integers(2, 80))
        bits = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        assert tanner.count_4cycles(BitMatrix.from_array(bits)) == brute_4cycles(bits)


def test_stopping_sets_hand_examples():
    assert tanner.count_stopping_sets(BitMatrix.identity(4), 2) == 0
    assert tanner.count_stopping_sets(BitMatrix.from_array([[1, 1]]), 2) == 1
    # a zero column is a size-1 stopping set
    m = BitMatrix.from_array([[1, 0, 1], [0, 0, 1]])
    assert tanner.count_stopping_sets(m, 1) == 1


def test_stopping_sets_match_brute_force():
    rng = np.random.default_rng(8)
    for _ in range(40):
        rows, cols = int(rng.integers(1, 8)), int(rng.integers(2, 13))
        s = int(rng.integers(1, min(cols, 5) + 1))
        bits = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        got = tanner.count_stopping_sets(BitMatrix.from_array(bits), s)
        assert got == brute_stopping_sets(bits, s)


def test_stopping_sets_python_fallback_many_rows():
    # more than 64 rows forces the big-int path; compare with brute force
    rng = np.random.default_rng(10)
    for _ in range(5):
        bits = rng.integers(0, 2, size=(70, 10), dtype=np.uint8)
        m = BitMatrix.from_array(bits)
        for s in (2, 3):
            assert tanner.count_stopping_sets(m, s) == brute_stopping_sets(bits, s)


def test_fallback_agrees_with_compiled_path():
    rng = np.random.default_rng(12)
    for _ in range(10):
        rows, cols = int(rng.integers(2, 20)), int(rng.integers(4, 30))
        bits = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        m = BitMatrix.from_array(bits)
        col_masks = [
            int.from_bytes(
                np.packbits(bits[:, c], bitorder="little").tobytes(), "little"
            )
            for c in range(cols)
        ]
        for s in (2, 3, 4):
            assert tanner.count_stopping_sets(m, s) == tanner._count_ss_py(
                col_masks, s
            )


def test_permutation_invariance():
    rng = np.random.default_rng(14)
    bits = rng.integers(0, 2, size=(6, 20), dtype=np.uint8)
    m = BitMatrix.from_array(bits)
    base_counts = (
        tanner.count_4cycles(m),
        tanner.count_stopping_sets(m, 3),
        tanner.count_stopping_sets(m, 4),
    )
    for _ in range(5):
        p = BitMatrix.from_array(bits[rng.permutation(6)][:, rng.permutation(20)])
        assert (
            tanner.count_4cycles(p),
            tanner.count_stopping_sets(p, 3),
            tanner.count_stopping_sets(p, 4),
        ) == base_counts


def test_duplicate_row_invariants():
    rng = np.random.default_rng(16)
    bits = rng.integers(0, 2, size=(5, 16), dtype=np.uint8)
    m = BitMatrix.from_array(bits)
    dup = BitMatrix.from_array(np.vstack([bits, bits[2]]))
    # duplicated checks cannot change which subsets are stopping sets
    for s in (2, 3):
        assert tanner.count_stopping_sets(dup, s) == tanner.count_stopping_sets(m, s)
    assert tanner.count_4cycles(dup) >= tanner.count_4cycles(m)


def test_budget_guard():
    m = BitMatrix.from_array(np.ones((2, 30), dtype=np.uint8))
    with pytest.raises(tanner.EnumerationBudgetError):
        tanner.count_stopping_sets(m, 10, budget=1000)
    with pytest.raises(ValueError):
        tanner.count_stopping_sets(m, 0)
    assert tanner.count_stopping_sets(m, 31) == 0


def test_graph_stats_assembly():
    m = BitMatrix.from_array([[1, 1, 0], [0, 1, 1]])
    st = tanner.graph_stats(m, ss_sizes=(2, 3))
    assert (st.rows, st.cols, st.edges) == (2, 3, 4)
    assert st.density == pytest.approx(4 / 6)
    assert st.four_cycles == 0
    assert st.stopping_sets == {
        2: brute_stopping_sets(m.to_array(), 2),
        3: brute_stopping_sets(m.to_array(), 3),
    }
    wide = BitMatrix.from_array(np.ones((2, 40), dtype=np.uint8))
    st = tanner.graph_stats(wide, ss_sizes=(2, 12), budget=10**4, on_budget="omit")
    assert st.stopping_sets[2] == tanner.count_stopping_sets(wide, 2)
    assert st.stopping_sets[12] is None
    with pytest.raises(tanner.EnumerationBudgetError):
        tanner.graph_stats(wide, ss_sizes=(12,), budget=10**4)
