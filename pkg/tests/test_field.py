import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncaudit import field

elem = st.integers(0, 255)


def test_table_matches_shift_reduce_oracle():
    # full cross-check of the lookup table against the bitwise definition
    for a in range(256):
        for b in range(0, 256, 7):
            assert field.MUL[a, b] == field.mul_shift_reduce(a, b)


def test_known_products():
    # classic values for the 0x11B field
    assert field.mul(0x53, 0xCA) == 0x01
    assert field.mul(0x02, 0x80) == 0x1B
    assert field.mul(0x57, 0x83) == 0xC1


def test_generator_order():
    # 3 generates the multiplicative group
    x, seen = 1, set()
    for _ in range(255):
        x = field.mul(x, 3)
        seen.add(x)
    assert x == 1 and len(seen) == 255


@given(elem, elem, elem)
def test_ring_axioms(a, b, c):
    assert field.mul(a, b) == field.mul(b, a)
    assert field.mul(a, field.mul(b, c)) == field.mul(field.mul(a, b), c)
    assert field.mul(a, b ^ c) == field.mul(a, b) ^ field.mul(a, c)


@given(st.integers(1, 255))
def test_inverse(a):
    assert field.mul(a, field.inv(a)) == 1


def test_inv_zero_raises():
    with pytest.raises(ZeroDivisionError):
        field.inv(0)


@given(st.lists(elem, min_size=1, max_size=32), elem)
def test_vec_scale_matches_scalar(vals, alpha):
    v = field.vec(vals)
    assert field.vec_scale(alpha, v).tolist() == [field.mul(alpha, x) for x in vals]


def test_dot_matches_scalar_sum():
    r = np.random.default_rng(1)
    u = r.integers(0, 256, 50, dtype=np.uint8)
    v = r.integers(0, 256, 50, dtype=np.uint8)
    expect = 0
    for a, b in zip(u.tolist(), v.tolist()):
        expect ^= field.mul(a, b)
    assert field.dot(u, v) == expect


def test_counter_counts_each_helper():
    v = field.vec([1, 2, 3, 4])
    with field.counter:
        field.vec_scale(7, v)
        field.dot(v, v)
        field.scale_rows(np.array([1, 2], dtype=np.uint8), np.stack([v, v]))
        total = field.counter.value
    assert total == 4 + 4 + 8
    assert not field.counter.enabled


def test_gaussian_solve_unique():
    r = np.random.default_rng(2)
    for _ in range(20):
        a = r.integers(0, 256, (6, 6), dtype=np.uint8)
        if field.matrix_rank(a) < 6:
            continue
        x = r.integers(0, 256, 6, dtype=np.uint8)
        b = np.array([field.dot(row, x) for row in a], dtype=np.uint8)
        res = field.gaussian_solve(a, b)
        assert res.status == "unique"
        assert np.array_equal(res.solution, x)


def test_gaussian_solve_inconsistent():
    a = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    b = np.array([0, 1], dtype=np.uint8)
    res = field.gaussian_solve(a, b)
    assert res.status == "inconsistent"


def test_gaussian_solve_rank_deficient():
    a = np.array([[1, 2, 3], [2, 4, 6]], dtype=np.uint8)  # row2 = 2*row1
    res = field.gaussian_solve(a, np.zeros(2, dtype=np.uint8))
    assert res.status == "rank_deficient"
    assert res.rank == 1


def test_solve_any_particular_solution():
    a = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    b = np.array([5, 9], dtype=np.uint8)
    x = field.solve_any(a, b)
    assert x is not None
    assert all(field.dot(row, x) == bb for row, bb in zip(a, b))
