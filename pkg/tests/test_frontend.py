import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hma_xlmimo.frontend import (FeasibleSet, WeightVector, block_entries, expand_to_block, initial_weights,
                                 lorentzian_map, project_to_set, receive_combine, strip_combine, weights_from_csv,
                                 weights_to_csv)


def test_expand_example():
    q = np.array([1, 2, 3, 4], dtype=complex)
    np.testing.assert_array_equal(expand_to_block(q, 2, 2), [[1, 2, 0, 0], [0, 0, 3, 4]])
    assert not np.any(expand_to_block(np.zeros(6), 2, 3))
    with pytest.raises(ValueError):
        expand_to_block(q, 3, 2)


@settings(max_examples=50, deadline=None)
@given(m=st.integers(1, 5), l=st.integers(1, 6), seed=st.integers(0, 10_000))
def test_block_pattern_and_round_trip(m, l, seed):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(m * l) + 1j * rng.standard_normal(m * l) + 0.1
    block = expand_to_block(q, m, l)
    mask = np.zeros_like(block, dtype=bool)
    for row in range(m):
        mask[row, row * l:(row + 1) * l] = True
    assert not np.any(block[~mask])
    np.testing.assert_array_equal(block_entries(block, l), q)
    x = rng.standard_normal((m * l, 2))
    np.testing.assert_allclose(strip_combine(q, m, x), block @ x, atol=1e-12)


def test_lorentzian_map_examples():
    np.testing.assert_allclose(lorentzian_map(np.array([-1j, 1j, 1.0])), [0, 1j, (1 + 1j) / 2], atol=1e-15)
    assert abs(abs((1 + 1j) / 2 - 0.5j) - 0.5) < 1e-15
    with pytest.raises(ValueError):
        lorentzian_map(np.array([0.5]))


@settings(max_examples=50, deadline=None)
@given(phases=st.lists(st.floats(-10, 10), min_size=1, max_size=20))
def test_lorentzian_circle_membership(phases):
    q = lorentzian_map(np.exp(1j * np.array(phases)))
    np.testing.assert_allclose(np.abs(2 * q - 1j), 1.0, atol=1e-12)
    assert FeasibleSet.lp().contains(q)


def test_receive_combine_examples(rng):
    # W = I, Q selects one element per strip, y = e1 -> first block response
    q = np.array([1, 0, 0, 1], dtype=complex)
    block = expand_to_block(q, 2, 2)
    y = np.array([1, 0, 0, 0], dtype=complex)
    np.testing.assert_array_equal(receive_combine(np.eye(2), block, None, y), [1, 0])
    assert not np.any(receive_combine(np.eye(2), block, None, np.zeros(4)))
    w = rng.standard_normal((2, 2)) + 0j
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    np.testing.assert_allclose(receive_combine(w, block, None, 3 * y), 3 * receive_combine(w, block, None, y))
    with pytest.raises(ValueError):
        receive_combine(w, block, None, np.zeros(3))


def test_receive_combine_matches_triple_loop(rng):
    m, l, u = 3, 4, 2
    n = m * l
    for _ in range(5):
        q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = rng.standard_normal((m, u)) + 1j * rng.standard_normal((m, u))
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        block = expand_to_block(q, m, l)
        naive = np.zeros(u, dtype=complex)
        for a in range(u):
            for i in range(m):
                for j in range(n):
                    naive[a] += np.conj(w[i, a]) * block[i, j] * h[j] * y[j]
        np.testing.assert_allclose(receive_combine(w, block, h, y), naive, atol=1e-12)


def test_projection_examples():
    ao = FeasibleSet.ao()
    assert project_to_set(np.array([7 + 2j]), ao)[0] == 5
    assert project_to_set(np.array([0.05]), FeasibleSet.ba())[0] == 0.1
    assert project_to_set(np.array([0.04]), FeasibleSet.ba())[0] == 0
    on_circle = lorentzian_map(np.exp(1j * np.array([0.3, -2.0, 3.0])))
    np.testing.assert_allclose(project_to_set(on_circle, FeasibleSet.lp()), on_circle, atol=1e-12)
    # arg(0) = 0 maps the circle center to (j + 1)/2
    assert project_to_set(np.array([0.5j]), FeasibleSet.lp())[0] == pytest.approx((1 + 1j) / 2)
    z = np.array([1 + 2j])
    np.testing.assert_array_equal(project_to_set(z, FeasibleSet.uc()), z)


@pytest.mark.parametrize("name", ["UC", "AO", "BA", "LP"])
def test_projection_lands_in_set(name, rng):
    fs = FeasibleSet.parse(name)
    q = project_to_set(rng.standard_normal(30) * 3 + 1j * rng.standard_normal(30), fs)
    assert fs.contains(q)
    assert fs.contains(initial_weights(fs, 12, rng))
    WeightVector(q, fs)


def test_feasible_set_validation():
    with pytest.raises(ValueError):
        FeasibleSet("AO", lower=2.0, upper=1.0)
    with pytest.raises(ValueError):
        FeasibleSet("BA", level=0.0)
    with pytest.raises(ValueError):
        FeasibleSet("XX")
    with pytest.raises(KeyError):
        FeasibleSet.parse("nope")
    with pytest.raises(ValueError):
        WeightVector(np.array([0.3]), FeasibleSet.ba())
    assert FeasibleSet.parse("ao").tag == "AO(0.001,5)"
    assert not FeasibleSet.uc().contains(np.array([np.nan]))


def test_weights_csv_round_trip(rng):
    q = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    text = weights_to_csv(q, FeasibleSet.uc())
    assert text.splitlines()[0] == "index,re,im,set"
    back, tag = weights_from_csv(text)
    np.testing.assert_array_equal(back, q)
    assert tag == "UC"
