import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midec.rng import CounterStream


def test_same_key_same_draws():
    a = CounterStream(7, 1).step(3, 0, 50).standard_normal(4)
    b = CounterStream(7, 1).step(3, 0, 50).standard_normal(4)
    assert np.array_equal(a, b)


def test_tags_steps_and_calls_differ():
    base = CounterStream(7, 1).step(3, 0, 10)
    first = base.standard_normal(2)
    second = base.standard_normal(2)
    assert not np.array_equal(first, second)
    assert not np.array_equal(first, CounterStream(7, 0).step(3, 0, 10).standard_normal(2))
    assert not np.array_equal(first, CounterStream(7, 1).step(4, 0, 10).standard_normal(2))
    assert not np.array_equal(first, CounterStream(8, 1).step(3, 0, 10).standard_normal(2))


@settings(max_examples=40, deadline=None)
@given(width=st.integers(1, 9), n=st.integers(2, 60), cut=st.integers(1, 59), seed=st.integers(0, 2**63))
def test_property_layout_invariance(width, n, cut, seed):
    cut = min(cut, n - 1)
    s = CounterStream(seed, 1)
    whole = s.step(2, 0, n).standard_normal(width)
    parts = np.vstack([s.step(2, 0, cut).standard_normal(width), s.step(2, cut, n).standard_normal(width)])
    assert np.array_equal(whole, parts)


def test_uniform_range_and_moments():
    u = CounterStream(1).step(0, 0, 200_000).random()
    assert u.shape == (200_000,)
    assert u.min() > 0 and u.max() <= 1
    assert u.mean() == pytest.approx(0.5, abs=4 * (1 / 12) ** 0.5 / 200_000**0.5)


def test_normal_moments():
    z = CounterStream(2).step(0, 0, 100_000).standard_normal(3).ravel()
    n = z.size
    assert abs(z.mean()) < 4 / n**0.5
    assert abs(z.var() - 1) < 4 * 2**0.5 / n**0.5
    # independence across coordinates from the same draw
    zz = CounterStream(2).step(0, 0, 100_000).standard_normal(2)
    assert abs(np.corrcoef(zz.T)[0, 1]) < 4 / 100_000**0.5


def test_shapes():
    s = CounterStream(3).step(0, 5, 9)
    assert s.n == 4
    assert s.standard_normal().shape == (4,)
    assert s.standard_normal((2, 3)).shape == (4, 2, 3)
    assert s.random(5).shape == (4, 5)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        CounterStream(-1)
