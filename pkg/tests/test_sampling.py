import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nystrom_ts.errors import InvalidArgumentError
from nystrom_ts.sampling import SubsampleSpec, resolve


def test_sequential_and_strided():
    np.testing.assert_array_equal(resolve(SubsampleSpec("sequential", m=3, start=3), 10), [3, 4, 5])
    np.testing.assert_array_equal(resolve(SubsampleSpec("strided", m=4, gap=5), 100), [0, 6, 12, 18])


def test_positional():
    np.testing.assert_array_equal(resolve(SubsampleSpec("last", m=20), 2000), np.arange(1980, 2000))
    np.testing.assert_array_equal(resolve(SubsampleSpec("first", m=20), 2000), np.arange(20))
    np.testing.assert_array_equal(resolve(SubsampleSpec("middle", m=4), 11), [3, 4, 5, 6])


def test_ratio_size():
    assert SubsampleSpec(ratio=0.001).size_for(2000) == 2
    assert SubsampleSpec(ratio=0.0001).size_for(2000) == 1
    assert SubsampleSpec(ratio=0.05, m=7).size_for(2000) == 7


def test_labels():
    assert SubsampleSpec("strided", m=5, gap=20).label == "Intv.20"
    assert SubsampleSpec("middle", m=5).label == "Middle"


def test_random_start_uniform():
    g = np.random.default_rng(99)
    spec = SubsampleSpec("random", m=10)
    starts = np.array([resolve(spec, 100, g)[0] for _ in range(100_000)])
    counts = np.bincount(starts, minlength=91)
    assert counts.size == 91
    assert stats.chisquare(counts).pvalue > 1e-3


def test_random_needs_seed():
    with pytest.raises(InvalidArgumentError):
        resolve(SubsampleSpec("random", m=3), 10)
    a = resolve(SubsampleSpec("random", m=3, seed=4), 50)
    np.testing.assert_array_equal(a, resolve(SubsampleSpec("random", m=3, seed=4), 50))


def test_infeasible_reports_max_m():
    with pytest.raises(InvalidArgumentError, match="maximal feasible m is 10"):
        resolve(SubsampleSpec("first", m=11), 10)
    with pytest.raises(InvalidArgumentError, match="maximal feasible m is 4"):
        resolve(SubsampleSpec("strided", m=5, gap=2), 10)


def test_bad_specs():
    for kw in ({"mode": "bogus", "m": 1}, {"mode": "first"}, {"m": 0}, {"ratio": 1.5},
               {"m": 2, "gap": -1}):
        with pytest.raises(InvalidArgumentError):
            SubsampleSpec(**kw)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 500), st.data())
def test_sequential_contiguity(n, data):
    m = data.draw(st.integers(1, n))
    mode = data.draw(st.sampled_from(["random", "first", "middle", "last"]))
    idx = resolve(SubsampleSpec(mode, m=m), n, np.random.default_rng(n))
    assert idx.size == m
    assert np.all(np.diff(idx) == 1)
    assert 0 <= idx[0] and idx[-1] <= n - 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 300), st.integers(0, 10), st.integers(0, 20), st.integers(1, 30))
def test_strided_property(n, gap, start, m):
    spec = SubsampleSpec("strided", m=m, gap=gap, start=start)
    if start + (m - 1) * (gap + 1) > n - 1:
        with pytest.raises(InvalidArgumentError):
            resolve(spec, n)
    else:
        idx = resolve(spec, n)
        assert np.all(np.diff(idx) == gap + 1) and idx[0] == start
