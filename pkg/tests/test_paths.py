import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from roughswitch.paths import (SamplePath, increment, outer, resample_linear, same_grid,
                               sup_distance)


def _path(values, times=None):
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    return SamplePath(np.linspace(0, 1, n) if times is None else times, values)


def test_increment_constant_path_is_zero():
    p = _path(np.full((5, 2), 3.0))
    assert np.array_equal(increment(p, (1, 4)), [0.0, 0.0])


def test_increment_telescopes():
    assert increment(_path([0.0, 1.0, 3.0]), (0, 2)) == pytest.approx([3.0])


def test_increment_rejects_bad_interval():
    p = _path(np.zeros(4))
    with pytest.raises(IndexError):
        increment(p, (2, 1))
    with pytest.raises(IndexError):
        increment(p, (0, 4))


def test_outer_basis_and_zero():
    e1, e2 = np.eye(2)
    assert np.array_equal(outer(e1, e2), [[0, 1], [0, 0]])
    assert not outer(np.zeros(3), np.arange(3.0)).any()
    with pytest.raises(ValueError):
        outer(np.zeros(2), np.zeros(3))


def test_outer_trace_is_dot(rng):
    a, b = rng.standard_normal((2, 4))
    assert np.trace(outer(a, b)) == pytest.approx(a @ b, rel=1e-14)


def test_sup_distance_examples(rng):
    x = _path(rng.standard_normal((5, 3)))
    assert sup_distance(x, x) == 0.0
    c = np.array([1.0, -2.0, 2.0])
    assert sup_distance(x, _path(x.values + c)) == pytest.approx(3.0, rel=1e-14)
    y = _path(rng.standard_normal((5, 3)))
    expected = max(np.sqrt(((x.values[k] - y.values[k]) ** 2).sum()) for k in range(5))
    assert sup_distance(x, y) == pytest.approx(expected, rel=1e-15)


def test_sup_distance_grid_mismatch():
    with pytest.raises(ValueError):
        sup_distance(_path(np.zeros(3)), _path(np.zeros(4)))
    with pytest.raises(ValueError):
        sup_distance(_path(np.zeros(3)), SamplePath([0, 0.2, 1.0], np.zeros(3)))


@pytest.mark.parametrize("times", [[0.1, 1.0], [0.0, 0.0, 1.0], [0.0, 2.0, 1.0]])
def test_invalid_times(times):
    with pytest.raises(ValueError):
        SamplePath(times, np.zeros(len(times)))


def test_non_finite_values_rejected():
    with pytest.raises(ValueError):
        SamplePath([0.0, 1.0], [0.0, np.nan])


def test_values_are_read_only():
    p = _path(np.zeros((3, 1)))
    with pytest.raises(ValueError):
        p.values[0, 0] = 1.0


def test_csv_round_trip_is_bit_exact(rng, tmp_path):
    p = SamplePath(np.concatenate([[0.0], np.cumsum(rng.random(6))]), rng.standard_normal((7, 2)))
    text = p.to_csv(tmp_path / "p.csv")
    assert text.splitlines()[0] == "t,x1,x2"
    q = SamplePath.from_csv(tmp_path / "p.csv")
    assert np.array_equal(p.times, q.times) and np.array_equal(p.values, q.values)
    assert np.array_equal(SamplePath.from_csv(text).values, p.values)


def test_at_and_resample():
    p = _path([[0.0], [2.0], [0.0]], times=[0.0, 1.0, 2.0])
    assert p.at(0.5) == pytest.approx([1.0])
    r = resample_linear(p, [0.0, 0.5, 1.5, 2.0])
    assert r.values[:, 0] == pytest.approx([0.0, 1.0, 1.0, 0.0])
    assert not same_grid(p, r)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 3)), elements=finite),
       st.data())
def test_increment_additivity(values, data):
    p = _path(values)
    n = p.n_steps
    a = data.draw(st.integers(0, n))
    b = data.draw(st.integers(a, n))
    c = data.draw(st.integers(b, n))
    lhs = increment(p, (a, c))
    rhs = increment(p, (a, b)) + increment(p, (b, c))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(values).max()))


@given(arrays(np.float64, (3, 6, 2), elements=finite))
def test_sup_distance_is_a_metric(vals):
    x, y, z = (_path(v) for v in vals)
    assert sup_distance(x, y) == sup_distance(y, x)
    assert sup_distance(x, x) == 0.0
    assert sup_distance(x, z) <= sup_distance(x, y) + sup_distance(y, z) + 1e-12 * 1e3
