import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import brute_cov2d, brute_pvar
from roughswitch.gaussian import GaussianSpec, cov_grid, fbm_covariance
from roughswitch.lift import Level2RoughPath, eval_second, lift_piecewise_linear
from roughswitch.paths import SamplePath
from roughswitch.variation import (CovGrid, cov_2d_variation, distance_control, p_variation,
                                   path_p_variation, pvar_control, rho_pvar_metric,
                                   rough_distance_homog, second_p_variation)


def _path(values):
    values = np.asarray(values, dtype=float)
    return SamplePath(np.linspace(0.0, 1.0, values.shape[0]), values)


def _lift(rng, n, d, scale=1.0):
    return lift_piecewise_linear(_path(np.cumsum(scale * rng.standard_normal((n + 1, d)), 0)))


def test_monotone_path_coarsest_partition():
    res = path_p_variation(_path([0.0, 0.5, 1.2, 3.0]), 2.0)
    assert res.value == pytest.approx(3.0)
    assert res.optimal_partition == [0, 3]


def test_zigzag():
    res = path_p_variation(_path([0.0, 1.0, 0.0]), 2.0)
    assert res.value == pytest.approx(np.sqrt(2.0))
    assert res.optimal_partition == [0, 1, 2]


def test_random_ten_points_brute_force(rng):
    z = rng.standard_normal((10, 2))
    res = path_p_variation(z, 2.5)
    bf, arg = brute_pvar(lambda i, j: np.linalg.norm(z[j] - z[i]), 2.5, 0, 9)
    assert res.power == pytest.approx(bf, rel=1e-12)
    assert res.optimal_partition == arg


def test_generic_interval_function():
    w = lambda i, j: float(j - i)
    assert p_variation(w, 1.0, (0, 5)).value == pytest.approx(5.0)
    with pytest.raises(ValueError):
        p_variation(lambda i, j: 1.0, 2.0, (0, 3))          # nonzero diagonal
    with pytest.raises(ValueError):
        p_variation(lambda i, j: float(i - j), 2.0, (0, 3))  # negative values
    with pytest.raises(ValueError):
        p_variation(w, 0.5, (0, 3))


def test_subinterval_and_empty_interval(rng):
    z = np.cumsum(rng.standard_normal(30))
    res = path_p_variation(z, 2.0, (5, 20))
    bf, _ = brute_pvar(lambda i, j: abs(z[j] - z[i]), 2.0, 5, 20)
    assert res.power == pytest.approx(bf, rel=1e-12)
    assert res.optimal_partition[0] == 5 and res.optimal_partition[-1] == 20
    assert path_p_variation(z, 2.0, (4, 4)).value == 0.0


def test_second_level_matches_brute_force(rng):
    rp = _lift(rng, 8, 2)
    res = second_p_variation(rp, 1.25)
    bf, _ = brute_pvar(lambda i, j: np.linalg.norm(eval_second(rp, (i, j))), 1.25, 0, 8)
    assert res.power == pytest.approx(bf, rel=1e-12)


def test_homogeneous_distance_brute_force(rng):
    X, Y = _lift(rng, 7, 2), _lift(rng, 7, 2)
    p = 2.5
    f1 = lambda i, j: np.linalg.norm((X.base.values[j] - X.base.values[i])
                                     - (Y.base.values[j] - Y.base.values[i]))
    f2 = lambda i, j: np.linalg.norm(eval_second(X, (i, j)) - eval_second(Y, (i, j)))
    a, _ = brute_pvar(f1, p, 0, 7)
    b, _ = brute_pvar(f2, p / 2, 0, 7)
    assert rough_distance_homog(X, Y, p) == pytest.approx(a + b, rel=1e-12)
    assert rho_pvar_metric(X, Y, p) == pytest.approx(max(a ** (1 / p), b ** (2 / p)), rel=1e-12)


def test_distance_to_self_is_zero(rng):
    X = _lift(rng, 10, 2)
    assert rough_distance_homog(X, X, 2.5) == 0.0
    assert rho_pvar_metric(X, X, 2.5) == 0.0


def test_constant_second_level_offset():
    # per-step offset c over m steps: the interval function is k |c| on k steps,
    # so with p/2 >= 1 the whole interval is optimal and the seminorm is m |c|
    m, c = 6, np.array([[0.0, 0.3], [-0.3, 0.0]])
    X = lift_piecewise_linear(_path(np.zeros((m + 1, 2))))
    Y = Level2RoughPath(X.base, X.second_steps + c)
    cn = np.linalg.norm(c)
    for p in (2.0, 2.5, 3.0):
        assert rho_pvar_metric(X, Y, p) == pytest.approx(m * cn, rel=1e-12)
    # at p = 2 this coincides with (m |c|^{p/2})^{2/p}
    assert rho_pvar_metric(X, Y, 2.0) == pytest.approx((m * cn ** 1.0) ** 1.0)


def test_grid_mismatch(rng):
    with pytest.raises(ValueError):
        rho_pvar_metric(_lift(rng, 5, 1), _lift(rng, 6, 1), 2.5)


def test_pvar_control_single_segment():
    x = 1.7
    w = pvar_control(lift_piecewise_linear(_path([[0.0], [x]])), 2.0)
    assert w(0, 1) == pytest.approx(x ** 2 + 0.5 * x ** 2)
    assert w(0, 0) == 0.0


def test_pvar_control_superadditive(rng):
    rp = _lift(rng, 60, 2, scale=0.2)
    w = pvar_control(rp, 2.5)
    for _ in range(200):
        a, b, c = np.sort(rng.integers(0, 61, 3))
        assert w(a, b) + w(b, c) <= w(a, c) * (1 + 1e-12) + 1e-15


def test_pvar_control_scan_matches_pointwise(rng):
    rp = _lift(rng, 20, 2)
    w = pvar_control(rp, 2.5)
    scan = w.scan(3, 20)
    assert scan[0] == 0.0
    for j in (5, 11, 20):
        direct = (path_p_variation(rp, 2.5, (3, j)).power
                  + second_p_variation(rp, 1.25, (3, j)).power)
        assert scan[j - 3] == pytest.approx(direct, rel=1e-12)


def test_distance_control_total_is_homogeneous_distance(rng):
    X, Y = _lift(rng, 15, 2), _lift(rng, 15, 2)
    assert distance_control(X, Y, 2.5)(0, 15) == pytest.approx(rough_distance_homog(X, Y, 2.5))


def test_control_requires_rough_exponent(rng):
    with pytest.raises(ValueError):
        pvar_control(_lift(rng, 3, 1), 1.5)


def test_monotone_in_p(rng):
    z = np.cumsum(rng.standard_normal((40, 2)), 0)
    vals = [path_p_variation(z, p).value for p in (1.0, 1.5, 2.0, 2.5, 3.0, 4.0)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


# 2D variation ----------------------------------------------------------------------


def test_brownian_covariance_unit_square():
    R = cov_grid(GaussianSpec(), np.linspace(0, 1, 5))
    res = cov_2d_variation(R, 1.0)
    assert res.exact
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_fbm_small_grid_matches_enumeration():
    t = np.linspace(0, 1, 6)
    R = CovGrid(t, fbm_covariance(t, 0.25))
    res = cov_2d_variation(R, 2.0)
    assert res.value == pytest.approx(brute_cov2d(R.R, 2.0, (0, 5), (0, 5)), rel=1e-12)


def test_rectangle_and_degenerate(rng):
    R = cov_grid(GaussianSpec(kind="fbm", hurst=0.35), np.linspace(0, 1, 9))
    res = cov_2d_variation(R, 1.5, ((1, 4), (2, 8)))
    assert res.value == pytest.approx(brute_cov2d(R.R, 1.5, (1, 4), (2, 8)), rel=1e-12)
    assert cov_2d_variation(R, 1.5, ((3, 3), (0, 8))).value == 0.0


def test_heuristic_is_lower_bound(rng):
    for h in (0.3, 0.4):
        R = cov_grid(GaussianSpec(kind="fbm", hurst=h), np.linspace(0, 1, 8))
        exact = cov_2d_variation(R, 1 / (2 * h), exact=True).value
        approx = cov_2d_variation(R, 1 / (2 * h), exact=False)
        assert not approx.exact
        assert approx.value <= exact * (1 + 1e-12)


def test_cov2d_errors():
    R = cov_grid(GaussianSpec(), np.linspace(0, 1, 20))
    with pytest.raises(ValueError):
        cov_2d_variation(R, 0.5)
    with pytest.raises(ValueError):
        cov_2d_variation(R, 1.0, exact=True)
    with pytest.raises(ValueError):
        CovGrid([0.0, 1.0], [[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        CovGrid([0.0, 1.0], [[1.0, 2.0], [2.0, 1.0]])   # indefinite


@given(arrays(np.float64, st.tuples(st.integers(2, 11), st.integers(1, 2)),
              elements=st.floats(-10, 10)),
       st.sampled_from([1.0, 1.5, 2.0, 2.5, 3.0]))
def test_dp_equals_enumeration(z, p):
    res = path_p_variation(z, p)
    bf, _ = brute_pvar(lambda i, j: np.linalg.norm(z[j] - z[i]), p, 0, len(z) - 1)
    assert res.power == pytest.approx(bf, rel=1e-12, abs=1e-300)


@given(arrays(np.float64, st.tuples(st.integers(3, 30), st.just(1)), elements=st.floats(-10, 10)),
       st.data())
def test_interval_monotonicity(z, data):
    n = len(z) - 1
    s = data.draw(st.integers(0, n))
    t = data.draw(st.integers(s, n))
    u = data.draw(st.integers(s, t))
    v = data.draw(st.integers(u, t))
    inner = path_p_variation(z, 2.5, (u, v)).value
    outer = path_p_variation(z, 2.5, (s, t)).value
    assert inner <= outer * (1 + 1e-12) + 1e-300
