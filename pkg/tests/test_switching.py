import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughswitch.fields import (ConstantField, LinearField, SinusoidField, VectorFieldFamily,
                                WithDrift, builtin_family)
from roughswitch.gaussian import GaussianSpec, RngSeed, interpolate, sample
from roughswitch.lift import (ControlledPath, augment_time, lift_piecewise_linear, restrict,
                              to_ito)
from roughswitch.paths import SamplePath, resample_linear
from roughswitch.switching import (JumpTrajectory, SolverBlowUp, check_generator,
                                   check_jump_tail, davie_batch, jump_envelope, lipschitz_bound,
                                   simulate_ctmc, solve_rde, solve_switching_rde,
                                   switching_rough_integral, symmetric_generator)


def time_path(n, T=1.0):
    t = np.linspace(0.0, T, n + 1)
    return lift_piecewise_linear(SamplePath(t, t[:, None]))


def bm_lift(n, seed, d=1):
    return lift_piecewise_linear(sample(GaussianSpec(d=d), n, seed))


# jump trajectories -------------------------------------------------------------------


def test_trajectory_validation():
    with pytest.raises(ValueError):
        JumpTrajectory([0.5], (0,), 1.0)
    with pytest.raises(ValueError):
        JumpTrajectory([0.5, 0.4], (0, 1, 0), 1.0)
    with pytest.raises(ValueError):
        JumpTrajectory([1.0], (0, 1), 1.0)
    with pytest.raises(ValueError):
        JumpTrajectory([0.5], (1, 1), 1.0)
    J = JumpTrajectory.deterministic([0.25, 0.5], (0, 1, 0), 1.0)
    assert J.n_jumps == 2
    assert J.state_at([0.0, 0.25, 0.3, 0.5, 0.99]).tolist() == [0, 1, 1, 0, 0]
    assert JumpTrajectory.from_dict(J.to_dict()).to_dict() == J.to_dict()


def test_generator_validation():
    with pytest.raises(ValueError):
        check_generator([[-1.0, 1.0], [1.0, -2.0]])
    with pytest.raises(ValueError):
        check_generator([[1.0, -1.0], [1.0, -1.0]])
    with pytest.raises(ValueError):
        check_generator([[0.0, 0.0]])
    with pytest.raises(ValueError):
        simulate_ctmc(np.zeros((2, 2)), 2, 1.0, 0)


def test_zero_generator_never_jumps():
    J = simulate_ctmc(np.zeros((3, 3)), 1, 5.0, 0)
    assert J.n_jumps == 0 and J.states == (1,)


def test_ctmc_mean_jump_count():
    Q = symmetric_generator(2.0)
    counts = np.array([simulate_ctmc(Q, 0, 1.0, RngSeed(3, i)).n_jumps for i in range(20_000)])
    assert counts.mean() == pytest.approx(2.0, rel=0.02)
    assert counts.var() == pytest.approx(2.0, rel=0.05)


def test_ctmc_three_states_visits_all():
    Q = symmetric_generator(3.0, 3)
    seen = set()
    for i in range(50):
        J = simulate_ctmc(Q, 0, 1.0, i)
        seen.update(J.states)
        assert all(a != b for a, b in zip(J.states, J.states[1:]))
    assert seen == {0, 1, 2}


def test_jump_envelope_values():
    assert jump_envelope(1, 3.0) == pytest.approx(np.exp(3.0))
    assert jump_envelope(10, 3.0) == pytest.approx(np.exp(-10 * (np.log(10) - 3)))


def test_jump_tail_poisson_holds():
    counts = np.random.default_rng(0).poisson(2.0, 100_000)
    rep = check_jump_tail(counts, 3.0)
    assert rep.holds
    assert rep.mean == pytest.approx(counts.mean())
    assert rep.checked[0] == 1


def test_jump_tail_heavy_tail_violates():
    u = np.random.default_rng(0).random(100_000)
    counts = np.floor(5 / np.sqrt(u)).astype(np.int64)
    rep = check_jump_tail(counts, 3.0)
    assert not rep.holds
    assert rep.largest_violation is not None and rep.largest_violation > 10


def test_jump_tail_deterministic_and_errors():
    J = JumpTrajectory.deterministic([0.3, 0.6], (0, 1, 0), 1.0)
    rep = check_jump_tail([J] * 10_000, 3.0)
    assert rep.holds and rep.mean == pytest.approx(2.0)
    with pytest.raises(ValueError):
        check_jump_tail([1, 2, 3], 3.0)


# solver ------------------------------------------------------------------------------


def test_additive_field_exact(rng):
    rp = bm_lift(100, 1)
    Y = solve_rde(ConstantField([[1.0]]), rp, [0.7])
    assert np.allclose(Y.values[:, 0], 0.7 + rp.base.values[:, 0], atol=1e-14)


def test_exponential_smooth_driver():
    Y = solve_rde(LinearField([[[1.0]]]), time_path(1000), [1.0])
    assert abs(Y.values[-1, 0] - np.e) < 1e-6


def test_second_order_on_smooth_driver():
    ns = [16, 32, 64, 128, 256]
    errs = []
    for n in ns:
        Y = solve_rde(LinearField([[[1.0]]]), time_path(n), [1.0])
        errs.append(np.abs(Y.values[:, 0] - np.exp(Y.times)).max())
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert slope >= 1.9


def test_geometric_brownian_stratonovich():
    fine = sample(GaussianSpec(), 4096, 17)
    errs = []
    for n in (64, 512, 4096):
        path = interpolate(fine, n)
        Y = solve_rde(LinearField([[[0.8]]]), lift_piecewise_linear(path), [2.0])
        errs.append(np.abs(Y.values[:, 0] - 2.0 * np.exp(0.8 * path.values[:, 0])).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05


def test_ito_flavour_matches_ito_exponential():
    path = sample(GaussianSpec(), 4096, 23)
    strat = lift_piecewise_linear(path)
    ito = to_ito(strat)
    V = LinearField([[[1.0]]])
    Ys = solve_rde(V, strat, [1.0]).values[:, 0]
    Yi = solve_rde(V, ito, [1.0]).values[:, 0]
    B, t = path.values[:, 0], path.times
    assert np.abs(Ys - np.exp(B)).max() < 0.05
    assert np.abs(Yi - np.exp(B - t / 2)).max() < 0.05
    assert np.abs(Ys - Yi).max() > 0.1


def test_space_time_drift():
    # dY = Y dt + 0 dX on the augmented driver: exponential growth
    path = sample(GaussianSpec(), 2000, 0)
    rp = augment_time(lift_piecewise_linear(path))
    V = WithDrift(LinearField([[[1.0]]]), ConstantField([[0.0]]))
    Y = solve_rde(V, rp, [1.0])
    assert abs(Y.values[-1, 0] - np.e) < 1e-5


def test_solver_dimension_errors():
    with pytest.raises(ValueError):
        solve_rde(LinearField([[[1.0]]]), bm_lift(10, 0, d=2), [1.0])
    with pytest.raises(ValueError):
        solve_rde(LinearField([[[1.0]]]), bm_lift(10, 0), [1.0, 2.0])


def test_blow_up_reports_last_valid_index():
    class Square(ConstantField):
        def V(self, y):
            return (y ** 2)[..., None]

        def DV(self, y):
            return (2 * y)[..., None, None]

    t = np.linspace(0, 2, 201)
    rp = lift_piecewise_linear(SamplePath(t, 1e3 * t[:, None]))
    with pytest.raises(SolverBlowUp) as exc:
        solve_rde(Square([[0.0]]), rp, [1.0])
    assert 0 <= exc.value.last_valid < 200


def test_batch_matches_single_solves():
    rps = [bm_lift(64, s, d=2) for s in range(3)]
    fam = builtin_family("rotation2")
    dx = np.stack([rp.base.steps() for rp in rps], axis=1)
    dxx = np.stack([rp.second_steps for rp in rps], axis=1)
    Y, last = davie_batch({0: fam[0]}, dx, [1.0, 0.5], dxx=dxx)
    assert (last == 64).all()
    for b, rp in enumerate(rps):
        assert np.array_equal(Y[:, b], solve_rde(fam[0], rp, [1.0, 0.5]).values)


# switching ---------------------------------------------------------------------------


def test_single_regime_equals_plain_solver():
    rp = bm_lift(128, 4)
    fam = builtin_family("gbm2")
    sol = solve_switching_rde(fam, rp, JumpTrajectory.constant(1, 1.0), [1.0])
    assert np.array_equal(sol.path.values, solve_rde(fam[1], rp, [1.0]).values)
    assert (sol.segment_index == 0).all()


def test_additive_two_regime_closed_form():
    T, y0 = 2.0, 0.3
    J = JumpTrajectory.deterministic([T / 2], (0, 1), T)
    sol = solve_switching_rde(builtin_family("additive2"), time_path(7, T), J, [y0])
    assert sol.path.values[-1, 0] == pytest.approx(y0 + T / 2 + T, abs=1e-14)
    assert T / 2 in sol.path.times


def test_two_regime_gbm_closed_form():
    fine = sample(GaussianSpec(), 4096, 8)
    tau = 0.37
    J = JumpTrajectory.deterministic([tau], (0, 1), 1.0)
    errs = []
    for n in (128, 1024, 4096):
        sol = solve_switching_rde(builtin_family("gbm2"), lift_piecewise_linear(interpolate(fine, n)),
                                  J, [1.0])
        t, B = sol.path.times, sol.rough_path.base.values[:, 0]
        Btau = np.interp(tau, t, B)
        exact = np.where(t < tau, np.exp(0.5 * B), np.exp(0.5 * Btau + 1.5 * (B - Btau)))
        errs.append(np.abs(sol.path.values[:, 0] - exact).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05


def test_continuity_and_segments():
    rp = bm_lift(100, 5)
    J = JumpTrajectory.deterministic([0.123, 0.5, 0.777], (0, 1, 0, 1), 1.0)
    sol = solve_switching_rde(builtin_family("smooth2"), rp, J, [0.0])
    t = sol.path.times
    for k, tau in enumerate(J.jump_times):
        i = int(np.flatnonzero(t == tau)[0])
        assert sol.segment_index[i] == k + 1 and sol.segment_index[i - 1] == k
    assert np.isfinite(sol.path.values).all()
    # the refined grid keeps the driver values at the original points
    assert np.array_equal(resample_linear(sol.rough_path.base, rp.times).values, rp.base.values)


def test_regime_locality_bit_identical():
    rp = bm_lift(200, 6)
    J = JumpTrajectory.deterministic([0.4], (0, 2), 1.0)
    base = {0: SinusoidField([[1.0]], [[[1.0]]]), 2: LinearField([[[0.3]]])}
    a = solve_switching_rde(VectorFieldFamily({**base, 1: ConstantField([[5.0]])}), rp, J, [0.1])
    b = solve_switching_rde(VectorFieldFamily({**base, 1: LinearField([[[-7.0]]])}), rp, J, [0.1])
    assert np.array_equal(a.path.values, b.path.values)


def test_missing_regime_and_horizon_mismatch():
    rp = bm_lift(10, 0)
    with pytest.raises(KeyError):
        solve_switching_rde(builtin_family("gbm"), rp, JumpTrajectory([0.5], (0, 1), 1.0), [1.0])
    with pytest.raises(ValueError):
        solve_switching_rde(builtin_family("gbm"), rp, JumpTrajectory.constant(0, 2.0), [1.0])


# rough integral ----------------------------------------------------------------------


def _self_integrand(rp):
    return ControlledPath(rp.base, np.ones((rp.n_steps + 1, 1)), rp)


def _const_integrand(rp, c):
    c = np.atleast_2d(c)
    n1 = rp.n_steps + 1
    val = SamplePath(rp.times, np.broadcast_to(c.reshape(-1), (n1, c.size)))
    return ControlledPath(val, np.zeros((n1, c.size, rp.d)), rp)


def test_integral_of_brownian_ito_and_stratonovich():
    n = 4096
    path = sample(GaussianSpec(), n, 31)
    strat = lift_piecewise_linear(path)
    ito = to_ito(strat)
    J = JumpTrajectory.constant(0, 1.0)
    BT = path.values[-1, 0]
    gi = switching_rough_integral({0: _self_integrand(ito)}, ito, J).values[-1, 0]
    gs = switching_rough_integral({0: _self_integrand(strat)}, strat, J).values[-1, 0]
    tol = 5 * n ** -0.5
    assert abs(gi - (BT ** 2 / 2 - 0.5)) < tol
    assert gs == pytest.approx(BT ** 2 / 2, abs=1e-12)


def test_constant_integrand_gives_increment():
    rp = bm_lift(50, 2, d=2)
    c = np.array([[1.0, -2.0], [0.5, 3.0], [0.0, 1.0]])
    J = JumpTrajectory.deterministic([0.2, 0.9], (0, 1, 0), 1.0)
    out = switching_rough_integral({0: _const_integrand(rp, c), 1: _const_integrand(rp, c)}, rp, J)
    X = out.times
    expect = (resample_linear(rp.base, X).values - rp.base.values[0]) @ c.T
    assert np.allclose(out.values, expect, atol=1e-12)


def test_two_jump_telescoped_closed_form():
    rp = bm_lift(64, 9)
    t1, t2 = 0.3, 0.71
    J = JumpTrajectory.deterministic([t1, t2], (0, 1, 0), 1.0)
    a, b = 2.0, -0.5
    out = switching_rough_integral({0: _const_integrand(rp, a), 1: _const_integrand(rp, b)}, rp, J)
    X = lambda s: np.interp(s, rp.times, rp.base.values[:, 0])
    expect = a * (X(t1) - X(0)) + b * (X(t2) - X(t1)) + a * (X(1.0) - X(t2))
    assert out.values[-1, 0] == pytest.approx(expect, abs=1e-12)


def test_integral_grid_mismatch():
    rp, other = bm_lift(10, 0), bm_lift(12, 0)
    with pytest.raises(ValueError):
        switching_rough_integral({0: _self_integrand(other)}, rp, JumpTrajectory.constant(0, 1.0))


# Lipschitz bound ---------------------------------------------------------------------


def test_lipschitz_identical_drivers():
    rp = bm_lift(64, 3)
    J = JumpTrajectory.deterministic([0.5], (0, 1), 1.0)
    rep = lipschitz_bound(builtin_family("smooth2"), rp, rp, J, 2.5, 1.0, 1.5)
    assert rep.lhs == 0.0 and rep.rho == 0.0 and rep.holds
    with pytest.raises(ValueError):
        lipschitz_bound(builtin_family("smooth2"), rp, rp, J, 2.5, 1.0, 1.0)


def test_lipschitz_constant_fields_perturbed_time():
    t = np.linspace(0, 1, 101)
    X = lift_piecewise_linear(SamplePath(t, t[:, None]))
    Xl = lift_piecewise_linear(SamplePath(t, (t + 0.01 * np.sin(7 * t))[:, None]))
    J = JumpTrajectory.deterministic([0.5], (0, 1), 1.0)
    rep = lipschitz_bound(builtin_family("additive2"), X, Xl, J, 2.5, 1.0, 2.0)
    assert rep.holds and rep.lhs > 0
    assert rep.rhs == pytest.approx(rep.rhs_at(2.0))
    assert all(v >= 0 for v in (rep.lhs, rep.rho, rep.n_x, rep.n_xl, rep.rhs))


def test_lipschitz_fitted_constant_stable_across_lambda():
    fine = sample(GaussianSpec(), 512, 12)
    X = lift_piecewise_linear(fine)
    J = JumpTrajectory.deterministic([0.4], (0, 1), 1.0)
    fitted = []
    for lam in (8, 16, 32):
        coarse = interpolate(fine, lam)
        Xl = lift_piecewise_linear(resample_linear(coarse, fine.times))
        rep = lipschitz_bound(builtin_family("gbm2"), X, Xl, J, 2.5, 1.0, 3.0, y0=[1.0])
        assert rep.fitted_c is not None
        assert rep.lhs <= rep.rhs_at(rep.fitted_c)
        fitted.append(rep.fitted_c)
    med = np.median(fitted)
    assert all(abs(c - med) <= 0.5 * med for c in fitted)


@given(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=4, unique=True), st.integers(0, 10**6))
@settings(max_examples=30)
def test_switching_properties(times, seed):
    times = sorted(times)
    if any(b - a < 1e-6 for a, b in zip(times, times[1:])):
        return
    states = [k % 2 for k in range(len(times) + 1)]
    J = JumpTrajectory.deterministic(times, states, 1.0)
    rp = bm_lift(32, seed)
    sol = solve_switching_rde(builtin_family("smooth2"), rp, J, [0.2])
    assert all(tau in sol.path.times for tau in times)
    assert np.all(np.diff(sol.segment_index) >= 0)
    assert sol.segment_index[-1] == len(times)
    # a constant-state family reproduces the single-regime solve on the refined grid
    same = VectorFieldFamily({0: builtin_family("smooth2")[0], 1: builtin_family("smooth2")[0]})
    a = solve_switching_rde(same, rp, J, [0.2]).path
    b = solve_rde(same[0], sol.rough_path, [0.2])
    assert np.array_equal(a.values, b.values)


def test_geometric_brownian_median_error_first_order():
    # per path the error ratios across halvings fluctuate around 2; the median over
    # paths decreases at every refinement with log-log slope close to 1
    meshes = [2 ** k for k in range(6, 13)]
    errs = np.empty((20, len(meshes)))
    for s in range(20):
        fine = sample(GaussianSpec(), 2 ** 12, RngSeed(404, s))
        for j, n in enumerate(meshes):
            path = interpolate(fine, n)
            Y = solve_rde(LinearField([[[1.0]]]), lift_piecewise_linear(path), [1.0])
            errs[s, j] = np.abs(Y.values[:, 0] - np.exp(path.values[:, 0])).max()
    med = np.median(errs, axis=0)
    assert np.all(np.diff(med) < 0)
    slope = -np.polyfit(np.log(meshes), np.log(med), 1)[0]
    assert 0.85 <= slope <= 1.2
