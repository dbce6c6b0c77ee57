import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsecausal.process import (BurnInWarning, InterventionSpec, InvalidParamsError, ModelParams,
                                  default_burn_in, interventional_distribution, interventional_slope,
                                  observational_slope, simulate, simulate_ensemble,
                                  simulate_projections, stationary_covariance)
from coarsecausal.stats import estimate_covariance, estimate_moments, gaussian_consistency_check


def series_covariance(alpha, beta, gamma, sx=1.0, sy=1.0, n_terms=200):
    """Stationary covariance by summing impulse responses of the recursion directly.

    The response of (X, Y) at lag k to a unit X-innovation (resp. Y-innovation)
    is propagated step by step; variances are sums of squared responses.
    """
    x_from_ex, y_from_ex, y_from_ey = [], [], []
    x, y = 0.0, 0.0
    xe, ye = 1.0, 0.0  # state one step after an X-innovation
    for _ in range(n_terms):
        x_from_ex.append(xe)
        y_from_ex.append(ye)
        xe, ye = alpha * xe, beta * xe + gamma * ye
    ye = 1.0
    for _ in range(n_terms):
        y_from_ey.append(ye)
        ye = gamma * ye
    a, b, c = map(np.array, (x_from_ex, y_from_ex, y_from_ey))
    return (sx ** 2 * np.sum(a * a), sx ** 2 * np.sum(a * b),
            sx ** 2 * np.sum(b * b) + sy ** 2 * np.sum(c * c))


params_strategy = st.builds(
    ModelParams,
    alpha=st.floats(-0.99, 0.99), beta=st.floats(-3, 3), gamma=st.floats(-0.99, 0.99),
    noise_std_x=st.floats(0.1, 3), noise_std_y=st.floats(0.1, 3))


class TestParams:
    @pytest.mark.parametrize("field,kwargs", [
        ("alpha", dict(alpha=1.0, beta=0, gamma=0)),
        ("alpha", dict(alpha=-1.5, beta=0, gamma=0)),
        ("gamma", dict(alpha=0, beta=0, gamma=1.0)),
        ("noise_std_x", dict(alpha=0, beta=0, gamma=0, noise_std_x=0.0)),
        ("noise_std_y", dict(alpha=0, beta=0, gamma=0, noise_std_y=-1.0)),
        ("beta", dict(alpha=0, beta=float("nan"), gamma=0)),
    ])
    def test_rejects_invalid(self, field, kwargs):
        with pytest.raises(InvalidParamsError) as exc:
            ModelParams(**kwargs)
        assert exc.value.field == field

    def test_json_round_trip(self):
        p = ModelParams(0.3, -1.2, 0.7, noise_std_x=2.0)
        assert ModelParams.from_json(p.to_json()) == p

    def test_from_dict_rejects_unknown_key(self):
        with pytest.raises(InvalidParamsError) as exc:
            ModelParams.from_dict({"alpha": 0, "beta": 0, "gamma": 0, "delta": 1})
        assert exc.value.field == "delta"


class TestStationaryCovariance:
    def test_iid_noise(self):
        c = stationary_covariance(ModelParams(0, 0, 0))
        assert (c.c_xx, c.c_xy, c.c_yy) == (1, 0, 1)

    def test_decoupled_chains(self):
        c = stationary_covariance(ModelParams(0.5, 0, 0.5))
        assert c.c_xx == pytest.approx(4 / 3, rel=1e-15)
        assert c.c_xy == 0
        assert c.c_yy == pytest.approx(4 / 3, rel=1e-15)

    def test_fixed_case_against_series_oracle(self):
        c = stationary_covariance(ModelParams(0.5, 1.0, 0.25))
        # frozen from series_covariance(0.5, 1, 0.25, n_terms=200)
        assert c.c_xx == pytest.approx(1.3333333333333333, rel=1e-12)
        assert c.c_xy == pytest.approx(0.7619047619047619, rel=1e-12)
        assert c.c_yy == pytest.approx(2.8952380952380956, rel=1e-12)
        oracle = series_covariance(0.5, 1.0, 0.25)
        assert (c.c_xx, c.c_xy, c.c_yy) == pytest.approx(oracle, rel=1e-12)

    @given(params_strategy)
    @settings(max_examples=200, deadline=None)
    def test_symmetric_psd(self, p):
        c = stationary_covariance(p)
        assert c.c_xx > 0 and c.c_yy > 0
        assert c.determinant >= -1e-9 * c.c_xx * c.c_yy
        m = c.matrix
        assert np.array_equal(m, m.T)

    @given(st.floats(-0.95, 0.95), st.floats(-2, 2), st.floats(-0.95, 0.95),
           st.floats(0.2, 2), st.floats(0.2, 2))
    @settings(max_examples=100, deadline=None)
    def test_matches_series_oracle(self, a, b, g, sx, sy):
        c = stationary_covariance(ModelParams(a, b, g, sx, sy))
        oracle = series_covariance(a, b, g, sx, sy, n_terms=2000)
        assert (c.c_xx, c.c_xy, c.c_yy) == pytest.approx(oracle, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("rho", [0.0, 0.3, -0.6, 0.9])
    def test_finite_when_self_coefficients_equal(self, rho):
        c = stationary_covariance(ModelParams(rho, 0.8, rho))
        assert math.isfinite(c.c_yy)
        assert c.c_yy == pytest.approx(series_covariance(rho, 0.8, rho, n_terms=3000)[2], rel=1e-10)

    def test_noise_scaling_is_quadratic(self):
        base = stationary_covariance(ModelParams(0.4, 0.7, -0.3))
        scaled = stationary_covariance(ModelParams(0.4, 0.7, -0.3, noise_std_x=2.0, noise_std_y=2.0))
        assert scaled.c_xx == pytest.approx(4 * base.c_xx)
        assert scaled.c_xy == pytest.approx(4 * base.c_xy)
        assert scaled.c_yy == pytest.approx(4 * base.c_yy)


class TestSlopes:
    def test_observational_slope(self):
        assert observational_slope(ModelParams(0.9, 0.5, 0.5)) == pytest.approx(0.45 / 0.55, rel=1e-15)

    @given(params_strategy)
    @settings(max_examples=200, deadline=None)
    def test_observational_slope_is_covariance_ratio(self, p):
        c = stationary_covariance(p)
        assert observational_slope(p) == pytest.approx(c.c_xy / c.c_xx, rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("p", [ModelParams(0, 2.0, 0.3), ModelParams(0.6, 0, 0.3)])
    def test_observational_slope_zero(self, p):
        assert observational_slope(p) == 0

    def test_beta_zero_everything_vanishes(self):
        p = ModelParams(0.7, 0.0, -0.4)
        assert stationary_covariance(p).c_xy == 0
        assert observational_slope(p) == interventional_slope(p) == 0

    @pytest.mark.parametrize("p,expected", [
        (ModelParams(0.9, 0.5, 0.5), 1.0),
        (ModelParams(0.2, 0.0, 0.5), 0.0),
        (ModelParams(0.0, 0.3, 0.7), 1.0),
    ])
    def test_interventional_slope(self, p, expected):
        assert interventional_slope(p) == pytest.approx(expected, rel=1e-12)

    def test_interventional_distribution(self):
        d = interventional_distribution(ModelParams(0.1, 0.5, 0.5), 2.0)
        assert d.mean == pytest.approx(2.0) and d.variance == pytest.approx(4 / 3)
        d0 = interventional_distribution(ModelParams(0.1, 0.5, 0.5, noise_std_y=2.0), 0.0)
        assert d0.mean == 0 and d0.variance == pytest.approx(4 * 4 / 3)
        d1 = interventional_distribution(ModelParams(0.1, 1.0, 0.0), 1.0)
        assert (d1.mean, d1.variance) == (1.0, 1.0)


class TestSimulate:
    def test_deterministic(self):
        p = ModelParams(0.8, 0.4, -0.3)
        a = simulate(p, 500, seed=11)
        b = simulate(p, 500, seed=11)
        assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
        c = simulate(p, 500, seed=12)
        assert not np.array_equal(a.xs, c.xs)

    def test_matches_explicit_recursion(self):
        p = ModelParams(0.7, -0.9, 0.4, noise_std_x=1.5, noise_std_y=0.5)
        traj = simulate(p, 50, burn_in=70, seed=3, t0=-10)
        noise = np.random.default_rng(3).standard_normal((119, 2))
        x = y = 0.0
        xs, ys = [x], [y]
        for ex, ey in noise:
            x, y = p.alpha * x + 1.5 * ex, p.beta * x + p.gamma * y + 0.5 * ey
            xs.append(x)
            ys.append(y)
        assert traj.t0 == -10 and traj.times[0] == -10 and traj.stop == 39
        np.testing.assert_allclose(traj.xs, xs[70:], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(traj.ys, ys[70:], rtol=1e-12, atol=1e-12)

    def test_memoryless_chain_is_white_noise(self):
        traj = simulate(ModelParams(0, 0, 0), 20_000, seed=5)
        for s in (traj.xs, traj.ys):
            m = estimate_moments(s)
            assert abs(m.mean) < 3 * m.mean_stderr
            assert abs(m.variance - 1) < 3 * m.variance_stderr
        c = estimate_covariance(traj.xs, traj.ys)
        assert abs(c.covariance) < 3 * c.stderr
        lag = estimate_covariance(traj.xs[1:], traj.xs[:-1])
        assert abs(lag.covariance) < 3 * lag.stderr

    def test_default_burn_in_criterion(self):
        for p in (ModelParams(0.9, 1, 0.5), ModelParams(0.1, 1, -0.99), ModelParams(0, 1, 0)):
            b = default_burn_in(p)
            assert b >= 2
            assert p.spectral_radius ** b < 1e-9
            if p.spectral_radius > 0 and b > 2:
                assert p.spectral_radius ** (b - 1) >= 1e-9

    def test_short_burn_in_warns(self):
        with pytest.warns(BurnInWarning):
            simulate(ModelParams(0.9, 0.5, 0.5), 10, burn_in=5)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            simulate(ModelParams(0.9, 0.5, 0.5), 10)

    def test_rejects_bad_lengths(self):
        with pytest.raises(ValueError):
            simulate(ModelParams(0, 0, 0), 0)
        with pytest.raises(ValueError):
            simulate(ModelParams(0, 0, 0), 5, burn_in=-1)

    def test_intervened_x_is_exactly_assigned(self):
        iv = InterventionSpec.sequence({3: 1.5, 4: -2.0}, default=0.25)
        traj = simulate(ModelParams(0.9, 0.5, 0.5), 10, seed=1, intervention=iv)
        expected = np.full(10, 0.25)
        expected[3], expected[4] = 1.5, -2.0
        assert np.array_equal(traj.xs, expected)

    def test_intervention_leaves_y_noise_aligned(self):
        # with beta = 0, X has no influence, so Y must not change under do(X)
        p = ModelParams(0.5, 0.0, 0.6)
        a = simulate(p, 100, seed=4)
        b = simulate(p, 100, seed=4, intervention=InterventionSpec.constant(3.0))
        assert np.array_equal(a.ys, b.ys)

    def test_x_under_intervention_ignores_its_noise(self):
        iv = InterventionSpec.constant(1.0)
        p = ModelParams(0.5, 0.5, 0.5)
        assert np.array_equal(simulate(p, 50, seed=1, intervention=iv).xs,
                              simulate(p, 50, seed=2, intervention=iv).xs)

    @pytest.mark.slow
    def test_constant_intervention_mean(self):
        p = ModelParams(0.3, 0.5, 0.5)
        traj = simulate(p, 100_000, seed=9, intervention=InterventionSpec.constant(2.0))
        # thin by the Y autocorrelation time for independent-ish samples
        k = 40
        m = estimate_moments(traj.ys, thin=k)
        assert m.n_effective == len(traj.ys[::k])
        assert abs(m.mean - 2.0) < 3 * m.mean_stderr

    def test_csv_export(self):
        traj = simulate(ModelParams(0.5, 0.5, 0.5), 3, seed=0, t0=7)
        lines = traj.to_csv().splitlines()
        assert lines[0] == "t,x,y"
        assert [l.split(",")[0] for l in lines[1:]] == ["7", "8", "9"]
        t, x, y = lines[1].split(",")
        assert float(x) == traj.xs[0] and float(y) == traj.ys[0]


class TestEnsemble:
    def test_recursion_and_determinism(self):
        p = ModelParams(0.6, 0.8, 0.2)
        a = simulate_ensemble(p, 100, n_steps=5, seed=2, t0=3)
        b = simulate_ensemble(p, 100, n_steps=5, seed=2, t0=3)
        assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
        assert a.xs.shape == (100, 5)
        assert list(a.times) == [3, 4, 5, 6, 7]

    def test_projections_agree_with_ensemble(self):
        p = ModelParams(0.6, 0.8, 0.2)
        ens = simulate_ensemble(p, 300, n_steps=4, seed=2, t0=10, burn_in=60)
        wx = np.array([1.0, -2.0, 0.5, 3.0])
        wy = np.array([0.5, 0.0, 1j, 2.0])
        xp, yp = simulate_projections(p, (10, wx), (10, wy), 300, burn_in=60, seed=2)
        np.testing.assert_allclose(xp, ens.xs @ wx, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(yp, ens.ys @ wy, rtol=1e-12, atol=1e-12)

    @pytest.mark.slow
    def test_interventional_distribution_by_simulation(self):
        p = ModelParams(0.9, 0.5, 0.5)
        iv = InterventionSpec.constant(2.0)
        ens = simulate_ensemble(p, 50_000, seed=8, intervention=iv)
        v = gaussian_consistency_check(ens.ys[:, 0], interventional_distribution(p, 2.0))
        assert v.passed, v.detail
        assert np.all(ens.xs == 2.0)

    @pytest.mark.slow
    def test_time_invariance_halves(self):
        p = ModelParams(0.7, 1.0, 0.4)
        traj = simulate(p, 200_000, seed=21)
        k = 20
        first = estimate_moments(traj.ys[:100_000], thin=k)
        second = estimate_moments(traj.ys[100_000:], thin=k)
        se = math.hypot(first.variance_stderr, second.variance_stderr)
        assert abs(first.variance - second.variance) < 3 * se
