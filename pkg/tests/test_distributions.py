"""Random streams, beta/Dirichlet sampling, and the log-odds quadrature."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from reinforce_sim.distributions import (
    BetaParams,
    DirichletParams,
    QuadratureError,
    digamma,
    integrate_log_odds,
    make_stream,
    sample_beta,
    sample_dirichlet,
)


class TestRngStream:
    def test_same_key_same_draws(self):
        a = make_stream(42, 0)
        b = make_stream(42, 0)
        assert [a.uniform() for _ in range(100)] == [b.uniform() for _ in range(100)]

    def test_distinct_streams_differ(self):
        a = make_stream(42, 0)
        b = make_stream(42, 1)
        assert [a.uniform() for _ in range(8)] != [b.uniform() for _ in range(8)]

    def test_distinct_seeds_differ(self):
        assert make_stream(1, 0).uniform() != make_stream(2, 0).uniform()

    def test_buffered_and_block_draws_in_range(self):
        rng = make_stream(7, 3)
        xs = [rng.uniform() for _ in range(10_000)]
        assert all(0.0 <= x < 1.0 for x in xs)
        block = rng.uniforms(1000)
        assert block.shape == (1000,)
        assert ((block >= 0) & (block < 1)).all()

    def test_zero_seed_is_valid(self):
        assert 0.0 <= make_stream(0, 0).uniform() < 1.0


class TestSampleBeta:
    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.5, 0.5), (2.0, 2.0)])
    def test_symmetric_mean_is_half(self, alpha, beta):
        rng = make_stream(11, 0)
        xs = sample_beta(rng, BetaParams(alpha, beta), size=100_000)
        assert abs(xs.mean() - 0.5) < 0.01

    def test_mean_matches_density_integral(self):
        # oracle: integrate x * beta density directly instead of using
        # the closed-form alpha / (alpha + beta)
        alpha, beta = 1.5, 0.5
        dens_norm = np.exp(-special.betaln(alpha, beta))
        target, err = integrate.quad(
            lambda x: x * dens_norm * x ** (alpha - 1) * (1 - x) ** (beta - 1), 0, 1
        )
        assert err < 1e-8
        rng = make_stream(12, 0)
        xs = sample_beta(rng, BetaParams(alpha, beta), size=100_000)
        assert abs(xs.mean() - target) < 0.01

    def test_small_shapes_stay_in_unit_interval(self):
        rng = make_stream(13, 0)
        xs = sample_beta(rng, BetaParams(0.05, 0.07), size=10_000)
        assert ((xs >= 0) & (xs <= 1)).all()

    def test_point_mass_marker_returns_exact_zero(self):
        rng = make_stream(14, 0)
        p = BetaParams.degenerate_zero()
        assert sample_beta(rng, p) == 0.0
        assert (sample_beta(rng, p, size=50) == 0.0).all()

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (float("nan"), 1.0), (float("inf"), 1.0)])
    def test_invalid_shapes_rejected(self, alpha, beta):
        with pytest.raises(ValueError):
            BetaParams(alpha, beta)

    def test_mean_method(self):
        assert BetaParams(2.0, 6.0).mean() == 0.25
        assert BetaParams.degenerate_zero().mean() == 0.0


class TestSampleDirichlet:
    def test_components_sum_to_one_exactly(self):
        rng = make_stream(21, 0)
        p = DirichletParams(0.5, 0.5, 1.5)
        for _ in range(2000):
            x, y, z = sample_dirichlet(rng, p)
            assert x >= 0 and y >= 0 and z >= 0
            assert x + y + z == 1.0

    def test_symmetric_mean(self):
        rng = make_stream(22, 0)
        p = DirichletParams(0.5, 0.5, 0.5)
        xs = np.array([sample_dirichlet(rng, p) for _ in range(50_000)])
        assert np.abs(xs.mean(axis=0) - 1.0 / 3.0).max() < 0.01

    def test_mean_matches_weights(self):
        rng = make_stream(23, 0)
        p = DirichletParams(0.5, 0.5, 1.0)
        xs = np.array([sample_dirichlet(rng, p) for _ in range(50_000)])
        assert np.abs(xs.mean(axis=0) - [0.25, 0.25, 0.5]).max() < 0.01

    def test_marginals_are_beta(self):
        from scipy import stats

        rng = make_stream(24, 0)
        p = DirichletParams(0.5, 0.5, 1.5)
        xs = np.array([sample_dirichlet(rng, p) for _ in range(10_000)])
        for i, alpha_i in enumerate((0.5, 0.5, 1.5)):
            ks = stats.kstest(xs[:, i], stats.beta(alpha_i, 2.5 - alpha_i).cdf).statistic
            assert ks < 0.02

    def test_degenerate_markers_rejected(self):
        rng = make_stream(25, 0)
        with pytest.raises(ValueError):
            sample_dirichlet(rng, DirichletParams(None, 0.5, 1.0))

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            DirichletParams(0.5, 0.0, 0.5)
        with pytest.raises(ValueError):
            DirichletParams(-1.0, 0.5, 0.5)

    def test_degenerate_flag(self):
        assert DirichletParams(None, 0.5, 1.0).degenerate
        assert not DirichletParams(1.0, 0.5, 1.0).degenerate


class TestDigamma:
    def test_recurrence_relation(self):
        # psi(x+1) - psi(x) = 1/x
        for x in (0.3, 1.0, 2.5, 10.0):
            assert digamma(x + 1) - digamma(x) == pytest.approx(1.0 / x, abs=1e-12)

    def test_expected_log_uniform(self):
        # E[log U] = psi(1) - psi(2) = -1; oracle by direct quadrature
        target, err = integrate.quad(np.log, 0, 1)
        assert err < 1e-10
        assert digamma(1.0) - digamma(2.0) == pytest.approx(target, abs=1e-10)

    def test_against_mpmath(self):
        import mpmath

        for x in (1e-3, 0.1, 1.0, 4.5, 100.0, 1e6):
            assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-10)

    @pytest.mark.parametrize("x", [0.0, -1.0, float("nan")])
    def test_rejects_nonpositive(self, x):
        with pytest.raises(ValueError):
            digamma(x)


class TestIntegrateLogOdds:
    GRID = [
        (0.5, 0.5), (1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (0.5, 1.5),
        (1.5, 0.5), (3.0, 0.1), (0.1, 3.0), (5.0, 5.0), (2.5, 0.5),
        (0.05, 0.07), (4.0, 0.3), (0.3, 4.0), (10.0, 1.0), (1.0, 10.0),
        (6.0, 2.0), (2.0, 6.0), (0.75, 1.25), (1.25, 0.75), (8.0, 8.0),
    ]

    @pytest.mark.parametrize("alpha,beta", GRID)
    def test_matches_digamma_difference(self, alpha, beta):
        got = integrate_log_odds(BetaParams(alpha, beta))
        assert got == pytest.approx(digamma(alpha) - digamma(beta), abs=1e-7)

    @pytest.mark.parametrize("alpha,beta", GRID)
    def test_sign_tracks_shape_ordering(self, alpha, beta):
        got = integrate_log_odds(BetaParams(alpha, beta))
        if alpha > beta:
            assert got > 0
        elif alpha < beta:
            assert got < 0
        else:
            assert abs(got) < 1e-8

    def test_uniform_case_is_zero(self):
        assert abs(integrate_log_odds(BetaParams(1.0, 1.0))) < 1e-10

    def test_beta_2_1_value(self):
        # psi(2) - psi(1) = 1 exactly
        assert integrate_log_odds(BetaParams(2.0, 1.0)) == pytest.approx(1.0, abs=1e-8)

    def test_rejects_point_mass(self):
        with pytest.raises(ValueError):
            integrate_log_odds(BetaParams.degenerate_zero())

    @settings(max_examples=30, deadline=None)
    @given(
        alpha=st.floats(min_value=0.1, max_value=20.0),
        beta=st.floats(min_value=0.1, max_value=20.0),
    )
    def test_antisymmetry_property(self, alpha, beta):
        fwd = integrate_log_odds(BetaParams(alpha, beta))
        rev = integrate_log_odds(BetaParams(beta, alpha))
        assert fwd == pytest.approx(-rev, abs=1e-7)


def test_quadrature_error_is_raisable():
    with pytest.raises(QuadratureError):
        raise QuadratureError("synthetic")
