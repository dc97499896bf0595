"""Randomness plumbing: seeded streams, Gaussian draws, the radii engine,
and the ball-conditioned recentring sampler."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ebcred import (
    CoefficientSequence,
    CredibleBall,
    ObservationSequence,
    PriorFamily,
    ProposalExhausted,
    RngSeed,
    build_credible_ball,
    draw_gaussian_sequence,
    draw_lawmu,
    draw_posterior,
    lawmu_scales,
    make_rng,
    posterior_spec,
    prior_variance,
    radius_precise,
    recentered_radii,
    volterra_spectrum,
)

FAM1 = PriorFamily.power_law(1.0)


def toy_posterior(i_max=100, n=50.0):
    spec = volterra_spectrum(i_max)
    obs = ObservationSequence(np.zeros(i_max), n)
    return posterior_spec(obs, spec, FAM1, check_truncation=False)


# ------------------------------------------------------------------ streams


def test_same_seed_same_stream_reproduces():
    a = make_rng(5, stream=2).standard_normal(8)
    b = make_rng(5, stream=2).standard_normal(8)
    assert np.array_equal(a, b)


def test_different_streams_differ():
    a = make_rng(5, stream=0).standard_normal(8)
    b = make_rng(5, stream=1).standard_normal(8)
    assert not np.array_equal(a, b)


def test_make_rng_accepts_generator_and_rngseed():
    gen = np.random.default_rng(0)
    assert make_rng(gen) is gen
    a = RngSeed(9, 4).generator().standard_normal(3)
    b = make_rng(RngSeed(9, 4)).standard_normal(3)
    assert np.array_equal(a, b)


def test_rngseed_validation():
    with pytest.raises(ValueError):
        RngSeed(-1, 0)
    with pytest.raises(ValueError):
        RngSeed(0, -2)


# ------------------------------------------------------------ direct draws


def test_zero_variance_draw_returns_means():
    means = np.array([1.0, -2.0, 0.5])
    draw = draw_gaussian_sequence(means, np.zeros(3), make_rng(0))
    assert np.array_equal(draw.values, means)


def test_draw_validation():
    with pytest.raises(ValueError):
        draw_gaussian_sequence(np.zeros(3), np.zeros(4), make_rng(0))
    with pytest.raises(ValueError):
        draw_gaussian_sequence(np.zeros(3), np.array([1.0, -1.0, 1.0]), make_rng(0))


def test_draw_posterior_equals_gaussian_draw_at_same_seed():
    post = toy_posterior()
    a = draw_posterior(post, make_rng(3, stream=1))
    b = draw_gaussian_sequence(post.mean, post.var, make_rng(3, stream=1))
    assert np.array_equal(a.values, b.values)


def test_draw_moments_and_independence():
    """Sample mean, variance, and cross moments over 1e5 draws.

    Everything is checked at 4 standard errors of the corresponding
    estimator, so a correct implementation fails with probability well
    below 1e-3 across all comparisons.
    """
    means = np.array([0.5, -1.0, 2.0])
    variances = np.array([1.0, 0.25, 4.0])
    reps = 100_000
    rng = make_rng(17)
    draws = np.array(
        [draw_gaussian_sequence(means, variances, rng).values for _ in range(reps)]
    )
    se_mean = np.sqrt(variances / reps)
    assert np.all(np.abs(draws.mean(axis=0) - means) <= 4.0 * se_mean)
    sample_var = draws.var(axis=0, ddof=1)
    se_var = variances * np.sqrt(2.0 / (reps - 1))
    assert np.all(np.abs(sample_var - variances) <= 4.0 * se_var)
    centered = draws - draws.mean(axis=0)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        cov = np.mean(centered[:, i] * centered[:, j])
        se = np.sqrt(variances[i] * variances[j] / reps)
        assert abs(cov) <= 4.0 * se


# ------------------------------------------------------------ radii engine


def test_recentered_radii_matches_direct_norms():
    """The blocked engine reproduces a plain float32 norm computation."""
    var = prior_variance(FAM1, np.arange(1, 41))
    m = 257
    engine = recentered_radii(var, m, make_rng(21))
    z = make_rng(21).standard_normal((m, 40), dtype=np.float32)
    direct = np.sqrt(
        np.einsum("ij,j->i", z * z, var.astype(np.float32), dtype=np.float32),
        dtype=np.float64,
    )
    assert np.array_equal(engine, direct)


def test_recentered_radii_block_size_invariance():
    var = prior_variance(FAM1, np.arange(1, 301))
    a = recentered_radii(var, 5000, make_rng(42), block_bytes=1 << 26)
    b = recentered_radii(var, 5000, make_rng(42), block_bytes=4096)
    assert np.array_equal(a, b)


def test_recentered_radii_deterministic():
    var = toy_posterior().var
    a = recentered_radii(var, 1000, make_rng(7, stream=5))
    b = recentered_radii(var, 1000, make_rng(7, stream=5))
    assert np.array_equal(a, b)


def test_recentered_radii_mean_square_is_total_variance():
    var = toy_posterior(i_max=200, n=100.0).var
    radii = recentered_radii(var, 50_000, make_rng(30))
    total = var.sum()
    # Var(||z||^2) = 2 sum v_i^2
    se = np.sqrt(2.0 * np.sum(var**2) / 50_000)
    assert abs(np.mean(radii**2) - total) <= 4.0 * se


def test_recentered_radii_validation():
    with pytest.raises(ValueError):
        recentered_radii(np.array([1.0, -1.0]), 10, make_rng(0))
    with pytest.raises(ValueError):
        recentered_radii(np.array([]), 10, make_rng(0))
    with pytest.raises(ValueError):
        recentered_radii(np.array([1.0]), 0, make_rng(0))
    with pytest.raises(ValueError):
        recentered_radii(np.array([np.inf]), 10, make_rng(0))


# ---------------------------------------------------------- lawmu sampler


def test_lawmu_scales_closed_form():
    s = lawmu_scales(3)
    assert s[0] == pytest.approx(1.0 / np.log(2.0), rel=1e-15)
    assert s[1] == pytest.approx(1.0 / (np.sqrt(2.0) * np.log(3.0)), rel=1e-15)
    assert np.all(np.diff(s) < 0)
    with pytest.raises(ValueError):
        lawmu_scales(0)


@given(i_max=st.integers(1, 5000))
@settings(max_examples=30, deadline=None)
def test_lawmu_scales_square_summable(i_max):
    partial = float(np.sum(lawmu_scales(i_max) ** 2))
    assert partial <= LAWMU_SQUARE_SUM_BOUND


# analytic bound on sum_k 1/(k log(k+1)^2): partial sum to 1e7 plus an
# integral tail; anything above it means the decay exponent regressed
LAWMU_SQUARE_SUM_BOUND = oracles.lawmu_squared_scale_bound(10**6)


def test_lawmu_draws_land_inside_the_ball():
    post = toy_posterior()
    est = radius_precise(post, m=20_000, seed=RngSeed(5, 0))
    ball = build_credible_ball(post, est)
    rng = make_rng(2, stream=9)
    for _ in range(200):
        mu = draw_lawmu(ball.center, est.value, ball, rng)
        assert np.linalg.norm(mu.values - ball.center.values) <= ball.radius


def test_lawmu_tiny_scale_stays_near_center():
    post = toy_posterior()
    est = radius_precise(post, m=5000, seed=RngSeed(6, 0))
    ball = build_credible_ball(post, est)
    a = 1e-9
    mu = draw_lawmu(ball.center, a, ball, make_rng(3))
    limit = a * np.sqrt(np.sum(lawmu_scales(ball.center.i_max) ** 2)) * 10.0
    assert np.linalg.norm(mu.values - ball.center.values) <= limit


def test_lawmu_exhaustion_raises():
    post = toy_posterior()
    est = radius_precise(post, m=5000, seed=RngSeed(6, 0))
    ball = build_credible_ball(post, est)
    tiny = CredibleBall(
        center=ball.center, radius=1e-12, blowup=1.0, gamma=ball.gamma
    )
    with pytest.raises(ProposalExhausted) as err:
        draw_lawmu(ball.center, 1.0, tiny, make_rng(4), max_attempts=40)
    assert err.value.attempts == 40


def test_lawmu_rejects_bad_arguments():
    post = toy_posterior()
    est = radius_precise(post, m=5000, seed=RngSeed(6, 0))
    ball = build_credible_ball(post, est)
    with pytest.raises(ValueError):
        draw_lawmu(ball.center, 0.0, ball, make_rng(0))
    with pytest.raises(ValueError):
        draw_lawmu(ball.center, 1.0, ball, make_rng(0), max_attempts=0)


def test_lawmu_accepted_first_coordinate_is_symmetric():
    """Conditioning on a centred ball keeps each coordinate symmetric."""
    post = toy_posterior()
    est = radius_precise(post, gamma=0.05, m=20_000, seed=RngSeed(5, 0))
    ball = build_credible_ball(post, est)
    rng = make_rng(11, stream=4)
    draws = np.array(
        [draw_lawmu(ball.center, 0.5 * est.value, ball, rng).values for _ in range(1500)]
    )
    first = draws[:, 0] - ball.center.values[0]
    skew = np.mean(first**3) / np.mean(first**2) ** 1.5
    assert abs(skew) <= 4.0 * np.sqrt(6.0 / 1500)


# Measured once against the frozen generator stack below; see the test.
LAWMU_ACCEPTANCE_SEEN = 0.1393


def test_lawmu_acceptance_rate_regression():
    """Fraction of unconditioned proposals at a = r that land inside.

    The proposal offset is the centred Gaussian with variances
    (a * scale_k)^2, so its norms can be simulated with the radii engine.
    The value was measured once; a shift beyond the band means the
    proposal law or the radius estimate changed.
    """
    post = toy_posterior(i_max=1024, n=1000.0)
    est = radius_precise(post, gamma=0.05, m=100_000, seed=RngSeed(2024, 0))
    offsets = recentered_radii(
        (est.value * lawmu_scales(1024)) ** 2, 100_000, make_rng(123, stream=77)
    )
    rate = float(np.mean(offsets <= est.value))
    assert rate == pytest.approx(LAWMU_ACCEPTANCE_SEEN, abs=0.01)
