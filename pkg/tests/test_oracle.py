import functools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from conftest import scenario
from movanc.engine import effective_paths
from movanc.errors import SingularSystemError
from movanc.noise import compose_timeline, gen_bandlimited
from movanc.oracle import (
    CorrelationSet, constrained_solve, correlations_over, estimate_correlations, output_power, stage_oracles, wiener_solve,
)
from movanc.penalty import OfflinePenaltyInput, offline_penalty


def random_instance(rng, taps, scale=1.0):
    """Random correlation set with well-conditioned SPD matrices."""
    A = rng.standard_normal((taps, 3 * taps))
    B = rng.standard_normal((taps, 3 * taps))
    return CorrelationSet(A @ A.T / (3 * taps), B @ B.T / (3 * taps), scale * rng.standard_normal(taps))


@functools.lru_cache(maxsize=None)
def sec5a_oracles():
    return stage_oracles(scenario("sec5a"))


def test_white_noise_autocorrelation(rng):
    x = rng.standard_normal(1 << 20)
    c = estimate_correlations(x, x, rng.standard_normal(x.size), 2)
    np.testing.assert_allclose(c.Rxx, np.eye(2), atol=0.01)
    np.testing.assert_array_equal(c.Rxpxp, c.Rxx)
    np.testing.assert_array_equal(c.Rxx, c.Rxx.T)
    # independent target: each entry has standard error 1/sqrt(N)
    assert np.all(np.abs(c.rxpd) < 3 / np.sqrt(x.size))


def test_correlation_input_checks(rng):
    x = rng.standard_normal(1000)
    with pytest.raises(ValueError, match="same length"):
        estimate_correlations(x, x[:-1], x, 2)
    with pytest.raises(ValueError, match="at least"):
        estimate_correlations(x, x, x, 11)


def test_correlations_are_psd(rng):
    x = gen_bandlimited(2, 500, 900, 16000, 40_000, 1.0)
    c = estimate_correlations(x, np.convolve(x, [0.2, 0.5, -0.1])[: x.size], x, 16)
    for R in (c.Rxx, c.Rxpxp):
        assert np.abs(R - R.T).max() <= 1e-12
        assert np.linalg.eigvalsh(R).min() >= -1e-9 * np.trace(R)


def test_wiener_hand_value():
    c = CorrelationSet(np.eye(2), np.eye(2), np.array([2.0, 4.0]))
    np.testing.assert_allclose(wiener_solve(c, 1.0), [1.0, 2.0])
    with pytest.raises(ValueError):
        wiener_solve(c, -0.1)


def test_wiener_matches_numerical_minimization(rng):
    c = random_instance(rng, 8)
    alpha = 0.37
    A = c.Rxpxp + alpha * c.Rxx
    res = minimize(lambda w: w @ A @ w - 2 * w @ c.rxpd, np.zeros(8),
                   jac=lambda w: 2 * (A @ w - c.rxpd), method="BFGS", options={"gtol": 1e-12})
    np.testing.assert_allclose(wiener_solve(c, alpha), res.x, atol=1e-6)


def test_singular_system():
    c = CorrelationSet(np.zeros((2, 2)), np.zeros((2, 2)), np.ones(2))
    with pytest.raises(SingularSystemError):
        wiener_solve(c, 0.0)


def test_rank_deficient_system_gets_jitter():
    # a single tone makes a 3x3 correlation matrix rank 2
    n = np.arange(20_000)
    x = np.sin(2 * np.pi * 0.05 * n)
    c = estimate_correlations(x, x, np.roll(x, 1), 3)
    w = wiener_solve(c, 0.0)
    assert np.all(np.isfinite(w))


def test_output_power_hand_values():
    c = CorrelationSet(np.eye(2), np.eye(2), np.zeros(2))
    assert output_power(c, [0.0, 0.0]) == 0.0
    assert output_power(c, [3.0, 4.0]) == 25.0


def test_output_power_matches_replay(rng):
    x = gen_bandlimited(4, 400, 3600, 16000, 1 << 20, 0.5)
    c = estimate_correlations(x, x, x, 4)
    w = rng.standard_normal(4)
    y = np.convolve(x, w)[: x.size]
    assert output_power(c, w) == pytest.approx(np.mean(y**2), rel=0.02)


def test_zero_target_gives_zero_filter():
    c = CorrelationSet(np.eye(3), np.eye(3), np.zeros(3))
    sol = constrained_solve(c, 1.0)
    assert sol.lam == 0.0 and not np.any(sol.w)


def test_sec5a_first_stage_penalized_filter():
    # the penalized filter at the target first-stage penalty factor 0.0461
    sc = scenario("sec5a")
    xs = compose_timeline(sc.timeline)
    prim, _, sh = effective_paths(sc)
    stop = sc.timeline.stage_bounds()[0][1]
    c = correlations_over(xs, np.convolve(xs, sh)[: xs.size], np.convolve(xs, prim)[: xs.size], 2, 0, stop)
    np.testing.assert_allclose(wiener_solve(c, 0.0461), [1.52, 0.38], atol=0.03)
    assert sec5a_oracles()[0].solution.active


@pytest.mark.parametrize("stage,target", [(0, [1.52, 0.38]), (1, [1.14, 0.29])])
def test_sec5a_constrained_optima(stage, target):
    sol = sec5a_oracles()[stage].solution
    np.testing.assert_allclose(sol.w, target, atol=0.03)
    assert sol.power == pytest.approx(1.0, rel=1e-6)


def grid_crossing(c, rho2, step=1e-4, top=5.0):
    lams = np.arange(0.0, top, step)
    for lam in lams:
        if output_power(c, wiener_solve(c, lam)) <= rho2:
            return lam
    raise AssertionError("no crossing on grid")


def test_bisection_matches_grid_scan():
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 3:
        c = random_instance(rng, 3)
        p0 = output_power(c, wiener_solve(c, 0.0))
        rho2 = 0.5 * p0
        sol = constrained_solve(c, rho2)
        if sol.lam > 4.0:
            continue
        lam_grid = grid_crossing(c, rho2)
        assert lam_grid - 1e-4 <= sol.lam <= lam_grid
        checked += 1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(0.01, 10.0))
def test_kkt_conditions(seed, taps, rho2):
    c = random_instance(np.random.default_rng(seed), taps, scale=3.0)
    sol = constrained_solve(c, rho2)
    assert sol.lam >= 0
    assert sol.power <= rho2 * (1 + 1e-6)
    assert abs(sol.lam * (sol.power - rho2)) <= 1e-6 * rho2
    np.testing.assert_allclose(sol.w, wiener_solve(c, sol.lam), rtol=1e-12, atol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_power_strictly_decreasing_in_penalty(seed, taps):
    c = random_instance(np.random.default_rng(seed), taps)
    p = [output_power(c, wiener_solve(c, a)) for a in np.linspace(0, 10, 50)]
    assert np.all(np.diff(p) < 0)


def test_zero_penalty_is_unconstrained_solution(rng):
    c = random_instance(rng, 4)
    w0 = np.linalg.solve(c.Rxpxp, c.rxpd)
    np.testing.assert_allclose(wiener_solve(c, 0.0), w0, rtol=1e-10)
    big = constrained_solve(c, 10 * output_power(c, w0))
    assert big.lam == 0.0 and not big.active
    np.testing.assert_array_equal(big.w, wiener_solve(c, 0.0))


def test_offline_penalty_equals_multiplier_for_single_tone():
    # tone through pure delays: anti-noise fully correlated with d, G_s = 1
    n = np.arange(1 << 18)
    x = np.sqrt(2) * np.sin(2 * np.pi * 1000 / 16000 * n)
    d = np.concatenate([np.zeros(3), x[:-3]])
    xp = np.concatenate([np.zeros(1), x[:-1]])
    c = estimate_correlations(x, xp, d, 4)
    rho2 = 0.4
    sol = constrained_solve(c, rho2)
    gs = np.mean(xp**2) / np.mean(x**2)
    alpha_o = offline_penalty(OfflinePenaltyInput(np.mean(d**2), gs, rho2))
    assert alpha_o == pytest.approx(sol.lam, rel=0.02)
