import numpy as np
import pytest

from movanc.controller import ControllerState, Variant
from movanc.dsp import DelayLine
from movanc.engine import simulate
from movanc.errors import DivergenceError
from movanc.noise import gen_bandlimited
from movanc.penalty import PenaltyEstimator

S = np.array([0.03, 0.87])
P = np.array([1.62, 0.41])


class Plant:
    """True secondary path between the controller output and the error sensor."""

    def __init__(self, sec, ds):
        self.sec = np.asarray(sec, dtype=float)
        self.ds = ds
        self.line = DelayLine(self.sec.size)
        self.n = 0

    def __call__(self, y):
        self.line.push(y)
        e = self.ds[self.n] - float(np.dot(self.sec, self.line.recent()))
        self.n += 1
        return e


def python_run(xs, ds, variant, *, sec=S, sec_hat=S, taps=2, mu=2e-4, alpha=0.0, y_max=None, K=64, rho2=1.0):
    st = ControllerState(taps, sec_hat, mu, variant)
    pe = PenaltyEstimator(K, rho2)
    plant = Plant(sec, ds)
    rows = [st.step(x, plant, alpha=alpha, y_max=y_max, penalty=pe) for x in xs]
    return st.w, np.array(rows)


def signals(n=4000, seed=3):
    xs = gen_bandlimited(seed, 400, 3600, 16000, n, 0.54)
    return xs, np.convolve(xs, np.convolve(P, S))[:n]


def test_variant_parse():
    assert Variant.parse("mov_mfxlms") is Variant.MOV_MFXLMS
    assert Variant.parse(2) is Variant.MOV_FXLMS
    with pytest.raises(ValueError):
        Variant.parse("NLMS")


def test_control_hand_values():
    st = ControllerState(2, [1.0], 1e-3, w0=[1.0, 0.0])
    st.compute_control(5.0)
    assert st.compute_control(3.0) == 3.0
    st = ControllerState(2, [1.0], 1e-3, w0=[1.62, 0.41])
    st.compute_control(1.0)
    assert st.compute_control(1.0) == pytest.approx(2.03)


def test_control_matches_fir(rng):
    w = rng.standard_normal(5)
    xs = rng.standard_normal(50)
    st = ControllerState(5, [1.0], 1e-3, w0=w)
    ys = [st.compute_control(x) for x in xs]
    np.testing.assert_allclose(ys, np.convolve(xs, w)[:50], atol=1e-12)


def test_filtered_reference():
    st = ControllerState(1, [1.0], 1e-3)
    st.compute_control(7.0)
    assert st.filtered_reference() == 7.0
    st = ControllerState(1, S, 1e-3)
    st.compute_control(1.0)
    st.compute_control(2.0)
    assert st.filtered_reference() == pytest.approx(0.93)


def test_filtered_reference_matches_convolution(rng):
    sh = rng.standard_normal(6)
    xs = rng.standard_normal(40)
    st = ControllerState(2, sh, 1e-3)
    out = []
    for x in xs:
        st.compute_control(x)
        out.append(st.filtered_reference())
    np.testing.assert_allclose(out, np.convolve(xs, sh)[:40], atol=1e-12)


def test_zero_weights_reconstruct_error_as_disturbance():
    st = ControllerState(2, S, 1e-3)
    st.compute_control(1.0)
    st.filtered_reference()
    assert st.estimate_disturbance(0.25) == 0.25
    assert st.modified_error(0.25) == 0.25


def test_modified_error_hand_value():
    st = ControllerState(1, [3.0], 1e-3, w0=[2.0])
    st.compute_control(1.0)
    st.filtered_reference()
    assert st.modified_error(10.0) == 4.0


def test_update_without_error_or_output_is_noop():
    st = ControllerState(2, S, 1e-3, w0=[0.5, -0.5])
    st.compute_control(1.0)
    st.filtered_reference()
    st.update_weights(0.0, 0.3, 0.0)
    np.testing.assert_array_equal(st.w, [0.5, -0.5])


def test_rescale_rule():
    st = ControllerState(2, S, 1e-3, variant="RESCALING", w0=[1.0, 2.0])
    assert st.rescale_weights(1.0, 2.0) == 1.0
    np.testing.assert_array_equal(st.w, [1.0, 2.0])
    assert st.rescale_weights(-4.0, 2.0) == -2.0
    np.testing.assert_array_equal(st.w, [0.5, 1.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    xs, ds = signals(2000)
    st = ControllerState(2, S, 1e6, "FXLMS")
    plant = Plant(S, ds * 1e200)
    with pytest.raises(DivergenceError) as info:
        for x in xs * 1e100:
            st.step(x, plant)
    assert info.value.index >= 0


@pytest.mark.parametrize("variant", list(Variant))
def test_kernel_matches_python_controller(variant):
    xs, ds = signals()
    kw = dict(alpha=0.05, y_max=1.2)
    w_py, rows = python_run(xs, ds, variant, **kw)
    w = np.zeros(2)
    trace, *_, diverged = simulate(xs, ds, S, S, w, mu=2e-4, variant=variant, alpha_fixed=kw["alpha"],
                                   y_max=kw["y_max"], window=64, rho2=1.0, decimation=1)
    assert diverged == -1
    np.testing.assert_allclose(trace[:, 3], rows[:, 0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(trace[:, 4], rows[:, 1], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(trace[:, 5], rows[:, 4], rtol=1e-9, atol=1e-14)
    np.testing.assert_allclose(w, w_py, rtol=1e-12)


def test_zero_penalty_reduces_to_modified_lms():
    xs, ds = signals()
    w_a, rows_a = python_run(xs, ds, Variant.MFXLMS)
    w_b, rows_b = python_run(xs, ds, Variant.MOV_FXLMS, alpha=0.0)
    np.testing.assert_array_equal(w_a, w_b)
    np.testing.assert_array_equal(rows_a, rows_b)


def test_exact_model_reconstructs_disturbance():
    xs, ds = signals()
    _, rows = python_run(xs, ds, Variant.MOV_MFXLMS)
    assert np.abs(rows[:, 2] - ds).max() < 1e-9


def test_model_error_shows_up_in_reconstruction():
    xs, ds = signals()
    sh = S * np.array([1.1, 0.95])
    _, rows = python_run(xs, ds, Variant.MFXLMS, sec_hat=sh)
    y = rows[:, 0]
    expected = np.convolve(y, sh - S)[: y.size]
    np.testing.assert_allclose(rows[:, 2] - ds, expected, atol=1e-12)


def test_frozen_weights_modified_error_equals_error(rng):
    xs, ds = signals(500)
    st = ControllerState(2, S, 1e-3, w0=[0.7, -0.2])
    plant = Plant(S, ds)
    for n, x in enumerate(xs):
        y = st.compute_control(x)
        e = plant(y)
        st.filtered_reference()
        e_m = st.modified_error(st.estimate_disturbance(e))
        if n >= 4:
            assert e_m == pytest.approx(e, abs=1e-12)


def test_modified_gradient_matches_plain_gradient_at_fixed_weights():
    n = 200_000
    xs = gen_bandlimited(11, 400, 3600, 16000, n, 0.54)
    d = np.convolve(xs, np.convolve(P, S))[:n]
    w = np.array([0.9, 0.1])
    xp = np.convolve(xs, S)[:n]
    xp_lags = np.stack([xp, np.concatenate([[0.0], xp[:-1]])], axis=1)
    e = d - np.convolve(np.convolve(xs, w)[:n], S)[:n]
    e_m = d - xp_lags @ w
    g_plain = xp_lags * e[:, None]
    g_mod = xp_lags * e_m[:, None]
    diff = g_plain - g_mod
    se = g_plain.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(diff.mean(axis=0)) < 3 * se)
