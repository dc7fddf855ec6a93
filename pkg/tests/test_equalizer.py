import logging

import numpy as np
import pytest

from latticebp.equalizer import ic_mmse, ic_mmse_all, mmse_filters, soft_interference, unit_gain_filters
from latticebp.realmap import real_model
from latticebp.socode import SuperCode


def _channel(rng, M=4, K=4):
    return rng.standard_normal((M, K))


def _dense_ic(y, H, x_ic, P, N0, i, Nt):
    """Straight transcription with explicit inverses."""
    M, K = H.shape
    p = P / (2 * Nt)
    xbar = x_ic.copy()
    xbar[i] = 0.0
    Q = p * np.eye(K) - np.diag(xbar) @ np.diag(xbar)
    R = H @ Q @ H.T + N0 / 2 * np.eye(M)
    h = H[:, i]
    Ri = np.linalg.inv(R)
    mc = p * Ri @ h
    a = 1 - mc @ h
    m = mc + a / (h @ Ri @ h) * Ri @ h
    return m @ (y - H @ xbar), 1 / (h @ Ri @ h) - p


def test_unit_gain_and_positive_mse():
    rng = np.random.default_rng(0)
    for _ in range(20):
        H = _channel(rng)
        fb = mmse_filters(H, P=4.0, N0=0.3, Nt=2)
        assert np.allclose(np.einsum("km,mk->k", fb.m, H), 1, atol=1e-9)
        assert np.all(fb.sigma2 > 0)


def test_noiseless_limit_recovers_x():
    rng = np.random.default_rng(1)
    H = _channel(rng)
    x = rng.choice([-1.0, 1.0], 4)
    fb = mmse_filters(H, P=4.0, N0=1e-10, Nt=2)
    assert np.allclose(fb.apply(H @ x), x, atol=1e-6)


def test_orthogonal_channel_gives_matched_filters():
    rng = np.random.default_rng(2)
    code = SuperCode()
    for _ in range(10):
        Hbar = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        Hk = real_model(Hbar, 2).H @ code.Gamma1
        fb = mmse_filters(Hk, P=8.0, N0=0.5, Nt=4)
        for i in range(4):
            m, h = fb.m[i], Hk[:, i]
            assert np.linalg.norm(m / np.linalg.norm(m) - h / np.linalg.norm(h)) < 1e-9


def test_singular_inputs_rejected():
    with pytest.raises(ValueError):
        mmse_filters(np.zeros((4, 4)), P=4.0, N0=0.0, Nt=2)
    with pytest.raises(ValueError):
        unit_gain_filters(np.eye(2), np.zeros((2, 2)), 1.0)


def test_soft_interference_examples():
    assert soft_interference([[0.5, 0.5]], [[-1, 1]]).x_ic[0] == 0
    assert soft_interference([[0.25, 0.75]], [[-1, 1]]).x_ic[0] == pytest.approx(0.5)
    cb = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert np.array_equal(soft_interference([0, 1], cb, mode="vector").x_ic, cb[1])
    with pytest.raises(ValueError):
        soft_interference([[0.3, 0.3]], [[-1, 1]])
    with pytest.raises(ValueError):
        soft_interference([0.3, 0.3], cb, mode="vector")


def test_null_feedback_equals_mmse():
    rng = np.random.default_rng(3)
    H = _channel(rng)
    y = rng.standard_normal(4)
    fb = mmse_filters(H, 4.0, 0.4, Nt=2)
    xh, s2 = ic_mmse_all(y, H, np.zeros(4), 4.0, 0.4, Nt=2)
    assert np.allclose(xh, fb.apply(y)) and np.allclose(s2, fb.sigma2)


def test_ic_matches_dense_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        H = _channel(rng)
        y = rng.standard_normal(4)
        x_ic = rng.uniform(-1, 1, 4)
        for i in range(4):
            got = ic_mmse(y, H, soft_interference([[(1 - v) / 2, (1 + v) / 2] for v in x_ic], [[-1, 1]] * 4), 4.0, 0.4, i, Nt=2)
            ref = _dense_ic(y, H, x_ic, 4.0, 0.4, i, 2)
            assert abs(got[0] - ref[0]) < 1e-10 and abs(got[1] - ref[1]) < 1e-10


def test_perfect_feedback_removes_interference():
    rng = np.random.default_rng(5)
    for _ in range(100):
        H = _channel(rng)
        x = rng.choice([-1.0, 1.0], 4)
        _, s_plain = ic_mmse_all(H @ x, H, np.zeros(4), 4.0, 0.5, Nt=2)
        xh, s_ic = ic_mmse_all(H @ x, H, x, 4.0, 0.5, Nt=2)
        assert np.all(s_ic < s_plain)
        assert np.allclose(s_ic, 0.25 / np.sum(H**2, axis=0))
        assert np.allclose(xh, x)


def test_empirical_variance_matches_mse():
    rng = np.random.default_rng(6)
    H = _channel(rng)
    N0, n = 0.5, 10_000
    Hb = np.broadcast_to(H, (n, 4, 4))
    # feedback is the conditional mean of the symbols actually drawn
    for mean in (np.zeros(4), np.array([0.6, -0.3, 0.9, 0.0])):
        X = np.where(rng.random((n, 4)) < (1 + mean) / 2, 1.0, -1.0)
        Y = X @ H.T + np.sqrt(N0 / 2) * rng.standard_normal((n, 4))
        x_ic = np.broadcast_to(mean, (n, 4))
        xh, s2 = ic_mmse_all(Y, Hb, x_ic, 4.0, N0, Nt=2)
        emp = np.var(xh - X, axis=0)
        assert np.all(np.abs(emp / s2[0] - 1) < 0.05)


def test_overlarge_feedback_clamped(caplog):
    rng = np.random.default_rng(7)
    H = _channel(rng)
    with caplog.at_level(logging.WARNING):
        xh, s2 = ic_mmse_all(np.zeros(4), H, np.full(4, 2.0), 4.0, 0.5, Nt=2)
    assert "clamping" in caplog.text and np.all(np.isfinite(xh))
