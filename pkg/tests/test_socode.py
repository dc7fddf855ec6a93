import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticebp.lattice import d4_qpsk_lattice
from latticebp.realmap import mat_isom, real_model
from latticebp.socode import (
    C_BASIS,
    C_PRIME_BASIS,
    SuperCode,
    abs_sum,
    dispersion_generator,
    encode,
    hypothesis_llr,
    hypothesis_llr_weighted,
    matched_filters,
    ml_exhaustive,
)

CODE = SuperCode()


def _H(rng):
    Hbar = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    return real_model(Hbar, 2).H


def test_gamma_unitary():
    assert np.abs(CODE.Gamma @ CODE.Gamma.T - 2 * np.eye(8)).max() < 1e-12


def test_dispersion_generator_examples():
    G = dispersion_generator([np.eye(2)])
    assert G.shape == (8, 1) and np.array_equal(G[:, 0], mat_isom(np.eye(2)))
    with pytest.raises(ValueError):
        dispersion_generator([np.eye(2), np.eye(3)])
    rng = np.random.default_rng(0)
    chi = rng.standard_normal(8)
    S = sum(c * B for c, B in zip(chi, C_BASIS + C_PRIME_BASIS))
    assert np.allclose(CODE.Gamma @ chi, mat_isom(S.T))


def test_encode_examples():
    S, x = encode(CODE, 1, [1, 1, 1, 1])
    assert np.allclose(S, sum(C_BASIS))
    S, _ = encode(CODE, 2, [1, -1, 1, -1])
    assert np.allclose(S, sum(c * B for c, B in zip([1, -1, 1, -1], C_PRIME_BASIS)))
    with pytest.raises(ValueError):
        encode(CODE, 1, [1, 0, 1, 1])
    with pytest.raises(ValueError):
        encode(CODE, 3, [1, 1, 1, 1])


def test_codebook_structure():
    assert len(CODE) == 32
    assert len({tuple(np.round(x, 12)) for x in CODE.codebook}) == 32
    for cp in CODE.chi_plus:
        halves = (cp[:4], cp[4:])
        assert sum(not h.any() for h in halves) == 1
        assert set(np.concatenate(halves)) <= {-1.0, 0.0, 1.0}
    for i in (0, 17, 31):
        _, x = encode(CODE, int(CODE.hypothesis[i]), CODE.chi[i])
        assert np.allclose(x, CODE.codebook[i])
        assert np.allclose(mat_isom(CODE.matrix(i).T), CODE.codebook[i])


def test_chi_in_second_shell():
    ll = d4_qpsk_lattice()
    for chi in CODE.chi_region:
        assert np.sum(chi**2) == 4
        assert ll.label_of(chi) in ll.code.region_labels


def test_matched_filter_proportionality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        H = _H(rng)
        for G in (CODE.Gamma1, CODE.Gamma2):
            Hk = H @ G
            A = Hk.T @ Hk
            alpha = np.mean(np.diag(A))
            assert np.abs(A - alpha * np.eye(4)).max() < 1e-9 * alpha
        M1, M2, alpha = matched_filters(H, CODE)
        assert np.allclose(M1 @ H @ CODE.Gamma1, np.eye(4), atol=1e-9)
        assert alpha == pytest.approx(np.sum(H**2) / 8 * 2)


def test_matched_filter_identity_channel_and_zero():
    H = real_model(np.eye(2), 2).H
    M1, M2, alpha = matched_filters(H, CODE)
    assert np.allclose(M2 @ H @ CODE.Gamma2, np.eye(4), atol=1e-9)
    with pytest.raises(ValueError):
        matched_filters(np.zeros((8, 8)), CODE)


def test_llr_examples():
    assert abs_sum([-1, 2, -3]) == 6
    r = hypothesis_llr(np.ones(4), np.full(4, 0.1), 1.0, 1.0)
    assert r.llr == pytest.approx(14.4)
    assert r.p_h1 == pytest.approx(1 / (1 + np.exp(-14.4)))
    r = hypothesis_llr(np.array([0.3, -1, 2, 0]), np.array([0.3, -1, 2, 0]), 2.0, 0.5)
    assert r.llr == 0 and r.p_h1 == 0.5 == r.p_h2
    assert np.array_equal(r.chi_hat, [1, -1, 1, 1])
    assert hypothesis_llr(np.ones(4), np.zeros(4), 1.0, 1.0, exact=True).llr == pytest.approx(8.0)
    with pytest.raises(ValueError):
        hypothesis_llr(np.ones(4), np.ones(4), 1.0, 0.0)
    with pytest.raises(ValueError):
        hypothesis_llr(np.array([np.nan, 0, 0, 0]), np.ones(4), 1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.lists(st.floats(-5, 5), min_size=4, max_size=4),
       st.floats(0.01, 10), st.floats(0.01, 10))
def test_llr_properties(a, b, alpha, N0):
    a, b = np.array(a), np.array(b)
    r = hypothesis_llr(a, b, alpha, N0)
    s = hypothesis_llr(b, a, alpha, N0)
    assert r.p_h1 + r.p_h2 == pytest.approx(1)
    assert r.llr == pytest.approx(-s.llr)
    assert r.p_h1 == pytest.approx(1 / (1 + np.exp(-np.clip(r.llr, -700, 700))))


def test_weighted_llr_reduces_to_exact_form():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(4), rng.standard_normal(4)
    v = 0.3
    assert hypothesis_llr_weighted(a, b, np.full(4, v), np.full(4, v)) == pytest.approx((abs_sum(a) - abs_sum(b)) / v)


def test_noiseless_chain_recovers_every_codeword():
    rng = np.random.default_rng(3)
    H = _H(rng)
    M1, M2, alpha = matched_filters(H, CODE)
    for i, x in enumerate(CODE.codebook):
        y = H @ x
        r = hypothesis_llr(M1 @ y, M2 @ y, alpha, 1e-6)
        k = 1 if r.p_h1 > 0.5 else 2
        chi = r.chi_hat if k == 1 else r.chi_hat_prime
        assert CODE.index_of(k, chi) == i
        assert ml_exhaustive(y, H, CODE.codebook) == i


def test_ml_ties_and_oracle():
    rng = np.random.default_rng(4)
    H = _H(rng)
    assert ml_exhaustive(np.zeros(8), H, CODE.codebook) == 0
    n = 10_000
    Hs = np.stack([_H(rng) for _ in range(50)])
    Hs = Hs[rng.integers(0, 50, n)]
    idx = rng.integers(0, 32, n)
    y = np.einsum("nmk,nk->nm", Hs, CODE.codebook[idx]) + 0.6 * rng.standard_normal((n, 8))
    got = ml_exhaustive(y, Hs, CODE.codebook)
    for t in range(0, n, 97):
        d = [np.sum((y[t] - Hs[t] @ x) ** 2) for x in CODE.codebook]
        assert got[t] == int(np.argmin(d))
