import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from rsma_rm.perturbation import (
    PerturbationModel,
    build_stats,
    estimation_error_expectation_matrix,
    feedback_expectation_matrix,
    hermitize,
)

from .conftest import crandn

# mpmath at 25 digits
FB_OFF_5DEG = 0.992413488464797911
CE_DIAG_2DEG = 0.00121809858742157946
CE_OFF_2DEG = 3.70941042169611813e-7


def test_feedback_matrix_zero_delta_is_ones():
    assert_array_equal(feedback_expectation_matrix(0.0, 4), np.ones((4, 4)))


def test_feedback_matrix_large_delta_is_identity():
    assert_allclose(feedback_expectation_matrix(50.0, 3), np.eye(3), atol=1e-300)


def test_feedback_matrix_5deg():
    M = feedback_expectation_matrix(np.deg2rad(5), 4)
    assert_allclose(np.diag(M), 1.0)
    assert_allclose(M[0, 1], FB_OFF_5DEG, rtol=1e-14)


def test_estimation_matrix_zero_delta_is_zero():
    assert_array_equal(estimation_error_expectation_matrix(0.0, 4), np.zeros((4, 4)))


def test_estimation_matrix_2deg():
    M = estimation_error_expectation_matrix(np.deg2rad(2), 4)
    assert_allclose(M[1, 1], CE_DIAG_2DEG, rtol=1e-12)
    assert_allclose(M[0, 3], CE_OFF_2DEG, rtol=1e-12)


@pytest.mark.parametrize("deg", [0.5, 2.0, 5.0, 30.0])
def test_estimation_matrix_diagonal_identities(deg):
    d = np.deg2rad(deg)
    M = estimation_error_expectation_matrix(d, 3)
    assert_allclose(M[0, 0], 2 - 2 * np.exp(-d**2 / 2), rtol=1e-12)
    assert_allclose(M[0, 0] - M[0, 1], 1 - np.exp(-d**2), rtol=1e-12)


@pytest.mark.parametrize("fn", [feedback_expectation_matrix, estimation_error_expectation_matrix])
def test_expectation_matrices_reject_bad_input(fn):
    with pytest.raises(ValueError):
        fn(-0.1, 3)
    with pytest.raises(ValueError):
        fn(0.1, 0)


@pytest.mark.parametrize("deg", [2.0, 5.0, 10.0])
def test_closed_forms_match_monte_carlo(deg):
    d = np.deg2rad(deg)
    rng = np.random.default_rng(int(deg * 10))
    e = np.exp(1j * rng.normal(0, d, size=(10**6, 3)))
    fb = np.einsum("di,dj->ij", e, e.conj()) / len(e)
    ce = np.einsum("di,dj->ij", e - 1, (e - 1).conj()) / len(e)
    assert_allclose(fb, feedback_expectation_matrix(d, 3), atol=5e-3)
    assert_allclose(ce, estimation_error_expectation_matrix(d, 3), atol=5e-3)


def test_feedback_off_diagonal_decreases():
    vals = [feedback_expectation_matrix(np.deg2rad(x), 2)[0, 1] for x in (0, 1, 2, 5, 10)]
    assert np.all(np.diff(vals) < 0)


def test_estimation_diagonal_increases():
    vals = [estimation_error_expectation_matrix(np.deg2rad(x), 2)[0, 0] for x in (0, 1, 2, 5, 10)]
    assert np.all(np.diff(vals) > 0)


def test_model_from_degrees():
    m = PerturbationModel.from_degrees(5, 2)
    assert m.delta_fb_rad == pytest.approx(0.0872664626, rel=1e-9)
    assert not m.perfect
    assert PerturbationModel().perfect
    with pytest.raises(ValueError):
        PerturbationModel(-1.0, 0.0)


def test_stats_without_feedback_error_are_outer_products(rng):
    h = crandn(rng, 4, 3)
    st = build_stats(h, PerturbationModel(0.0, 0.1))
    for k in range(3):
        assert_allclose(st.q_fb[k], np.outer(h[:, k], h[:, k].conj()), rtol=1e-15)


def test_stats_without_estimation_error_vanish(rng):
    st = build_stats(crandn(rng, 4, 3), PerturbationModel(0.1, 0.0))
    assert_array_equal(st.q_both, 0)


def test_stats_reject_bad_channel():
    with pytest.raises(ValueError):
        build_stats(np.ones(4), PerturbationModel())
    with pytest.raises(ValueError):
        build_stats(np.array([[np.nan, 1.0]]), PerturbationModel())


def test_quadratic_forms_match_monte_carlo(rng):
    h = crandn(rng, 4, 2)
    p = crandn(rng, 4)
    model = PerturbationModel.from_degrees(5, 2)
    st = build_stats(h, model)
    n = 10**6
    efb = np.exp(1j * rng.normal(0, model.delta_fb_rad, (n, 4)))
    ece = np.exp(1j * rng.normal(0, model.delta_ce_rad, (n, 4)))
    g = h[None, :, 0] * efb
    fb = np.mean(np.abs(g.conj() @ p) ** 2)
    both = np.mean(np.abs((g * (ece - 1)).conj() @ p) ** 2)
    assert_allclose(np.real(p.conj() @ st.q_fb[0] @ p), fb, rtol=1e-2)
    assert_allclose(np.real(p.conj() @ st.q_both[0] @ p), both, rtol=2e-2)


def test_hermitize_is_idempotent(rng):
    X = crandn(rng, 3, 3)
    H = hermitize(X)
    assert_allclose(H, H.conj().T)
    assert_array_equal(hermitize(H), H)


@given(
    seed=st.integers(0, 2**32 - 1),
    deg_fb=st.sampled_from([0.0, 1.0, 2.0, 5.0, 10.0, 30.0]),
    deg_ce=st.sampled_from([0.0, 1.0, 2.0, 5.0, 10.0, 30.0]),
    n_t=st.integers(1, 6),
)
def test_stats_are_hermitian_psd(seed, deg_fb, deg_ce, n_t):
    rng = np.random.default_rng(seed)
    h = crandn(rng, n_t, 3) * rng.uniform(0.1, 30)
    s = build_stats(h, PerturbationModel.from_degrees(deg_fb, deg_ce))
    for Q in np.concatenate([s.q_fb, s.q_both]):
        assert np.max(np.abs(Q - Q.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(Q)))
        tr = np.trace(Q).real
        assert np.linalg.eigvalsh(Q)[0] >= -1e-10 * tr
