import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from duffing_flow import PhaseState, apply_P, make_operator, make_params, norms
from duffing_flow.errors import (
    DimensionMismatch,
    LambdaOutOfGap,
    NonIncreasingSpectrum,
    NonPositiveEigenvalue,
    TooFewModes,
)

finite = st.floats(-10, 10, allow_nan=False)


def test_make_operator_canon():
    op = make_operator([1, 4, 9, 16])
    assert op.lam1 == 1 and op.lam2 == 4 and op.n_modes == 4
    with pytest.raises(ValueError):
        op.eigenvalues[0] = 2.0  # read-only


@pytest.mark.parametrize(
    "eig, err",
    [([1, 1, 4], NonIncreasingSpectrum), ([-1, 4], NonPositiveEigenvalue), ([0, 4], NonPositiveEigenvalue),
     ([3], TooFewModes), ([], TooFewModes), ([1, 4, 3], NonIncreasingSpectrum)],
)
def test_make_operator_errors(eig, err):
    with pytest.raises(err):
        make_operator(eig)


def test_error_codes_are_class_names():
    try:
        make_operator([1, 1])
    except NonIncreasingSpectrum as exc:
        assert exc.code == "NonIncreasingSpectrum"


def test_make_params(canon):
    assert canon.sigma0 == 1.0 and canon.gamma0 == 0.125
    p = make_params(make_operator([1, 4]), 3)
    assert p.sigma0 == pytest.approx(np.sqrt(2), abs=1e-15)
    assert p.gamma0 == 0.125
    for lam in (1.0, 4.0, 0.5, 5.0):
        with pytest.raises(LambdaOutOfGap):
            make_params(canon.operator, lam)


@given(st.floats(0.1, 5), st.floats(0.01, 0.99), st.floats(1.01, 4))
def test_gamma0_and_sigma0_ranges(lam1, frac, ratio):
    lam2 = lam1 * ratio
    lam = lam1 + frac * (lam2 - lam1)
    p = make_params(make_operator([lam1, lam2, lam2 + 1]), lam)
    assert 0 < p.gamma0 <= 1 / 8 and p.sigma0 > 0
    assert p.sigma0 == np.sqrt((lam - lam1) / lam1)


def test_norms_examples(canon):
    op = canon.operator
    z = np.zeros(4)
    assert norms(PhaseState(z, z), op) == (0, 0, 0, 0)
    n = norms(PhaseState(np.array([1.0, 1, 0, 0]), z), op)
    np.testing.assert_allclose(n, [np.sqrt(2), np.sqrt(5), np.sqrt(17), 0], rtol=1e-15)
    n = norms(PhaseState(np.array([1.0, 0, 0, 0]), np.array([0.0, 1, 0, 0])), op)
    np.testing.assert_allclose(n, [1, 1, 1, 1])
    with pytest.raises(DimensionMismatch):
        norms(PhaseState(np.zeros(3), np.zeros(3)), op)


def test_apply_P_examples():
    np.testing.assert_array_equal(apply_P([6, 0, 0, 0]), [1, 0, 0, 0])
    np.testing.assert_array_equal(apply_P([0, 1, 2, 3]), [0, 1, 2, 3])
    np.testing.assert_array_equal(apply_P([6, 1, 0, 0]), [1, 1, 0, 0])


@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite), finite)
def test_apply_P_linear_and_positive(x, y, a):
    np.testing.assert_allclose(apply_P(a * x + y), a * apply_P(x) + apply_P(y), atol=1e-9)
    assert np.dot(apply_P(x), x) >= 0
    assert np.dot(apply_P(x), x) == pytest.approx(x[0] ** 2 / 6 + np.sum(x[1:] ** 2))
    x0 = x.copy()
    x0[0] = 0
    np.testing.assert_array_equal(apply_P(apply_P(x0)), x0)


@settings(max_examples=50)
@given(arrays(float, 4, elements=finite))
def test_gap_inequality(u):
    u = u.copy()
    u[0] = 0.0
    p = make_params(make_operator([1, 4, 9, 16]), 2)
    _, _, au, _ = norms(PhaseState(u, u), p.operator)
    assert au**2 >= p.operator.lam2**2 * np.sum(u * u) * (1 - 1e-12)


def test_norms_batched(canon, rng):
    u = rng.standard_normal((5, 3, 4))
    n = norms(PhaseState(u, u), canon.operator)
    assert n[0].shape == (5, 3)
    np.testing.assert_allclose(n[0][2, 1], np.linalg.norm(u[2, 1]))
