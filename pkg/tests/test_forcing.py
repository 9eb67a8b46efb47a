import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from duffing_flow import ConstantForcing, DecayingForcing, PeriodicForcing, SampledForcing, ZeroForcing
from duffing_flow.errors import DimensionMismatch, ForcingDomainError
from duffing_flow.forcing import as_forcing, constant_on_mode


def test_zero_and_constant():
    z = ZeroForcing(3)
    assert z.is_zero and z(1.0).tolist() == [0, 0, 0]
    c = ConstantForcing([1.0, 2.0])
    assert c.evaluate_many([0, 1, 2]).shape == (3, 2)
    np.testing.assert_array_equal((-c)(5.0), [-1, -2])
    np.testing.assert_array_equal(constant_on_mode(0.5, 1, 3)(0.0), [0, 0.5, 0])


@given(st.floats(-1e4, 1e4), st.integers(-5, 5))
def test_periodic_exact_period(t, shift):
    f = PeriodicForcing(2.5, ((1, 0, 1.0, 0.5), (3, 1, 0.0, 2.0), (0, 2, 0.7, 0.0)), 3)
    a = f(t)
    b = f(t + shift * 2.5)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_periodic_cosine_and_errors():
    f = PeriodicForcing.cosine(0.1, 1, 4)
    np.testing.assert_allclose(f(np.pi), [0, -0.1, 0, 0], atol=1e-17)
    assert f.max_harmonic == 1
    with pytest.raises(DimensionMismatch):
        PeriodicForcing(1.0, ((1, 4, 1.0, 0.0),), 4)
    with pytest.raises(ValueError):
        PeriodicForcing(0.0, (), 2)


def test_decaying():
    f = DecayingForcing(ConstantForcing([1.0, 0.0]), 2.0)
    np.testing.assert_allclose(f(1.0), [np.exp(-2), 0])
    np.testing.assert_allclose(f.scaled(3)(0.0), [3, 0])


def test_sampled_interpolation_and_domain():
    f = SampledForcing([0.0, 1.0, 2.0], [[0.0, 1.0], [2.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(f(0.5), [1.0, 1.0])
    np.testing.assert_allclose(f(1.5), [1.0, 0.5])
    for t in (-0.1, 2.1):
        with pytest.raises(ForcingDomainError):
            f(t)
    with pytest.raises(ValueError):
        SampledForcing([0.0, 0.0], [[1.0], [1.0]])


def test_as_forcing():
    assert as_forcing(None, 3).is_zero
    with pytest.raises(DimensionMismatch):
        as_forcing(ConstantForcing([1.0]), 3)
