import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hxnoise.errors import DomainError, SingularSystemError
from hxnoise.model import (
    INITIAL_GUESS,
    REFERENCE_OPTIMUM,
    InputVector,
    ModelState,
    ParameterVector,
    equilibrium_state,
    ode_rhs,
    per_exchanger_flow,
)
from oracles import RHS_CASES

temps = st.floats(-10, 120, allow_nan=False)
flows = st.floats(0, 5, allow_nan=False)
ks = st.tuples(st.floats(0, 1), st.floats(0, 10), st.floats(-50, 50), st.floats(-50, 50))


@pytest.mark.parametrize("k,u,x,expected", RHS_CASES)
def test_rhs_matches_rational_oracle(k, u, x, expected):
    got = ode_rhs(ModelState(*x), InputVector(*u), ParameterVector(*k))
    assert got == pytest.approx(expected, abs=1e-12)


def test_table_values():
    assert INITIAL_GUESS.as_list() == [0.1, 0.1, 0.1, 0.1]
    assert REFERENCE_OPTIMUM.as_list() == [0.0284, 0.2218, 2.14, -1.1161]


def test_total_flow_is_split_between_exchangers():
    assert per_exchanger_flow(4.0) == 2.0
    np.testing.assert_array_equal(per_exchanger_flow(np.array([1.0, 3.0])), [0.5, 1.5])


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_values_rejected(bad):
    with pytest.raises(DomainError):
        ModelState(bad, 1.0)
    with pytest.raises(DomainError):
        InputVector(80, bad, 1, 1)
    with pytest.raises(DomainError):
        ParameterVector(0.1, bad, 0, 0)


def test_negative_flow_rejected():
    with pytest.raises(DomainError):
        InputVector(80, 50, -1.0, 1.0)


def test_plausibility_is_a_validator_only():
    assert ModelState(60, 70).is_plausible()
    extreme = ModelState(500.0, -90.0)
    assert not extreme.is_plausible()


def test_equilibrium_worked_case():
    # hand solution of the 2x2 system for k=[0.01,0.1,0,0], u=(80,50,2,2)
    k, u = ParameterVector(0.01, 0.1, 0, 0), InputVector(80, 50, 2, 2)
    eq = equilibrium_state(u, k)
    assert (eq.t_co, eq.t_ho) == pytest.approx((55.0, 75.0), abs=1e-12)
    assert max(map(abs, ode_rhs(eq, u, k))) < 1e-12


def test_isothermal_equilibrium():
    eq = equilibrium_state(InputVector(42.5, 42.5, 1.3, 0.7), ParameterVector(0.2, 3.0, 0, 0))
    assert (eq.t_co, eq.t_ho) == pytest.approx((42.5, 42.5), abs=1e-12)


def test_singular_equilibrium():
    with pytest.raises(SingularSystemError, match="no unique equilibrium"):
        equilibrium_state(InputVector(80, 50, 2, 2), ParameterVector(0, 0, 1, 1))


@given(temps, flows, temps, temps, st.floats(0, 1), st.floats(0, 10))
def test_exchange_bookkeeping(t_hi, m, t_co, t_ho, k1, k2):
    t_ci = t_hi - 20.0
    d_co, d_ho = ode_rhs(ModelState(t_co, t_ho), InputVector(t_hi, t_ci, m, m), ParameterVector(k1, k2, 0, 0))
    expected = k1 * m * ((t_hi - t_co) - (t_ho - t_ci))
    assert d_co + d_ho == pytest.approx(expected, rel=1e-9, abs=1e-9)


@given(temps, temps, temps, temps, flows, flows, ks, ks, st.floats(-3, 3), st.floats(-3, 3))
def test_rhs_affine_in_params(t_co, t_ho, t_hi, t_ci, m_h, m_c, ka, kb, a, b):
    x, u = ModelState(t_co, t_ho), InputVector(t_hi, t_ci, m_h, m_c)
    # affine combination of parameters may leave the physical box; ParameterVector allows it
    mixed = ParameterVector(*(a * p + b * q for p, q in zip(ka, kb)))
    lhs = ode_rhs(x, u, mixed)
    ra, rb = ode_rhs(x, u, ParameterVector(*ka)), ode_rhs(x, u, ParameterVector(*kb))
    for got, ya, yb in zip(lhs, ra, rb):
        assert got == pytest.approx(a * ya + b * yb, rel=1e-9, abs=1e-6)


@given(temps, temps, st.floats(0.1, 5), st.floats(0.1, 5), st.floats(1e-3, 1), st.floats(0, 10),
       st.floats(-50, 50), st.floats(-50, 50))
def test_equilibrium_is_a_fixed_point(t_hi, t_ci, m_h, m_c, k1, k2, k3, k4):
    u, k = InputVector(t_hi, t_ci, m_h, m_c), ParameterVector(k1, k2, k3, k4)
    eq = equilibrium_state(u, k)
    scale = 1 + max(abs(eq.t_co), abs(eq.t_ho)) * (k1 * max(m_h, m_c) + k2)
    assert max(map(abs, ode_rhs(eq, u, k))) < 1e-10 * scale
