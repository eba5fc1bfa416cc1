import numpy as np
import pytest
from scipy.linalg import expm

from accw import PiecewiseConstant, ValidationError, build_system, integrate_oracle
from accw.system import TABLE_PARAMS, ParamSet


def test_zero_everything_stays_zero():
    sys = build_system(TABLE_PARAMS)
    t = integrate_oracle(sys, 0.3, None, 0.0, 10.0, 0.1)
    assert np.all(t.states == 0.0)


def test_ode_limit_matches_matrix_exponential():
    # stable A, no delay, no forcing: closed form e^{At} x0
    pi = ParamSet(ks=0.0, kv=0.0, ka=0.0, tau=1.0, l=0.0, TL=0.5)
    sys = build_system(pi)
    A = sys.A
    x0 = np.array([1.0, -0.5, 0.25])
    traj = integrate_oracle(sys, 0.0, x0, 0.0, 2.0, 1e-3)
    for tq in (0.5, 1.0, 2.0):
        ref = expm(A * tq) @ x0
        got = traj.at(tq)
        assert np.max(np.abs(got - ref)) < 1e-6
    # envelope decays for the damped pair
    norms = np.linalg.norm(traj.states, axis=1)
    assert norms[-1] < norms[0]


def test_self_convergence_on_reference_system():
    sys = build_system(TABLE_PARAMS)
    hist = lambda t: np.array([1.0, 0.0, 0.0])
    prof = PiecewiseConstant(breaks=(0.0, 2.0, 5.0), values=(-2.0, 2.0, 0.0))
    a = integrate_oracle(sys, 0.3, hist, prof, 10.0, 0.1)
    b = integrate_oracle(sys, 0.3, hist, prof, 10.0, 0.05)
    assert np.max(np.abs(a.states[-1] - b.states[-1])) < 1e-3


def test_substep_handles_theta_smaller_than_dt():
    sys = build_system(TABLE_PARAMS)
    hist = lambda t: np.array([1.0, 0.2 * t, 0.0])
    # delayed-state interpolation is linear, so agreement is O(h^2)
    a = integrate_oracle(sys, 0.05, hist, 0.0, 5.0, 0.1)
    b = integrate_oracle(sys, 0.05, hist, 0.0, 5.0, 0.0125)
    assert a.times[20] == pytest.approx(b.times[160])
    assert np.max(np.abs(a.states[20] - b.states[160])) < 5e-4


def test_determinism():
    sys = build_system(TABLE_PARAMS)
    hist = lambda t: np.array([np.sin(t), np.cos(3 * t), 0.1])
    a = integrate_oracle(sys, 0.2, hist, 1.0, 8.0, 0.01)
    b = integrate_oracle(sys, 0.2, hist, 1.0, 8.0, 0.01)
    assert np.array_equal(a.states, b.states)


def test_validation():
    sys = build_system(TABLE_PARAMS)
    with pytest.raises(ValidationError):
        integrate_oracle(sys, 0.3, None, 0.0, 10.0, -0.1)
    with pytest.raises(ValidationError):
        integrate_oracle(sys, -0.1, None, 0.0, 10.0, 0.1)
