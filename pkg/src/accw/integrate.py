"""Method-of-steps RK4 integration of the 3-state delayed system.

This is the independent time-domain check for the spectral machinery:
fixed step, linear interpolation of the delayed state from the stored
grid, deterministic for identical inputs.  theta = 0 degrades to a
plain RK4 ODE integrator.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import dde3_rk4
from .errors import ValidationError
from .forcing import stage_samples
from .system import SystemMatrices


@dataclass(frozen=True)
class DdeTrajectory:
    """Grid times and the integrated states, one row per node."""

    times: np.ndarray
    states: np.ndarray

    def at(self, t):
        """State at a grid time (must match a node within 1e-9)."""
        i = int(round((t - self.times[0]) / (self.times[1] - self.times[0])))
        if not (0 <= i < len(self.times)) or abs(self.times[i] - t) > 1e-9:
            raise ValidationError(f"t={t} is not on the trajectory grid")
        return self.states[i]

    def interp(self, t):
        """Linearly interpolated state at an arbitrary in-range time."""
        h = self.times[1] - self.times[0]
        pos = (t - self.times[0]) / h
        if pos < 0 or pos > len(self.times) - 1:
            raise ValidationError(f"t={t} is outside the trajectory range")
        j = min(int(pos), len(self.times) - 2)
        fr = pos - j
        return self.states[j] * (1.0 - fr) + self.states[j + 1] * fr


def _history_rows(history, times):
    if history is None:
        return np.zeros((len(times), 3))
    if callable(history):
        return np.array([np.asarray(history(t), dtype=float) for t in times])
    h = np.asarray(history, dtype=float)
    if h.shape != (3,):
        raise ValidationError("constant history must be a 3-vector")
    return np.tile(h, (len(times), 1))


def integrate_oracle(sys: SystemMatrices, theta, history, forcing, horizon,
                     dt, t0=0.0):
    """Integrate x' = A x + BK x(t-theta) + D f(t) from t0 over horizon.

    Parameters
    ----------
    history : callable, 3-vector, or None
        State on [t0 - theta, t0]; None means zero.  The value at t0 is
        the initial state.
    forcing : PiecewiseConstant, callable, or float
        Scalar forcing entering through the D channel.
    dt : float
        Output grid step.  When 0 < theta < dt the integrator substeps
        internally so the delayed lookup stays inside the filled buffer.

    Returns
    -------
    DdeTrajectory
        Nodes t0, t0+dt, ..., t0+horizon.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if theta < 0:
        raise ValidationError(f"theta must be nonnegative, got {theta}")
    if horizon <= 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")

    n_out = int(round(horizon / dt))
    if abs(n_out * dt - horizon) > 1e-9:
        raise ValidationError("horizon must be an integer multiple of dt")

    n_sub = 1 if (theta == 0.0 or theta >= dt) else int(math.ceil(dt / theta))
    h = dt / n_sub
    n = n_out * n_sub

    if theta == 0.0:
        m = 1
    else:
        m = int(math.ceil(theta / h - 1e-12)) + 1
    hist_times = t0 + h * np.arange(-(m - 1), 1)
    hist_rows = _history_rows(history, hist_times)

    fs, fm, fe = stage_samples(forcing, t0, h, n)
    out = dde3_rk4(np.ascontiguousarray(sys.A), np.ascontiguousarray(sys.BK),
                   sys.D.ravel(), theta, h, n, hist_rows, fs, fm, fe)
    states = out[m - 1::n_sub]
    times = t0 + dt * np.arange(n_out + 1)
    return DdeTrajectory(times=times, states=states)
