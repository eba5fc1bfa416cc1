"""Piecewise-constant forcing signals.

The stepping kernels integrate forcing through per-step stage samples
(right limit at the step start, midpoint value, left limit at the step
end), which makes fixed-step RK4 exact across breakpoints that land on
grid nodes.  ``PiecewiseConstant`` provides those samples exactly;
arbitrary callables are sampled pointwise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous piecewise-constant signal.

    ``breaks`` are the jump times (strictly increasing); the value on
    [breaks[i], breaks[i+1]) is values[i].  Before the first break the
    signal is ``left`` (default 0); after the last break it is
    ``values[-1]``.
    """

    breaks: tuple
    values: tuple
    left: float = 0.0

    def __post_init__(self):
        if len(self.values) != len(self.breaks):
            raise ValidationError("breaks and values must have equal length")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValidationError("breaks must be strictly increasing")

    def __call__(self, t):
        v = self.left
        for b, val in zip(self.breaks, self.values):
            if t < b:
                break
            v = val
        return v

    def right_limit(self, t):
        v = self.left
        for b, val in zip(self.breaks, self.values):
            if t < b:
                break
            v = val
        return v

    def left_limit(self, t):
        v = self.left
        for b, val in zip(self.breaks, self.values):
            if t <= b:
                break
            v = val
        return v

    def pieces(self, t_end=np.inf):
        """Nonzero constant pieces as (start, end, value), clipped to t_end."""
        out = []
        times = list(self.breaks) + [t_end]
        for i, v in enumerate(self.values):
            lo, hi = times[i], min(times[i + 1], t_end)
            if v != 0.0 and hi > lo:
                out.append((lo, hi, v))
        return out


def constant(value):
    """A constant signal as a degenerate PiecewiseConstant."""
    return PiecewiseConstant(breaks=(), values=(), left=float(value))


def stage_samples(sig, t0, h, n):
    """Stage arrays (start, mid, end) for n RK4 steps from t0.

    For PiecewiseConstant signals the start sample is the right limit
    and the end sample the left limit, so steps whose nodes sit on
    breakpoints integrate the signal exactly.  Plain callables are
    sampled at the stage times.
    """
    ts = t0 + h * np.arange(n)
    if isinstance(sig, PiecewiseConstant):
        s = np.array([sig.right_limit(t) for t in ts])
        m = np.array([sig(t + 0.5 * h) for t in ts])
        e = np.array([sig.left_limit(t + h) for t in ts])
    elif callable(sig):
        s = np.array([float(sig(t)) for t in ts])
        m = np.array([float(sig(t + 0.5 * h)) for t in ts])
        e = np.array([float(sig(t + h)) for t in ts])
    else:
        v = float(sig)
        s = np.full(n, v)
        m = np.full(n, v)
        e = np.full(n, v)
    return s, m, e
