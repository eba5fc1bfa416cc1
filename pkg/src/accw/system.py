"""Control parameter sets and the linear car-following system matrices.

The follower state is x = [spacing deviation, speed difference, realized
acceleration].  Its dynamics are

    x'(t) = A x(t) + B K x(t - theta) + D a_lead(t)

with A, B, D fixed by the time-gap policy and the first-order actuation
lag, and K the feedback gain row.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ParamSet:
    """One control-parameter tuple.

    Attributes
    ----------
    ks : float
        Spacing-deviation gain, 1/s^2.
    kv : float
        Speed-difference gain, 1/s.
    ka : float
        Acceleration gain, dimensionless.
    tau : float
        Desired constant time gap, s.  Must be positive.
    l : float
        Standstill distance, m.  Must be nonnegative.
    TL : float
        Actuation lag, s.  Must be positive.
    """

    ks: float
    kv: float
    ka: float
    tau: float
    l: float
    TL: float

    def __post_init__(self):
        for name in ("ks", "kv", "ka", "tau", "l", "TL"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"ParamSet.{name} must be finite, got {v}")
        if self.tau <= 0:
            raise ValidationError(f"ParamSet.tau must be > 0, got {self.tau}")
        if self.TL <= 0:
            raise ValidationError(f"ParamSet.TL must be > 0, got {self.TL}")
        if self.l < 0:
            raise ValidationError(f"ParamSet.l must be >= 0, got {self.l}")

    def equilibrium_spacing(self, v):
        """Desired spacing at speed v: v * tau + l."""
        return v * self.tau + self.l


# reference values used throughout the experiments
TABLE_PARAMS = ParamSet(ks=0.26, kv=0.71, ka=-1.31, tau=1.18, l=7.64, TL=0.37)


@dataclass(frozen=True)
class SystemMatrices:
    """A, B, D, K of the delayed feedback system, plus the product B K."""

    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    K: np.ndarray

    @property
    def BK(self):
        return self.B @ self.K

    @property
    def no_delay_matrix(self):
        """Closed-loop matrix when the sensing delay is zero."""
        return self.A + self.BK


def build_system(pi: ParamSet) -> SystemMatrices:
    """Assemble the system matrices for one parameter set.

    The construction is exact and deterministic:

        A = [[0, 1, -tau], [0, 0, -1], [0, 0, -1/TL]]
        B = [0, 0, 1/TL]^T,  D = [0, 1, 0]^T,  K = [ks, kv, ka]
    """
    A = np.array([
        [0.0, 1.0, -pi.tau],
        [0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0 / pi.TL],
    ])
    B = np.array([[0.0], [0.0], [1.0 / pi.TL]])
    D = np.array([[0.0], [1.0], [0.0]])
    K = np.array([[pi.ks, pi.kv, pi.ka]])
    return SystemMatrices(A=A, B=B, D=D, K=K)
