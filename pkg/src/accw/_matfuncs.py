"""Small dense matrix-exponential utilities.

Everything here is exact linear algebra on 3x3 (or modest block) inputs:
integrals of matrix exponentials via the augmented-matrix construction,
and the first two method-of-steps segments of the delayed fundamental
solution in closed form.
"""

import numpy as np
from scipy.linalg import expm


def iexp(M, h):
    """Integral of e^{M u} du over [0, h] via the augmented exponential.

    Works for singular M, unlike the M^-1 (e^{Mh} - I) formula.
    """
    n = M.shape[0]
    T = np.zeros((2 * n, 2 * n), dtype=M.dtype)
    T[:n, :n] = M
    T[:n, n:] = np.eye(n)
    return expm(T * h)[:n, n:]


def cross_exp(A1, B1, A2, h):
    """Integral of e^{A1 (h-s)} B1 e^{A2 s} ds over [0, h] (Van Loan block)."""
    n = A1.shape[0]
    dtype = np.result_type(A1, B1, A2)
    T = np.zeros((2 * n, 2 * n), dtype=dtype)
    T[:n, :n] = A1
    T[:n, n:] = B1
    T[n:, n:] = A2
    return expm(T * h)[:n, n:]


def fundamental_integral(A, BK, theta, u):
    """Integral over [0, u] of the delayed-system fundamental solution.

    X(v) solves X' = A X + BK X(v - theta) with X = 0 for v < 0 and
    X(0) = I, so X(v) = e^{Av} on [0, theta] and picks up one Van Loan
    cross term on (theta, 2 theta].  Valid for u <= 2 theta.
    """
    if u <= 0:
        return np.zeros_like(A)
    if u <= theta:
        return iexp(A, u)
    if u > 2 * theta + 1e-12:
        raise ValueError("fundamental_integral is closed-form only up to 2*theta")
    n = A.shape[0]
    T = np.zeros((2 * n, 2 * n))
    T[:n, :n] = A
    T[:n, n:] = BK
    T[n:, n:] = A
    return iexp(A, u) + iexp(T, u - theta)[:n, n:]


def shifted_iexp(A, lam, h):
    """Integral of e^{(A - lam I) s} ds over [0, h] for complex lam."""
    return iexp(A.astype(complex) - lam * np.eye(A.shape[0]), h)
