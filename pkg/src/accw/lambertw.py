"""Complex Lambert W function on arbitrary integer branches.

``scalar_w`` evaluates w_k(y), the branch-k solution of w * exp(w) = y,
by Halley iteration from a branch-aware seed.  ``matrix_w`` lifts it to
diagonalizable 3x3 (or general n x n) complex matrices through the
eigendecomposition M = V diag(lam) V^-1, applying scalar_w eigenvalue by
eigenvalue.

Rank-deficient inputs need care on branches k != 0: w_k(0) diverges, so
matrix_w either rejects the matrix (default) or, with
``zero_mode_policy="principal"``, routes numerically-zero eigenvalues
through the principal branch.  The latter is what the delay-equation
solver uses, since its arguments are rank-1 by construction and carry a
structural repeated zero eigenvalue.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DefectiveMatrixError, ValidationError

# branch point -1/e and its Euler factor
_BRANCH_POINT = -0.36787944117144233
_E = 2.718281828459045

TOL_W = 1e-12
MAX_ITER = 100


@dataclass(frozen=True)
class MatrixWResult:
    """Branch-k matrix Lambert W of a diagonalizable complex matrix."""

    value: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    condition_estimate: float
    residual: float


def _halley(w, y, tol, max_iter):
    """Polish a seed with Halley's method; returns (w, residual)."""
    scale = max(1.0, abs(y))
    res = abs(w * np.exp(w) - y)
    for _ in range(max_iter):
        if res <= tol * scale:
            return w, res
        ew = np.exp(w)
        f = w * ew - y
        w1 = w + 1.0
        if w1 == 0:
            w1 = 1e-300
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w = w - dw
        res = abs(w * np.exp(w) - y)
    if res <= tol * scale:
        return w, res
    raise ConvergenceError(
        f"Lambert W iteration stalled at residual {res:.3e}", residual=res
    )


def _seed(k, y):
    """Branch-aware initial guess for w_k(y)."""
    if k == 0:
        # near the branch point the 0-series misleads: check it first
        if abs(y - _BRANCH_POINT) < 0.35:
            p = np.sqrt(2.0 * (_E * y + 1.0))
            return -1.0 + p - p * p / 3.0
        if abs(y - _E) < 0.5:
            return 1.0 + 0j
        if abs(y) < 0.4:
            # series around 0: w = y - y^2 + 1.5 y^3 ...
            return y * (1.0 - y + 1.5 * y * y)
        L = np.log(y + 0j)
        return L - np.log(L) if L != 0 else 0.5 + 0j
    if k == -1 and y.imag == 0.0 and _BRANCH_POINT <= y.real < 0.0:
        # real branch -1 on [-1/e, 0)
        if abs(y - _BRANCH_POINT) < 0.35:
            p = -np.sqrt(2.0 * (_E * y.real + 1.0))
            return complex(-1.0 + p - p * p / 3.0)
        Lr = np.log(-y.real)
        return complex(Lr - np.log(-Lr))
    L = np.log(y + 0j) + 2j * np.pi * k
    return L - np.log(L)


def scalar_w(y, k=0, tol=TOL_W, max_iter=MAX_ITER):
    """Branch-k Lambert W of a complex scalar.

    Parameters
    ----------
    y : complex
        Argument; must be finite.
    k : int
        Branch index.  Any integer.  y = 0 is only defined on the two
        real branches: w_0(0) = 0 and w_-1(0) = -inf.

    Returns
    -------
    complex
        w with ``abs(w * exp(w) - y) <= tol * max(1, abs(y))``.
    """
    y = complex(y)
    if not np.isfinite(y):
        raise ValidationError(f"Lambert W argument must be finite, got {y}")
    if y == 0:
        if k == 0:
            return 0j
        if k == -1:
            return complex(-np.inf, 0.0)
        raise ValidationError(f"w_{k}(0) diverges; branch {k} is undefined at 0")
    # exact branch point: both real branches meet at -1
    if k in (0, -1) and y.imag == 0.0 and abs(y.real - _BRANCH_POINT) < 5e-17:
        return complex(-1.0)
    w, res = _halley(_seed(k, y), y, tol, max_iter)
    # on (-1/e, 0) the two real branches split at -1; enforce the split
    if y.imag == 0.0 and _BRANCH_POINT < y.real < 0.0 and k in (0, -1):
        w = complex(w.real)  # real data, real branch
        if (k == 0 and w.real < -1.0) or (k == -1 and w.real > -1.0):
            raise ConvergenceError(
                f"iteration landed on the wrong real branch for k={k}, "
                f"y={y.real}", residual=res,
            )
    return w


def matrix_w(M, k=0, tol=TOL_W, max_iter=MAX_ITER, cond_threshold=1e8,
             roundtrip_tol=1e-9, zero_mode_policy="error", zero_tol=1e-9):
    """Branch-k matrix Lambert W via eigendecomposition.

    Parameters
    ----------
    M : (n, n) array_like
        Complex matrix, diagonalizable within ``cond_threshold``.
    zero_mode_policy : {"error", "principal"}
        What to do with numerically-zero eigenvalues when k != 0:
        refuse the input, or evaluate them on the principal branch
        (appropriate for structurally rank-deficient arguments).

    Returns
    -------
    MatrixWResult
        ``value @ expm(value)`` reproduces M within
        ``roundtrip_tol * max(1, ||M||_F)``.
    """
    from scipy.linalg import expm

    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"matrix_w expects a square matrix, got {M.shape}")
    lam, V = np.linalg.eig(M)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > cond_threshold:
        raise DefectiveMatrixError(
            f"eigenvector condition {cond:.2e} exceeds {cond_threshold:.1e}; "
            "matrix is too close to defective",
            condition_estimate=cond,
        )
    scale = max(1.0, float(np.linalg.norm(M, "fro")))
    w = np.empty_like(lam)
    for i, li in enumerate(lam):
        if k != 0 and abs(li) <= zero_tol * scale:
            if zero_mode_policy == "principal":
                w[i] = scalar_w(li, 0, tol, max_iter)
            else:
                raise ValidationError(
                    f"eigenvalue {li:.2e} is numerically zero; branch {k} "
                    "diverges there (pass zero_mode_policy='principal' for "
                    "structurally rank-deficient inputs)"
                )
        else:
            w[i] = scalar_w(li, k, tol, max_iter)
    W = V @ np.diag(w) @ np.linalg.inv(V)
    residual = float(np.linalg.norm(W @ expm(W) - M, "fro"))
    if residual > roundtrip_tol * scale:
        raise ConvergenceError(
            f"matrix Lambert W round-trip residual {residual:.2e} exceeds "
            f"{roundtrip_tol:.1e} * {scale:.2e}",
            residual=residual,
        )
    return MatrixWResult(
        value=W,
        eigenvalues=lam,
        eigenvectors=V,
        condition_estimate=cond,
        residual=residual,
    )
