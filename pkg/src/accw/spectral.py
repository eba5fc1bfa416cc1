"""Branch solutions and the spectral response of the delayed system.

For x'(t) = A x(t) + BK x(t - theta) + D f(t), each integer branch k
carries a matrix pair (Q_k, S_k):

    W_k(BK theta Q_k) e^{W_k(BK theta Q_k) + A theta} = BK theta
    S_k = W_k(BK theta Q_k) / theta + A

Every eigenvalue of every S_k is a characteristic root, i.e. a zero of
det(s I - A - BK e^{-s theta}).  Because BK has rank one the branch
matrices share a common eigenpair, so the branch family is assembled
into a table of distinct characteristic modes (conjugate-completed) and
response coefficients are computed per mode by the residue projection

    c_lam = v psi* (x0 + BK int_{-theta}^0 e^{-lam(xi+theta)} phi(xi) dxi)
            / (psi* (I + theta BK e^{-lam theta}) v)

with v, psi the right/left null vectors of the characteristic matrix.
Per-branch coefficient blocks (one 3-vector and one 3x3 kernel block per
branch) are recovered by assigning each mode to the first branch that
carries it.  The alternative node-collocation fit over the grid
-j theta / (2N) is provided as ``method="collocation"``; for rank-one
BK its block matrix is structurally rank-deficient and is solved in the
least-squares sense, with the node residual reported.

The forced response uses a hybrid kernel: the fundamental solution is
exact piecewise matrix algebra on [0, 2 theta] and a mode sum beyond,
which keeps the convolution accurate near forcing discontinuities.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ._matfuncs import fundamental_integral
from .errors import CollocationError, ConvergenceError, NumericalError, ValidationError
from .forcing import PiecewiseConstant
from .lambertw import matrix_w
from .system import SystemMatrices

TOL_Q = 1e-9
TOL_C = 1e-6
IM_TOL = 1e-4
DEFAULT_N = 10


@dataclass(frozen=True)
class BranchSolution:
    """Converged (Q_k, S_k) pair for one branch."""

    k: int
    Q: np.ndarray
    W: np.ndarray
    S: np.ndarray
    residual: float
    char_residual: float
    eigenvalues: np.ndarray
    conjugate_completion: bool = False


@dataclass(frozen=True)
class Mode:
    """One distinct characteristic root with its residue data."""

    lam: complex
    v: np.ndarray
    P: np.ndarray
    owner: int  # index into SpectralSolution.branches


def _defining_residual(W, A, BK, theta):
    return W @ expm(W + A * theta) - BK * theta


def _char_residual(S, A, BK, theta):
    return float(np.linalg.norm(S - A - BK @ expm(-S * theta), "fro"))


def solve_branch(sys: SystemMatrices, theta, k, tol=TOL_Q, max_iter=60) -> BranchSolution:
    """Solve the branch-k matrix pair by damped Newton iteration on Q_k.

    Starts from Q = I; the Newton step is the least-squares solution of
    the finite-difference Jacobian system (the map depends on Q only
    through the rank-one product BK Q, so the Jacobian is structurally
    rank-deficient).  Falls back to a Levenberg-Marquardt polish on
    stagnation.
    """
    if theta <= 0:
        raise ValidationError(f"theta must be positive, got {theta}")
    A, BK = sys.A, sys.BK
    n = A.shape[0]

    def w_of(Q):
        M = BK @ Q * theta
        return matrix_w(M, k, zero_mode_policy="principal").value

    def F(Q):
        return _defining_residual(w_of(Q), A, BK, theta)

    def pack(Z):
        return np.concatenate([Z.real.ravel(), Z.imag.ravel()])

    def unpack(x):
        m = n * n
        return x[:m].reshape(n, n) + 1j * x[m:].reshape(n, n)

    fd_step = 1e-7

    def newton(x):
        stall = 0
        res = np.inf
        for _ in range(max_iter):
            try:
                r = pack(F(unpack(x)))
            except NumericalError:
                return x, np.inf
            res = float(np.linalg.norm(r))
            if res <= tol:
                return x, res
            J = np.empty((2 * n * n, 2 * n * n))
            for j in range(2 * n * n):
                xp = x.copy()
                xp[j] += fd_step
                try:
                    J[:, j] = (pack(F(unpack(xp))) - r) / fd_step
                except NumericalError:
                    return x, res
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            lam = 1.0
            new_res = np.inf
            for _ in range(30):
                try:
                    new_res = float(np.linalg.norm(pack(F(unpack(x + lam * step)))))
                except NumericalError:
                    new_res = np.inf
                if new_res < res:
                    break
                lam *= 0.5
            stall = stall + 1 if new_res > 0.995 * res else 0
            x = x + lam * step
            if stall >= 4:
                return x, new_res
        return x, res

    # seed ladder: the identity start can land the rank-one eigenvalue
    # exactly on the branch cut, where the map is not differentiable;
    # tilted seeds push it off to either side
    eye = np.eye(n, dtype=complex)
    seeds = [eye, eye * (1 - 0.1j), eye * (1 + 0.1j), 0.5 * eye, 2.0 * eye]
    x, res = None, np.inf
    for seed in seeds:
        xs, rs = newton(pack(seed))
        if rs < res:
            x, res = xs, rs
        if res <= tol:
            break

    if res > tol:
        # Levenberg-Marquardt polish from wherever Newton stopped
        from scipy.optimize import least_squares

        def packed_residual(z):
            try:
                return pack(F(unpack(z)))
            except NumericalError:
                return np.full(2 * n * n, 1e6)

        sol = least_squares(packed_residual, x, method="lm", xtol=1e-15,
                            ftol=1e-15, gtol=1e-15, max_nfev=4000)
        x = sol.x
        res = float(np.linalg.norm(packed_residual(x)))
    if res > tol:
        raise ConvergenceError(
            f"branch {k}: residual {res:.3e} above tolerance {tol:.1e}",
            residual=res)

    Q = unpack(x)
    W = w_of(Q)
    S = W / theta + A
    return BranchSolution(
        k=k, Q=Q, W=W, S=S,
        residual=float(np.linalg.norm(_defining_residual(W, A, BK, theta), "fro")),
        char_residual=_char_residual(S, A, BK, theta),
        eigenvalues=np.linalg.eigvals(S),
    )


def _conjugate_branch(b: BranchSolution) -> BranchSolution:
    return BranchSolution(
        k=b.k, Q=np.conj(b.Q), W=np.conj(b.W), S=np.conj(b.S),
        residual=b.residual, char_residual=b.char_residual,
        eigenvalues=np.conj(b.eigenvalues), conjugate_completion=True,
    )


def _char_mode(A, BK, theta, lam):
    """Right/left null vectors and residue projector at a simple root."""
    n = A.shape[0]
    Delta = lam * np.eye(n) - A - BK * np.exp(-lam * theta)
    U, s, Vh = np.linalg.svd(Delta)
    v = Vh[-1].conj()
    psi = U[:, -1].conj()
    dDelta = np.eye(n) + theta * BK * np.exp(-lam * theta)
    norm = psi @ dDelta @ v
    if abs(norm) < 1e-12:
        raise NumericalError(
            f"characteristic root {lam:.6g} looks non-simple "
            f"(normalization {abs(norm):.2e})")
    return Mode(lam=lam, v=v, P=np.outer(v, psi) / norm, owner=-1)


@dataclass
class SpectralSolution:
    """Branch family, mode table, and (optional) response coefficients."""

    sys: SystemMatrices
    theta: float
    N: int
    branches: list
    modes: list
    mode_coeffs: np.ndarray | None = None  # (n_modes, 3) free coefficients
    node_residual: float | None = None
    coeff_method: str | None = None
    im_tol: float = IM_TOL
    _Yu_cache: dict = field(default_factory=dict, repr=False)

    # -- per-branch views of the coefficients (one block per branch) --

    def C_I(self):
        """Free-response coefficient vectors keyed by branch position."""
        if self.mode_coeffs is None:
            raise ValidationError("free coefficients not computed yet")
        out = [np.zeros(3, complex) for _ in self.branches]
        for m, c in zip(self.modes, self.mode_coeffs):
            out[m.owner] = out[m.owner] + c
        return out

    def C_N(self):
        """Forced-kernel coefficient blocks keyed by branch position."""
        out = [np.zeros((3, 3), complex) for _ in self.branches]
        for m in self.modes:
            out[m.owner] = out[m.owner] + m.P
        return out

    def rightmost(self):
        """Eigenvalue with the largest real part across all branches."""
        lams = np.concatenate([b.eigenvalues for b in self.branches])
        return lams[np.argmax(lams.real)]

    # -- forced-response kernel --

    def _Y(self, u):
        """Integral over [0, u] of the fundamental solution (hybrid)."""
        A, BK = self.sys.A, self.sys.BK
        ustar = 2.0 * self.theta
        if u <= ustar:
            key = round(u, 12)
            got = self._Yu_cache.get(key)
            if got is None:
                got = fundamental_integral(A, BK, self.theta, u).astype(complex)
                self._Yu_cache[key] = got
            return got
        base = self._Y(ustar).copy()
        for m in self.modes:
            base += m.P * ((np.exp(m.lam * u) - np.exp(m.lam * ustar)) / m.lam)
        return base


def spectral_solve(sys: SystemMatrices, theta, N=DEFAULT_N, tol=TOL_Q) -> SpectralSolution:
    """Solve branches -N..N, conjugate-complete them, and build the mode table."""
    branches = [solve_branch(sys, theta, k, tol=tol) for k in range(-N, N + 1)]

    def all_eigs(bs):
        return np.concatenate([b.eigenvalues for b in bs])

    # add conjugated branches for any root whose partner is absent
    tol_eig = 1e-6
    eigs = all_eigs(branches)
    for bi in list(range(len(branches))):
        missing = [
            lam for lam in branches[bi].eigenvalues
            if np.min(np.abs(eigs - np.conj(lam))) > tol_eig * max(1.0, abs(lam))
        ]
        if missing:
            branches.append(_conjugate_branch(branches[bi]))
            eigs = all_eigs(branches)

    # distinct characteristic roots, each owned by its first branch
    modes = []
    seen = []
    for bi, b in enumerate(branches):
        for lam in b.eigenvalues:
            if any(abs(lam - s) <= tol_eig * max(1.0, abs(lam)) for s in seen):
                continue
            seen.append(lam)
            m = _char_mode(sys.A, sys.BK, theta, lam)
            modes.append(Mode(lam=m.lam, v=m.v, P=m.P, owner=bi))
    return SpectralSolution(sys=sys, theta=theta, N=N, branches=branches,
                            modes=modes)


# -- coefficient computation -------------------------------------------------


def _gauss_nodes(theta, lam, cache={}):
    n = max(48, 8 * int(math.ceil(abs(lam.imag) * theta / (2 * math.pi))) + 24)
    got = cache.get(n)
    if got is None:
        x, w = np.polynomial.legendre.leggauss(n)
        cache[n] = got = (x, w)
    return got


def _history_integral(theta, lam, history):
    """Quadrature of e^{-lam (xi + theta)} phi(xi) over [-theta, 0]."""
    x, w = _gauss_nodes(theta, lam)
    xi = -theta / 2.0 + x * (theta / 2.0)
    ww = w * (theta / 2.0)
    acc = np.zeros(3, complex)
    for xx, wgt in zip(xi, ww):
        acc += wgt * np.exp(-lam * (xx + theta)) * np.asarray(history(xx), dtype=float)
    return acc


def free_coefficients(sol: SpectralSolution, history, x_at_0,
                      method="residues", tol_c=TOL_C, strict=False,
                      cond_switch=1e10):
    """Determine the free-response coefficients from the preshape.

    Parameters
    ----------
    history : callable, 3-vector, or None
        Preshape on [-theta, 0); None means zero.
    x_at_0 : 3-vector
        State at time zero.
    method : {"residues", "collocation"}
        Residue projection per characteristic mode (default), or the
        block node-collocation system over -j theta/(2N).  The latter is
        rank-deficient for rank-one BK and solved in the least-squares
        sense once its condition estimate passes ``cond_switch``.
    strict : bool
        Raise CollocationError when the node reconstruction residual
        exceeds ``tol_c``.  Preshapes outside the span of the retained
        modes (e.g. a constant that is not an equilibrium) cannot be
        reproduced exactly at the nodes by any finite mode family, so
        the default only records the residual.

    Returns
    -------
    list of per-branch coefficient vectors, ordered like sol.branches.
    """
    x0 = np.zeros(3) if x_at_0 is None else np.asarray(x_at_0, dtype=float)
    hist_fn = _as_history(history)

    if method == "residues":
        BK = sol.sys.BK
        coeffs = np.empty((len(sol.modes), 3), complex)
        for i, m in enumerate(sol.modes):
            if hist_fn is None:
                coeffs[i] = m.P @ x0
            else:
                coeffs[i] = m.P @ (x0 + BK @ _history_integral(sol.theta, m.lam, hist_fn))
        sol.mode_coeffs = coeffs
    elif method == "collocation":
        G, nodes = _collocation_matrix(sol)
        rhs = np.zeros(3 * len(nodes))
        rhs[:3] = x0
        for j, tj in enumerate(nodes[1:], start=1):
            rhs[3 * j:3 * j + 3] = 0.0 if hist_fn is None else hist_fn(tj)
        C = _solve_collocation(G, rhs, cond_switch)
        # convert per-branch blocks to per-mode coefficients via ownership
        sol.mode_coeffs = _branch_to_modes(sol, C)
    else:
        raise ValidationError(f"unknown coefficient method {method!r}")

    sol.coeff_method = method
    sol.node_residual = reconstruction_residual(sol, history, x0)
    if strict and sol.node_residual > tol_c:
        raise CollocationError(
            f"node reconstruction residual {sol.node_residual:.3e} exceeds "
            f"{tol_c:.1e}; the preshape is outside the retained mode span "
            "(smaller N will not help; this is structural for rank-one BK)",
            residual=sol.node_residual)
    return sol.C_I()


def forced_coefficients(sol: SpectralSolution):
    """Per-branch forced-kernel blocks (residue projectors by ownership)."""
    return sol.C_N()


def _as_history(history):
    if history is None:
        return None
    if callable(history):
        return history
    h = np.asarray(history, dtype=float)
    if not h.any():
        return None
    return lambda t: h


def _collocation_matrix(sol: SpectralSolution):
    N = sol.N
    nodes = [-j * sol.theta / (2 * N) for j in range(2 * N + 1)]
    nb = len(sol.branches)
    G = np.zeros((3 * len(nodes), 3 * nb), complex)
    for j, tj in enumerate(nodes):
        for m, b in enumerate(sol.branches):
            G[3 * j:3 * j + 3, 3 * m:3 * m + 3] = expm(b.S * tj)
    return G, nodes

def _solve_collocation(G, rhs, cond_switch):
    cond = np.linalg.cond(G)
    if np.isfinite(cond) and cond <= cond_switch:
        return np.linalg.solve(G, rhs)
    C, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    return C


def _branch_to_modes(sol, C):
    """Split per-branch collocation blocks into per-mode coefficients."""
    coeffs = np.zeros((len(sol.modes), 3), complex)
    for bi, b in enumerate(sol.branches):
        cb = C[3 * bi:3 * bi + 3]
        lam_b, V_b = np.linalg.eig(b.S)
        dual = np.linalg.inv(V_b)
        for i, m in enumerate(sol.modes):
            hits = np.where(np.abs(lam_b - m.lam) <= 1e-6 * max(1.0, abs(m.lam)))[0]
            if len(hits):
                j = hits[0]
                coeffs[i] += V_b[:, j] * (dual[j] @ cb)
    return coeffs


def reconstruction_residual(sol: SpectralSolution, history, x_at_0):
    """Max node error of the free reconstruction on the collocation grid."""
    if sol.mode_coeffs is None:
        raise ValidationError("free coefficients not computed yet")
    hist_fn = _as_history(history)
    x0 = np.zeros(3) if x_at_0 is None else np.asarray(x_at_0, dtype=float)
    N = sol.N
    nodes = [-j * sol.theta / (2 * N) for j in range(2 * N + 1)]
    worst = 0.0
    for tj in nodes:
        target = x0 if tj == 0.0 else (np.zeros(3) if hist_fn is None else np.asarray(hist_fn(tj), float))
        got = np.zeros(3, complex)
        for m, c in zip(sol.modes, sol.mode_coeffs):
            got += np.exp(m.lam * tj) * c
        worst = max(worst, float(np.max(np.abs(got - target))))
    return worst


# -- response evaluation -----------------------------------------------------


def _forcing_pieces(forcing, t_end, dt_fallback):
    if forcing is None:
        return []
    if isinstance(forcing, PiecewiseConstant):
        return forcing.pieces(t_end)
    if callable(forcing):
        # sample-and-hold at midpoints on a uniform grid
        n = int(math.ceil(t_end / dt_fallback))
        out = []
        for i in range(n):
            lo, hi = i * dt_fallback, min((i + 1) * dt_fallback, t_end)
            v = float(forcing(lo + 0.5 * (hi - lo)))
            if v != 0.0:
                out.append((lo, hi, v))
        return out
    v = float(forcing)
    return [] if v == 0.0 else [(0.0, t_end, v)]


def eval_response(sol: SpectralSolution, forcing, t, im_tol=None,
                  dt_fallback=0.01):
    """State at time t >= 0: free mode sum plus forced convolution.

    The imaginary residue of the summed state must stay below im_tol
    (default sol.im_tol); larger residue signals too few branches or
    inconsistent coefficients and raises NumericalError.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValidationError("eval_response requires t >= 0")
    if sol.mode_coeffs is None:
        raise ValidationError("free coefficients not computed yet")
    im_tol = sol.im_tol if im_tol is None else im_tol

    out = np.zeros((len(ts), 3), complex)
    for m, c in zip(sol.modes, sol.mode_coeffs):
        out += np.exp(m.lam * ts)[:, None] * c[None, :]

    pieces = _forcing_pieces(forcing, float(ts.max(initial=0.0)), dt_fallback)
    if pieces:
        D = sol.sys.D.ravel()
        ustar = 2.0 * sol.theta
        for (e1, e2, a) in pieces:
            mask = ts > e1
            if not mask.any():
                continue
            tt = ts[mask]
            u1 = tt - e1
            u2 = np.maximum(tt - e2, 0.0)
            add = np.zeros((len(tt), 3), complex)
            # modal tail where both endpoints clear the exact window
            for m in sol.modes:
                lam = m.lam
                PD = m.P @ D
                y1 = np.where(u1 > ustar,
                              (np.exp(lam * u1) - np.exp(lam * ustar)) / lam, 0.0)
                y2 = np.where(u2 > ustar,
                              (np.exp(lam * u2) - np.exp(lam * ustar)) / lam, 0.0)
                add += (y1 - y2)[:, None] * PD[None, :]
            # exact near-field part (clipped at ustar)
            for i, (a1u, a2u) in enumerate(zip(u1, u2)):
                Y1 = sol._Y(min(a1u, ustar))
                Y2 = sol._Y(min(a2u, ustar))
                add[i] += (Y1 - Y2) @ D
            out[mask] += a * add

    im = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if im > im_tol:
        raise NumericalError(
            f"imaginary residue {im:.3e} exceeds {im_tol:.1e}: increase the "
            "branch count or recompute the coefficients")
    res = out.real
    return res[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else res
