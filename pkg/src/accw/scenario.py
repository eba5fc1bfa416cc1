"""Cut-in scenario assembly and simulation.

Timeline (internal clock): the analysis window opens at t_start < 0,
the cut-in lands at t = 0, and the follower switches its feedback
source at t_s = max(t_start, theta - phi): before t_s it tracks the
original leader's state, after t_s the cut-in vehicle's (full feedback)
or applies the constant braking demand (worst-case braking).

Two integration paths are provided.  The stepped path (default) runs
the method-of-steps RK4 kernel on the combined 5-state
[ds_l, dv_l, ds_c, dv_c, a_f] and supports demand clamping.  The
analytic path evaluates the closed-form solution: leader-pair state by
its spectral mode sum, phase-1 follower state by exact matrix-
exponential convolution against those modes, and phase 2 either by
matrix-exponential propagation (braking) or by re-collocating the
spectral solution on the phase-1 record (full feedback).  The analytic
path is linear, so it ignores clamping; it reports in ``meta`` if the
demand left the clamp range.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from ._backend import backend_name, cutin_rk4
from ._matfuncs import iexp, shifted_iexp
from .errors import AccwError, NumericalError, ValidationError
from .forcing import PiecewiseConstant, stage_samples
from .spectral import DEFAULT_N, eval_response, free_coefficients, spectral_solve
from .system import ParamSet, build_system

FULL_FEEDBACK = "full_feedback"
WORST_CASE = "worst_case_braking"


@dataclass(frozen=True)
class CutInProfile:
    """Two-phase maneuver: a1 on (0, t1], a2 on (t1, t2), zero outside."""

    a1: float = -2.0
    t1: float = 2.0
    a2: float = 2.0
    t2: float = 5.0

    def __post_init__(self):
        if not (0 < self.t1 < self.t2):
            raise ValidationError(
                f"need 0 < t1 < t2, got t1={self.t1}, t2={self.t2}")

    def forcing(self):
        return PiecewiseConstant(breaks=(0.0, self.t1, self.t2),
                                 values=(self.a1, self.a2, 0.0))

    def speed(self, t, v_at_cutin):
        """Cut-in speed; constant before the maneuver and after t2."""
        t = np.asarray(t, dtype=float)
        dv1 = self.a1 * np.clip(t, 0.0, self.t1)
        dv2 = self.a2 * np.clip(t - self.t1, 0.0, self.t2 - self.t1)
        return v_at_cutin + dv1 + dv2

    def position(self, t, p_at_cutin, v_at_cutin):
        t = np.asarray(t, dtype=float)
        c1 = np.clip(t, 0.0, self.t1)
        c2 = np.clip(t - self.t1, 0.0, self.t2 - self.t1)
        p = p_at_cutin + v_at_cutin * t
        p = p + 0.5 * self.a1 * c1 ** 2 + self.a1 * self.t1 * np.clip(t - self.t1, 0.0, None)
        p = p + 0.5 * self.a2 * c2 ** 2 + self.a2 * (self.t2 - self.t1) * np.clip(t - self.t2, 0.0, None)
        return p


FLAT_PROFILE = CutInProfile(a1=0.0, t1=1.0, a2=0.0, t2=2.0)


def cutin_accel(profile: CutInProfile, t):
    """Pointwise maneuver acceleration: a1 on (0, t1], a2 on (t1, t2)."""
    if 0.0 < t <= profile.t1:
        return profile.a1
    if profile.t1 < t < profile.t2:
        return profile.a2
    return 0.0


@dataclass(frozen=True)
class InitialKinematics:
    """Leader/follower state at t_start; cut-in state at the cut-in instant."""

    pl0: float = 100.0
    vl0: float = 20.0
    pf0: float = 50.0
    vf0: float = 20.0
    af0: float = 0.0
    pc_cut: float = 110.0
    vc_cut: float = 20.0


@dataclass(frozen=True)
class ScenarioConfig:
    theta: float = 0.0
    phi: float = 0.0
    t_start: float = -1.0
    ufb: float = -5.0
    umax: float = 2.0
    clamp_demand: bool = True
    profile: CutInProfile = field(default_factory=CutInProfile)
    lprime: float = 3.0
    dt: float = 0.1
    mode: str = FULL_FEEDBACK
    horizon: float = 60.0
    init: InitialKinematics = field(default_factory=InitialKinematics)
    al: object = 0.0  # leader forcing: const or PiecewiseConstant
    anticipation_success: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.theta < 0 or self.phi < 0:
            raise ValidationError("theta and phi must be nonnegative")
        if self.t_start >= 0:
            raise ValidationError(f"t_start must be negative, got {self.t_start}")
        if self.ufb >= 0:
            raise ValidationError(f"ufb must be negative, got {self.ufb}")
        if self.dt <= 0 or self.lprime <= 0 or self.horizon <= 0:
            raise ValidationError("dt, lprime, horizon must be positive")
        if self.mode not in (FULL_FEEDBACK, WORST_CASE):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if not (0.0 <= self.anticipation_success <= 1.0):
            raise ValidationError("anticipation_success must be in [0, 1]")

    @property
    def switch_time(self):
        """Feedback switch instant, clamped into the analysis window."""
        return max(self.t_start, self.theta - self.phi)

    def initial_deviations(self, pi: ParamSet):
        """[ds_l, dv_l, ds_c, dv_c, a_f] at t_start for a parameter set."""
        k = self.init
        sstar = pi.equilibrium_spacing(k.vf0)
        pc_start = k.pc_cut + k.vc_cut * self.t_start
        return np.array([
            (k.pl0 - k.pf0) - sstar,
            k.vl0 - k.vf0,
            (pc_start - k.pf0) - sstar,
            k.vc_cut - k.vf0,
            k.af0,
        ])

    def with_deviations(self, ds_l, dv_l, ds_c, dv_c, pi: ParamSet,
                        vf0=None, pf0=0.0):
        """Config with kinematics rebuilt from deviations at t_start.

        The cut-in vehicle holds constant speed before the maneuver, so
        its cut-in-instant state follows from the deviations at t_start.
        """
        vf0 = self.init.vf0 if vf0 is None else vf0
        sstar = pi.equilibrium_spacing(vf0)
        vc = vf0 + dv_c
        pc_start = pf0 + ds_c + sstar
        init = InitialKinematics(
            pl0=pf0 + ds_l + sstar, vl0=vf0 + dv_l, pf0=pf0, vf0=vf0,
            af0=self.init.af0,
            pc_cut=pc_start - vc * self.t_start, vc_cut=vc,
        )
        return replace(self, init=init)

    def initial_gap(self, pi: ParamSet):
        """Physical clearance to the cut-in slot at t_start."""
        dev = self.initial_deviations(pi)
        return dev[2] + pi.equilibrium_spacing(self.init.vf0) - self.lprime


@dataclass
class Trajectory:
    """Time-indexed vehicle kinematics and deviation states."""

    times: np.ndarray
    pl: np.ndarray
    vl: np.ndarray
    al: np.ndarray
    pc: np.ndarray
    vc: np.ndarray
    ac: np.ndarray
    pf: np.ndarray
    vf: np.ndarray
    af: np.ndarray
    ds_l: np.ndarray
    dv_l: np.ndarray
    ds_c: np.ndarray
    dv_c: np.ndarray
    gap: np.ndarray
    meta: dict = field(default_factory=dict)

    CSV_COLUMNS = ("t", "p_l", "v_l", "a_l", "p_c", "v_c", "a_c",
                   "p_f", "v_f", "a_f", "ds_c", "dv_c", "gap")

    @property
    def collided(self):
        m = self.times > 0
        return bool(np.any(self.gap[m] <= 0.0))

    def rows(self, time_offset=0.0):
        cols = (self.times + time_offset, self.pl, self.vl, self.al,
                self.pc, self.vc, self.ac, self.pf, self.vf, self.af,
                self.ds_c, self.dv_c, self.gap)
        return zip(*cols)


def _leader_speed_position(al, t_start, vl0, pl0, times):
    """Closed-form leader kinematics under constant or piecewise forcing."""
    if isinstance(al, PiecewiseConstant):
        pieces = [(max(lo, t_start), hi, v) for lo, hi, v in al.pieces(np.inf)
                  if hi > t_start]
        vl = np.full_like(times, vl0, dtype=float)
        pl = pl0 + vl0 * (times - t_start)
        for lo, hi, a in pieces:
            dt1 = np.clip(times - lo, 0.0, hi - lo)
            vl = vl + a * dt1
            pl = pl + 0.5 * a * dt1 ** 2 + a * (hi - lo) * np.clip(times - hi, 0.0, None)
        alv = np.array([al(t) for t in times])
        return vl, pl, alv
    a = float(al)
    dt1 = times - t_start
    return (vl0 + a * dt1, pl0 + vl0 * dt1 + 0.5 * a * dt1 ** 2,
            np.full_like(times, a, dtype=float))


def _assemble(config, pi, times, Y, exit_code, n_done, method):
    prof = config.profile
    k = config.init
    vc = np.asarray(prof.speed(times, k.vc_cut))
    pc = np.asarray(prof.position(times, k.pc_cut, k.vc_cut))
    vf = vc - Y[:, 3]
    sc = Y[:, 2] + vf * pi.tau + pi.l
    pf = pc - sc
    gap = sc - config.lprime
    vl, pl, alv = _leader_speed_position(config.al, config.t_start, k.vl0,
                                         k.pl0, times)
    ac = np.array([cutin_accel(prof, t) for t in times])
    return Trajectory(
        times=times, pl=pl, vl=vl, al=alv, pc=pc, vc=vc, ac=ac,
        pf=pf, vf=vf, af=Y[:, 4],
        ds_l=Y[:, 0], dv_l=Y[:, 1], ds_c=Y[:, 2], dv_c=Y[:, 3],
        gap=gap,
        meta={"mode": config.mode, "theta": config.theta, "phi": config.phi,
              "ufb": config.ufb, "umax": config.umax,
              "clamp_demand": config.clamp_demand, "method": method,
              "exit_code": exit_code, "n_done": n_done,
              "backend": backend_name()},
    )


def _simulate_stepped(config, pi, early_exit):
    dt = config.dt
    theta = config.theta
    if 0.0 < theta < dt:
        raise ValidationError(
            f"stepped path needs theta = 0 or theta >= dt (theta={theta}, dt={dt})")
    n = int(round((config.horizon - config.t_start) / dt))
    times = config.t_start + dt * np.arange(n + 1)
    y0 = config.initial_deviations(pi)
    switch_idx = int(math.ceil((config.switch_time - config.t_start) / dt - 1e-9))
    cutin_idx = int(math.ceil((0.0 - config.t_start) / dt - 1e-9))
    safe_idx = int(math.ceil((config.profile.t2 - config.t_start) / dt - 1e-9)) + 1

    ac_s, ac_m, ac_e = stage_samples(config.profile.forcing(), config.t_start, dt, n)
    al_s, al_m, al_e = stage_samples(config.al, config.t_start, dt, n)
    vc = np.asarray(config.profile.speed(times, config.init.vc_cut))

    Y, n_done, exit_code = cutin_rk4(
        pi.tau, pi.TL, pi.ks, pi.kv, pi.ka, theta, dt, n, switch_idx,
        1 if config.mode == WORST_CASE else 0,
        config.ufb, config.umax, 1 if config.clamp_demand else 0,
        y0, ac_s, ac_m, ac_e, al_s, al_m, al_e, vc,
        pi.l, config.lprime, 1 if early_exit else 0, cutin_idx, safe_idx)
    if exit_code == 3:
        raise NumericalError("state blew up during stepped simulation "
                             "(unstable configuration)")
    return _assemble(config, pi, times[: n_done + 1], Y, exit_code, n_done,
                     "stepped")


def _simulate_analytic(config, pi, N):
    if isinstance(config.al, PiecewiseConstant) or float(config.al) != 0.0:
        raise ValidationError("analytic path requires zero leader forcing")
    sys = build_system(pi)
    theta, tl, ts = config.theta, config.t_start, config.switch_time
    if theta <= 0:
        raise ValidationError("analytic path requires theta > 0; "
                              "use the stepped path for theta = 0")
    A, BK, D = sys.A, sys.BK, sys.D.ravel()
    B = sys.B.ravel()
    y0 = config.initial_deviations(pi)
    xl0, xc0 = y0[[0, 1, 4]], y0[[2, 3, 4]]

    sol_l = spectral_solve(sys, theta, N)
    free_coefficients(sol_l, xl0, xl0)  # frozen constant preshape
    prof_pieces = config.profile.forcing().pieces(np.inf)

    def xc_phase1(t):
        """Exact convolution of the delayed leader-pair feedback."""
        out = expm(A * (t - tl)) @ xc0
        lo_frozen, hi_frozen = tl, min(t, tl + theta)
        if hi_frozen > lo_frozen:
            blk = iexp(A, t - lo_frozen) - iexp(A, t - hi_frozen)
            out = out + blk @ (BK @ xl0)
        if t > tl + theta:
            for m, c in zip(sol_l.modes, sol_l.mode_coeffs):
                w = BK @ (c * 1.0)
                term = np.exp(m.lam * (t - theta - tl)) * (
                    shifted_iexp(A, m.lam, t - tl - theta) @ w)
                out = out + term
        for (p1, p2, a) in prof_pieces:
            lo, hi = max(p1, tl), min(p2, t)
            if hi > lo:
                out = out + a * ((iexp(A, t - lo) - iexp(A, t - hi)) @ D)
        im = float(np.max(np.abs(np.asarray(out).imag)))
        if im > sol_l.im_tol:
            raise NumericalError(f"imaginary residue {im:.2e} in phase-1 state")
        return np.asarray(out).real

    n = int(round((config.horizon - tl) / config.dt))
    times = tl + config.dt * np.arange(n + 1)
    states = np.empty((n + 1, 3))
    pre = times <= ts + 1e-12
    for i in np.where(pre)[0]:
        states[i] = xc_phase1(times[i])
    x_switch = xc_phase1(ts)

    post_idx = np.where(~pre)[0]
    if config.mode == WORST_CASE:
        for i in post_idx:
            t = times[i]
            out = expm(A * (t - ts)) @ x_switch + iexp(A, t - ts) @ (B * config.ufb)
            for (p1, p2, a) in prof_pieces:
                lo, hi = max(p1, ts), min(p2, t)
                if hi > lo:
                    out = out + a * ((iexp(A, t - lo) - iexp(A, t - hi)) @ D)
            states[i] = out.real
    else:
        sol_c = spectral_solve(sys, theta, N)
        hist = lambda x: (xc_phase1(ts + x) if ts + x > tl else xc0)
        free_coefficients(sol_c, hist, x_switch)
        shifted = [(p1 - ts, p2 - ts, a) for (p1, p2, a) in prof_pieces
                   if p2 > ts]
        shifted = [(max(p1, 0.0), p2, a) for (p1, p2, a) in shifted]
        forcing = None
        if shifted:
            breaks, vals = [], []
            for (p1, p2, a) in shifted:
                breaks.append(p1)
                vals.append(a)
            breaks.append(shifted[-1][1])
            vals.append(0.0)
            forcing = PiecewiseConstant(breaks=tuple(breaks), values=tuple(vals))
        if post_idx.size:
            states[post_idx] = eval_response(sol_c, forcing, times[post_idx] - ts)

    # 5-state assembly: leader-pair block from its own mode sum
    Y = np.empty((n + 1, 5))
    before = times <= tl + 1e-12
    Y[before, 0], Y[before, 1] = xl0[0], xl0[1]
    if (~before).any():
        vals = eval_response(sol_l, None, times[~before] - tl)
        Y[~before, 0] = vals[:, 0]
        Y[~before, 1] = vals[:, 1]
    Y[:, 2:4] = states[:, :2]
    Y[:, 4] = states[:, 2]

    traj = _assemble(config, pi, times, Y, 0, n, "analytic")
    if config.mode == FULL_FEEDBACK and config.clamp_demand:
        demand = _grid_demand(config, pi, times, Y)
        if np.any(demand < config.ufb - 1e-9) or np.any(demand > config.umax + 1e-9):
            traj.meta["demand_out_of_clamp"] = True
    return traj


def _grid_demand(config, pi, times, Y):
    """Feedback demand sampled on the grid (nearest-node delayed state)."""
    theta = config.theta
    dt = config.dt
    K = np.array([pi.ks, pi.kv, pi.ka])
    lag = int(round(theta / dt))
    u = np.empty(len(times))
    for i, t in enumerate(times):
        j = max(0, i - lag)
        src = (Y[j, 0], Y[j, 1], Y[j, 4]) if t < config.switch_time else (
            Y[j, 2], Y[j, 3], Y[j, 4])
        u[i] = K[0] * src[0] + K[1] * src[1] + K[2] * src[2]
    return u


def simulate(config: ScenarioConfig, pi: ParamSet, method="stepped",
             early_exit=False, N=DEFAULT_N) -> Trajectory:
    """Run the cut-in scenario for one parameter set.

    method "stepped" (default) uses the RK4 kernel; "analytic" uses the
    closed-form path and falls back to stepped, with a notice in
    ``meta["analytic_fallback"]``, if a spectral solve fails.
    """
    if method == "stepped":
        return _simulate_stepped(config, pi, early_exit)
    if method == "analytic":
        try:
            return _simulate_analytic(config, pi, N)
        except (NumericalError, ValidationError) as exc:
            traj = _simulate_stepped(config, pi, early_exit)
            traj.meta["analytic_fallback"] = str(exc)
            return traj
    raise ValidationError(f"unknown method {method!r}")


def min_gap(traj: Trajectory, t_min=0.0):
    """Minimum clearance to the cut-in vehicle from t_min on.

    Parabolic refinement through the discrete minimum and its neighbors
    recovers the between-sample minimum of the smooth gap signal.
    """
    m = traj.times >= t_min
    if not m.any():
        raise ValidationError("trajectory has no samples at t >= t_min")
    g = traj.gap[m]
    i = int(np.argmin(g))
    if 0 < i < len(g) - 1:
        y0, y1, y2 = g[i - 1], g[i], g[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom > 0:
            delta = 0.5 * (y0 - y2) / denom
            if abs(delta) <= 1.0:
                return float(y1 - 0.25 * (y0 - y2) * delta)
    return float(g[i])
