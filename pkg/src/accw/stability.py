"""Asymptotic stability classification, with and without sensing delay.

Without delay the three eigenvalues of A + BK decide.  With delay the
rightmost eigenvalue over the branch matrices S_0, S_1, S_-1 decides
(conjecture for non-commuting BK and A, cross-checked here by a
time-domain growth classification of a canonical perturbation).
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import dde3_rk4
from .errors import AccwError, ValidationError
from .spectral import solve_branch
from .system import ParamSet, SystemMatrices, build_system

GROWTH_RATE_BAND = 1e-3  # |rate| below this is "marginal"


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    rightmost_real_part: float
    witnesses: tuple  # (branch k, eigenvalue) pairs achieving the max
    method: str  # no_delay_eig | lambert_branches | oracle_growth


def stable_no_delay(pi: ParamSet, margin=0.0) -> StabilityVerdict:
    """Classify by the eigenvalues of A + BK."""
    sys = build_system(pi)
    lams = np.linalg.eigvals(sys.no_delay_matrix)
    top = float(np.max(lams.real))
    wit = tuple((0, lam) for lam in lams if lam.real >= top - 1e-12)
    return StabilityVerdict(stable=top < -margin, rightmost_real_part=top,
                            witnesses=wit, method="no_delay_eig")


def stable_with_delay(pi: ParamSet, theta, margin=0.0,
                      branch_ks=(0, 1, -1)) -> StabilityVerdict:
    """Classify by the rightmost eigenvalue over branches 0, +1, -1."""
    if theta <= 0:
        raise ValidationError(f"theta must be positive, got {theta}")
    sys = build_system(pi)
    pairs = []
    for k in branch_ks:
        try:
            b = solve_branch(sys, theta, k)
        except AccwError as exc:
            raise type(exc)(f"branch {k}: {exc}") from exc
        pairs.extend((k, lam) for lam in b.eigenvalues)
    top = max(lam.real for _, lam in pairs)
    wit = tuple((k, lam) for k, lam in pairs if lam.real >= top - 1e-9)
    return StabilityVerdict(stable=top < -margin, rightmost_real_part=float(top),
                            witnesses=wit, method="lambert_branches")


def growth_rate(sys: SystemMatrices, theta, horizon=200.0, dt=0.01,
                fit_window=100.0, blocks=10):
    """Envelope growth rate of a canonical perturbation, 1/s.

    Integrates the free system from x = [1, 0, 0] (constant preshape)
    over ``horizon`` and fits a line to the log of block-maximum state
    norms over the trailing ``fit_window``.  Unstable systems are
    rescaled chunk by chunk, which is exact for a linear system, so the
    rate survives floating-point range limits.
    """
    chunk = 10.0
    n_chunks = int(round(horizon / chunk))
    n = int(round(chunk / dt))
    m = int(math.ceil(theta / dt - 1e-12)) + 1 if theta > 0 else 1
    hist = np.tile(np.array([1.0, 0.0, 0.0]), (m, 1))
    zeros = np.zeros(n)
    A = np.ascontiguousarray(sys.A)
    BK = np.ascontiguousarray(sys.BK)
    d = sys.D.ravel()

    log_offset = 0.0
    times, norms = [], []
    t_base = 0.0
    for _ in range(n_chunks):
        out = dde3_rk4(A, BK, d, theta, dt, n, hist, zeros, zeros, zeros)
        seg = out[m - 1:]
        nrm = np.linalg.norm(seg, axis=1)
        if not np.all(np.isfinite(nrm)):
            return np.inf
        times.append(t_base + dt * np.arange(len(seg)))
        norms.append(np.log(np.maximum(nrm, 1e-300)) + log_offset)
        t_base += chunk
        peak = float(np.max(np.abs(seg)))
        scale = 1.0
        if peak > 1e100:
            scale = 1e-100
            log_offset += math.log(1e100)
        if 0 < peak < 1e-100:
            scale = 1e100
            log_offset -= math.log(1e100)
        hist = seg[-m:] * scale
    t = np.concatenate(times)
    g = np.concatenate(norms)
    mask = t >= horizon - fit_window
    t, g = t[mask], g[mask]
    bl = len(t) // blocks
    xs = np.empty(blocks)
    ys = np.empty(blocks)
    for b in range(blocks):
        seg = g[b * bl:(b + 1) * bl]
        i = int(np.argmax(seg))
        xs[b] = t[b * bl + i]
        ys[b] = seg[i]
    coef = np.polyfit(xs, ys, 1)
    return float(coef[0])


def classify_growth(pi: ParamSet, theta, margin=GROWTH_RATE_BAND, **kw):
    """Time-domain verdict: 'stable', 'unstable', or 'marginal'."""
    rate = growth_rate(build_system(pi), theta, **kw)
    if rate > margin:
        label = "unstable"
    elif rate < -margin:
        label = "stable"
    else:
        label = "marginal"
    return label, rate


def oracle_verdict(pi: ParamSet, theta, **kw) -> StabilityVerdict:
    label, rate = classify_growth(pi, theta, **kw)
    return StabilityVerdict(stable=label == "stable", rightmost_real_part=rate,
                            witnesses=(), method="oracle_growth")


def stability_scan(population, theta, margin=0.0):
    """Classify every set; failures are quarantined, never fatal.

    Returns a dict with 'stable', 'unstable', 'failed' lists of
    (identifier, ParamSet, verdict-or-message) and summary counts.
    """
    from .safety import _as_items

    sets = _as_items(population)
    if not sets:
        raise ValidationError("population is empty")
    stable, unstable, failed = [], [], []
    for ident, pi in sets:
        try:
            v = (stable_no_delay(pi, margin) if theta == 0
                 else stable_with_delay(pi, theta, margin))
        except AccwError as exc:
            failed.append((ident, pi, str(exc)))
            continue
        (stable if v.stable else unstable).append((ident, pi, v))
    return {
        "stable": stable,
        "unstable": unstable,
        "failed": failed,
        "counts": (len(stable), len(unstable), len(failed)),
        "theta": theta,
    }


def scan_rows(result):
    """CSV-ready rows for a scan: id, params, verdict, rightmost, method."""
    rows = []
    for label in ("stable", "unstable"):
        for ident, pi, v in result[label]:
            rows.append({
                "id": ident, "ks": pi.ks, "kv": pi.kv, "ka": pi.ka,
                "tau": pi.tau, "l": pi.l, "TL": pi.TL,
                "stable": int(v.stable),
                "rightmost_real_part": v.rightmost_real_part,
                "method": v.method,
            })
    for ident, pi, msg in result["failed"]:
        rows.append({
            "id": ident, "ks": pi.ks, "kv": pi.kv, "ka": pi.ka,
            "tau": pi.tau, "l": pi.l, "TL": pi.TL,
            "stable": "", "rightmost_real_part": "", "method": f"failed: {msg}",
        })
    rows.sort(key=lambda r: r["id"])
    return rows
