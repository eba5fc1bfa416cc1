"""Stochastic surrogate safety measures over control-parameter populations.

Per parameter set the scenario is simulated (worst-case braking by
default, per the safety-critical construction: a collision detected
under maximal braking is real, one avoided there is truly avoided) and
the earliest positive zero of the clearance gives the time to
collision.  Population aggregates follow: the expectation of inverse
TTC with 1/inf mapped to 0, the empirical CDF of inverse TTC on a gamma
grid, and the collision probability as the finite-TTC fraction.

Anticipation enters stochastically: per trial a Bernoulli draw with the
configured success probability decides whether the follower gets its
anticipation phi or reacts with pure delay (phi = 0).  Draw streams are
keyed by (cell, parameter index), so parallel and serial sweeps produce
identical results.
"""

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AccwError, ValidationError
from .scenario import WORST_CASE, ScenarioConfig, Trajectory, simulate
from .system import ParamSet


def _as_items(population):
    """Normalize a population to (identifier, ParamSet) pairs."""
    if hasattr(population, "items"):
        return list(population.items())
    out = []
    for i, entry in enumerate(population):
        if isinstance(entry, tuple) and len(entry) == 2 and isinstance(
                entry[1], ParamSet):
            out.append(entry)
        else:
            out.append((i, entry))
    return out

GAMMA_GRID_DEFAULT = np.round(np.arange(0.0, 1.0 + 1e-9, 0.01), 10)
TTC_REFINE_TOL = 1e-4


@dataclass(frozen=True)
class TtcResult:
    """Earliest collision time for one parameter set (inf when safe)."""

    t_c_star: float
    param_index: object = None

    @property
    def inverse(self):
        return 0.0 if math.isinf(self.t_c_star) else 1.0 / self.t_c_star

    @property
    def collided(self):
        return not math.isinf(self.t_c_star)


@dataclass(frozen=True)
class SafetyAggregate:
    M: int
    expectation_inverse_ttc: float
    collision_probability: float
    cdf: tuple  # (gamma, C(gamma)) pairs
    inverses: tuple  # per-set inverse TTC values, input order


def _hermite_root(t0, t1, g0, g1, d0, d1, tol):
    """Root of the cubic Hermite interpolant of the gap on [t0, t1]."""
    h = t1 - t0

    def val(t):
        s = (t - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * g0 + h10 * h * d0 + h01 * g1 + h11 * h * d1

    lo, hi = t0, t1
    flo = g0
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = val(mid)
        if (flo > 0) == (fm > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gap_root(traj: Trajectory, tol=TTC_REFINE_TOL):
    """Earliest positive time where the clearance reaches zero, or inf."""
    t = traj.times
    g = traj.gap
    d = traj.dv_c  # d(gap)/dt
    for i in range(len(t) - 1):
        if t[i + 1] <= 0:
            continue
        if g[i] > 0 >= g[i + 1]:
            lo = max(t[i], 0.0)
            return _hermite_root(t[i], t[i + 1], g[i], g[i + 1], d[i], d[i + 1],
                                 tol) if t[i] >= 0 else _hermite_root(
                lo, t[i + 1], np.interp(lo, t, g), g[i + 1],
                np.interp(lo, t, d), d[i + 1], tol)
    return math.inf


def time_to_collision(config: ScenarioConfig, pi: ParamSet,
                      param_index=None, early_exit=True) -> TtcResult:
    """Earliest positive root of the clearance, refined to 1e-4 s."""
    traj = simulate(config, pi, method="stepped", early_exit=early_exit)
    return TtcResult(t_c_star=gap_root(traj), param_index=param_index)


def anticipation_outcome(success_prob, rng, phi):
    """Effective anticipation for one trial: phi on success, else 0."""
    if not (0.0 <= success_prob <= 1.0):
        raise ValidationError("success probability must be in [0, 1]")
    if success_prob >= 1.0:
        return phi
    if success_prob <= 0.0:
        return 0.0
    return phi if rng.random() < success_prob else 0.0


def _trial_rng(seed, cell_key, param_index):
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(cell_key) + (int(param_index),))
    return np.random.default_rng(ss)


def aggregate_inverses(inverses, gamma_grid=None) -> SafetyAggregate:
    """Population statistics from per-set inverse TTC values.

    Infinite TTC enters as inverse 0, so the expectation is the plain
    mean and the collision probability the positive fraction.
    """
    inv = np.asarray(list(inverses), dtype=float)
    if inv.size == 0:
        raise ValidationError("no TTC values to aggregate")
    if np.any(inv < 0):
        raise ValidationError("inverse TTC values must be nonnegative")
    gg = GAMMA_GRID_DEFAULT if gamma_grid is None else np.asarray(gamma_grid)
    return SafetyAggregate(
        M=int(inv.size),
        expectation_inverse_ttc=float(np.mean(inv)),
        collision_probability=float(np.mean(inv > 0)),
        cdf=tuple((float(g), float(np.mean(inv <= g))) for g in gg),
        inverses=tuple(float(v) for v in inv),
    )


def aggregate(population, config: ScenarioConfig, gamma_grid=None,
              cell_key=(), on_error="raise") -> SafetyAggregate:
    """TTC statistics of a population under one scenario configuration.

    Per-set failures abort by default: silently dropping sets would bias
    the probabilities.  ``on_error="quarantine"`` counts failures
    separately instead (exposed in sweep error columns).
    """
    sets = _as_items(population)
    if not sets:
        raise ValidationError("population is empty")
    gamma_grid = GAMMA_GRID_DEFAULT if gamma_grid is None else np.asarray(gamma_grid)

    inverses = []
    failures = []
    for j, (ident, pi) in enumerate(sets):
        cfg = config
        if config.phi > 0 and config.anticipation_success < 1.0:
            rng = _trial_rng(config.seed, cell_key, j)
            eff = anticipation_outcome(config.anticipation_success, rng, config.phi)
            if eff != config.phi:
                cfg = replace(config, phi=eff)
        try:
            res = time_to_collision(cfg, pi, param_index=ident)
        except AccwError as exc:
            if on_error == "raise":
                raise type(exc)(f"set {ident}: {exc}") from exc
            failures.append((ident, str(exc)))
            continue
        inverses.append(res.inverse)

    if not inverses:
        raise ValidationError("no set produced a TTC result")
    agg = aggregate_inverses(inverses, gamma_grid)
    if on_error != "raise":
        return agg, failures
    return agg


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    step: float

    AXES = ("ds_c", "dv_c", "ds_l", "dv_l", "theta", "phi")

    def __post_init__(self):
        if self.name not in self.AXES:
            raise ValidationError(f"unknown sweep axis {self.name!r}")
        if self.step <= 0:
            raise ValidationError("axis step must be positive")
        if self.hi < self.lo:
            raise ValidationError("axis hi must be >= lo")

    def values(self):
        n = int(round((self.hi - self.lo) / self.step))
        if abs(self.lo + n * self.step - self.hi) > 1e-9:
            raise ValidationError(
                f"axis {self.name}: range is not a whole number of steps")
        return [round(self.lo + i * self.step, 10) for i in range(n + 1)]


@dataclass(frozen=True)
class SweepGrid:
    """Full-factorial grid over scenario axes, against a base scenario.

    ``base_deviations`` supplies [ds_l, dv_l, ds_c, dv_c] at the window
    opening for axes not being swept.
    """

    axes: tuple
    base_deviations: dict = field(default_factory=dict)

    def cells(self):
        value_lists = [a.values() for a in self.axes]
        names = [a.name for a in self.axes]
        for combo in itertools.product(*value_lists):
            yield dict(zip(names, combo))


def _cell_config(template: ScenarioConfig, grid: SweepGrid, coords, pi):
    cfg = template
    dev = dict(grid.base_deviations)
    for name, val in coords.items():
        if name in ("theta", "phi"):
            cfg = replace(cfg, **{name: float(val)})
        else:
            dev[name] = float(val)
    if dev:
        full = {"ds_l": 0.0, "dv_l": 0.0, "ds_c": 0.0, "dv_c": 0.0}
        full.update(dev)
        cfg = cfg.with_deviations(full["ds_l"], full["dv_l"], full["ds_c"],
                                  full["dv_c"], pi)
    return cfg


@dataclass(frozen=True)
class SweepCell:
    coords: dict
    aggregate: SafetyAggregate | None
    errors: tuple


def sweep(grid: SweepGrid, population, template: ScenarioConfig,
          gamma_grid=None, workers=1):
    """Evaluate the aggregate on every grid cell, deterministically ordered.

    Per-cell failures land in the cell's error column and never abort
    the sweep.
    """
    sets = _as_items(population)
    cells = list(grid.cells())
    jobs = [(ci, coords) for ci, coords in enumerate(cells)]
    worker = _SweepJob(grid, template, sets, gamma_grid)

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(worker, jobs, chunksize=1))
    else:
        results = [worker(job) for job in jobs]
    return results


class _SweepJob:
    """Picklable per-cell worker for process pools."""

    def __init__(self, grid, template, sets, gamma_grid):
        self.grid = grid
        self.template = template
        self.sets = sets
        self.gamma_grid = gamma_grid

    def __call__(self, job):
        ci, coords = job
        inverses = []
        errors = []
        for j, (ident, pi) in enumerate(self.sets):
            try:
                cfg = _cell_config(self.template, self.grid, coords, pi)
                if cfg.phi > 0 and cfg.anticipation_success < 1.0:
                    rng = _trial_rng(cfg.seed, (ci,), j)
                    eff = anticipation_outcome(cfg.anticipation_success, rng,
                                               cfg.phi)
                    if eff != cfg.phi:
                        cfg = replace(cfg, phi=eff)
                res = time_to_collision(cfg, pi, param_index=ident)
                inverses.append(res.inverse)
            except AccwError as exc:
                errors.append((ident, str(exc)))
        if not inverses:
            return SweepCell(coords=coords, aggregate=None, errors=tuple(errors))
        return SweepCell(coords=coords,
                         aggregate=aggregate_inverses(inverses, self.gamma_grid),
                         errors=tuple(errors))


def default_scenario_for_safety(**overrides) -> ScenarioConfig:
    """Worst-case-braking template used by the sweep experiments."""
    base = dict(mode=WORST_CASE, clamp_demand=True)
    base.update(overrides)
    return ScenarioConfig(**base)
