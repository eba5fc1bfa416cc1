"""Key-value scenario config files.

Plain ``key = value`` lines with ``#`` comments, keys matching the
experiment tables: a1, a2, t1, t2 (maneuver), vf0, lprime, tl_start,
dt, theta, phi, ufb, umax, clamp, mode, seed, horizon, al,
anticipation_success, plus either absolute kinematics
(pl0, vl0, pf0, af0, pc_cut, vc_cut) or window-opening deviations
(ds_l, dv_l, ds_c, dv_c), which are resolved against a parameter set.
"""

from dataclasses import asdict

from .errors import ValidationError
from .scenario import FULL_FEEDBACK, WORST_CASE, CutInProfile, InitialKinematics, ScenarioConfig

_FLOAT_KEYS = {
    "theta", "phi", "a1", "a2", "t1", "t2", "vf0", "lprime", "tl_start",
    "dt", "ufb", "umax", "horizon", "al", "anticipation_success",
    "pl0", "vl0", "pf0", "af0", "pc_cut", "vc_cut",
    "ds_l", "dv_l", "ds_c", "dv_c",
}
_INT_KEYS = {"seed", "clamp"}
_STR_KEYS = {"mode"}
_KIN_KEYS = ("pl0", "vl0", "pf0", "af0", "pc_cut", "vc_cut")
_DEV_KEYS = ("ds_l", "dv_l", "ds_c", "dv_c")
_MODES = {"full_feedback": FULL_FEEDBACK, "worst_case_braking": WORST_CASE,
          "ff": FULL_FEEDBACK, "wc": WORST_CASE}


def parse_scenario_file(path):
    """Parse a config file into (ScenarioConfig, deviations-or-None).

    When deviation keys are present the returned config still carries
    default kinematics; resolve it per parameter set with
    ``config.with_deviations(**deviations, pi=...)``.
    """
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc

    raw = {}
    for ln, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValidationError(f"{path}:{ln}: expected 'key = value'")
        key, val = (s.strip() for s in body.split("=", 1))
        if key in raw:
            raise ValidationError(f"{path}:{ln}: duplicate key {key!r}")
        if key in _FLOAT_KEYS:
            try:
                raw[key] = float(val)
            except ValueError as exc:
                raise ValidationError(f"{path}:{ln}: {key}: {exc}") from exc
        elif key in _INT_KEYS:
            raw[key] = int(val)
        elif key in _STR_KEYS:
            raw[key] = val
        else:
            raise ValidationError(f"{path}:{ln}: unknown key {key!r}")

    return build_scenario(raw, origin=path)


def build_scenario(raw, origin="<args>"):
    """Assemble (ScenarioConfig, deviations-or-None) from a flat dict."""
    raw = dict(raw)
    kin_given = [k for k in _KIN_KEYS if k in raw]
    dev_given = [k for k in _DEV_KEYS if k in raw]
    if kin_given and dev_given:
        raise ValidationError(
            f"{origin}: mixing absolute kinematics {kin_given} with "
            f"deviations {dev_given} is ambiguous")

    prof = CutInProfile(
        a1=raw.pop("a1", -2.0), t1=raw.pop("t1", 2.0),
        a2=raw.pop("a2", 2.0), t2=raw.pop("t2", 5.0))
    mode = raw.pop("mode", "full_feedback")
    if mode not in _MODES:
        raise ValidationError(f"{origin}: unknown mode {mode!r}")

    init_kw = {}
    for k in _KIN_KEYS:
        if k in raw:
            init_kw[k] = raw.pop(k)
    if "vf0" in raw:
        init_kw["vf0"] = raw.pop("vf0")
    init = InitialKinematics(**init_kw)

    deviations = None
    if dev_given:
        deviations = {k: raw.pop(k, 0.0) for k in _DEV_KEYS}

    cfg = ScenarioConfig(
        theta=raw.pop("theta", 0.0),
        phi=raw.pop("phi", 0.0),
        t_start=raw.pop("tl_start", -1.0),
        ufb=raw.pop("ufb", -5.0),
        umax=raw.pop("umax", 2.0),
        clamp_demand=bool(raw.pop("clamp", 1)),
        profile=prof,
        lprime=raw.pop("lprime", 3.0),
        dt=raw.pop("dt", 0.1),
        mode=_MODES[mode],
        horizon=raw.pop("horizon", 60.0),
        init=init,
        al=raw.pop("al", 0.0),
        anticipation_success=raw.pop("anticipation_success", 1.0),
        seed=raw.pop("seed", 0),
    )
    if raw:
        raise ValidationError(f"{origin}: unused keys {sorted(raw)}")
    return cfg, deviations


def scenario_to_dict(cfg: ScenarioConfig, deviations=None):
    """Fully-resolved flat mapping for manifests."""
    d = {
        "theta": cfg.theta, "phi": cfg.phi, "tl_start": cfg.t_start,
        "ufb": cfg.ufb, "umax": cfg.umax, "clamp": int(cfg.clamp_demand),
        "lprime": cfg.lprime, "dt": cfg.dt, "mode": cfg.mode,
        "horizon": cfg.horizon,
        "al": cfg.al if isinstance(cfg.al, float) else str(cfg.al),
        "anticipation_success": cfg.anticipation_success, "seed": cfg.seed,
        "a1": cfg.profile.a1, "t1": cfg.profile.t1,
        "a2": cfg.profile.a2, "t2": cfg.profile.t2,
    }
    d.update({f"init_{k}": v for k, v in asdict(cfg.init).items()})
    if deviations:
        d.update(deviations)
    return d
