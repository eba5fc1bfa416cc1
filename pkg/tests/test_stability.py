import numpy as np
import pytest

from accw import (ParamSet, ValidationError, build_system, classify_growth,
                  stability_scan, stable_no_delay, stable_with_delay)
from accw.population import SamplerSpec, synth_sample
from accw.system import TABLE_PARAMS

# archived regression fixture: drawn from the default synthetic sampler
# (seed 20240901, index 280), stable at theta=0.1 and unstable at 0.3
WITNESS = ParamSet(ks=0.21921948068211025, kv=0.7753512805284676,
                   ka=-1.8552416934505358, tau=1.5222855774269903,
                   l=7.528142338892636, TL=0.19975693990679566)


def routh_hurwitz_stable(pi):
    """Independent cubic stability test on det(sI - A - BK)."""
    M = build_system(pi).no_delay_matrix
    c = np.poly(M)  # s^3 + c1 s^2 + c2 s + c3
    a2, a1, a0 = c[1], c[2], c[3]
    return a2 > 0 and a0 > 0 and a2 * a1 > a0


def test_reference_set_stable_without_delay():
    v = stable_no_delay(TABLE_PARAMS)
    assert v.stable
    assert v.method == "no_delay_eig"
    assert v.rightmost_real_part < 0


def test_zero_gains_not_asymptotically_stable():
    pi = ParamSet(ks=0, kv=0, ka=0, tau=1.18, l=7.64, TL=0.37)
    v = stable_no_delay(pi)
    assert not v.stable
    lams = sorted(np.linalg.eigvals(build_system(pi).no_delay_matrix).real)
    assert lams[0] == pytest.approx(-1 / 0.37)
    assert abs(lams[1]) < 1e-12 and abs(lams[2]) < 1e-12


def test_negative_spacing_gain_unstable():
    pi = ParamSet(ks=-1.0, kv=0.0, ka=0.0, tau=1.18, l=7.64, TL=0.37)
    assert not routh_hurwitz_stable(pi)  # oracle
    assert not stable_no_delay(pi).stable


def test_no_delay_agrees_with_routh_hurwitz():
    rng = np.random.default_rng(101)
    checked = 0
    for _ in range(1000):
        pi = ParamSet(ks=rng.uniform(-0.5, 1.5), kv=rng.uniform(-0.5, 2.0),
                      ka=rng.uniform(-3.0, 1.0), tau=rng.uniform(0.3, 3.0),
                      l=rng.uniform(0.0, 12.0), TL=rng.uniform(0.05, 1.0))
        v = stable_no_delay(pi)
        if abs(v.rightmost_real_part) < 1e-9:
            continue  # boundary cases are sign-test noise for both routes
        assert v.stable == routh_hurwitz_stable(pi)
        checked += 1
    assert checked > 900


def test_tiny_delay_matches_no_delay_verdict():
    v0 = stable_no_delay(TABLE_PARAMS)
    v = stable_with_delay(TABLE_PARAMS, 1e-4)
    assert v.stable == v0.stable
    assert v.rightmost_real_part == pytest.approx(v0.rightmost_real_part,
                                                  abs=1e-2)


def test_delay_verdicts_agree_with_growth_oracle_reference_set():
    for theta in (0.1, 0.2, 0.3):
        v = stable_with_delay(TABLE_PARAMS, theta)
        label, rate = classify_growth(TABLE_PARAMS, theta)
        assert label != "marginal"
        assert v.stable == (label == "stable"), (theta, v, label, rate)


def test_witness_destabilizes_with_delay():
    v1 = stable_with_delay(WITNESS, 0.1)
    v3 = stable_with_delay(WITNESS, 0.3)
    assert v1.stable and not v3.stable
    # time-domain confirmation on the unstable side
    label, _ = classify_growth(WITNESS, 0.3)
    assert label == "unstable"


def test_witness_onset_monotone_in_delay():
    # the destabilizing root is a fast oscillatory mode that overtakes
    # the slow pair between 0.2 and 0.3; while leadership changes hands
    # the max real part can dip by O(1e-3), so monotonicity is asserted
    # up to that mode-swap slack
    tops = [stable_with_delay(WITNESS, th).rightmost_real_part
            for th in (0.1, 0.2, 0.3)]
    slack = 2e-3
    assert tops[1] >= tops[0] - slack
    assert tops[2] >= tops[1] - slack
    assert tops[2] > tops[0]


def test_witness_reproducible_from_sampler():
    pop = synth_sample(SamplerSpec(count=334, seed=20240901))
    got = pop.sets[280]
    for name in ("ks", "kv", "ka", "tau", "l", "TL"):
        assert getattr(got, name) == pytest.approx(getattr(WITNESS, name),
                                                   rel=1e-12)


def test_scan_single_element_consistency():
    res = stability_scan([("ref", TABLE_PARAMS)], 0.3)
    v = stable_with_delay(TABLE_PARAMS, 0.3)
    expected = (1, 0, 0) if v.stable else (0, 1, 0)
    assert res["counts"] == expected


def test_scan_empty_population_rejected():
    with pytest.raises(ValidationError):
        stability_scan([], 0.3)


def test_scan_synthetic_population_counts():
    pop = synth_sample(SamplerSpec(count=60, seed=20240901))
    res = stability_scan(pop, 0.3)
    ns, nu, nf = res["counts"]
    assert ns + nu + nf == 60
    assert nf == 0
    assert 0 < ns  # far from everything unstable
