import math

import numpy as np
import pytest

from dtmech import (
    DivergentTransform,
    FitUnstable,
    GammaKernel,
    QuadratureNotConverged,
    SensitivityModel,
    TimeSignal,
    chirped_sine_expectation,
    ct_distance,
    ct_lyapunov,
    ct_position,
    dt_bound,
    dt_distance,
    dt_lyapunov,
    dt_sensitivity,
    exponential_map,
    power_law_map,
    transform_quadrature,
)
from dtmech.nonlinear import LyapunovEstimate, _panel_tier, _saddle_tier

HALF = SensitivityModel(a=0.5, c=1.0)
B_HALF = math.acos(0.5)

# E[e^{0.1 U} sin(b e^{0.1 U})] for U ~ gamma(n), b = arccos(1/2); frozen from
# two independent routes (weighted panels and complex saddle, cross-agreeing)
CHIRP_ORACLE = {
    1: 1.014961,
    2: 1.164493,
    5: 1.440434,
    10: 0.1969444,
    15: -1.142046,
    30: -5.923805e-3,
    40: 1.505297e-4,
    50: -4.774240e-7,
    60: 3.369287e-10,
    80: 3.992e-18,
    100: -6.48e-28,
}
# independent high-precision oracles (50-digit oscillatory quadrature of the
# substituted integral) at larger growth-per-step values
CHIRP_ORACLE_STEEP = {
    (30, 0.5): -4.039574e-16,
    (60, 0.5): -7.204959e-43,
    (20, 0.7): 7.1308e-12,
    (20, 0.9): 1.642444e-13,
}


# ---------------------------------------------------------------------------
# model and continuous sensitivity


def test_model_validation():
    m = SensitivityModel(a=0.5, c=2.0)
    assert m.b == pytest.approx(math.pi / 3.0, rel=1e-15)
    assert m.spread_factor == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-14)
    assert math.cos(m.b) == pytest.approx(m.a, abs=1e-15)
    with pytest.raises(ValueError):
        SensitivityModel(a=1.0, c=1.0)
    with pytest.raises(ValueError):
        SensitivityModel(a=-1.5, c=1.0)
    with pytest.raises(ValueError):
        SensitivityModel(a=0.5, c=0.0)
    with pytest.raises(ValueError):
        SensitivityModel(a=0.5, c=1.0, b=1.3)  # cos(1.3) != 0.5
    ok = SensitivityModel(a=0.5, c=1.0, b=math.acos(0.5))
    assert ok.b == B_HALF


def test_ct_distance_at_zero_is_one():
    for a in (-0.8, -0.2, 0.0, 0.5, 0.97):
        m = SensitivityModel(a=a, c=1.0)
        assert float(ct_distance(m, 0.0)) == pytest.approx(1.0, rel=1e-13)


def test_ct_distance_matches_finite_difference():
    # d_ct = |dx/da| for x(a, t) = cos(arccos(a) e^{ct})
    c, t_vals, delta = 0.7, (0.0, 1.0, 2.7), 1e-7
    for a in (0.5, -0.3):
        m = SensitivityModel(a=a, c=c)
        for t in t_vals:
            up = float(ct_position(SensitivityModel(a=a + delta, c=c), t))
            dn = float(ct_position(SensitivityModel(a=a - delta, c=c), t))
            fd = (up - dn) / (2.0 * delta)
            assert float(ct_distance(m, t)) == pytest.approx(abs(fd), rel=1e-5)


def test_ct_distance_envelope_bound_and_domain():
    t = np.linspace(0.0, 12.0, 400)
    d = ct_distance(HALF, t)
    assert np.all(d * np.exp(-HALF.c * t) <= HALF.spread_factor + 1e-12)
    assert np.all(d >= 0.0)
    with pytest.raises(ValueError):
        ct_distance(HALF, -1.0)


def test_ct_lyapunov_recovers_rate():
    est = ct_lyapunov(SensitivityModel(a=0.5, c=0.5), 40.0)
    assert 0.475 <= est.exponent <= 0.525
    assert est.residual <= 2.0
    assert est.window[0] == pytest.approx(20.0, abs=0.2)
    est1 = ct_lyapunov(SensitivityModel(a=0.5, c=1.0), 20.0)
    assert est1.exponent == pytest.approx(1.0, rel=0.05)


def test_ct_lyapunov_scales_with_rate():
    lo = ct_lyapunov(SensitivityModel(a=0.5, c=0.5), 40.0)
    hi = ct_lyapunov(SensitivityModel(a=0.5, c=1.0), 40.0)
    assert hi.exponent / lo.exponent == pytest.approx(2.0, rel=0.05)


def test_ct_lyapunov_window_precondition():
    with pytest.raises(ValueError, match="window"):
        ct_lyapunov(SensitivityModel(a=0.5, c=0.5), 10.0)  # c*t_max = 5
    with pytest.raises(ValueError):
        ct_lyapunov(HALF, 20.0, samples=5)


def test_lyapunov_estimate_validation():
    with pytest.raises(ValueError):
        LyapunovEstimate(exponent=1.0, window=(3.0, 3.0), residual=0.1,
                         samples=10)
    with pytest.raises(ValueError):
        LyapunovEstimate(exponent=1.0, window=(0.0, 1.0), residual=math.inf,
                         samples=10)
    with pytest.raises(ValueError):
        LyapunovEstimate(exponent=1.0, window=(0.0, 1.0), residual=0.1,
                         samples=1)


# ---------------------------------------------------------------------------
# the chirped expectation engine


def test_chirp_panel_tier_against_frozen_oracles():
    for n, want in CHIRP_ORACLE.items():
        if n > 50:
            continue
        r = chirped_sine_expectation(n, 0.1, B_HALF)
        assert r.method == "oscillatory-panels"
        assert r.value == pytest.approx(want, rel=1e-5)
        assert abs(r.value) > 20.0 * r.error


def test_chirp_saddle_tier_against_frozen_oracles():
    for n in (60, 80, 100):
        r = chirped_sine_expectation(n, 0.1, B_HALF)
        assert r.method == "saddle-point"
        assert r.value == pytest.approx(CHIRP_ORACLE[n], rel=1e-3)
        assert math.isfinite(r.log_magnitude)
        assert r.log_magnitude == pytest.approx(math.log(abs(r.value)),
                                                rel=1e-12)


def test_chirp_steep_growth_against_independent_oracles():
    for (n, lam), want in CHIRP_ORACLE_STEEP.items():
        r = chirped_sine_expectation(n, lam, B_HALF)
        assert r.value == pytest.approx(want, rel=1e-3)


def test_chirp_tier_overlap():
    # both tiers live at n around 40-50 for growth 0.1; they must agree
    for n in (40, 50):
        pv, _ = _panel_tier(n, 0.1, B_HALF)
        sv, _, _ = _saddle_tier(n, 0.1, B_HALF)
        assert sv == pytest.approx(pv, rel=2e-3)


def test_chirp_saddle_self_consistency_deep():
    # resolution doubling is part of the production error estimate
    r = chirped_sine_expectation(200, 0.1, B_HALF)
    assert r.method == "saddle-point"
    assert r.log_magnitude == pytest.approx(-201.0, abs=0.5)
    assert r.error <= 1e-6 * abs(r.value)


def test_chirp_validation_and_divergence():
    with pytest.raises(ValueError):
        chirped_sine_expectation(0, 0.1, B_HALF)
    with pytest.raises(DivergentTransform):
        chirped_sine_expectation(5, 1.0, B_HALF)
    with pytest.raises(DivergentTransform):
        chirped_sine_expectation(5, -0.2, B_HALF)
    with pytest.raises(ValueError):
        chirped_sine_expectation(5, 0.1, 0.0)


def test_chirp_extreme_growth_small_n_fails_honestly():
    # growth 0.9 per step defeats the panels before the saddle is valid
    with pytest.raises(QuadratureNotConverged):
        chirped_sine_expectation(12, 0.9, B_HALF)


# ---------------------------------------------------------------------------
# smeared sensitivity


def test_dt_sensitivity_agrees_with_transform_quadrature():
    k = GammaKernel(1, 0.1)
    for n in (1, 3, 8):
        sig = TimeSignal(
            lambda t: HALF.spread_factor * np.exp(HALF.c * np.asarray(t))
            * np.sin(HALF.b * np.exp(HALF.c * np.asarray(t))),
            growth_rate=HALF.c)
        direct = transform_quadrature(sig, GammaKernel(n, 0.1))
        mine = dt_sensitivity(HALF, k, n)
        assert mine.value == pytest.approx(direct.value, rel=1e-8)


def test_dt_sensitivity_matches_finite_difference_of_transformed_motion():
    # difference quotient of the smeared trajectory in its initial value
    delta, tau = 1e-5, 0.1
    for n in (1, 5, 12):
        k = GammaKernel(n, tau)
        vals = {}
        for sign in (+1, -1):
            mm = SensitivityModel(a=0.5 + sign * delta, c=1.0)
            sig = TimeSignal(lambda t, m=mm: np.cos(
                m.b * np.exp(m.c * np.asarray(t))), growth_rate=0.0)
            vals[sign] = transform_quadrature(sig, k).value
        fd = (vals[+1] - vals[-1]) / (2.0 * delta)
        assert dt_sensitivity(HALF, k, n).value == pytest.approx(fd, rel=1e-4)


def test_dt_distance_near_step_one_small_growth():
    m = SensitivityModel(a=0.5, c=1.0)
    d = dt_distance(m, GammaKernel(1, 0.01))
    assert d == pytest.approx(1.0, abs=0.05)


def test_dt_distance_bound_holds_up_to_n_500():
    k = GammaKernel(1, 0.1)
    bound = dt_bound(HALF, k)
    assert bound == pytest.approx(22.05, abs=0.01)
    worst = 0.0
    for n in list(range(1, 201)) + [300, 400, 500]:
        worst = max(worst, dt_distance(HALF, k, n))
    assert worst <= bound
    # the bound is generous, not saturated
    assert worst < 0.2 * bound


def test_dt_distance_bound_other_model():
    m = SensitivityModel(a=-0.3, c=2.0)
    k = GammaKernel(1, 0.15)  # growth 0.3 per step
    bound = dt_bound(m, k)
    for n in (1, 5, 10, 20, 40, 60):
        assert dt_distance(m, k, n) <= bound


def test_dt_distance_grey_zone_fails_honestly():
    # growth 0.6 per step: the value sinks below the panel roundoff before
    # the saddle becomes valid; that gap must surface, not silently zero
    m = SensitivityModel(a=-0.3, c=2.0)
    with pytest.raises(QuadratureNotConverged) as exc:
        dt_distance(m, GammaKernel(1, 0.3), 10)
    assert exc.value.error is not None


def test_dt_distance_rejects_marginal_growth():
    with pytest.raises(DivergentTransform):
        dt_distance(HALF, GammaKernel(1, 1.0), 5)
    with pytest.raises(DivergentTransform):
        dt_distance(SensitivityModel(a=0.5, c=2.0), GammaKernel(1, 0.6), 5)


def test_dt_continuum_limit_approaches_ct():
    # fixed elapsed time t = n tau = 2: smaller tau gets closer to d_ct
    target = float(ct_distance(HALF, 2.0))
    gaps = []
    for tau, n in ((0.1, 20), (0.01, 200)):
        d = dt_distance(HALF, GammaKernel(1, tau), n)
        gaps.append(abs(d - target))
    assert gaps[1] < gaps[0]


def test_dt_lyapunov_flags_curved_decay():
    # the smeared sensitivity does not settle on any exponential rate: its
    # log-distance curve is strongly convex, so the fit publishes the
    # instability instead of a slope
    k = GammaKernel(1, 0.1)
    with pytest.raises(FitUnstable) as exc:
        dt_lyapunov(HALF, k, 400)
    assert exc.value.residual > 2.0
    # whatever line one forces through it is steeply negative, nowhere
    # near the continuous rate c = 1
    assert exc.value.estimate < -5.0


def test_dt_lyapunov_window_precondition():
    with pytest.raises(ValueError, match="window"):
        dt_lyapunov(HALF, GammaKernel(1, 0.1), 50)  # n tau c = 5 < 10


# ---------------------------------------------------------------------------
# asymptotic maps


def test_power_law_integer_exponents_exact():
    k = GammaKernel(6, 0.7)
    np.testing.assert_allclose(power_law_map(1.0, k),
                               0.7 * np.arange(1, 7), rtol=1e-14)
    np.testing.assert_allclose(power_law_map(0.0, k), 1.0, rtol=0)
    n = np.arange(1, 7, dtype=float)
    np.testing.assert_allclose(power_law_map(3.0, k),
                               0.7 ** 3 * n * (n + 1) * (n + 2), rtol=1e-13)


def test_power_law_asymptotic_ratio():
    k = GammaKernel(100, 1.0)
    vals = power_law_map(0.5, k)
    n = np.arange(1, 101, dtype=float)
    ratio = vals / (n * k.tau) ** 0.5
    assert 0.99 <= ratio[99] <= 1.01
    # |ratio - 1| shrinks monotonically once n > 2 alpha
    drift = np.abs(ratio - 1.0)
    assert np.all(np.diff(drift[1:]) < 0)


def test_power_law_monotone_approach_larger_exponent():
    alpha = 2.5
    k = GammaKernel(60, 0.3)
    ratio = power_law_map(alpha, k) / (np.arange(1, 61) * k.tau) ** alpha
    drift = np.abs(ratio - 1.0)
    start = int(2 * alpha)
    assert np.all(np.diff(drift[start:]) < 0)


def test_power_law_agrees_with_quadrature():
    for alpha, n, tau in ((0.5, 5, 0.7), (-0.5, 3, 0.4)):
        k = GammaKernel(n, tau)
        sig = TimeSignal(lambda t, p=alpha: np.asarray(t) ** p,
                         growth_rate=0.0)
        direct = transform_quadrature(sig, k)
        assert power_law_map(alpha, k)[n - 1] == pytest.approx(direct.value,
                                                               rel=1e-8)


def test_power_law_validation():
    k = GammaKernel(5, 1.0)
    with pytest.raises(ValueError):
        power_law_map(-1.0, k)
    with pytest.raises(ValueError):
        power_law_map(0.5, k, last=0)


def test_exponential_map_values_and_enhancement():
    assert exponential_map(0.5, GammaKernel(1, 1.0)) == pytest.approx(
        math.log(2.0), rel=1e-14)
    # c > b across the whole convergent range, approaching b as tau -> 0
    for btau in (0.1, 0.3, 0.5, 0.7, 0.9):
        c = exponential_map(btau, GammaKernel(1, 1.0))
        assert c > btau
    b = 0.3
    c_small = exponential_map(b, GammaKernel(1, 0.01))
    assert (c_small - b) / b <= b * 0.01
    # strictly increasing in tau at fixed rate
    cs = [exponential_map(1.0, GammaKernel(1, tau))
          for tau in (0.1, 0.2, 0.5, 0.8)]
    assert all(y > x for x, y in zip(cs, cs[1:]))


def test_exponential_map_matches_transform():
    b_rate, tau, amp = 0.5, 1.0, 2.0
    for n in (1, 4, 9):
        k = GammaKernel(n, tau)
        c = exponential_map(b_rate, k)
        sig = TimeSignal(lambda t: amp * np.exp(b_rate * np.asarray(t)),
                         growth_rate=b_rate)
        direct = transform_quadrature(sig, k)
        assert direct.value == pytest.approx(amp * math.exp(c * tau * n),
                                             rel=1e-10)


def test_exponential_map_divergence():
    with pytest.raises(DivergentTransform):
        exponential_map(1.0, GammaKernel(1, 1.0))
    with pytest.raises(DivergentTransform):
        exponential_map(2.5, GammaKernel(1, 0.5))
    with pytest.raises(ValueError):
        exponential_map(math.nan, GammaKernel(1, 1.0))


def test_contrast_continuous_grows_discrete_does_not():
    # the pairing the module exists for: same model, opposite verdicts
    est_ct = ct_lyapunov(HALF, 20.0)
    assert est_ct.exponent >= 0.95 * HALF.c
    k = GammaKernel(1, 0.1)
    d_small = dt_distance(HALF, k, 10)
    d_large = dt_distance(HALF, k, 400)
    assert d_large < 1e-100 * max(d_small, 1e-30) or d_large < d_small
    assert d_large <= dt_bound(HALF, k)
