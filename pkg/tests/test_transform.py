import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdpanel.errors import HorizonError, ParameterError
from qdpanel.panel_data import BorderPair, PairPanel, Quarter, SeparationSeries, quarter_range
from qdpanel.transform import QuasiDiffConfig, build_samples, quasi_difference, regressor_names

from conftest import make_panel

Q0 = Quarter(2009, 1)


def series(vals):
    return {Q0.succ(i): v for i, v in enumerate(vals)}


def pair_panel(ua, ub, wa=26, wb=26, wage_a=None, wage_b=None, pid="p"):
    a = make_panel("01001", Q0, ua, wa, wage_a)
    b = make_panel("13001", Q0, ub, wb, wage_b)
    return PairPanel(BorderPair(pid, "01001", "13001"), a, b,
                     tuple(quarter_range(Q0, Q0.succ(len(ua) - 1))))


def test_log_one_is_zero():
    s = SeparationSeries.constant(0.3, quarter_range(Q0, Q0.succ(3)))
    assert quasi_difference(series([1.0, 1.0]), s, QuasiDiffConfig(0.9, 1), Q0) == 0.0


def test_one_step_value():
    s = SeparationSeries({Q0: 0.10})
    v = quasi_difference(series([0.05, 0.06]), s, QuasiDiffConfig(0.99, 1), Q0)
    assert v == pytest.approx(math.log(0.05) - 0.891 * math.log(0.06), abs=1e-12)
    assert v == pytest.approx(-0.48898, abs=1e-5)


def test_two_step_constant_u():
    s = SeparationSeries.constant(0.10, [Q0, Q0.succ(1)])
    v = quasi_difference(series([0.05] * 3), s, QuasiDiffConfig(0.99, 2), Q0)
    # log(0.05) * (1 - 0.891**2) evaluates to -0.617477
    assert v == pytest.approx(math.log(0.05) * (1 - 0.891 ** 2), abs=1e-12)
    assert v == pytest.approx(-0.617477, abs=1e-6)


def test_gap_raises_horizon_error_naming_quarter():
    u = {Q0: 0.05, Q0.succ(2): 0.05}
    s = SeparationSeries.constant(0.1, quarter_range(Q0, Q0.succ(2)))
    with pytest.raises(HorizonError) as exc:
        quasi_difference(u, s, QuasiDiffConfig(0.99, 2), Q0)
    assert "2009Q2" in str(exc.value)


def test_config_validation():
    with pytest.raises(ParameterError):
        QuasiDiffConfig(beta=1.2)
    with pytest.raises(ParameterError):
        QuasiDiffConfig(horizon_k=0)


@settings(max_examples=200)
@given(st.floats(1e-4, 0.99), st.floats(0.001, 0.9), st.floats(0.5, 1.0), st.integers(1, 6))
def test_constant_series_identity(u, s, beta, k):
    sep = SeparationSeries.constant(s, quarter_range(Q0, Q0.succ(k)))
    v = quasi_difference(series([u] * (k + 1)), sep, QuasiDiffConfig(beta, k), Q0)
    assert v == pytest.approx(math.log(u) * (1 - (beta * (1 - s)) ** k), rel=1e-12, abs=1e-14)


def test_plain_difference_limit():
    sep = SeparationSeries.constant(1e-12, quarter_range(Q0, Q0.succ(3)))
    v = quasi_difference(series([0.05, 0.07, 0.06, 0.08]), sep, QuasiDiffConfig(1.0, 3), Q0)
    assert v == pytest.approx(math.log(0.05) - math.log(0.08), abs=1e-10)


def test_identical_counties_give_zero_rows():
    pp = pair_panel([0.05, 0.06, 0.07], [0.05, 0.06, 0.07], 46, 46)
    ss = build_samples([pp], SeparationSeries.constant(0.1, pp.quarters), QuasiDiffConfig())
    assert len(ss.samples) == 2
    assert all(r.y == 0.0 and r.x == (0.0,) for r in ss.samples)


def test_benefit_regressor_value():
    pp = pair_panel([0.05, 0.06], [0.05, 0.06], 99, 26)
    ss = build_samples([pp], SeparationSeries.constant(0.1, pp.quarters), QuasiDiffConfig())
    assert ss.samples[0].x[0] == pytest.approx(math.log(99 / 26), abs=1e-15)
    assert ss.samples[0].x[0] == pytest.approx(1.337023, abs=1e-6)


def test_k_regressors_cover_t_to_t_plus_k_minus_1():
    pp = pair_panel([0.05] * 4, [0.05] * 4, [26, 46, 99, 26], 26)
    ss = build_samples([pp], SeparationSeries.constant(0.1, pp.quarters), QuasiDiffConfig(0.99, 2))
    assert ss.names == ["benefits_1", "benefits_2"] == regressor_names(2)
    assert [len(ss.samples)] == [2]
    assert ss.samples[0].x == pytest.approx((0.0, math.log(46 / 26)))
    assert ss.samples[1].x == pytest.approx((math.log(46 / 26), math.log(99 / 26)))


def test_window_end_rows_without_lead_are_excluded():
    pp = pair_panel([0.05] * 5, [0.06] * 5)
    sep = SeparationSeries.constant(0.1, pp.quarters)
    for k in (1, 2, 3):
        assert len(build_samples([pp], sep, QuasiDiffConfig(0.99, k)).samples) == 5 - k


def test_k1_extended_equals_baseline():
    pp = pair_panel([0.05, 0.06, 0.055], [0.07, 0.065, 0.06], [26, 46, 99], 26)
    sep = SeparationSeries.constant(0.1, pp.quarters)
    base = build_samples([pp], sep, QuasiDiffConfig(0.99, 1))
    assert base.names == ["benefits"]
    for r in base.samples:
        t = r.t
        expected = (quasi_difference(pp.panel_a.series("urate"), sep, base.config, t)
                    - quasi_difference(pp.panel_b.series("urate"), sep, base.config, t))
        assert r.y == expected


def test_log_outcome():
    pp = pair_panel([0.05, 0.06, 0.07], [0.04, 0.05, 0.05], 99, 26)
    ss = build_samples([pp], SeparationSeries.constant(0.1, pp.quarters), QuasiDiffConfig(),
                       outcome="log")
    assert ss.samples[0].y == pytest.approx(math.log(0.05 / 0.04))


rates = st.lists(st.floats(0.01, 0.3), min_size=4, max_size=4)
weeks = st.lists(st.sampled_from([26, 39, 46, 59, 73, 99]), min_size=4, max_size=4)


@settings(max_examples=100, deadline=None)
@given(rates, rates, weeks, weeks, st.floats(100, 2000), st.floats(100, 2000), st.integers(1, 3))
def test_swapping_pair_labels_negates_everything(ua, ub, wa, wb, ga, gb, k):
    pp = pair_panel(ua, ub, wa, wb, ga, gb)
    sep = SeparationSeries.constant(0.1, pp.quarters)
    dist = {("p", "01001"): 12.0, ("p", "13001"): 31.0}
    cfg = QuasiDiffConfig(0.9975, k)
    fwd = build_samples([pp], sep, cfg, ("distance", "wages"), dist)
    rev = build_samples([pp.swapped()], sep, cfg, ("distance", "wages"), dist)
    for r, s in zip(fwd.samples, rev.samples):
        assert s.y == pytest.approx(-r.y, abs=1e-13)
        assert s.x == pytest.approx(tuple(-v for v in r.x), abs=1e-13)
        assert s.controls == pytest.approx(tuple(-v for v in r.controls), abs=1e-13)


def test_missing_control_drops_rows_with_count():
    pp = pair_panel([0.05] * 4, [0.06] * 4, wage_a=700.0, wage_b=None)
    ss = build_samples([pp], SeparationSeries.constant(0.1, pp.quarters), QuasiDiffConfig(),
                       ("wages",))
    assert ss.samples == [] and ss.dropped == {"p": 3}


def test_distance_control_is_time_invariant():
    pp = pair_panel([0.05, 0.06, 0.07, 0.06], [0.06] * 4)
    dist = {("p", "01001"): 10.0, ("p", "13001"): 40.0}
    ss = build_samples([pp], SeparationSeries.constant(0.1, pp.quarters), QuasiDiffConfig(),
                       ("distance",), dist)
    assert {r.controls for r in ss.samples} == {(math.log(10.0) - math.log(40.0),)}
    assert ss.names == ["benefits", "d_log_distance"]


def test_unknown_control_and_missing_distances():
    pp = pair_panel([0.05] * 3, [0.06] * 3)
    sep = SeparationSeries.constant(0.1, pp.quarters)
    with pytest.raises(ParameterError):
        build_samples([pp], sep, QuasiDiffConfig(), ("population",))
    with pytest.raises(ParameterError):
        build_samples([pp], sep, QuasiDiffConfig(), ("distance",))
