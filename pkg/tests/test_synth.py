import math

import numpy as np
import pytest

from qdpanel.effects import EffectQuery, effect_permanent
from qdpanel.errors import ParameterError
from qdpanel.estimators import additive_fe, interactive_fe
from qdpanel.panel_data import Quarter, ingest_county_series, read_pairs, read_separation, IngestReport
from qdpanel.synth import (
    NoiseParams, PolicyRule, StructuralParams, ZProcess, equilibrium_log_u, inject_endogeneity,
    simulate,
)
from qdpanel.validation import anticipation_coefficient, noise_free_params, world_design


def test_true_alpha_default():
    p = StructuralParams()
    assert p.true_alpha == pytest.approx(0.5 * 1.0 * 1.0 * (1 - 0.99 * 0.9), abs=1e-15)
    assert p.true_alpha == pytest.approx(0.0545, abs=1e-12)


def test_parameter_validation_before_simulation():
    with pytest.raises(ParameterError):
        StructuralParams(beta=1.0, s_bar=0.0)
    with pytest.raises(ParameterError):
        StructuralParams(lambda_u=0.5)
    with pytest.raises(ParameterError):
        simulate(StructuralParams(), T=4)


def test_policy_rule_tiers():
    rule = PolicyRule()
    np.testing.assert_array_equal(rule.weeks([0.04, 0.06, 0.065, 0.07, 0.08, 0.09]),
                                  [26, 46, 60, 73, 79, 99])
    with pytest.raises(ParameterError):
        PolicyRule(tiers=((0.07, 20), (0.06, 20)))
    with pytest.raises(ParameterError):
        PolicyRule(tiers=((0.06, 90),))


def test_constant_inputs_steady_state_and_exact_recovery():
    p = noise_free_params(z_process=ZProcess(sigma_state=0.0))
    b = np.repeat(np.array([26, 46, 99, 60, 73, 39])[:, None], 12, axis=1)
    w = simulate(p, n_states=6, counties_per_state=6, pairs_per_border=3, T=12, seed=1, benefits=b)
    # u constant over time at log u = lambda_u * kappa * log(pi)
    assert np.ptp(w.log_u, axis=1).max() < 1e-12
    log_pi = p.gamma_z * w.log_z[:, 0] - p.gamma_b * np.log(b[w.county_state, 0])
    np.testing.assert_allclose(w.log_u[:, 0], p.lambda_u * p.kappa_tilde * log_pi, atol=1e-12)
    # quasi-difference of a constant series
    x = p.beta * (1 - p.s_bar)
    qd = w.log_u[:, 0] - x * w.log_u[:, 1]
    np.testing.assert_allclose(qd, (1 - x) * w.log_u[:, 0], atol=1e-12)
    # base-week counties sit at the base rate
    base = w.county_state == 0
    np.testing.assert_allclose(w.urate[base, 0], p.base_urate, rtol=1e-12)
    res, _ = interactive_fe(world_design(w), r=0)
    assert res.coef("benefits") == pytest.approx(p.true_alpha, abs=1e-10)


def test_same_seed_bit_identical():
    p = noise_free_params(noise=NoiseParams(r_true=2, sigma_F=0.01, sigma_loading=1, sigma_v=0.02))
    a = simulate(p, n_states=4, counties_per_state=10, pairs_per_border=4, T=16, seed=3)
    b = simulate(p, n_states=4, counties_per_state=10, pairs_per_border=4, T=16, seed=3)
    c = simulate(p, n_states=4, counties_per_state=10, pairs_per_border=4, T=16, seed=4)
    for name in ("log_u", "benefits", "log_z", "log_eta", "separation"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.log_u, c.log_u)


def test_geography_pairs_straddle_states(noisy_world):
    w = noisy_world
    assert len(w.pairs) == 10 * 5
    for p in w.pairs:
        assert p.county_a[:2] != p.county_b[:2]
    assert len({p.key for p in w.pairs}) == len(w.pairs)


def test_trigger_uses_previous_quarter_interior_rate(noisy_world):
    w = noisy_world
    u = w.urate
    for s in range(len(w.states)):
        interior = (w.county_state == s) & ~w.border
        rate = u[interior].mean(axis=0)
        np.testing.assert_array_equal(w.benefits[s, 1:], w.rule.weeks(rate[:-1]))


def test_anticipation_cancels_in_quasi_difference():
    cur, fut, alpha = anticipation_coefficient()
    assert abs(fut) < 1e-8
    assert cur == pytest.approx(alpha, abs=1e-8)


def test_future_only_benefit_change_leaves_current_quasi_difference():
    p = noise_free_params()
    T = 10
    z = np.full((1, T), p.log_z0())
    b0 = np.full((1, T), math.log(26))
    b1 = b0.copy()
    b1[0, 5] = math.log(99)
    s = np.full(T, p.s_bar)
    u0 = equilibrium_log_u(p, z, b0, np.zeros((1, T)), s)[0]
    u1 = equilibrium_log_u(p, z, b1, np.zeros((1, T)), s)[0]
    x = p.beta * (1 - p.s_bar)
    q0 = u0[4] - x * u0[5]
    q1 = u1[4] - x * u1[5]
    assert u1[4] != u0[4]          # the level moves through expectations
    assert abs(q1 - q0) < 1e-12    # the quasi-difference does not


def test_permanent_change_matches_effect_calculator():
    p = noise_free_params()
    T = 200
    z = np.full((1, T), p.log_z0())
    s = np.full(T, p.s_bar)
    b = np.full((1, T), math.log(26))
    b[0, 100:] = math.log(99)
    lu = equilibrium_log_u(p, z, b, np.zeros((1, T)), s)[0]
    measured = lu[-1] - lu[0]
    q = EffectQuery(p.true_alpha, p.beta, p.s_bar, 26, 99, base_urate=p.base_urate)
    assert measured == pytest.approx(effect_permanent(q).log_effect, abs=1e-3)


def test_downturn_benefit_path_rises_then_plateaus():
    # at a 3% base rate the 99-week tier alone cannot hold unemployment above
    # the triggers, so extensions follow the downturn rather than persist
    p = noise_free_params(z_process=ZProcess(sigma_state=0.0), base_urate=0.03)
    w = simulate(p, n_states=6, counties_per_state=8, pairs_per_border=3, T=48, seed=2,
                 downturn=(16, 1.0, 0.98))
    weeks = w.benefits.mean(axis=0)
    start = int(np.argmax(weeks > 26))
    top = int(np.argmax(weeks >= 99))
    assert 6 <= start <= 16              # foresight pulls the rise slightly ahead
    assert top - start <= 6              # sharp rise
    assert np.all(np.diff(weeks[start:top + 1]) >= 0)
    assert np.all(weeks[top:top + 10] >= 99)   # plateau
    assert weeks[-1] == 26               # and eventual expiry


def test_inject_zero_is_identity(noisy_world):
    assert inject_endogeneity(noisy_world, 0.0) is noisy_world


def test_injection_biases_additive_fe():
    biased = 0
    p = noise_free_params(noise=NoiseParams(r_true=2, sigma_F=0.01, sigma_loading=1, sigma_v=0.02))
    for rep in range(20):
        w = inject_endogeneity(simulate(p, n_states=10, counties_per_state=12, pairs_per_border=5,
                                        T=30, seed=70 + rep), 0.05)
        assert w.chi == 0.05
        res = additive_fe(world_design(w))
        biased += abs(res.coef("benefits") - p.true_alpha) > 2 * res.stderr("benefits")
    assert biased > 10


def test_written_csvs_ingest_back(tmp_path, noisy_world):
    w = noisy_world
    paths = w.write_csv(tmp_path)
    panels, rep = ingest_county_series(paths["unemployment"], paths["benefits"], paths["wages"],
                                       paths["state_gdp"])
    assert not rep.errors
    q = w.quarters[5]
    for fips, panel in w.panels.items():
        a, b = panel.obs[q], panels[fips].obs[q]
        assert b.benefit_weeks == a.benefit_weeks
        assert b.urate == pytest.approx(a.urate, rel=1e-12)
        assert b.avg_weekly_wage == pytest.approx(a.avg_weekly_wage, rel=1e-12)
        assert b.state_gdp_per_worker == pytest.approx(a.state_gdp_per_worker, rel=1e-12)
    sep = read_separation(paths["separation"])
    assert sep[q] == pytest.approx(w.separation[5], rel=1e-12)
    assert len(read_pairs(paths["pairs"], IngestReport())) == len(w.pairs)
