"""Monte Carlo and closed-form checks run by ``qdp validate`` and the acceptance tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._parallel import ordered_map
from .effects import (
    EffectQuery, effect_k_permanent, effect_n_periods, effect_permanent,
)
from .errors import ParameterError
from .estimators import (
    DesignPanel, additive_fe, endogeneity_test, ife_fitter, interactive_fe, pooled_ols,
    to_design_panel, with_bootstrap,
)
from .geo import (
    BlockPoint, CountyPolygon, PopulationCenter, SharedBoundary, center_to_boundary_km,
    population_center, shared_boundary,
)
from .panel_data import Quarter, build_pair_panel
from .synth import NoiseParams, StructuralParams, ZProcess, inject_endogeneity, simulate
from .transform import QuasiDiffConfig, build_samples, quasi_difference


def calibrated_params(**overrides) -> StructuralParams:
    """Two-factor world used by the Monte Carlo suites."""
    noise = NoiseParams(r_true=2, sigma_F=0.01, sigma_loading=1.0, sigma_v=0.02)
    kw = dict(noise=noise, z_process=ZProcess(rho=0.9, sigma_state=0.06, sigma_county=0.01))
    kw.update(overrides)
    return StructuralParams(**kw)


def noise_free_params(**overrides) -> StructuralParams:
    kw = dict(noise=NoiseParams(), z_process=ZProcess(rho=0.9, sigma_state=0.06, sigma_county=0.0))
    kw.update(overrides)
    return StructuralParams(**kw)


def world_design(world, k: int = 1, outcome: str = "quasi", beta: float | None = None,
                 controls=()) -> DesignPanel:
    """Run a synthetic world through pair building, transforms and panel layout."""
    pairs, _ = build_pair_panel(world.pairs, world.panels, (world.quarters[0], world.quarters[-1]))
    cfg = QuasiDiffConfig(world.params.beta if beta is None else beta, k)
    dist = world.distances() if "distance" in controls else None
    samples = build_samples(pairs, world.separation_series, cfg, controls, dist, outcome)
    return to_design_panel(samples)[0]


@dataclass
class CriterionResult:
    name: str
    passed: bool
    statistic: str
    threshold: str
    mode: str = "full"
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.name:<14} {self.statistic}  (need {self.threshold}; "
                f"{self.mode}, {self.seconds:.2f}s)")


# ---------------------------------------------------------------------------
# closed-form scenarios
# ---------------------------------------------------------------------------

def check_scenarios(mode="full") -> CriterionResult:
    t0 = time.perf_counter()
    q = EffectQuery(alpha=0.052, beta=0.99, s=0.10, w1=99, w2=26, base_urate=0.099)
    u4 = effect_n_periods(EffectQuery(**{**q.__dict__, "n": 4})).implied_urate
    u8 = effect_n_periods(EffectQuery(**{**q.__dict__, "n": 8})).implied_urate
    dt = time.perf_counter() - t0
    ok = abs(u4 - 0.078) <= 0.001 and abs(u8 - 0.067) <= 0.001 and dt < 1.0
    return CriterionResult("scenarios", ok, f"n=4 -> {u4:.4%}, n=8 -> {u8:.4%}",
                           "7.8% and 6.7% within 0.1pp, <1s", mode, dt)


def check_permanent(mode="full") -> CriterionResult:
    t0 = time.perf_counter()
    res = effect_permanent(EffectQuery(alpha=0.052, beta=0.99, s=0.10, w1=26, w2=99, base_urate=0.05))
    dt = time.perf_counter() - t0
    ok = abs(res.implied_urate - 0.096) <= 0.002 and dt < 1.0
    return CriterionResult("permanent", ok, f"long-run rate {res.implied_urate:.4%}",
                           "9.6% within 0.2pp, <1s", mode, dt)


def check_identities(mode="full") -> CriterionResult:
    t0 = time.perf_counter()
    q = EffectQuery(alpha=0.052, beta=0.99, s=0.10, w1=26, w2=99, base_urate=0.05)
    perm = effect_permanent(q).log_effect
    same_17 = effect_k_permanent([0.052], q).log_effect == perm

    u = {Quarter(2010, 1): 0.05, Quarter(2010, 2): 0.06}
    s = {Quarter(2010, 1): 0.10}
    qd = quasi_difference(u, s, QuasiDiffConfig(0.99, 1), Quarter(2010, 1))
    same_14 = qd == math.log(0.05) - 0.99 * (1 - 0.10) * math.log(0.06)

    effs = [abs(effect_n_periods(EffectQuery(**{**q.__dict__, "n": n})).log_effect)
            for n in (1, 4, 8, 64)]
    monotone = all(a <= b for a, b in zip(effs, effs[1:])) and effs[-1] <= abs(perm)
    gap = abs(perm) - effs[-1]
    ok = same_17 and same_14 and monotone and gap < 1e-2 * abs(perm)
    dt = time.perf_counter() - t0
    return CriterionResult(
        "identities", ok,
        f"k=1 permanent identity {same_17}, k=1 quasi-difference identity {same_14}, "
        f"monotone {monotone}, gap at n=64 {gap:.2e}",
        "exact identities, monotone convergence", mode, dt)


# ---------------------------------------------------------------------------
# synthetic-world checks
# ---------------------------------------------------------------------------

def check_recovery(mode="full", seed=11) -> CriterionResult:
    t0 = time.perf_counter()
    p = noise_free_params()
    world = simulate(p, seed=seed)
    res, _ = interactive_fe(world_design(world), r=0)
    err = abs(res.coef("benefits") - p.true_alpha)
    dt = time.perf_counter() - t0
    return CriterionResult("recovery", err <= 1e-8 and dt < 10,
                           f"|alpha_hat - alpha| = {err:.2e}", "<= 1e-8, <10s", mode, dt)


def random_benefit_paths(rng, n_states, T, levels=(26, 46, 60, 73, 99), stay=0.7):
    """Persistent random benefit schedules (exogenous to everything else)."""
    levels = np.asarray(levels)
    idx = rng.integers(0, len(levels), size=n_states)
    out = np.empty((n_states, T), dtype=int)
    for t in range(T):
        move = rng.random(n_states) > stay
        idx = np.where(move, rng.integers(0, len(levels), size=n_states), idx)
        out[:, t] = levels[idx]
    return out


def anticipation_coefficient(seed=3, n_states=10, T=30):
    """Coefficients of the current and next-quarter benefit gap on the quasi-difference.

    Uses a noise-free world with exogenous, persistent benefit paths.
    Returns (alpha_current, alpha_future, true_alpha).
    """
    p = noise_free_params()
    rng = np.random.default_rng(seed)
    b = random_benefit_paths(rng, n_states, T)
    world = simulate(p, n_states=n_states, counties_per_state=8, pairs_per_border=3, T=T,
                     seed=seed, benefits=b)
    d = world_design(world)
    idx = world.pair_index()
    lb = np.log(world.benefits[world.county_state])
    gap = np.array([lb[a] - lb[bb] for a, bb in idx])
    lead = gap[:, 1:d.T + 1]
    res = pooled_ols(d.with_regressor("benefits_lead", lead))
    return res.coef("benefits"), res.coef("benefits_lead"), p.true_alpha


def check_anticipation(mode="full") -> CriterionResult:
    t0 = time.perf_counter()
    cur, fut, alpha = anticipation_coefficient()
    dt = time.perf_counter() - t0
    ok = abs(fut) < 1e-8 and abs(cur - alpha) < 1e-8
    return CriterionResult("anticipation", ok,
                           f"future-benefit coefficient {fut:.2e}, current {cur:.6f}",
                           "|future| < 1e-8", mode, dt)


def _consistency_rep(seed, B, T=40):
    p = calibrated_params()
    # one extra quarter is used up by the quasi-difference lead
    world = simulate(p, T=T + 1, seed=seed)
    d = world_design(world)
    res, _ = interactive_fe(d, r=2)
    if B:
        res = with_bootstrap(res, ife_fitter(2), d, B, seed)
    return res.coef("benefits"), res.stderr("benefits"), p.true_alpha


def check_consistency(mode="full", reps=50, B=100, seed=1000, n_jobs=None) -> CriterionResult:
    """Coverage and bias of the interactive-effects slope, N=200 pairs, T=40."""
    t0 = time.perf_counter()
    out = ordered_map(lambda i: _consistency_rep(seed + i, B), range(reps), n_jobs)
    est, se, alpha = (np.array([o[j] for o in out]) for j in range(3))
    alpha = float(alpha[0])
    cover = float(np.mean(np.abs(est - alpha) <= 2 * se))
    bias = float(np.mean(np.abs(est - alpha)) / alpha)
    dt = time.perf_counter() - t0
    need_cover, need_bias = (0.90, 0.05) if mode == "full" else (0.80, 0.10)
    ok = cover >= need_cover and bias < need_bias and dt < 600
    return CriterionResult("consistency", ok,
                           f"coverage {cover:.0%} over {reps} reps, mean |bias| {bias:.2%} of alpha",
                           f"coverage >= {need_cover:.0%}, bias < {need_bias:.0%}", mode, dt)


def _contrast_rep(seed, chi, B):
    p = calibrated_params()
    world = inject_endogeneity(simulate(p, seed=seed), chi)
    d = world_design(world)
    z = world.state_z_diff()[:, :d.T]
    fe = additive_fe(d)
    res = endogeneity_test(d, z, r=2, bootstrap=B, seed=seed)["interactive_fe"]
    alpha = p.true_alpha
    fe_biased = abs(fe.coef("benefits") - alpha) > 2 * fe.stderr("benefits")
    alpha_ok = abs(res.alpha_with_z - alpha) <= 2 * res.result.stderr("benefits")
    chi_ok = abs(res.chi - chi) <= 2 * res.se
    return fe_biased, alpha_ok and chi_ok, res.p


def check_bias_contrast(mode="full", reps=50, chi=0.05, B=100, seed=2000, n_jobs=None):
    t0 = time.perf_counter()
    out = ordered_map(lambda i: _contrast_rep(seed + i, chi, B), range(reps), n_jobs)
    fe_rate = float(np.mean([o[0] for o in out]))
    ife_rate = float(np.mean([o[1] for o in out]))
    dt = time.perf_counter() - t0
    need_fe, need_ife = (0.5, 0.9) if mode == "full" else (0.5, 0.8)
    ok = fe_rate > need_fe and ife_rate >= need_ife and dt < 600
    return CriterionResult(
        "bias_contrast", ok,
        f"additive FE off by >2SE in {fe_rate:.0%}; IFE+z covers alpha and chi in {ife_rate:.0%}",
        f"> {need_fe:.0%} and >= {need_ife:.0%}", mode, dt)


def check_size(mode="full", reps=100, B=100, seed=3000, n_jobs=None) -> CriterionResult:
    """Rejection rate of chi = 0 at 5% when the truth is chi = 0."""
    t0 = time.perf_counter()
    out = ordered_map(lambda i: _contrast_rep(seed + i, 0.0, B), range(reps), n_jobs)
    rate = float(np.mean([o[2] < 0.05 for o in out]))
    dt = time.perf_counter() - t0
    band = 0.04 if mode == "full" else 0.10
    ok = abs(rate - 0.05) <= band
    return CriterionResult("size", ok, f"rejection rate {rate:.0%} over {reps} reps",
                           f"5% +/- {band * 100:.0f}pp", mode, dt)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def random_adjacent_polygons(rng, n_mid=None, jitter=1e-8):
    """Two simple polygons sharing a random y-monotone polyline.

    ``b``'s copy of the shared vertices is jittered by up to ``jitter``
    degrees to mimic independent digitisation.
    """
    n_mid = int(rng.integers(1, 8)) if n_mid is None else n_mid
    lon0, lat0 = rng.uniform(-120, -70), rng.uniform(25, 48)
    ys = np.sort(rng.uniform(0.0, 1.0, n_mid))
    xs = rng.uniform(-0.3, 0.3, n_mid)
    line = [(0.0, 0.0)] + list(zip(xs, ys)) + [(0.0, 1.0)]
    line = [(lon0 + 0.5 * x, lat0 + 0.5 * y) for x, y in line]
    a_ring = line + [(lon0 - 0.5, lat0 + 0.5), (lon0 - 0.5, lat0), line[0]]
    jit = [(x + rng.uniform(-jitter, jitter), y + rng.uniform(-jitter, jitter)) for x, y in line]
    jit[0], jit[-1] = line[0], line[-1]
    b_ring = jit[::-1] + [(lon0 + 0.5, lat0), (lon0 + 0.5, lat0 + 0.5), jit[-1]]
    return CountyPolygon("01001", (tuple(a_ring),)), CountyPolygon("02001", (tuple(b_ring),)), line


def check_geometry(mode="full", seed=4000, n_centroid=1000, n_boundary=100) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)

    seg = SharedBoundary("eq", (((1.0, -1.0), (1.0, 1.0)),))
    d = center_to_boundary_km(PopulationCenter("00000", 0.0, 0.0, 1), seg)
    dist_ok = abs(d - 111.19) <= 0.5

    cent_ok = True
    for _ in range(n_centroid):
        n = int(rng.integers(1, 30))
        blocks = [BlockPoint(f"01001{i:06d}", float(rng.uniform(-88, -84)),
                             float(rng.uniform(30, 35)), int(rng.integers(0, 5000)))
                  for i in range(n)]
        if sum(b.pop for b in blocks) == 0:
            blocks[0] = BlockPoint(blocks[0].block_geoid, blocks[0].lon, blocks[0].lat, 1)
        c = population_center(blocks)
        perm = [blocks[i] for i in rng.permutation(n)]
        cp = population_center(perm)
        j = int(rng.integers(0, n))
        bj = blocks[j]
        h = bj.pop // 2
        split = blocks[:j] + blocks[j + 1:] + [
            BlockPoint(bj.block_geoid + "a", bj.lon, bj.lat, h),
            BlockPoint(bj.block_geoid + "b", bj.lon, bj.lat, bj.pop - h)]
        cs = population_center(split)
        lon_min, lon_max = min(b.lon for b in blocks), max(b.lon for b in blocks)
        lat_min, lat_max = min(b.lat for b in blocks), max(b.lat for b in blocks)
        inside = lon_min - 1e-12 <= c.lon <= lon_max + 1e-12 and lat_min - 1e-12 <= c.lat <= lat_max + 1e-12
        if not (inside and abs(c.lon - cp.lon) <= 1e-9 and abs(c.lat - cp.lat) <= 1e-9
                and abs(c.lon - cs.lon) <= 1e-9 and abs(c.lat - cs.lat) <= 1e-9):
            cent_ok = False
            break

    bnd_ok = True
    for _ in range(n_boundary):
        a, b, _line = random_adjacent_polygons(rng)
        ab = shared_boundary(a, b, 1e-6)
        ba = shared_boundary(b, a, 1e-6)
        if ab.empty or ba.empty or ab.geometry().hausdorff_distance(ba.geometry()) > 2e-6:
            bnd_ok = False
            break
    dt = time.perf_counter() - t0
    return CriterionResult(
        "geometry", dist_ok and cent_ok and bnd_ok,
        f"equator distance {d:.3f} km; centroid invariants {cent_ok} ({n_centroid}); "
        f"boundary symmetry {bnd_ok} ({n_boundary})",
        "111.19 +/- 0.5 km and all invariants", mode, dt)


CRITERIA: dict[str, Callable[..., CriterionResult]] = {
    "scenarios": check_scenarios,
    "permanent": check_permanent,
    "recovery": check_recovery,
    "consistency": check_consistency,
    "bias_contrast": check_bias_contrast,
    "anticipation": check_anticipation,
    "size": check_size,
    "geometry": check_geometry,
    "identities": check_identities,
}
MONTE_CARLO = ("consistency", "bias_contrast", "size")


def run_validation(names=None, reps=None, B=100, seed=None, n_jobs=None) -> list[CriterionResult]:
    """Run the named criteria (all by default).

    ``reps`` overrides the Monte Carlo replication counts; fewer than 50
    switches those suites to the wider "smoke" thresholds.
    """
    names = list(names) if names else list(CRITERIA)
    unknown = [n for n in names if n not in CRITERIA]
    if unknown:
        raise ParameterError(f"unknown criteria {unknown}; valid: {', '.join(CRITERIA)}")
    if reps is not None and reps < 10:
        raise ParameterError("reps must be at least 10")
    mode = "smoke" if reps is not None and reps < 50 else "full"
    out = []
    for name in names:
        fn = CRITERIA[name]
        if name in MONTE_CARLO:
            kw = {"mode": mode, "B": B, "n_jobs": n_jobs}
            if reps is not None:
                kw["reps"] = reps if name != "size" or mode == "smoke" else max(reps, 100)
            if seed is not None:
                kw["seed"] = seed
            out.append(fn(**kw))
        else:
            out.append(fn(mode="full"))
    return out
