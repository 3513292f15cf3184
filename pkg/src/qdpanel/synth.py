"""Synthetic county panels from a log-linear equilibrium search model.

Each county's market tightness solves, backwards in time under perfect
foresight::

    log theta_t = kappa * (1 - beta*(1 - s_bar)) * log pi_t
                  + beta * (1 - s_t) * log theta_{t+1} + log eta_t
    log pi_t    = gamma_z * log z_t - gamma_b * log b_t
    log u_t     = lambda_u * log theta_t

so the quasi-difference ``log u_t - beta*(1-s_t)*log u_{t+1}`` equals
``alpha * log b_t`` plus productivity and shock terms, with
``alpha = -gamma_b * lambda_u * kappa * (1 - beta*(1 - s_bar))``.

Geography is a ring of states; each state borders the next one, and its
first ``pairs_per_border`` counties pair with the following state's next
``pairs_per_border`` counties. Remaining counties are interior. Benefit
weeks follow a tiered trigger on the previous quarter's mean unemployment
of each state's interior counties, solved jointly with unemployment by
fixed-point iteration.

Shocks, in quasi-differenced (log-point) units:

* county noise ``mu_c' F_t + v_ct`` with AR(1) common factors ``F`` and
  loadings that share a state component, so they move the triggers too;
* state productivity ``omega_st`` (AR(1)), felt by interior counties only;
* county productivity ``xi_ct`` (AR(1)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError
from .panel_data import (
    BorderPair, CountyObs, CountyPanel, Quarter, SeparationSeries,
    quarter_range, write_notices_csv, write_pairs_csv, write_separation_csv,
    write_state_gdp_csv, write_unemployment_csv, write_wages_csv,
)

logger = logging.getLogger(__name__)

MAX_WEEKS = 99


@dataclass(frozen=True)
class NoiseParams:
    sigma_eta: float = 0.0       # iid shock to log eta
    r_true: int = 0
    sigma_F: float = 0.0         # factor innovation sd
    rho_F: float = 0.8
    sigma_loading: float = 0.0   # state loading sd; county deviations use half of it
    sigma_v: float = 0.0         # iid county noise, log points


@dataclass(frozen=True)
class ZProcess:
    rho: float = 0.9
    sigma_state: float = 0.06
    sigma_county: float = 0.0


@dataclass(frozen=True)
class StructuralParams:
    beta: float = 0.99
    s_bar: float = 0.10
    s_rho: float = 0.8
    s_sigma: float = 0.0
    kappa_tilde: float = 1.0
    lambda_u: float = -1.0
    gamma_z: float = 1.0
    gamma_b: float = 0.5
    c: float = 1.0               # vacancy cost; unused by the log-linear solution
    base_urate: float = 0.05
    noise: NoiseParams = field(default_factory=NoiseParams)
    z_process: ZProcess = field(default_factory=ZProcess)

    def __post_init__(self):
        x = self.beta * (1.0 - self.s_bar)
        if not 0.0 < x < 1.0:
            raise ParameterError(f"need 0 < beta*(1-s_bar) < 1, got {x}")
        if not self.lambda_u < 0:
            raise ParameterError("lambda_u must be negative")
        if not self.gamma_b > 0:
            raise ParameterError("gamma_b must be positive")
        if not self.gamma_z > 0:
            raise ParameterError("gamma_z must be positive")
        if not self.kappa_tilde > 0:
            raise ParameterError("kappa_tilde must be positive")
        if self.noise.r_true < 0:
            raise ParameterError("r_true must be >= 0")
        if not 0.0 < self.base_urate < 1.0:
            raise ParameterError("base_urate must be in (0, 1)")

    @property
    def true_alpha(self) -> float:
        return -self.gamma_b * self.lambda_u * self.kappa_tilde * (1.0 - self.beta * (1.0 - self.s_bar))

    @property
    def profit_weight(self) -> float:
        return self.kappa_tilde * (1.0 - self.beta * (1.0 - self.s_bar))

    def log_z0(self, base_weeks: int = 26) -> float:
        """Productivity level giving ``base_urate`` in steady state at base weeks."""
        return (math.log(self.base_urate) / (self.lambda_u * self.kappa_tilde)
                + self.gamma_b * math.log(base_weeks)) / self.gamma_z


DEFAULT_TIERS = ((0.06, 20), (0.065, 14), (0.07, 13), (0.08, 6), (0.085, 20))


@dataclass(frozen=True)
class PolicyRule:
    """Tiered extension schedule keyed on state unemployment."""

    base_weeks: int = 26
    tiers: tuple[tuple[float, int], ...] = DEFAULT_TIERS

    def __post_init__(self):
        th = [t for t, _ in self.tiers]
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ParameterError("tier thresholds must be strictly increasing")
        if any(e < 0 for _, e in self.tiers):
            raise ParameterError("extra weeks must be nonnegative")
        if self.base_weeks < 1 or self.base_weeks + sum(e for _, e in self.tiers) > MAX_WEEKS:
            raise ParameterError(f"cumulative weeks must lie in 1..{MAX_WEEKS}")

    def weeks(self, urate):
        urate = np.asarray(urate, dtype=float)
        out = np.full(urate.shape, self.base_weeks, dtype=int)
        for threshold, extra in self.tiers:
            out = out + np.where(urate >= threshold, extra, 0)
        return out


@dataclass
class SyntheticWorld:
    params: StructuralParams
    rule: PolicyRule
    seed: int
    states: list[str]
    counties: list[str]            # row order of the arrays below
    county_state: np.ndarray       # index into states, per county
    border: np.ndarray             # bool, per county
    pairs: list[BorderPair]
    quarters: list[Quarter]
    separation: np.ndarray         # T
    log_z: np.ndarray              # C x T
    state_log_z: np.ndarray        # S x T, level incl. the common part
    log_eta: np.ndarray            # C x T
    wage_noise: np.ndarray         # C x T
    benefits: np.ndarray           # S x T, integer weeks
    log_u: np.ndarray              # C x T
    chi: float = 0.0
    benefits_exogenous: bool = False
    trigger_iterations: int = 0

    @property
    def true_alpha(self) -> float:
        return self.params.true_alpha

    @property
    def separation_series(self) -> SeparationSeries:
        return SeparationSeries(dict(zip(self.quarters, map(float, self.separation))))

    @property
    def urate(self) -> np.ndarray:
        return np.exp(self.log_u)

    def benefit_map(self) -> dict[tuple[str, Quarter], int]:
        return {(st, q): int(self.benefits[i, t])
                for i, st in enumerate(self.states) for t, q in enumerate(self.quarters)}

    def state_gdp_map(self) -> dict[tuple[str, Quarter], float]:
        return {(st, q): float(np.exp(self.state_log_z[i, t]))
                for i, st in enumerate(self.states) for t, q in enumerate(self.quarters)}

    def wages(self) -> np.ndarray:
        z0 = self.params.log_z0(self.rule.base_weeks)
        return 800.0 * np.exp(0.3 * (self.log_z - z0) + self.wage_noise)

    @property
    def panels(self) -> dict[str, CountyPanel]:
        u = self.urate
        w = self.wages()
        gdp = np.exp(self.state_log_z)
        out = {}
        for c, fips in enumerate(self.counties):
            s = self.county_state[c]
            obs = {q: CountyObs(float(u[c, t]), float(w[c, t]), int(self.benefits[s, t]),
                                float(gdp[s, t]))
                   for t, q in enumerate(self.quarters)}
            out[fips] = CountyPanel(fips, obs)
        return out

    def pair_index(self) -> list[tuple[int, int]]:
        pos = {f: i for i, f in enumerate(self.counties)}
        return [(pos[p.county_a], pos[p.county_b]) for p in self.pairs]

    def state_z_diff(self) -> np.ndarray:
        """Per-pair, per-quarter difference of state log productivity (a minus b)."""
        idx = self.pair_index()
        sa = np.array([self.county_state[a] for a, _ in idx])
        sb = np.array([self.county_state[b] for _, b in idx])
        return self.state_log_z[sa] - self.state_log_z[sb]

    def distances(self, seed_offset: int = 7) -> dict[tuple[str, str], float]:
        """Time-invariant county-to-border distances in km (drawn, not derived)."""
        rng = np.random.default_rng([self.seed, seed_offset])
        out = {}
        for p in self.pairs:
            da, db = rng.uniform(5.0, 60.0, size=2)
            out[(p.pair_id, p.county_a)] = float(da)
            out[(p.pair_id, p.county_b)] = float(db)
        return out

    def write_csv(self, out_dir) -> dict[str, Path]:
        """Write the world in the raw input schemas; returns the file paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        panels = list(self.panels.values())
        paths = {
            "unemployment": out / "unemployment.csv",
            "wages": out / "wages.csv",
            "benefits": out / "benefits_notices.csv",
            "separation": out / "separation.csv",
            "state_gdp": out / "state_gdp.csv",
            "pairs": out / "pairs.csv",
            "distances": out / "distances.csv",
        }
        write_unemployment_csv(panels, paths["unemployment"])
        write_wages_csv(panels, paths["wages"])
        write_notices_csv(self.benefit_map(), paths["benefits"], self.rule.base_weeks)
        write_separation_csv(self.separation_series, paths["separation"])
        write_state_gdp_csv(self.state_gdp_map(), paths["state_gdp"])
        write_pairs_csv(self.pairs, paths["pairs"])
        with paths["distances"].open("w", encoding="utf-8") as fh:
            fh.write("pair_id,fips,dist_km\n")
            for (pid, fips), d in self.distances().items():
                fh.write(f"{pid},{fips},{d!r}\n")
        return paths


def equilibrium_log_u(params: StructuralParams, log_z, log_b, log_eta, s) -> np.ndarray:
    """Solve log unemployment backwards for each row of the inputs.

    The value after the last quarter is the steady state of the last
    quarter's profits, i.e. conditions are assumed to persist.
    """
    log_z, log_b, log_eta = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (log_z, log_b, log_eta))
    s = np.asarray(s, dtype=float)
    T = log_z.shape[1]
    log_pi = params.gamma_z * log_z - params.gamma_b * log_b
    a = params.profit_weight
    theta = np.empty_like(log_pi)
    nxt = params.kappa_tilde * log_pi[:, -1]
    for t in range(T - 1, -1, -1):
        theta[:, t] = a * log_pi[:, t] + params.beta * (1.0 - s[t]) * nxt + log_eta[:, t]
        nxt = theta[:, t]
    return params.lambda_u * theta


def _ar1(rng, rho, sigma, shape):
    """AR(1) paths along the last axis, started from the stationary law."""
    out = np.zeros(shape)
    if sigma == 0:
        return out
    eps = rng.standard_normal(shape)
    sd0 = sigma / math.sqrt(1.0 - rho ** 2) if abs(rho) < 1 else sigma
    out[..., 0] = sd0 * eps[..., 0]
    for t in range(1, shape[-1]):
        out[..., t] = rho * out[..., t - 1] + sigma * eps[..., t]
    return out


def _build_geography(n_states, counties_per_state, pairs_per_border):
    if n_states < 2:
        raise ParameterError("need at least two states")
    if n_states > 99:
        raise ParameterError("at most 99 states")
    n_borders = 1 if n_states == 2 else n_states
    need = 2 * pairs_per_border if n_borders > 1 else pairs_per_border
    if counties_per_state < need:
        raise ParameterError(f"counties_per_state must be >= {need}")
    states = [f"{i + 1:02d}" for i in range(n_states)]
    counties, county_state = [], []
    for i, st in enumerate(states):
        for j in range(counties_per_state):
            counties.append(f"{st}{2 * j + 1:03d}")
            county_state.append(i)
    border = np.zeros(len(counties), dtype=bool)
    pairs = []
    P = pairs_per_border
    for i in range(n_borders):
        k = (i + 1) % n_states
        for j in range(P):
            a = i * counties_per_state + j
            b = k * counties_per_state + (P + j if n_borders > 1 else j)
            border[a] = border[b] = True
            pairs.append(BorderPair(f"{counties[a]}-{counties[b]}", counties[a], counties[b]))
    return states, counties, np.array(county_state), border, pairs


def _trigger_weights(county_state, border, n_states):
    """Row-normalised state x county weights over interior counties (all if none)."""
    C = len(county_state)
    W = np.zeros((n_states, C))
    for s in range(n_states):
        members = county_state == s
        interior = members & ~border
        use = interior if interior.any() else members
        W[s, use] = 1.0 / use.sum()
    return W


def _solve(params, rule, log_z, log_eta, sep, county_state, trigger_W, benefits=None,
           max_rounds=200):
    """Benefits and log unemployment, jointly when benefits are not given."""
    if benefits is not None:
        benefits = np.asarray(benefits, dtype=int)
        log_u = equilibrium_log_u(params, log_z, np.log(benefits[county_state]), log_eta, sep)
        return benefits, log_u, 0
    S = trigger_W.shape[0]
    T = log_z.shape[1]
    b = np.full((S, T), rule.base_weeks, dtype=int)
    b[:, 0] = rule.weeks(np.full(S, params.base_urate))
    for rounds in range(1, max_rounds + 1):
        log_u = equilibrium_log_u(params, log_z, np.log(b[county_state]), log_eta, sep)
        state_u = trigger_W @ np.exp(log_u)
        new = b.copy()
        new[:, 1:] = rule.weeks(state_u[:, :-1])
        if np.array_equal(new, b):
            return b, log_u, rounds
        b = new
    logger.warning("benefit trigger did not reach a fixed point in %d rounds", max_rounds)
    log_u = equilibrium_log_u(params, log_z, np.log(b[county_state]), log_eta, sep)
    return b, log_u, max_rounds


def simulate(
    params: StructuralParams,
    rule: PolicyRule | None = None,
    n_states: int = 20,
    counties_per_state: int = 24,
    T: int = 40,
    seed: int = 0,
    pairs_per_border: int = 10,
    start: Quarter = Quarter(2005, 1),
    downturn: tuple[int, float, float] | None = None,
    benefits=None,
) -> SyntheticWorld:
    """Draw a synthetic world.

    Parameters
    ----------
    params, rule
        Structural parameters and the benefit trigger.
    n_states, counties_per_state, pairs_per_border
        Geography; the ring has ``n_states`` borders (one when there are
        two states) with ``pairs_per_border`` pairs each.
    T
        Number of quarters, at least 8.
    seed
        Seed; the same seed gives a bit-identical world.
    downturn
        ``(start_index, depth, persistence)``: a common productivity drop
        of ``depth`` log points decaying geometrically from ``start_index``.
    benefits
        Optional ``(n_states, T)`` integer weeks overriding the trigger.
    """
    rule = rule or PolicyRule()
    if T < 8:
        raise ParameterError("T must be at least 8")
    states, counties, county_state, border, pairs = _build_geography(
        n_states, counties_per_state, pairs_per_border)
    C, S = len(counties), len(states)
    noise, zp = params.noise, params.z_process
    rng = np.random.default_rng(seed)

    sep = params.s_bar + _ar1(rng, params.s_rho, params.s_sigma, (T,))
    sep = np.clip(sep, 0.01, 0.5)

    r = noise.r_true
    F = _ar1(rng, noise.rho_F, noise.sigma_F, (r, T)).T if r else np.zeros((T, 0))
    state_load = rng.normal(0.0, noise.sigma_loading, (S, r))
    county_load = state_load[county_state] + rng.normal(0.0, noise.sigma_loading / 2, (C, r))
    v = noise.sigma_v * rng.standard_normal((C, T))
    eta = noise.sigma_eta * rng.standard_normal((C, T))
    # county noise enters the quasi-difference as lambda_u * log_eta
    log_eta = (county_load @ F.T + v) / params.lambda_u + eta

    omega = _ar1(rng, zp.rho, zp.sigma_state, (S, T))
    xi = _ar1(rng, zp.rho, zp.sigma_county, (C, T))
    common = np.zeros(T)
    if downturn is not None:
        t0, depth, persist = downturn
        for t in range(int(t0), T):
            common[t] = -depth * persist ** (t - t0)
    z0 = params.log_z0(rule.base_weeks)
    state_log_z = z0 + common + omega
    log_z = z0 + common + xi + np.where(border[:, None], 0.0, omega[county_state])

    wage_noise = 0.02 * rng.standard_normal((C, T))

    trigger_W = _trigger_weights(county_state, border, S)
    b, log_u, rounds = _solve(params, rule, log_z, log_eta, sep, county_state, trigger_W, benefits)
    if np.any(log_u >= 0):
        raise DataError("simulated unemployment reached 100%; reduce shock scales")

    return SyntheticWorld(
        params, rule, seed, states, counties, county_state, border, pairs,
        quarter_range(start, start.succ(T - 1)), sep, log_z, state_log_z, log_eta,
        wage_noise, b, log_u, benefits_exogenous=benefits is not None,
        trigger_iterations=rounds,
    )


def inject_endogeneity(world: SyntheticWorld, chi: float) -> SyntheticWorld:
    """Add ``chi`` times state productivity to border counties' outcomes.

    After pair differencing this puts ``chi * dz`` into the error, with
    ``dz`` the cross-state difference of log productivity. The equilibrium
    (including the trigger) is re-solved.
    """
    if chi == 0:
        return world
    p = world.params
    z0 = p.log_z0(world.rule.base_weeks)
    dev = world.state_log_z - z0
    extra = np.where(world.border[:, None], chi * dev[world.county_state], 0.0)
    log_eta = world.log_eta + extra / p.lambda_u
    trigger_W = _trigger_weights(world.county_state, world.border, len(world.states))
    b, log_u, rounds = _solve(p, world.rule, world.log_z, log_eta, world.separation,
                              world.county_state, trigger_W,
                              world.benefits if world.benefits_exogenous else None)
    if np.any(log_u >= 0):
        raise DataError("unemployment reached 100% after injection")
    return replace(world, log_eta=log_eta, benefits=b, log_u=log_u,
                   chi=world.chi + chi, trigger_iterations=rounds)
