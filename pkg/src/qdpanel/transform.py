"""Quasi-differenced outcomes and pair-differenced regression samples.

For a county with unemployment ``u`` and the national separation rate
``s`` the k-period quasi-difference at ``t`` is::

    log u_t - prod_{m=1..k} beta * (1 - s_{t+m-1}) * log u_{t+k}

Pair samples difference everything as county_a minus county_b.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import HorizonError, ParameterError
from .panel_data import PairPanel, Quarter, SeparationSeries

CONTROLS = ("distance", "wages", "state_gdp")
_CONTROL_FIELD = {"wages": "avg_weekly_wage", "state_gdp": "state_gdp_per_worker"}


@dataclass(frozen=True)
class QuasiDiffConfig:
    beta: float = 0.9975
    horizon_k: int = 1

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta must be in (0, 1], got {self.beta}")
        if int(self.horizon_k) != self.horizon_k or self.horizon_k < 1:
            raise ParameterError(f"horizon_k must be an integer >= 1, got {self.horizon_k}")


def discount_chain(s: SeparationSeries | Mapping[Quarter, float], t: Quarter, k: int,
                   beta: float) -> float:
    """Product of beta * (1 - s) over quarters t .. t+k-1."""
    w = 1.0
    for m in range(k):
        q = t.succ(m)
        try:
            sv = s[q]
        except KeyError:
            raise HorizonError(q, "separation series") from None
        w *= beta * (1.0 - sv)
    return w


def quasi_difference(u: Mapping[Quarter, float], s, cfg: QuasiDiffConfig, t: Quarter) -> float:
    """k-period quasi-difference of log ``u`` at quarter ``t``.

    Raises
    ------
    HorizonError
        If ``u`` or ``s`` lacks a quarter in ``t .. t+k``.
    """
    k = cfg.horizon_k
    for m in range(k + 1):
        q = t.succ(m)
        if q not in u:
            raise HorizonError(q, "unemployment series")
    w = discount_chain(s, t, k, cfg.beta)
    u0, uk = u[t], u[t.succ(k)]
    if u0 <= 0 or uk <= 0:
        raise ParameterError("unemployment must be strictly positive")
    return math.log(u0) - w * math.log(uk)


def regressor_names(k: int) -> list[str]:
    return ["benefits"] if k == 1 else [f"benefits_{m}" for m in range(1, k + 1)]


@dataclass(frozen=True)
class QuasiDiffSample:
    pair_id: str
    t: Quarter
    y: float
    x: tuple[float, ...]
    controls: tuple[float, ...] = ()


@dataclass
class SampleSet:
    samples: list[QuasiDiffSample]
    regressors: list[str]
    controls: tuple[str, ...]
    config: QuasiDiffConfig
    outcome: str
    dropped: dict[str, int] = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.regressors) + [f"d_log_{c}" for c in self.controls]


def build_samples(
    pairs: Iterable[PairPanel],
    s: SeparationSeries,
    cfg: QuasiDiffConfig,
    controls: Sequence[str] = (),
    distances: Mapping[tuple[str, str], float] | None = None,
    outcome: str = "quasi",
) -> SampleSet:
    """Pair-differenced samples for every quarter with a full k-period horizon.

    Parameters
    ----------
    pairs
        Pair panels over a common window.
    s
        National quarterly separation rate.
    cfg
        Discount factor and horizon.
    controls
        Any of ``"distance"``, ``"wages"``, ``"state_gdp"``; each enters as the
        a-minus-b difference of logs.
    distances
        ``{(pair_id, fips): km}``, required when ``"distance"`` is selected.
    outcome
        ``"quasi"`` for the quasi-differenced outcome with k benefit
        regressors; ``"log"`` for the plain difference of log unemployment
        with the current benefit difference only.

    Returns
    -------
    SampleSet
        Samples plus a per-pair count of rows dropped for missing controls.
    """
    controls = tuple(controls)
    unknown = [c for c in controls if c not in CONTROLS]
    if unknown:
        raise ParameterError(f"unknown controls {unknown}; valid: {list(CONTROLS)}")
    if "distance" in controls and distances is None:
        raise ParameterError("distance control selected but no distances supplied")
    if outcome not in ("quasi", "log"):
        raise ParameterError(f"outcome must be 'quasi' or 'log', got {outcome!r}")

    k = cfg.horizon_k
    n_x = k if outcome == "quasi" else 1
    samples: list[QuasiDiffSample] = []
    dropped: Counter = Counter()
    for pp in pairs:
        a, b = pp.panel_a, pp.panel_b
        ua, ub = a.series("urate"), b.series("urate")
        in_window = set(pp.quarters)
        d_dist = None
        if "distance" in controls:
            da = distances.get((pp.pair_id, a.county))
            db = distances.get((pp.pair_id, b.county))
            if da and db and da > 0 and db > 0:
                d_dist = math.log(da) - math.log(db)
        for t in pp.quarters:
            if t.succ(k) not in in_window:
                continue
            oa = [a.obs[t.succ(m)] for m in range(n_x)]
            ob = [b.obs[t.succ(m)] for m in range(n_x)]
            if any(o.benefit_weeks is None or o.benefit_weeks <= 0 for o in oa + ob):
                raise ParameterError(f"pair {pp.pair_id}: benefit weeks must be positive near {t}")
            ctrl = []
            for c in controls:
                if c == "distance":
                    v = d_dist
                else:
                    fa = getattr(a.obs[t], _CONTROL_FIELD[c])
                    fb = getattr(b.obs[t], _CONTROL_FIELD[c])
                    v = math.log(fa) - math.log(fb) if fa and fb else None
                if v is None:
                    break
                ctrl.append(v)
            if len(ctrl) < len(controls):
                dropped[pp.pair_id] += 1
                continue
            if outcome == "quasi":
                y = quasi_difference(ua, s, cfg, t) - quasi_difference(ub, s, cfg, t)
            else:
                y = math.log(ua[t]) - math.log(ub[t])
            x = tuple(math.log(pa.benefit_weeks) - math.log(pb.benefit_weeks)
                      for pa, pb in zip(oa, ob))
            samples.append(QuasiDiffSample(pp.pair_id, t, y, x, tuple(ctrl)))
    names = regressor_names(k) if outcome == "quasi" else ["benefits"]
    return SampleSet(samples, names, controls, cfg, outcome, dict(dropped))


def write_samples_csv(sample_set: SampleSet, path) -> None:
    """Debug dump with columns pair_id,t,y,x1..xk,<controls>."""
    n_x = len(sample_set.regressors)
    header = ["pair_id", "t", "y"] + [f"x{i}" for i in range(1, n_x + 1)]
    header += [f"d_log_{c}" for c in sample_set.controls]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for smp in sample_set.samples:
            w.writerow([smp.pair_id, str(smp.t), repr(smp.y)]
                       + [repr(v) for v in smp.x] + [repr(v) for v in smp.controls])
