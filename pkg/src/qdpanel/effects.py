"""Unemployment effects implied by estimated benefit coefficients.

With ``x = beta * (1 - s)`` the calculators are::

    n periods        alpha * (1 - x**n) / (1 - x) * log(w2 / w1)
    permanent        alpha / (1 - x) * log(w2 / w1)
    k-ahead          sum(alpha_m) * log(w2 / w1)
    k-ahead, perm.   sum(alpha_m) / (1 - x**k) * log(w2 / w1)

The implied rate is ``base_urate * exp(log_effect)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DivergenceError, ParameterError

EFFECTS_HEADER = ("scenario_id", "alpha", "beta", "s", "w1", "w2", "n",
                  "log_effect", "base_urate", "implied_urate")
PATHS_HEADER = ("scenario_id", "n", "log_effect", "implied_urate")


@dataclass(frozen=True)
class EffectQuery:
    alpha: float
    beta: float = 0.99
    s: float = 0.10
    w1: float = 26
    w2: float = 99
    n: float = 1
    base_urate: float = 0.05

    @property
    def persistence(self) -> float:
        return self.beta * (1.0 - self.s)

    def log_ratio(self) -> float:
        if not (self.w1 > 0 and self.w2 > 0):
            raise ParameterError(f"benefit weeks must be positive, got w1={self.w1}, w2={self.w2}")
        return math.log(self.w2) - math.log(self.w1)


@dataclass(frozen=True)
class EffectResult:
    log_effect: float
    implied_urate: float


def _result(log_effect: float, q: EffectQuery) -> EffectResult:
    return EffectResult(log_effect, q.base_urate * math.exp(log_effect))


def _check_convergent(x: float) -> None:
    if not x < 1.0:
        raise DivergenceError(f"beta*(1-s) = {x} >= 1; permanent effect diverges")


def effect_n_periods(q: EffectQuery) -> EffectResult:
    """Cumulative log effect of holding ``w2`` instead of ``w1`` for ``n`` quarters."""
    n = q.n
    if math.isinf(n) or int(n) != n or n < 1:
        raise ParameterError(f"n must be a finite integer >= 1, got {n}")
    x = q.persistence
    mult = float(n) if x == 1.0 else (1.0 - x ** int(n)) / (1.0 - x)
    return _result(q.alpha * mult * q.log_ratio(), q)


def effect_permanent(q: EffectQuery) -> EffectResult:
    x = q.persistence
    _check_convergent(x)
    return _result(q.alpha / (1.0 - x) * q.log_ratio(), q)


def effect_k_ahead(alphas: Sequence[float], q: EffectQuery) -> EffectResult:
    if len(alphas) == 0:
        raise ParameterError("need at least one coefficient")
    return _result(math.fsum(alphas) * q.log_ratio(), q)


def effect_k_permanent(alphas: Sequence[float], q: EffectQuery) -> EffectResult:
    if len(alphas) == 0:
        raise ParameterError("need at least one coefficient")
    x = q.persistence
    _check_convergent(x)
    k = len(alphas)
    return _result(math.fsum(alphas) / (1.0 - x ** k) * q.log_ratio(), q)


@dataclass(frozen=True)
class Scenario:
    """One row of an effects run.

    ``kind`` is ``"n_periods"``, ``"permanent"``, ``"k_ahead"`` or
    ``"k_permanent"``. For the k-period kinds ``alphas`` holds the
    coefficient vector and ``n`` is ignored.
    """

    scenario_id: str
    alpha: float
    w1: float
    w2: float
    base_urate: float
    n: float = math.inf
    beta: float = 0.99
    s: float = 0.10
    kind: str = "n_periods"
    alphas: tuple[float, ...] = ()

    def query(self) -> EffectQuery:
        return EffectQuery(self.alpha, self.beta, self.s, self.w1, self.w2, self.n, self.base_urate)

    def evaluate(self) -> EffectResult:
        q = self.query()
        if self.kind == "k_ahead":
            return effect_k_ahead(self.alphas or (self.alpha,), q)
        if self.kind == "k_permanent":
            return effect_k_permanent(self.alphas or (self.alpha,), q)
        if self.kind == "permanent" or math.isinf(self.n):
            return effect_permanent(q)
        if self.kind == "n_periods":
            return effect_n_periods(q)
        raise ParameterError(f"unknown scenario kind {self.kind!r}")

    def path(self, n_max: int) -> list[EffectResult]:
        """Finite-horizon effects for n = 1..n_max (plot data)."""
        out = []
        for n in range(1, n_max + 1):
            q = EffectQuery(self.alpha, self.beta, self.s, self.w1, self.w2, n, self.base_urate)
            out.append(effect_n_periods(q))
        return out


def _num(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return format(float(x), ".12g")


def run_scenarios(scenarios: Iterable[Scenario], path, paths_path=None, n_max: int = 40):
    """Evaluate scenarios into ``effects.csv`` and optional per-n path data.

    Rows with invalid weeks are reported back and skipped; the others are
    still written.

    Returns
    -------
    list of (scenario_id, error message)
    """
    errors = []
    rows, path_rows = [], []
    for sc in scenarios:
        try:
            res = sc.evaluate()
        except (ParameterError, DivergenceError) as exc:
            errors.append((sc.scenario_id, str(exc)))
            continue
        alpha = math.fsum(sc.alphas) if sc.alphas else sc.alpha
        n = len(sc.alphas) if sc.kind.startswith("k_") and sc.alphas else sc.n
        if sc.kind == "k_permanent":
            n = math.inf
        rows.append([sc.scenario_id, _num(alpha), _num(sc.beta), _num(sc.s), _num(sc.w1),
                     _num(sc.w2), _num(n), _num(res.log_effect), _num(sc.base_urate),
                     _num(res.implied_urate)])
        if paths_path is not None and sc.kind in ("n_periods", "permanent"):
            for i, pr in enumerate(sc.path(n_max), start=1):
                path_rows.append([sc.scenario_id, i, _num(pr.log_effect), _num(pr.implied_urate)])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EFFECTS_HEADER)
        w.writerows(rows)
    if paths_path is not None:
        with Path(paths_path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PATHS_HEADER)
            w.writerows(path_rows)
    return errors
