"""Pooled OLS, two-way fixed effects and interactive fixed effects on pair panels.

All estimators take a balanced :class:`DesignPanel` (N pairs by T quarters)
and cluster inference by pair. The interactive-effects fit alternates
between OLS given the common component and principal components of the
residual panel given the coefficients.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from ._parallel import ordered_map
from .errors import CollinearityError, ParameterError, SingularDesignError
from .transform import SampleSet

logger = logging.getLogger(__name__)

ESTIMATES_HEADER = ("model", "regressor", "coef", "se", "p", "converged", "r", "iterations")


@dataclass(frozen=True)
class DesignPanel:
    """Balanced regression panel.

    Attributes
    ----------
    Y : ndarray, shape (N, T)
    X : ndarray, shape (N, T, J)
    names : regressor names, length J
    pair_ids : length N
    quarters : length T
    """

    Y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    pair_ids: tuple = ()
    quarters: tuple = ()

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 2:
            X = X[:, :, None]
        if Y.ndim != 2 or X.ndim != 3 or X.shape[:2] != Y.shape:
            raise ParameterError(f"inconsistent shapes Y{Y.shape} X{X.shape}")
        if X.shape[2] < 1:
            raise ParameterError("need at least one regressor")
        if len(self.names) != X.shape[2]:
            raise ParameterError("names must match the number of regressors")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(self.names))
        if not self.pair_ids:
            object.__setattr__(self, "pair_ids", tuple(str(i) for i in range(Y.shape[0])))
        if not self.quarters:
            object.__setattr__(self, "quarters", tuple(range(Y.shape[1])))

    @property
    def N(self) -> int:
        return self.Y.shape[0]

    @property
    def T(self) -> int:
        return self.Y.shape[1]

    @property
    def J(self) -> int:
        return self.X.shape[2]

    def take(self, idx) -> "DesignPanel":
        idx = np.asarray(idx)
        return DesignPanel(self.Y[idx], self.X[idx], self.names,
                           tuple(self.pair_ids[i] for i in idx), self.quarters)

    def select(self, names: Sequence[str]) -> "DesignPanel":
        cols = [self.names.index(n) for n in names]
        return DesignPanel(self.Y, self.X[:, :, cols], tuple(names), self.pair_ids, self.quarters)

    def with_regressor(self, name: str, values) -> "DesignPanel":
        values = np.asarray(values, dtype=float)
        if values.shape != self.Y.shape:
            raise ParameterError(f"{name} must have shape {self.Y.shape}, got {values.shape}")
        X = np.concatenate([self.X, values[:, :, None]], axis=2)
        return DesignPanel(self.Y, X, self.names + (name,), self.pair_ids, self.quarters)


def to_design_panel(sample_set: SampleSet, names: Sequence[str] | None = None):
    """Arrange samples into a balanced panel.

    Pairs lacking any quarter present elsewhere in the sample are trimmed.

    Returns
    -------
    panel : DesignPanel
    trimmed : list of pair ids removed for imbalance
    """
    all_names = sample_set.names
    quarters = sorted({s.t for s in sample_set.samples})
    q_pos = {q: i for i, q in enumerate(quarters)}
    rows: dict[str, dict] = {}
    for s in sample_set.samples:
        rows.setdefault(s.pair_id, {})[s.t] = (s.y, s.x + s.controls)
    keep = [p for p, r in rows.items() if len(r) == len(quarters)]
    trimmed = [p for p in rows if p not in set(keep)]
    if not keep:
        raise ParameterError("no pair is observed over the full sample window")
    N, T, J = len(keep), len(quarters), len(all_names)
    Y = np.empty((N, T))
    X = np.empty((N, T, J))
    for i, p in enumerate(keep):
        for q, (y, x) in rows[p].items():
            Y[i, q_pos[q]] = y
            X[i, q_pos[q]] = x
    panel = DesignPanel(Y, X, tuple(all_names), tuple(keep), tuple(quarters))
    if names is not None:
        panel = panel.select(names)
    if trimmed:
        logger.info("trimmed %d unbalanced pairs", len(trimmed))
    return panel, trimmed


@dataclass(frozen=True)
class FactorModel:
    r: int
    F: np.ndarray       # T x r
    Lambda: np.ndarray  # N x r

    @classmethod
    def empty(cls, N: int, T: int) -> "FactorModel":
        return cls(0, np.zeros((T, 0)), np.zeros((N, 0)))

    @property
    def common(self) -> np.ndarray:
        return self.Lambda @ self.F.T


@dataclass
class EstimateResult:
    model: str
    names: tuple[str, ...]
    coefficients: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    r_used: int = 0
    iterations: int = 0
    converged: bool = True
    objective: float = float("nan")
    nobs: int = 0
    n_clusters: int = 0
    se_method: str = "cluster"
    objective_path: list[float] = field(default_factory=list)
    fitted: np.ndarray | None = None

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def stderr(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def pvalue(self, name: str) -> float:
        return float(self.p_values[self.names.index(name)])


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _check_rank(Xs: np.ndarray, names: Sequence[str], message: str, ref=None) -> None:
    """Raise SingularDesignError naming columns that add no rank."""
    ref = Xs if ref is None else ref
    scale = np.linalg.norm(ref, axis=0)
    bad = []
    kept = []
    for j in range(Xs.shape[1]):
        col = Xs[:, j]
        if np.linalg.norm(col) <= 1e-10 * max(scale[j], 1.0):
            bad.append(names[j])
            continue
        trial = Xs[:, kept + [j]]
        sv = np.linalg.svd(trial, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            bad.append(names[j])
        else:
            kept.append(j)
    if bad:
        raise SingularDesignError(bad, message)


def _pvalues(coef, se, df=None):
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.abs(coef) / se
    if df is None:
        p = 2.0 * stats.norm.sf(tstat)
    else:
        p = 2.0 * stats.t.sf(tstat, df)
    p = np.where(np.isnan(p), 1.0, p)
    return np.clip(p, 0.0, 1.0)


def _cluster_se(X3: np.ndarray, resid: np.ndarray, bread: np.ndarray, k_absorbed: int = 0):
    """Cluster-by-pair sandwich with the usual finite-sample scaling."""
    N, T, J = X3.shape
    n = N * T
    scores = np.einsum("itj,it->ij", X3, resid)
    meat = scores.T @ scores
    dof = n - J - k_absorbed
    scale = (N / max(N - 1, 1)) * ((n - 1) / max(dof, 1))
    V = bread @ meat @ bread * scale
    return np.sqrt(np.clip(np.diag(V), 0.0, None))


def _ols(Xs, ys):
    XtX = Xs.T @ Xs
    beta = np.linalg.solve(XtX, Xs.T @ ys)
    return beta, np.linalg.inv(XtX)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def pooled_ols(panel: DesignPanel) -> EstimateResult:
    """OLS over all pair-quarters, no intercept, SEs clustered by pair."""
    N, T, J = panel.X.shape
    if N * T <= J:
        raise ParameterError("need more observations than regressors")
    Xs = panel.X.reshape(N * T, J)
    ys = panel.Y.reshape(N * T)
    _check_rank(Xs, panel.names, "rank-deficient design")
    beta, bread = _ols(Xs, ys)
    fitted = (Xs @ beta).reshape(N, T)
    resid = panel.Y - fitted
    se = _cluster_se(panel.X, resid, bread)
    return EstimateResult(
        "pooled_ols", panel.names, beta, se, _pvalues(beta, se, N - 1),
        objective=float(np.sum(resid ** 2)), nobs=N * T, n_clusters=N,
        iterations=1, fitted=fitted,
    )


def _two_way_demean(A: np.ndarray) -> np.ndarray:
    """Within transform for a balanced (N, T, ...) array."""
    return A - A.mean(axis=1, keepdims=True) - A.mean(axis=0, keepdims=True) + A.mean(axis=(0, 1), keepdims=True)


def additive_fe(panel: DesignPanel) -> EstimateResult:
    """Pair and quarter fixed effects via the two-way within transform."""
    N, T, J = panel.X.shape
    if N < 2 or T < 2:
        raise ParameterError("additive fixed effects need N >= 2 and T >= 2")
    Yd = _two_way_demean(panel.Y)
    Xd = _two_way_demean(panel.X)
    Xs = Xd.reshape(N * T, J)
    _check_rank(Xs, panel.names, "no variation left after removing pair and quarter effects",
                ref=panel.X.reshape(N * T, J))
    beta, bread = _ols(Xs, Yd.reshape(N * T))
    resid = Yd - Xd @ beta
    fitted = panel.Y - resid
    # pair effects are nested in clusters; quarter effects are not
    se = _cluster_se(Xd, resid, bread, k_absorbed=T - 1)
    return EstimateResult(
        "additive_fe", panel.names, beta, se, _pvalues(beta, se, N - 1),
        objective=float(np.sum(resid ** 2)), nobs=N * T, n_clusters=N,
        iterations=1, fitted=fitted,
    )


def principal_components(W: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-r factors of an N x T panel, normalised so F'F/T = I.

    Uses the T x T second-moment matrix when T <= N and the N x N one
    otherwise. Each factor's sign is fixed so its largest entry is positive.
    """
    N, T = W.shape
    if r == 0:
        return np.zeros((T, 0)), np.zeros((N, 0))
    if T <= N:
        vals, vecs = np.linalg.eigh(W.T @ W)
        V = vecs[:, ::-1][:, :r]
    else:
        vals, vecs = np.linalg.eigh(W @ W.T)
        vals, U = vals[::-1][:r], vecs[:, ::-1][:, :r]
        if np.any(vals <= 1e-12 * max(vals[0], 1e-300)):
            V = np.linalg.svd(W, full_matrices=False)[2][:r].T
        else:
            V = (W.T @ U) / np.sqrt(vals)
    F = np.sqrt(T) * V
    flip = np.sign(F[np.argmax(np.abs(F), axis=0), np.arange(r)])
    F = F * np.where(flip == 0, 1.0, flip)
    Lam = W @ F / T
    return F, Lam


def _bai_se(X, resid, F, Lam):
    """Cluster-by-pair covariance for the interactive-effects slope.

    Regressors are projected off the factor space and off the
    loading-weighted cross-sectional average before forming the sandwich.
    """
    N, T, J = X.shape
    r = F.shape[1]
    MF = np.eye(T) - F @ F.T / T
    MX = np.einsum("ts,isj->itj", MF, X)
    LL = Lam.T @ Lam / N
    A = Lam @ np.linalg.pinv(LL) @ Lam.T / N
    Z = MX - np.einsum("ik,ktj->itj", A, MX)
    D = np.einsum("itj,itl->jl", Z, Z)
    scores = np.einsum("itj,it->ij", Z, resid)
    meat = scores.T @ scores
    Dinv = np.linalg.pinv(D)
    n = N * T
    dof = n - J - (N + T) * r
    scale = (N / max(N - 1, 1)) * ((n - 1) / max(dof, 1))
    V = Dinv @ meat @ Dinv * scale
    return np.sqrt(np.clip(np.diag(V), 0.0, None))


def interactive_fe(
    panel: DesignPanel,
    r: int = 2,
    tol: float = 1e-8,
    max_iter: int = 1000,
    se: str = "analytic",
) -> tuple[EstimateResult, FactorModel]:
    """Interactive fixed effects by alternating OLS and principal components.

    Parameters
    ----------
    panel : DesignPanel
    r : int
        Number of common factors; ``0`` gives pooled OLS.
    tol : float
        Stop once the largest coefficient change relative to the largest
        coefficient falls below this.
    max_iter : int
        Iteration cap. Hitting it returns ``converged=False`` rather than
        raising.
    se : {"analytic", "none"}
        Cluster-robust analytic standard errors, or skip them (used inside
        bootstrap replicates).

    Returns
    -------
    result : EstimateResult
    factors : FactorModel
    """
    N, T, J = panel.X.shape
    if int(r) != r or r < 0:
        raise ParameterError(f"r must be a nonnegative integer, got {r}")
    if r >= min(N, T):
        raise ParameterError(f"r={r} must be smaller than min(N, T)={min(N, T)}")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if r == 0:
        res = pooled_ols(panel)
        res = replace(res, model="interactive_fe", r_used=0, objective_path=[res.objective])
        return res, FactorModel.empty(N, T)

    Xs = panel.X.reshape(N * T, J)
    _check_rank(Xs, panel.names, "rank-deficient design")
    XtX = Xs.T @ Xs
    beta = np.linalg.solve(XtX, Xs.T @ panel.Y.reshape(N * T))
    path = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        W = panel.Y - panel.X @ beta
        F, Lam = principal_components(W, r)
        target = (panel.Y - Lam @ F.T).reshape(N * T)
        new = np.linalg.solve(XtX, Xs.T @ target)
        resid = target - Xs @ new
        path.append(float(resid @ resid))
        change = np.max(np.abs(new - beta)) / max(np.max(np.abs(new)), 1e-12)
        beta = new
        if change < tol:
            converged = True
            break
    if not converged:
        logger.warning("interactive_fe: no convergence after %d iterations", max_iter)

    W = panel.Y - panel.X @ beta
    F, Lam = principal_components(W, r)
    fitted = panel.X @ beta + Lam @ F.T
    resid = panel.Y - fitted
    ssr = float(np.sum(resid ** 2))
    path.append(ssr)
    if se == "analytic":
        s = _bai_se(panel.X, resid, F, Lam)
        p = _pvalues(beta, s)
    elif se == "none":
        s = np.full(J, np.nan)
        p = np.full(J, np.nan)
    else:
        raise ParameterError(f"unknown se option {se!r}")
    res = EstimateResult(
        "interactive_fe", panel.names, beta, s, p, r_used=r, iterations=it,
        converged=converged, objective=ssr, nobs=N * T, n_clusters=N,
        se_method="analytic" if se == "analytic" else "none",
        objective_path=path, fitted=fitted,
    )
    return res, FactorModel(r, F, Lam)


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def cluster_bootstrap_se(
    fit: Callable[[DesignPanel], object],
    panel: DesignPanel,
    B: int = 200,
    seed: int = 0,
    n_jobs: int | None = 1,
) -> np.ndarray:
    """Pair-block bootstrap standard errors.

    ``fit`` maps a panel to an :class:`EstimateResult` (or a coefficient
    vector). Replicate ``b`` resamples pairs with its own generator seeded
    from ``(seed, b)``, so output does not depend on scheduling. Singular
    replicates are redrawn, up to ``10 * B`` attempts in total.
    """
    if B < 50:
        raise ParameterError(f"B must be at least 50, got {B}")
    N = panel.N
    cap = 10 * B

    def one(b):
        rng = np.random.default_rng([seed, b])
        failures = 0
        while True:
            idx = rng.integers(0, N, size=N)
            try:
                out = fit(panel.take(idx))
            except (SingularDesignError, np.linalg.LinAlgError):
                failures += 1
                if failures >= cap:
                    return None, failures
                continue
            coefs = out.coefficients if hasattr(out, "coefficients") else out
            return np.asarray(coefs, dtype=float), failures

    results = ordered_map(one, range(B), n_jobs)
    attempts = sum(f for _, f in results) + B
    if attempts > cap or any(c is None for c, _ in results):
        raise SingularDesignError(panel.names, f"bootstrap exceeded {cap} attempts")
    draws = np.vstack([c for c, _ in results])
    return draws.std(axis=0, ddof=1)


def with_bootstrap(result: EstimateResult, fit, panel: DesignPanel, B: int, seed: int,
                   n_jobs: int | None = 1) -> EstimateResult:
    """Copy of ``result`` with bootstrap SEs and normal p-values."""
    se = cluster_bootstrap_se(fit, panel, B, seed, n_jobs)
    return replace(result, se=se, p_values=_pvalues(result.coefficients, se),
                   se_method=f"bootstrap(B={B})")


def ife_fitter(r: int, tol: float = 1e-8, max_iter: int = 1000):
    def fit(p):
        return interactive_fe(p, r, tol, max_iter, se="none")[0]
    return fit


@dataclass(frozen=True)
class EndogeneityResult:
    model: str
    chi: float
    se: float
    p: float
    alpha_with_z: float
    result: EstimateResult


def endogeneity_test(
    panel: DesignPanel,
    z_diff,
    r: int = 2,
    benefit: str | None = None,
    name: str = "d_log_state_gdp",
    bootstrap: int = 0,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> dict[str, EndogeneityResult]:
    """Add the cross-state difference ``z_diff`` and test its coefficient.

    The augmented regression is fit with interactive effects (``r``
    factors) and with additive two-way effects. Returns a mapping with keys
    ``"interactive_fe"`` and ``"additive_fe"``.

    ``bootstrap > 0`` replaces the interactive-effects SEs with a pair
    bootstrap of that many replicates.
    """
    z = np.asarray(z_diff, dtype=float)
    if z.shape != panel.Y.shape:
        raise ParameterError(f"z_diff must have shape {panel.Y.shape}")
    if np.all(np.ptp(z, axis=0) <= 1e-12 * max(np.max(np.abs(z)), 1.0)):
        raise CollinearityError([name], "z_diff does not vary across pairs")
    aug = panel.with_regressor(name, z)
    benefit = benefit or panel.names[0]

    ife, _ = interactive_fe(aug, r, tol, max_iter)
    if bootstrap:
        ife = with_bootstrap(ife, ife_fitter(r, tol, max_iter), aug, bootstrap, seed)
    fe = additive_fe(aug)
    out = {}
    for res in (ife, fe):
        j = res.names.index(name)
        out[res.model] = EndogeneityResult(
            res.model, float(res.coefficients[j]), float(res.se[j]),
            float(res.p_values[j]), res.coef(benefit), res,
        )
    return out


def write_estimates_csv(rows: Sequence[tuple[str, EstimateResult | str]], path) -> None:
    """Write ``model,regressor,coef,se,p,converged,r,iterations``.

    A string in place of a result marks a skipped specification; it is
    written as a single row carrying the message in the ``coef`` cell.
    """
    def f(x):
        return format(float(x), ".12g")

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATES_HEADER)
        for label, res in rows:
            if isinstance(res, str):
                w.writerow([label, "", res, "", "", "", "", ""])
                continue
            for j, name in enumerate(res.names):
                w.writerow([label, name, f(res.coefficients[j]), f(res.se[j]), f(res.p_values[j]),
                            str(bool(res.converged)).lower(), res.r_used, res.iterations])
