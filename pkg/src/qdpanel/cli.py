"""Command-line entry point: ``qdp <subcommand> [--config PATH] [flags]``.

Configuration is a plain ``key = value`` file; command-line flags override
it. Relative paths in the file are resolved against the file's directory.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .effects import Scenario, run_scenarios
from .errors import ParameterError, QDPError
from .estimators import (
    EstimateResult, additive_fe, endogeneity_test, ife_fitter, interactive_fe, pooled_ols,
    to_design_panel, with_bootstrap, write_estimates_csv,
)
from .geo import (
    pair_distances, population_centers, read_blocks_csv, read_centers_csv,
    read_counties_geojson, read_distances_csv, write_centers_csv, write_distances_csv,
)
from .panel_data import (
    IngestReport, Quarter, build_pair_panel, ingest_county_series, read_county_panels,
    read_pairs, read_separation, write_county_panels,
)
from .transform import QuasiDiffConfig, build_samples

logger = logging.getLogger("qdpanel")

PATH_KEYS = ("unemployment", "wages", "benefits", "separation", "state_gdp", "pairs",
             "distances", "fips_remap", "county_panels", "scenarios", "alpha_source",
             "blocks", "counties", "centers")
SKIPPED_MISSING = "skipped: missing input"
SKIPPED_OFF = "skipped: control not selected"
SKIPPED_EMPTY = "skipped: no complete observations"


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        self.stage, self.cause = stage, cause
        super().__init__(f"stage '{stage}' failed: {cause}")


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (QDPError, OSError, ValueError, KeyError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


class Outputs:
    """Tracks files written by a command so a failed run leaves nothing behind."""

    def __init__(self, out_dir: Path):
        self.dir = Path(out_dir)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.written.append(p)
        return p

    def track(self, p: Path) -> Path:
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(p)
        return p

    def discard(self):
        for p in self.written:
            p.unlink(missing_ok=True)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    unemployment: Path | None = None
    wages: Path | None = None
    benefits: Path | None = None
    separation: Path | None = None
    state_gdp: Path | None = None
    pairs: Path | None = None
    distances: Path | None = None
    fips_remap: Path | None = None
    county_panels: Path | None = None
    window_start: Quarter | None = None
    window_end: Quarter | None = None
    beta: float = 0.9975
    k: int = 1
    r: int = 2
    controls: tuple[str, ...] = ("distance", "wages", "state_gdp")
    bootstrap: int = 200
    seed: int = 0
    out: Path = Path("qdp_out")
    tol: float = 1e-8
    max_iter: int = 1000
    base_weeks: int = 26
    # effects
    scenarios: Path | None = None
    alpha: float | None = None
    alpha_source: Path | None = None
    effects_beta: float = 0.99
    effects_s: float = 0.10
    n_max: int = 40
    # geo
    blocks: Path | None = None
    counties: Path | None = None
    centers: Path | None = None
    snap_tol_deg: float = 1e-6
    step_km: float = 0.25
    # synth
    states: int = 20
    counties_per_state: int = 24
    pairs_per_border: int = 10
    quarters: int = 41
    noise: str = "calibrated"
    chi: float = 0.0
    # validate
    reps: int | None = None
    criteria: tuple[str, ...] = ()

    @classmethod
    def from_mapping(cls, values: dict[str, str], base_dir: Path | None = None) -> "RunConfig":
        base_dir = base_dir or Path(".")
        kinds = {f.name: f for f in fields(cls)}
        cfg = cls()
        for key, raw in values.items():
            key = key.strip().lower()
            raw = raw.strip()
            if key not in kinds:
                raise ParameterError(f"unknown config key {key!r}")
            setattr(cfg, key, _convert(key, raw, base_dir))
        return cfg

    def validate(self, required: tuple[str, ...] = (), produced: tuple[str, ...] = ()) -> None:
        """Check ranges and that input files exist; keys in ``produced`` are outputs."""
        for key in required:
            if getattr(self, key) is None:
                raise ParameterError(f"config key {key!r} is required")
        for key in PATH_KEYS:
            p = getattr(self, key)
            if key in produced:
                continue
            if p is not None and not Path(p).exists():
                raise ParameterError(f"{key}: file not found: {p}")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if not 0 <= self.r <= 10:
            raise ParameterError("r must be in 0..10")
        if self.bootstrap and self.bootstrap < 50:
            raise ParameterError("bootstrap must be 0 (analytic SEs) or at least 50")
        if self.window_start and self.window_end and self.window_end < self.window_start:
            raise ParameterError("window is empty")
        bad = [c for c in self.controls if c not in ("distance", "wages", "state_gdp")]
        if bad:
            raise ParameterError(f"unknown controls {bad}")

    def header(self, keys) -> list[str]:
        out = []
        for key in keys:
            v = getattr(self, key)
            if isinstance(v, tuple):
                v = ",".join(v) or "-"
            elif v is None:
                v = "-"
            elif isinstance(v, Path):
                v = v.name
            out.append(f"{key} = {v}")
        return out


def _convert(key, raw, base_dir):
    if key in PATH_KEYS:
        if not raw:
            return None
        p = Path(raw).expanduser()
        return p if p.is_absolute() else base_dir / p
    if key == "out":
        p = Path(raw).expanduser()
        return p if p.is_absolute() else base_dir / p
    if key in ("window_start", "window_end"):
        return Quarter.parse(raw) if raw else None
    if key in ("controls", "criteria"):
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if key == "noise":
        if raw not in ("none", "calibrated"):
            raise ParameterError("noise must be 'none' or 'calibrated'")
        return raw
    if key in ("alpha", "reps"):
        if not raw:
            return None
        return float(raw) if key == "alpha" else int(raw)
    ints = ("k", "r", "bootstrap", "seed", "max_iter", "base_weeks", "n_max", "states",
            "counties_per_state", "pairs_per_border", "quarters")
    try:
        return int(raw) if key in ints else float(raw)
    except ValueError:
        raise ParameterError(f"config key {key!r}: cannot parse {raw!r}") from None


def read_config_file(path) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    text = Path(path).read_text(encoding="utf-8")
    parser.read_string("[run]\n" + text, source=str(path))
    return dict(parser["run"])


def load_config(args) -> RunConfig:
    values: dict[str, str] = {}
    base = Path(".")
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
        base = Path(args.config).resolve().parent
    cfg = RunConfig.from_mapping(values, base)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ParameterError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        setattr(cfg, key.strip(), _convert(key.strip(), raw, Path(".")))
    for key in ("seed", "k", "r", "beta"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    return cfg


def read_remap(path) -> dict[str, str] | None:
    if path is None:
        return None
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return {row["old_fips"].strip(): row["new_fips"].strip() for row in csv.DictReader(fh)}


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def _ingest(cfg: RunConfig):
    if cfg.county_panels is not None:
        return read_county_panels(cfg.county_panels), IngestReport()
    return ingest_county_series(cfg.unemployment, cfg.benefits, cfg.wages, cfg.state_gdp,
                                cfg.base_weeks, read_remap(cfg.fips_remap))


def run_ingest(cfg: RunConfig) -> int:
    out = Outputs(cfg.out)
    try:
        with stage("config"):
            cfg.validate(("unemployment",))
        with stage("ingest"):
            panels, report = _ingest(cfg)
            write_county_panels(panels.values(), out.path("county_panels.csv"))
            lines = [f"counties = {len(panels)}"] + report.lines()
            if cfg.pairs is not None:
                pairs = read_pairs(cfg.pairs, report, read_remap(cfg.fips_remap))
                window = _window(cfg, pairs, panels)
                kept, excluded = build_pair_panel(pairs, panels, window)
                lines.append(f"window = {window[0]}..{window[1]}")
                lines.append(f"pairs kept = {len(kept)}, excluded = {len(excluded)}")
                lines += [f"excluded: {e.pair_id}: {e.reason}" for e in excluded]
            out.path("ingest_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    except BaseException:
        out.discard()
        raise
    return 0


def _window(cfg, pairs, panels):
    if cfg.window_start and cfg.window_end:
        return cfg.window_start, cfg.window_end
    used = [panels[c] for p in pairs for c in (p.county_a, p.county_b) if c in panels]
    if not used:
        raise ParameterError("no paired county has data")
    start = max(p.quarters[0] for p in used if p.quarters)
    end = min(p.quarters[-1] for p in used if p.quarters)
    start = cfg.window_start or start
    end = cfg.window_end or end
    if end < start:
        raise ParameterError("inferred window is empty")
    return start, end


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

ROW_LABELS = {
    "benefits": "Weeks of benefits",
    "d_log_distance": "Pop.-weighted distance",
    "d_log_wages": "Average weekly wage",
    "d_log_state_gdp": "State GDP per worker",
}


def _label(name):
    if name.startswith("benefits_"):
        return f"Weeks of benefits, t+{int(name.split('_')[1]) - 1}"
    return ROW_LABELS.get(name, name)


def _ife(panel, cfg, label):
    res, _ = interactive_fe(panel, cfg.r, cfg.tol, cfg.max_iter)
    if cfg.bootstrap:
        res = with_bootstrap(res, ife_fitter(cfg.r, cfg.tol, cfg.max_iter), panel,
                             cfg.bootstrap, cfg.seed)
    if not res.converged:
        logger.warning("%s: did not converge in %d iterations", label, res.iterations)
    return res


def estimate_columns(cfg: RunConfig, pair_panels, sep, distances):
    """All table specifications as ``[(label, EstimateResult | skip message)]``.

    Also returns a dict of sample notes for the report.
    """
    qcfg = QuasiDiffConfig(cfg.beta, cfg.k)
    rows: list[tuple[str, EstimateResult | str]] = []
    notes = {}

    def design(controls=(), outcome="quasi"):
        ss = build_samples(pair_panels, sep, qcfg, controls, distances, outcome)
        if not ss.samples:
            return None
        panel, trimmed = to_design_panel(ss)
        notes[(controls, outcome)] = (panel.N, panel.T, len(trimmed), sum(ss.dropped.values()))
        return panel

    has_wages = cfg.wages is not None or cfg.county_panels is not None and all(
        o.avg_weekly_wage is not None for pp in pair_panels for o in pp.panel_a.obs.values())
    has_gdp = cfg.state_gdp is not None or cfg.county_panels is not None and all(
        o.state_gdp_per_worker is not None for pp in pair_panels for o in pp.panel_a.obs.values())

    with stage("estimate: pooled OLS"):
        d_log = design(outcome="log")
        if d_log is None:
            raise ParameterError("no estimation sample")
        rows.append(("a1_1_pooled_ols", pooled_ols(d_log)))
    with stage("estimate: additive FE"):
        rows.append(("a1_2_additive_fe", additive_fe(d_log)))
    with stage("estimate: baseline IFE"):
        base = design()
        rows.append(("a1_3_ife_baseline", _ife(base, cfg, "baseline")))

    def optional(label, controls, available, stage_name, fit):
        if not available:
            rows.append((label, SKIPPED_MISSING))
            return
        if not all(c in cfg.controls for c in controls):
            rows.append((label, SKIPPED_OFF))
            return
        with stage(stage_name):
            d = design(controls)
            rows.append((label, SKIPPED_EMPTY if d is None else fit(d)))

    optional("a1_4_ife_distance", ("distance",), distances is not None,
             "estimate: IFE + distance", lambda d: _ife(d, cfg, "distance"))
    optional("a1_5_ife_distance_wages", ("distance", "wages"),
             distances is not None and has_wages,
             "estimate: IFE + distance + wages", lambda d: _ife(d, cfg, "distance+wages"))

    if has_gdp and "state_gdp" in cfg.controls:
        with stage("estimate: endogeneity test"):
            d = design(("state_gdp",))
            if d is None:
                for label in ("a2_1_ife_state_gdp", "a2_2_additive_fe", "a2_3_additive_fe_state_gdp"):
                    rows.append((label, SKIPPED_EMPTY))
            else:
                z = d.X[:, :, -1]
                plain = d.select(d.names[:-1])
                test = endogeneity_test(plain, z, cfg.r, bootstrap=cfg.bootstrap, seed=cfg.seed,
                                        tol=cfg.tol, max_iter=cfg.max_iter)
                rows.append(("a2_1_ife_state_gdp", test["interactive_fe"].result))
                rows.append(("a2_2_additive_fe", additive_fe(plain)))
                rows.append(("a2_3_additive_fe_state_gdp", test["additive_fe"].result))
    return rows, notes


def _cell(res, name, what):
    if isinstance(res, str):
        return ""
    if name not in res.names:
        return ""
    if what == "coef":
        return f"{res.coef(name):.5f}"
    return f"({res.stderr(name):.5f})"


def format_table(title, columns, col_width=24):
    """Fixed-width text table: coefficient rows with SEs below, then fit info."""
    names = []
    for _, res in columns:
        if not isinstance(res, str):
            names += [n for n in res.names if n not in names]
    head = f"{'':<28}" + "".join(f"{f'({i})':>{col_width}}" for i in range(1, len(columns) + 1))
    lines = [title, "=" * len(head), head, "-" * len(head)]
    for name in names:
        lines.append(f"{_label(name):<28}" + "".join(
            f"{_cell(r, name, 'coef'):>{col_width}}" for _, r in columns))
        lines.append(f"{'':<28}" + "".join(
            f"{_cell(r, name, 'se'):>{col_width}}" for _, r in columns))
        lines.append(f"{'  p-value':<28}" + "".join(
            f"{'' if isinstance(r, str) or name not in r.names else f'{r.pvalue(name):.4f}':>{col_width}}"
            for _, r in columns))
    lines.append("-" * len(head))

    def info(label, fn):
        lines.append(f"{label:<28}" + "".join(
            f"{(r if isinstance(r, str) else fn(r)):>{col_width}}" for _, r in columns))

    info("Model", lambda r: r.model)
    info("Observations", lambda r: str(r.nobs))
    info("Pairs (clusters)", lambda r: str(r.n_clusters))
    info("Factors r", lambda r: str(r.r_used))
    info("Iterations", lambda r: str(r.iterations))
    info("Converged", lambda r: "yes" if r.converged else "NO")
    info("Standard errors", lambda r: r.se_method)
    lines.append("=" * len(head))
    return lines


def run_estimate(cfg: RunConfig) -> int:
    out = Outputs(cfg.out)
    try:
        with stage("config"):
            cfg.validate(("separation", "pairs"))
            if cfg.county_panels is None:
                cfg.validate(("unemployment", "benefits"))
        with stage("ingest"):
            panels, report = _ingest(cfg)
            remap = read_remap(cfg.fips_remap)
            pairs = read_pairs(cfg.pairs, report, remap)
            sep = read_separation(cfg.separation, report)
            window = _window(cfg, pairs, panels)
            pair_panels, excluded = build_pair_panel(pairs, panels, window)
            if not pair_panels:
                raise ParameterError("no border pair is fully observed in the window")
            distances = read_distances_csv(cfg.distances) if cfg.distances else None
        rows, notes = estimate_columns(cfg, pair_panels, sep, distances)
        with stage("report"):
            write_estimates_csv(rows, out.path("estimates.csv"))
            in_window = [sep[q] for q in pair_panels[0].quarters if q in sep]
            s_mean = float(np.mean(in_window)) if in_window else float("nan")
            lines = ["Benefit duration and unemployment: border county pair regressions", ""]
            lines += [f"beta = {cfg.beta}", f"s (mean over window) = {s_mean:.6f}",
                      f"k = {cfg.k}", f"r = {cfg.r}",
                      f"bootstrap B = {cfg.bootstrap or 'analytic SEs'}", f"seed = {cfg.seed}"]
            lines += cfg.header(("controls", "tol", "max_iter", "base_weeks"))
            lines.append(f"window = {window[0]}..{window[1]}")
            lines.append(f"pairs = {len(pair_panels)} used, {len(excluded)} excluded")
            lines += cfg.header(("unemployment", "benefits", "wages", "separation", "state_gdp",
                                 "pairs", "distances", "county_panels", "fips_remap"))
            for (controls, outcome), (N, T, trimmed, dropped) in sorted(notes.items()):
                ctrl = "+".join(controls) or "none"
                lines.append(f"sample [{outcome}; controls {ctrl}]: N = {N}, T = {T}, "
                             f"pairs trimmed = {trimmed}, rows dropped = {dropped}")
            lines.append("")
            a1 = [r for r in rows if r[0].startswith("a1_")]
            lines += format_table("Table A1: effect of benefit duration on unemployment", a1)
            lines += ["(1) pooled OLS, outcome = difference in log unemployment",
                      "(2) additive two-way fixed effects, same outcome",
                      "(3) interactive fixed effects on the quasi-differenced outcome",
                      "(4) as (3) plus population-weighted distance to the shared border",
                      "(5) as (4) plus average weekly wages", ""]
            a2 = [r for r in rows if r[0].startswith("a2_")]
            if a2:
                lines += format_table("Table A2: endogeneity test with state productivity", a2)
                lines += ["(1) interactive fixed effects plus state GDP per worker",
                          "(2) additive fixed effects on the quasi-differenced outcome",
                          "(3) as (2) plus state GDP per worker", ""]
            else:
                lines += ["Table A2: " + SKIPPED_MISSING + " (state GDP)", ""]
            if report.lines():
                lines += ["Ingest notes:"] + ["  " + x for x in report.lines()]
            if excluded:
                lines += ["Excluded pairs:"] + [f"  {e.pair_id}: {e.reason}" for e in excluded]
            out.path("report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    except BaseException:
        out.discard()
        raise
    return 0


# ---------------------------------------------------------------------------
# effects
# ---------------------------------------------------------------------------

DEFAULT_SCENARIOS = (
    ("cut_99_to_26_n4", "n_periods", 99, 26, 0.099, 4),
    ("cut_99_to_26_n8", "n_periods", 99, 26, 0.099, 8),
    ("extend_26_to_99_permanent", "permanent", 26, 99, 0.05, math.inf),
)


def _alphas_from_estimates(path) -> tuple[float, ...]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh)
                if r["model"] == "a1_3_ife_baseline" and r["regressor"].startswith("benefits")]
    if not rows:
        raise ParameterError(f"{path}: no baseline benefit coefficient")
    return tuple(float(r["coef"]) for r in rows)


def _parse_n(raw):
    raw = (raw or "").strip().lower()
    return math.inf if raw in ("", "inf", "permanent") else float(raw)


def load_scenarios(cfg: RunConfig) -> list[Scenario]:
    if cfg.alpha is not None:
        alphas = (cfg.alpha,)
    elif cfg.alpha_source is not None:
        alphas = _alphas_from_estimates(cfg.alpha_source)
    else:
        alphas = None

    def make(sid, kind, alpha_raw, w1, w2, base, n, beta, s):
        if alpha_raw not in (None, ""):
            a, a_vec = float(alpha_raw), ()
        elif alphas is None:
            raise ParameterError(f"scenario {sid}: no alpha and no coefficient source")
        else:
            a, a_vec = math.fsum(alphas), (alphas if len(alphas) > 1 else ())
            if a_vec and kind == "n_periods":
                kind = "k_ahead"
            elif a_vec and kind == "permanent":
                kind = "k_permanent"
        return Scenario(sid, a, float(w1), float(w2), float(base), n, beta, s, kind, a_vec)

    out = []
    if cfg.scenarios is None:
        for sid, kind, w1, w2, base, n in DEFAULT_SCENARIOS:
            out.append(make(sid, kind, None, w1, w2, base, n, cfg.effects_beta, cfg.effects_s))
        return out
    with Path(cfg.scenarios).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"scenario_id", "w1", "w2", "base_urate"}
        if not need <= set(reader.fieldnames or []):
            raise ParameterError(f"{cfg.scenarios}: need columns {sorted(need)}")
        for row in reader:
            n = _parse_n(row.get("n"))
            kind = (row.get("kind") or "").strip() or ("permanent" if math.isinf(n) else "n_periods")
            beta = float(row["beta"]) if row.get("beta") else cfg.effects_beta
            s = float(row["s"]) if row.get("s") else cfg.effects_s
            out.append(make(row["scenario_id"].strip(), kind, (row.get("alpha") or "").strip(),
                            row["w1"], row["w2"], row["base_urate"], n, beta, s))
    return out


def run_effects(cfg: RunConfig) -> int:
    out = Outputs(cfg.out)
    try:
        with stage("config"):
            cfg.validate()
            scenarios = load_scenarios(cfg)
        with stage("effects"):
            errors = run_scenarios(scenarios, out.path("effects.csv"),
                                   out.path("effects_paths.csv"), cfg.n_max)
            for sid, msg in errors:
                print(f"scenario {sid}: {msg}", file=sys.stderr)
            if errors:
                with out.path("effects_errors.csv").open("w", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(("scenario_id", "error"))
                    w.writerows(errors)
    except BaseException:
        out.discard()
        raise
    return 0


# ---------------------------------------------------------------------------
# geo
# ---------------------------------------------------------------------------

def run_geo_centers(cfg: RunConfig) -> int:
    out = Outputs(cfg.out)
    try:
        with stage("config"):
            cfg.validate(("blocks",), produced=("centers",))
        with stage("geo-centers"):
            centers = population_centers(read_blocks_csv(cfg.blocks))
            dest = out.path("centers.csv") if cfg.centers is None else out.track(Path(cfg.centers))
            write_centers_csv(centers.values(), dest)
    except BaseException:
        out.discard()
        raise
    return 0


def run_geo_distances(cfg: RunConfig) -> int:
    out = Outputs(cfg.out)
    try:
        with stage("config"):
            cfg.validate(("counties", "centers", "pairs"))
        with stage("geo-distances"):
            polygons = read_counties_geojson(cfg.counties)
            centers = read_centers_csv(cfg.centers)
            pairs = read_pairs(cfg.pairs, IngestReport(), read_remap(cfg.fips_remap))
            dists, flagged = pair_distances(pairs, centers, polygons, cfg.snap_tol_deg, cfg.step_km)
            write_distances_csv(dists, out.path("distances.csv"))
            with out.path("distances_flagged.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("pair_id", "reason"))
                w.writerows(flagged)
    except BaseException:
        out.discard()
        raise
    return 0


# ---------------------------------------------------------------------------
# synth and validate
# ---------------------------------------------------------------------------

SYNTH_CONFIG = """\
# synthetic world written by `qdp synth`
unemployment = unemployment.csv
benefits = benefits_notices.csv
wages = wages.csv
separation = separation.csv
state_gdp = state_gdp.csv
pairs = pairs.csv
distances = distances.csv
beta = {beta}
k = 1
r = 2
seed = {seed}
out = results
"""


def run_synth(cfg: RunConfig) -> int:
    from .synth import inject_endogeneity, simulate
    from .validation import calibrated_params, noise_free_params

    out = Outputs(cfg.out)
    try:
        with stage("synth"):
            params = calibrated_params() if cfg.noise == "calibrated" else noise_free_params()
            world = simulate(params, n_states=cfg.states, counties_per_state=cfg.counties_per_state,
                             pairs_per_border=cfg.pairs_per_border, T=cfg.quarters, seed=cfg.seed)
            world = inject_endogeneity(world, cfg.chi)
            for name in ("unemployment", "wages", "benefits", "separation", "state_gdp",
                         "pairs", "distances"):
                out.path({"benefits": "benefits_notices.csv"}.get(name, f"{name}.csv"))
            world.write_csv(cfg.out)
            out.path("run.cfg").write_text(
                SYNTH_CONFIG.format(beta=params.beta, seed=cfg.seed), encoding="utf-8")
            truth = [f"true_alpha = {world.true_alpha!r}", f"chi = {world.chi!r}",
                     f"seed = {cfg.seed}", f"noise = {cfg.noise}",
                     f"states = {cfg.states}", f"pairs = {len(world.pairs)}",
                     f"quarters = {cfg.quarters}", f"beta = {params.beta}",
                     f"s_bar = {params.s_bar}", f"trigger_iterations = {world.trigger_iterations}"]
            out.path("truth.txt").write_text("\n".join(truth) + "\n", encoding="utf-8")
    except BaseException:
        out.discard()
        raise
    return 0


def run_validate(cfg: RunConfig) -> int:
    from .validation import run_validation

    out = Outputs(cfg.out)
    try:
        with stage("config"):
            from .validation import CRITERIA
            unknown = [c for c in cfg.criteria if c not in CRITERIA]
            if unknown:
                raise ParameterError(f"unknown criteria {unknown}; valid: {', '.join(CRITERIA)}")
        with stage("validate"):
            results = run_validation(cfg.criteria or None, cfg.reps, cfg.bootstrap or 100,
                                     None if cfg.seed == 0 else cfg.seed)
            lines = [r.line() for r in results]
            passed = sum(r.passed for r in results)
            lines.append(f"{passed}/{len(results)} criteria passed")
            print("\n".join(lines))
            out.path("validation.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            with out.path("validation.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("criterion", "passed", "statistic", "threshold", "mode", "seconds"))
                for r in results:
                    w.writerow((r.name, str(r.passed).lower(), r.statistic, r.threshold, r.mode,
                                f"{r.seconds:.3f}"))
    except BaseException:
        out.discard()
        raise
    return 0 if passed == len(results) else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

COMMANDS = {
    "ingest": run_ingest,
    "estimate": run_estimate,
    "effects": run_effects,
    "geo-centers": run_geo_centers,
    "geo-distances": run_geo_distances,
    "synth": run_synth,
    "validate": run_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--k", type=int, help="quasi-difference horizon")
    common.add_argument("--r", type=int, help="number of interactive factors")
    common.add_argument("--beta", type=float, help="quarterly discount factor")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any configuration key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="qdp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="raw CSVs to a canonical county panel")
    sub.add_parser("estimate", parents=[common], help="fit the table specifications")
    sub.add_parser("effects", parents=[common], help="implied unemployment under scenarios")
    sub.add_parser("geo-centers", parents=[common], help="county population centers")
    sub.add_parser("geo-distances", parents=[common], help="center-to-shared-border distances")
    p = sub.add_parser("synth", parents=[common], help="write a synthetic world")
    p.add_argument("--noise", choices=("none", "calibrated"))
    p.add_argument("--chi", type=float)
    p = sub.add_parser("validate", parents=[common], help="run the acceptance criteria")
    p.add_argument("--reps", type=int, help="Monte Carlo replications (below 50 runs smoke mode)")
    p.add_argument("--criteria", help="comma-separated criterion names")
    p.add_argument("-B", "--bootstrap", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with stage("config"):
            cfg = load_config(args)
            for key in ("noise", "chi", "reps", "bootstrap"):
                v = getattr(args, key, None)
                if v is not None:
                    setattr(cfg, key, v)
            if getattr(args, "criteria", None):
                cfg.criteria = _convert("criteria", args.criteria, Path("."))
        return COMMANDS[args.command](cfg)
    except StageError as exc:
        print(f"qdp {args.command}: error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 2 if exc.stage == "config" else 1


if __name__ == "__main__":
    sys.exit(main())
