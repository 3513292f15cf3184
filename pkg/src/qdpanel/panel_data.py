"""Ingestion of county series and construction of border-pair panels.

Input files follow fixed CSV schemas (UTF-8, header row)::

    unemployment.csv      fips,year,month,urate_percent
    wages.csv             fips,year,quarter,avg_weekly_wage
    benefits_notices.csv  state_fips,notice_date,eb_weeks,euc_weeks
    separation.csv        year,month,rate_percent
    state_gdp.csv         state_fips,year,quarter,real_gdp,employment
    pairs.csv             pair_id,fips_a,fips_b

Monthly unemployment rates are averaged to quarters, monthly separation
rates are summed. Every row-level problem is recorded as a
:class:`~qdpanel.errors.ParseError` carrying ``file:line`` and the row is
skipped; nothing in here raises on a single bad record.
"""

from __future__ import annotations

import csv
import datetime as _dt
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from .errors import DataError, ParameterError, ParseError

logger = logging.getLogger(__name__)

BASE_WEEKS = 26

UNEMPLOYMENT_HEADER = ("fips", "year", "month", "urate_percent")
WAGES_HEADER = ("fips", "year", "quarter", "avg_weekly_wage")
NOTICES_HEADER = ("state_fips", "notice_date", "eb_weeks", "euc_weeks")
SEPARATION_HEADER = ("year", "month", "rate_percent")
STATE_GDP_HEADER = ("state_fips", "year", "quarter", "real_gdp", "employment")
PAIRS_HEADER = ("pair_id", "fips_a", "fips_b")
COUNTY_PANEL_HEADER = (
    "fips", "year", "quarter", "urate", "avg_weekly_wage",
    "benefit_weeks", "state_gdp_per_worker",
)

_FIPS_RE = re.compile(r"^\d{5}$")
_QUARTER_RE = re.compile(r"^(\d{4})\s*[Qq]([1-4])$")


# ---------------------------------------------------------------------------
# Basic types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Quarter:
    """Calendar quarter; ordering follows calendar time."""

    year: int
    q: int

    def __post_init__(self):
        if not 1 <= self.q <= 4:
            raise ParameterError(f"quarter must be in 1..4, got {self.q}")

    @classmethod
    def parse(cls, text: str) -> "Quarter":
        m = _QUARTER_RE.match(str(text).strip())
        if m is None:
            raise ParameterError(f"cannot parse quarter {text!r}; expected e.g. 2009Q1")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_month(cls, year: int, month: int) -> "Quarter":
        if not 1 <= month <= 12:
            raise ParameterError(f"month must be in 1..12, got {month}")
        return cls(year, (month - 1) // 3 + 1)

    @classmethod
    def from_date(cls, d: _dt.date) -> "Quarter":
        return cls.from_month(d.year, d.month)

    @classmethod
    def from_index(cls, index: int) -> "Quarter":
        return cls(index // 4, index % 4 + 1)

    @property
    def index(self) -> int:
        return self.year * 4 + self.q - 1

    def succ(self, n: int = 1) -> "Quarter":
        return Quarter.from_index(self.index + n)

    def __str__(self) -> str:
        return f"{self.year}Q{self.q}"


def quarter_range(start: Quarter, end: Quarter) -> list[Quarter]:
    """Inclusive list of quarters from `start` to `end` (empty if end < start)."""
    return [Quarter.from_index(i) for i in range(start.index, end.index + 1)]


def validate_fips(value: str) -> str:
    """Return the 5-digit county FIPS string or raise ``ValueError``."""
    text = str(value).strip()
    if not _FIPS_RE.match(text):
        raise ValueError(f"malformed county FIPS {value!r}")
    return text


def state_of(fips: str) -> str:
    return fips[:2]


class CountyObs(NamedTuple):
    urate: float
    avg_weekly_wage: float | None = None
    benefit_weeks: int | None = None
    state_gdp_per_worker: float | None = None


@dataclass(frozen=True)
class CountyPanel:
    """Quarterly observations for one county.

    ``obs`` maps :class:`Quarter` to :class:`CountyObs`. Benefit weeks are
    the state-level value attached to the county.
    """

    county: str
    obs: Mapping[Quarter, CountyObs]

    def __post_init__(self):
        validate_fips(self.county)
        for qtr, o in self.obs.items():
            if not 0.0 < o.urate < 1.0:
                raise DataError(f"{self.county} {qtr}: urate {o.urate} outside (0, 1)")
            if o.benefit_weeks is not None and o.benefit_weeks < 1:
                raise DataError(f"{self.county} {qtr}: benefit_weeks {o.benefit_weeks} < 1")
        object.__setattr__(self, "obs", MappingProxyType(dict(sorted(self.obs.items()))))

    @property
    def state(self) -> str:
        return state_of(self.county)

    @property
    def quarters(self) -> list[Quarter]:
        return list(self.obs)

    def missing_quarters(self) -> list[Quarter]:
        """Quarters absent inside the county's own first..last range."""
        qs = self.quarters
        if not qs:
            return []
        return [q for q in quarter_range(qs[0], qs[-1]) if q not in self.obs]

    @property
    def has_gaps(self) -> bool:
        return bool(self.missing_quarters())

    def covers(self, quarters: Iterable[Quarter], fields=("urate", "benefit_weeks")) -> bool:
        for q in quarters:
            o = self.obs.get(q)
            if o is None:
                return False
            if any(getattr(o, f) is None for f in fields):
                return False
        return True

    def series(self, name: str) -> dict[Quarter, float]:
        return {q: getattr(o, name) for q, o in self.obs.items() if getattr(o, name) is not None}


@dataclass(frozen=True)
class BorderPair:
    pair_id: str
    county_a: str
    county_b: str

    def __post_init__(self):
        validate_fips(self.county_a)
        validate_fips(self.county_b)
        if state_of(self.county_a) == state_of(self.county_b):
            raise DataError(
                f"pair {self.pair_id}: {self.county_a} and {self.county_b} are in the same state"
            )

    def swapped(self) -> "BorderPair":
        return BorderPair(self.pair_id, self.county_b, self.county_a)

    @property
    def key(self) -> frozenset:
        return frozenset((self.county_a, self.county_b))


@dataclass(frozen=True)
class PairPanel:
    pair: BorderPair
    panel_a: CountyPanel
    panel_b: CountyPanel
    quarters: tuple[Quarter, ...]

    def __post_init__(self):
        if state_of(self.panel_a.county) == state_of(self.panel_b.county):
            raise DataError(f"pair {self.pair.pair_id} does not straddle a state line")
        for q in self.quarters:
            if q not in self.panel_a.obs or q not in self.panel_b.obs:
                raise DataError(f"pair {self.pair.pair_id}: both counties must be observed at {q}")

    @property
    def pair_id(self) -> str:
        return self.pair.pair_id

    def swapped(self) -> "PairPanel":
        return PairPanel(self.pair.swapped(), self.panel_b, self.panel_a, self.quarters)


@dataclass(frozen=True)
class SeparationSeries:
    """National quarterly separation rate, as a fraction."""

    obs: Mapping[Quarter, float]

    def __post_init__(self):
        for q, s in self.obs.items():
            if not 0.0 < s < 1.0:
                raise DataError(f"separation rate {s} at {q} outside (0, 1)")
        object.__setattr__(self, "obs", MappingProxyType(dict(sorted(self.obs.items()))))

    def __getitem__(self, q: Quarter) -> float:
        return self.obs[q]

    def __contains__(self, q) -> bool:
        return q in self.obs

    def mean(self) -> float:
        vals = list(self.obs.values())
        return sum(vals) / len(vals)

    @classmethod
    def constant(cls, value: float, quarters: Iterable[Quarter]) -> "SeparationSeries":
        return cls({q: value for q in quarters})


@dataclass
class IngestReport:
    errors: list[ParseError] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    gapped_counties: list[str] = field(default_factory=list)

    def error(self, path, line, message):
        err = ParseError(path, line, message)
        self.errors.append(err)
        logger.warning("%s", err)

    def warn(self, message):
        self.warnings.append(message)
        logger.warning("%s", message)

    def lines(self) -> list[str]:
        out = [f"error: {e}" for e in self.errors]
        out += [f"warning: {w}" for w in self.warnings]
        out += [f"gaps: county {c} has missing quarters inside its range" for c in self.gapped_counties]
        return out


@dataclass(frozen=True)
class Exclusion:
    pair_id: str
    reason: str


@dataclass(frozen=True)
class BenefitNotice:
    state: str
    week_date: _dt.date
    eb_weeks: int
    euc_weeks: int


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------

def _rows(path, header):
    """Yield (line_number, row_dict) after checking the header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file, expected header") from None
        got = [h.strip() for h in got]
        missing = [h for h in header if h not in got]
        if missing:
            raise ParseError(path, 1, f"missing columns {missing}; expected {list(header)}")
        idx = [got.index(h) for h in header]
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            line = reader.line_num
            if len(row) < len(got):
                yield line, None
                continue
            yield line, {h: row[i].strip() for h, i in zip(header, idx)}


def _mean3(values):
    # exact for constant input
    x0 = values[0]
    return x0 + sum(v - x0 for v in values[1:]) / len(values)


def _remap(fips, remap):
    if remap:
        return remap.get(fips, fips)
    return fips


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

def read_unemployment(path, report: IngestReport, fips_remap=None) -> dict[str, dict[Quarter, float]]:
    """Read monthly county rates (percent) and average them to quarters."""
    monthly: dict[str, dict[tuple[int, int], tuple[float, int]]] = defaultdict(dict)
    for line, row in _rows(path, UNEMPLOYMENT_HEADER):
        if row is None:
            report.error(path, line, "short row")
            continue
        try:
            fips = validate_fips(_remap(row["fips"], fips_remap))
        except ValueError as exc:
            report.error(path, line, str(exc))
            continue
        try:
            year, month = int(row["year"]), int(row["month"])
            pct = float(row["urate_percent"])
        except ValueError:
            report.error(path, line, "non-numeric year/month/urate_percent")
            continue
        if not 1 <= month <= 12:
            report.error(path, line, f"month {month} outside 1..12")
            continue
        if not 0.0 < pct < 100.0:
            report.error(path, line, f"urate_percent {pct} outside (0, 100)")
            continue
        key = (year, month)
        prev = monthly[fips].get(key)
        if prev is not None:
            if prev[0] == pct:
                report.warn(f"{path}:{line}: duplicate row for {fips} {year}-{month:02d} ignored")
            else:
                report.error(path, line, f"conflicting duplicate for {fips} {year}-{month:02d}; first kept")
            continue
        monthly[fips][key] = (pct, line)

    out: dict[str, dict[Quarter, float]] = {}
    for fips, months in monthly.items():
        by_q: dict[Quarter, list[float]] = defaultdict(list)
        for (year, month), (pct, _) in sorted(months.items()):
            by_q[Quarter.from_month(year, month)].append(pct / 100.0)
        series = {}
        for q, vals in sorted(by_q.items()):
            if len(vals) != 3:
                report.warn(f"{fips} {q}: only {len(vals)} of 3 months present; quarter dropped")
                continue
            series[q] = _mean3(vals)
        out[fips] = series
    return out


def read_wages(path, report: IngestReport, fips_remap=None) -> dict[str, dict[Quarter, float]]:
    out: dict[str, dict[Quarter, float]] = defaultdict(dict)
    for line, row in _rows(path, WAGES_HEADER):
        if row is None:
            report.error(path, line, "short row")
            continue
        try:
            fips = validate_fips(_remap(row["fips"], fips_remap))
            q = Quarter(int(row["year"]), int(row["quarter"]))
            wage = float(row["avg_weekly_wage"])
        except (ValueError, ParameterError) as exc:
            report.error(path, line, str(exc))
            continue
        if not wage > 0:
            report.error(path, line, f"avg_weekly_wage {wage} must be positive")
            continue
        if q in out[fips] and out[fips][q] != wage:
            report.error(path, line, f"conflicting duplicate wage for {fips} {q}; first kept")
            continue
        out[fips][q] = wage
    return dict(out)


def read_benefit_notices(path, report: IngestReport) -> list[BenefitNotice]:
    notices = []
    for line, row in _rows(path, NOTICES_HEADER):
        if row is None:
            report.error(path, line, "short row")
            continue
        state = row["state_fips"].zfill(2)
        if not re.fullmatch(r"\d{2}", state):
            report.error(path, line, f"malformed state FIPS {row['state_fips']!r}")
            continue
        try:
            date = _dt.date.fromisoformat(row["notice_date"])
            eb, euc = int(row["eb_weeks"]), int(row["euc_weeks"])
        except ValueError as exc:
            report.error(path, line, str(exc))
            continue
        if eb < 0 or euc < 0:
            report.error(path, line, "negative week counts")
            continue
        notices.append(BenefitNotice(state, date, eb, euc))
    return notices


def aggregate_benefits_to_quarter(
    notices: Iterable[BenefitNotice],
    base_weeks: int = BASE_WEEKS,
    quarters: Iterable[Quarter] | None = None,
    report: IngestReport | None = None,
) -> dict[tuple[str, Quarter], int]:
    """Quarterly maximum benefit duration per state.

    The value for a quarter is the largest ``base_weeks + eb + euc`` over the
    weekly notices dated in that quarter. Quarters without notices inherit
    the previous quarter's value (with a warning); a quarter with no earlier
    value raises :class:`DataError`.

    Parameters
    ----------
    notices
        Weekly trigger notices.
    base_weeks
        Regular state entitlement.
    quarters
        Quarters to fill for every state. Defaults to each state's first
        notice quarter through the latest notice quarter overall.
    """
    if base_weeks < 1:
        raise ParameterError("base_weeks must be >= 1")
    best: dict[str, dict[Quarter, int]] = defaultdict(dict)
    for n in notices:
        if n.eb_weeks < 0 or n.euc_weeks < 0:
            raise ParameterError(f"negative week counts in notice {n}")
        q = Quarter.from_date(n.week_date)
        total = base_weeks + n.eb_weeks + n.euc_weeks
        if total > best[n.state].get(q, 0):
            best[n.state][q] = total

    out: dict[tuple[str, Quarter], int] = {}
    if not best:
        return out
    last = max(max(qs) for qs in best.values())
    wanted = sorted(set(quarters)) if quarters is not None else None
    for state, by_q in sorted(best.items()):
        span = wanted if wanted is not None else quarter_range(min(by_q), last)
        if not span:
            continue
        prev = None
        # seed carry-forward from notices earlier than the requested span
        earlier = [q for q in by_q if q < span[0]]
        if earlier:
            prev = by_q[max(earlier)]
        for q in quarter_range(span[0], span[-1]):
            if q in by_q:
                prev = by_q[q]
            elif prev is None:
                raise DataError(f"state {state}: no benefit notice on or before {q}")
            else:
                msg = f"state {state}: no notices in {q}; carrying forward {prev} weeks"
                if report is not None:
                    report.warn(msg)
                else:
                    logger.warning(msg)
            out[(state, q)] = prev
    if wanted is not None:
        out = {k: v for k, v in out.items() if k[1] in set(wanted)}
    return out


def read_state_gdp(path, report: IngestReport) -> dict[tuple[str, Quarter], float]:
    """State real GDP per worker keyed by (state, quarter)."""
    out = {}
    for line, row in _rows(path, STATE_GDP_HEADER):
        if row is None:
            report.error(path, line, "short row")
            continue
        state = row["state_fips"].zfill(2)
        try:
            q = Quarter(int(row["year"]), int(row["quarter"]))
            gdp, emp = float(row["real_gdp"]), float(row["employment"])
        except (ValueError, ParameterError) as exc:
            report.error(path, line, str(exc))
            continue
        if not (gdp > 0 and emp > 0):
            report.error(path, line, "real_gdp and employment must be positive")
            continue
        out[(state, q)] = gdp / emp
    return out


def read_separation(path, report: IngestReport | None = None) -> SeparationSeries:
    """Monthly national separation rates (percent) summed to quarters."""
    report = report if report is not None else IngestReport()
    monthly: dict[Quarter, list[float]] = defaultdict(list)
    seen = set()
    for line, row in _rows(path, SEPARATION_HEADER):
        if row is None:
            report.error(path, line, "short row")
            continue
        try:
            year, month = int(row["year"]), int(row["month"])
            rate = float(row["rate_percent"])
            q = Quarter.from_month(year, month)
        except (ValueError, ParameterError) as exc:
            report.error(path, line, str(exc))
            continue
        if not 0.0 < rate < 100.0:
            report.error(path, line, f"rate_percent {rate} outside (0, 100)")
            continue
        if (year, month) in seen:
            report.warn(f"{path}:{line}: duplicate month {year}-{month:02d} ignored")
            continue
        seen.add((year, month))
        monthly[q].append(rate / 100.0)
    obs = {}
    for q, vals in sorted(monthly.items()):
        if len(vals) != 3:
            report.warn(f"separation {q}: only {len(vals)} of 3 months present; quarter dropped")
            continue
        obs[q] = sum(vals)
    return SeparationSeries(obs)


def read_pairs(path, report: IngestReport, fips_remap=None) -> list[BorderPair]:
    pairs = []
    seen: dict[frozenset, str] = {}
    ids = set()
    for line, row in _rows(path, PAIRS_HEADER):
        if row is None:
            report.error(path, line, "short row")
            continue
        try:
            pair = BorderPair(
                row["pair_id"],
                validate_fips(_remap(row["fips_a"], fips_remap)),
                validate_fips(_remap(row["fips_b"], fips_remap)),
            )
        except (ValueError, DataError) as exc:
            report.error(path, line, str(exc))
            continue
        if pair.key in seen:
            report.warn(f"{path}:{line}: pair {pair.pair_id} duplicates {seen[pair.key]}; dropped")
            continue
        if pair.pair_id in ids:
            report.error(path, line, f"duplicate pair_id {pair.pair_id}")
            continue
        seen[pair.key] = pair.pair_id
        ids.add(pair.pair_id)
        pairs.append(pair)
    return pairs


def ingest_county_series(
    unemployment,
    benefits=None,
    wages=None,
    state_gdp=None,
    base_weeks: int = BASE_WEEKS,
    fips_remap: Mapping[str, str] | None = None,
) -> tuple[dict[str, CountyPanel], IngestReport]:
    """Assemble quarterly county panels from the raw CSV files.

    ``benefits`` may be a path to ``benefits_notices.csv`` or an already
    aggregated ``{(state, quarter): weeks}`` mapping; likewise ``state_gdp``
    may be a path or a ``{(state, quarter): gdp_per_worker}`` mapping.
    Counties whose quarters have holes are kept and listed in
    ``report.gapped_counties``.
    """
    report = IngestReport()
    urates = read_unemployment(unemployment, report, fips_remap)

    wage_map = read_wages(wages, report, fips_remap) if wages is not None else {}

    if benefits is None:
        ben_map = {}
    elif isinstance(benefits, Mapping):
        ben_map = dict(benefits)
    else:
        notices = read_benefit_notices(benefits, report)
        all_q = sorted({q for s in urates.values() for q in s})
        ben_map = {}
        if notices and all_q:
            by_state = defaultdict(list)
            for n in notices:
                by_state[n.state].append(n)
            for state, ns in by_state.items():
                first = min(Quarter.from_date(n.week_date) for n in ns)
                qs = [q for q in all_q if q >= first]
                ben_map.update(aggregate_benefits_to_quarter(ns, base_weeks, qs, report))

    if state_gdp is None:
        gdp_map = {}
    elif isinstance(state_gdp, Mapping):
        gdp_map = dict(state_gdp)
    else:
        gdp_map = read_state_gdp(state_gdp, report)

    panels = {}
    for fips, series in sorted(urates.items()):
        st = state_of(fips)
        w = wage_map.get(fips, {})
        obs = {
            q: CountyObs(u, w.get(q), ben_map.get((st, q)), gdp_map.get((st, q)))
            for q, u in series.items()
        }
        panel = CountyPanel(fips, obs)
        if panel.has_gaps:
            report.gapped_counties.append(fips)
        panels[fips] = panel
    return panels, report


def build_pair_panel(
    pairs: Iterable[BorderPair],
    counties: Mapping[str, CountyPanel],
    window: tuple[Quarter, Quarter],
) -> tuple[list[PairPanel], list[Exclusion]]:
    """Pair panels whose counties are both observed over the whole window.

    Only unemployment and benefit weeks are required; wages and GDP per
    worker are optional and are checked when a specification needs them.
    """
    quarters = tuple(quarter_range(*window))
    out, excluded = [], []
    if not quarters:
        return out, excluded
    for pair in pairs:
        missing = [c for c in (pair.county_a, pair.county_b) if c not in counties]
        if missing:
            excluded.append(Exclusion(pair.pair_id, f"unknown county {', '.join(missing)}"))
            continue
        pa, pb = counties[pair.county_a], counties[pair.county_b]
        short = [c.county for c in (pa, pb) if not c.covers(quarters)]
        if short:
            excluded.append(
                Exclusion(pair.pair_id, f"county {', '.join(short)} not fully observed in window")
            )
            continue
        out.append(PairPanel(pair, pa, pb, quarters))
    if excluded:
        logger.info("excluded %d of %d pairs", len(excluded), len(excluded) + len(out))
    return out, excluded


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def _fmt(x):
    return "" if x is None else repr(x)


def write_county_panels(panels: Iterable[CountyPanel], path) -> None:
    """Canonical quarterly CSV; floats use ``repr`` so a re-read is exact."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNTY_PANEL_HEADER)
        for p in panels:
            for q, o in p.obs.items():
                w.writerow([p.county, q.year, q.q, repr(o.urate), _fmt(o.avg_weekly_wage),
                            _fmt(o.benefit_weeks), _fmt(o.state_gdp_per_worker)])


def read_county_panels(path) -> dict[str, CountyPanel]:
    def opt(text, cast):
        return None if text == "" else cast(text)

    data: dict[str, dict[Quarter, CountyObs]] = defaultdict(dict)
    for line, row in _rows(path, COUNTY_PANEL_HEADER):
        if row is None:
            raise ParseError(path, line, "short row")
        try:
            fips = validate_fips(row["fips"])
            q = Quarter(int(row["year"]), int(row["quarter"]))
            data[fips][q] = CountyObs(
                float(row["urate"]),
                opt(row["avg_weekly_wage"], float),
                opt(row["benefit_weeks"], int),
                opt(row["state_gdp_per_worker"], float),
            )
        except (ValueError, ParameterError) as exc:
            raise ParseError(path, line, str(exc)) from None
    return {f: CountyPanel(f, obs) for f, obs in data.items()}


def _write(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_unemployment_csv(panels: Iterable[CountyPanel], path) -> None:
    """Expand quarterly rates to three identical monthly rows in percent."""
    rows = []
    for p in panels:
        for q, o in p.obs.items():
            for m in range(3):
                rows.append([p.county, q.year, 3 * (q.q - 1) + m + 1, repr(o.urate * 100.0)])
    _write(path, UNEMPLOYMENT_HEADER, rows)


def write_wages_csv(panels: Iterable[CountyPanel], path) -> None:
    rows = [[p.county, q.year, q.q, repr(o.avg_weekly_wage)]
            for p in panels for q, o in p.obs.items() if o.avg_weekly_wage is not None]
    _write(path, WAGES_HEADER, rows)


def write_notices_csv(benefits: Mapping[tuple[str, Quarter], int], path,
                      base_weeks: int = BASE_WEEKS) -> None:
    """One notice per state-quarter (dated the quarter's first day), all as EUC weeks."""
    rows = []
    for (state, q), weeks in sorted(benefits.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        date = _dt.date(q.year, 3 * (q.q - 1) + 1, 1)
        rows.append([state, date.isoformat(), 0, weeks - base_weeks])
    _write(path, NOTICES_HEADER, rows)


def write_separation_csv(sep: SeparationSeries, path) -> None:
    """Split each quarterly rate evenly across its three months."""
    rows = []
    for q, s in sep.obs.items():
        for m in range(3):
            rows.append([q.year, 3 * (q.q - 1) + m + 1, repr(s / 3.0 * 100.0)])
    _write(path, SEPARATION_HEADER, rows)


def write_state_gdp_csv(gdp_per_worker: Mapping[tuple[str, Quarter], float], path,
                        employment: float = 1.0e6) -> None:
    rows = [[state, q.year, q.q, repr(v * employment), repr(employment)]
            for (state, q), v in sorted(gdp_per_worker.items())]
    _write(path, STATE_GDP_HEADER, rows)


def write_pairs_csv(pairs: Iterable[BorderPair], path) -> None:
    _write(path, PAIRS_HEADER, [[p.pair_id, p.county_a, p.county_b] for p in pairs])
