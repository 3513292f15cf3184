"""Population centers of counties and their distance to a pair's shared border.

Centers are population-weighted means of census-block coordinates taken
directly in degrees. A pair's shared border is the common part of the two
county outlines; the distance from a center to it is the smallest
great-circle distance to the border after densifying it.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, LinearRing, MultiLineString
from shapely.ops import linemerge

from .errors import GeometryError, ParameterError, ParseError
from .panel_data import BorderPair, validate_fips

EARTH_RADIUS_KM = 6371.0088
CENTERS_HEADER = ("fips", "lon", "lat", "pop")
DISTANCES_HEADER = ("pair_id", "fips", "dist_km")
BLOCKS_HEADER = ("block_geoid", "lon", "lat", "pop")


@dataclass(frozen=True)
class BlockPoint:
    block_geoid: str
    lon: float
    lat: float
    pop: int

    def __post_init__(self):
        if not -180.0 <= self.lon <= 180.0 or not -90.0 <= self.lat <= 90.0:
            raise ParameterError(f"block {self.block_geoid}: coordinates out of range")
        if self.pop < 0:
            raise ParameterError(f"block {self.block_geoid}: negative population")

    @property
    def county(self) -> str:
        return self.block_geoid[:5]


@dataclass(frozen=True)
class PopulationCenter:
    county: str
    lon: float
    lat: float
    total_pop: int


@dataclass(frozen=True)
class CountyPolygon:
    county: str
    rings: tuple

    def __post_init__(self):
        rings = tuple(tuple((float(x), float(y)) for x, y in ring) for ring in self.rings)
        for i, ring in enumerate(rings):
            if len(ring) < 4:
                raise GeometryError("needs at least 4 vertices", i)
            if ring[0] != ring[-1]:
                raise GeometryError("not closed (first vertex != last vertex)", i)
            if not LinearRing(ring).is_simple:
                raise GeometryError("self-intersecting", i)
        object.__setattr__(self, "rings", rings)

    def outline(self) -> MultiLineString:
        return MultiLineString([list(r) for r in self.rings])


@dataclass(frozen=True)
class SharedBoundary:
    pair_id: str
    polylines: tuple

    @property
    def empty(self) -> bool:
        return len(self.polylines) == 0

    def geometry(self) -> MultiLineString:
        return MultiLineString([list(p) for p in self.polylines])


@dataclass(frozen=True)
class PairDistance:
    pair_id: str
    fips_a: str
    fips_b: str
    dist_a_km: float
    dist_b_km: float


def population_center(blocks: Iterable[BlockPoint], county: str | None = None) -> PopulationCenter:
    """Population-weighted mean longitude and latitude of a county's blocks."""
    blocks = list(blocks)
    if county is None:
        county = blocks[0].county if blocks else "?"
    total = sum(b.pop for b in blocks)
    if total <= 0:
        raise ParameterError(f"county {county} has zero total population")
    lon = math.fsum(b.pop * b.lon for b in blocks) / total
    lat = math.fsum(b.pop * b.lat for b in blocks) / total
    return PopulationCenter(county, lon, lat, total)


def population_centers(blocks: Iterable[BlockPoint]) -> dict[str, PopulationCenter]:
    by_county = defaultdict(list)
    for b in blocks:
        by_county[b.county].append(b)
    return {c: population_center(bs, c) for c, bs in sorted(by_county.items())}


def shared_boundary(a: CountyPolygon, b: CountyPolygon, snap_tol_deg: float = 1e-6,
                    pair_id: str = "") -> SharedBoundary:
    """Common boundary of two county outlines.

    Vertices of ``a`` within ``snap_tol_deg`` of ``b``'s outline are snapped
    onto it before intersecting. Point contacts are dropped, so counties
    that only touch at a corner get an empty result.
    """
    la, lb = a.outline(), b.outline()
    snapped = shapely.snap(la, lb, snap_tol_deg)
    inter = snapped.intersection(lb)
    lines = []
    for g in getattr(inter, "geoms", [inter]):
        if isinstance(g, LineString) and g.length > snap_tol_deg:
            lines.append(g)
        elif hasattr(g, "geoms"):
            lines.extend(x for x in g.geoms if isinstance(x, LineString) and x.length > snap_tol_deg)
    if not lines:
        return SharedBoundary(pair_id, ())
    merged = linemerge(lines)
    parts = list(merged.geoms) if hasattr(merged, "geoms") else [merged]
    polylines = sorted(tuple(shapely.normalize(p).coords) for p in parts)
    return SharedBoundary(pair_id, tuple(polylines))


def haversine_km(lon1, lat1, lon2, lat2):
    """Great-circle distance in km; arguments in degrees, numpy-broadcastable."""
    lon1, lat1, lon2, lat2 = map(np.radians, (lon1, lat1, lon2, lat2))
    h = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def densify(polyline: Sequence[tuple[float, float]], step_km: float = 0.25) -> np.ndarray:
    """Points along a polyline no more than ``step_km`` of arc apart."""
    pts = np.asarray(polyline, dtype=float)
    if len(pts) == 1:
        return pts
    out = [pts[:1]]
    for p, q in zip(pts[:-1], pts[1:]):
        length = float(haversine_km(p[0], p[1], q[0], q[1]))
        n = max(1, math.ceil(length / step_km))
        t = np.linspace(0.0, 1.0, n + 1)[1:, None]
        out.append(p + t * (q - p))
    return np.vstack(out)


def center_to_boundary_km(center: PopulationCenter, boundary: SharedBoundary,
                          step_km: float = 0.25) -> float:
    if boundary.empty:
        raise ParameterError(f"pair {boundary.pair_id}: empty shared boundary")
    if not step_km > 0:
        raise ParameterError("step_km must be positive")
    pts = np.vstack([densify(pl, step_km) for pl in boundary.polylines])
    return float(np.min(haversine_km(center.lon, center.lat, pts[:, 0], pts[:, 1])))


def pair_distances(
    pairs: Iterable[BorderPair],
    centers: Mapping[str, PopulationCenter],
    polygons: Mapping[str, CountyPolygon],
    snap_tol_deg: float = 1e-6,
    step_km: float = 0.25,
) -> tuple[list[PairDistance], list[tuple[str, str]]]:
    """Distances for every pair; returns (distances, [(pair_id, reason), ...])."""
    out, flagged = [], []
    for p in pairs:
        missing = [c for c in (p.county_a, p.county_b) if c not in polygons or c not in centers]
        if missing:
            flagged.append((p.pair_id, f"missing polygon or center for {', '.join(missing)}"))
            continue
        sb = shared_boundary(polygons[p.county_a], polygons[p.county_b], snap_tol_deg, p.pair_id)
        if sb.empty:
            flagged.append((p.pair_id, "no shared boundary"))
            continue
        out.append(PairDistance(
            p.pair_id, p.county_a, p.county_b,
            center_to_boundary_km(centers[p.county_a], sb, step_km),
            center_to_boundary_km(centers[p.county_b], sb, step_km),
        ))
    return out, flagged


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def read_blocks_csv(path) -> list[BlockPoint]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [h for h in BLOCKS_HEADER if h not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(path, 1, f"missing columns {missing}")
        for row in reader:
            try:
                out.append(BlockPoint(row["block_geoid"].strip(), float(row["lon"]),
                                      float(row["lat"]), int(row["pop"])))
            except (ValueError, ParameterError) as exc:
                raise ParseError(path, reader.line_num, str(exc)) from None
    return out


def read_counties_geojson(path, key: str = "fips") -> dict[str, CountyPolygon]:
    """Read one Polygon/MultiPolygon feature per county keyed by ``key``.

    ``GEOID`` is accepted as a fallback property name.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for i, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        fips = props.get(key, props.get("GEOID"))
        try:
            fips = validate_fips(str(fips))
        except ValueError as exc:
            raise ParseError(path, i, f"feature {i}: {exc}") from None
        geom = feat.get("geometry") or {}
        if geom.get("type") == "Polygon":
            rings = geom["coordinates"]
        elif geom.get("type") == "MultiPolygon":
            rings = [ring for poly in geom["coordinates"] for ring in poly]
        else:
            raise ParseError(path, i, f"feature {i}: unsupported geometry {geom.get('type')!r}")
        out[fips] = CountyPolygon(fips, tuple(tuple(map(tuple, r)) for r in rings))
    return out


def write_counties_geojson(polygons: Iterable[CountyPolygon], path) -> None:
    feats = [{"type": "Feature", "properties": {"fips": p.county},
              "geometry": {"type": "Polygon", "coordinates": [list(map(list, r)) for r in p.rings]}}
             for p in polygons]
    Path(path).write_text(json.dumps({"type": "FeatureCollection", "features": feats}),
                          encoding="utf-8")


def write_blocks_csv(blocks: Iterable[BlockPoint], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BLOCKS_HEADER)
        for b in blocks:
            w.writerow([b.block_geoid, repr(b.lon), repr(b.lat), b.pop])


def write_centers_csv(centers: Iterable[PopulationCenter], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CENTERS_HEADER)
        for c in centers:
            w.writerow([c.county, repr(c.lon), repr(c.lat), c.total_pop])


def read_centers_csv(path) -> dict[str, PopulationCenter]:
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            f = validate_fips(row["fips"])
            out[f] = PopulationCenter(f, float(row["lon"]), float(row["lat"]), int(row["pop"]))
    return out


def write_distances_csv(distances: Iterable[PairDistance], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DISTANCES_HEADER)
        for d in distances:
            w.writerow([d.pair_id, d.fips_a, repr(d.dist_a_km)])
            w.writerow([d.pair_id, d.fips_b, repr(d.dist_b_km)])


def read_distances_csv(path) -> dict[tuple[str, str], float]:
    """``{(pair_id, fips): km}`` as consumed by the distance control."""
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                out[(row["pair_id"], validate_fips(row["fips"]))] = float(row["dist_km"])
            except ValueError as exc:
                raise ParseError(path, reader.line_num, str(exc)) from None
    return out
