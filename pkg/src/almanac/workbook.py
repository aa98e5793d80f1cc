"""Per-district workbook bundles: leaderboards, scatter series, trend panels,
and the similarity panel, serialized to a canonical self-contained file.

A bundle embeds every district descriptor, metric definition, and number the
dashboard needs, so the file works offline with no service behind it.
Serialization is canonical (sorted keys, shortest round-trip floats, LF,
compact separators): two builds over the same store differ only in
``generated_at``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from . import metrics, peers
from .errors import (
    BundleParseError,
    IneligibleDistrictError,
    NotFoundError,
    SchemaVersionError,
)
from .model import (
    CORRECTED,
    SUPPRESSED,
    AlmanacConfig,
    Polarity,
    Store,
    Subgroup,
    metric_catalog,
    metric_def,
)

BUNDLE_SCHEMA_VERSION = "1"

ALL = Subgroup.ALL.value

SUBGROUP_ORDER = tuple(s.value for s in Subgroup)

# Cross-silo scatter pairings shipped with every bundle (latest year, all
# students); the full pair space stays available through the service.
DEFAULT_SCATTER_PRESETS = (
    ("per_pupil_revenue_corrected", "math_score_g8"),
    ("pct_frpm", "grad_rate"),
    ("teacher_fte_per_100", "math_score_g6"),
    ("pct_ap_courses", "grad_rate"),
    ("pupil_teacher_ratio", "ela_score_g7"),
    ("per_pupil_expenditure", "suspension_rate"),
)

SIMILARITY_FEATURES = ("parent_ed_index", "pct_el", "pct_frpm")


def _cached_peer_set(store: Store, client: str, cfg: AlmanacConfig) -> peers.PeerSet:
    cache = store._caches.setdefault("peer_sets", {})
    ps = cache.get(client)
    if ps is None:
        ps = peers.peer_set(store, client, cfg)
        cache[client] = ps
    return ps


# ---------------------------------------------------------------------------
# leaderboards


@dataclass(frozen=True)
class LeaderboardRow:
    district_id: str
    value: float
    rank: int
    is_client: bool


@dataclass(frozen=True)
class Leaderboard:
    metric_id: str
    year: int
    subgroup: str
    rows: tuple[LeaderboardRow, ...]
    dropped: int
    polarity_applied: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric_id": self.metric_id,
            "year": self.year,
            "subgroup": self.subgroup,
            "dropped": self.dropped,
            "polarity_applied": self.polarity_applied,
            "rows": [[r.district_id, r.value, r.rank, r.is_client]
                     for r in self.rows],
        }


def rank_rows(values: list[tuple[str, float]], polarity: Polarity
              ) -> list[tuple[str, float, int]]:
    """Order best-to-worst for the polarity and assign competition ranks
    (ties share a rank; neutral sorts descending). Ties order by district id."""
    reverse = polarity is not Polarity.LOWER_BETTER
    ordered = sorted(values, key=lambda kv: (-kv[1] if reverse else kv[1], kv[0]))
    ranked = []
    prev_value: Optional[float] = None
    prev_rank = 0
    for idx, (district_id, value) in enumerate(ordered, start=1):
        rank = prev_rank if value == prev_value else idx
        ranked.append((district_id, value, rank))
        prev_value, prev_rank = value, rank
    return ranked


def leaderboard(store: Store, client: str, metric_id: str, year: int,
                subgroup: str = ALL,
                cfg: Optional[AlmanacConfig] = None) -> Leaderboard:
    """Client plus peers ranked on one metric/year/subgroup."""
    mdef = metric_def(metric_id)
    if mdef is None:
        raise NotFoundError(f"unknown metric {metric_id}")
    cfg = cfg or store.config
    ps = _cached_peer_set(store, client, cfg)
    vm = metrics.value_map(store, metric_id, subgroup)
    scope = [client] + ps.member_ids()
    values = []
    dropped = 0
    for district_id in scope:
        value = vm.get((district_id, year))
        if value is None:
            dropped += 1
        else:
            values.append((district_id, value))
    rows = tuple(LeaderboardRow(d, v, r, d == client)
                 for d, v, r in rank_rows(values, mdef.polarity))
    return Leaderboard(metric_id, year, subgroup, rows, dropped)


# ---------------------------------------------------------------------------
# scatter


@dataclass(frozen=True)
class ScatterSeries:
    x_metric: str
    y_metric: str
    year: int
    subgroup: str
    points: tuple[tuple[str, float, float], ...]
    r: Optional[float]
    fit: Optional[tuple[float, float]]  # (slope, intercept)

    def to_dict(self) -> dict[str, Any]:
        return {
            "x_metric": self.x_metric,
            "y_metric": self.y_metric,
            "year": self.year,
            "subgroup": self.subgroup,
            "points": [[d, x, y] for d, x, y in self.points],
            "r": self.r,
            "fit": list(self.fit) if self.fit is not None else None,
        }


def scatter(store: Store, districts: list[str], x_metric: str, y_metric: str,
            year: int, subgroup: str = ALL) -> ScatterSeries:
    """Paired values over districts; correlation and fit when defined."""
    for metric_id in (x_metric, y_metric):
        if metric_def(metric_id) is None:
            raise NotFoundError(f"unknown metric {metric_id}")
    vm_x = metrics.value_map(store, x_metric, subgroup)
    vm_y = metrics.value_map(store, y_metric, subgroup)
    points = []
    for district_id in sorted(districts):
        x = vm_x.get((district_id, year))
        y = vm_y.get((district_id, year))
        if x is not None and y is not None:
            points.append((district_id, x, y))
    r = None
    fit = None
    if len(points) >= 3:
        xs = [p[1] for p in points]
        ys = [p[2] for p in points]
        try:
            r = metrics.pearson_r(xs, ys)
            fit = metrics.ols_fit(xs, ys)
        except metrics.UndefinedCorrelationError:
            r = None
            fit = None
    return ScatterSeries(x_metric, y_metric, year, subgroup, tuple(points), r, fit)


# ---------------------------------------------------------------------------
# similarity panel


@dataclass(frozen=True)
class SimilarityEntry:
    district_id: str
    raw: float
    standardized: float
    contribution: float  # weighted squared z-delta vs the client
    is_client: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "district_id": self.district_id,
            "raw": self.raw,
            "standardized": self.standardized,
            "contribution": self.contribution,
            "is_client": self.is_client,
        }


@dataclass(frozen=True)
class SimilarityPanel:
    rows: tuple[tuple[str, tuple[SimilarityEntry, ...]], ...]  # (feature, entries)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": [{"feature": feature,
                      "entries": [e.to_dict() for e in entries]}
                     for feature, entries in self.rows],
        }


def similarity_panel(store: Store, ps: peers.PeerSet,
                     cfg: Optional[AlmanacConfig] = None) -> SimilarityPanel:
    """Three displayed feature rows over client + peers; log-enrollment
    contributes to total distances but is not a displayed row."""
    cfg = cfg or store.config
    scales = peers.pool_scales(store, ps.client, cfg)
    order = [ps.client] + ps.member_ids()

    def z_of(district_id: str, idx: int) -> float:
        raw = ps.features[district_id].as_tuple()[idx]
        s = scales[idx]
        return 0.0 if s.scale == 0 else (raw - s.median) / s.scale

    rows = []
    for feature in SIMILARITY_FEATURES:
        idx = peers.FEATURE_NAMES.index(feature)
        weight = cfg.feature_weights[idx]
        client_z = z_of(ps.client, idx)
        entries = []
        for district_id in order:
            raw = ps.features[district_id].as_tuple()[idx]
            z = z_of(district_id, idx)
            delta = client_z - z
            entries.append(SimilarityEntry(
                district_id, raw, z, weight * delta * delta,
                district_id == ps.client))
        rows.append((feature, tuple(entries)))
    return SimilarityPanel(tuple(rows))


# ---------------------------------------------------------------------------
# bundles


@dataclass
class WorkbookBundle:
    """Self-contained per-district product; payload is the bundle document."""

    payload: dict[str, Any]

    @property
    def schema_version(self) -> str:
        return self.payload["schema_version"]

    @property
    def client_id(self) -> str:
        return self.payload["client"]["id"]

    def comparable(self) -> dict[str, Any]:
        """Payload with the timestamp removed, for equality checks."""
        doc = dict(self.payload)
        doc.pop("generated_at", None)
        return doc

    def canonical_text(self) -> str:
        return json.dumps(self.payload, sort_keys=True,
                          separators=(",", ":"), allow_nan=False) + "\n"


def _qa_counts(store: Store, entity_id: str) -> dict[str, int]:
    cache = store._caches.get("qa_counts")
    if cache is None:
        cache = {}
        for sl in store.cells.values():
            for (eid, _year), (_value, status, _prov) in sl.items():
                if status == SUPPRESSED:
                    cache.setdefault(eid, [0, 0])[0] += 1
                elif status == CORRECTED:
                    cache.setdefault(eid, [0, 0])[1] += 1
        store._caches["qa_counts"] = cache
    suppressed, corrected = cache.get(entity_id, (0, 0))
    return {"suppressed_cells": suppressed, "corrected_cells": corrected}


def _district_descriptor(store: Store, district_id: str) -> dict[str, Any]:
    district = store.districts[district_id]
    county = store.counties.get(district.county_id)
    return {
        "id": district.id,
        "name": district.name,
        "county_id": district.county_id,
        "county_name": county.name if county else district.county_id,
        "grade_span": district.grade_span.value,
        "funding_type": district.funding_type.value,
    }


def build_bundle(store: Store, client: str,
                 cfg: Optional[AlmanacConfig] = None) -> WorkbookBundle:
    """Assemble the complete bundle for one district.

    Deterministic given (store, cfg) apart from generated_at. Raises
    IneligibleDistrictError (with the reason) when the client cannot be
    matched.
    """
    cfg = cfg or store.config
    ps = _cached_peer_set(store, client, cfg)
    if not ps.members:
        raise IneligibleDistrictError(client, "no eligible same-span peers")
    latest = max(store.years)
    scope = [client] + ps.member_ids()

    boards = []
    for mdef in metric_catalog():
        subgroups = SUBGROUP_ORDER if mdef.subgrouped else (ALL,)
        for subgroup in subgroups:
            vm = metrics.value_map(store, mdef.id, subgroup)
            if not vm:
                continue
            for year in store.years:
                board = leaderboard(store, client, mdef.id, year, subgroup, cfg)
                if board.rows:
                    boards.append(board.to_dict())

    panels = []
    for mdef in metric_catalog():
        panel = metrics.trend_series(store, client, mdef.id, ALL, cfg)
        roc = metrics.rate_of_change(panel.series)
        panels.append({
            "metric_id": mdef.id,
            "subgroup": ALL,
            "client": [[y, v] for y, v in panel.series.points],
            "peer_median": [[y, v] for y, v in panel.peer_median],
            "county_mean": [[y, v] for y, v in panel.county_mean],
            "state_mean": [[y, v] for y, v in panel.state_mean],
            "rate_of_change": {
                "slope": roc.slope,
                "pct_change": roc.pct_change,
                "insufficient": roc.insufficient,
            },
        })

    presets = [scatter(store, scope, x, y, latest, ALL).to_dict()
               for x, y in DEFAULT_SCATTER_PRESETS]

    payload = {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "generated_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "config": cfg.to_dict(),
        "client": _district_descriptor(store, client),
        "districts": {district_id: _district_descriptor(store, district_id)
                      for district_id in scope},
        "metrics": [m.to_dict() for m in metric_catalog()],
        "years": list(store.years),
        "peer_set": ps.to_dict(),
        "leaderboards": boards,
        "trend_panels": panels,
        "scatter_presets": presets,
        "similarity_panel": similarity_panel(store, ps, cfg).to_dict(),
        "qa_summary": _qa_counts(store, client),
    }
    return WorkbookBundle(payload)


def write_bundle(bundle: WorkbookBundle, path: Path) -> None:
    Path(path).write_text(bundle.canonical_text(), encoding="utf-8")


def read_bundle(path: Path) -> WorkbookBundle:
    """Parse and version-check a bundle file; never returns a partial bundle."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleParseError(f"malformed bundle {path}: {exc.msg}", exc.pos)
    if not isinstance(payload, dict):
        raise BundleParseError(f"bundle {path} is not an object", 0)
    version = payload.get("schema_version")
    if version != BUNDLE_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"bundle schema_version {version!r} unsupported; "
            f"expected {BUNDLE_SCHEMA_VERSION!r}")
    return WorkbookBundle(payload)


def bundle_filename(district_id: str) -> str:
    return f"{district_id}.bundle.json"
