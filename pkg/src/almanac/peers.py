"""Peer matching: the k districts most demographically like a client.

Eligibility is strict (identical grade span, complete features at the match
year); similarity is Euclidean distance over four robustly standardized
features: log effective enrollment, parent education index, English-learner
share, and subsidized-lunch share. "Same scale" is a log-enrollment distance
term rather than a hard size band so the promised k peers always exist.
Standardization pools are statewide per grade span, so distances are shared
and affine changes to any raw feature leave memberships unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

from .entities import effective_enrollment
from .errors import IneligibleDistrictError, InsufficientPoolError, NotFoundError
from .model import AlmanacConfig, Store, Subgroup
from .quality import BASIS_DEGENERATE, RobustScale, robust_scale

ALL = Subgroup.ALL.value

FEATURE_NAMES = ("log_enrollment", "parent_ed_index", "pct_el", "pct_frpm")


@dataclass(frozen=True)
class FeatureVector:
    log_enrollment: float
    parent_ed_index: float
    pct_el: float
    pct_frpm: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.log_enrollment, self.parent_ed_index, self.pct_el, self.pct_frpm)

    def to_dict(self) -> dict[str, float]:
        return {
            "log_enrollment": self.log_enrollment,
            "parent_ed_index": self.parent_ed_index,
            "pct_el": self.pct_el,
            "pct_frpm": self.pct_frpm,
        }


def feature_vector(store: Store, district_id: str, year: int) -> FeatureVector:
    """Demographic match features for one district-year, from corrected and
    screened values; any missing or out-of-range feature makes the district
    ineligible."""
    if district_id not in store.districts:
        raise NotFoundError(f"unknown district {district_id}")
    enrollment = effective_enrollment(store, district_id, year)
    if enrollment <= 0:
        raise IneligibleDistrictError(district_id, f"no governed enrollment in {year}")
    values = {}
    for metric in ("parent_ed_index", "pct_el", "pct_frpm"):
        value = store.usable_value(district_id, metric, year)
        if value is None:
            raise IneligibleDistrictError(
                district_id, f"no usable {metric} for {year}")
        values[metric] = value
    if not (1.0 <= values["parent_ed_index"] <= 5.0):
        raise IneligibleDistrictError(
            district_id, f"parent_ed_index {values['parent_ed_index']} outside [1, 5]")
    for metric in ("pct_el", "pct_frpm"):
        if not (0.0 <= values[metric] <= 100.0):
            raise IneligibleDistrictError(
                district_id, f"{metric} {values[metric]} outside [0, 100]")
    return FeatureVector(math.log(enrollment), values["parent_ed_index"],
                         values["pct_el"], values["pct_frpm"])


def robust_standardize(pool: list[FeatureVector]
                       ) -> tuple[list[tuple[float, ...]], list[RobustScale]]:
    """Standardize each feature independently by its robust scale over the
    pool; degenerate features become zeros (and contribute no distance)."""
    if len(pool) < 2:
        raise InsufficientPoolError(f"pool of {len(pool)} is too small to standardize")
    columns = list(zip(*(fv.as_tuple() for fv in pool)))
    scales = [robust_scale(list(col)) for col in columns]
    standardized = []
    for fv in pool:
        z = tuple(
            0.0 if s.basis == BASIS_DEGENERATE else (x - s.median) / s.scale
            for x, s in zip(fv.as_tuple(), scales))
        standardized.append(z)
    return standardized, scales


@dataclass(frozen=True)
class PeerSet:
    client: str
    match_year: int
    members: tuple[tuple[str, float], ...]  # (district_id, distance) ascending
    features: dict[str, FeatureVector]      # client + members snapshot
    short_pool: bool

    def member_ids(self) -> list[str]:
        return [m_id for m_id, _d in self.members]

    def to_dict(self) -> dict[str, Any]:
        return {
            "client": self.client,
            "match_year": self.match_year,
            "short_pool": self.short_pool,
            "members": [{"district_id": m, "distance": d} for m, d in self.members],
            "features": {eid: fv.to_dict()
                         for eid, fv in sorted(self.features.items())},
        }


def _match_year(store: Store, cfg: AlmanacConfig) -> int:
    if cfg.match_year == "latest":
        return max(store.years)
    return int(cfg.match_year)


def _span_pool(store: Store, span: str, year: int):
    """Eligible districts of one grade span with standardized features.

    Cached per (span, year): the pool is client-independent, which is what
    makes distances symmetric and peer sets deterministic.
    """
    cache = store._caches.setdefault("peer_pools", {})
    key = (span, year)
    pool = cache.get(key)
    if pool is None:
        ids: list[str] = []
        features: list[FeatureVector] = []
        for district_id in sorted(store.districts):
            if store.districts[district_id].grade_span.value != span:
                continue
            try:
                fv = feature_vector(store, district_id, year)
            except IneligibleDistrictError:
                continue
            ids.append(district_id)
            features.append(fv)
        if len(ids) >= 2:
            standardized, scales = robust_standardize(features)
        else:
            standardized, scales = [(0.0,) * 4 for _ in ids], None
        pool = {
            "ids": ids,
            "features": dict(zip(ids, features)),
            "z": dict(zip(ids, standardized)),
            "scales": scales,
        }
        cache[key] = pool
    return pool


def pool_scales(store: Store, district_id: str,
                cfg: Optional[AlmanacConfig] = None) -> list[RobustScale]:
    """Per-feature standardization scales of the client's grade-span pool."""
    cfg = cfg or store.config
    year = _match_year(store, cfg)
    span = store.districts[district_id].grade_span.value
    pool = _span_pool(store, span, year)
    if pool["scales"] is None:
        raise InsufficientPoolError(f"span {span} has fewer than 2 eligible districts")
    return pool["scales"]


def peer_set(store: Store, district_id: str,
             cfg: Optional[AlmanacConfig] = None) -> PeerSet:
    """The k nearest same-span districts by standardized demographic distance.

    Ties break on ascending district id; when the eligible pool is smaller
    than k every eligible district is returned and short_pool is set.
    """
    cfg = cfg or store.config
    if district_id not in store.districts:
        raise NotFoundError(f"unknown district {district_id}")
    year = _match_year(store, cfg)
    # Raises IneligibleDistrictError with the reason when the client fails.
    feature_vector(store, district_id, year)

    span = store.districts[district_id].grade_span.value
    pool = _span_pool(store, span, year)
    client_z = pool["z"][district_id]
    weights = cfg.feature_weights

    candidates = []
    for other_id in pool["ids"]:
        if other_id == district_id:
            continue
        z = pool["z"][other_id]
        d2 = 0.0
        for w, zc, zo in zip(weights, client_z, z):
            delta = zc - zo
            d2 += w * delta * delta
        candidates.append((math.sqrt(d2), other_id))
    candidates.sort()
    top = candidates[:cfg.k_peers]

    member_ids = [m_id for _d, m_id in top]
    features = {district_id: pool["features"][district_id]}
    for m_id in member_ids:
        features[m_id] = pool["features"][m_id]
    return PeerSet(
        client=district_id,
        match_year=year,
        members=tuple((m_id, d) for d, m_id in top),
        features=features,
        short_pool=len(candidates) < cfg.k_peers,
    )
