"""Robust outlier screening: flag untenable values instead of publishing them.

Screening never deletes or rewrites a value. A flagged cell keeps its
reported value, gets status ``suppressed_outlier``, and records the original
in provenance; downstream consumers treat it as missing. All statistics are
computed from cell values regardless of status, which makes the screen
idempotent. The criterion itself (modified z-scores, two-rule AND gate) is
this artifact's reconstruction; the source data pipeline it models only
promises that untenable outliers are withheld.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import DegenerateScaleError
from .model import SUPPRESSED, AlmanacConfig, Store

# 1.4826 * MAD estimates the standard deviation for normal data, so modified
# z-scores read in sd-equivalent units and the conventional 3.5 cutoff applies.
MAD_TO_SIGMA = 1.4826
IQR_TO_SIGMA = 1.349

BASIS_MAD = "mad"
BASIS_IQR = "iqr"
BASIS_DEGENERATE = "degenerate"

RULE_AND = "and_gate"
RULE_LONGITUDINAL = "single_longitudinal"
RULE_CROSS = "single_cross"


@dataclass(frozen=True)
class RobustScale:
    median: float
    scale: float
    basis: str


def robust_scale(values: list[float]) -> RobustScale:
    """Median plus a MAD-based scale, with IQR and degenerate fallbacks."""
    if not values:
        raise ValueError("robust_scale requires a nonempty series")
    med = statistics.median(values)
    mad = statistics.median([abs(x - med) for x in values])
    if mad > 0:
        return RobustScale(med, MAD_TO_SIGMA * mad, BASIS_MAD)
    ordered = sorted(values)
    q1, _, q3 = _quartiles(ordered)
    iqr = q3 - q1
    if iqr > 0:
        return RobustScale(med, iqr / IQR_TO_SIGMA, BASIS_IQR)
    return RobustScale(med, 0.0, BASIS_DEGENERATE)


def _quartiles(ordered: list[float]) -> tuple[float, float, float]:
    """Tukey (inclusive) quartiles of an ascending list."""
    n = len(ordered)
    if n == 1:
        return ordered[0], ordered[0], ordered[0]

    def at(q: float) -> float:
        pos = q * (n - 1)
        lo = int(pos)
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        return ordered[lo] * (1 - frac) + ordered[hi] * frac

    return at(0.25), at(0.5), at(0.75)


def modified_z(x: float, s: RobustScale) -> float:
    """Robust z-score of x against s; the 0.6745/MAD constant is folded in."""
    if s.scale == 0:
        raise DegenerateScaleError(
            f"scale is degenerate (median {s.median}); modified z undefined")
    return (x - s.median) / s.scale


def _exceeds(x: float, s: RobustScale, threshold: float) -> tuple[bool, Optional[float]]:
    """Whether x breaches the threshold under s; returns the z when defined.

    A degenerate scale treats any x != median as exceeding any threshold.
    """
    if s.basis == BASIS_DEGENERATE:
        return (x != s.median), None
    z = (x - s.median) / s.scale
    return (abs(z) > threshold), z


@dataclass
class SuppressedCell:
    key: str
    original: float
    z_longitudinal: Optional[float]
    z_cross_sectional: Optional[float]
    rule: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "original": self.original,
            "zL": self.z_longitudinal,
            "zC": self.z_cross_sectional,
            "rule": self.rule,
        }


@dataclass
class QaReport:
    screened_cells: int
    suppressed: list[SuppressedCell]

    @property
    def suppression_count(self) -> int:
        return len(self.suppressed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "screened_cells": self.screened_cells,
            "suppression_count": self.suppression_count,
            "suppressed": [s.to_dict() for s in self.suppressed],
        }

    def write(self, path: Path) -> None:
        path.write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n",
            encoding="utf-8")


def screen_outliers(store: Store, cfg: Optional[AlmanacConfig] = None) -> tuple[Store, QaReport]:
    """Suppress district cells that are outliers both within the district's
    own history and across same-span districts (single rule at the higher
    threshold when only one comparison is available).

    Only district-level cells are screened: the cross-sectional pool is
    defined over entities sharing a grade span, which schools and CMOs do
    not carry, and school rows reach published output only through district
    aggregates. Returns the same store, restamped, plus the report.
    """
    cfg = cfg or store.config
    tau = cfg.outlier_threshold
    tau_single = cfg.single_rule_threshold
    min_long = cfg.min_longitudinal_points
    min_cross = cfg.min_cross_sectional_entities

    spans = {did: d.grade_span.value for did, d in store.districts.items()}
    screened = 0
    flagged: list[SuppressedCell] = []

    for (metric_id, subgroup) in sorted(store.cells):
        sl = store.cells[(metric_id, subgroup)]
        series: dict[str, list[float]] = {}
        pools: dict[tuple[int, str], list[float]] = {}
        district_cells = []
        for (entity_id, year), cell in sl.items():
            span = spans.get(entity_id)
            if span is None:
                continue
            district_cells.append((entity_id, year, span, cell))
            series.setdefault(entity_id, []).append(cell[0])
            pools.setdefault((year, span), []).append(cell[0])
        if not district_cells:
            continue

        long_scales = {
            eid: robust_scale(vals) if len(vals) >= min_long else None
            for eid, vals in series.items()
        }
        cross_scales = {
            key: robust_scale(vals) if len(vals) >= min_cross else None
            for key, vals in pools.items()
        }

        for entity_id, year, span, cell in district_cells:
            screened += 1
            value, status, provenance = cell
            s_long = long_scales[entity_id]
            s_cross = cross_scales[(year, span)]
            fired = False
            rule = None
            z_long = z_cross = None
            if s_long is not None and s_cross is not None:
                hit_l, z_long = _exceeds(value, s_long, tau)
                hit_c, z_cross = _exceeds(value, s_cross, tau)
                fired = hit_l and hit_c
                rule = RULE_AND
            elif s_long is not None:
                fired, z_long = _exceeds(value, s_long, tau_single)
                rule = RULE_LONGITUDINAL
            elif s_cross is not None:
                fired, z_cross = _exceeds(value, s_cross, tau_single)
                rule = RULE_CROSS
            if not fired:
                continue
            flagged.append(SuppressedCell(
                f"{entity_id}|{metric_id}|{year}|{subgroup}",
                value, z_long, z_cross, rule))
            if status != SUPPRESSED:
                sl[(entity_id, year)] = (
                    value, SUPPRESSED, f"{provenance}|suppressed original={value!r}")

    flagged.sort(key=lambda s: s.key)
    store.stage = "screened"
    store.invalidate_caches()
    return store, QaReport(screened, flagged)
