"""Reattach direct-funded charter schools to their management organizations.

State master data credits authorizing districts with the students, staff,
and results of charter schools they do not govern. This pass moves every
direct-funded charter under its CMO (or a synthesized one-school parent when
it has none), rebuilds the affected districts' aggregates from the schools
they actually operate, and creates parent-level aggregates for the moved
schools. Additive totals are conserved exactly. Runs before outlier
screening so cross-sectional pools compare like entities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import DanglingReferenceError, NotFoundError
from .model import (
    CORRECTED,
    MISSING,
    Aggregation,
    Entity,
    EntityKind,
    Governance,
    School,
    Store,
    Subgroup,
    metric_catalog,
)

ALL = Subgroup.ALL.value

PARENT_CMO = "cmo"
PARENT_INDEPENDENT = "independent_charter"

# Significant digits kept when weighted means are rebuilt; sums stay exact.
MEAN_DIGITS = 8


def round_sig(value: float, digits: int = MEAN_DIGITS) -> float:
    if value == 0:
        return 0.0
    return float(f"{value:.{digits}g}")


@dataclass(frozen=True)
class CorrectionMove:
    school_id: str
    from_district_id: str
    to_parent_id: str
    parent_kind: str  # cmo | independent_charter

    def to_dict(self) -> dict[str, Any]:
        return {
            "school_id": self.school_id,
            "from_district_id": self.from_district_id,
            "to_parent_id": self.to_parent_id,
            "parent_kind": self.parent_kind,
        }


@dataclass
class CorrectionLog:
    moves: list[CorrectionMove]
    affected_cells: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "moves": [m.to_dict() for m in self.moves],
            "affected_cells": self.affected_cells,
        }

    def write(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n",
            encoding="utf-8")


def _sum_metrics() -> list[str]:
    return [m.id for m in metric_catalog() if m.aggregation is Aggregation.SUM]


def _mean_metrics() -> list[str]:
    return [m.id for m in metric_catalog()
            if m.aggregation is Aggregation.WEIGHTED_MEAN]


def reassociate_charters(store: Store) -> tuple[Store, CorrectionLog]:
    """Move direct-funded charters to their CMOs and rebuild aggregates.

    Returns the same store, restamped. Applying twice is a no-op: schools
    already detached produce no moves and nothing is recomputed.
    """
    moves: list[CorrectionMove] = []
    for school in sorted(store.schools.values(), key=lambda s: s.id):
        if school.governance is not Governance.CHARTER_DIRECT_FUNDED:
            continue
        current = store.resolved_parent.get(school.id, school.authorizer_district_id)
        if current != school.authorizer_district_id:
            continue  # already moved
        if school.cmo_id is not None:
            if school.cmo_id not in store.cmos:
                raise DanglingReferenceError(
                    f"school {school.id} references unknown CMO {school.cmo_id}")
            parent_id, kind = school.cmo_id, PARENT_CMO
        else:
            parent_id, kind = f"IC_{school.id}", PARENT_INDEPENDENT
            if parent_id not in store.cmos:
                store.cmos[parent_id] = Entity(
                    parent_id, EntityKind.CMO, f"{school.name} (independent)")
        store.resolved_parent[school.id] = parent_id
        moves.append(CorrectionMove(school.id, school.authorizer_district_id,
                                    parent_id, kind))

    affected = 0
    if moves:
        store.invalidate_caches()
        touched_districts = sorted({m.from_district_id for m in moves})
        parents = sorted({m.to_parent_id for m in moves})
        parent_set = set(parents)
        by_parent: dict[str, list[School]] = {}
        for school in store.schools.values():
            parent = store.resolved_parent.get(school.id)
            if parent in parent_set:
                by_parent.setdefault(parent, []).append(school)
        for district_id in touched_districts:
            affected += _rebuild_district(store, district_id)
        for parent_id in parents:
            affected += _build_parent_aggregates(
                store, parent_id, sorted(by_parent.get(parent_id, []),
                                         key=lambda s: s.id))
    store.stage = "resolved"
    store.invalidate_caches()
    return store, CorrectionLog(moves, affected)


def _rebuild_district(store: Store, district_id: str) -> int:
    """Recompute one district's school-aggregated cells over the schools it
    still governs; cells with no remaining contributors go missing."""
    remaining = store.schools_of_district(district_id)
    remaining_ids = [s.id for s in remaining]
    touched = 0

    for metric_id in _sum_metrics():
        for (mid, subgroup), sl in list(store.cells.items()):
            if mid != metric_id:
                continue
            for year in store.years:
                old = sl.get((district_id, year))
                if old is None:
                    continue
                total = 0.0
                present = False
                for sid in remaining_ids:
                    cell = sl.get((sid, year))
                    if cell is not None:
                        total += cell[0]
                        present = True
                value, _status, prov = old
                if present:
                    sl[(district_id, year)] = (
                        total, CORRECTED, f"{prov}|corrected original={value!r}")
                else:
                    sl[(district_id, year)] = (
                        value, MISSING, f"{prov}|no governed schools")
                touched += 1

    for metric_id in _mean_metrics():
        for (mid, subgroup), sl in list(store.cells.items()):
            if mid != metric_id:
                continue
            weights = store.cells.get(("enrollment", subgroup), {})
            for year in store.years:
                old = sl.get((district_id, year))
                if old is None:
                    continue
                num = den = 0.0
                for sid in remaining_ids:
                    cell = sl.get((sid, year))
                    if cell is None:
                        continue
                    wcell = weights.get((sid, year))
                    if wcell is None or wcell[0] <= 0:
                        continue
                    num += cell[0] * wcell[0]
                    den += wcell[0]
                value, _status, prov = old
                if den > 0:
                    sl[(district_id, year)] = (
                        round_sig(num / den), CORRECTED,
                        f"{prov}|corrected original={value!r}")
                else:
                    sl[(district_id, year)] = (
                        value, MISSING, f"{prov}|no contributing schools")
                touched += 1
    return touched


def _build_parent_aggregates(store: Store, parent_id: str,
                             schools: list[School]) -> int:
    school_ids = [s.id for s in schools]
    created = 0
    for metric_id in _sum_metrics():
        for (mid, subgroup), sl in list(store.cells.items()):
            if mid != metric_id:
                continue
            for year in store.years:
                total = 0.0
                present = False
                for sid in school_ids:
                    cell = sl.get((sid, year))
                    if cell is not None:
                        total += cell[0]
                        present = True
                if present:
                    sl[(parent_id, year)] = (
                        total, CORRECTED,
                        f"resolve:aggregate over {len(school_ids)} schools")
                    created += 1
    for metric_id in _mean_metrics():
        for (mid, subgroup), sl in list(store.cells.items()):
            if mid != metric_id:
                continue
            weights = store.cells.get(("enrollment", subgroup), {})
            for year in store.years:
                num = den = 0.0
                for sid in school_ids:
                    cell = sl.get((sid, year))
                    if cell is None:
                        continue
                    wcell = weights.get((sid, year))
                    if wcell is None or wcell[0] <= 0:
                        continue
                    num += cell[0] * wcell[0]
                    den += wcell[0]
                if den > 0:
                    sl[(parent_id, year)] = (
                        round_sig(num / den), CORRECTED,
                        f"resolve:aggregate over {len(school_ids)} schools")
                    created += 1
    return created


def effective_enrollment(store: Store, district_id: str, year: int) -> int:
    """Students in the schools the district actually governs for one year."""
    if district_id not in store.districts:
        raise NotFoundError(f"unknown district {district_id}")
    if year not in store.years:
        raise NotFoundError(f"year {year} outside store range")
    sl = store.cells.get(("enrollment", ALL), {})
    total = 0.0
    for school in store.schools_of_district(district_id):
        cell = sl.get((school.id, year))
        if cell is not None:
            total += cell[0]
    return int(total)
