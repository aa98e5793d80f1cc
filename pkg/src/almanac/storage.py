"""Store directory format: normalized tables plus a stage manifest.

Each pipeline stage writes a complete, inspectable store directory:
manifest.json (stage, config, counts), entities.csv, schools.csv (with the
resolved parent column), and one long observations.csv. Values round-trip
exactly: floats are printed with their shortest round-trip representation.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Optional

from .errors import CorpusIOError, SchemaVersionError
from .model import (
    AlmanacConfig,
    District,
    Entity,
    EntityKind,
    FundingType,
    GradeSpan,
    Governance,
    School,
    Store,
)

STORE_SCHEMA_VERSION = 1

MANIFEST_FILE = "manifest.json"
ENTITIES_FILE = "entities.csv"
SCHOOLS_FILE = "schools.csv"
OBSERVATIONS_FILE = "observations.csv"


def config_hash(config: AlmanacConfig) -> str:
    payload = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def write_store(store: Store, store_dir: Path) -> None:
    store_dir = Path(store_dir)
    try:
        store_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CorpusIOError(f"cannot create store directory {store_dir}: {exc}")

    n_obs = store.observation_count()
    manifest = {
        "schema_version": STORE_SCHEMA_VERSION,
        "stage": store.stage,
        "config": store.config.to_dict(),
        "config_hash": config_hash(store.config),
        "years": store.years,
        "counts": {
            "districts": len(store.districts),
            "schools": len(store.schools),
            "cmos": len(store.cmos),
            "counties": len(store.counties),
            "observations": n_obs,
        },
    }
    (store_dir / MANIFEST_FILE).write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")

    with open(store_dir / ENTITIES_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "kind", "name", "county_id", "grade_span",
                         "funding_type"])
        for county in sorted(store.counties.values(), key=lambda e: e.id):
            writer.writerow([county.id, "county", county.name, "", "", ""])
        for cmo in sorted(store.cmos.values(), key=lambda e: e.id):
            writer.writerow([cmo.id, "cmo", cmo.name, "", "", ""])
        if store.state is not None:
            writer.writerow([store.state.id, "state", store.state.name, "", "", ""])
        for d in sorted(store.districts.values(), key=lambda e: e.id):
            writer.writerow([d.id, "district", d.name, d.county_id,
                             d.grade_span.value, d.funding_type.value])

    with open(store_dir / SCHOOLS_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "name", "authorizer_district_id", "governance",
                         "cmo_id", "resolved_parent_id"])
        for s in sorted(store.schools.values(), key=lambda e: e.id):
            writer.writerow([s.id, s.name, s.authorizer_district_id,
                             s.governance.value, s.cmo_id or "",
                             store.resolved_parent.get(s.id, s.authorizer_district_id)])

    with open(store_dir / OBSERVATIONS_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["entity_id", "metric_id", "year", "subgroup", "value",
                         "status", "provenance"])
        for (metric_id, subgroup) in sorted(store.cells):
            sl = store.cells[(metric_id, subgroup)]
            for (entity_id, year) in sorted(sl):
                value, status, provenance = sl[(entity_id, year)]
                writer.writerow([entity_id, metric_id, year, subgroup,
                                 repr(value), status, provenance])


def read_store(store_dir: Path, config: Optional[AlmanacConfig] = None) -> Store:
    store_dir = Path(store_dir)
    manifest_path = store_dir / MANIFEST_FILE
    if not manifest_path.is_file():
        raise CorpusIOError(f"{store_dir} is not a store directory (no manifest)")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("schema_version") != STORE_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"store schema {manifest.get('schema_version')!r} unsupported; "
            f"expected {STORE_SCHEMA_VERSION}")

    store = Store(config or AlmanacConfig.from_dict(manifest["config"]))
    store.stage = manifest["stage"]
    store.years = list(manifest["years"])

    with open(store_dir / ENTITIES_FILE, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for eid, kind, name, county_id, grade_span, funding_type in reader:
            if kind == "county":
                store.counties[eid] = Entity(eid, EntityKind.COUNTY, name)
            elif kind == "cmo":
                store.cmos[eid] = Entity(eid, EntityKind.CMO, name)
            elif kind == "state":
                store.state = Entity(eid, EntityKind.STATE, name)
            else:
                store.districts[eid] = District(
                    eid, name, county_id, GradeSpan(grade_span),
                    FundingType(funding_type))

    with open(store_dir / SCHOOLS_FILE, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for sid, name, authorizer, governance, cmo_id, parent in reader:
            store.schools[sid] = School(sid, name, authorizer,
                                        Governance(governance), cmo_id or None)
            store.resolved_parent[sid] = parent

    with open(store_dir / OBSERVATIONS_FILE, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        cells = store.cells
        for entity_id, metric_id, year, subgroup, value, status, provenance in reader:
            key = (metric_id, subgroup)
            sl = cells.get(key)
            if sl is None:
                sl = cells[key] = {}
            sl[(entity_id, int(year))] = (float(value), status, provenance)
    return store
