"""Parse and validate raw corpus tables into a Store.

Parsing is strict on types and enums, tolerant on unknown extra columns
(reported with a distinct non-fatal kind), and lossless: every input row
either becomes exactly one typed row or produces at least one line-addressed
error. Duplicate observation keys keep the first occurrence, mirroring a
publish-what-was-submitted posture while still surfacing the defect.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import CorpusIOError
from .model import (
    REPORTED,
    AlmanacConfig,
    District,
    Entity,
    EntityKind,
    FundingType,
    GradeSpan,
    Governance,
    School,
    Store,
    Subgroup,
)

MISSING_COLUMN = "missing_column"
BAD_TYPE = "bad_type"
BAD_ENUM = "bad_enum"
DUPLICATE_KEY = "duplicate_key"
DANGLING_REFERENCE = "dangling_reference"
UNKNOWN_COLUMN = "unknown_column"

ERROR_KINDS = (MISSING_COLUMN, BAD_TYPE, BAD_ENUM, DUPLICATE_KEY,
               DANGLING_REFERENCE, UNKNOWN_COLUMN)

SUBGROUP_VALUES = tuple(s.value for s in Subgroup)
SCORE_METRIC_IDS = ("math_score_g6", "math_score_g7", "math_score_g8",
                    "ela_score_g6", "ela_score_g7", "ela_score_g8")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str                      # id | string | int | real | year | enum
    required: bool = True          # value must be non-empty
    values: tuple[str, ...] = ()   # legal values when kind == "enum"


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[Column, ...]

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)


@dataclass(frozen=True)
class IngestError:
    file: str
    line: int          # 1-based; header is line 1
    column: str
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.line}: [{self.kind}] {self.column}: {self.message}"


def _c(name, kind, required=True, values=()) -> Column:
    return Column(name, kind, required, tuple(values))


TABLE_SCHEMAS: dict[str, TableSchema] = {
    "entities.csv": TableSchema("entities.csv", (
        _c("id", "id"),
        _c("kind", "enum", values=("district", "county", "cmo", "state")),
        _c("name", "string"),
        _c("county_id", "string", required=False),
        _c("grade_span", "string", required=False),
        _c("funding_type", "string", required=False),
    )),
    "schools.csv": TableSchema("schools.csv", (
        _c("id", "id"),
        _c("name", "string"),
        _c("authorizer_district_id", "id"),
        _c("governance", "enum", values=tuple(g.value for g in Governance)),
        _c("cmo_id", "string", required=False),
    )),
    "enrollment.csv": TableSchema("enrollment.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("subgroup", "enum", values=SUBGROUP_VALUES),
        _c("students", "int"),
    )),
    "finance.csv": TableSchema("finance.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("revenue_total", "real"),
        _c("expenditure_total", "real"),
    )),
    "staffing.csv": TableSchema("staffing.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("teacher_fte", "real"),
        _c("admin_fte", "real"),
    )),
    "discipline.csv": TableSchema("discipline.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("subgroup", "enum", values=SUBGROUP_VALUES),
        _c("suspensions", "int"),
        _c("expulsions", "int"),
    )),
    "courses.csv": TableSchema("courses.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("ap_course_count", "int"),
        _c("total_course_count", "int"),
    )),
    "assessments.csv": TableSchema("assessments.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("subgroup", "enum", values=SUBGROUP_VALUES),
        _c("metric_id", "enum", values=SCORE_METRIC_IDS),
        _c("score", "real"),
    )),
    "graduation.csv": TableSchema("graduation.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("subgroup", "enum", values=SUBGROUP_VALUES),
        _c("grad_rate", "real"),
        _c("dropout_rate", "real"),
    )),
    "demography.csv": TableSchema("demography.csv", (
        _c("entity_id", "id"),
        _c("year", "year"),
        _c("pct_el", "real"),
        _c("pct_frpm", "real"),
        _c("parent_ed_index", "real"),
    )),
}

TABLE_ORDER = tuple(TABLE_SCHEMAS)


def _convert(raw: str, col: Column) -> tuple[Any, Optional[str]]:
    """Convert one field; returns (value, error message or None)."""
    if raw == "":
        if col.required:
            return None, "required value is empty"
        return None, None
    if col.kind in ("id", "string"):
        return raw, None
    if col.kind == "enum":
        if raw not in col.values:
            return None, f"value {raw!r} not one of {'|'.join(col.values)}"
        return raw, None
    if col.kind == "int":
        try:
            value = int(raw)
        except ValueError:
            return None, f"expected integer, got {raw!r}"
        if value < 0:
            return None, f"expected non-negative integer, got {raw!r}"
        return value, None
    if col.kind == "real":
        try:
            value = float(raw)
        except ValueError:
            return None, f"expected number, got {raw!r}"
        if value != value or value in (float("inf"), float("-inf")):
            return None, f"expected finite number, got {raw!r}"
        if value < 0:
            return None, f"expected non-negative number, got {raw!r}"
        return value, None
    if col.kind == "year":
        try:
            value = int(raw)
        except ValueError:
            return None, f"expected year, got {raw!r}"
        if not (1980 <= value <= 2100):
            return None, f"year {value} outside plausible range"
        return value, None
    raise AssertionError(f"unknown column kind {col.kind}")


Row = tuple  # typed values in schema column order
ParsedRow = tuple[int, Row]  # (line number, values)


def parse_table(file: Path, schema: TableSchema) -> tuple[list[ParsedRow], list[IngestError]]:
    """Parse one CSV table; malformed rows become errors, never rows."""
    file = Path(file)
    fname = schema.name
    try:
        handle = open(file, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise CorpusIOError(f"cannot read table {fname}: {exc}")

    errors: list[IngestError] = []
    rows: list[ParsedRow] = []
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            for col in schema.columns:
                errors.append(IngestError(fname, 1, col.name, MISSING_COLUMN,
                                          "empty file"))
            return [], errors
        except UnicodeDecodeError as exc:
            raise CorpusIOError(f"table {fname} is not valid UTF-8: {exc}")

        positions: dict[str, int] = {}
        for idx, name in enumerate(header):
            positions.setdefault(name, idx)
        known = {c.name for c in schema.columns}
        for name in header:
            if name not in known:
                errors.append(IngestError(fname, 1, name, UNKNOWN_COLUMN,
                                          f"column {name!r} not in schema; ignored"))
        missing = [c for c in schema.columns if c.name not in positions]
        if missing:
            for col in missing:
                errors.append(IngestError(fname, 1, col.name, MISSING_COLUMN,
                                          f"required column {col.name!r} absent"))
            return [], errors

        order = [(col, positions[col.name]) for col in schema.columns]
        try:
            for line_no, record in enumerate(reader, start=2):
                if not record:
                    continue
                values = []
                ok = True
                for col, idx in order:
                    raw = record[idx] if idx < len(record) else ""
                    value, problem = _convert(raw, col)
                    if problem is not None:
                        errors.append(IngestError(fname, line_no, col.name,
                                                  BAD_TYPE if col.kind != "enum" else BAD_ENUM,
                                                  problem))
                        ok = False
                    else:
                        values.append(value)
                if ok:
                    rows.append((line_no, tuple(values)))
        except UnicodeDecodeError as exc:
            raise CorpusIOError(f"table {fname} is not valid UTF-8: {exc}")
    return rows, errors


def load_corpus(corpus_dir: Path, config: Optional[AlmanacConfig] = None
                ) -> tuple[Store, list[IngestError]]:
    """Parse all corpus tables, link them, and assemble a Store."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise CorpusIOError(f"corpus directory {corpus_dir} does not exist")
    for fname in TABLE_ORDER:
        if not (corpus_dir / fname).is_file():
            raise CorpusIOError(f"missing table file {fname} in {corpus_dir}")

    parsed: dict[str, list[ParsedRow]] = {}
    errors: list[IngestError] = []
    for fname in TABLE_ORDER:
        rows, errs = parse_table(corpus_dir / fname, TABLE_SCHEMAS[fname])
        parsed[fname] = rows
        errors.extend(errs)

    store = Store(config)
    store.stage = "ingested"
    _link_entities(store, parsed, errors)
    _load_observations(store, parsed, errors)
    errors.sort(key=lambda e: (e.file, e.line, e.column, e.kind))
    return store, errors


def _link_entities(store: Store, parsed, errors: list[IngestError]) -> None:
    seen_ids: dict[str, int] = {}
    district_rows = []
    for line, row in parsed["entities.csv"]:
        eid, kind, name, county_id, grade_span, funding_type = row
        if eid in seen_ids:
            errors.append(IngestError("entities.csv", line, "id", DUPLICATE_KEY,
                                      f"entity id {eid!r} already defined"))
            continue
        seen_ids[eid] = line
        if kind == "county":
            store.counties[eid] = Entity(eid, EntityKind.COUNTY, name)
        elif kind == "cmo":
            store.cmos[eid] = Entity(eid, EntityKind.CMO, name)
        elif kind == "state":
            store.state = Entity(eid, EntityKind.STATE, name)
        else:
            district_rows.append((line, eid, name, county_id, grade_span, funding_type))

    for line, eid, name, county_id, grade_span, funding_type in district_rows:
        problems = False
        if county_id not in store.counties:
            errors.append(IngestError("entities.csv", line, "county_id",
                                      DANGLING_REFERENCE,
                                      f"district {eid} references unknown county {county_id!r}"))
            problems = True
        try:
            span = GradeSpan(grade_span)
        except ValueError:
            errors.append(IngestError("entities.csv", line, "grade_span", BAD_ENUM,
                                      f"unknown grade span {grade_span!r}"))
            problems = True
        try:
            funding = FundingType(funding_type)
        except ValueError:
            errors.append(IngestError("entities.csv", line, "funding_type", BAD_ENUM,
                                      f"unknown funding type {funding_type!r}"))
            problems = True
        if not problems:
            store.districts[eid] = District(eid, name, county_id, span, funding)

    for line, row in parsed["schools.csv"]:
        sid, name, authorizer, governance, cmo_id = row
        if sid in seen_ids:
            errors.append(IngestError("schools.csv", line, "id", DUPLICATE_KEY,
                                      f"entity id {sid!r} already defined"))
            continue
        seen_ids[sid] = line
        gov = Governance(governance)
        problems = False
        if authorizer not in store.districts:
            errors.append(IngestError("schools.csv", line, "authorizer_district_id",
                                      DANGLING_REFERENCE,
                                      f"school {sid} references unknown district {authorizer!r}"))
            problems = True
        if cmo_id is not None:
            if not gov.is_charter:
                errors.append(IngestError("schools.csv", line, "cmo_id", BAD_ENUM,
                                          f"school {sid} is {governance} but names a CMO"))
                problems = True
            elif cmo_id not in store.cmos:
                errors.append(IngestError("schools.csv", line, "cmo_id",
                                          DANGLING_REFERENCE,
                                          f"school {sid} references unknown CMO {cmo_id!r}"))
                problems = True
        if not problems:
            store.schools[sid] = School(sid, name, authorizer, gov, cmo_id)
            store.resolved_parent[sid] = authorizer


def _load_observations(store: Store, parsed, errors: list[IngestError]) -> None:
    ALL = Subgroup.ALL.value
    years: set[int] = set()

    # (table, metric columns, key layout) -> observation cells
    def emit(fname: str, line: int, entity_id: str, year: int, subgroup: str,
             pairs: list[tuple[str, float]], seen: set) -> None:
        if not store.entity_exists(entity_id):
            errors.append(IngestError(fname, line, "entity_id", DANGLING_REFERENCE,
                                      f"observation references unknown entity {entity_id!r}"))
            return
        key = (entity_id, year, subgroup)
        if key in seen:
            errors.append(IngestError(
                fname, line, "entity_id", DUPLICATE_KEY,
                f"duplicate observation for {entity_id}|{year}|{subgroup}; first kept"))
            return
        seen.add(key)
        years.add(year)
        for metric_id, value in pairs:
            store.set_cell(entity_id, metric_id, year, subgroup,
                           float(value), REPORTED, fname)

    seen: set = set()
    for line, row in parsed["enrollment.csv"]:
        eid, year, sg, students = row
        emit("enrollment.csv", line, eid, year, sg, [("enrollment", students)], seen)

    seen = set()
    for line, row in parsed["finance.csv"]:
        eid, year, rev, exp = row
        emit("finance.csv", line, eid, year, ALL,
             [("revenue_total", rev), ("expenditure_total", exp)], seen)

    seen = set()
    for line, row in parsed["staffing.csv"]:
        eid, year, teacher, admin = row
        emit("staffing.csv", line, eid, year, ALL,
             [("teacher_fte", teacher), ("admin_fte", admin)], seen)

    seen = set()
    for line, row in parsed["discipline.csv"]:
        eid, year, sg, susp, exp = row
        emit("discipline.csv", line, eid, year, sg,
             [("suspensions", susp), ("expulsions", exp)], seen)

    seen = set()
    for line, row in parsed["courses.csv"]:
        eid, year, ap, total = row
        emit("courses.csv", line, eid, year, ALL,
             [("ap_course_count", ap), ("total_course_count", total)], seen)

    seen = set()
    for line, row in parsed["assessments.csv"]:
        eid, year, sg, metric_id, score = row
        if not store.entity_exists(eid):
            errors.append(IngestError("assessments.csv", line, "entity_id",
                                      DANGLING_REFERENCE,
                                      f"observation references unknown entity {eid!r}"))
            continue
        key = (eid, year, sg, metric_id)
        if key in seen:
            errors.append(IngestError(
                "assessments.csv", line, "metric_id", DUPLICATE_KEY,
                f"duplicate observation for {eid}|{metric_id}|{year}|{sg}; first kept"))
            continue
        seen.add(key)
        years.add(year)
        store.set_cell(eid, metric_id, year, sg, float(score), REPORTED,
                       "assessments.csv")

    seen = set()
    for line, row in parsed["graduation.csv"]:
        eid, year, sg, grad, drop = row
        emit("graduation.csv", line, eid, year, sg,
             [("grad_rate", grad), ("dropout_rate", drop)], seen)

    seen = set()
    for line, row in parsed["demography.csv"]:
        eid, year, pct_el, pct_frpm, parent_ed = row
        emit("demography.csv", line, eid, year, ALL,
             [("pct_el", pct_el), ("pct_frpm", pct_frpm),
              ("parent_ed_index", parent_ed)], seen)

    if years:
        store.years = list(range(min(years), max(years) + 1))
