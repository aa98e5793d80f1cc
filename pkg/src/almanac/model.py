"""Domain types, the metric catalog, and store-level validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterator, Optional, Union

from .errors import ConfigError

# Cell statuses (kept as plain strings for compact storage and JSON).
REPORTED = "reported"
SUPPRESSED = "suppressed_outlier"
CORRECTED = "corrected"
MISSING = "missing"
STATUSES = (REPORTED, SUPPRESSED, CORRECTED, MISSING)

# Statuses whose values feed downstream analytics.
USABLE_STATUSES = (REPORTED, CORRECTED)


class EntityKind(str, Enum):
    DISTRICT = "district"
    SCHOOL = "school"
    CMO = "cmo"
    COUNTY = "county"
    STATE = "state"


class GradeSpan(str, Enum):
    ELEM_K6 = "elem_k6"
    ELEM_K8 = "elem_k8"
    HIGH_9_12 = "high_9_12"
    UNIFIED_K12 = "unified_k12"


class FundingType(str, Enum):
    STATE_FORMULA = "state_formula"
    BASIC_AID = "basic_aid"


class Governance(str, Enum):
    DISTRICT_OPERATED = "district_operated"
    CHARTER_DISTRICT_FUNDED = "charter_district_funded"
    CHARTER_DIRECT_FUNDED = "charter_direct_funded"

    @property
    def is_charter(self) -> bool:
        return self is not Governance.DISTRICT_OPERATED


class Subgroup(str, Enum):
    ALL = "all"
    ENGLISH_LEARNER = "english_learner"
    FRPM = "frpm"
    HISPANIC = "hispanic"
    WHITE = "white"
    AFRICAN_AMERICAN = "african_american"
    ASIAN = "asian"


SUBGROUPS = tuple(s.value for s in Subgroup)


class MetricCategory(str, Enum):
    FINANCE = "finance"
    STAFFING = "staffing"
    DISCIPLINE = "discipline"
    STUDENT_DEMOGRAPHY = "student_demography"
    COURSE_OFFERINGS = "course_offerings"
    ASSESSMENTS = "assessments"
    GRADUATION_DROPOUT = "graduation_dropout"


class Unit(str, Enum):
    COUNT = "count"
    PERCENT = "percent"
    CURRENCY_PER_STUDENT = "currency_per_student"
    CURRENCY = "currency"
    RATIO = "ratio"
    SCORE = "score"


class Polarity(str, Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"
    NEUTRAL = "neutral"


class Aggregation(str, Enum):
    """How a district-level value relates to its schools' rows."""

    SUM = "sum"                      # additive over school rows
    WEIGHTED_MEAN = "weighted_mean"  # enrollment-weighted mean over school rows
    DISTRICT_LEVEL = "district_level"  # reported at district level only
    DERIVED = "derived"              # computed from other metrics, never stored


@dataclass(frozen=True)
class MetricDef:
    id: str
    display_name: str
    category: MetricCategory
    unit: Unit
    polarity: Polarity
    subgrouped: bool
    aggregation: Aggregation

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "category": self.category.value,
            "unit": self.unit.value,
            "polarity": self.polarity.value,
            "subgrouped": self.subgrouped,
            "aggregation": self.aggregation.value,
        }


def _m(mid, name, cat, unit, pol, sub, agg) -> MetricDef:
    return MetricDef(mid, name, cat, unit, pol, sub, agg)


_C = MetricCategory
_U = Unit
_P = Polarity
_A = Aggregation

# Catalog version 1: 56 metrics, 8 per category. Raw metrics carry the
# aggregation rule used when district aggregates are rebuilt from school rows;
# derived metrics are computed on demand and never stored.
_CATALOG: tuple[MetricDef, ...] = (
    # finance
    _m("revenue_total", "Total revenue", _C.FINANCE, _U.CURRENCY, _P.NEUTRAL, False, _A.DISTRICT_LEVEL),
    _m("expenditure_total", "Total expenditure", _C.FINANCE, _U.CURRENCY, _P.NEUTRAL, False, _A.DISTRICT_LEVEL),
    _m("surplus_total", "Operating surplus", _C.FINANCE, _U.CURRENCY, _P.NEUTRAL, False, _A.DERIVED),
    _m("per_pupil_revenue_naive", "Revenue per student (as reported)", _C.FINANCE, _U.CURRENCY_PER_STUDENT, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("per_pupil_revenue_corrected", "Revenue per student (charter-corrected)", _C.FINANCE, _U.CURRENCY_PER_STUDENT, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("per_pupil_expenditure", "Expenditure per student", _C.FINANCE, _U.CURRENCY_PER_STUDENT, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("expenditure_to_revenue_ratio", "Expenditure to revenue ratio", _C.FINANCE, _U.RATIO, _P.NEUTRAL, False, _A.DERIVED),
    _m("revenue_per_teacher", "Revenue per teacher FTE", _C.FINANCE, _U.CURRENCY, _P.NEUTRAL, False, _A.DERIVED),
    # staffing
    _m("teacher_fte", "Teacher FTE", _C.STAFFING, _U.COUNT, _P.NEUTRAL, False, _A.SUM),
    _m("admin_fte", "Administrator FTE", _C.STAFFING, _U.COUNT, _P.NEUTRAL, False, _A.SUM),
    _m("staff_total_fte", "Certificated staff FTE", _C.STAFFING, _U.COUNT, _P.NEUTRAL, False, _A.DERIVED),
    _m("teacher_fte_per_100", "Teachers per 100 students", _C.STAFFING, _U.RATIO, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("admin_fte_per_100", "Administrators per 100 students", _C.STAFFING, _U.RATIO, _P.NEUTRAL, False, _A.DERIVED),
    _m("pupil_teacher_ratio", "Students per teacher", _C.STAFFING, _U.RATIO, _P.LOWER_BETTER, False, _A.DERIVED),
    _m("admin_to_teacher_ratio", "Administrators per teacher", _C.STAFFING, _U.RATIO, _P.NEUTRAL, False, _A.DERIVED),
    _m("pct_admin_staff", "Administrators as share of staff", _C.STAFFING, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    # discipline
    _m("suspensions", "Suspensions", _C.DISCIPLINE, _U.COUNT, _P.LOWER_BETTER, True, _A.SUM),
    _m("expulsions", "Expulsions", _C.DISCIPLINE, _U.COUNT, _P.LOWER_BETTER, True, _A.SUM),
    _m("suspension_rate", "Suspensions per 100 students", _C.DISCIPLINE, _U.RATIO, _P.LOWER_BETTER, True, _A.DERIVED),
    _m("expulsion_rate", "Expulsions per 100 students", _C.DISCIPLINE, _U.RATIO, _P.LOWER_BETTER, True, _A.DERIVED),
    _m("incidents_total", "Discipline incidents", _C.DISCIPLINE, _U.COUNT, _P.LOWER_BETTER, True, _A.DERIVED),
    _m("incident_rate", "Discipline incidents per 100 students", _C.DISCIPLINE, _U.RATIO, _P.LOWER_BETTER, True, _A.DERIVED),
    _m("expulsion_share", "Expulsions as share of incidents", _C.DISCIPLINE, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    _m("suspension_frpm_share", "FRPM share of suspensions", _C.DISCIPLINE, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    # student demography
    _m("enrollment", "Enrollment", _C.STUDENT_DEMOGRAPHY, _U.COUNT, _P.NEUTRAL, True, _A.SUM),
    _m("pct_el", "English learners (%)", _C.STUDENT_DEMOGRAPHY, _U.PERCENT, _P.NEUTRAL, False, _A.DISTRICT_LEVEL),
    _m("pct_frpm", "FRPM-eligible (%)", _C.STUDENT_DEMOGRAPHY, _U.PERCENT, _P.NEUTRAL, False, _A.DISTRICT_LEVEL),
    _m("parent_ed_index", "Parent education index", _C.STUDENT_DEMOGRAPHY, _U.SCORE, _P.NEUTRAL, False, _A.DISTRICT_LEVEL),
    _m("pct_hispanic", "Hispanic or Latino (%)", _C.STUDENT_DEMOGRAPHY, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    _m("pct_white", "White (%)", _C.STUDENT_DEMOGRAPHY, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    _m("pct_african_american", "African American (%)", _C.STUDENT_DEMOGRAPHY, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    _m("pct_asian", "Asian (%)", _C.STUDENT_DEMOGRAPHY, _U.PERCENT, _P.NEUTRAL, False, _A.DERIVED),
    # course offerings
    _m("ap_course_count", "AP courses offered", _C.COURSE_OFFERINGS, _U.COUNT, _P.NEUTRAL, False, _A.SUM),
    _m("total_course_count", "Courses offered", _C.COURSE_OFFERINGS, _U.COUNT, _P.NEUTRAL, False, _A.SUM),
    _m("non_ap_course_count", "Non-AP courses offered", _C.COURSE_OFFERINGS, _U.COUNT, _P.NEUTRAL, False, _A.DERIVED),
    _m("pct_ap_courses", "AP share of courses", _C.COURSE_OFFERINGS, _U.PERCENT, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("ap_to_nonap_ratio", "AP to non-AP course ratio", _C.COURSE_OFFERINGS, _U.RATIO, _P.NEUTRAL, False, _A.DERIVED),
    _m("courses_per_100_students", "Courses per 100 students", _C.COURSE_OFFERINGS, _U.RATIO, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("ap_courses_per_1000_students", "AP courses per 1000 students", _C.COURSE_OFFERINGS, _U.RATIO, _P.HIGHER_BETTER, False, _A.DERIVED),
    _m("students_per_course", "Students per course", _C.COURSE_OFFERINGS, _U.RATIO, _P.LOWER_BETTER, False, _A.DERIVED),
    # assessments
    _m("math_score_g6", "Math scale score, grade 6", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("math_score_g7", "Math scale score, grade 7", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("math_score_g8", "Math scale score, grade 8", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("ela_score_g6", "ELA scale score, grade 6", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("ela_score_g7", "ELA scale score, grade 7", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("ela_score_g8", "ELA scale score, grade 8", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("math_score_avg_6_8", "Math scale score, grades 6-8", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.DERIVED),
    _m("ela_score_avg_6_8", "ELA scale score, grades 6-8", _C.ASSESSMENTS, _U.SCORE, _P.HIGHER_BETTER, True, _A.DERIVED),
    # graduation & dropout
    _m("grad_rate", "Graduation rate", _C.GRADUATION_DROPOUT, _U.PERCENT, _P.HIGHER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("dropout_rate", "Dropout rate", _C.GRADUATION_DROPOUT, _U.PERCENT, _P.LOWER_BETTER, True, _A.WEIGHTED_MEAN),
    _m("persistence_rate", "Persistence rate", _C.GRADUATION_DROPOUT, _U.PERCENT, _P.HIGHER_BETTER, True, _A.DERIVED),
    _m("grad_dropout_gap", "Graduation minus dropout rate", _C.GRADUATION_DROPOUT, _U.RATIO, _P.NEUTRAL, True, _A.DERIVED),
    _m("el_grad_gap", "Graduation gap, EL vs all", _C.GRADUATION_DROPOUT, _U.RATIO, _P.LOWER_BETTER, False, _A.DERIVED),
    _m("frpm_grad_gap", "Graduation gap, FRPM vs all", _C.GRADUATION_DROPOUT, _U.RATIO, _P.LOWER_BETTER, False, _A.DERIVED),
    _m("other_exit_rate", "Other exit rate", _C.GRADUATION_DROPOUT, _U.PERCENT, _P.NEUTRAL, True, _A.DERIVED),
    _m("grad_to_dropout_ratio", "Graduation to dropout ratio", _C.GRADUATION_DROPOUT, _U.RATIO, _P.HIGHER_BETTER, True, _A.DERIVED),
)

_CATALOG_BY_ID = {m.id: m for m in _CATALOG}
assert len(_CATALOG_BY_ID) == len(_CATALOG), "metric ids must be unique"


def metric_catalog() -> tuple[MetricDef, ...]:
    """Return the fixed catalog (version 1): 56 metrics, 8 per category."""
    return _CATALOG


def metric_def(metric_id: str) -> Optional[MetricDef]:
    return _CATALOG_BY_ID.get(metric_id)


def stored_metric_ids() -> tuple[str, ...]:
    """Metric ids that appear as raw observations in a store."""
    return tuple(m.id for m in _CATALOG if m.aggregation is not Aggregation.DERIVED)


@dataclass(frozen=True)
class District:
    id: str
    name: str
    county_id: str
    grade_span: GradeSpan
    funding_type: FundingType


@dataclass(frozen=True)
class School:
    id: str
    name: str
    authorizer_district_id: str
    governance: Governance
    cmo_id: Optional[str] = None


@dataclass(frozen=True)
class Entity:
    """County, CMO, or state entity."""

    id: str
    kind: EntityKind
    name: str


@dataclass(frozen=True)
class Observation:
    """One (entity, metric, year, subgroup) value; the atom of the store."""

    entity_id: str
    metric_id: str
    year: int
    subgroup: str
    value: float
    status: str
    provenance: str

    @property
    def key(self) -> str:
        return f"{self.entity_id}|{self.metric_id}|{self.year}|{self.subgroup}"


def parse_obs_key(key: str) -> tuple[str, str, int, str]:
    entity_id, metric_id, year, subgroup = key.split("|")
    return entity_id, metric_id, int(year), subgroup


@dataclass
class AlmanacConfig:
    """Tunable knobs shared across pipeline stages."""

    k_peers: int = 15
    outlier_threshold: float = 3.5        # two-rule AND gate
    single_rule_threshold: float = 5.0    # when only one series qualifies
    feature_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    match_year: Union[int, str] = "latest"
    min_longitudinal_points: int = 5
    min_cross_sectional_entities: int = 8

    def __post_init__(self):
        if self.k_peers < 1:
            raise ConfigError("k_peers", "must be >= 1")
        if not (self.outlier_threshold > 0):
            raise ConfigError("outlier_threshold", "must be > 0")
        if self.single_rule_threshold < self.outlier_threshold:
            raise ConfigError("single_rule_threshold", "must be >= outlier_threshold")
        weights = tuple(float(w) for w in self.feature_weights)
        if len(weights) != 4:
            raise ConfigError("feature_weights", "exactly 4 weights required")
        if any(w < 0 for w in weights):
            raise ConfigError("feature_weights", "weights must be >= 0")
        if not any(w > 0 for w in weights):
            raise ConfigError("feature_weights", "weights must not all be zero")
        self.feature_weights = weights
        if self.match_year != "latest" and not isinstance(self.match_year, int):
            raise ConfigError("match_year", "must be an integer year or 'latest'")
        if self.min_longitudinal_points < 2:
            raise ConfigError("min_longitudinal_points", "must be >= 2")
        if self.min_cross_sectional_entities < 2:
            raise ConfigError("min_cross_sectional_entities", "must be >= 2")

    def to_dict(self) -> dict[str, Any]:
        return {
            "k_peers": self.k_peers,
            "outlier_threshold": self.outlier_threshold,
            "single_rule_threshold": self.single_rule_threshold,
            "feature_weights": list(self.feature_weights),
            "match_year": self.match_year,
            "min_longitudinal_points": self.min_longitudinal_points,
            "min_cross_sectional_entities": self.min_cross_sectional_entities,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AlmanacConfig":
        known = {f: data[f] for f in data}
        allowed = set(cls.__dataclass_fields__)
        unknown = set(known) - allowed
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config field")
        if "feature_weights" in known:
            known["feature_weights"] = tuple(known["feature_weights"])
        return cls(**known)


# A cell is (value, status, provenance); keyed by (entity_id, year) inside
# a per-(metric_id, subgroup) slice. Compact tuples keep ~10^6-cell stores
# within desk-scale memory.
Cell = tuple[float, str, str]
SliceKey = tuple[str, str]
CellKey = tuple[str, int]


class Store:
    """All entities plus observations; a read-only snapshot between stages."""

    def __init__(self, config: Optional[AlmanacConfig] = None):
        self.config = config or AlmanacConfig()
        self.districts: dict[str, District] = {}
        self.schools: dict[str, School] = {}
        self.cmos: dict[str, Entity] = {}
        self.counties: dict[str, Entity] = {}
        self.state: Optional[Entity] = None
        self.years: list[int] = []
        self.stage: str = "empty"
        # (metric, subgroup) -> (entity, year) -> (value, status, provenance)
        self.cells: dict[SliceKey, dict[CellKey, Cell]] = {}
        # school -> effective parent entity (authorizer until reassociation)
        self.resolved_parent: dict[str, str] = {}
        self._caches: dict[str, Any] = {}

    # -- entity helpers --------------------------------------------------

    def entity_exists(self, entity_id: str) -> bool:
        return (
            entity_id in self.districts
            or entity_id in self.schools
            or entity_id in self.cmos
            or entity_id in self.counties
            or (self.state is not None and entity_id == self.state.id)
        )

    def entity_kind(self, entity_id: str) -> Optional[EntityKind]:
        if entity_id in self.districts:
            return EntityKind.DISTRICT
        if entity_id in self.schools:
            return EntityKind.SCHOOL
        if entity_id in self.cmos:
            return EntityKind.CMO
        if entity_id in self.counties:
            return EntityKind.COUNTY
        if self.state is not None and entity_id == self.state.id:
            return EntityKind.STATE
        return None

    def schools_of_district(self, district_id: str) -> list[School]:
        """Schools whose effective parent is the district, id-sorted."""
        cache = self._caches.get("schools_by_parent")
        if cache is None:
            cache = {}
            for school in self.schools.values():
                parent = self.resolved_parent.get(school.id, school.authorizer_district_id)
                cache.setdefault(parent, []).append(school)
            for group in cache.values():
                group.sort(key=lambda s: s.id)
            self._caches["schools_by_parent"] = cache
        return cache.get(district_id, [])

    def invalidate_caches(self) -> None:
        self._caches.clear()

    # -- cell access -----------------------------------------------------

    def slice(self, metric_id: str, subgroup: str) -> dict[CellKey, Cell]:
        return self.cells.setdefault((metric_id, subgroup), {})

    def get_cell(self, entity_id: str, metric_id: str, year: int,
                 subgroup: str = Subgroup.ALL.value) -> Optional[Cell]:
        sl = self.cells.get((metric_id, subgroup))
        if sl is None:
            return None
        return sl.get((entity_id, year))

    def set_cell(self, entity_id: str, metric_id: str, year: int, subgroup: str,
                 value: float, status: str, provenance: str) -> None:
        self.slice(metric_id, subgroup)[(entity_id, year)] = (value, status, provenance)

    def usable_value(self, entity_id: str, metric_id: str, year: int,
                     subgroup: str = Subgroup.ALL.value) -> Optional[float]:
        """Cell value when its status lets it feed analytics, else None."""
        cell = self.get_cell(entity_id, metric_id, year, subgroup)
        if cell is None or cell[1] not in USABLE_STATUSES:
            return None
        return cell[0]

    def observations(self) -> Iterator[Observation]:
        """Iterate all cells as Observation views (key-sorted per slice)."""
        for (metric_id, subgroup) in sorted(self.cells):
            sl = self.cells[(metric_id, subgroup)]
            for (entity_id, year) in sorted(sl):
                value, status, provenance = sl[(entity_id, year)]
                yield Observation(entity_id, metric_id, year, subgroup,
                                  value, status, provenance)

    def observation_count(self) -> int:
        return sum(len(sl) for sl in self.cells.values())


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate_store."""

    code: str
    key: str
    message: str


ValidationReport = list


def validate_store(store: Store) -> list[Violation]:
    """Check type invariants and referential integrity; violations are data."""
    report: list[Violation] = []

    def bad(code: str, key: str, message: str) -> None:
        report.append(Violation(code, key, message))

    if not store.years:
        bad("no_years", "-", "store has no year range")
    else:
        lo, hi = min(store.years), max(store.years)
        if store.years != list(range(lo, hi + 1)):
            bad("years_not_contiguous", "-", f"years {store.years} are not contiguous")

    for district in store.districts.values():
        if district.county_id not in store.counties:
            bad("dangling_county", district.id,
                f"district {district.id} references unknown county {district.county_id}")
    for school in store.schools.values():
        if school.authorizer_district_id not in store.districts:
            bad("dangling_authorizer", school.id,
                f"school {school.id} references unknown district {school.authorizer_district_id}")
        if school.cmo_id is not None:
            if not school.governance.is_charter:
                bad("cmo_on_noncharter", school.id,
                    f"school {school.id} has a CMO but governance {school.governance.value}")
            if school.cmo_id not in store.cmos:
                bad("dangling_cmo", school.id,
                    f"school {school.id} references unknown CMO {school.cmo_id}")

    years = set(store.years)
    for (metric_id, subgroup), sl in sorted(store.cells.items()):
        mdef = metric_def(metric_id)
        if mdef is None:
            bad("unknown_metric", metric_id, f"metric {metric_id} not in catalog")
            continue
        if mdef.aggregation is Aggregation.DERIVED:
            bad("derived_metric_stored", metric_id,
                f"derived metric {metric_id} must not be stored")
            continue
        if not mdef.subgrouped and subgroup != Subgroup.ALL.value:
            bad("unexpected_subgroup", f"{metric_id}|{subgroup}",
                f"metric {metric_id} is not subgrouped but has {subgroup} cells")
        is_percent = mdef.unit is Unit.PERCENT
        for (entity_id, year), (value, status, _prov) in sl.items():
            key = f"{entity_id}|{metric_id}|{year}|{subgroup}"
            if not store.entity_exists(entity_id):
                bad("dangling_entity", key, f"observation references unknown entity {entity_id}")
            if year not in years:
                bad("year_out_of_range", key, f"year {year} outside store range")
            if status not in STATUSES:
                bad("bad_status", key, f"unknown status {status}")
            if status != MISSING:
                if not math.isfinite(value):
                    bad("nonfinite_value", key, "value must be finite unless missing")
                elif is_percent and not (0.0 <= value <= 100.0):
                    bad("percent_range", key, f"percent value {value} outside [0, 100]")
    return report
