"""Derived metrics: the charter-corrected per-pupil ratio, trend series with
comparison overlays, rate-of-change, and correlation statistics.

Raw cells live in the store; everything else is computed on demand through
``metric_value`` so no derived number is ever persisted or screened. Derived
values are rounded to 8 significant digits, which is the precision bundles
and the service publish.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Callable, Optional

from .entities import effective_enrollment, round_sig
from .errors import (
    MissingDataError,
    NotFoundError,
    UndefinedCorrelationError,
    UndefinedRatioError,
)
from .model import (
    USABLE_STATUSES,
    Aggregation,
    AlmanacConfig,
    Governance,
    Store,
    Subgroup,
    metric_def,
)

ALL = Subgroup.ALL.value

METHOD_REPORTED = "reported_charter_revenue"
METHOD_PROPORTIONAL = "proportional_allocation"
METHOD_NO_CHARTERS = "no_charters"


@dataclass(frozen=True)
class PerPupil:
    district_id: str
    year: int
    naive: float
    corrected: float
    method: str


def per_pupil_revenue(store: Store, district_id: str, year: int) -> PerPupil:
    """Naive and charter-corrected revenue per student for one district-year.

    The naive ratio divides the district's reported revenue, which includes
    direct-funded charter flow-through, by the students the district actually
    governs: that overstatement is what gets corrected. Charter revenue is
    subtracted exactly when every direct-funded charter reports it, and
    allocated by enrollment share otherwise.
    """
    if district_id not in store.districts:
        raise NotFoundError(f"unknown district {district_id}")
    revenue = store.usable_value(district_id, "revenue_total", year)
    if revenue is None:
        raise MissingDataError(f"no usable revenue for {district_id} in {year}")
    e_district = effective_enrollment(store, district_id, year)
    if e_district <= 0:
        raise UndefinedRatioError(
            f"district {district_id} has no governed enrollment in {year}")

    by_district = store._caches.get("direct_charters")
    if by_district is None:
        by_district = {}
        for school in store.schools.values():
            if school.governance is Governance.CHARTER_DIRECT_FUNDED:
                by_district.setdefault(school.authorizer_district_id,
                                       []).append(school)
        for group in by_district.values():
            group.sort(key=lambda s: s.id)
        store._caches["direct_charters"] = by_district
    charters = by_district.get(district_id, [])
    naive = revenue / e_district
    if not charters:
        return PerPupil(district_id, year, naive, naive, METHOD_NO_CHARTERS)

    enroll = store.cells.get(("enrollment", ALL), {})
    finance = store.cells.get(("revenue_total", ALL), {})
    reported_sum = 0.0
    unreported_enrollment = 0.0
    charter_enrollment = 0.0
    all_report = True
    for school in charters:
        e_cell = enroll.get((school.id, year))
        e_school = e_cell[0] if e_cell is not None else 0.0
        charter_enrollment += e_school
        r_cell = finance.get((school.id, year))
        if r_cell is not None:
            reported_sum += r_cell[0]
        else:
            all_report = False
            unreported_enrollment += e_school

    if all_report:
        charter_revenue = reported_sum
        method = METHOD_REPORTED
    else:
        served = e_district + charter_enrollment
        allocated = revenue * unreported_enrollment / served if served > 0 else 0.0
        charter_revenue = reported_sum + allocated
        method = METHOD_PROPORTIONAL
    if charter_revenue == 0:
        # zero charter share: corrected equals naive but the method records
        # that charters were considered
        return PerPupil(district_id, year, naive, naive, method)
    corrected = (revenue - charter_revenue) / e_district
    return PerPupil(district_id, year, naive, corrected, method)


# ---------------------------------------------------------------------------
# derived metric formulas


def _ratio(num: Optional[float], den: Optional[float],
           scale: float = 1.0) -> Optional[float]:
    if num is None or den is None or den == 0:
        return None
    return num / den * scale


def _diff(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None or b is None:
        return None
    return a - b


Formula = Callable[[Store, str, int, str], Optional[float]]


def _v(store: Store, eid: str, metric: str, year: int, sg: str) -> Optional[float]:
    return store.usable_value(eid, metric, year, sg)


def _per_pupil(store: Store, eid: str, year: int, which: str) -> Optional[float]:
    if eid not in store.districts:
        return None
    try:
        result = per_pupil_revenue(store, eid, year)
    except (MissingDataError, UndefinedRatioError, NotFoundError):
        return None
    return result.naive if which == "naive" else result.corrected


def _score_avg(store: Store, eid: str, year: int, sg: str,
               prefix: str) -> Optional[float]:
    values = [_v(store, eid, f"{prefix}_score_g{g}", year, sg) for g in (6, 7, 8)]
    present = [v for v in values if v is not None]
    return statistics.fmean(present) if present else None


_FORMULAS: dict[str, Formula] = {
    "surplus_total": lambda s, e, y, g: _diff(
        _v(s, e, "revenue_total", y, ALL), _v(s, e, "expenditure_total", y, ALL)),
    "per_pupil_revenue_naive": lambda s, e, y, g: _per_pupil(s, e, y, "naive"),
    "per_pupil_revenue_corrected": lambda s, e, y, g: _per_pupil(s, e, y, "corrected"),
    "per_pupil_expenditure": lambda s, e, y, g: _ratio(
        _v(s, e, "expenditure_total", y, ALL), _effective(s, e, y)),
    "expenditure_to_revenue_ratio": lambda s, e, y, g: _ratio(
        _v(s, e, "expenditure_total", y, ALL), _v(s, e, "revenue_total", y, ALL)),
    "revenue_per_teacher": lambda s, e, y, g: _ratio(
        _v(s, e, "revenue_total", y, ALL), _v(s, e, "teacher_fte", y, ALL)),
    "staff_total_fte": lambda s, e, y, g: _sum2(
        _v(s, e, "teacher_fte", y, ALL), _v(s, e, "admin_fte", y, ALL)),
    "teacher_fte_per_100": lambda s, e, y, g: _ratio(
        _v(s, e, "teacher_fte", y, ALL), _v(s, e, "enrollment", y, ALL), 100),
    "admin_fte_per_100": lambda s, e, y, g: _ratio(
        _v(s, e, "admin_fte", y, ALL), _v(s, e, "enrollment", y, ALL), 100),
    "pupil_teacher_ratio": lambda s, e, y, g: _ratio(
        _v(s, e, "enrollment", y, ALL), _v(s, e, "teacher_fte", y, ALL)),
    "admin_to_teacher_ratio": lambda s, e, y, g: _ratio(
        _v(s, e, "admin_fte", y, ALL), _v(s, e, "teacher_fte", y, ALL)),
    "pct_admin_staff": lambda s, e, y, g: _ratio(
        _v(s, e, "admin_fte", y, ALL),
        _sum2(_v(s, e, "teacher_fte", y, ALL), _v(s, e, "admin_fte", y, ALL)), 100),
    "suspension_rate": lambda s, e, y, g: _ratio(
        _v(s, e, "suspensions", y, g), _v(s, e, "enrollment", y, g), 100),
    "expulsion_rate": lambda s, e, y, g: _ratio(
        _v(s, e, "expulsions", y, g), _v(s, e, "enrollment", y, g), 100),
    "incidents_total": lambda s, e, y, g: _sum2(
        _v(s, e, "suspensions", y, g), _v(s, e, "expulsions", y, g)),
    "incident_rate": lambda s, e, y, g: _ratio(
        _sum2(_v(s, e, "suspensions", y, g), _v(s, e, "expulsions", y, g)),
        _v(s, e, "enrollment", y, g), 100),
    "expulsion_share": lambda s, e, y, g: _ratio(
        _v(s, e, "expulsions", y, ALL),
        _sum2(_v(s, e, "suspensions", y, ALL), _v(s, e, "expulsions", y, ALL)), 100),
    "suspension_frpm_share": lambda s, e, y, g: _ratio(
        _v(s, e, "suspensions", y, Subgroup.FRPM.value),
        _v(s, e, "suspensions", y, ALL), 100),
    "pct_hispanic": lambda s, e, y, g: _pct_subgroup(s, e, y, "hispanic"),
    "pct_white": lambda s, e, y, g: _pct_subgroup(s, e, y, "white"),
    "pct_african_american": lambda s, e, y, g: _pct_subgroup(s, e, y, "african_american"),
    "pct_asian": lambda s, e, y, g: _pct_subgroup(s, e, y, "asian"),
    "non_ap_course_count": lambda s, e, y, g: _diff(
        _v(s, e, "total_course_count", y, ALL), _v(s, e, "ap_course_count", y, ALL)),
    "pct_ap_courses": lambda s, e, y, g: _ratio(
        _v(s, e, "ap_course_count", y, ALL), _v(s, e, "total_course_count", y, ALL), 100),
    "ap_to_nonap_ratio": lambda s, e, y, g: _ratio(
        _v(s, e, "ap_course_count", y, ALL),
        _diff(_v(s, e, "total_course_count", y, ALL),
              _v(s, e, "ap_course_count", y, ALL))),
    "courses_per_100_students": lambda s, e, y, g: _ratio(
        _v(s, e, "total_course_count", y, ALL), _v(s, e, "enrollment", y, ALL), 100),
    "ap_courses_per_1000_students": lambda s, e, y, g: _ratio(
        _v(s, e, "ap_course_count", y, ALL), _v(s, e, "enrollment", y, ALL), 1000),
    "students_per_course": lambda s, e, y, g: _ratio(
        _v(s, e, "enrollment", y, ALL), _v(s, e, "total_course_count", y, ALL)),
    "math_score_avg_6_8": lambda s, e, y, g: _score_avg(s, e, y, g, "math"),
    "ela_score_avg_6_8": lambda s, e, y, g: _score_avg(s, e, y, g, "ela"),
    "persistence_rate": lambda s, e, y, g: _diff(100.0, _v(s, e, "dropout_rate", y, g)),
    "grad_dropout_gap": lambda s, e, y, g: _diff(
        _v(s, e, "grad_rate", y, g), _v(s, e, "dropout_rate", y, g)),
    "el_grad_gap": lambda s, e, y, g: _diff(
        _v(s, e, "grad_rate", y, ALL),
        _v(s, e, "grad_rate", y, Subgroup.ENGLISH_LEARNER.value)),
    "frpm_grad_gap": lambda s, e, y, g: _diff(
        _v(s, e, "grad_rate", y, ALL), _v(s, e, "grad_rate", y, Subgroup.FRPM.value)),
    "other_exit_rate": lambda s, e, y, g: _diff(
        _diff(100.0, _v(s, e, "grad_rate", y, g)), _v(s, e, "dropout_rate", y, g)),
    "grad_to_dropout_ratio": lambda s, e, y, g: _ratio(
        _v(s, e, "grad_rate", y, g), _v(s, e, "dropout_rate", y, g)),
}


def _sum2(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None or b is None:
        return None
    return a + b


def _pct_subgroup(store: Store, eid: str, year: int, sg: str) -> Optional[float]:
    return _ratio(_v(store, eid, "enrollment", year, sg),
                  _v(store, eid, "enrollment", year, ALL), 100)


def _effective(store: Store, eid: str, year: int) -> Optional[float]:
    if eid not in store.districts:
        return None
    e = effective_enrollment(store, eid, year)
    return float(e) if e > 0 else None


def metric_value(store: Store, entity_id: str, metric_id: str, year: int,
                 subgroup: str = ALL) -> Optional[float]:
    """Published value of any catalog metric; None when not computable."""
    mdef = metric_def(metric_id)
    if mdef is None:
        raise NotFoundError(f"unknown metric {metric_id}")
    if mdef.aggregation is not Aggregation.DERIVED:
        return store.usable_value(entity_id, metric_id, year, subgroup)
    if not mdef.subgrouped and subgroup != ALL:
        return None
    value = _FORMULAS[metric_id](store, entity_id, year, subgroup)
    return None if value is None else round_sig(value)


def value_map(store: Store, metric_id: str, subgroup: str = ALL) -> dict:
    """District (id, year) -> value cache for one metric/subgroup pane."""
    cache = store._caches.setdefault("value_maps", {})
    key = (metric_id, subgroup)
    vm = cache.get(key)
    if vm is None:
        vm = {}
        for district_id in store.districts:
            for year in store.years:
                value = metric_value(store, district_id, metric_id, year, subgroup)
                if value is not None:
                    vm[(district_id, year)] = value
        cache[key] = vm
    return vm


# ---------------------------------------------------------------------------
# series, trends, rate of change


@dataclass(frozen=True)
class Series:
    entity_id: str
    metric_id: str
    subgroup: str
    points: tuple[tuple[int, float], ...]  # year-ascending, finite values


@dataclass(frozen=True)
class TrendPanel:
    series: Series
    peer_median: tuple[tuple[int, float], ...]
    county_mean: tuple[tuple[int, float], ...]
    state_mean: tuple[tuple[int, float], ...]


def series_for(store: Store, entity_id: str, metric_id: str,
               subgroup: str = ALL) -> Series:
    points = []
    for year in store.years:
        value = metric_value(store, entity_id, metric_id, year, subgroup)
        if value is not None:
            points.append((year, value))
    return Series(entity_id, metric_id, subgroup, tuple(points))


def _overlays(store: Store, metric_id: str, subgroup: str) -> dict:
    """Enrollment-weighted county and state means per year, cached."""
    cache = store._caches.setdefault("overlays", {})
    key = (metric_id, subgroup)
    result = cache.get(key)
    if result is not None:
        return result
    vm = value_map(store, metric_id, subgroup)
    weights = store.cells.get(("enrollment", ALL), {})
    county_acc: dict[str, dict[int, list[float]]] = {}
    state_acc: dict[int, list[float]] = {}
    for district_id, district in store.districts.items():
        for year in store.years:
            value = vm.get((district_id, year))
            if value is None:
                continue
            wcell = weights.get((district_id, year))
            if wcell is None or wcell[1] not in USABLE_STATUSES or wcell[0] <= 0:
                continue
            w = wcell[0]
            slot = state_acc.setdefault(year, [0.0, 0.0])
            slot[0] += value * w
            slot[1] += w
            cslot = county_acc.setdefault(district.county_id, {}).setdefault(
                year, [0.0, 0.0])
            cslot[0] += value * w
            cslot[1] += w
    result = {
        "state": {y: round_sig(num / den) for y, (num, den) in state_acc.items() if den > 0},
        "county": {cid: {y: round_sig(num / den)
                         for y, (num, den) in acc.items() if den > 0}
                   for cid, acc in county_acc.items()},
    }
    cache[key] = result
    return result


def trend_series(store: Store, entity_id: str, metric_id: str,
                 subgroup: str = ALL,
                 cfg: Optional[AlmanacConfig] = None) -> TrendPanel:
    """Client series plus peer-median, county-mean, and state-mean overlays."""
    from .peers import peer_set  # local import: peers depends on metrics

    if metric_def(metric_id) is None:
        raise NotFoundError(f"unknown metric {metric_id}")
    if entity_id not in store.districts:
        raise NotFoundError(f"unknown district {entity_id}")
    client = series_for(store, entity_id, metric_id, subgroup)

    vm = value_map(store, metric_id, subgroup)
    members = peer_set(store, entity_id, cfg or store.config).members
    peer_median = []
    for year in store.years:
        values = [vm[(m_id, year)] for m_id, _d in members if (m_id, year) in vm]
        if values:
            peer_median.append((year, round_sig(statistics.median(values))))

    overlays = _overlays(store, metric_id, subgroup)
    county_id = store.districts[entity_id].county_id
    county = tuple(sorted(overlays["county"].get(county_id, {}).items()))
    state = tuple(sorted(overlays["state"].items()))
    return TrendPanel(client, tuple(peer_median), county, state)


@dataclass(frozen=True)
class RateOfChange:
    slope: Optional[float]
    pct_change: Optional[float]
    insufficient: bool


def rate_of_change(series: Series) -> RateOfChange:
    """OLS slope per year plus endpoint percent change; flagged below 3 points."""
    points = series.points
    if len(points) < 3:
        return RateOfChange(None, None, True)
    xs = [float(y) for y, _v in points]
    ys = [v for _y, v in points]
    slope, _intercept = ols_fit(xs, ys)
    first, last = ys[0], ys[-1]
    pct = (last - first) / abs(first) if first != 0 else None
    return RateOfChange(slope, pct, False)


def ols_fit(xs: list[float], ys: list[float]) -> tuple[float, float]:
    """Least-squares line (slope, intercept); xs must not be constant."""
    n = len(xs)
    if n < 2:
        raise ValueError("ols_fit requires at least 2 points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    if sxx == 0:
        raise UndefinedCorrelationError("x values are constant; no unique fit")
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x


def pearson_r(xs: list[float], ys: list[float]) -> float:
    """Sample Pearson correlation, clamped into [-1, 1]."""
    if len(xs) != len(ys):
        raise ValueError("pearson_r requires equal-length inputs")
    n = len(xs)
    if n < 3:
        raise ValueError("pearson_r requires at least 3 points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    syy = math.fsum((y - mean_y) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    # sqrt before multiplying: the raw product sxx*syy can underflow to zero
    # for tiny-magnitude inputs even though both factors are positive
    return max(-1.0, min(1.0, sxy / (math.sqrt(sxx) * math.sqrt(syy))))
