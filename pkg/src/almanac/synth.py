"""Deterministic synthetic raw corpora mimicking state data shape and defects.

The generator builds a latent "world" (counties, districts, schools, CMOs),
simulates ten-ish years of per-school values, aggregates districts as exact
sums / enrollment-weighted means over their schools, then injects transient
spikes sized to be detectable by the outlier screen. A ground-truth sidecar
records every injected defect, the charter ownership graph, and exact
revenue splits so oracle tests can verify the pipeline end to end. Output is
a pure function of SynthConfig. Statistical realism beyond what those
oracles need is a non-goal.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError, CorpusIOError
from .model import GradeSpan, Subgroup
from .quality import _exceeds, robust_scale

END_YEAR = 2017

GROUND_TRUTH_FILE = "ground_truth.json"

TABLE_FILES = (
    "entities.csv", "schools.csv", "enrollment.csv", "finance.csv",
    "staffing.csv", "discipline.csv", "courses.csv", "assessments.csv",
    "graduation.csv", "demography.csv",
)

ALL = Subgroup.ALL.value
EL = Subgroup.ENGLISH_LEARNER.value
FRPM = Subgroup.FRPM.value

ENROLL_SGS = tuple(s.value for s in Subgroup)
DISC_SGS = (ALL, FRPM)
ASSESS_SGS = (ALL, EL, FRPM)
GRAD_SGS = (ALL, EL, FRPM)

SCORE_METRICS = ("math_score_g6", "math_score_g7", "math_score_g8",
                 "ela_score_g6", "ela_score_g7", "ela_score_g8")

# Emission grid and hard bounds per raw metric: (decimals, lo, hi).
# decimals: 0 = integer, 5 = 0.5 steps, 1/2 = fixed decimals.
_GRID: dict[str, tuple[int, float, Optional[float]]] = {
    "enrollment": (0, 0, None),
    "teacher_fte": (5, 0, None),
    "admin_fte": (5, 0, None),
    "suspensions": (0, 0, None),
    "expulsions": (0, 0, None),
    "ap_course_count": (0, 0, None),
    "total_course_count": (0, 0, None),
    "revenue_total": (0, 0, None),
    "expenditure_total": (0, 0, None),
    "grad_rate": (1, 0, 100),
    "dropout_rate": (1, 0, 100),
    "pct_el": (1, 0, 100),
    "pct_frpm": (1, 0, 100),
    "parent_ed_index": (2, 1, 5),
    "math_score_g6": (1, 100, None), "math_score_g7": (1, 100, None),
    "math_score_g8": (1, 100, None), "ela_score_g6": (1, 100, None),
    "ela_score_g7": (1, 100, None), "ela_score_g8": (1, 100, None),
}

_NAME_A = ("Oak", "Rio", "Sierra", "Vista", "Lake", "Mesa", "Arroyo", "Cedar",
           "Canyon", "Pine", "Sunset", "Alder", "Granite", "Willow", "Bell",
           "Palo", "Monte", "Laurel", "Juniper", "Madrone")
_NAME_B = ("wood", "view", "brook", "crest", "dale", "field", "grove",
           "haven", "ridge", "side", "valley", "park", "port", "mont",
           "verde", "bend")

_SPAN_LABEL = {
    GradeSpan.ELEM_K6: "Elementary",
    GradeSpan.ELEM_K8: "Union Elementary",
    GradeSpan.HIGH_9_12: "Union High",
    GradeSpan.UNIFIED_K12: "Unified",
}


@dataclass
class SynthConfig:
    n_districts: int = 956
    n_years: int = 10
    seed: int = 42
    spike_rate: float = 0.002
    charter_share: float = 0.10

    def __post_init__(self):
        if self.n_districts < 20:
            raise ConfigError("n_districts", "must be >= 20")
        if self.n_years < 3:
            raise ConfigError("n_years", "must be >= 3")
        if not (0.0 <= self.spike_rate <= 1.0):
            raise ConfigError("spike_rate", "must be in [0, 1]")
        if not (0.0 <= self.charter_share <= 1.0):
            raise ConfigError("charter_share", "must be in [0, 1]")

    @property
    def years(self) -> list[int]:
        return list(range(END_YEAR - self.n_years + 1, END_YEAR + 1))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_districts": self.n_districts, "n_years": self.n_years,
            "seed": self.seed, "spike_rate": self.spike_rate,
            "charter_share": self.charter_share,
        }


@dataclass
class GroundTruth:
    """Sidecar for oracle tests: what the corpus would be without defects."""

    injected_spikes: list[dict[str, Any]]
    charter_links: dict[str, Optional[str]]
    true_revenue_split: dict[str, dict[str, Any]]
    true_per_pupil: dict[str, float]
    config: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "GroundTruth":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            injected_spikes=data["injected_spikes"],
            charter_links=data["charter_links"],
            true_revenue_split=data["true_revenue_split"],
            true_per_pupil=data["true_per_pupil"],
            config=data.get("config", {}),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "injected_spikes": self.injected_spikes,
            "charter_links": self.charter_links,
            "true_revenue_split": self.true_revenue_split,
            "true_per_pupil": self.true_per_pupil,
        }


def _rng(seed: int, stream: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{stream}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _snap(value: float, decimals: int) -> float:
    if decimals == 0:
        return float(int(round(value)))
    if decimals == 5:
        return round(value * 2) / 2
    return round(value, decimals)


def _fmt(value: float, decimals: int) -> str:
    if decimals == 0:
        return str(int(value))
    if decimals == 5:
        return f"{value:.1f}"
    return f"{value:.{decimals}f}"


# ---------------------------------------------------------------------------
# latent world


@dataclass
class _County:
    id: str
    name: str
    el: float
    frpm: float
    parent_ed: float
    log_size: float
    score: float
    rev_rate: float


@dataclass
class _School:
    id: str
    name: str
    district_id: str
    governance: str
    cmo_id: Optional[str]
    reports_revenue: bool
    share: float
    ptr: float          # pupils per teacher
    score_shift: float
    rate_mult: float    # revenue-rate multiplier vs district


@dataclass
class _District:
    id: str
    name: str
    county: _County
    span: GradeSpan
    funding: str
    base_e: float
    growth: float
    el: float
    frpm: float
    parent_ed: float
    race_shares: dict[str, float]
    score_base: float
    score_trend: float
    grad_base: float
    dropout_base: float
    rev_rate: float
    susp_rate: float
    proportional: bool = False
    schools: list[_School] = field(default_factory=list)

    @property
    def direct_charters(self) -> list[_School]:
        return [s for s in self.schools if s.governance == "charter_direct_funded"]


@dataclass
class _World:
    counties: list[_County]
    cmos: list[tuple[str, str]]
    districts: list[_District]
    schools: list[_School]


def _build_world(cfg: SynthConfig) -> _World:
    rng = _rng(cfg.seed, "world")
    n_counties = max(3, cfg.n_districts // 40)
    n_cmos = max(3, cfg.n_districts // 30)

    def place_name(i: int) -> str:
        a = _NAME_A[i % len(_NAME_A)]
        b = _NAME_B[(i // len(_NAME_A)) % len(_NAME_B)]
        k = i // (len(_NAME_A) * len(_NAME_B))
        return f"{a}{b}" + (f" {k + 1}" if k else "")

    counties = []
    for i in range(n_counties):
        counties.append(_County(
            id=f"C{i + 1:03d}",
            name=f"{place_name(i)} County",
            el=rng.uniform(5, 45),
            frpm=rng.uniform(20, 75),
            parent_ed=rng.uniform(1.9, 4.1),
            log_size=rng.uniform(math.log(350), math.log(6500)),
            score=rng.uniform(330, 430),
            rev_rate=rng.uniform(8600, 10800),
        ))

    cmos = [(f"M{i + 1:03d}", f"{place_name(i + 7)} Charter Network")
            for i in range(n_cmos)]

    spans = [GradeSpan.ELEM_K6, GradeSpan.ELEM_K8,
             GradeSpan.HIGH_9_12, GradeSpan.UNIFIED_K12]
    span_weights = [0.30, 0.22, 0.16, 0.32]

    districts = []
    for i in range(cfg.n_districts):
        county = rng.choice(counties)
        span = rng.choices(spans, weights=span_weights)[0]
        el = min(max(rng.gauss(county.el, 7), 0.5), 80)
        frpm = min(max(rng.gauss(county.frpm, 10), 2), 98)
        parent_ed = min(max(rng.gauss(county.parent_ed, 0.45), 1.0), 5.0)
        hisp = min(max(el * 1.3 + rng.gauss(12, 8), 2), 88)
        white = min(max(70 - hisp * 0.75 + rng.gauss(0, 8), 2), 90)
        aa = min(max(rng.gauss(6, 3), 0.5), 30)
        asian = min(max(rng.gauss(8 + (parent_ed - 3) * 4, 4), 0.5), 45)
        districts.append(_District(
            id=f"D{i + 1:04d}",
            name=f"{place_name(i + 31)} {_SPAN_LABEL[span]}",
            county=county,
            span=span,
            funding="basic_aid" if rng.random() < 0.12 else "state_formula",
            base_e=min(max(math.exp(rng.gauss(county.log_size, 0.7)), 220), 30000),
            growth=rng.uniform(0.985, 1.02),
            el=el, frpm=frpm, parent_ed=parent_ed,
            race_shares={
                "hispanic": hisp / 100, "white": white / 100,
                "african_american": aa / 100, "asian": asian / 100,
            },
            score_base=county.score + (parent_ed - 3) * 22
                       - (frpm - 50) * 0.55 + rng.gauss(0, 12),
            score_trend=rng.uniform(-1.2, 1.8),
            grad_base=min(max(86 + (parent_ed - 3) * 3 - (frpm - 50) * 0.12
                              + rng.gauss(0, 3), 45), 99),
            dropout_base=min(max(7 - (parent_ed - 3) * 1.5
                                 + (frpm - 50) * 0.06 + rng.gauss(0, 1.5), 0.3), 30),
            rev_rate=min(max(rng.gauss(county.rev_rate, 650), 7000), 14000),
            susp_rate=min(max(rng.gauss(4.0 + frpm * 0.03, 1.2), 0.3), 15),
        ))

    # School counts first, so the direct-charter probability can be
    # calibrated to hit charter_share of all schools in expectation.
    extra_counts = [rng.choices((0, 1, 2, 3, 4),
                                weights=(0.35, 0.30, 0.20, 0.10, 0.05))[0]
                    for _ in districts]
    total_schools = cfg.n_districts + sum(extra_counts)
    extra_total = total_schools - cfg.n_districts
    p_direct = 0.0 if extra_total == 0 else min(
        0.85, cfg.charter_share * total_schools / extra_total)

    school_kind = {GradeSpan.ELEM_K6: "Elementary School",
                   GradeSpan.ELEM_K8: "Middle School",
                   GradeSpan.HIGH_9_12: "High School",
                   GradeSpan.UNIFIED_K12: "School"}
    schools: list[_School] = []
    serial = 0
    for district, n_extra in zip(districts, extra_counts):
        weights = [rng.uniform(0.5, 1.5) for _ in range(1 + n_extra)]
        total_w = sum(weights)
        for j, w in enumerate(weights):
            serial += 1
            if j == 0:
                governance = "district_operated"
            elif rng.random() < p_direct:
                governance = "charter_direct_funded"
            elif rng.random() < 0.12:
                governance = "charter_district_funded"
            else:
                governance = "district_operated"
            cmo_id = None
            if governance == "charter_direct_funded" and rng.random() < 0.75:
                cmo_id = rng.choice(cmos)[0]
            label = ("Charter School" if governance != "district_operated"
                     else school_kind[district.span])
            school = _School(
                id=f"S{serial:05d}",
                name=f"{place_name(serial + 57)} {label}",
                district_id=district.id,
                governance=governance,
                cmo_id=cmo_id,
                reports_revenue=(governance == "charter_direct_funded"
                                 and rng.random() < 0.5),
                share=w / total_w,
                ptr=min(max(rng.gauss(21.5, 1.5), 16), 28),
                score_shift=rng.gauss(0, 10),
                rate_mult=rng.uniform(0.9, 1.1),
            )
            district.schools.append(school)
            schools.append(school)
        if district.direct_charters and rng.random() < 0.3:
            district.proportional = True
            for school in district.schools:
                school.rate_mult = 1.0
    return _World(counties, cmos, districts, schools)


# ---------------------------------------------------------------------------
# simulation

CellMap = dict[tuple[str, str], dict[tuple[str, int], float]]


@dataclass
class _Corpus:
    school_cells: CellMap = field(default_factory=dict)
    district_cells: CellMap = field(default_factory=dict)
    revenue_split: dict[str, dict[str, Any]] = field(default_factory=dict)
    per_pupil: dict[str, float] = field(default_factory=dict)

    def put(self, cells: CellMap, metric: str, sg: str,
            eid: str, year: int, value: float) -> None:
        cells.setdefault((metric, sg), {})[(eid, year)] = value


def _simulate(cfg: SynthConfig, world: _World) -> _Corpus:
    rng = _rng(cfg.seed, "values")
    data = _Corpus()
    years = cfg.years
    race_sgs = ("hispanic", "white", "african_american", "asian")

    for district in world.districts:
        d = district
        sc = data.school_cells
        dc = data.district_cells
        for t, year in enumerate(years):
            infl = 1.02 ** t
            e_by_school: dict[str, dict[str, int]] = {}
            rev_by_school: dict[str, int] = {}

            for s in d.schools:
                base = d.base_e * s.share * (d.growth ** t)
                e_all = max(20, int(round(base * (1 + rng.gauss(0, 0.015)))))
                counts = {ALL: e_all}
                for sg, share in (("english_learner", d.el / 100),
                                  ("frpm", d.frpm / 100)):
                    p = min(max(share + rng.gauss(0, 0.03), 0.0), 1.0)
                    counts[sg] = min(int(round(e_all * p)), e_all)
                for sg in race_sgs:
                    p = min(max(d.race_shares[sg] + rng.gauss(0, 0.03), 0.0), 1.0)
                    counts[sg] = min(int(round(e_all * p)), e_all)
                e_by_school[s.id] = counts
                for sg in ENROLL_SGS:
                    data.put(sc, "enrollment", sg, s.id, year, float(counts[sg]))

                teacher = max(1.0, _snap(e_all / s.ptr * (1 + rng.gauss(0, 0.03)), 5))
                admin = max(0.5, _snap(max(1.0, e_all / 260) * (1 + rng.gauss(0, 0.05)), 5))
                data.put(sc, "teacher_fte", ALL, s.id, year, teacher)
                data.put(sc, "admin_fte", ALL, s.id, year, admin)

                susp = max(0, int(round(e_all * d.susp_rate / 100
                                        * (1 + rng.gauss(0, 0.18)))))
                exp = min(susp, int(round(susp * min(max(rng.gauss(0.12, 0.04), 0.02), 0.4))))
                frpm_w = min(max(d.frpm / 100 * 1.3 + rng.gauss(0, 0.05), 0.02), 0.98)
                data.put(sc, "suspensions", ALL, s.id, year, float(susp))
                data.put(sc, "expulsions", ALL, s.id, year, float(exp))
                data.put(sc, "suspensions", FRPM, s.id, year,
                         float(min(susp, int(round(susp * frpm_w)))))
                data.put(sc, "expulsions", FRPM, s.id, year,
                         float(min(exp, int(round(exp * frpm_w)))))

                total_courses = max(12, int(round(24 + e_all / 38 + rng.gauss(0, 2))))
                ap_share = min(max(rng.gauss(0.08 + d.parent_ed * 0.02, 0.02), 0.01), 0.5)
                ap = min(total_courses, int(round(total_courses * ap_share)))
                data.put(sc, "ap_course_count", ALL, s.id, year, float(ap))
                data.put(sc, "total_course_count", ALL, s.id, year, float(total_courses))

                school_score = d.score_base + s.score_shift + d.score_trend * t
                offsets = {"math_score_g6": 0.0, "math_score_g7": 8.0,
                           "math_score_g8": 16.0, "ela_score_g6": -5.0,
                           "ela_score_g7": 3.0, "ela_score_g8": 11.0}
                deltas = {ALL: 0.0, EL: 28 + rng.gauss(0, 3), FRPM: 18 + rng.gauss(0, 3)}
                for metric in SCORE_METRICS:
                    for sg in ASSESS_SGS:
                        if counts.get(sg, counts[ALL] if sg == ALL else 0) <= 0 and sg != ALL:
                            continue
                        score = _snap(max(120.0, school_score + offsets[metric]
                                          - deltas[sg] + rng.gauss(0, 4)), 1)
                        data.put(sc, metric, sg, s.id, year, score)

                grad_all = _snap(min(max(d.grad_base + rng.gauss(0, 1.2), 30), 100), 1)
                drop_all = _snap(min(max(d.dropout_base + rng.gauss(0, 0.7), 0.1),
                                     100 - grad_all), 1)
                sg_shift = {ALL: 0.0, EL: 6 + rng.gauss(0, 2), FRPM: 4 + rng.gauss(0, 1.5)}
                for sg in GRAD_SGS:
                    if sg != ALL and counts[sg] <= 0:
                        continue
                    grad = _snap(min(max(grad_all - sg_shift[sg], 20), 100), 1)
                    drop = _snap(min(max(drop_all + sg_shift[sg] * 0.4, 0.0),
                                     100 - grad), 1)
                    data.put(sc, "grad_rate", sg, s.id, year, grad)
                    data.put(sc, "dropout_rate", sg, s.id, year, drop)

                rate = d.rev_rate * s.rate_mult * infl
                rev = int(round(e_all * rate))
                rev_by_school[s.id] = rev
                if s.reports_revenue:
                    exp_total = int(round(rev * rng.uniform(0.93, 1.04)))
                    data.put(sc, "revenue_total", ALL, s.id, year, float(rev))
                    data.put(sc, "expenditure_total", ALL, s.id, year, float(exp_total))

            # District aggregates: exact sums / weighted means over schools.
            for sg in ENROLL_SGS:
                data.put(dc, "enrollment", sg, d.id, year,
                         float(sum(e_by_school[s.id][sg] for s in d.schools)))
            for metric in ("teacher_fte", "admin_fte", "ap_course_count",
                           "total_course_count"):
                data.put(dc, metric, ALL, d.id, year,
                         sum(sc[(metric, ALL)][(s.id, year)] for s in d.schools))
            for metric in ("suspensions", "expulsions"):
                for sg in DISC_SGS:
                    data.put(dc, metric, sg, d.id, year,
                             sum(sc[(metric, sg)][(s.id, year)] for s in d.schools))
            for metric in SCORE_METRICS:
                for sg in ASSESS_SGS:
                    mean = _weighted_mean(sc, metric, sg, d.schools, year, e_by_school)
                    if mean is not None:
                        data.put(dc, metric, sg, d.id, year, _snap(mean, 1))
            for metric in ("grad_rate", "dropout_rate"):
                for sg in GRAD_SGS:
                    mean = _weighted_mean(sc, metric, sg, d.schools, year, e_by_school)
                    if mean is not None:
                        data.put(dc, metric, sg, d.id, year,
                                 _snap(min(max(mean, 0.0), 100.0), 1))

            revenue = sum(rev_by_school.values())
            expend = int(round(revenue * rng.uniform(0.94, 1.03)))
            data.put(dc, "revenue_total", ALL, d.id, year, float(revenue))
            data.put(dc, "expenditure_total", ALL, d.id, year, float(expend))

            e_all_total = sum(e_by_school[s.id][ALL] for s in d.schools)
            e_el = sum(e_by_school[s.id][EL] for s in d.schools)
            e_frpm = sum(e_by_school[s.id][FRPM] for s in d.schools)
            data.put(dc, "pct_el", ALL, d.id, year,
                     _snap(100.0 * e_el / e_all_total, 1))
            data.put(dc, "pct_frpm", ALL, d.id, year,
                     _snap(100.0 * e_frpm / e_all_total, 1))
            data.put(dc, "parent_ed_index", ALL, d.id, year,
                     _snap(min(max(d.parent_ed + rng.gauss(0, 0.05), 1.0), 5.0), 2))

            charter_rev = sum(rev_by_school[s.id] for s in d.direct_charters)
            key = f"{d.id}|{year}"
            data.revenue_split[key] = {
                "district_revenue": revenue - charter_rev,
                "charter_revenue": charter_rev,
                "proportional": d.proportional,
            }
            e_eff = sum(e_by_school[s.id][ALL] for s in d.schools
                        if s.governance != "charter_direct_funded")
            data.per_pupil[key] = (revenue - charter_rev) / e_eff
    return data


def _weighted_mean(sc: CellMap, metric: str, sg: str, schools, year: int,
                   e_by_school) -> Optional[float]:
    num = den = 0.0
    sl = sc.get((metric, sg), {})
    for s in schools:
        value = sl.get((s.id, year))
        if value is None:
            continue
        w = e_by_school[s.id][sg]
        if w <= 0:
            continue
        num += value * w
        den += w
    return num / den if den > 0 else None


# ---------------------------------------------------------------------------
# defect injection


def _inject_spikes(cfg: SynthConfig, world: _World,
                   data: _Corpus) -> list[dict[str, Any]]:
    total_cells = (sum(len(sl) for sl in data.school_cells.values())
                   + sum(len(sl) for sl in data.district_cells.values()))
    n_spikes = int(round(cfg.spike_rate * total_cells))
    if n_spikes == 0:
        return []

    rng = _rng(cfg.seed, "spikes")
    has_charter = {d.id: bool(d.direct_charters) for d in world.districts}
    span_of = {d.id: d.span.value for d in world.districts}

    # Cells of districts with direct-funded charters stay clean except
    # demography, so reassociation and the ratio-correction ground truth
    # remain exact; demography is never rebuilt from school rows.
    safe_metrics = ("pct_el", "pct_frpm", "parent_ed_index")
    candidates = []
    series_by: dict[tuple[str, str, str], list[tuple[int, float]]] = {}
    pool_by: dict[tuple[str, str, int, str], list[tuple[str, float]]] = {}
    for (metric, sg), sl in sorted(data.district_cells.items()):
        for (district_id, year), value in sl.items():
            series_by.setdefault((metric, sg, district_id), []).append((year, value))
            pool_by.setdefault((metric, sg, year, span_of[district_id]),
                               []).append((district_id, value))
            if has_charter[district_id] and metric not in safe_metrics:
                continue
            candidates.append((metric, sg, district_id, year))
    rng.shuffle(candidates)

    spikes: list[dict[str, Any]] = []
    taken_series: set[tuple[str, str, str]] = set()
    # Cap spikes per cross-sectional pool at 5% so sibling spikes cannot
    # inflate a pool's MAD enough to hide each other from the screen.
    pool_load: dict[tuple[str, str, int, str], int] = {}
    for metric, sg, district_id, year in candidates:
        if len(spikes) >= n_spikes:
            break
        if (metric, sg, district_id) in taken_series:
            continue
        span = span_of[district_id]
        pool_key = (metric, sg, year, span)
        pool = pool_by[pool_key]
        if pool_load.get(pool_key, 0) >= max(1, int(0.05 * len(pool))):
            continue
        sl = data.district_cells[(metric, sg)]
        value = sl[(district_id, year)]
        spiked = _size_spike(metric, value, year, district_id,
                             series_by[(metric, sg, district_id)], pool)
        if spiked is None:
            continue
        sl[(district_id, year)] = spiked
        taken_series.add((metric, sg, district_id))
        pool_load[pool_key] = pool_load.get(pool_key, 0) + 1
        spikes.append({
            "key": f"{district_id}|{metric}|{year}|{sg}",
            "true_value": value,
            "spiked_value": spiked,
        })
    spikes.sort(key=lambda s: s["key"])
    return spikes


def _size_spike(metric: str, value: float, year: int, district_id: str,
                series: list[tuple[int, float]], pool: list[tuple[str, float]]
                ) -> Optional[float]:
    """Pick a spiked value the screen is guaranteed to flag, or None.

    The candidate must sit at least 8 clean robust deviations from the true
    value and verify at modified z > 4.5 against the series and pool *with
    itself substituted in*, leaving headroom over the 3.5 screening threshold
    for sibling-spike contamination (capped at 5% per pool). Values stay on
    the metric's emission grid and inside its legal bounds.
    """
    decimals, lo, hi = _GRID[metric]
    step = {0: 1.0, 5: 0.5, 1: 0.1, 2: 0.01}[decimals]
    margin = 4.5
    series_values = [v for _y, v in series]
    pool_values = [v for _d, v in pool]
    s_long = robust_scale(series_values)
    s_cross = robust_scale(pool_values)
    si = next(i for i, (y, _v) in enumerate(series) if y == year)
    pi = next(i for i, (d, _v) in enumerate(pool) if d == district_id)

    def snap(v: float, up: bool) -> float:
        v = (math.ceil if up else math.floor)(v / step) * step
        return round(v, decimals) if decimals in (1, 2) else v

    def verified(v: float) -> bool:
        if v < lo or (hi is not None and v > hi) or v == value:
            return False
        if abs(v - value) < 8 * s_long.scale:
            return False
        sv = list(series_values)
        sv[si] = v
        pv = list(pool_values)
        pv[pi] = v
        hit_long, _ = _exceeds(v, robust_scale(sv), margin)
        hit_cross, _ = _exceeds(v, robust_scale(pv), margin)
        return hit_long and hit_cross

    bump = max(step, 0.02 * max(abs(s_cross.median), abs(value), 25.0))
    for direction in (1, -1):
        if direction > 0:
            v = snap(max(value + 8 * s_long.scale,
                         s_long.median + 8 * s_long.scale,
                         s_cross.median + 6 * s_cross.scale) + bump, True)
        else:
            v = snap(min(value - 8 * s_long.scale,
                         s_long.median - 8 * s_long.scale,
                         s_cross.median - 6 * s_cross.scale) - bump, False)
        for _ in range(8):
            clamped = False
            if v < lo:
                v, clamped = lo, True
            if hi is not None and v > hi:
                v, clamped = hi, True
            if verified(v):
                return v
            if clamped:
                break
            v = snap(v + direction * max(step, 0.6 * abs(v - s_cross.median)),
                     direction > 0)
    return None


# ---------------------------------------------------------------------------
# emission


def generate_corpus(cfg: SynthConfig, out_dir: Path) -> tuple[list[Path], Path]:
    """Write the raw tables plus ground_truth.json; byte-identical per config."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CorpusIOError(f"cannot create corpus directory {out_dir}: {exc}")
    if not out_dir.is_dir():
        raise CorpusIOError(f"corpus path {out_dir} is not a directory")

    world = _build_world(cfg)
    data = _simulate(cfg, world)
    spikes = _inject_spikes(cfg, world, data)

    paths = _write_tables(cfg, out_dir, world, data)
    truth = GroundTruth(
        injected_spikes=spikes,
        charter_links={s.id: s.cmo_id for s in world.schools
                       if s.governance == "charter_direct_funded"},
        true_revenue_split=data.revenue_split,
        true_per_pupil=data.per_pupil,
        config=cfg.to_dict(),
    )
    gt_path = out_dir / GROUND_TRUTH_FILE
    gt_path.write_text(json.dumps(truth.to_dict(), sort_keys=True, indent=1) + "\n",
                       encoding="utf-8")
    return paths, gt_path


def _write_tables(cfg: SynthConfig, out_dir: Path, world: _World,
                  data: _Corpus) -> list[Path]:
    years = cfg.years
    districts = world.districts
    entity_ids = [d.id for d in districts] + [s.id for s in world.schools]
    sc, dc = data.school_cells, data.district_cells

    def cell(metric: str, sg: str, eid: str, year: int) -> Optional[float]:
        source = dc if eid.startswith("D") else sc
        return source.get((metric, sg), {}).get((eid, year))

    def grid(metric: str) -> int:
        return _GRID[metric][0]

    tables: dict[str, tuple[list[str], list[list[str]]]] = {}

    rows = [[c.id, "county", c.name, "", "", ""] for c in world.counties]
    rows += [[mid, "cmo", name, "", "", ""] for mid, name in world.cmos]
    rows += [["STATE", "state", "State of Synthetica", "", "", ""]]
    rows += [[d.id, "district", d.name, d.county.id, d.span.value, d.funding]
             for d in districts]
    tables["entities.csv"] = (
        ["id", "kind", "name", "county_id", "grade_span", "funding_type"], rows)

    tables["schools.csv"] = (
        ["id", "name", "authorizer_district_id", "governance", "cmo_id"],
        [[s.id, s.name, s.district_id, s.governance, s.cmo_id or ""]
         for s in world.schools])

    rows = []
    for eid in entity_ids:
        for year in years:
            for sg in ENROLL_SGS:
                v = cell("enrollment", sg, eid, year)
                rows.append([eid, str(year), sg, _fmt(v, 0)])
    tables["enrollment.csv"] = (["entity_id", "year", "subgroup", "students"], rows)

    rows = []
    for eid in entity_ids:
        for year in years:
            rev = cell("revenue_total", ALL, eid, year)
            if rev is None:
                continue
            exp = cell("expenditure_total", ALL, eid, year)
            rows.append([eid, str(year), _fmt(rev, 0), _fmt(exp, 0)])
    tables["finance.csv"] = (
        ["entity_id", "year", "revenue_total", "expenditure_total"], rows)

    rows = []
    for eid in entity_ids:
        for year in years:
            rows.append([eid, str(year),
                         _fmt(cell("teacher_fte", ALL, eid, year), 5),
                         _fmt(cell("admin_fte", ALL, eid, year), 5)])
    tables["staffing.csv"] = (["entity_id", "year", "teacher_fte", "admin_fte"], rows)

    rows = []
    for eid in entity_ids:
        for year in years:
            for sg in DISC_SGS:
                rows.append([eid, str(year), sg,
                             _fmt(cell("suspensions", sg, eid, year), 0),
                             _fmt(cell("expulsions", sg, eid, year), 0)])
    tables["discipline.csv"] = (
        ["entity_id", "year", "subgroup", "suspensions", "expulsions"], rows)

    rows = []
    for eid in entity_ids:
        for year in years:
            rows.append([eid, str(year),
                         _fmt(cell("ap_course_count", ALL, eid, year), 0),
                         _fmt(cell("total_course_count", ALL, eid, year), 0)])
    tables["courses.csv"] = (
        ["entity_id", "year", "ap_course_count", "total_course_count"], rows)

    rows = []
    for eid in entity_ids:
        for year in years:
            for sg in ASSESS_SGS:
                for metric in SCORE_METRICS:
                    v = cell(metric, sg, eid, year)
                    if v is not None:
                        rows.append([eid, str(year), sg, metric,
                                     _fmt(v, grid(metric))])
    tables["assessments.csv"] = (
        ["entity_id", "year", "subgroup", "metric_id", "score"], rows)

    rows = []
    for eid in entity_ids:
        for year in years:
            for sg in GRAD_SGS:
                g = cell("grad_rate", sg, eid, year)
                if g is None:
                    continue
                rows.append([eid, str(year), sg, _fmt(g, 1),
                             _fmt(cell("dropout_rate", sg, eid, year), 1)])
    tables["graduation.csv"] = (
        ["entity_id", "year", "subgroup", "grad_rate", "dropout_rate"], rows)

    rows = []
    for d in districts:
        for year in years:
            rows.append([d.id, str(year),
                         _fmt(cell("pct_el", ALL, d.id, year), 1),
                         _fmt(cell("pct_frpm", ALL, d.id, year), 1),
                         _fmt(cell("parent_ed_index", ALL, d.id, year), 2)])
    tables["demography.csv"] = (
        ["entity_id", "year", "pct_el", "pct_frpm", "parent_ed_index"], rows)

    paths = []
    for filename in TABLE_FILES:
        header, body = tables[filename]
        path = out_dir / filename
        lines = [",".join(header)]
        lines += [",".join(row) for row in body]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
