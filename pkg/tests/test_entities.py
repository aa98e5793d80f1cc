import pytest

from almanac import entities, ingest
from almanac.entities import effective_enrollment, reassociate_charters
from almanac.errors import DanglingReferenceError, NotFoundError
from almanac.model import (
    CORRECTED,
    MISSING,
    REPORTED,
    AlmanacConfig,
    Governance,
)


def _charter_toy(toy):
    """District D1 runs A (800 students) and authorizes direct charter X
    (400 students, CMO M1); D2 has no charters."""
    toy.cmo("M1")
    toy.district("D1")
    toy.district("D2")
    toy.school("A", "D1")
    toy.school("X", "D1", Governance.CHARTER_DIRECT_FUNDED, cmo="M1")
    toy.school("B", "D2")
    for year in toy.store.years:
        toy.cell("A", "enrollment", year, 800)
        toy.cell("X", "enrollment", year, 400)
        toy.cell("B", "enrollment", year, 500)
        toy.cell("D1", "enrollment", year, 1200)  # state commingles
        toy.cell("D2", "enrollment", year, 500)
    return toy.done()


def test_worked_example_800_400(toy):
    store = _charter_toy(toy)
    year = store.years[0]
    store, log = reassociate_charters(store)

    assert [m.school_id for m in log.moves] == ["X"]
    assert log.moves[0].to_parent_id == "M1"
    assert log.moves[0].parent_kind == "cmo"

    d1 = store.get_cell("D1", "enrollment", year)
    assert d1[0] == 800
    assert d1[1] == CORRECTED
    assert "original=1200.0" in d1[2]
    cmo = store.get_cell("M1", "enrollment", year)
    assert cmo[0] == 400
    assert effective_enrollment(store, "D1", year) == 800


def test_district_without_charters_untouched(toy):
    store = _charter_toy(toy)
    year = store.years[0]
    store, log = reassociate_charters(store)
    assert "D2" not in {m.from_district_id for m in log.moves}
    cell = store.get_cell("D2", "enrollment", year)
    assert cell[1] == REPORTED
    assert cell[0] == 500


def test_state_total_conserved(toy):
    store = _charter_toy(toy)
    year = store.years[0]
    before = sum(store.get_cell(d, "enrollment", year)[0]
                 for d in store.districts)
    store, _ = reassociate_charters(store)
    after = sum(store.get_cell(d, "enrollment", year)[0]
                for d in store.districts)
    after += sum(store.get_cell(m, "enrollment", year)[0]
                 for m in store.cmos if store.get_cell(m, "enrollment", year))
    assert after == before == 1700


def test_reassociation_idempotent(toy):
    store = _charter_toy(toy)
    store, first = reassociate_charters(store)
    snapshot = {k: dict(sl) for k, sl in store.cells.items()}
    store, second = reassociate_charters(store)
    assert second.moves == []
    assert second.affected_cells == 0
    assert {k: dict(sl) for k, sl in store.cells.items()} == snapshot


def test_cmoless_charter_becomes_independent(toy):
    toy.district("D1")
    toy.school("A", "D1")
    toy.school("X", "D1", Governance.CHARTER_DIRECT_FUNDED)  # no CMO
    for year in toy.store.years:
        toy.cell("A", "enrollment", year, 100)
        toy.cell("X", "enrollment", year, 50)
        toy.cell("D1", "enrollment", year, 150)
    store = toy.done()
    store, log = reassociate_charters(store)
    assert log.moves[0].parent_kind == "independent_charter"
    parent = log.moves[0].to_parent_id
    assert parent in store.cmos
    assert store.get_cell(parent, "enrollment", store.years[0])[0] == 50


def test_weighted_mean_recomputed(toy):
    store = _charter_toy(toy)
    year = store.years[0]
    # scores: A=300 (w 800), X=260 (w 400); commingled mean 286.67
    for y in store.years:
        toy.cell("A", "math_score_g6", y, 300.0)
        toy.cell("X", "math_score_g6", y, 260.0)
        toy.cell("D1", "math_score_g6", y, 286.7)
    store, _ = reassociate_charters(store)
    cell = store.get_cell("D1", "math_score_g6", year)
    assert cell[0] == 300.0
    assert cell[1] == CORRECTED
    cmo = store.get_cell("M1", "math_score_g6", year)
    assert cmo[0] == 260.0


def test_no_remaining_contributors_goes_missing(toy):
    store = _charter_toy(toy)
    year = store.years[0]
    # EL scores exist only at the charter; after the move the district cell
    # has no contributing school left.
    for y in store.years:
        toy.cell("X", "enrollment", y, 120, sg="english_learner")
        toy.cell("X", "math_score_g6", y, 250.0, sg="english_learner")
        toy.cell("D1", "math_score_g6", y, 250.0, sg="english_learner")
    store, _ = reassociate_charters(store)
    cell = store.get_cell("D1", "math_score_g6", year, "english_learner")
    assert cell[1] == MISSING


def test_unknown_cmo_is_fatal(toy):
    toy.district("D1")
    toy.school("A", "D1")
    store = toy.done()
    store.schools["X"] = type(store.schools["A"])(
        "X", "X School", "D1", Governance.CHARTER_DIRECT_FUNDED, "M404")
    store.resolved_parent["X"] = "D1"
    with pytest.raises(DanglingReferenceError):
        reassociate_charters(store)


def test_effective_enrollment_contract(toy):
    store = _charter_toy(toy)
    store, _ = reassociate_charters(store)
    year = store.years[0]
    assert effective_enrollment(store, "D2", year) == 500
    with pytest.raises(NotFoundError):
        effective_enrollment(store, "D404", year)
    with pytest.raises(NotFoundError):
        effective_enrollment(store, "D1", 1901)


def test_effective_enrollment_no_schools_is_zero(toy):
    toy.district("D1")
    store = toy.done()
    assert effective_enrollment(store, "D1", store.years[0]) == 0


def test_charter_isolation_on_corpus(small_corpus_dir, small_truth):
    """Perturbing a direct charter's raw cells must not shift any district
    aggregate (bit-identical), only CMO-side ones."""
    cfg = AlmanacConfig()
    base_store, _ = ingest.load_corpus(small_corpus_dir, cfg)
    base_store, _ = reassociate_charters(base_store)
    district_ids = set(base_store.districts)
    baseline = {
        (key, ck): cell
        for key, sl in base_store.cells.items()
        for ck, cell in sl.items() if ck[0] in district_ids
    }

    charter_id = sorted(small_truth.charter_links)[0]
    perturbed, _ = ingest.load_corpus(small_corpus_dir, cfg)
    for (metric_id, subgroup), sl in perturbed.cells.items():
        for (entity_id, year), (value, status, prov) in list(sl.items()):
            if entity_id == charter_id:
                sl[(entity_id, year)] = (value * 2 + 17, status, prov)
    perturbed, _ = reassociate_charters(perturbed)
    rebuilt = {
        (key, ck): cell
        for key, sl in perturbed.cells.items()
        for ck, cell in sl.items() if ck[0] in district_ids
    }
    assert rebuilt == baseline


def test_conservation_on_corpus(fresh_store):
    sums_before = {}
    district_ids = set(fresh_store.districts)
    for (metric_id, subgroup), sl in fresh_store.cells.items():
        for (entity_id, year), (value, _s, _p) in sl.items():
            if entity_id in district_ids and metric_id in (
                    "enrollment", "teacher_fte", "admin_fte", "suspensions",
                    "expulsions", "ap_course_count", "total_course_count"):
                key = (metric_id, subgroup, year)
                sums_before[key] = sums_before.get(key, 0.0) + value
    store, _ = reassociate_charters(fresh_store)
    parents = district_ids | set(store.cmos)
    sums_after = {}
    for (metric_id, subgroup), sl in store.cells.items():
        for (entity_id, year), (value, status, _p) in sl.items():
            if entity_id in parents and status != MISSING and metric_id in (
                    "enrollment", "teacher_fte", "admin_fte", "suspensions",
                    "expulsions", "ap_course_count", "total_course_count"):
                key = (metric_id, subgroup, year)
                sums_after[key] = sums_after.get(key, 0.0) + value
    assert sums_after == sums_before
