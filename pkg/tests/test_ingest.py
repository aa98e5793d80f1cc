import shutil
from pathlib import Path

import pytest

from almanac import ingest, storage
from almanac.errors import CorpusIOError
from almanac.ingest import TABLE_SCHEMAS, IngestError, load_corpus, parse_table
from almanac.model import AlmanacConfig, validate_store


def _write(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_parse_well_formed_rows(tmp_path):
    path = _write(tmp_path / "enrollment.csv", [
        "entity_id,year,subgroup,students",
        "D1,2015,all,800",
        "D1,2015,frpm,300",
        "D2,2015,all,450",
    ])
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    assert errors == []
    assert len(rows) == 3
    assert rows[0] == (2, ("D1", 2015, "all", 800))


def test_parse_bad_type_cites_line_and_column(tmp_path):
    path = _write(tmp_path / "enrollment.csv", [
        "entity_id,year,subgroup,students",
        "D1,2015,all,abc",
        "D2,2015,all,450",
    ])
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    assert len(rows) == 1
    assert len(errors) == 1
    err = errors[0]
    assert err.kind == "bad_type"
    assert err.line == 2
    assert err.column == "students"


def test_parse_missing_column_stops_row_parsing(tmp_path):
    path = _write(tmp_path / "enrollment.csv", [
        "entity_id,year,students",
        "D1,2015,800",
    ])
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    assert rows == []
    assert len(errors) == 1
    assert errors[0].kind == "missing_column"
    assert errors[0].line == 1
    assert errors[0].column == "subgroup"


def test_parse_unknown_column_nonfatal(tmp_path):
    path = _write(tmp_path / "enrollment.csv", [
        "entity_id,year,subgroup,students,extra",
        "D1,2015,all,800,junk",
    ])
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    assert len(rows) == 1
    assert len(errors) == 1
    assert errors[0].kind == "unknown_column"
    assert errors[0].column == "extra"


def test_parse_bad_enum(tmp_path):
    path = _write(tmp_path / "enrollment.csv", [
        "entity_id,year,subgroup,students",
        "D1,2015,sophomores,800",
    ])
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    assert rows == []
    assert errors[0].kind == "bad_enum"


def test_parse_negative_count_rejected(tmp_path):
    path = _write(tmp_path / "enrollment.csv", [
        "entity_id,year,subgroup,students",
        "D1,2015,all,-5",
    ])
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    assert rows == []
    assert errors[0].kind == "bad_type"


def test_parse_losslessness(tmp_path):
    lines = ["entity_id,year,subgroup,students",
             "D1,2015,all,800",
             "D1,bogus,all,800",
             "D1,2016,all,abc",
             "D2,2015,all,100"]
    path = _write(tmp_path / "enrollment.csv", lines)
    rows, errors = parse_table(path, TABLE_SCHEMAS["enrollment.csv"])
    error_lines = {e.line for e in errors if e.line >= 2}
    assert len(rows) + len(error_lines) == len(lines) - 1


def test_unreadable_file_is_io_error(tmp_path):
    with pytest.raises(CorpusIOError):
        parse_table(tmp_path / "nope.csv", TABLE_SCHEMAS["enrollment.csv"])


# -- load_corpus ------------------------------------------------------------

def test_load_small_corpus_clean(small_corpus_dir):
    store, errors = load_corpus(small_corpus_dir, AlmanacConfig())
    assert errors == []
    assert len(store.districts) == 60
    assert validate_store(store) == []


def test_missing_table_is_io_error(small_corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(small_corpus_dir, broken)
    (broken / "finance.csv").unlink()
    with pytest.raises(CorpusIOError) as excinfo:
        load_corpus(broken, AlmanacConfig())
    assert "finance.csv" in str(excinfo.value)


def _append(path: Path, line: str) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")


def test_school_citing_unknown_district(small_corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(small_corpus_dir, broken)
    _append(broken / "schools.csv", "SX999,Ghost School,D9999,district_operated,")
    _store, errors = load_corpus(broken, AlmanacConfig())
    dangling = [e for e in errors if e.kind == "dangling_reference"]
    assert len(dangling) == 1
    assert "D9999" in dangling[0].message
    assert dangling[0].file == "schools.csv"


def test_duplicate_assessment_row_keeps_first(small_corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(small_corpus_dir, broken)
    lines = (broken / "assessments.csv").read_text().splitlines()
    first_row = lines[1].split(",")
    duplicate = first_row[:]
    duplicate[-1] = "999.9"
    _append(broken / "assessments.csv", ",".join(duplicate))
    store, errors = load_corpus(broken, AlmanacConfig())
    dups = [e for e in errors if e.kind == "duplicate_key"]
    assert len(dups) == 1
    entity_id, year, subgroup, metric_id, score = first_row
    cell = store.get_cell(entity_id, metric_id, int(year), subgroup)
    assert cell[0] == float(score)  # first occurrence retained


def test_observation_for_unknown_entity(small_corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(small_corpus_dir, broken)
    _append(broken / "enrollment.csv", "ZZ404,2015,all,100")
    _store, errors = load_corpus(broken, AlmanacConfig())
    dangling = [e for e in errors if e.kind == "dangling_reference"]
    assert any("ZZ404" in e.message for e in dangling)
    assert all(e.file == "enrollment.csv" for e in dangling)


def test_every_error_carries_file_and_line(small_corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(small_corpus_dir, broken)
    _append(broken / "enrollment.csv", "ZZ404,2015,all,100")
    _append(broken / "graduation.csv", "D0001,2015,all,bogus,1.0")
    _store, errors = load_corpus(broken, AlmanacConfig())
    assert errors
    for error in errors:
        assert error.file.endswith(".csv")
        assert error.line >= 2 or error.kind in ("missing_column", "unknown_column")
        assert str(error.line) in str(error)


def test_reload_is_deterministic(small_corpus_dir, tmp_path):
    cfg = AlmanacConfig()
    store_a, _ = load_corpus(small_corpus_dir, cfg)
    store_b, _ = load_corpus(small_corpus_dir, cfg)
    storage.write_store(store_a, tmp_path / "a")
    storage.write_store(store_b, tmp_path / "b")
    for fname in ("entities.csv", "schools.csv", "observations.csv"):
        assert (tmp_path / "a" / fname).read_bytes() == \
            (tmp_path / "b" / fname).read_bytes()


def test_store_roundtrip_through_disk(small_corpus_dir, tmp_path):
    store, _ = load_corpus(small_corpus_dir, AlmanacConfig())
    storage.write_store(store, tmp_path / "s")
    loaded = storage.read_store(tmp_path / "s")
    assert loaded.observation_count() == store.observation_count()
    assert sorted(loaded.districts) == sorted(store.districts)
    assert loaded.years == store.years
    storage.write_store(loaded, tmp_path / "s2")
    assert (tmp_path / "s" / "observations.csv").read_bytes() == \
        (tmp_path / "s2" / "observations.csv").read_bytes()
