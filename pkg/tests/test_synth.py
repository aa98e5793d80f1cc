import filecmp
import statistics
from pathlib import Path

import pytest

from almanac import ingest, synth
from almanac.errors import ConfigError
from almanac.model import AlmanacConfig, GradeSpan


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_generation_deterministic(tmp_path):
    cfg = synth.SynthConfig(n_districts=30, n_years=4, seed=9)
    synth.generate_corpus(cfg, tmp_path / "a")
    synth.generate_corpus(cfg, tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


def test_seed_changes_output(tmp_path):
    synth.generate_corpus(synth.SynthConfig(n_districts=30, n_years=4, seed=1),
                          tmp_path / "a")
    synth.generate_corpus(synth.SynthConfig(n_districts=30, n_years=4, seed=2),
                          tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") != _tree_bytes(tmp_path / "b")


def test_district_count_matches_config(small_corpus_dir):
    lines = (small_corpus_dir / "entities.csv").read_text().splitlines()
    district_rows = [l for l in lines[1:] if l.split(",")[1] == "district"]
    assert len(district_rows) == 60


def test_all_tables_emitted(small_corpus_dir):
    for fname in synth.TABLE_FILES:
        assert (small_corpus_dir / fname).is_file(), fname
    assert (small_corpus_dir / synth.GROUND_TRUTH_FILE).is_file()


def test_every_grade_span_present(small_corpus_dir, fresh_store):
    spans = {d.grade_span for d in fresh_store.districts.values()}
    assert spans == set(GradeSpan)


def test_spike_rate_within_window(small_corpus_dir, small_truth, fresh_store):
    total_cells = fresh_store.observation_count()
    rate = len(small_truth.injected_spikes) / total_cells
    assert 0.0018 <= rate <= 0.0022


def test_spikes_exist_in_corpus_with_spiked_values(small_truth, fresh_store):
    for spike in small_truth.injected_spikes:
        entity_id, metric_id, year, subgroup = spike["key"].split("|")
        cell = fresh_store.get_cell(entity_id, metric_id, int(year), subgroup)
        assert cell is not None, spike["key"]
        assert cell[0] == spike["spiked_value"]
        assert cell[0] != spike["true_value"]


def _median(values):
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    return ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2


def test_spike_magnitude_at_least_8_clean_deviations(small_truth, fresh_store):
    # independent MAD oracle over the clean series (spiked cell restored)
    for spike in small_truth.injected_spikes:
        entity_id, metric_id, year, subgroup = spike["key"].split("|")
        year = int(year)
        sl = fresh_store.cells[(metric_id, subgroup)]
        series = []
        for y in fresh_store.years:
            cell = sl.get((entity_id, y))
            if cell is None:
                continue
            series.append(spike["true_value"] if y == year else cell[0])
        med = _median(series)
        mad = _median([abs(v - med) for v in series])
        clean_scale = 1.4826 * mad
        assert abs(spike["spiked_value"] - spike["true_value"]) >= \
            8 * clean_scale - 1e-9, spike["key"]


def test_revenue_split_sums_to_reported_total(small_truth, fresh_store):
    for key, split in small_truth.true_revenue_split.items():
        district_id, year = key.split("|")
        cell = fresh_store.get_cell(district_id, "revenue_total", int(year))
        assert cell is not None
        # finance cells of charter districts are never spiked
        if split["charter_revenue"] > 0:
            assert split["district_revenue"] + split["charter_revenue"] == cell[0]


def test_charter_share_near_config(fresh_store, small_truth):
    n_direct = len(small_truth.charter_links)
    share = n_direct / len(fresh_store.schools)
    assert 0.04 <= share <= 0.2  # small corpus; exact rate checked at scale


def test_both_revenue_reporting_paths_exist(small_corpus_dir, small_truth,
                                            fresh_store):
    reporting = set()
    for school_id in small_truth.charter_links:
        cell = fresh_store.get_cell(school_id, "revenue_total",
                                    fresh_store.years[-1])
        reporting.add(cell is not None)
    assert reporting == {True, False}


def test_invalid_config_names_field():
    with pytest.raises(ConfigError) as excinfo:
        synth.SynthConfig(n_districts=5)
    assert "n_districts" in str(excinfo.value)
    with pytest.raises(ConfigError) as excinfo:
        synth.SynthConfig(spike_rate=1.5)
    assert "spike_rate" in str(excinfo.value)
    with pytest.raises(ConfigError) as excinfo:
        synth.SynthConfig(n_years=2)
    assert "n_years" in str(excinfo.value)


def test_unwritable_directory_raises(tmp_path):
    target = tmp_path / "blocked"
    target.write_text("a file, not a directory")
    with pytest.raises(Exception):
        synth.generate_corpus(synth.SynthConfig(n_districts=20, n_years=3),
                              target)
