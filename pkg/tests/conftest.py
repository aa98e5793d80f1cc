"""Shared fixtures: a small deterministic corpus plus a hand-built toy store."""

from __future__ import annotations

from pathlib import Path

import pytest

from almanac import entities, ingest, quality, synth
from almanac.model import (
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
)

SMALL = synth.SynthConfig(n_districts=60, n_years=6, seed=42)


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus") / "small"
    synth.generate_corpus(SMALL, out)
    return out


@pytest.fixture(scope="session")
def small_truth(small_corpus_dir) -> synth.GroundTruth:
    return synth.GroundTruth.load(small_corpus_dir / synth.GROUND_TRUTH_FILE)


@pytest.fixture()
def fresh_store(small_corpus_dir) -> Store:
    """A newly ingested store; safe to mutate."""
    store, errors = ingest.load_corpus(small_corpus_dir, AlmanacConfig())
    assert not errors
    return store


@pytest.fixture(scope="session")
def piped_store(small_corpus_dir) -> Store:
    """Resolved and screened store shared across read-only tests."""
    store, errors = ingest.load_corpus(small_corpus_dir, AlmanacConfig())
    assert not errors
    store, _log = entities.reassociate_charters(store)
    store, _report = quality.screen_outliers(store)
    return store


class ToyStore:
    """Hand-assembled store for worked-arithmetic tests."""

    def __init__(self, years=(2015, 2016, 2017)):
        self.store = Store(AlmanacConfig())
        self.store.years = list(years)
        self.store.stage = "ingested"
        self.store.counties["C1"] = Entity("C1", EntityKind.COUNTY, "County One")
        self.store.state = Entity("STATE", EntityKind.STATE, "State")

    def district(self, did, span=GradeSpan.UNIFIED_K12, county="C1",
                 funding=FundingType.STATE_FORMULA, name=None) -> str:
        if county not in self.store.counties:
            self.store.counties[county] = Entity(county, EntityKind.COUNTY, county)
        self.store.districts[did] = District(did, name or f"{did} District",
                                             county, span, funding)
        return did

    def school(self, sid, district, governance=Governance.DISTRICT_OPERATED,
               cmo=None) -> str:
        self.store.schools[sid] = School(sid, f"{sid} School", district,
                                         governance, cmo)
        self.store.resolved_parent[sid] = district
        return sid

    def cmo(self, mid) -> str:
        self.store.cmos[mid] = Entity(mid, EntityKind.CMO, f"{mid} Network")
        return mid

    def cell(self, entity, metric, year, value, sg="all", status=REPORTED,
             provenance="toy"):
        self.store.set_cell(entity, metric, year, sg, float(value), status,
                            provenance)

    def series(self, entity, metric, values, sg="all"):
        for year, value in zip(self.store.years, values):
            self.cell(entity, metric, year, value, sg)

    def done(self) -> Store:
        self.store.invalidate_caches()
        return self.store


@pytest.fixture()
def toy():
    return ToyStore()
