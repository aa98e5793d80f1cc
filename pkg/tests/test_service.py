import json
import random

import pytest
from fastapi.testclient import TestClient

from almanac import storage, workbook
from almanac.model import Subgroup, metric_catalog
from almanac.service import create_app


@pytest.fixture(scope="module")
def served(tmp_path_factory, piped_store):
    root = tmp_path_factory.mktemp("served")
    store_dir = root / "store"
    bundles_dir = root / "bundles"
    bundles_dir.mkdir()
    storage.write_store(piped_store, store_dir)
    built = []
    for district_id in sorted(piped_store.districts)[:8]:
        try:
            bundle = workbook.build_bundle(piped_store, district_id)
        except Exception:
            continue
        workbook.write_bundle(
            bundle, bundles_dir / workbook.bundle_filename(district_id))
        built.append(district_id)
    app = create_app(store_dir, bundles_dir=bundles_dir, store=piped_store)
    return TestClient(app), piped_store, built, bundles_dir


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def test_districts_listing(served):
    client, store, _built, _bd = served
    response = client.get("/api/v1/districts")
    assert response.status_code == 200
    body = response.json()
    assert len(body) == len(store.districts)
    assert all({"id", "name", "grade_span", "county", "funding_type"} ==
               set(row) for row in body)


def test_metrics_listing(served):
    client, _store, _built, _bd = served
    response = client.get("/api/v1/metrics")
    assert response.status_code == 200
    assert response.json() == [m.to_dict() for m in metric_catalog()]


def test_unknown_district_404(served):
    client, _store, _built, _bd = served
    for path in ("/api/v1/districts/NOPE/bundle",
                 "/api/v1/districts/NOPE/peers",
                 "/api/v1/districts/NOPE/leaderboard?metric=grad_rate&year=2017"):
        response = client.get(path)
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"


def test_unknown_query_param_rejected(served):
    client, store, built, _bd = served
    district = built[0]
    response = client.get(
        f"/api/v1/districts/{district}/leaderboard"
        f"?metric=grad_rate&year={max(store.years)}&mystery=1")
    assert response.status_code == 400
    assert response.json()["code"] == "bad_param"


def test_leaderboard_matches_library(served):
    client, store, built, _bd = served
    rng = random.Random(4242)
    metrics_pool = [m for m in metric_catalog()]
    checked = 0
    while checked < 20:
        district = rng.choice(built)
        mdef = rng.choice(metrics_pool)
        year = rng.choice(store.years)
        subgroup = rng.choice(
            [s.value for s in Subgroup]) if mdef.subgrouped else "all"
        response = client.get(
            f"/api/v1/districts/{district}/leaderboard"
            f"?metric={mdef.id}&year={year}&subgroup={subgroup}")
        assert response.status_code == 200
        expected = workbook.leaderboard(store, district, mdef.id, year,
                                        subgroup).to_dict()
        assert response.text == _canonical(expected)
        checked += 1


def test_scatter_matches_library(served):
    client, store, built, _bd = served
    district = built[0]
    year = max(store.years)
    response = client.get(
        f"/api/v1/districts/{district}/scatter"
        f"?x=pct_frpm&y=grad_rate&year={year}&scope=all")
    assert response.status_code == 200
    expected = workbook.scatter(store, sorted(store.districts), "pct_frpm",
                                "grad_rate", year).to_dict()
    assert response.text == _canonical(expected)


def test_scatter_peers_scope(served):
    client, store, built, _bd = served
    district = built[0]
    year = max(store.years)
    response = client.get(
        f"/api/v1/districts/{district}/scatter"
        f"?x=pct_frpm&y=grad_rate&year={year}&scope=peers")
    assert response.status_code == 200
    assert len(response.json()["points"]) <= 16
    bad = client.get(
        f"/api/v1/districts/{district}/scatter"
        f"?x=pct_frpm&y=grad_rate&year={year}&scope=everything")
    assert bad.status_code == 400


def test_bundle_served_from_disk(served):
    client, _store, built, bundles_dir = served
    district = built[0]
    response = client.get(f"/api/v1/districts/{district}/bundle")
    assert response.status_code == 200
    on_disk = (bundles_dir / workbook.bundle_filename(district)).read_text()
    assert response.text == on_disk


def test_bundle_missing_is_ineligible(served):
    client, store, built, _bd = served
    unbuilt = [d for d in sorted(store.districts) if d not in built][0]
    response = client.get(f"/api/v1/districts/{unbuilt}/bundle")
    assert response.status_code == 404
    assert response.json()["code"] == "ineligible"


def test_peers_endpoint_matches_library(served):
    client, store, built, _bd = served
    from almanac import peers

    district = built[0]
    response = client.get(f"/api/v1/districts/{district}/peers")
    assert response.status_code == 200
    expected = peers.peer_set(store, district, store.config).to_dict()
    assert response.text == _canonical(expected)


def test_repeated_gets_identical(served):
    client, store, built, _bd = served
    url = (f"/api/v1/districts/{built[0]}/leaderboard"
           f"?metric=enrollment&year={max(store.years)}")
    first = client.get(url)
    second = client.get(url)
    assert first.text == second.text


def test_bad_year_param(served):
    client, _store, built, _bd = served
    response = client.get(
        f"/api/v1/districts/{built[0]}/leaderboard?metric=grad_rate&year=latest")
    assert response.status_code == 400


def test_unknown_metric_404(served):
    client, store, built, _bd = served
    response = client.get(
        f"/api/v1/districts/{built[0]}/leaderboard"
        f"?metric=bogus&year={max(store.years)}")
    assert response.status_code == 404
    assert response.json()["code"] == "not_found"
