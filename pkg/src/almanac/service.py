"""Read-only HTTP facade over a built store and its bundle files.

The store is loaded once as an immutable snapshot; bundles are served
pre-built from disk. Data endpoints reuse the workbook operations directly,
so a response body is exactly the library result's canonical serialization.
Unknown query parameters are rejected (400) to keep behavior testable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import metrics, workbook
from .errors import (
    AlmanacError,
    CorpusIOError,
    IneligibleDistrictError,
    NotFoundError,
)
from .model import Store, Subgroup, metric_catalog
from .storage import read_store

ALL_SUBGROUPS = tuple(s.value for s in Subgroup)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"status": self.status, "code": self.code,
                     "message": self.message})


def _canonical_json(payload: Any) -> Response:
    return Response(
        content=json.dumps(payload, sort_keys=True, separators=(",", ":"),
                           allow_nan=False),
        media_type="application/json")


def _check_params(request: Request, allowed: set[str]) -> None:
    unknown = set(request.query_params) - allowed
    if unknown:
        raise ApiError(400, "bad_param",
                       f"unknown query parameters: {', '.join(sorted(unknown))}")


def _require(request: Request, name: str) -> str:
    value = request.query_params.get(name)
    if value is None or value == "":
        raise ApiError(400, "bad_param", f"missing query parameter {name!r}")
    return value


def _int_param(raw: str, name: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ApiError(400, "bad_param", f"{name} must be an integer, got {raw!r}")


def create_app(store_dir: Path, bundles_dir: Optional[Path] = None,
               ui_dir: Optional[Path] = None,
               store: Optional[Store] = None) -> FastAPI:
    store_dir = Path(store_dir)
    bundles_dir = Path(bundles_dir) if bundles_dir else store_dir / "bundles"
    snapshot = store if store is not None else read_store(store_dir)

    app = FastAPI(title="district almanac", openapi_url=None, docs_url=None,
                  redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"],
        allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def on_api_error(_request, exc: ApiError):
        return exc.response()

    @app.exception_handler(AlmanacError)
    async def on_almanac_error(_request, exc: AlmanacError):
        return ApiError(500, "internal", str(exc)).response()

    def district_or_404(district_id: str):
        if district_id not in snapshot.districts:
            raise ApiError(404, "not_found", f"unknown district {district_id!r}")

    def subgroup_or_400(raw: str) -> str:
        if raw not in ALL_SUBGROUPS:
            raise ApiError(400, "bad_param", f"unknown subgroup {raw!r}")
        return raw

    @app.get("/api/v1/districts")
    def districts(request: Request):
        _check_params(request, set())
        rows = []
        for district_id in sorted(snapshot.districts):
            d = snapshot.districts[district_id]
            county = snapshot.counties.get(d.county_id)
            rows.append({
                "id": d.id,
                "name": d.name,
                "grade_span": d.grade_span.value,
                "county": county.name if county else d.county_id,
                "funding_type": d.funding_type.value,
            })
        return _canonical_json(rows)

    @app.get("/api/v1/metrics")
    def metrics_endpoint(request: Request):
        _check_params(request, set())
        return _canonical_json([m.to_dict() for m in metric_catalog()])

    @app.get("/api/v1/districts/{district_id}/bundle")
    def bundle(district_id: str, request: Request):
        _check_params(request, set())
        district_or_404(district_id)
        path = bundles_dir / workbook.bundle_filename(district_id)
        if not path.is_file():
            raise ApiError(404, "ineligible",
                           f"no bundle for district {district_id!r}")
        return FileResponse(path, media_type="application/json")

    @app.get("/api/v1/districts/{district_id}/peers")
    def peers_endpoint(district_id: str, request: Request):
        _check_params(request, set())
        district_or_404(district_id)
        try:
            ps = workbook._cached_peer_set(snapshot, district_id, snapshot.config)
        except IneligibleDistrictError as exc:
            raise ApiError(404, "ineligible", str(exc))
        return _canonical_json(ps.to_dict())

    @app.get("/api/v1/districts/{district_id}/leaderboard")
    def leaderboard_endpoint(district_id: str, request: Request):
        _check_params(request, {"metric", "year", "subgroup"})
        district_or_404(district_id)
        metric = _require(request, "metric")
        year = _int_param(_require(request, "year"), "year")
        subgroup = subgroup_or_400(request.query_params.get("subgroup", "all"))
        try:
            board = workbook.leaderboard(snapshot, district_id, metric, year,
                                         subgroup)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        except IneligibleDistrictError as exc:
            raise ApiError(404, "ineligible", str(exc))
        return _canonical_json(board.to_dict())

    @app.get("/api/v1/districts/{district_id}/scatter")
    def scatter_endpoint(district_id: str, request: Request):
        _check_params(request, {"x", "y", "year", "subgroup", "scope"})
        district_or_404(district_id)
        x_metric = _require(request, "x")
        y_metric = _require(request, "y")
        year = _int_param(_require(request, "year"), "year")
        subgroup = subgroup_or_400(request.query_params.get("subgroup", "all"))
        scope = request.query_params.get("scope", "peers")
        if scope not in ("peers", "all"):
            raise ApiError(400, "bad_param",
                           f"scope must be 'peers' or 'all', got {scope!r}")
        try:
            if scope == "peers":
                ps = workbook._cached_peer_set(snapshot, district_id,
                                               snapshot.config)
                districts = [district_id] + ps.member_ids()
            else:
                districts = sorted(snapshot.districts)
            series = workbook.scatter(snapshot, districts, x_metric, y_metric,
                                      year, subgroup)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        except IneligibleDistrictError as exc:
            raise ApiError(404, "ineligible", str(exc))
        return _canonical_json(series.to_dict())

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(store_dir: Path, port: int, ui_dir: Optional[Path] = None,
          bundles_dir: Optional[Path] = None, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted; raises CorpusIOError on a bad port."""
    import uvicorn

    app = create_app(store_dir, bundles_dir=bundles_dir, ui_dir=ui_dir)
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    try:
        server.run()
    except SystemExit as exc:
        raise CorpusIOError(f"server failed to start on port {port}: {exc}")
