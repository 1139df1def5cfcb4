"""HTTP API: upload ingestion plus read-only analytics endpoints.

Routes (schemas documented in docs/api.md):
    POST /v1/traces                      body = binary envelope
    GET  /v1/records
    GET  /v1/analytics/modal-split
    GET  /v1/analytics/od
    GET  /v1/analytics/carbon
    GET  /v1/analytics/trips

If MOBILISCOPE_TOKEN is set, every route requires `Authorization: Bearer`.
"""

from __future__ import annotations

import os
from datetime import date as Date
from typing import Optional, Sequence

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import analytics
from .analytics import AnalyticsFilter, RequestError
from .model import RefinedMode, Zone
from .privacy import IntegrityError, decode_envelope
from .store import IngestionService

MAX_RECORD_PAGE = 500


def create_app(service: IngestionService, zones: Sequence[Zone]) -> FastAPI:
    app = FastAPI(title="mobiliscope", docs_url=None, redoc_url=None)
    zones = list(zones)
    zone_by_id = {z.zone_id: z for z in zones}
    token = os.environ.get("MOBILISCOPE_TOKEN")

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if token and request.headers.get("authorization") != f"Bearer {token}":
            return JSONResponse({"error": "unauthorized"}, status_code=401)
        return await call_next(request)

    @app.exception_handler(RequestError)
    async def bad_request(_request: Request, exc: RequestError):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.post("/v1/traces")
    async def post_trace(request: Request):
        body = await request.body()
        try:
            envelope = decode_envelope(body)
        except IntegrityError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        result = service.ingest(envelope)
        if not result.accepted:
            return JSONResponse({"error": result.reason}, status_code=400)
        return {"envelope_id": result.envelope_id, "duplicate": result.duplicate}

    @app.get("/v1/records")
    async def get_records(
        request: Request,
        cursor: Optional[str] = None,
        limit: int = 100,
    ):
        params = request.query_params
        date_from = _parse_date(params.get("from"))
        date_to = _parse_date(params.get("to"))
        pseudonym = params.get("pseudonym")
        if not 1 <= limit <= MAX_RECORD_PAGE:
            raise RequestError(f"limit must be in [1, {MAX_RECORD_PAGE}]")
        start = 0
        if cursor is not None:
            if not cursor.isdigit():
                raise RequestError(f"malformed cursor: {cursor!r}")
            start = int(cursor)
        rows = service.store.scan(date_from, date_to, pseudonym)
        page = rows[start : start + limit]
        records = [
            {
                "envelope_id": rec.envelope_id,
                "date": rec.date.isoformat(),
                "pseudonym": rec.pseudonym,
                "trip_count": len(trips),
            }
            for rec, trips in page
        ]
        next_cursor = str(start + limit) if start + limit < len(rows) else None
        return {"records": records, "next_cursor": next_cursor}

    @app.get("/v1/analytics/modal-split")
    async def get_modal_split(request: Request):
        flt = _parse_filter(request)
        split = analytics.modal_split(service.store, flt)
        return {
            "by_mode": {
                mode.value: {
                    "segment_count": agg.segment_count,
                    "total_distance_m": agg.total_distance_m,
                    "share": agg.share,
                    "count_share": agg.count_share,
                }
                for mode, agg in split.by_mode.items()
            }
        }

    @app.get("/v1/analytics/od")
    async def get_od(request: Request):
        flt = _parse_filter(request)
        requested = request.query_params.get("zones")
        if requested:
            try:
                selected = [zone_by_id[zid] for zid in requested.split(",")]
            except KeyError as exc:
                raise RequestError(f"unknown zone {exc.args[0]}") from None
        else:
            selected = zones
        matrix = analytics.od_matrix(service.store, selected, flt)
        ids = list(matrix.zones)
        return {
            "zones": ids,
            "cells": [[matrix.cells[(o, d)] for d in ids] for o in ids],
            "unzoned": matrix.unzoned,
        }

    @app.get("/v1/analytics/carbon")
    async def get_carbon(request: Request):
        flt = _parse_filter(request)
        total, by_mode = analytics.carbon_total(service.store, flt)
        return {
            "total_g": total,
            "by_mode": {m.value: g for m, g in by_mode.items()},
        }

    @app.get("/v1/analytics/trips")
    async def get_trips(request: Request, cursor: Optional[str] = None, page_size: int = 100):
        flt = _parse_filter(request)
        trips, next_cursor = analytics.trips_page(service.store, flt, cursor, page_size)
        return {"trips": trips, "next_cursor": next_cursor}

    return app


def _parse_date(token: Optional[str]) -> Optional[Date]:
    if token is None:
        return None
    try:
        return Date.fromisoformat(token)
    except ValueError:
        raise RequestError(f"bad date: {token}") from None


def _parse_filter(request: Request) -> AnalyticsFilter:
    params = request.query_params
    modes = None
    if params.get("modes"):
        try:
            modes = frozenset(RefinedMode(m) for m in params["modes"].split(","))
        except ValueError:
            raise RequestError(f"bad modes: {params['modes']}") from None
    zone_filter = None
    if params.get("zone_filter"):
        zone_filter = frozenset(params["zone_filter"].split(","))
    return AnalyticsFilter(
        date_from=_parse_date(params.get("from")),
        date_to=_parse_date(params.get("to")),
        modes=modes,
        zones=zone_filter,
        tod_from_s=_parse_tod(params.get("tod_from")),
        tod_to_s=_parse_tod(params.get("tod_to")),
        pseudonym=params.get("pseudonym"),
    )


def _parse_tod(token: Optional[str]) -> Optional[int]:
    if token is None:
        return None
    if ":" in token:
        hh, mm = token.split(":")
        return int(hh) * 3600 + int(mm) * 60
    if not token.isdigit():
        raise RequestError(f"bad time-of-day: {token}")
    return int(token)
