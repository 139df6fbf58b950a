"""HTTP service exposing the pipeline's read views and editable documents.

The service never computes features from captures itself; it reads the
artifacts the pipeline wrote and recomputes only the scoring layer on
demand. Configuration writes are compare-and-swap guarded: a PUT carrying
an If-Match header is rejected unless the header equals the hash of the
currently stored calibration, so two editors cannot silently overwrite
each other.

Set CARENET_TOKEN to require a bearer token on every endpoint.
"""

from __future__ import annotations

import os
from datetime import date

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse

from . import pipeline
from .identity import IdentityError, IdentityResolver, mappings_from_doc, profiles_from_doc
from .params import ParameterError, parse_document
from .storage import Store

API_VERSION = "1"


def _auth(request: Request) -> None:
    token = os.environ.get("CARENET_TOKEN")
    if token and request.headers.get("authorization") != f"Bearer {token}":
        raise HTTPException(status_code=401, detail="missing or invalid bearer token")


def _parse_date(text: str | None, name: str) -> date:
    if not text:
        raise HTTPException(status_code=400, detail=f"query parameter {name!r} is required")
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"{name} must be YYYY-MM-DD, got {text!r}")


def create_app(store: Store | None = None) -> FastAPI:
    app = FastAPI(title="carenet", version=API_VERSION, dependencies=[Depends(_auth)])
    app.state.store = store or Store()

    def _store() -> Store:
        return app.state.store

    def _dataset(name: str | None) -> str:
        names = _store().list_datasets()
        if name is not None:
            if name not in names:
                raise HTTPException(status_code=404, detail=f"unknown dataset {name!r}")
            return name
        if len(names) == 1:
            return names[0]
        if not names:
            raise HTTPException(status_code=404, detail="no datasets have been ingested")
        raise HTTPException(
            status_code=400,
            detail=f"dataset parameter required; available: {', '.join(names)}",
        )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "api_version": API_VERSION}

    @app.get("/api/criteria")
    def criteria() -> dict:
        pset = _store().load_parameters()
        return {"config_hash": pset.config_hash, "criteria": pset.doc["criteria"]}

    @app.get("/api/criteria/{key}/likelihood")
    def likelihood(
        key: str,
        user: str,
        from_: str = Query(None, alias="from"),
        to: str = Query(None, alias="to"),
        dataset: str | None = None,
    ) -> dict:
        store = _store()
        ds = _dataset(dataset)
        pset = store.load_parameters()
        if key not in pset.criterion_keys():
            raise HTTPException(status_code=404, detail=f"unknown criterion {key!r}")
        first = _parse_date(from_, "from")
        last = _parse_date(to, "to")
        if last < first:
            raise HTTPException(status_code=400, detail="'to' precedes 'from'")
        return {
            "criterion": key,
            "label": pset.criterion(key).label,
            "dataset": ds,
            "user_id": user,
            "config_hash": pset.config_hash,
            "threshold": pset.gate.threshold,
            "from": first.isoformat(),
            "to": last.isoformat(),
            "days": pipeline.likelihood_view(store, ds, user, key, first, last),
        }

    @app.get("/api/gate")
    def gate(user: str, as_of: str | None = None, dataset: str | None = None) -> dict:
        store = _store()
        ds = _dataset(dataset)
        day = _parse_date(as_of, "as_of")
        view = pipeline.gate_view(store, ds, user, day, store.load_parameters())
        view["dataset"] = ds
        return view

    @app.get("/api/episode")
    def episode(user: str, as_of: str | None = None, dataset: str | None = None) -> dict:
        store = _store()
        ds = _dataset(dataset)
        day = _parse_date(as_of, "as_of")
        view = pipeline.episode_view(store, ds, user, day, store.load_parameters())
        view["dataset"] = ds
        return view

    @app.get("/api/features/{user}/{day}")
    def features(user: str, day: str, dataset: str | None = None) -> dict:
        store = _store()
        ds = _dataset(dataset)
        doc = pipeline.load_feature_doc(store, ds, user, _parse_date(day, "date"))
        if doc is None:
            raise HTTPException(
                status_code=404, detail=f"no features for {user} on {day} in {ds!r}"
            )
        doc["dataset"] = ds
        return doc

    @app.get("/api/config")
    def get_config() -> JSONResponse:
        pset = _store().load_parameters()
        return JSONResponse(
            {"config_hash": pset.config_hash, "warnings": pset.warnings, "config": pset.doc},
            headers={"ETag": pset.config_hash},
        )

    @app.put("/api/config")
    async def put_config(request: Request) -> JSONResponse:
        store = _store()
        current = store.load_parameters()
        expected = request.headers.get("if-match")
        if expected is not None and expected.strip('"') != current.config_hash:
            raise HTTPException(
                status_code=412,
                detail=f"config changed underneath you (now {current.config_hash})",
            )
        body = await request.json()
        try:
            pset = parse_document(body)
        except ParameterError as exc:
            return JSONResponse({"errors": exc.errors}, status_code=422)
        store.save_parameters(pset)
        return JSONResponse(
            {"config_hash": pset.config_hash, "warnings": pset.warnings},
            headers={"ETag": pset.config_hash},
        )

    @app.get("/api/profiles")
    def get_profiles() -> dict:
        from .identity import profiles_to_doc

        return profiles_to_doc(_store().load_profiles())

    @app.put("/api/profiles")
    async def put_profiles(request: Request) -> JSONResponse:
        store = _store()
        body = await request.json()
        try:
            profiles = profiles_from_doc(body)
            IdentityResolver(profiles, store.load_mappings())
        except IdentityError as exc:
            return JSONResponse({"errors": [{"path": "$", "message": str(exc)}]}, status_code=422)
        store.save_profiles(profiles)
        return JSONResponse({"users": len(profiles)})

    @app.get("/api/mappings")
    def get_mappings() -> dict:
        from .identity import mappings_to_doc

        return mappings_to_doc(_store().load_mappings())

    @app.put("/api/mappings")
    async def put_mappings(request: Request) -> JSONResponse:
        store = _store()
        body = await request.json()
        try:
            mappings = mappings_from_doc(body)
            IdentityResolver(store.load_profiles(), mappings)
        except IdentityError as exc:
            return JSONResponse({"errors": [{"path": "$", "message": str(exc)}]}, status_code=422)
        store.save_mappings(mappings)
        return JSONResponse({"mappings": len(mappings)})

    @app.post("/api/recompute")
    def recompute(dataset: str | None = None) -> dict:
        store = _store()
        ds = _dataset(dataset)
        report = pipeline.recompute_scores(store, ds)
        run_id = store.write_run_log(
            "recompute",
            {"dataset": ds, "config_hash": report.config_hash, "files": report.files},
        )
        return {
            "dataset": ds,
            "config_hash": report.config_hash,
            "users": report.users,
            "files": report.files,
            "run_id": run_id,
        }

    return app


def main() -> None:  # pragma: no cover - thin wrapper for `python -m carenet.service`
    import uvicorn

    uvicorn.run(create_app(), host="127.0.0.1", port=8787)


if __name__ == "__main__":  # pragma: no cover
    main()
