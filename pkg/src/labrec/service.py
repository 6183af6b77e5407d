"""HTTP facade over a fitted model.

The app is built around one immutable model snapshot captured at
creation time, so concurrent requests are pure functions of (model,
request) and never observe partial state. Responses echo enough model
metadata for clients to display provenance.

Endpoints:
    POST /v1/recommendations   ranked suggestions for a partial order
    GET  /v1/items             typeahead lookup over the vocabulary
    GET  /v1/model             hyper-parameters and matrix shape
    GET  /v1/health            liveness, model or not

Error bodies carry a machine-readable ``code`` inside FastAPI's
``detail`` envelope: EMPTY_QUERY (400) when no known item remains after
trimming, MODEL_NOT_LOADED (503) when the app was built without a
model. Malformed bodies are FastAPI's standard 422.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .errors import EmptyQueryError
from .persistence import FORMAT_VERSION
from .recommender import DEFAULT_K, FittedModel, recommend


class RecommendRequest(BaseModel):
    items: list[str]
    k: int = Field(default=DEFAULT_K, ge=1)
    exclude_selected: bool = True


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(
    model: FittedModel | None = None,
    *,
    enable_cors: bool = False,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service around one already-loaded model snapshot.

    ``static_dir``, when given and existing, is mounted at ``/`` after
    the API routes so a built UI bundle ships in the same process.
    """
    app = FastAPI(title="labrec", docs_url=None, redoc_url=None)
    app.state.model = model

    if enable_cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def _require_model() -> FittedModel:
        if model is None:
            raise _error(503, "MODEL_NOT_LOADED", "no model is loaded")
        return model

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/v1/model")
    def model_info() -> dict:
        snapshot = _require_model()
        return {
            "metric": snapshot.params.metric.value,
            "s": snapshot.params.s,
            "m": snapshot.m,
            "n": snapshot.n,
            "format_version": FORMAT_VERSION,
        }

    @app.get("/v1/items")
    def search_items(
        q: str = Query(default=""),
        limit: int = Query(default=20, ge=1),
    ) -> list[dict]:
        snapshot = _require_model()
        needle = q.strip().lower()
        if not needle:
            chosen = snapshot.vocabulary.items[:limit]
            return [{"item_id": it.item_id, "name": it.name} for it in chosen]
        ranked = []
        for it in snapshot.vocabulary:
            positions = [
                pos
                for pos in (it.name.lower().find(needle), it.item_id.lower().find(needle))
                if pos >= 0
            ]
            if positions:
                ranked.append((min(positions), it.name, it.item_id, it))
        ranked.sort(key=lambda entry: entry[:3])
        return [
            {"item_id": it.item_id, "name": it.name} for _, _, _, it in ranked[:limit]
        ]

    @app.post("/v1/recommendations")
    def recommendations(request: RecommendRequest) -> dict:
        snapshot = _require_model()
        try:
            ranked, unknown = recommend(
                snapshot,
                request.items,
                k=request.k,
                exclude_query_items=request.exclude_selected,
            )
        except EmptyQueryError as exc:
            raise _error(400, "EMPTY_QUERY", str(exc)) from exc
        neighbors = max(ranked.neighbors_used, 1)
        return {
            "recommendations": [
                {
                    "item_id": item.item_id,
                    "name": item.name,
                    "score": count / neighbors,
                }
                for item, count in ranked.entries
            ],
            "unknown_items": unknown,
            "model": {
                "metric": snapshot.params.metric.value,
                "s": snapshot.params.s,
            },
        }

    if static_dir is not None:
        bundle = Path(static_dir)
        if bundle.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=bundle, html=True), name="ui")

    return app
