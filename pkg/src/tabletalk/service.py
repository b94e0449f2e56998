"""HTTP interface over the pipeline.

Endpoints: dataset upload and listing, per-dataset profile, question
answering, batch evaluation of prediction files, and a health probe. Every
error body has the shape {"error": {"code", "message"}}. Query responses
are serialized with sorted keys so identical offline requests produce
byte-identical bodies.
"""
from __future__ import annotations

import json
import os
from typing import Optional

from fastapi import FastAPI, File, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import evalkit, pipeline, translate
from .config import ServiceConfig
from .dataprofile import ProfileError, render_ddl
from .errors import PipelineError
from .registry import DatasetRegistry, UnknownDataset


class QueryRequest(BaseModel):
    question: str
    chart_hint: Optional[str] = None
    offline: bool = False


def _error_json(exc: PipelineError, status: int) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": exc.payload()})


def _sorted_json(payload: dict, status: int = 200) -> Response:
    body = json.dumps(payload, sort_keys=True)
    return Response(content=body, status_code=status,
                    media_type="application/json")


def create_app(config: ServiceConfig,
               completer=None,
               insights_completer=None) -> FastAPI:
    """Build the application; completers may be injected for testing.

    Without an injected completer, the model route activates only when the
    configured API key variable is set; otherwise queries fall back to the
    offline translator.
    """
    app = FastAPI(title="tabletalk", version="0.1.0")
    registry = DatasetRegistry(config.data_dir)
    app.state.registry = registry
    app.state.config = config

    def pick_completer():
        if completer is not None:
            return completer
        if os.environ.get(config.llm.api_key_env):
            return translate.http_completer(config.llm)
        return None

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/datasets", status_code=201)
    async def upload_dataset(file: UploadFile = File(...)):
        raw = await file.read()
        try:
            entry = registry.add(file.filename or "upload.csv", raw)
        except ProfileError as exc:
            return _error_json(exc, 400)
        return JSONResponse(status_code=201, content=entry)

    @app.get("/datasets")
    def list_datasets() -> dict:
        return {"datasets": registry.entries()}

    @app.get("/datasets/{dataset_id}/profile")
    def dataset_profile(dataset_id: str):
        try:
            dataset = registry.dataset(dataset_id)
        except UnknownDataset as exc:
            return _error_json(exc, 404)
        profile = dataset.profile
        return {
            "id": dataset_id,
            "profile": profile.to_dict(),
            "ddl": render_ddl(profile),
        }

    @app.post("/datasets/{dataset_id}/query")
    def query_dataset(dataset_id: str, request: QueryRequest):
        try:
            dataset = registry.dataset(dataset_id)
        except UnknownDataset as exc:
            return _error_json(exc, 404)
        response = pipeline.run_pipeline(
            dataset,
            request.question,
            chart_hint=request.chart_hint,
            offline=request.offline,
            completer=None if request.offline else pick_completer(),
            insights_completer=None if request.offline else insights_completer,
        )
        payload = response.to_dict()
        return _sorted_json(payload, status=200 if response.ok else 422)

    @app.post("/eval/run")
    async def eval_run(file: UploadFile = File(...),
                       threshold: float = evalkit.BLEU_MATCH_THRESHOLD):
        raw = await file.read()
        try:
            pairs = evalkit.load_pairs(raw.decode("utf-8", errors="replace"))
            summary = evalkit.run_eval_suite(pairs, bleu_threshold=threshold)
        except evalkit.EvalError as exc:
            return _error_json(exc, 400)
        return summary.to_dict()

    ui_dir = config.ui_dir
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
