"""HTTP backend of the ICU monitor: cohort series, predictions, events,
and clinician annotations with schema-validated metadata."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from jsonschema import Draft7Validator
from pydantic import BaseModel, Field

from respews.service.datadir import DataDir, decimate_minmax
from respews.service.store import AnnotationNotFound, AnnotationStore, VersionConflict

DEFAULT_ANNOTATION_TYPES = [
    {
        "type": "note",
        "default_color": "#e0b000",
        "schema": {
            "type": "object",
            "properties": {"text": {"type": "string"}},
            "required": ["text"],
            "additionalProperties": False,
        },
    },
    {
        "type": "wrong_prediction",
        "default_color": "#e05555",
        "schema": {
            "type": "object",
            "properties": {
                "kind": {"type": "string", "enum": ["false_alarm", "missed_event", "other"]},
                "comment": {"type": "string"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    },
    {
        "type": "artifact",
        "default_color": "#8888cc",
        "schema": {
            "type": "object",
            "properties": {
                "channel": {"type": "string"},
                "reason": {"type": "string"},
            },
            "required": ["channel"],
            "additionalProperties": False,
        },
    },
]


class AnnotationCreate(BaseModel):
    type: str
    start_s: int
    end_s: int
    label: str = ""
    metadata: dict = Field(default_factory=dict)
    color: Optional[str] = None


class AnnotationUpdate(BaseModel):
    version: int
    type: Optional[str] = None
    start_s: Optional[int] = None
    end_s: Optional[int] = None
    label: Optional[str] = None
    metadata: Optional[dict] = None
    color: Optional[str] = None


def _load_annotation_types(data_dir: Path) -> dict[str, dict]:
    path = data_dir / "annotation_types.json"
    if not path.exists():
        path.write_text(json.dumps(DEFAULT_ANNOTATION_TYPES, indent=2) + "\n")
    types = {t["type"]: t for t in json.loads(path.read_text())}
    for t in types.values():
        Draft7Validator.check_schema(t.get("schema", {}))
    return types


def create_app(
    data_dir: str | Path,
    grid_step: int = 300,
    admission_epoch: str = "2024-01-01T00:00:00+00:00",
    ui_dir: str | Path | None = None,
) -> FastAPI:
    data_dir = Path(data_dir)
    data = DataDir(data_dir, grid_step, admission_epoch)
    store = AnnotationStore(data_dir / "annotations")
    ann_types = _load_annotation_types(data_dir)

    app = FastAPI(title="respews monitor", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _check_annotation(payload: AnnotationCreate | AnnotationUpdate, existing=None):
        errors = []
        a_type = payload.type if payload.type is not None else existing.type
        start_s = payload.start_s if payload.start_s is not None else existing.start_s
        end_s = payload.end_s if payload.end_s is not None else existing.end_s
        metadata = payload.metadata if payload.metadata is not None else existing.metadata
        if a_type not in ann_types:
            errors.append({"field": "type", "message": f"unknown annotation type {a_type!r}"})
        if end_s < start_s:
            errors.append({"field": "end_s", "message": f"end_s {end_s} before start_s {start_s}"})
        if a_type in ann_types:
            validator = Draft7Validator(ann_types[a_type].get("schema", {}))
            for err in sorted(validator.iter_errors(metadata), key=lambda e: list(e.path)):
                field = ".".join(str(p) for p in err.path) or "metadata"
                errors.append({"field": f"metadata.{field}", "message": err.message})
        if errors:
            raise HTTPException(status_code=422, detail=errors)

    @app.get("/api/patients")
    def list_patients():
        return data.listing()

    @app.get("/api/patients/{stay_id}")
    def patient_detail(stay_id: str):
        if stay_id not in data.patients:
            raise HTTPException(404, detail=f"unknown stay {stay_id!r}")
        stay = data.stay(stay_id)
        channels = [
            {"channel": var, "n_raw": len(stay.raw[var]), "first_s": int(stay.raw[var].times[0]),
             "last_s": int(stay.raw[var].times[-1])}
            for var in sorted(stay.raw)
        ]
        return {
            "stay_id": stay_id,
            "admitted_at": data.patients[stay_id].admitted_at,
            "grid_step": stay.grid_step,
            "length_s": stay.length_s,
            "statics": data.statics(stay_id),
            "channels": channels,
            "has_predictions": data.predictions(stay_id) is not None,
            "n_events": len(data.events(stay_id)),
        }

    @app.get("/api/patients/{stay_id}/series")
    def series(
        stay_id: str,
        channels: str,
        from_s: Optional[int] = None,
        to_s: Optional[int] = None,
        max_points: int = Query(default=50000, ge=2),
        mode: str = Query(default="grid", pattern="^(grid|raw)$"),
    ):
        if stay_id not in data.patients:
            raise HTTPException(404, detail=f"unknown stay {stay_id!r}")
        stay = data.stay(stay_id)
        out = {}
        for channel in [c for c in channels.split(",") if c]:
            if mode == "raw":
                series_data = stay.raw.get(channel)
                t = series_data.times if series_data is not None else np.array([], dtype=np.int64)
                v = series_data.values if series_data is not None else np.array([])
            else:
                v = stay.channel(channel)
                t = stay.grid_times
                defined = np.isfinite(v)
                t, v = t[defined], v[defined]
            if from_s is not None:
                keep = t >= from_s
                t, v = t[keep], v[keep]
            if to_s is not None:
                keep = t <= to_s
                t, v = t[keep], v[keep]
            t, v = decimate_minmax(t, v, max_points)
            out[channel] = {"time_s": t.tolist(), "value": v.tolist(), "n": len(t)}
        return {"stay_id": stay_id, "mode": mode, "grid_step": stay.grid_step, "channels": out}

    @app.get("/api/patients/{stay_id}/predictions")
    def predictions(stay_id: str):
        if stay_id not in data.patients:
            raise HTTPException(404, detail=f"unknown stay {stay_id!r}")
        pred = data.predictions(stay_id)
        if pred is None:
            raise HTTPException(404, detail=f"no predictions artifact for stay {stay_id!r}")
        times, scores = pred
        return {"stay_id": stay_id, "time_s": times, "score": scores}

    @app.get("/api/patients/{stay_id}/events")
    def events(stay_id: str):
        if stay_id not in data.patients:
            raise HTTPException(404, detail=f"unknown stay {stay_id!r}")
        return data.events(stay_id)

    @app.get("/api/patients/{stay_id}/annotations")
    def list_annotations(
        stay_id: str,
        type: Optional[str] = None,
        from_s: Optional[int] = None,
        to_s: Optional[int] = None,
        sort_by: str = "start_s",
    ):
        if stay_id not in data.patients:
            raise HTTPException(404, detail=f"unknown stay {stay_id!r}")
        overlaps = (from_s, to_s) if from_s is not None and to_s is not None else None
        return [a.to_dict() for a in store.list(stay_id, type, overlaps, sort_by)]

    @app.post("/api/patients/{stay_id}/annotations", status_code=201)
    def create_annotation(stay_id: str, payload: AnnotationCreate):
        if stay_id not in data.patients:
            raise HTTPException(404, detail=f"unknown stay {stay_id!r}")
        _check_annotation(payload)
        ann = store.create(
            stay_id, payload.type, payload.start_s, payload.end_s,
            payload.label, payload.metadata, payload.color,
        )
        return ann.to_dict()

    @app.get("/api/annotations/{annotation_id}")
    def get_annotation(annotation_id: str):
        try:
            return store.get(annotation_id).to_dict()
        except AnnotationNotFound:
            raise HTTPException(404, detail=f"unknown annotation {annotation_id!r}")

    @app.put("/api/annotations/{annotation_id}")
    def update_annotation(annotation_id: str, payload: AnnotationUpdate):
        try:
            existing = store.get(annotation_id)
        except AnnotationNotFound:
            raise HTTPException(404, detail=f"unknown annotation {annotation_id!r}")
        _check_annotation(payload, existing)
        try:
            ann = store.update(
                annotation_id,
                payload.version,
                type=payload.type,
                start_s=payload.start_s,
                end_s=payload.end_s,
                label=payload.label,
                metadata=payload.metadata,
                color=payload.color,
            )
        except VersionConflict as exc:
            raise HTTPException(409, detail=str(exc))
        except AnnotationNotFound:
            raise HTTPException(404, detail=f"unknown annotation {annotation_id!r}")
        return ann.to_dict()

    @app.delete("/api/annotations/{annotation_id}", status_code=204)
    def delete_annotation(annotation_id: str):
        try:
            store.delete(annotation_id)
        except AnnotationNotFound:
            raise HTTPException(404, detail=f"unknown annotation {annotation_id!r}")

    @app.get("/api/annotation-types")
    def annotation_types():
        return list(ann_types.values())

    @app.get("/api/export/annotations")
    def export_annotations():
        return store.export_all()

    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
