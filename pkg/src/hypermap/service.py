"""HTTP/JSON facade over the pipeline for the labeling UI.

Every endpoint is a thin adapter over module calls: responses are derivable
byte-for-byte from module outputs. Mutations (class add/remove, classify,
segment, map ingestion) share a single non-blocking writer gate; contention
answers 409 instead of queueing, which keeps the interactive loop honest.
Classification results are cached by (db version, algorithm, variance).
"""

from __future__ import annotations

import io
import json
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from PIL import Image

from .classify import ClassifyParams, ClassifyResult, classify, class_palette, label_map_png_bytes
from .cube import HyperCube, false_rgb, pixel_spectrum, Spectrum
from .errors import HypermapError, UnknownClassError
from .geometry import points_to_world
from .mapping import SemanticMap, export_ontology, features_to_geojson, ontology_to_dot
from .segmentation import SegmentResult, regions_to_geojson, segment
from .specdb import SimilarityAlgorithm, SpectralDatabase


class Busy(Exception):
    """A mutation was requested while another is in flight."""


@dataclass
class Session:
    """One loaded cube plus the mutable pipeline state behind the API."""

    cube: HyperCube
    db: SpectralDatabase
    resolution_m: float = 0.05
    threads: int | None = None
    label_result: ClassifyResult | None = None
    label_params: dict | None = None
    seg_result: SegmentResult | None = None
    seg_params: dict | None = None
    map: SemanticMap | None = None
    classify_cache: dict[tuple, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def gate(self):
        if not self.lock.acquire(blocking=False):
            raise Busy("another mutation is in progress")
        return self.lock


def _spectrum_payload(s: Spectrum) -> dict:
    return {
        "wavelengths_nm": [float(w) for w in s.wavelengths],
        "values": [float(v) for v in s.values],
    }


def create_app(session: Session) -> FastAPI:
    app = FastAPI(title="hypermap", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(Busy)
    async def busy_handler(request: Request, exc: Busy):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(UnknownClassError)
    async def unknown_handler(request: Request, exc: UnknownClassError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(HypermapError)
    async def module_error_handler(request: Request, exc: HypermapError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(IndexError)
    async def index_error_handler(request: Request, exc: IndexError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    cube = session.cube

    @app.get("/api/cube")
    def get_cube() -> dict:
        cam = cube.camera
        return {
            "width": cube.width,
            "height": cube.height,
            "bands": cube.bands,
            "wavelengths_nm": [float(w) for w in cube.wavelengths],
            "h_m": cam.h_m,
            "fov_deg": cam.fov_deg,
            "pose": {"x": cam.pose_x, "y": cam.pose_y, "yaw": cam.pose_yaw},
        }

    @app.get("/api/cube/rgb.png")
    def get_rgb() -> Response:
        buf = io.BytesIO()
        Image.fromarray(false_rgb(cube), mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/cube/spectrum")
    def get_spectrum(x: int, y: int) -> dict:
        return _spectrum_payload(pixel_spectrum(cube, x, y))

    @app.get("/api/classes")
    def get_classes() -> dict:
        return {
            "version": session.db.version,
            "classes": [
                {
                    "id": c.id,
                    "name": c.name,
                    "color": list(c.color),
                    "taxonomy": list(c.taxonomy_path),
                }
                for c in session.db.classes
            ],
        }

    @app.post("/api/classes")
    async def add_class(request: Request) -> dict:
        body = await request.json()
        name = body.get("name")
        if not name:
            raise ValueError("class name is required")
        color = body.get("color") or (31, 119, 180)
        taxonomy = body.get("taxonomy")
        if "spectrum" in body and body["spectrum"]:
            spec = body["spectrum"]
            reference = Spectrum(spec["wavelengths_nm"], spec["values"])
        elif "x" in body and "y" in body:
            reference = pixel_spectrum(cube, int(body["x"]), int(body["y"]))
        else:
            raise ValueError("provide either a spectrum or pixel coordinates (x, y)")
        gate = session.gate()
        try:
            cid = session.db.add_class(name, tuple(color), reference, taxonomy)
        finally:
            gate.release()
        return {"id": cid, "version": session.db.version}

    @app.delete("/api/classes/{class_id}")
    def delete_class(class_id: int) -> dict:
        gate = session.gate()
        try:
            session.db.remove_class(class_id)
        finally:
            gate.release()
        return {"removed": class_id, "version": session.db.version}

    @app.post("/api/classify")
    async def post_classify(request: Request) -> dict:
        body = await request.json()
        params = ClassifyParams(
            algorithm=SimilarityAlgorithm(body.get("algorithm", "sam")),
            variance=body.get("variance", 10.0),
        )
        key = (session.db.version, params.algorithm.value, params.variance)
        cached = session.classify_cache.get(key)
        if cached is not None:
            return {**cached, "cached": True}
        gate = session.gate()
        try:
            result = classify(cube, session.db, params, threads=session.threads)
            session.label_result = result
            session.label_params = {
                "algorithm": params.algorithm.value,
                "variance": params.variance,
                "db_version": session.db.version,
            }
            session.seg_result = None
            palette = class_palette(session.db)
            payload = {
                "counts": {
                    str(cid): {"name": palette[cid][0], "pixels": n}
                    for cid, n in sorted(result.counts.items())
                    if cid != 0
                },
                "unknown_count": result.unknown_count,
                "time_s": result.time_s,
                "params": session.label_params,
                "cached": False,
            }
            session.classify_cache = {key: {k: v for k, v in payload.items() if k != "cached"}}
        finally:
            gate.release()
        return payload

    @app.get("/api/labelmap.png")
    def get_labelmap() -> Response:
        if session.label_result is None:
            return JSONResponse(status_code=404, content={"error": "no classification yet"})
        png = label_map_png_bytes(session.label_result.label_map, class_palette(session.db))
        return Response(content=png, media_type="image/png")

    @app.post("/api/segment")
    async def post_segment(request: Request) -> dict:
        body = await request.json()
        if session.label_result is None:
            raise ValueError("classify before segmenting")
        min_area = float(body.get("min_area_m2", 0.0))
        thickness = float(body.get("thickness_px", 0.0))
        gate = session.gate()
        try:
            seg = segment(session.label_result.label_map, cube.camera, min_area, thickness)
            session.seg_result = seg
            session.seg_params = {"min_area_m2": min_area, "thickness_px": thickness}
            doc = regions_to_geojson(seg.regions, class_palette(session.db))
        finally:
            gate.release()
        return {"regions": doc, "times_s": seg.timings, "params": session.seg_params}

    @app.post("/api/map/frames")
    async def post_frame(request: Request) -> dict:
        body = await request.json()
        frame_id = str(body.get("frame_id", f"frame-{len(session.map.frames) if session.map else 0}"))
        if session.seg_result is None:
            raise ValueError("segment before ingesting a frame")
        gate = session.gate()
        try:
            if session.map is None:
                session.map = SemanticMap(resolution_m=session.resolution_m)
            session.map.ingest_frame(
                session.seg_result.regions, cube.camera, frame_id, session.db.classes
            )
            cells = session.map.non_unknown_cells()
        finally:
            gate.release()
        return {"frame_id": frame_id, "frames": list(session.map.frames), "known_cells": cells}

    @app.get("/api/map/features")
    def get_features() -> dict:
        if session.map is None:
            return {"type": "FeatureCollection", "features": []}
        return features_to_geojson(session.map, session.map.extract_features())

    @app.get("/api/map/ontology.dot")
    def get_ontology() -> PlainTextResponse:
        if session.map is None:
            return PlainTextResponse("digraph ontology {\n}\n")
        doc = export_ontology(session.map, session.map.extract_features())
        return PlainTextResponse(ontology_to_dot(doc))

    return app
