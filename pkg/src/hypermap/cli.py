"""Command-line driver for each pipeline stage plus the bench harness.

Exit codes: 0 success, 1 pipeline error (with a diagnostic on stderr),
2 bad flags (argparse usage error). All randomness flows from --seed and
worker counts from --threads (env HYPERMAP_THREADS as fallback), so
identical invocations produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import scene as scene_mod
from .classify import ClassifyParams, classify, class_palette, save_label_map
from .cube import HyperCube, load_cube, save_cube, false_rgb
from .errors import HypermapError
from .geometry import points_to_world
from .mapping import SemanticMap, export_ontology, features_to_geojson, ontology_to_dot
from .segmentation import (
    STAGE_APPROX,
    STAGE_CONTOUR,
    STAGE_EDGE,
    STAGE_FILTER,
    regions_to_geojson,
    save_edge_png,
    segment,
)
from .specdb import SimilarityAlgorithm, load_db, save_db

STAGE_CLASSIFY = "Classification Algorithm (SAM)"
STAGE_TOTAL = "Total Time"
BENCH_COLUMNS = (STAGE_CLASSIFY, STAGE_EDGE, STAGE_CONTOUR, STAGE_FILTER, STAGE_APPROX, STAGE_TOTAL)


def _threads_from(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("HYPERMAP_THREADS")
    return int(env) if env else None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypermap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="synthesize a scene: cube + ground truth + database")
    p.add_argument("--spec", required=True, help="scene JSON path or bundled name (cornfields, runtime-add)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--bands", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--dtype", choices=("u8", "u16", "f32"), default="f32")
    _add_common(p)

    p = sub.add_parser("classify", help="classify a cube against a database")
    p.add_argument("--cube", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--variance", type=float, required=True)
    p.add_argument("--algorithm", choices=("sam", "euclidean"), default="sam")
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("segment", help="classify then extract/filter/approximate polygons")
    p.add_argument("--cube", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--variance", type=float, required=True)
    p.add_argument("--algorithm", choices=("sam", "euclidean"), default="sam")
    p.add_argument("--min-area-m2", type=float, default=0.0)
    p.add_argument("--thickness-px", type=float, default=0.0)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("map", help="run the pipeline over frames and build the semantic map")
    p.add_argument("--frames", nargs="+", required=True, help="HSC cube paths in arrival order")
    p.add_argument("--db", required=True)
    p.add_argument("--variance", type=float, required=True)
    p.add_argument("--algorithm", choices=("sam", "euclidean"), default="sam")
    p.add_argument("--min-area-m2", type=float, default=0.0)
    p.add_argument("--thickness-px", type=float, default=0.0)
    p.add_argument("--resolution-m", type=float, default=0.05)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("bench", help="print a stage-timing table at full sensor scale")
    p.add_argument("--classes", type=int, choices=(2, 5), default=None,
                   help="run one row (2 or 5 classes); default runs both")
    p.add_argument("--width", type=int, default=1886)
    p.add_argument("--height", type=int, default=1886)
    p.add_argument("--bands", type=int, default=164)
    p.add_argument("--variance", type=float, default=10.0)
    p.add_argument("--min-area-m2", type=float, default=0.2)
    p.add_argument("--thickness-px", type=float, default=2.0)
    _add_common(p)

    p = sub.add_parser("serve", help="serve the HTTP API for the labeling UI")
    p.add_argument("--cube", required=True)
    p.add_argument("--db", default=None, help="optional database JSON to preload")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--resolution-m", type=float, default=0.05)
    _add_common(p)

    return parser


def _cmd_gen_scene(args) -> int:
    spec = scene_mod.load_scene_spec(args.spec)
    overrides = {
        k: v
        for k, v in (
            ("width", args.width),
            ("height", args.height),
            ("bands", args.bands),
            ("noise_sigma", args.noise_sigma),
        )
        if v is not None
    }
    if overrides or args.seed != spec.seed:
        name = str(args.spec)
        builder = {
            "cornfields": scene_mod.cornfields_spec,
            "runtime-add": scene_mod.runtime_add_spec,
        }.get(name)
        if builder is not None:
            spec = builder(
                width=overrides.get("width", spec.width),
                height=overrides.get("height", spec.height),
                bands=overrides.get("bands", spec.bands),
                noise_sigma=overrides.get("noise_sigma", spec.noise_sigma),
                illumination=spec.illumination,
                seed=args.seed,
                camera=spec.camera,
            )
        elif overrides:
            raise HypermapError("size overrides are only supported for bundled scene names")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    cube, truth, db = scene_mod.synthesize(spec)
    save_cube(cube, out / "cube.hsc", dtype=args.dtype)
    palette = class_palette(db)
    save_label_map(truth, palette, out / "truth.png", out / "truth.json", out / "truth_color.png")
    save_db(db, out / "db.json")
    (out / "scene.json").write_text(json.dumps(scene_mod.scene_spec_to_json(spec), indent=2) + "\n")
    from PIL import Image

    Image.fromarray(false_rgb(cube), mode="RGB").save(out / "rgb.png")
    print(f"scene written to {out} in {time.perf_counter() - t0:.4f} s")
    return 0


def _cmd_classify(args) -> int:
    cube = load_cube(args.cube)
    db = load_db(args.db)
    params = ClassifyParams(algorithm=SimilarityAlgorithm(args.algorithm), variance=args.variance)
    result = classify(cube, db, params, threads=_threads_from(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    palette = class_palette(db)
    save_label_map(
        result.label_map, palette, out / "labelmap.png", out / "labelmap.json", out / "labelmap_color.png"
    )
    print(f"{STAGE_CLASSIFY}: {result.time_s:.4f} s")
    for cid, count in sorted(result.counts.items()):
        print(f"  {palette.get(cid, (str(cid), None))[0]}: {count}")
    return 0


def _cmd_segment(args) -> int:
    cube = load_cube(args.cube)
    db = load_db(args.db)
    params = ClassifyParams(algorithm=SimilarityAlgorithm(args.algorithm), variance=args.variance)
    result = classify(cube, db, params, threads=_threads_from(args))
    seg = segment(result.label_map, cube.camera, args.min_area_m2, args.thickness_px)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = regions_to_geojson(seg.regions, class_palette(db))
    (out / "regions.geojson").write_text(json.dumps(doc, indent=2) + "\n")
    save_edge_png(seg.edges, out / "edges.png")
    print(f"{STAGE_CLASSIFY}: {result.time_s:.4f} s")
    for stage, t in seg.timings.items():
        print(f"{stage}: {t:.4f} s")
    total = result.time_s + sum(seg.timings.values())
    print(f"{STAGE_TOTAL}: {total:.4f} s")
    return 0


def _cmd_map(args) -> int:
    db = load_db(args.db)
    params = ClassifyParams(algorithm=SimilarityAlgorithm(args.algorithm), variance=args.variance)
    smap = SemanticMap(resolution_m=args.resolution_m)
    threads = _threads_from(args)
    for frame_path in args.frames:
        cube = load_cube(frame_path)
        result = classify(cube, db, params, threads=threads)
        seg = segment(result.label_map, cube.camera, args.min_area_m2, args.thickness_px)
        smap.ingest_frame(seg.regions, cube.camera, Path(frame_path).stem, db.classes)
        print(f"ingested {frame_path}: classify {result.time_s:.4f} s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    smap.save(out / "map")
    features = smap.extract_features()
    (out / "features.geojson").write_text(
        json.dumps(features_to_geojson(smap, features), indent=2) + "\n"
    )
    doc = export_ontology(smap, features)
    (out / "ontology.json").write_text(json.dumps(doc, indent=2) + "\n")
    (out / "ontology.dot").write_text(ontology_to_dot(doc))
    print(f"map with {len(features)} features written to {out}")
    return 0


def _bench_cube(width, height, bands, seed) -> HyperCube:
    """Noiseless strip scene, quantized through 8 bits like the sensor path.

    Quantization runs in place, block-wise: the full-resolution cube is
    2.3 GB as float32 and a second copy would not fit small machines.
    """
    spec = scene_mod.cornfields_spec(width=width, height=height, bands=bands, seed=seed)
    cube, _, _ = scene_mod.synthesize(spec)
    flat = cube.data.reshape(-1)
    step = 1 << 22
    for a in range(0, flat.size, step):
        seg = flat[a : a + step]
        seg *= np.float32(255.0)
        seg += np.float32(0.5)
        np.floor(seg, out=seg)
        seg /= np.float32(255.0)
    return cube


def _bench_db(bands: int):
    from .cube import Spectrum
    from .specdb import SpectralDatabase

    wl = np.linspace(350.0, 1000.0, bands)
    db = SpectralDatabase()
    for name in scene_mod.STRIP_CLASSES:
        profile = scene_mod.CLASS_PROFILES[name].evaluate(wl).astype(np.float32)
        db.add_class(name, scene_mod.CLASS_COLORS[name], Spectrum(wl, profile.astype(np.float64)))
    return db


def run_bench(
    n_classes: int,
    width: int = 1886,
    height: int = 1886,
    bands: int = 164,
    variance: float = 10.0,
    min_area_m2: float = 0.2,
    thickness_px: float = 2.0,
    threads: int | None = None,
    seed: int = 0,
    cube: HyperCube | None = None,
) -> dict[str, float]:
    """One bench row: stage wall times on an 8-bit synthetic cube.

    The database holds ``n_classes`` scene classes (2 = Vegetation & Water,
    matching the reference table's two-class row).
    """
    if cube is None:
        cube = _bench_cube(width, height, bands, seed)
    db = _bench_db(bands)
    if n_classes == 2:
        for c in list(db.classes):
            if c.name not in ("Vegetation", "Water"):
                db.remove_class(c.id)
    elif n_classes != len(db.classes):
        raise HypermapError(f"bench supports 2 or {len(db.classes)} classes")
    params = ClassifyParams(algorithm=SimilarityAlgorithm.SAM, variance=variance)
    result = classify(cube, db, params, threads=threads)
    seg = segment(result.label_map, cube.camera, min_area_m2, thickness_px)
    times = {STAGE_CLASSIFY: result.time_s}
    times.update(seg.timings)
    times[STAGE_TOTAL] = result.time_s + sum(seg.timings.values())
    return times


def _cmd_bench(args) -> int:
    rows = [args.classes] if args.classes else [2, 5]
    print(f"bench cube: {args.width}x{args.height}x{args.bands} (u8)")
    cube = _bench_cube(args.width, args.height, args.bands, args.seed)
    header = ["Number of Semantic Classes"] + [f"{c} (s)" for c in BENCH_COLUMNS]
    print(" | ".join(header))
    for n in rows:
        times = run_bench(
            n,
            width=args.width,
            height=args.height,
            bands=args.bands,
            variance=args.variance,
            min_area_m2=args.min_area_m2,
            thickness_px=args.thickness_px,
            threads=_threads_from(args),
            seed=args.seed,
            cube=cube,
        )
        label = "2 (Vegetation & Water)" if n == 2 else f"{n} (all classes)"
        cells = [label] + [f"{times[c]:.4f}" for c in BENCH_COLUMNS]
        print(" | ".join(cells))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import Session, create_app
    from .specdb import SpectralDatabase

    cube = load_cube(args.cube)
    db = load_db(args.db) if args.db else SpectralDatabase()
    session = Session(cube, db, resolution_m=args.resolution_m, threads=_threads_from(args))
    app = create_app(session)
    print(f"serving on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_HANDLERS = {
    "gen-scene": _cmd_gen_scene,
    "classify": _cmd_classify,
    "segment": _cmd_segment,
    "map": _cmd_map,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (HypermapError, ValueError, OSError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
