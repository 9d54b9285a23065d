"""Per-pixel semantic classification of a cube against the database.

Every pixel is scored against every reference spectrum; the best class wins
if its score is within the variance threshold, otherwise the pixel stays
Unknown (0). Classification is a pure function of (cube, db snapshot,
params): work is split over row blocks written to disjoint output slices,
so results are bit-identical for any worker count.
"""

from __future__ import annotations

import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .cube import HyperCube
from .errors import DatabaseError
from .specdb import SimilarityAlgorithm, SpectralDatabase, UNKNOWN_COLOR, UNKNOWN_NAME

_BLOCK_PIXELS = 1 << 18


@dataclass
class ClassifyParams:
    """Similarity algorithm plus the variance threshold in its score unit."""

    algorithm: SimilarityAlgorithm = SimilarityAlgorithm.SAM
    variance: float = 10.0

    def __post_init__(self):
        self.algorithm = SimilarityAlgorithm(self.algorithm)
        self.variance = float(self.variance)
        if self.variance < 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


@dataclass
class LabelMap:
    """Per-pixel class ids, row-major; 0 means Unknown."""

    labels: np.ndarray  # (height, width) int32

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ValueError("label map must be a (height, width) array")

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def copy(self) -> "LabelMap":
        return LabelMap(self.labels.copy())


@dataclass
class ClassifyResult:
    label_map: LabelMap
    counts: dict[int, int]  # class id -> pixel count, id 0 = Unknown
    time_s: float

    @property
    def unknown_count(self) -> int:
        return self.counts.get(0, 0)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return max(1, os.cpu_count() or 1)
    return max(1, int(threads))


def classify(
    cube: HyperCube,
    db: SpectralDatabase,
    params: ClassifyParams,
    threads: int | None = None,
) -> ClassifyResult:
    """Label every pixel of ``cube`` against the database snapshot.

    Ties go to the smallest class id; the threshold comparison is inclusive
    (variance 0 keeps exact matches); zero-norm pixels under SAM are Unknown.
    """
    classes = db.classes
    if not classes:
        raise DatabaseError("empty spectral database")
    bands = cube.bands
    for c in classes:
        if len(c.reference.values) != bands:
            raise DatabaseError(
                f"class {c.name!r} has {len(c.reference.values)} bands, cube has {bands}"
            )
    t0 = time.perf_counter()
    ids = np.array([c.id for c in classes], dtype=np.int32)
    refs = np.stack([c.reference.values for c in classes]).astype(np.float64)

    if params.algorithm is SimilarityAlgorithm.SAM:
        # Any zero reference was rejected at add_class time.
        mats = (refs / np.linalg.norm(refs, axis=1, keepdims=True)).astype(np.float32).T
    else:
        mats = refs.astype(np.float32).T
    ref_sq = np.einsum("bk,bk->k", mats, mats).astype(np.float32)

    flat = cube.data.reshape(-1, bands)
    n = flat.shape[0]
    out = np.zeros(n, dtype=np.int32)
    variance = np.float32(params.variance)
    sam = params.algorithm is SimilarityAlgorithm.SAM

    def run_block(a: int, b: int) -> None:
        seg = flat[a:b]
        dots = seg @ mats  # (m, K) float32
        if sam:
            best = np.argmax(dots, axis=1)
            bd = dots[np.arange(len(best)), best]
            norms = np.sqrt(np.einsum("ij,ij->i", seg, seg))
            with np.errstate(divide="ignore", invalid="ignore"):
                cos = bd / norms
            ang = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
            ok = ang <= variance  # NaN from zero-norm pixels compares False
        else:
            sq = np.einsum("ij,ij->i", seg, seg)
            d2 = sq[:, None] - 2.0 * dots + ref_sq[None, :]
            best = np.argmin(d2, axis=1)
            bd2 = d2[np.arange(len(best)), best]
            ok = np.sqrt(np.maximum(bd2, 0.0)) <= variance
        lab = ids[best]
        lab[~ok] = 0
        out[a:b] = lab

    edges = list(range(0, n, _BLOCK_PIXELS)) + [n]
    blocks = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    workers = min(resolve_threads(threads), len(blocks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ab: run_block(*ab), blocks))
    else:
        for a, b in blocks:
            run_block(a, b)

    binc = np.bincount(out, minlength=int(ids.max()) + 1)
    counts = {0: int(binc[0])}
    for i in ids:
        counts[int(i)] = int(binc[i])
    elapsed = time.perf_counter() - t0
    return ClassifyResult(LabelMap(out.reshape(cube.height, cube.width)), counts, elapsed)


# ---------------------------------------------------------------------------
# Label-map serialization: 16-bit grayscale PNG of ids + JSON sidecar,
# plus a color rendering for display (Unknown = black).
# ---------------------------------------------------------------------------

def class_palette(db: SpectralDatabase) -> dict[int, tuple[str, tuple[int, int, int]]]:
    pal = {0: (UNKNOWN_NAME, UNKNOWN_COLOR)}
    for c in db.classes:
        pal[c.id] = (c.name, c.color)
    return pal


def render_label_map(
    label_map: LabelMap, palette: dict[int, tuple[str, tuple[int, int, int]]]
) -> np.ndarray:
    lut = np.zeros((max(palette) + 1, 3), dtype=np.uint8)
    for cid, (_, color) in palette.items():
        lut[cid] = color
    return lut[label_map.labels]


def save_label_map(
    label_map: LabelMap,
    palette: dict[int, tuple[str, tuple[int, int, int]]],
    png_path: str | Path,
    sidecar_path: str | Path | None = None,
    color_png_path: str | Path | None = None,
) -> None:
    ids = label_map.labels
    if int(ids.max(initial=0)) > 65535:
        raise ValueError("label ids exceed 16-bit PNG range")
    Image.fromarray(ids.astype(np.uint16)).save(png_path)
    if sidecar_path is not None:
        doc = {
            str(cid): {"name": name, "color": list(color)}
            for cid, (name, color) in sorted(palette.items())
        }
        Path(sidecar_path).write_text(json.dumps(doc, indent=2) + "\n")
    if color_png_path is not None:
        Image.fromarray(render_label_map(label_map, palette), mode="RGB").save(color_png_path)


def load_label_map(
    png_path: str | Path, sidecar_path: str | Path | None = None
) -> tuple[LabelMap, dict[int, tuple[str, tuple[int, int, int]]]]:
    arr = np.asarray(Image.open(png_path), dtype=np.int32)
    palette: dict[int, tuple[str, tuple[int, int, int]]] = {}
    if sidecar_path is not None:
        doc = json.loads(Path(sidecar_path).read_text())
        for cid, entry in doc.items():
            palette[int(cid)] = (entry["name"], tuple(entry["color"]))
    return LabelMap(arr), palette


def label_map_png_bytes(
    label_map: LabelMap, palette: dict[int, tuple[str, tuple[int, int, int]]]
) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(render_label_map(label_map, palette), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
