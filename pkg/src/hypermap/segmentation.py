"""Label-map segmentation: edges, region polygons, size filtering, approximation.

Region boundaries are traced along pixel *corners* (crack following) rather
than pixel centers: every crack between two pixels of different components
is walked with the owning region on the right-hand side, which makes outer
rings come out with positive shoelace area (counter-clockwise in the
(x, y) convention used here) and hole rings negative. The payoff is an
exact inverse: rasterizing the rings with the even-odd rule at pixel
centers reproduces the input label map bit for bit.

Components use 8-connectivity; at a corner where two same-component pixels
meet diagonally, the walk turns left (in travel frame), which keeps the
component in a single outer ring and pinches the background apart instead.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .classify import LabelMap
from .cube import CameraMeta
from .geometry import pixel_area_m2, signed_area

_EIGHT = np.ones((3, 3), dtype=bool)
_SENTINEL = -1  # out-of-image label, distinct from every class id

STAGE_EDGE = "Edge Detection"
STAGE_CONTOUR = "Contour Extraction"
STAGE_FILTER = "Size Filtering"
STAGE_APPROX = "Polygon Approximation"


@dataclass
class EdgeImage:
    """Binary edge mask; purely diagnostic, region extraction does not use it."""

    mask: np.ndarray  # (height, width) bool

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


@dataclass
class Region:
    """One connected same-label component with its boundary rings.

    ``outer`` has positive shoelace area, ``holes`` negative; vertices are
    integer pixel-corner coordinates. ``parent`` is the id of the region
    whose hole contains this region, or None for roots.
    """

    id: int
    label: int
    outer: np.ndarray
    holes: list[np.ndarray]
    pixel_count: int
    parent: int | None
    area_m2: float | None = None


@dataclass
class RegionSet:
    regions: list[Region]
    width: int
    height: int


def detect_edges(label_map: LabelMap) -> EdgeImage:
    """A pixel is an edge iff any of its 8 neighbors carries a different label.

    Out-of-image neighbors carry a sentinel label, so border pixels of any
    region are always edges.
    """
    labels = label_map.labels
    h, w = labels.shape
    padded = np.pad(labels, 1, constant_values=_SENTINEL)
    edge = np.zeros((h, w), dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            edge |= padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] != labels
    return EdgeImage(edge)


def save_edge_png(edge: EdgeImage, path: str | Path) -> None:
    Image.fromarray(edge.mask.astype(np.uint8) * 255, mode="L").convert("1").save(path)


# ---------------------------------------------------------------------------
# Region extraction
# ---------------------------------------------------------------------------

def _connected_components(labels: np.ndarray) -> tuple[np.ndarray, list[int], int]:
    """8-connected components per label value; returns (comp ids, labels, count)."""
    comp = np.full(labels.shape, -1, dtype=np.int32)
    comp_label: list[int] = []
    base = 0
    for val in np.unique(labels):
        mask = labels == val
        lab, k = ndimage.label(mask, structure=_EIGHT)
        if k:
            comp[mask] = lab[mask].astype(np.int32) + (base - 1)
            comp_label.extend([int(val)] * k)
            base += k
    return comp, comp_label, base


# Travel directions: 0 = +x, 1 = +y, 2 = -x, 3 = -y (y grows downward).


def _walk(x0, y0, d0, rid, plist, h_vis, v_vis, w, left_owner, loop_key):
    """Follow one boundary loop; returns (corner vertices, 2 * signed area)."""
    verts = []
    area2 = 0
    x, y, d = x0, y0, d0
    while True:
        if d == 0:
            h_vis[y * w + x] |= 1
            nx, ny = x + 1, y
        elif d == 1:
            v_vis[y * (w + 1) + x] |= 1
            nx, ny = x, y + 1
        elif d == 2:
            h_vis[y * w + x - 1] |= 2
            left_owner[(x - 1, y)] = loop_key
            nx, ny = x - 1, y
        else:
            v_vis[(y - 1) * (w + 1) + x] |= 2
            nx, ny = x, y - 1
        area2 += x * ny - nx * y
        # Ahead-left / ahead-right pixels relative to the travel direction.
        if d == 0:
            al = plist[ny][nx + 1]
            ar = plist[ny + 1][nx + 1]
        elif d == 1:
            al = plist[ny + 1][nx + 1]
            ar = plist[ny + 1][nx]
        elif d == 2:
            al = plist[ny + 1][nx]
            ar = plist[ny][nx]
        else:
            al = plist[ny][nx]
            ar = plist[ny][nx + 1]
        if al == rid:
            nd = (d + 3) & 3
        elif ar == rid:
            nd = d
        else:
            nd = (d + 1) & 3
        if nd != d:
            verts.append((nx, ny))
        x, y, d = nx, ny, nd
        if x == x0 and y == y0 and d == d0:
            break
    return verts, area2


def _trace_all(comp: np.ndarray, width: int, height: int):
    """Trace every boundary loop of every component.

    Returns (loops, left_owner): loops[rid] is a list of
    (vertices, 2*signed_area, discovery (x, y)) with the outer ring first;
    left_owner maps a leftward horizontal crack position to its owning
    (rid, loop index), which drives hole/parent resolution.
    """
    padded = np.pad(comp, 1, constant_values=-1)
    plist = padded.tolist()
    h_vis = bytearray((height + 1) * width)
    v_vis = bytearray(height * (width + 1))
    loops: dict[int, list] = {}
    left_owner: dict[tuple[int, int], tuple[int, int]] = {}
    for y in range(height + 1):
        diff = padded[y, 1 : width + 1] != padded[y + 1, 1 : width + 1]
        for x in np.nonzero(diff)[0].tolist():
            above = plist[y][x + 1]
            below = plist[y + 1][x + 1]
            if below != -1 and not h_vis[y * width + x] & 1:
                rlist = loops.setdefault(below, [])
                key = (below, len(rlist))
                rlist.append(None)
                verts, area2 = _walk(x, y, 0, below, plist, h_vis, v_vis, width, left_owner, key)
                rlist[key[1]] = (verts, area2, (x, y))
            if above != -1 and not h_vis[y * width + x] & 2:
                rlist = loops.setdefault(above, [])
                key = (above, len(rlist))
                rlist.append(None)
                verts, area2 = _walk(x + 1, y, 2, above, plist, h_vis, v_vis, width, left_owner, key)
                rlist[key[1]] = (verts, area2, (x, y))
    return loops, left_owner


def _canonical_ring(verts: list[tuple[int, int]]) -> np.ndarray:
    """Rotate a ring so it starts at its top-left (min y, then min x) vertex."""
    k = min(range(len(verts)), key=lambda i: (verts[i][1], verts[i][0]))
    return np.array(verts[k:] + verts[:k], dtype=np.float64)


def extract_regions(label_map: LabelMap) -> RegionSet:
    """Connected components of equal-label pixels with corner-traced rings.

    Rasterizing the result (even-odd over outer plus holes) reproduces the
    input exactly; regions are ordered by their top-left owned pixel.
    """
    labels = label_map.labels
    height, width = labels.shape
    comp, comp_label, n_comp = _connected_components(labels)
    loops, left_owner = _trace_all(comp, width, height)

    flat = comp.ravel()
    counts = np.bincount(flat, minlength=n_comp)
    _, first_idx = np.unique(flat, return_index=True)
    order = np.argsort(first_idx, kind="stable")
    new_id = np.empty(n_comp, dtype=np.int64)
    new_id[order] = np.arange(n_comp)

    # Parent: walk the crack just above each outer ring's discovery corner.
    # If it lies on a hole ring of the neighbor, that neighbor owns us; if it
    # lies on the neighbor's outer ring the neighbor is a sibling, so take
    # its parent instead.
    parent_memo: dict[int, int | None] = {}

    def resolve(rid: int) -> int | None:
        chain = []
        cur = rid
        while True:
            if cur in parent_memo:
                result = parent_memo[cur]
                break
            chain.append(cur)
            x, yt = loops[cur][0][2]
            if yt == 0:
                result = None
                break
            srid, sloop = left_owner[(x, yt)]
            if loops[srid][sloop][1] < 0:
                result = srid  # crack lies on the neighbor's hole ring
                break
            cur = srid  # crack lies on a sibling's outer ring; hop to it
        for c in chain:
            parent_memo[c] = result
        return result

    regions: list[Region] = []
    for rid in range(n_comp):
        ring_list = loops[rid]
        outer = None
        holes = []
        for verts, area2, _ in ring_list:
            ring = _canonical_ring(verts)
            if area2 > 0:
                if outer is not None:
                    raise AssertionError("component produced two outer rings")
                outer = ring
            else:
                holes.append(ring)
        if outer is None:
            raise AssertionError("component has no outer ring")
        regions.append(
            Region(
                id=int(new_id[rid]),
                label=comp_label[rid],
                outer=outer,
                holes=holes,
                pixel_count=int(counts[rid]),
                parent=None,
            )
        )
    for rid in range(n_comp):
        p = resolve(rid)
        regions[rid].parent = None if p is None else int(new_id[p])
    regions.sort(key=lambda r: r.id)
    return RegionSet(regions=regions, width=width, height=height)


# ---------------------------------------------------------------------------
# Even-odd rasterization (the round-trip inverse, reused by the map module)
# ---------------------------------------------------------------------------

def fill_polygon_spans(rings, height: int, width: int):
    """Yield (row, col_start, col_stop) spans of cells whose centers fall
    inside the rings under the even-odd rule."""
    rows: dict[int, list[float]] = {}
    for ring in rings:
        pts = np.asarray(ring, dtype=np.float64)
        n = len(pts)
        if n < 3:
            continue
        for i in range(n):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % n]
            if y1 == y2:
                continue
            ymin, ymax = (y1, y2) if y1 < y2 else (y2, y1)
            r0 = max(0, math.ceil(ymin - 0.5))
            r1 = min(height - 1, math.ceil(ymax - 0.5) - 1)
            if r1 < r0:
                continue
            slope = (x2 - x1) / (y2 - y1)
            for r in range(r0, r1 + 1):
                rows.setdefault(r, []).append(x1 + (r + 0.5 - y1) * slope)
    for r in sorted(rows):
        xs = sorted(rows[r])
        for j in range(0, len(xs) - 1, 2):
            c0 = max(0, math.ceil(xs[j] - 0.5))
            c1 = min(width, math.ceil(xs[j + 1] - 0.5))
            if c1 > c0:
                yield r, c0, c1


def rasterize_regions(region_set: RegionSet) -> LabelMap:
    """Inverse of extract_regions: paint every region's rings back to a map."""
    out = np.zeros((region_set.height, region_set.width), dtype=np.int32)
    for region in region_set.regions:
        for r, c0, c1 in fill_polygon_spans(
            [region.outer] + region.holes, region_set.height, region_set.width
        ):
            out[r, c0:c1] = region.label
    return LabelMap(out)


# ---------------------------------------------------------------------------
# Size filtering
# ---------------------------------------------------------------------------

def fill_region_areas(region_set: RegionSet, camera: CameraMeta) -> None:
    pa = pixel_area_m2((region_set.width, region_set.height), camera)
    for r in region_set.regions:
        r.area_m2 = r.pixel_count * pa


def filter_regions(
    region_set: RegionSet,
    label_map: LabelMap,
    min_area_m2: float,
    camera: CameraMeta,
) -> tuple[RegionSet, LabelMap]:
    """Remove sub-threshold regions, relabeling their pixels to the parent.

    Removal happens in ascending-area order; the map is re-extracted after
    each pass so merged neighbors coalesce, until a fixpoint. Root regions
    are never removed, and a labeled region is never handed to an Unknown
    parent (filtering must not create Unknown pixels from labeled ones).
    """
    if min_area_m2 < 0:
        raise ValueError(f"min_area must be >= 0 m^2, got {min_area_m2}")
    height, width = label_map.labels.shape
    labels = label_map.labels.copy()
    rs = region_set
    while True:
        fill_region_areas(rs, camera)
        by_id = {r.id: r for r in rs.regions}
        removable = []
        for r in rs.regions:
            if r.parent is None or r.area_m2 >= min_area_m2:
                continue
            if r.label != 0 and by_id[r.parent].label == 0:
                continue
            removable.append(r)
        if not removable:
            return rs, LabelMap(labels)
        removable.sort(key=lambda r: (r.area_m2, r.id))
        for r in removable:
            parent_label = by_id[r.parent].label
            for row, c0, c1 in fill_polygon_spans([r.outer] + r.holes, height, width):
                labels[row, c0:c1] = parent_label
        rs = extract_regions(LabelMap(labels))


# ---------------------------------------------------------------------------
# Dominant-point polygon approximation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RemovedVertex:
    """Scan record: vertex ``index`` was dropped while testing against the
    chord from ``start`` to ``end``, at perpendicular ``distance``."""

    index: int
    start: int
    end: int
    distance: float


def _point_line_distance(p, a, b) -> float:
    # Distance to the infinite line through a and b; to the point if a == b.
    abx, aby = b[0] - a[0], b[1] - a[1]
    length = math.hypot(abx, aby)
    if length == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    return abs(abx * (p[1] - a[1]) - aby * (p[0] - a[0])) / length


def approximate_polygon_traced(
    points, thickness: float
) -> tuple[np.ndarray, list[RemovedVertex]]:
    """Dominant-point reduction of a closed polygon, with removal records.

    The first vertex is always retained; every other vertex is tested once,
    in order, against the line through the last dominant vertex and the
    vertex after the one under test (indices wrap modulo the vertex count).
    Vertices farther than ``thickness`` from that line are dominant.
    Triangles pass through unchanged.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ValueError("polygon needs at least 3 (x, y) vertices")
    if thickness < 0:
        raise ValueError(f"thickness must be >= 0, got {thickness}")
    n = pts.shape[0]
    if n == 3:
        return pts.copy(), []
    keep = [0]
    removed: list[RemovedVertex] = []
    st = 0
    for i in range(1, n):
        end = (i + 1) % n
        dist = _point_line_distance(pts[i], pts[st], pts[end])
        if dist <= thickness:
            removed.append(RemovedVertex(index=i, start=st, end=end, distance=dist))
        else:
            keep.append(i)
            st = i
    return pts[keep], removed


def approximate_polygon(points, thickness: float) -> np.ndarray:
    poly, _ = approximate_polygon_traced(points, thickness)
    return poly


# ---------------------------------------------------------------------------
# Full segmentation stage
# ---------------------------------------------------------------------------

@dataclass
class SegmentResult:
    regions: RegionSet
    edges: EdgeImage
    label_map: LabelMap  # after size filtering
    timings: dict[str, float] = field(default_factory=dict)


def segment(
    label_map: LabelMap,
    camera: CameraMeta,
    min_area_m2: float = 0.0,
    thickness_px: float = 0.0,
) -> SegmentResult:
    """Edge detection, region extraction, size filtering, then polygon
    approximation, with per-stage wall times."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    edges = detect_edges(label_map)
    timings[STAGE_EDGE] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rs = extract_regions(label_map)
    timings[STAGE_CONTOUR] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fill_region_areas(rs, camera)
    rs, filtered = filter_regions(rs, label_map, min_area_m2, camera)
    timings[STAGE_FILTER] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for region in rs.regions:
        region.outer = approximate_polygon(region.outer, thickness_px)
        region.holes = [approximate_polygon(h, thickness_px) for h in region.holes]
    timings[STAGE_APPROX] = time.perf_counter() - t0
    return SegmentResult(regions=rs, edges=edges, label_map=filtered, timings=timings)


def regions_to_geojson(
    region_set: RegionSet,
    palette: dict[int, tuple[str, tuple[int, int, int]]],
    transform=None,
) -> dict:
    """GeoJSON-flavored FeatureCollection of the region polygons.

    ``transform`` optionally maps an (N, 2) array of pixel-corner points to
    another frame (e.g. world meters).
    """
    features = []
    for region in region_set.regions:
        rings = [region.outer] + region.holes
        coords = []
        for ring in rings:
            pts = np.asarray(ring, dtype=np.float64)
            if transform is not None:
                pts = transform(pts)
            closed = np.vstack([pts, pts[:1]])
            coords.append([[float(x), float(y)] for x, y in closed])
        name, color = palette.get(region.label, (str(region.label), (255, 255, 255)))
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": coords},
                "properties": {
                    "label_id": region.label,
                    "class_name": name,
                    "color": list(color),
                    "pixel_count": region.pixel_count,
                    "area_m2": region.area_m2,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}
