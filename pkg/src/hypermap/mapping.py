"""Hierarchical semantic map: world-frame raster, polygon features, ontology.

Frames are merged through a fixed-resolution global raster: each frame's
region polygons are transformed to world meters and rasterized in arrival
order. A cell is only ever overwritten by a non-Unknown label, so known
information is never erased. Features (polygons + instance labels) are
re-extracted from the raster on demand, reusing the segmentation tracer and
its exact round-trip guarantee.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .classify import LabelMap
from .cube import CameraMeta
from .geometry import points_to_world
from .segmentation import extract_regions, fill_polygon_spans, RegionSet


class InstanceLabelTree:
    """Rooted label taxonomy; single root "World", names unique per level."""

    def __init__(self):
        self._children: dict[str, dict] = {}

    def add_path(self, path: list[str]) -> None:
        if not path or path[0] != "World":
            raise ValueError(f"taxonomy path must be rooted at World, got {path}")
        node = self._children
        for name in path[1:]:
            node = node.setdefault(name, {})

    def contains(self, path: list[str]) -> bool:
        if not path or path[0] != "World":
            return False
        node = self._children
        for name in path[1:]:
            if name not in node:
                return False
            node = node[name]
        return True

    def paths(self) -> list[list[str]]:
        """Every root-to-node path in preorder, children sorted by name."""
        out: list[list[str]] = [["World"]]

        def rec(prefix: list[str], node: dict[str, dict]) -> None:
            for name in sorted(node):
                p = prefix + [name]
                out.append(p)
                rec(p, node[name])

        rec(["World"], self._children)
        return out


@dataclass
class MapClassInfo:
    name: str
    color: tuple[int, int, int]
    taxonomy_path: list[str]


@dataclass
class Feature:
    """A map entity: polygon shape in world meters plus an instance label."""

    id: int
    class_id: int
    instance_label: str
    taxonomy_path: list[str]
    outer: np.ndarray
    holes: list[np.ndarray]
    area_m2: float
    cell_count: int
    source_frames: list[str]


class SemanticMap:
    """Growable world-frame raster of class ids plus the label taxonomy."""

    def __init__(self, resolution_m: float = 0.05):
        if not resolution_m or resolution_m <= 0:
            raise ValueError(f"map resolution must be > 0 m/cell, got {resolution_m}")
        self.resolution = float(resolution_m)
        self.grid = np.zeros((0, 0), dtype=np.int32)
        self.frame_grid = np.full((0, 0), -1, dtype=np.int32)
        self.origin_x: float | None = None  # west edge, multiple of resolution
        self.top_y: float | None = None     # north edge, multiple of resolution
        self.frames: list[str] = []
        self.classes: dict[int, MapClassInfo] = {}
        self.tree = InstanceLabelTree()

    # -- geometry ---------------------------------------------------------

    def _world_to_grid(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty_like(pts)
        out[:, 0] = (pts[:, 0] - self.origin_x) / self.resolution
        out[:, 1] = (self.top_y - pts[:, 1]) / self.resolution
        return out

    def _grid_to_world(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty_like(np.asarray(pts, dtype=np.float64))
        p = np.asarray(pts, dtype=np.float64)
        out[:, 0] = self.origin_x + p[:, 0] * self.resolution
        out[:, 1] = self.top_y - p[:, 1] * self.resolution
        return out

    def _grow(self, minx: float, maxx: float, miny: float, maxy: float) -> None:
        res = self.resolution
        nminx = math.floor(minx / res) * res
        nmaxx = math.ceil(maxx / res) * res
        nminy = math.floor(miny / res) * res
        nmaxy = math.ceil(maxy / res) * res
        if self.origin_x is None:
            self.origin_x = nminx
            self.top_y = nmaxy
            rows = max(1, round((nmaxy - nminy) / res))
            cols = max(1, round((nmaxx - nminx) / res))
            self.grid = np.zeros((rows, cols), dtype=np.int32)
            self.frame_grid = np.full((rows, cols), -1, dtype=np.int32)
            return
        cur_maxx = self.origin_x + self.grid.shape[1] * res
        cur_miny = self.top_y - self.grid.shape[0] * res
        new_ox = min(self.origin_x, nminx)
        new_top = max(self.top_y, nmaxy)
        new_maxx = max(cur_maxx, nmaxx)
        new_miny = min(cur_miny, nminy)
        if new_ox == self.origin_x and new_top == self.top_y and new_maxx == cur_maxx and new_miny == cur_miny:
            return
        rows = round((new_top - new_miny) / res)
        cols = round((new_maxx - new_ox) / res)
        roff = round((new_top - self.top_y) / res)
        coff = round((self.origin_x - new_ox) / res)
        grid = np.zeros((rows, cols), dtype=np.int32)
        frames = np.full((rows, cols), -1, dtype=np.int32)
        grid[roff : roff + self.grid.shape[0], coff : coff + self.grid.shape[1]] = self.grid
        frames[roff : roff + self.grid.shape[0], coff : coff + self.grid.shape[1]] = self.frame_grid
        self.grid = grid
        self.frame_grid = frames
        self.origin_x = new_ox
        self.top_y = new_top

    # -- ingestion ----------------------------------------------------------

    def register_classes(self, classes) -> None:
        for c in classes:
            info = MapClassInfo(c.name, tuple(c.color), list(c.taxonomy_path))
            self.classes[c.id] = info
            self.tree.add_path(info.taxonomy_path)

    def ingest_frame(
        self,
        regions: RegionSet,
        camera: CameraMeta,
        frame_id: str,
        classes=(),
    ) -> None:
        """Rasterize one frame's regions into the global grid.

        Cells are overwritten only by non-Unknown labels, so a later frame
        wins on overlap but Unknown never erases known cells.
        """
        self.register_classes(classes)
        frame_idx = len(self.frames)
        self.frames.append(str(frame_id))
        dims = (regions.width, regions.height)
        corners = points_to_world(
            np.array(
                [[0, 0], [regions.width, 0], [regions.width, regions.height], [0, regions.height]],
                dtype=np.float64,
            ),
            dims,
            camera,
        )
        self._grow(
            float(corners[:, 0].min()),
            float(corners[:, 0].max()),
            float(corners[:, 1].min()),
            float(corners[:, 1].max()),
        )
        rows, cols = self.grid.shape
        for region in regions.regions:
            if region.label == 0:
                continue
            rings = [
                self._world_to_grid(points_to_world(ring, dims, camera))
                for ring in [region.outer] + region.holes
            ]
            for r, c0, c1 in fill_polygon_spans(rings, rows, cols):
                self.grid[r, c0:c1] = region.label
                self.frame_grid[r, c0:c1] = frame_idx

    # -- queries ------------------------------------------------------------

    def non_unknown_cells(self) -> int:
        return int(np.count_nonzero(self.grid))

    def extract_features(self) -> list[Feature]:
        """Polygon features re-extracted from the global raster."""
        if self.grid.size == 0:
            return []
        rs = extract_regions(LabelMap(self.grid))
        rows, cols = self.grid.shape
        feats: list[Feature] = []
        n = 0
        for region in rs.regions:
            if region.label == 0:
                continue
            info = self.classes.get(region.label)
            if info is None:
                info = MapClassInfo(f"class-{region.label}", (255, 255, 255), ["World", f"class-{region.label}"])
            n += 1
            frame_ids: list[int] = []
            for r, c0, c1 in fill_polygon_spans([region.outer] + region.holes, rows, cols):
                frame_ids.extend(np.unique(self.frame_grid[r, c0:c1]).tolist())
            seen: list[str] = []
            for fi in sorted(set(fid for fid in frame_ids if fid >= 0)):
                name = self.frames[fi]
                if name not in seen:
                    seen.append(name)
            feats.append(
                Feature(
                    id=n,
                    class_id=region.label,
                    instance_label=info.name,
                    taxonomy_path=list(info.taxonomy_path),
                    outer=self._grid_to_world(region.outer),
                    holes=[self._grid_to_world(h) for h in region.holes],
                    area_m2=region.pixel_count * self.resolution**2,
                    cell_count=region.pixel_count,
                    source_frames=seen,
                )
            )
        return feats

    # -- persistence ----------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.grid.astype(np.uint16)).save(d / "grid.png")
        Image.fromarray((self.frame_grid + 1).astype(np.uint16)).save(
            d / "grid_frames.png"
        )
        manifest = {
            "resolution_m": self.resolution,
            "origin_x": self.origin_x,
            "top_y": self.top_y,
            "frames": self.frames,
            "classes": {
                str(cid): {
                    "name": info.name,
                    "color": list(info.color),
                    "taxonomy": list(info.taxonomy_path),
                }
                for cid, info in sorted(self.classes.items())
            },
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load(cls, directory: str | Path) -> "SemanticMap":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        smap = cls(resolution_m=manifest["resolution_m"])
        smap.origin_x = manifest["origin_x"]
        smap.top_y = manifest["top_y"]
        smap.frames = list(manifest["frames"])
        smap.grid = np.asarray(Image.open(d / "grid.png"), dtype=np.int32)
        smap.frame_grid = np.asarray(Image.open(d / "grid_frames.png"), dtype=np.int32) - 1
        for cid, entry in manifest["classes"].items():
            info = MapClassInfo(entry["name"], tuple(entry["color"]), list(entry["taxonomy"]))
            smap.classes[int(cid)] = info
            smap.tree.add_path(info.taxonomy_path)
        return smap


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def features_to_geojson(smap: SemanticMap, features: list[Feature]) -> dict:
    out = []
    for f in features:
        info = smap.classes.get(f.class_id)
        color = list(info.color) if info else [255, 255, 255]
        coords = []
        for ring in [f.outer] + f.holes:
            closed = np.vstack([ring, ring[:1]])
            coords.append([[float(x), float(y)] for x, y in closed])
        out.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": coords},
                "properties": {
                    "feature_id": f.id,
                    "label_id": f.class_id,
                    "class_name": f.instance_label,
                    "color": color,
                    "pixel_count": f.cell_count,
                    "area_m2": f.area_m2,
                    "source_frames": list(f.source_frames),
                },
            }
        )
    return {"type": "FeatureCollection", "features": out}


def export_ontology(smap: SemanticMap, features: list[Feature]) -> dict:
    """Directed graph: taxonomy edges plus one instance edge per feature.

    Node ids are full taxonomy paths (or feature#N); ordering is
    deterministic (taxonomy preorder with name-sorted children, then
    features by id).
    """
    nodes = []
    edges = []
    for path in smap.tree.paths():
        nodes.append({"id": "/".join(path), "kind": "taxonomy", "label": path[-1]})
        if len(path) > 1:
            edges.append({"from": "/".join(path[:-1]), "to": "/".join(path), "kind": "taxonomy"})
    for f in features:
        fid = f"feature#{f.id}"
        nodes.append(
            {
                "id": fid,
                "kind": "feature",
                "label": f"{f.instance_label}#{f.id}",
                "area_m2": f.area_m2,
                "shape_ref": fid,
            }
        )
        edges.append({"from": "/".join(f.taxonomy_path), "to": fid, "kind": "instance"})
    return {"nodes": nodes, "edges": edges}


def ontology_to_dot(doc: dict) -> str:
    lines = ["digraph ontology {"]
    for node in doc["nodes"]:
        attrs = [f'label="{node["label"]}"', f'kind="{node["kind"]}"']
        if "area_m2" in node:
            attrs.append(f'area_m2="{node["area_m2"]:.6f}"')
        lines.append(f'  "{node["id"]}" [{", ".join(attrs)}];')
    for edge in doc["edges"]:
        lines.append(f'  "{edge["from"]}" -> "{edge["to"]}" [kind="{edge["kind"]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
