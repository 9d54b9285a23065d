"""Synthetic hyperspectral scenes with exact ground truth.

Stands in for field data: every pixel's spectrum is

    illumination(x, y) * class_profile(lambda) + N(0, noise_sigma)

per band, clamped to [0, 1]. The smooth multiplicative illumination field
deliberately exercises the scale invariance of the spectral angle (a
Euclidean metric breaks under it), and the generator's label map is the
oracle for every downstream stage: with zero noise, SAM classification at
any positive variance must reproduce it exactly on covered pixels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .classify import LabelMap
from .cube import CameraMeta, HyperCube, Spectrum
from .specdb import SpectralDatabase, default_taxonomy_path

_NOISE_CHUNK = 1 << 20
_ILLUM_GRID = 8  # control points per axis of the seeded illumination field

BUILTIN_SCENES = ("cornfields", "runtime-add")


@dataclass(frozen=True)
class GaussianBump:
    amplitude: float
    center_nm: float
    width_nm: float


@dataclass(frozen=True)
class ClassProfile:
    """Sum-of-Gaussians reflectance profile, clamped to [0, 1]."""

    baseline: float
    bumps: tuple[GaussianBump, ...] = ()

    def evaluate(self, wavelengths) -> np.ndarray:
        wl = np.asarray(wavelengths, dtype=np.float64)
        v = np.full(wl.shape, float(self.baseline))
        for b in self.bumps:
            v += b.amplitude * np.exp(-((wl - b.center_nm) ** 2) / (2.0 * b.width_nm**2))
        return np.clip(v, 0.0, 1.0)


@dataclass
class SceneRegion:
    class_name: str
    polygon: np.ndarray  # (N, 2) pixel coordinates

    def __post_init__(self):
        self.polygon = np.asarray(self.polygon, dtype=np.float64)
        if self.polygon.ndim != 2 or self.polygon.shape[0] < 3 or self.polygon.shape[1] != 2:
            raise ValueError("region polygon needs at least 3 (x, y) vertices")


@dataclass
class SceneSpec:
    width: int
    height: int
    bands: int
    wavelengths: np.ndarray
    regions: list[SceneRegion]
    class_spectra: dict[str, ClassProfile]
    class_colors: dict[str, tuple[int, int, int]]
    noise_sigma: float = 0.0
    illumination: tuple[float, float] = (1.0, 1.0)
    seed: int = 0
    camera: CameraMeta = field(default_factory=lambda: CameraMeta(h_m=10.0, fov_deg=35.0))

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        if len(self.wavelengths) != self.bands:
            raise ValueError("wavelength count must equal band count")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        imin, imax = self.illumination
        if not 0 < imin <= imax:
            raise ValueError(f"illumination range must satisfy 0 < min <= max, got {self.illumination}")
        for region in self.regions:
            if region.class_name not in self.class_spectra:
                raise ValueError(f"region class {region.class_name!r} has no spectral profile")

    def class_order(self) -> list[str]:
        """Class names in first-appearance order; ids are assigned 1..K."""
        seen: list[str] = []
        for region in self.regions:
            if region.class_name not in seen:
                seen.append(region.class_name)
        return seen


def synthesize(spec: SceneSpec) -> tuple[HyperCube, LabelMap, SpectralDatabase]:
    """Generate (cube, ground-truth label map, reference database).

    Identical seeds give bit-identical outputs. Uncovered pixels are
    Unknown and carry a zero profile (noise only).
    """
    truth = _rasterize_truth(spec)
    names = spec.class_order()
    profiles32 = np.zeros((len(names) + 1, spec.bands), dtype=np.float32)
    for i, name in enumerate(names, start=1):
        profiles32[i] = spec.class_spectra[name].evaluate(spec.wavelengths)

    data = profiles32[truth]
    illum = _illumination_field(spec)
    data *= illum[:, :, None]
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2]))
        flat = data.reshape(-1)
        sigma = np.float32(spec.noise_sigma)
        for a in range(0, flat.size, _NOISE_CHUNK):
            b = min(a + _NOISE_CHUNK, flat.size)
            flat[a:b] += rng.standard_normal(b - a, dtype=np.float32) * sigma
    np.clip(data, 0.0, 1.0, out=data)

    cube = HyperCube(
        wavelengths=spec.wavelengths.astype(np.float32), data=data, camera=spec.camera
    )
    db = SpectralDatabase()
    for i, name in enumerate(names, start=1):
        db.add_class(
            name=name,
            color=spec.class_colors.get(name, _fallback_color(i)),
            reference=Spectrum(spec.wavelengths, profiles32[i].astype(np.float64)),
            taxonomy_path=default_taxonomy_path(name),
        )
    return cube, LabelMap(truth), db


def _fallback_color(i: int) -> tuple[int, int, int]:
    return ((37 * i) % 256, (97 * i) % 256, (173 * i) % 256)


def _rasterize_truth(spec: SceneSpec) -> np.ndarray:
    """Pixel-center rasterization, even-odd rule.

    Boundary pixels (center exactly on an edge) go to the first region in
    spec order; strictly overlapping interiors are an error.
    """
    h, w = spec.height, spec.width
    cx = (np.arange(w, dtype=np.float64) + 0.5)[None, :]
    cy = (np.arange(h, dtype=np.float64) + 0.5)[:, None]
    class_id = {name: i for i, name in enumerate(spec.class_order(), start=1)}
    labels = np.zeros((h, w), dtype=np.int32)
    strict_cover = np.zeros((h, w), dtype=np.int16)
    masks: list[tuple[np.ndarray, int]] = []
    for region in spec.regions:
        inside = _even_odd_inside(region.polygon, cx, cy)
        boundary = _on_boundary(region.polygon, cx, cy)
        strict_cover += (inside & ~boundary).astype(np.int16)
        masks.append((inside | boundary, class_id[region.class_name]))
    if np.any(strict_cover > 1):
        raise ValueError("region interiors overlap")
    for mask, cid in reversed(masks):
        labels[mask] = cid
    return labels


def _even_odd_inside(polygon: np.ndarray, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    pts = np.asarray(polygon, dtype=np.float64)
    n = len(pts)
    inside = np.zeros((cy.shape[0], cx.shape[1]), dtype=bool)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > cy) != (y2 > cy)
        xint = x1 + (cy - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (cx < xint)
    return inside


def _on_boundary(polygon: np.ndarray, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    pts = np.asarray(polygon, dtype=np.float64)
    n = len(pts)
    bnd = np.zeros((cy.shape[0], cx.shape[1]), dtype=bool)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        if dx == 0 and dy == 0:
            bnd |= (cx == x1) & (cy == y1)
            continue
        cross = dx * (cy - y1) - (cx - x1) * dy
        dot = (cx - x1) * dx + (cy - y1) * dy
        bnd |= (cross == 0) & (dot >= 0) & (dot <= dx * dx + dy * dy)
    return bnd


def _illumination_field(spec: SceneSpec) -> np.ndarray:
    """Smooth per-pixel brightness: bilinear over a seeded 8x8 control grid."""
    imin, imax = spec.illumination
    if imin == imax:
        return np.full((spec.height, spec.width), imin, dtype=np.float32)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    ctrl = rng.uniform(imin, imax, size=(_ILLUM_GRID, _ILLUM_GRID))
    g = _ILLUM_GRID - 1
    u = (np.arange(spec.width, dtype=np.float64) + 0.5) / spec.width * g
    v = (np.arange(spec.height, dtype=np.float64) + 0.5) / spec.height * g
    ju = np.minimum(u.astype(np.int64), g - 1)[None, :]
    iv = np.minimum(v.astype(np.int64), g - 1)[:, None]
    fu = (u[None, :] - ju)
    fv = (v[:, None] - iv)
    field_ = (
        (1 - fv) * (1 - fu) * ctrl[iv, ju]
        + (1 - fv) * fu * ctrl[iv, ju + 1]
        + fv * (1 - fu) * ctrl[iv + 1, ju]
        + fv * fu * ctrl[iv + 1, ju + 1]
    )
    return field_.astype(np.float32)


# ---------------------------------------------------------------------------
# Stock class profiles and the two bundled scene layouts
# ---------------------------------------------------------------------------

CLASS_PROFILES: dict[str, ClassProfile] = {
    "Ground": ClassProfile(0.31, (GaussianBump(0.135, 680.0, 240.0),)),
    "Concrete": ClassProfile(0.42, (GaussianBump(0.13, 560.0, 260.0),)),
    "Vegetation": ClassProfile(
        0.07, (GaussianBump(0.52, 860.0, 110.0), GaussianBump(0.10, 550.0, 45.0))
    ),
    "Water": ClassProfile(0.05, (GaussianBump(0.40, 430.0, 130.0),)),
    "Wood": ClassProfile(0.045, (GaussianBump(0.40, 850.0, 120.0), GaussianBump(0.09, 540.0, 50.0))),
    "Tarp": ClassProfile(0.10, (GaussianBump(0.50, 470.0, 40.0),)),
}

CLASS_COLORS: dict[str, tuple[int, int, int]] = {
    "Ground": (140, 102, 60),
    "Concrete": (128, 128, 128),
    "Vegetation": (34, 139, 34),
    "Water": (31, 119, 180),
    "Wood": (101, 67, 33),
    "Tarp": (0, 206, 209),
}

# Vertical-strip layout fractions for the five stock classes.
_STRIP_FRACTIONS = (0.0, 0.22, 0.48, 0.62, 0.80, 1.0)
STRIP_CLASSES = ("Ground", "Vegetation", "Concrete", "Water", "Wood")


def _rect(x0: float, y0: float, x1: float, y1: float) -> list[tuple[float, float]]:
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def cornfields_spec(
    width: int = 256,
    height: int = 256,
    bands: int = 64,
    noise_sigma: float = 0.0,
    illumination: tuple[float, float] = (1.0, 1.0),
    seed: int = 0,
    camera: CameraMeta | None = None,
) -> SceneSpec:
    """Five-class strip layout covering the full frame."""
    xs = [round(f * width) for f in _STRIP_FRACTIONS]
    regions = [
        SceneRegion(cls, _rect(xs[i], 0, xs[i + 1], height))
        for i, cls in enumerate(STRIP_CLASSES)
    ]
    return SceneSpec(
        width=width,
        height=height,
        bands=bands,
        wavelengths=np.linspace(350.0, 1000.0, bands),
        regions=regions,
        class_spectra={k: CLASS_PROFILES[k] for k in STRIP_CLASSES},
        class_colors=dict(CLASS_COLORS),
        noise_sigma=noise_sigma,
        illumination=illumination,
        seed=seed,
        camera=camera or CameraMeta(h_m=10.0, fov_deg=35.0),
    )


def runtime_add_spec(
    width: int = 256,
    height: int = 256,
    bands: int = 64,
    noise_sigma: float = 0.0,
    illumination: tuple[float, float] = (1.0, 1.0),
    seed: int = 0,
    camera: CameraMeta | None = None,
) -> SceneSpec:
    """Strip layout plus a Tarp rectangle carved out of the Vegetation strip.

    The Tarp region is listed last so its class id comes after the stock
    five, matching the add-it-at-run-time flow.
    """
    base = cornfields_spec(width, height, bands, noise_sigma, illumination, seed, camera)
    xs = [round(f * width) for f in _STRIP_FRACTIONS]
    vx0, vx1 = xs[1], xs[2]
    tx0 = round(vx0 + 0.25 * (vx1 - vx0))
    tx1 = round(vx0 + 0.75 * (vx1 - vx0))
    ty0 = round(0.35 * height)
    ty1 = round(0.65 * height)
    veg_pieces = [
        _rect(vx0, 0, vx1, ty0),
        _rect(vx0, ty1, vx1, height),
        _rect(vx0, ty0, tx0, ty1),
        _rect(tx1, ty0, vx1, ty1),
    ]
    regions = [SceneRegion("Ground", _rect(xs[0], 0, xs[1], height))]
    regions += [SceneRegion("Vegetation", p) for p in veg_pieces]
    regions += [
        SceneRegion("Concrete", _rect(xs[2], 0, xs[3], height)),
        SceneRegion("Water", _rect(xs[3], 0, xs[4], height)),
        SceneRegion("Wood", _rect(xs[4], 0, xs[5], height)),
        SceneRegion("Tarp", _rect(tx0, ty0, tx1, ty1)),
    ]
    spectra = {k: CLASS_PROFILES[k] for k in (*STRIP_CLASSES, "Tarp")}
    return SceneSpec(
        width=width,
        height=height,
        bands=bands,
        wavelengths=np.linspace(350.0, 1000.0, bands),
        regions=regions,
        class_spectra=spectra,
        class_colors=dict(CLASS_COLORS),
        noise_sigma=noise_sigma,
        illumination=illumination,
        seed=seed,
        camera=base.camera,
    )


# ---------------------------------------------------------------------------
# JSON scene documents
# ---------------------------------------------------------------------------

def scene_spec_to_json(spec: SceneSpec) -> dict:
    return {
        "width": spec.width,
        "height": spec.height,
        "bands": spec.bands,
        "wavelengths_nm": [float(w) for w in spec.wavelengths],
        "noise_sigma": spec.noise_sigma,
        "illumination": list(spec.illumination),
        "seed": spec.seed,
        "camera": {
            "h_m": spec.camera.h_m,
            "fov_deg": spec.camera.fov_deg,
            "pose": [spec.camera.pose_x, spec.camera.pose_y, spec.camera.pose_yaw],
        },
        "classes": {
            name: {
                "color": list(spec.class_colors.get(name, _fallback_color(i + 1))),
                "baseline": prof.baseline,
                "bumps": [[b.amplitude, b.center_nm, b.width_nm] for b in prof.bumps],
            }
            for i, (name, prof) in enumerate(spec.class_spectra.items())
        },
        "regions": [
            {"class": r.class_name, "polygon": [[float(x), float(y)] for x, y in r.polygon]}
            for r in spec.regions
        ],
    }


def scene_spec_from_json(doc: dict) -> SceneSpec:
    bands = int(doc["bands"])
    if "wavelengths_nm" in doc:
        wavelengths = np.asarray(doc["wavelengths_nm"], dtype=np.float64)
    else:
        lo, hi = doc["wavelength_range_nm"]
        wavelengths = np.linspace(float(lo), float(hi), bands)
    cam = doc.get("camera", {})
    pose = cam.get("pose", [0.0, 0.0, 0.0])
    spectra = {}
    colors = {}
    for name, entry in doc.get("classes", {}).items():
        spectra[name] = ClassProfile(
            baseline=float(entry.get("baseline", 0.0)),
            bumps=tuple(GaussianBump(*[float(v) for v in b]) for b in entry.get("bumps", [])),
        )
        if "color" in entry:
            colors[name] = tuple(int(c) for c in entry["color"])
    return SceneSpec(
        width=int(doc["width"]),
        height=int(doc["height"]),
        bands=bands,
        wavelengths=wavelengths,
        regions=[SceneRegion(r["class"], r["polygon"]) for r in doc.get("regions", [])],
        class_spectra=spectra,
        class_colors=colors,
        noise_sigma=float(doc.get("noise_sigma", 0.0)),
        illumination=tuple(doc.get("illumination", (1.0, 1.0))),
        seed=int(doc.get("seed", 0)),
        camera=CameraMeta(
            h_m=float(cam.get("h_m", 10.0)),
            fov_deg=float(cam.get("fov_deg", 35.0)),
            pose_x=float(pose[0]),
            pose_y=float(pose[1]),
            pose_yaw=float(pose[2]),
        ),
    )


def load_scene_spec(path_or_name: str | Path) -> SceneSpec:
    """Load a scene document from a file path or a bundled name."""
    p = Path(path_or_name)
    if p.exists():
        return scene_spec_from_json(json.loads(p.read_text()))
    name = str(path_or_name)
    if name in BUILTIN_SCENES:
        text = resources.files("hypermap.specs").joinpath(f"{name}.json").read_text()
        return scene_spec_from_json(json.loads(text))
    raise FileNotFoundError(
        f"no scene file {path_or_name!r} and no bundled scene of that name "
        f"(bundled: {', '.join(BUILTIN_SCENES)})"
    )


# ---------------------------------------------------------------------------
# Salt-noise injection (test support for the size filter)
# ---------------------------------------------------------------------------

def inject_label_salt(
    label_map: LabelMap, count: int, seed: int, margin: int = 2
) -> tuple[LabelMap, list[tuple[int, int]]]:
    """Flip ``count`` isolated interior pixels to a different class.

    Flips land at least ``margin`` pixels from any label boundary and are
    pairwise non-adjacent, so each becomes a one-pixel region whose removal
    by the size filter restores the original map exactly.
    """
    labels = label_map.labels.copy()
    h, w = labels.shape
    ids = sorted(int(v) for v in np.unique(labels) if v != 0)
    if len(ids) < 2:
        raise ValueError("salt injection needs at least two classes in the map")
    rng = np.random.default_rng(seed)
    taken: set[tuple[int, int]] = set()
    flips: list[tuple[int, int]] = []
    attempts = 0
    while len(flips) < count:
        attempts += 1
        if attempts > 100000:
            raise RuntimeError("could not place salt pixels; map too fragmented")
        x = int(rng.integers(margin, w - margin))
        y = int(rng.integers(margin, h - margin))
        if any((x + dx, y + dy) in taken for dx in (-2, -1, 0, 1, 2) for dy in (-2, -1, 0, 1, 2)):
            continue
        window = labels[y - margin : y + margin + 1, x - margin : x + margin + 1]
        cur = int(labels[y, x])
        if cur == 0 or not np.all(window == cur):
            continue
        new = ids[(ids.index(cur) + 1) % len(ids)]
        labels[y, x] = new
        taken.add((x, y))
        flips.append((x, y))
    return LabelMap(labels), flips
