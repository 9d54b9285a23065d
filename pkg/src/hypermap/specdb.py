"""Run-time spectral reference database and pluggable similarity metrics.

The database is the only trained state in the pipeline and it is built by
labeling single pixels: adding a class makes it immediately usable for
classification, with no retraining step. Mutations are single-writer;
classification readers must take a snapshot via :attr:`SpectralDatabase.classes`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .cube import Spectrum
from .errors import (
    DatabaseError,
    DuplicateClassError,
    UnknownClassError,
    ZeroSpectrumError,
)

UNKNOWN_ID = 0
UNKNOWN_NAME = "Unknown"
UNKNOWN_COLOR = (0, 0, 0)

# Taxonomy paths for the stock class names; anything else roots directly
# under World. User-supplied paths always win.
DEFAULT_TAXONOMY = {
    "Ground": ("World", "Landscape", "Ground"),
    "Concrete": ("World", "Landscape", "Concrete"),
    "Water": ("World", "Landscape", "Water"),
    "Vegetation": ("World", "Vegetation"),
    "Wood": ("World", "Obstacle", "Wood"),
    "Tarp": ("World", "Obstacle", "Tarp"),
}


def default_taxonomy_path(name: str) -> list[str]:
    return list(DEFAULT_TAXONOMY.get(name, ("World", name)))


class SimilarityAlgorithm(str, Enum):
    """Dissimilarity scores: 0 = identical, larger = less similar."""

    SAM = "sam"
    EUCLIDEAN = "euclidean"


def sam_degrees(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral angle between two vectors, in degrees.

    Mathematically arccos of the clamped cosine; evaluated through atan2 on
    the normalized difference/sum so that identical and scaled spectra come
    out at 0 well below the 1e-9 degree level (naive arccos loses ~1e-6 deg
    near cos = 1).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ma = float(np.max(np.abs(a), initial=0.0))
    mb = float(np.max(np.abs(b), initial=0.0))
    if ma == 0.0 or mb == 0.0:
        raise ZeroSpectrumError("spectral angle is undefined for a zero spectrum")
    # Pre-scale by the max component so squaring cannot underflow or overflow.
    ah = a / ma
    bh = b / mb
    ah /= np.linalg.norm(ah)
    bh /= np.linalg.norm(bh)
    ang = 2.0 * math.atan2(float(np.linalg.norm(ah - bh)), float(np.linalg.norm(ah + bh)))
    return math.degrees(ang)


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))


def similarity(a: Spectrum, b: Spectrum, algorithm: SimilarityAlgorithm = SimilarityAlgorithm.SAM) -> float:
    """Dissimilarity score: degrees for SAM, reflectance-space L2 for Euclidean."""
    if len(a.values) != len(b.values):
        raise ValueError(
            f"spectra must have the same band count ({len(a.values)} != {len(b.values)})"
        )
    if algorithm is SimilarityAlgorithm.SAM:
        return sam_degrees(a.values, b.values)
    return euclidean_distance(a.values, b.values)


@dataclass
class SemanticClass:
    """A named class: one reference spectrum, a display color, a taxonomy path."""

    id: int
    name: str
    color: tuple[int, int, int]
    reference: Spectrum
    taxonomy_path: list[str]

    def __post_init__(self):
        if self.id < 1:
            raise DatabaseError(f"class id must be >= 1 (0 is Unknown), got {self.id}")
        if not self.name:
            raise DatabaseError("class name must be non-empty")
        self.color = tuple(int(c) for c in self.color)
        if len(self.color) != 3 or any(not 0 <= c <= 255 for c in self.color):
            raise DatabaseError(f"color must be an RGB triple in 0..255, got {self.color}")
        if self.reference.is_zero:
            raise ZeroSpectrumError(f"class {self.name!r} has a zero reference spectrum")
        self.taxonomy_path = [str(p) for p in self.taxonomy_path]
        if not self.taxonomy_path or self.taxonomy_path[0] != "World":
            raise DatabaseError(
                f"taxonomy path must be rooted at World, got {self.taxonomy_path}"
            )


class SpectralDatabase:
    """Ordered, mutable collection of semantic classes.

    Ids are assigned by a monotone counter and never reused after removal,
    so label maps produced under an older snapshot stay unambiguous.
    ``version`` bumps on every mutation (used by the service layer for
    cache keys).
    """

    def __init__(self):
        self._classes: list[SemanticClass] = []
        self._next_id = 1
        self.version = 0

    @property
    def classes(self) -> tuple[SemanticClass, ...]:
        """Immutable snapshot of the class list, in insertion (id) order."""
        return tuple(self._classes)

    def __len__(self) -> int:
        return len(self._classes)

    @property
    def band_count(self) -> int | None:
        return len(self._classes[0].reference.values) if self._classes else None

    def get(self, class_id: int) -> SemanticClass:
        for c in self._classes:
            if c.id == class_id:
                return c
        raise UnknownClassError(f"no class with id {class_id}")

    def add_class(
        self,
        name: str,
        color: tuple[int, int, int],
        reference: Spectrum,
        taxonomy_path: list[str] | None = None,
    ) -> int:
        if any(c.name == name for c in self._classes):
            raise DuplicateClassError(f"class name {name!r} already exists")
        expected = self.band_count
        if expected is not None and len(reference.values) != expected:
            raise DatabaseError(
                f"reference has {len(reference.values)} bands, database uses {expected}"
            )
        if taxonomy_path is None:
            taxonomy_path = default_taxonomy_path(name)
        cls = SemanticClass(self._next_id, name, tuple(color), reference, list(taxonomy_path))
        self._classes.append(cls)
        self._next_id += 1
        self.version += 1
        return cls.id

    def remove_class(self, class_id: int) -> None:
        for i, c in enumerate(self._classes):
            if c.id == class_id:
                del self._classes[i]
                self.version += 1
                return
        raise UnknownClassError(f"no class with id {class_id}")


def save_db(db: SpectralDatabase, path: str | Path) -> None:
    doc = {
        "classes": [
            {
                "id": c.id,
                "name": c.name,
                "color": list(c.color),
                "taxonomy": list(c.taxonomy_path),
                "wavelengths_nm": _f32_list(c.reference.wavelengths),
                "values": _f32_list(c.reference.values),
            }
            for c in db.classes
        ]
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_db(path: str | Path) -> SpectralDatabase:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise DatabaseError(f"{path}: malformed JSON: {e}") from e
    if not isinstance(doc, dict) or "classes" not in doc:
        raise DatabaseError(f"{path}: missing 'classes' key")
    db = SpectralDatabase()
    seen_ids: set[int] = set()
    last_id = 0
    for entry in doc["classes"]:
        try:
            cls = SemanticClass(
                id=int(entry["id"]),
                name=str(entry["name"]),
                color=tuple(entry["color"]),
                reference=Spectrum(entry["wavelengths_nm"], entry["values"]),
                taxonomy_path=list(entry["taxonomy"]),
            )
        except KeyError as e:
            raise DatabaseError(f"{path}: class entry missing field {e}") from e
        if cls.id in seen_ids:
            raise DatabaseError(f"{path}: duplicate class id {cls.id}")
        if cls.id <= last_id:
            raise DatabaseError(f"{path}: class ids must be strictly increasing")
        if any(c.name == cls.name for c in db._classes):
            raise DuplicateClassError(f"{path}: duplicate class name {cls.name!r}")
        expected = db.band_count
        if expected is not None and len(cls.reference.values) != expected:
            raise DatabaseError(f"{path}: inconsistent band counts")
        seen_ids.add(cls.id)
        last_id = cls.id
        db._classes.append(cls)
    db._next_id = last_id + 1
    return db


def _f32_list(values: np.ndarray) -> list[float]:
    # Round-trip through f32 so the JSON document re-loads bit-identically.
    return [float(v) for v in np.asarray(values, dtype=np.float32)]
