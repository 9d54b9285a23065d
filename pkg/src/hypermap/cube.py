"""Hyperspectral cube model, the HSC on-disk format, and derived views.

A cube is a (height, width, bands) float32 array of reflectance in [0, 1],
band-interleaved-by-pixel, with a strictly increasing wavelength axis and
nadir camera metadata. Cubes are treated as immutable once constructed, so
they can be read from any number of workers.

HSC format (little-endian): magic ``HSCUBE1\\n`` | u32 width | u32 height |
u32 bands | u8 dtype code (0=u8, 1=u16, 2=f32) | f32 wavelengths[bands] |
f32 h_m | f32 fov_deg | f64 pose_x | f64 pose_y | f64 pose_yaw | payload.
Integer payloads store ``round_half_up(value * dtype_max)`` and are divided
back by the dtype maximum on load, so reflectance stays dtype-independent.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptHeaderError,
    CubeFormatError,
    InvalidWavelengthsError,
    TruncatedPayloadError,
)

HSC_MAGIC = b"HSCUBE1\n"

_CODE_TO_DTYPE = {0: np.dtype("u1"), 1: np.dtype("<u2"), 2: np.dtype("<f4")}
_NAME_TO_CODE = {"u8": 0, "u16": 1, "f32": 2}
_QUANT_MAX = {0: 255, 1: 65535}

# Band targets for the false-RGB rendering: standard RGB primaries.
FALSE_RGB_TARGETS_NM = (640.0, 540.0, 470.0)

# Pixels quantized/classified per block; bounds transient memory on big cubes.
_BLOCK_PIXELS = 1 << 18


@dataclass(frozen=True)
class CameraMeta:
    """Nadir camera geometry: height above ground, full field of view, pose.

    The pose is the camera's ground projection in the world frame:
    (x, y) in meters plus yaw in radians.
    """

    h_m: float
    fov_deg: float
    pose_x: float = 0.0
    pose_y: float = 0.0
    pose_yaw: float = 0.0

    def __post_init__(self):
        if not self.h_m > 0:
            raise ValueError(f"camera height must be > 0 m, got {self.h_m}")
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError(f"camera FOV must be in (0, 180) degrees, got {self.fov_deg}")


@dataclass
class Spectrum:
    """A per-band reflectance profile on a wavelength grid.

    An all-zero spectrum is representable (a dead pixel is a valid
    observation) but is rejected wherever a spectral direction is needed:
    as a database reference and under the SAM metric.
    """

    wavelengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.wavelengths.ndim != 1:
            raise ValueError("spectrum wavelengths and values must be 1-D")
        if len(self.values) == 0:
            raise ValueError("spectrum must not be empty")
        if len(self.wavelengths) != len(self.values):
            raise ValueError("spectrum wavelengths and values must have equal length")

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass
class HyperCube:
    """W x H x B reflectance cube with wavelengths and camera metadata."""

    wavelengths: np.ndarray  # (bands,) float32, nm, strictly increasing
    data: np.ndarray         # (height, width, bands) float32 in [0, 1]
    camera: CameraMeta

    def __post_init__(self):
        self.wavelengths = np.ascontiguousarray(self.wavelengths, dtype=np.float32)
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError("cube data must be a (height, width, bands) array")
        if self.wavelengths.ndim != 1 or len(self.wavelengths) != self.bands:
            raise InvalidWavelengthsError(
                f"wavelength count {len(self.wavelengths)} != band count {self.bands}"
            )
        if not np.all(np.diff(self.wavelengths) > 0):
            raise InvalidWavelengthsError("wavelengths must be strictly increasing")
        lo = float(self.data.min(initial=0.0))
        hi = float(self.data.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise CubeFormatError(f"reflectance must lie in [0, 1], got [{lo}, {hi}]")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def bands(self) -> int:
        return self.data.shape[2]


def quantize_reflectance(values: np.ndarray, dtype: str) -> np.ndarray:
    """Quantize [0, 1] reflectance with round-half-up; f32 passes through."""
    code = _lookup_dtype(dtype)
    if code == 2:
        return np.ascontiguousarray(values, dtype=np.float32)
    m = _QUANT_MAX[code]
    out = np.empty(values.shape, dtype=_CODE_TO_DTYPE[code])
    flat_in = values.reshape(-1)
    flat_out = out.reshape(-1)
    for a in range(0, flat_in.shape[0], _BLOCK_PIXELS):
        b = min(a + _BLOCK_PIXELS, flat_in.shape[0])
        flat_out[a:b] = np.floor(flat_in[a:b] * np.float64(m) + 0.5)
    return out


def _lookup_dtype(dtype: str) -> int:
    if dtype not in _NAME_TO_CODE:
        raise ValueError(f"dtype must be one of {sorted(_NAME_TO_CODE)}, got {dtype!r}")
    return _NAME_TO_CODE[dtype]


def save_cube(cube: HyperCube, path: str | Path, dtype: str = "f32") -> None:
    """Write a cube to an HSC file, quantizing integer dtypes round-half-up."""
    code = _lookup_dtype(dtype)
    payload = quantize_reflectance(cube.data, dtype)
    cam = cube.camera
    with open(path, "wb") as f:
        f.write(HSC_MAGIC)
        f.write(struct.pack("<IIIB", cube.width, cube.height, cube.bands, code))
        f.write(cube.wavelengths.astype("<f4").tobytes())
        f.write(struct.pack("<ffddd", cam.h_m, cam.fov_deg, cam.pose_x, cam.pose_y, cam.pose_yaw))
        payload.tofile(f)


def load_cube(path: str | Path) -> HyperCube:
    """Read an HSC file; integer payloads are normalized to [0, 1]."""
    with open(path, "rb") as f:
        magic = f.read(len(HSC_MAGIC))
        if magic != HSC_MAGIC:
            raise CorruptHeaderError(f"{path}: not an HSC file (bad magic)")
        fixed = f.read(13)
        if len(fixed) != 13:
            raise CorruptHeaderError(f"{path}: header truncated")
        width, height, bands, code = struct.unpack("<IIIB", fixed)
        if width == 0 or height == 0 or bands == 0:
            raise CorruptHeaderError(f"{path}: zero-sized cube in header")
        if code not in _CODE_TO_DTYPE:
            raise CorruptHeaderError(f"{path}: unknown dtype code {code}")
        wl_bytes = f.read(4 * bands)
        if len(wl_bytes) != 4 * bands:
            raise CorruptHeaderError(f"{path}: header truncated in wavelength table")
        wavelengths = np.frombuffer(wl_bytes, dtype="<f4")
        if not np.all(np.diff(wavelengths) > 0):
            raise InvalidWavelengthsError(f"{path}: wavelengths must be strictly increasing")
        cam_bytes = f.read(32)
        if len(cam_bytes) != 32:
            raise CorruptHeaderError(f"{path}: header truncated in camera metadata")
        h_m, fov_deg, px, py, yaw = struct.unpack("<ffddd", cam_bytes)
        try:
            camera = CameraMeta(h_m, fov_deg, px, py, yaw)
        except ValueError as e:
            raise CorruptHeaderError(f"{path}: invalid camera metadata: {e}") from e
        dt = _CODE_TO_DTYPE[code]
        payload = np.fromfile(f, dtype=dt)
    n = width * height * bands
    if payload.size != n:
        raise TruncatedPayloadError(f"{path}: expected {n} samples, found {payload.size}")
    payload = payload.reshape(height, width, bands)
    if code == 2:
        data = payload.astype(np.float32, copy=False)
        if float(data.min()) < 0.0 or float(data.max()) > 1.0:
            raise CubeFormatError(f"{path}: f32 reflectance outside [0, 1]")
    else:
        data = payload.astype(np.float32) / np.float32(_QUANT_MAX[code])
    return HyperCube(wavelengths=wavelengths.copy(), data=data, camera=camera)


def false_rgb(cube: HyperCube) -> np.ndarray:
    """Render an (H, W, 3) uint8 false-RGB image.

    Each output channel takes the band nearest its target wavelength
    (640/540/470 nm; ties resolve to the lower band) and is min-max
    stretched independently to [0, 255]. A constant channel maps to 0.
    """
    if cube.bands < 3:
        raise ValueError(f"false RGB needs at least 3 bands, cube has {cube.bands}")
    out = np.zeros((cube.height, cube.width, 3), dtype=np.uint8)
    for c, target in enumerate(FALSE_RGB_TARGETS_NM):
        band = int(np.argmin(np.abs(cube.wavelengths.astype(np.float64) - target)))
        ch = cube.data[:, :, band].astype(np.float64)
        lo, hi = float(ch.min()), float(ch.max())
        if hi > lo:
            out[:, :, c] = np.floor((ch - lo) * (255.0 / (hi - lo)) + 0.5)
    return out


def pixel_spectrum(cube: HyperCube, x: int, y: int) -> Spectrum:
    """Spectrum of the pixel at column x, row y."""
    if not (0 <= x < cube.width and 0 <= y < cube.height):
        raise IndexError(f"pixel ({x}, {y}) outside {cube.width}x{cube.height} image")
    return Spectrum(cube.wavelengths.astype(np.float64), cube.data[y, x].astype(np.float64))
