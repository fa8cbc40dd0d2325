#!/usr/bin/env python3
"""
Image I/O and coordinate grids.
8-bit PNG (via pypng) and binary PGM/PPM read/write, normalized pixel
coordinates, network rendering (including shifted periods) and synthetic
test images.
"""
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import png

from FourierNetwork import forward

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(Exception):
    """Base class for image decoding/encoding failures."""

    code = 2


class UnsupportedImageFormatError(ImageFormatError):
    code = 3


class CorruptImageError(ImageFormatError):
    code = 4


@dataclass(eq=False)
class ImageGrid:
    """Row-major pixels in [0, 1], shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"Image data must be (height, width[, channels]), got {data.shape}")
        if data.shape[2] not in (1, 3):
            raise ValueError(f"Images have 1 or 3 channels, got {data.shape[2]}")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("Image values must lie in [0, 1]")
        self.data = data

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def to_uint8(self) -> np.ndarray:
        return np.round(self.data * 255.0).astype(np.uint8)

    @classmethod
    def from_uint8(cls, pixels: np.ndarray) -> "ImageGrid":
        return cls(np.asarray(pixels, dtype=np.float64) / 255.0)


def _read_pnm(payload: bytes, path: str) -> ImageGrid:
    magic = payload[:2]
    channels = {b"P5": 1, b"P6": 3}.get(magic)
    if channels is None:
        raise UnsupportedImageFormatError(f"{path}: only binary P5/P6 netpbm files are supported")

    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(payload) and payload[pos:pos + 1].isspace():
            pos += 1
        if pos < len(payload) and payload[pos:pos + 1] == b"#":
            while pos < len(payload) and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(payload) and not payload[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptImageError(f"{path}: truncated netpbm header")
        tokens.append(payload[start:pos])
    pos += 1  # single whitespace before the raster

    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as e:
        raise CorruptImageError(f"{path}: malformed netpbm header") from e
    if width < 1 or height < 1 or maxval < 1:
        raise CorruptImageError(f"{path}: invalid netpbm dimensions")
    if maxval > 255:
        raise UnsupportedImageFormatError(f"{path}: 16-bit netpbm data is not supported")

    count = width * height * channels
    raster = payload[pos:pos + count]
    if len(raster) != count:
        raise CorruptImageError(f"{path}: expected {count} bytes of pixel data, found {len(raster)}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return ImageGrid(pixels.astype(np.float64) / float(maxval))


def _read_png(path: str) -> ImageGrid:
    try:
        width, height, rows, info = png.Reader(filename=path).asDirect()
        pixels = np.vstack([np.asarray(row, dtype=np.float64) for row in rows])
    except png.FormatError as e:
        raise CorruptImageError(f"{path}: {e}") from e
    except png.Error as e:
        raise CorruptImageError(f"{path}: {e}") from e
    except (EOFError, ValueError) as e:
        raise CorruptImageError(f"{path}: {e}") from e

    bitdepth = info["bitdepth"]
    if bitdepth > 8:
        raise UnsupportedImageFormatError(f"{path}: {bitdepth}-bit PNG data is not supported")
    planes = info["planes"]
    pixels = pixels.reshape(height, width, planes)
    if info.get("alpha"):
        pixels = pixels[:, :, :-1]
    return ImageGrid(pixels / float(2 ** bitdepth - 1))


def load_image(path: str) -> ImageGrid:
    """Read an 8-bit grayscale or RGB PNG/PGM/PPM into [0, 1] (value / 255)."""
    with open(path, "rb") as f:
        payload = f.read()
    if payload.startswith(PNG_SIGNATURE):
        return _read_png(path)
    if payload[:1] == b"P":
        return _read_pnm(payload, path)
    raise UnsupportedImageFormatError(f"{path}: not a PNG, PGM or PPM file")


def save_image(image: ImageGrid, path: str) -> None:
    """Write 8-bit PNG or binary PGM/PPM, chosen by file extension."""
    pixels = image.to_uint8()
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        writer = png.Writer(width=image.width, height=image.height,
                            greyscale=image.channels == 1, bitdepth=8)
        rows = pixels.reshape(image.height, image.width * image.channels)
        with open(path, "wb") as f:
            writer.write(f, [row.tolist() for row in rows])
    elif ext in (".pgm", ".ppm", ".pnm"):
        magic = "P5" if image.channels == 1 else "P6"
        header = f"{magic}\n{image.width} {image.height}\n255\n".encode("ascii")
        with open(path, "wb") as f:
            f.write(header + pixels.tobytes())
    else:
        raise UnsupportedImageFormatError(f"{path}: unsupported output extension {ext!r}")


def pixel_coordinates(h: int, w: int) -> np.ndarray:
    """Pixel (i, j) -> (j / w, i / h), row-major, shape (h * w, 2)."""
    if h < 1 or w < 1:
        raise ValueError(f"Grid dimensions must be positive, got {h}x{w}")
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return np.stack([cols.ravel() / w, rows.ravel() / h], axis=1)


def render_raw(params, h: int, w: int, x_offset: float = 0, y_offset: float = 0) -> np.ndarray:
    """Unclamped network output over the pixel grid shifted by (x_offset, y_offset)."""
    coords = pixel_coordinates(h, w) + np.array([x_offset, y_offset], dtype=np.float64)
    return forward(params, coords).reshape(h, w, -1)


def render(params, h: int, w: int, x_offset: float = 0, y_offset: float = 0) -> ImageGrid:
    """Network rendered over one period, clamped to [0, 1] for saving."""
    return ImageGrid(np.clip(render_raw(params, h, w, x_offset, y_offset), 0.0, 1.0))


def render_tiled(params, h: int, w: int, tiles: int) -> ImageGrid:
    """tiles x tiles consecutive periods stitched into one image."""
    blocks = [
        np.concatenate([render_raw(params, h, w, tx, ty) for tx in range(tiles)], axis=1)
        for ty in range(tiles)
    ]
    return ImageGrid(np.clip(np.concatenate(blocks, axis=0), 0.0, 1.0))


Component = Tuple[Tuple[int, int], float, str]


def band_limited_image(h: int, w: int, components: Iterable[Component],
                       offset: float = 0.5, channels: int = 1) -> ImageGrid:
    """offset + sum of amp * cos/sin(2 pi (n_x x + n_y y)) sampled on the pixel grid."""
    components = list(components)
    if offset - sum(abs(a) for _, a, _ in components) < 0 or offset + sum(abs(a) for _, a, _ in components) > 1:
        raise ValueError("Component amplitudes would leave the [0, 1] range")
    coords = pixel_coordinates(h, w)
    values = np.full(coords.shape[0], offset, dtype=np.float64)
    for (nx, ny), amplitude, kind in components:
        phase = 2.0 * np.pi * (nx * coords[:, 0] + ny * coords[:, 1])
        values += amplitude * (np.cos(phase) if kind == "cos" else np.sin(phase))
    values = values.reshape(h, w, 1)
    return ImageGrid(np.repeat(values, channels, axis=2))


def natural_image(h: int, w: int, seed: int = 0, channels: int = 3,
                  discs: int = 6, slope: float = 1.0) -> ImageGrid:
    """Image with a 1/f^slope amplitude spectrum plus a few hard-edged discs."""
    rng = np.random.Generator(np.random.PCG64(seed))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.sqrt(fx ** 2 + fy ** 2)
    radius[0, 0] = 1.0
    falloff = radius ** (-slope)
    falloff[0, 0] = 0.0

    data = np.empty((h, w, channels))
    for c in range(channels):
        noise = np.fft.fft2(rng.normal(size=(h, w)))
        data[:, :, c] = np.fft.ifft2(noise * falloff).real

    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    for _ in range(discs):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        r = rng.uniform(0.05, 0.2) * min(h, w)
        inside = (rows - cy) ** 2 + (cols - cx) ** 2 <= r ** 2
        data[inside] = rng.normal(scale=data.std(), size=channels)

    lo, hi = data.min(), data.max()
    data = 0.05 + 0.9 * (data - lo) / (hi - lo if hi > lo else 1.0)
    return ImageGrid(data)


def resolve_images(paths: Sequence[str], synthetic: Optional[str], size: int = 64,
                   count: int = 1) -> list:
    """Load the configured images, or generate `count` synthetic ones."""
    if paths:
        return [load_image(p) for p in paths]
    if synthetic == "natural":
        return [natural_image(size, size, seed=i) for i in range(count)]
    if synthetic == "band_limited":
        rng = np.random.Generator(np.random.PCG64(0))
        images = []
        for _ in range(count):
            components = [((int(rng.integers(1, 11)), int(rng.integers(-10, 11))),
                           float(rng.uniform(0.02, 0.04)), str(rng.choice(["cos", "sin"])))
                          for _ in range(10)]
            images.append(band_limited_image(size, size, components, channels=1))
        return images
    raise ValueError("No images configured: pass --image or --synthetic {natural,band_limited}")
