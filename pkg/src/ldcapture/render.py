"""Raster views of fields, labels, edges and capture masks.

Images are flipped vertically so that +y points up. Rendering only reads
the arrays it is given.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .fileio import atomic_write
from .model import Label

LABEL_COLORS = {
    Label.WEAKLY_STABLE: (255, 255, 255),
    Label.UNSTABLE: (70, 110, 220),
    Label.CRASH: (60, 170, 80),
    Label.INSIDE_BODY: (20, 100, 40),
    Label.ERROR: (220, 40, 40),
}
EDGE_COLOR = (0, 0, 0)
BACKWARD_EDGE_COLOR = (30, 60, 200)
FORWARD_EDGE_COLOR = (128, 128, 128)
CAPTURE_COLOR = (255, 150, 0)


def field_gray(values: np.ndarray, clip=(2.0, 98.0)) -> np.ndarray:
    """8-bit grayscale with the display range clipped to the given percentiles."""
    v = np.asarray(values, float)
    finite = np.isfinite(v)
    out = np.zeros(v.shape, np.uint8)
    if not finite.any():
        return out
    lo, hi = np.percentile(v[finite], clip)
    if hi <= lo:
        hi = lo + 1.0
    scaled = np.clip((np.where(finite, v, lo) - lo) / (hi - lo), 0.0, 1.0)
    out[:] = np.round(scaled * 255).astype(np.uint8)
    return out


def label_rgb(labels: np.ndarray) -> np.ndarray:
    rgb = np.zeros(labels.shape + (3,), np.uint8)
    for lab, color in LABEL_COLORS.items():
        rgb[labels == int(lab)] = color
    return rgb


def overlay(rgb: np.ndarray, mask: np.ndarray, color) -> np.ndarray:
    out = np.array(rgb, copy=True)
    out[np.asarray(mask, bool)] = color
    return out


def compose(field=None, labels=None, edges=(), capture=None) -> np.ndarray:
    """Stack layers bottom-up: field or labels, capture highlight, edge masks.

    ``edges`` is a sequence of ``(mask, color)`` pairs or bare masks (drawn black).
    """
    if labels is not None:
        rgb = label_rgb(labels)
    elif field is not None:
        g = field_gray(field)
        rgb = np.repeat(g[..., None], 3, axis=2)
    else:
        raise ValueError("need a field or labels as the base layer")
    if capture is not None:
        rgb = overlay(rgb, capture, CAPTURE_COLOR)
    for item in edges:
        mask, color = item if isinstance(item, tuple) else (item, EDGE_COLOR)
        rgb = overlay(rgb, mask, color)
    return rgb


def save_image(path, pixels: np.ndarray):
    """Write PNG, or binary PGM/PPM when the suffix is ``.pgm``/``.ppm``."""
    path = Path(path)
    img = np.flipud(np.asarray(pixels, np.uint8))
    suffix = path.suffix.lower()
    if suffix == ".pgm" and img.ndim == 3:
        img = np.round(img.mean(axis=2)).astype(np.uint8)
    buf = io.BytesIO()
    fmt = {".png": "PNG", ".pgm": "PPM", ".ppm": "PPM"}.get(suffix)
    if fmt is None:
        raise ValueError(f"unsupported image suffix {path.suffix!r}")
    Image.fromarray(np.ascontiguousarray(img)).save(buf, format=fmt)
    atomic_write(path, buf.getvalue())
