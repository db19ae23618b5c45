"""Agreement between extracted separatrices and stability-class boundaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .model import EdgeMap, GridMismatchError, Label, LabelField, ParameterError


def class_boundaries(labels: LabelField) -> np.ndarray:
    """Pixels having a 4-neighbour with a different label.

    INSIDE_BODY counts as a label; ERROR pixels are never boundary pixels and
    are ignored as neighbours.
    """
    L = labels.labels
    valid = L != Label.ERROR
    out = np.zeros(L.shape, bool)
    for axis in (0, 1):
        a = np.take(L, range(L.shape[axis] - 1), axis=axis)
        b = np.take(L, range(1, L.shape[axis]), axis=axis)
        va = np.take(valid, range(L.shape[axis] - 1), axis=axis)
        vb = np.take(valid, range(1, L.shape[axis]), axis=axis)
        diff = (a != b) & va & vb
        if axis == 0:
            out[:-1, :] |= diff
            out[1:, :] |= diff
        else:
            out[:, :-1] |= diff
            out[:, 1:] |= diff
    return out


def disk_boundary(labels: LabelField) -> np.ndarray:
    """Boundary pixels belonging to, or 4-adjacent to, the INSIDE_BODY disk."""
    disk = labels.mask(Label.INSIDE_BODY)
    near = ndimage.binary_dilation(disk, structure=ndimage.generate_binary_structure(2, 1))
    return class_boundaries(labels) & near


def chebyshev_distance(mask: np.ndarray) -> np.ndarray:
    """Chessboard distance from every pixel to the nearest True pixel of ``mask``."""
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_cdt(~mask, metric="chessboard").astype(float)


@dataclass(frozen=True)
class Agreement:
    precision: float
    recall: float
    median_distance: float
    n_edges: int
    n_boundary: int

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "median_distance": None if math.isnan(self.median_distance) else self.median_distance,
                "n_edges": self.n_edges, "n_boundary": self.n_boundary}


def agreement(edges, boundary: np.ndarray, d: float = 2, exclude: np.ndarray | None = None,
              recall_over: np.ndarray | None = None) -> Agreement:
    """Precision/recall of edge pixels against boundary pixels within distance ``d``.

    ``edges`` is an :class:`EdgeMap` or a boolean array. ``exclude`` removes
    pixels (e.g. failed propagations) from both masks. ``recall_over``
    restricts the recall denominator to a subset of boundary pixels.
    """
    if d < 0:
        raise ParameterError(f"d={d!r} must be non-negative")
    emask = np.asarray(edges.mask if isinstance(edges, EdgeMap) else edges, bool)
    bmask = np.asarray(boundary, bool)
    if emask.shape != bmask.shape:
        raise GridMismatchError(f"edge mask {emask.shape} vs boundary {bmask.shape}")
    if exclude is not None:
        emask = emask & ~exclude
        bmask = bmask & ~exclude
    target = bmask if recall_over is None else (bmask & recall_over)
    ne, nb = int(emask.sum()), int(target.sum())
    if ne == 0:
        return Agreement(0.0, 0.0, math.nan, 0, nb)
    to_boundary = chebyshev_distance(bmask)
    to_edges = chebyshev_distance(emask)
    de = to_boundary[emask]
    precision = float(np.mean(de <= d))
    recall = float(np.mean(to_edges[target] <= d)) if nb else math.nan
    return Agreement(precision, recall, float(np.median(de)), ne, nb)


def validate(edges: EdgeMap, labels: LabelField, d: float = 2) -> dict:
    """Full report: overall agreement plus recall around the central disk."""
    if edges.spec != labels.spec:
        raise GridMismatchError(f"grids differ: {edges.spec} vs {labels.spec}")
    err = labels.mask(Label.ERROR)
    bnd = class_boundaries(labels)
    overall = agreement(edges, bnd, d, exclude=err)
    disk = agreement(edges, bnd, d, exclude=err, recall_over=disk_boundary(labels))
    return {"d": d, "sigma": edges.sigma, "overall": overall.as_dict(),
            "disk_recall": disk.recall, "n_disk_boundary": disk.n_boundary,
            "n_error": int(err.sum())}
