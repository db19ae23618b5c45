"""Separatrix extraction from descriptor fields by Roberts-cross thresholding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EdgeMap, GridMismatchError, ParameterError, ScalarField

# Suggested thresholds on the min-max normalized field, keyed by |extent|.
# Longer propagations sharpen the descriptor jumps, so the threshold grows.
SIGMA_HINTS = ((np.pi, 4e-3), (1.5 * np.pi, 9e-3), (2 * np.pi, 2e-2), (3 * np.pi, 3e-2))


def suggest_sigma(extent: float) -> float:
    """Threshold heuristic interpolated (log-linearly) over :data:`SIGMA_HINTS`."""
    xs = np.array([h[0] for h in SIGMA_HINTS])
    ys = np.log([h[1] for h in SIGMA_HINTS])
    return float(np.exp(np.interp(abs(extent), xs, ys)))


def normalize_field(field: ScalarField) -> ScalarField:
    """Min-max rescale to [0, 1]. Non-finite pixels become 0."""
    vals = np.asarray(field.values, dtype=float)
    finite = np.isfinite(vals)
    if not finite.any():
        raise ParameterError("field has no finite values")
    lo = vals[finite].min()
    hi = vals[finite].max()
    if not hi > lo:
        raise ParameterError(f"field is constant ({lo!r}); cannot normalize")
    out = np.zeros_like(vals)
    out[finite] = (vals[finite] - lo) / (hi - lo)
    return ScalarField(field.spec, out, field.f0, field.fB, field.fF, field.gamma)


def roberts_gradient(field) -> np.ndarray:
    """Sum of squared diagonal differences over each 2x2 block.

    Accepts a :class:`ScalarField` or a 2-D array; the result has shape
    ``(n - 1, m - 1)``.
    """
    I = np.asarray(field.values if isinstance(field, ScalarField) else field, dtype=float)
    if I.ndim != 2 or min(I.shape) < 2:
        raise ParameterError(f"need a 2-D array with both sides >= 2, got shape {I.shape}")
    d1 = I[:-1, :-1] - I[1:, 1:]
    d2 = I[1:, :-1] - I[:-1, 1:]
    return d1 * d1 + d2 * d2


def detect_edges(field: ScalarField, sigma: float) -> EdgeMap:
    """Edge pixels where the Roberts gradient exceeds ``sigma``.

    The gradient lives on the top-left pixel of each 2x2 block; the last row
    and column are padded with False.
    """
    if not sigma > 0:
        raise ParameterError(f"sigma={sigma!r} must be positive")
    g = roberts_gradient(field)
    mask = np.zeros(field.spec.shape, bool)
    mask[:-1, :-1] = g > sigma
    return EdgeMap(field.spec, mask, float(sigma))


def extract_separatrices(field: ScalarField, sigma: float) -> EdgeMap:
    """Normalize then threshold; ``sigma`` refers to the normalized field."""
    return detect_edges(normalize_field(field), sigma)


NONE, FORWARD, BACKWARD, BOTH = 0, 1, 2, 3


@dataclass(frozen=True)
class EdgeOverlay:
    """Per-pixel code: 0 none, 1 forward only, 2 backward only, 3 both."""

    codes: np.ndarray

    @property
    def forward(self) -> np.ndarray:
        return (self.codes & FORWARD) != 0

    @property
    def backward(self) -> np.ndarray:
        return (self.codes & BACKWARD) != 0

    @property
    def both(self) -> np.ndarray:
        return self.codes == BOTH


def compose_edges(forward: EdgeMap, backward: EdgeMap) -> EdgeOverlay:
    if forward.spec != backward.spec:
        raise GridMismatchError(f"grids differ: {forward.spec} vs {backward.spec}")
    codes = forward.mask.astype(np.uint8) * FORWARD + backward.mask.astype(np.uint8) * BACKWARD
    return EdgeOverlay(codes)
