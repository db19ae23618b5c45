"""Physical constants and the grid/field/label containers shared by the pipeline.

All containers are frozen dataclasses; array payloads are flagged read-only on
construction so they can be handed to worker threads without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

AU_KM = 1.495978707e8

# Sun-Mars system
SUN_MARS_MU = 3.226201e-7
SUN_MARS_EP = 0.093418
SUN_MARS_AP_AU = 1.523688
MARS_RADIUS_KM = 3397.0
MARS_SOI_FACTOR = 170.0


class ParameterError(ValueError):
    """Raised when a constructor argument is outside its admissible range."""


class SingularityError(ArithmeticError):
    """Raised when a quantity is evaluated on top of a primary."""


class NumericalError(RuntimeError):
    """Raised when an integration or root solve fails to converge."""


class StiffnessError(NumericalError):
    """Raised when the step size underflows the configured minimum."""


class BracketError(ValueError):
    """Raised when an event bracket holds no sign or truth-value change."""


class GridMismatchError(ValueError):
    """Raised when two grid-based objects do not share the same grid."""


class Label(IntEnum):
    """Stability labels. The integer codes are the on-disk label codes."""

    WEAKLY_STABLE = 0
    UNSTABLE = 1
    CRASH = 2
    INSIDE_BODY = 3
    ERROR = 4


def _frozen(arr, dtype=None) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SystemParams:
    """Normalized constants of a planar elliptic restricted three-body system.

    Lengths are normalized by the primaries' semi-major axis, so that the
    synodic distance between the primaries is one.
    """

    mu: float
    e_p: float
    a_p: float
    R_km: float
    soi_factor: float
    au_km: float = AU_KM

    def __post_init__(self):
        checks = [
            ("mu", 0.0 < self.mu < 0.5),
            ("e_p", 0.0 <= self.e_p < 1.0),
            ("a_p", self.a_p > 0.0),
            ("R_km", self.R_km > 0.0),
            ("soi_factor", self.soi_factor > 1.0),
            ("au_km", self.au_km > 0.0),
        ]
        for name, ok in checks:
            value = getattr(self, name)
            if not ok or not math.isfinite(value):
                raise ParameterError(f"{name}={value!r} is out of range")
        if not self.Rsoi_norm < 1.0:
            raise ParameterError(f"soi_factor={self.soi_factor!r} puts the SOI beyond the primaries' distance")

    @property
    def length_unit_km(self) -> float:
        return self.a_p * self.au_km

    @property
    def R_norm(self) -> float:
        return self.R_km / self.length_unit_km

    @property
    def Rsoi_norm(self) -> float:
        return self.soi_factor * self.R_norm


def make_params(mu=SUN_MARS_MU, e_p=SUN_MARS_EP, a_p=SUN_MARS_AP_AU,
                R_km=MARS_RADIUS_KM, soi_factor=MARS_SOI_FACTOR,
                au_km=AU_KM) -> SystemParams:
    """Build validated system constants; defaults are the Sun-Mars values."""
    return SystemParams(float(mu), float(e_p), float(a_p), float(R_km),
                        float(soi_factor), float(au_km))


SUN_MARS = make_params()


@dataclass(frozen=True)
class SynodicState:
    """Particle state in the pulsating synodic frame at true anomaly ``f``.

    ``xp`` and ``yp`` are derivatives with respect to ``f``.
    """

    f: float
    x: float
    y: float
    xp: float
    yp: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array(with_f=True)):
            raise ParameterError(f"non-finite synodic state {self!r}")

    def as_array(self, with_f: bool = False) -> np.ndarray:
        if with_f:
            return np.array([self.f, self.x, self.y, self.xp, self.yp])
        return np.array([self.x, self.y, self.xp, self.yp])

    @classmethod
    def from_array(cls, f: float, arr) -> "SynodicState":
        return cls(float(f), float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


@dataclass(frozen=True)
class RelativeState:
    """Target-centred, non-rotating state with velocity per normalized time."""

    X: float
    Y: float
    VX: float
    VY: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.X, self.Y, self.VX, self.VY)):
            raise ParameterError(f"non-finite relative state {self!r}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.X, self.Y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.VX, self.VY])


@dataclass(frozen=True)
class GridSpec:
    """Square ``n`` x ``n`` grid of offsets from the target body.

    Row ``i`` increases with y, column ``j`` with x. Offsets at the corners
    are exactly ``+-eps``.
    """

    eps: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n={self.n!r} must be an integer >= 2")
        if not (self.eps > 0.0 and math.isfinite(self.eps)):
            raise ParameterError(f"eps={self.eps!r} must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def axis(self) -> np.ndarray:
        a = np.linspace(-self.eps, self.eps, self.n)
        # Exactly antisymmetric, so mirrored offsets are bitwise mirror images.
        return 0.5 * (a - a[::-1])

    @property
    def spacing(self) -> float:
        return 2.0 * self.eps / (self.n - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def offset(self, i: int, j: int) -> tuple[float, float]:
        ax = self.axis
        return float(ax[j]), float(ax[i])

    def offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` offset arrays of shape ``(n, n)``."""
        ax = self.axis
        X, Y = np.meshgrid(ax, ax, indexing="xy")
        return X, Y

    def index_of(self, X: float, Y: float) -> tuple[int, int]:
        """Nearest grid index ``(i, j)`` for an offset; clipped to the grid."""
        scale = (self.n - 1) / (2.0 * self.eps)
        j = int(round((X + self.eps) * scale))
        i = int(round((Y + self.eps) * scale))
        return min(max(i, 0), self.n - 1), min(max(j, 0), self.n - 1)


def _check_shape(spec: GridSpec, arr: np.ndarray, what: str):
    if arr.shape != spec.shape:
        raise GridMismatchError(f"{what} has shape {arr.shape}, grid is {spec.shape}")


@dataclass(frozen=True)
class ScalarField:
    """Lagrangian-descriptor values over a grid.

    ``fB`` and ``fF`` are the backward/forward extents measured from ``f0``.
    """

    spec: GridSpec
    values: np.ndarray
    f0: float
    fB: float
    fF: float
    gamma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        _check_shape(self.spec, self.values, "values")


@dataclass(frozen=True)
class LabelField:
    """Stability labels over a grid, classified on the interval ``[f0, ff]``.

    ``event_anomaly`` holds the escape or impact anomaly for UNSTABLE and
    CRASH points and NaN elsewhere.
    """

    spec: GridSpec
    labels: np.ndarray
    event_anomaly: np.ndarray
    f0: float
    ff: float

    def __post_init__(self):
        object.__setattr__(self, "labels", _frozen(self.labels, np.uint8))
        object.__setattr__(self, "event_anomaly", _frozen(self.event_anomaly, np.float64))
        _check_shape(self.spec, self.labels, "labels")
        _check_shape(self.spec, self.event_anomaly, "event_anomaly")

    def mask(self, label: Label) -> np.ndarray:
        return self.labels == int(label)


@dataclass(frozen=True)
class EdgeMap:
    """Binary separatrix mask produced with threshold ``sigma``."""

    spec: GridSpec
    mask: np.ndarray
    sigma: float = field(default=float("nan"))

    def __post_init__(self):
        object.__setattr__(self, "mask", _frozen(self.mask, bool))
        _check_shape(self.spec, self.mask, "mask")
