"""Grid surveys: initial conditions, descriptor fields, stability labels, capture sets."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numba
import numpy as np
from scipy import ndimage

from . import _kernel
from .dynamics import anomaly_rate, pulsation
from .model import (SUN_MARS, EdgeMap, GridMismatchError, GridSpec, Label,
                    LabelField, ParameterError, ScalarField, SynodicState,
                    SystemParams)
from .propagate import DEFAULT_CONFIG, IntegratorConfig, Terminal, propagate

log = logging.getLogger(__name__)

WORKERS_ENV = "LDCAPTURE_WORKERS"


@dataclass(frozen=True)
class SurveyRequest:
    grid: GridSpec
    f0: float = 0.0
    fB: float = 0.0
    fF: float = 0.0
    e0: float = 0.9
    gamma: float = 0.5

    def __post_init__(self):
        if not self.fB <= 0.0 <= self.fF:
            raise ParameterError(f"need fB <= 0 <= fF, got fB={self.fB!r}, fF={self.fF!r}")
        if not 0.0 <= self.e0 < 1.0:
            raise ParameterError(f"e0={self.e0!r} must be in [0, 1)")
        if not self.gamma > 0.0:
            raise ParameterError(f"gamma={self.gamma!r} must be positive")


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, then the environment, then all cores."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else numba.config.NUMBA_NUM_THREADS
    return max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))


def periapsis_states(X, Y, f0: float, e0: float, params: SystemParams) -> np.ndarray:
    """Vectorized periapsis initial conditions for arrays of offsets.

    Returns an array of shape ``X.shape + (4,)`` holding ``(x, y, x', y')``.
    Zero offsets produce NaN velocities.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    mu = params.mu
    k = pulsation(f0, params.e_p)
    nu = anomaly_rate(f0, params.e_p)
    r = np.hypot(X, Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        vp = np.sqrt(mu * (1.0 + e0) / (k * r))
        # Inertial periapsis speed minus the frame's rotation, per unit anomaly.
        s = (vp / (k * nu) - r) / r
        out = np.empty(X.shape + (4,))
        out[..., 0] = 1.0 - mu + X
        out[..., 1] = Y
        out[..., 2] = -Y * s
        out[..., 3] = X * s
    return out


def generate_ic(offset, f0: float = 0.0, e0: float = 0.9,
                params: SystemParams = SUN_MARS) -> SynodicState:
    """Periapsis of a prograde osculating ellipse about the target body.

    ``offset`` is the synodic position ``(X0, Y0)`` relative to the target.
    """
    X0, Y0 = map(float, offset)
    if X0 == 0.0 and Y0 == 0.0:
        raise ParameterError("offset must be non-zero to define a periapsis radius")
    st = periapsis_states(X0, Y0, f0, e0, params)
    return SynodicState.from_array(f0, st)


def inside_body(X, Y, f0: float, params: SystemParams) -> np.ndarray:
    return pulsation(f0, params.e_p) * np.hypot(X, Y) < params.R_norm


def classify_point(state0: SynodicState, ff: float, config: IntegratorConfig = DEFAULT_CONFIG,
                   params: SystemParams = SUN_MARS) -> tuple[Label, float]:
    """Classify one initial condition on ``[state0.f, ff]``.

    Returns the label and the escape/impact anomaly (NaN when weakly stable
    or inside the body).
    """
    if ff == state0.f:
        raise ParameterError("classification interval is empty")
    dx = state0.x - (1.0 - params.mu)
    if inside_body(dx, state0.y, state0.f, params):
        return Label.INSIDE_BODY, math.nan
    out = propagate(state0, ff, config, params, with_ld=False, stop_on_escape=True)
    if out.terminal is Terminal.IMPACT:
        return Label.CRASH, out.f_end
    if out.terminal is Terminal.ESCAPE:
        return Label.UNSTABLE, out.f_escape
    return Label.WEAKLY_STABLE, math.nan


@dataclass(frozen=True)
class LegResult:
    """Per-point outcome arrays of one propagation leg over a grid."""

    status: np.ndarray
    f_end: np.ndarray
    ld: np.ndarray
    escaped: np.ndarray
    f_escape: np.ndarray
    inside: np.ndarray


def sweep_leg(grid: GridSpec, f0: float, f1: float, e0: float, gamma: float, with_ld: bool,
              stop_on_escape: bool, config: IntegratorConfig = DEFAULT_CONFIG,
              params: SystemParams = SUN_MARS, workers: int | None = None,
              chunk_rows: int = 10) -> LegResult:
    """Propagate every grid point from ``f0`` to ``f1``.

    Points inside the body are not propagated. Each point's result depends
    only on its own initial condition, so the output does not depend on
    ``workers``.
    """
    X, Y = grid.offsets()
    inside = inside_body(X, Y, f0, params)
    states = periapsis_states(X, Y, f0, e0, params).reshape(-1, 4)
    flat_inside = inside.ravel()
    npts = states.shape[0]
    status = np.full(npts, _kernel.IMPACT, np.int64)
    f_end = np.full(npts, float(f0))
    ld = np.zeros(npts)
    esc = np.zeros(npts, bool)
    f_esc = np.full(npts, np.nan)

    todo = np.flatnonzero(~flat_inside)
    nthreads = resolve_workers(workers)
    previous = numba.get_num_threads()
    numba.set_num_threads(nthreads)
    try:
        chunk = max(1, chunk_rows * grid.n)
        for start in range(0, todo.size, chunk):
            idx = todo[start:start + chunk]
            st, fe, m, he, fesc = _kernel.sweep(
                np.ascontiguousarray(states[idx]), float(f0), float(f1), params.mu, params.e_p,
                params.R_norm, params.Rsoi_norm, *config.kernel_args(), float(gamma),
                bool(with_ld), bool(stop_on_escape))
            status[idx] = st
            f_end[idx] = fe
            ld[idx] = m
            esc[idx] = he
            f_esc[idx] = fesc
            log.info("leg f0=%g -> %g: %d/%d points", f0, f1,
                     min(start + chunk, todo.size), todo.size)
    finally:
        numba.set_num_threads(previous)

    shape = grid.shape
    return LegResult(status.reshape(shape), f_end.reshape(shape), ld.reshape(shape),
                     esc.reshape(shape), f_esc.reshape(shape), inside)


def labels_from_leg(grid: GridSpec, leg: LegResult, f0: float, ff: float) -> LabelField:
    labels = np.full(grid.shape, int(Label.WEAKLY_STABLE), np.uint8)
    event = np.full(grid.shape, np.nan)
    failed = leg.status < 0
    impact = (leg.status == _kernel.IMPACT) & ~leg.inside
    # Impact ends a leg, so an escape flag means the escape came first.
    unstable = leg.escaped & ~failed
    crash = impact & ~unstable
    labels[unstable] = Label.UNSTABLE
    event[unstable] = leg.f_escape[unstable]
    labels[crash] = Label.CRASH
    event[crash] = leg.f_end[crash]
    labels[leg.inside] = Label.INSIDE_BODY
    labels[failed] = Label.ERROR
    if failed.any():
        log.warning("%d grid points failed to propagate", int(failed.sum()))
    return LabelField(grid, labels, event, float(f0), float(ff))


def field_from_leg(grid: GridSpec, leg: LegResult, req: SurveyRequest, fB: float,
                   fF: float) -> ScalarField:
    values = np.array(leg.ld, copy=True)
    values[leg.status < 0] = np.nan
    return ScalarField(grid, values, req.f0, fB, fF, req.gamma)


def compute_label_field(req: SurveyRequest, direction: str,
                        config: IntegratorConfig = DEFAULT_CONFIG,
                        params: SystemParams = SUN_MARS,
                        workers: int | None = None) -> LabelField:
    """Classify every grid point over the backward or forward extent."""
    if direction not in ("backward", "forward"):
        raise ParameterError(f"direction={direction!r} must be 'backward' or 'forward'")
    extent = req.fB if direction == "backward" else req.fF
    if extent == 0.0:
        raise ParameterError(f"{direction} extent is zero")
    ff = req.f0 + extent
    leg = sweep_leg(req.grid, req.f0, ff, req.e0, req.gamma, False, True, config, params, workers)
    return labels_from_leg(req.grid, leg, req.f0, ff)


@dataclass(frozen=True)
class SurveyResult:
    """Descriptor fields and, for each non-empty leg, the matching labels."""

    total: ScalarField
    backward: ScalarField
    forward: ScalarField
    labels_backward: LabelField | None
    labels_forward: LabelField | None


def run_survey(req: SurveyRequest, config: IntegratorConfig = DEFAULT_CONFIG,
               params: SystemParams = SUN_MARS, workers: int | None = None) -> SurveyResult:
    """Descriptor fields and stability labels from a single pass per leg.

    Escape does not stop descriptor accumulation but its first occurrence is
    recorded, so the same trajectories yield the labels.
    """
    grid = req.grid
    legs = {}
    for name, extent in (("backward", req.fB), ("forward", req.fF)):
        if extent == 0.0:
            legs[name] = None
            continue
        legs[name] = sweep_leg(grid, req.f0, req.f0 + extent, req.e0, req.gamma, True, False,
                               config, params, workers)

    zeros = np.zeros(grid.shape)
    back = (field_from_leg(grid, legs["backward"], req, req.fB, 0.0) if legs["backward"]
            else ScalarField(grid, zeros, req.f0, 0.0, 0.0, req.gamma))
    fwd = (field_from_leg(grid, legs["forward"], req, 0.0, req.fF) if legs["forward"]
           else ScalarField(grid, zeros, req.f0, 0.0, 0.0, req.gamma))
    total = ScalarField(grid, back.values + fwd.values, req.f0, req.fB, req.fF, req.gamma)
    lb = labels_from_leg(grid, legs["backward"], req.f0, req.f0 + req.fB) if legs["backward"] else None
    lf = labels_from_leg(grid, legs["forward"], req.f0, req.f0 + req.fF) if legs["forward"] else None
    return SurveyResult(total, back, fwd, lb, lf)


def compute_ld_field(req: SurveyRequest, config: IntegratorConfig = DEFAULT_CONFIG,
                     params: SystemParams = SUN_MARS, workers: int | None = None):
    """Return ``(total, backward, forward)`` descriptor fields."""
    res = run_survey(req, config, params, workers)
    return res.total, res.backward, res.forward


def capture_set(labels_B: LabelField, labels_F: LabelField) -> np.ndarray:
    """Points that escape on the backward leg and stay on the forward leg."""
    if labels_B.spec != labels_F.spec:
        raise GridMismatchError(f"grids differ: {labels_B.spec} vs {labels_F.spec}")
    if labels_B.f0 != labels_F.f0:
        raise GridMismatchError(f"initial anomalies differ: {labels_B.f0} vs {labels_F.f0}")
    return labels_B.mask(Label.UNSTABLE) & labels_F.mask(Label.WEAKLY_STABLE)


@dataclass(frozen=True)
class Region:
    region_id: int
    offset: tuple[float, float]
    index: tuple[int, int]
    label: Label
    size: int


def sample_region(labels: LabelField, edge_map: EdgeMap) -> list[Region]:
    """One representative point and its label per edge-delimited region.

    Regions are 4-connected components of the non-edge pixels. The
    representative is the member pixel closest to the component centroid.
    """
    if labels.spec != edge_map.spec:
        raise GridMismatchError(f"grids differ: {labels.spec} vs {edge_map.spec}")
    comp, count = ndimage.label(~edge_map.mask)
    if count == 0:
        return []
    ids = np.arange(1, count + 1)
    centroids = ndimage.center_of_mass(np.ones_like(comp), comp, ids)
    sizes = ndimage.sum_labels(np.ones_like(comp), comp, ids)
    regions = []
    for rid, (ci, cj), size in zip(ids, centroids, sizes):
        ii, jj = np.nonzero(comp == rid)
        best = int(np.argmin((ii - ci) ** 2 + (jj - cj) ** 2))
        i, j = int(ii[best]), int(jj[best])
        regions.append(Region(int(rid), labels.spec.offset(i, j), (i, j),
                              Label(int(labels.labels[i, j])), int(size)))
    return regions
