"""Vector field and geometry of the planar elliptic restricted three-body problem.

The independent variable is the primaries' true anomaly ``f``. Coordinates are
barycentric in the pulsating synodic frame: the larger primary sits at
``(-mu, 0)``, the target body at ``(1 - mu, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (NumericalError, RelativeState, SingularityError,
                    SynodicState, SystemParams)


def anomaly_rate(f: float, e_p: float) -> float:
    """Rate ``df/dt`` of the true anomaly with respect to normalized time."""
    return (1.0 + e_p * math.cos(f)) ** 2 / (1.0 - e_p * e_p) ** 1.5


def pulsation(f: float, e_p: float) -> float:
    """Physical primaries' distance in units of the semi-major axis."""
    return (1.0 - e_p * e_p) / (1.0 + e_p * math.cos(f))


def _distances(x, y, mu):
    r1 = math.hypot(x + mu, y)
    r2 = math.hypot(x + mu - 1.0, y)
    if r1 == 0.0 or r2 == 0.0:
        raise SingularityError(f"point ({x!r}, {y!r}) coincides with a primary")
    return r1, r2


def omega(x: float, y: float, f: float, params: SystemParams) -> float:
    """Pseudo-potential whose gradient drives the synodic-frame motion."""
    mu = params.mu
    r1, r2 = _distances(x, y, mu)
    bracket = 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2 + 0.5 * mu * (1.0 - mu)
    return bracket / (1.0 + params.e_p * math.cos(f))


def omega_gradient(x: float, y: float, f: float, params: SystemParams) -> tuple[float, float]:
    mu = params.mu
    r1, r2 = _distances(x, y, mu)
    r13 = r1 ** 3
    r23 = r2 ** 3
    d = 1.0 + params.e_p * math.cos(f)
    wx = (x - (1.0 - mu) * (x + mu) / r13 - mu * (x + mu - 1.0) / r23) / d
    wy = (y - (1.0 - mu) * y / r13 - mu * y / r23) / d
    return wx, wy


def eom_rhs(state: SynodicState, params: SystemParams) -> np.ndarray:
    """Derivative of ``(x, y, x', y')`` with respect to the true anomaly."""
    wx, wy = omega_gradient(state.x, state.y, state.f, params)
    return np.array([state.xp, state.yp, wx + 2.0 * state.yp, wy - 2.0 * state.xp])


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def to_mars_relative(state: SynodicState, f0: float, params: SystemParams) -> RelativeState:
    """Map a synodic state to the target-centred, non-rotating frame.

    The output frame is aligned with the synodic axes at ``f0``; positions are
    physical (pulsation applied) and velocities are per unit normalized time.
    """
    e = params.e_p
    f = state.f
    k = pulsation(f, e)
    nu = anomaly_rate(f, e)
    rot = _rotation(f - f0)
    d = np.array([state.x - (1.0 - params.mu), state.y])
    dp = np.array([state.xp, state.yp])
    radial = e * math.sin(f) / (1.0 + e * math.cos(f))
    frame_rate = np.array([-d[1], d[0]])
    P = k * rot @ d
    V = nu * k * rot @ (radial * d + frame_rate + dp)
    return RelativeState(float(P[0]), float(P[1]), float(V[0]), float(V[1]))


def from_mars_relative(rel: RelativeState, f: float, f0: float,
                       params: SystemParams) -> SynodicState:
    """Inverse of :func:`to_mars_relative` at true anomaly ``f``."""
    e = params.e_p
    k = pulsation(f, e)
    nu = anomaly_rate(f, e)
    rot_t = _rotation(-(f - f0))
    d = rot_t @ rel.position / k
    w = rot_t @ rel.velocity / (nu * k)
    radial = e * math.sin(f) / (1.0 + e * math.cos(f))
    dp = w - radial * d - np.array([-d[1], d[0]])
    return SynodicState(float(f), float(d[0] + 1.0 - params.mu), float(d[1]),
                        float(dp[0]), float(dp[1]))


def kepler_energy(rel: RelativeState, params: SystemParams) -> float:
    """Two-body energy about the target body."""
    r = math.hypot(rel.X, rel.Y)
    if r == 0.0:
        raise SingularityError("Kepler energy evaluated at the target's centre")
    return 0.5 * (rel.VX ** 2 + rel.VY ** 2) - params.mu / r


def jacobi_constant(state: SynodicState, params: SystemParams) -> float:
    """Circular-problem Jacobi integral; the eccentricity is ignored."""
    mu = params.mu
    x, y = state.x, state.y
    r1, r2 = _distances(x, y, mu)
    return (x * x + y * y + 2.0 * (1.0 - mu) / r1 + 2.0 * mu / r2 + mu * (1.0 - mu)
            - (state.xp ** 2 + state.yp ** 2))


@dataclass(frozen=True)
class EnergyLandmarks:
    xL1: float
    xL2: float
    xL3: float
    CJ1: float
    CJ2: float
    CJ3: float


def collinear_residual(x: float, mu: float) -> float:
    """x-component of the circular-problem force at ``(x, 0)``."""
    d1 = x + mu
    d2 = x + mu - 1.0
    return x - (1.0 - mu) * d1 / abs(d1) ** 3 - mu * d2 / abs(d2) ** 3


def _newton(poly, seed, tol=1e-15, maxiter=100):
    dpoly = np.polyder(poly)
    g = seed
    for _ in range(maxiter):
        step = np.polyval(poly, g) / np.polyval(dpoly, g)
        g -= step
        if abs(step) <= tol * max(1.0, abs(g)):
            return g
    raise NumericalError(f"collinear point solve did not converge from seed {seed!r}")


def lagrange_points(params: SystemParams) -> EnergyLandmarks:
    """Collinear equilibria and their Jacobi constants (circular problem)."""
    mu = params.mu
    hill = (mu / 3.0) ** (1.0 / 3.0)
    # Quintics in the distance from the nearest primary.
    g1 = _newton([1.0, -(3.0 - mu), 3.0 - 2.0 * mu, -mu, 2.0 * mu, -mu], hill)
    g2 = _newton([1.0, 3.0 - mu, 3.0 - 2.0 * mu, -mu, -2.0 * mu, -mu], hill)
    g3 = _newton([1.0, 2.0 + mu, 1.0 + 2.0 * mu, -(1.0 - mu), -2.0 * (1.0 - mu), -(1.0 - mu)],
                 1.0 - 7.0 * mu / 12.0)
    xs = [1.0 - mu - g1, 1.0 - mu + g2, -mu - g3]
    # Polish on the force balance itself so the residual is at round-off level.
    polished = []
    for x in xs:
        for _ in range(5):
            h = 1e-7 * max(abs(x), 1e-3)
            slope = (collinear_residual(x + h, mu) - collinear_residual(x - h, mu)) / (2 * h)
            dx = collinear_residual(x, mu) / slope
            x -= dx
            if abs(dx) < 1e-17:
                break
        polished.append(x)
    cj = [jacobi_constant(SynodicState(0.0, x, 0.0, 0.0, 0.0), params) for x in polished]
    return EnergyLandmarks(*(float(v) for v in polished), *(float(v) for v in cj))
