"""Adaptive RK8(7) propagation with impact/escape events and descriptor accumulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import _kernel
from .model import (SUN_MARS, BracketError, NumericalError, ParameterError,
                    StiffnessError, SynodicState, SystemParams)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    h_init: float = 1e-4
    h_min: float = 1e-14
    h_max: float = 0.1
    max_steps: int = 2_000_000
    event_tol: float = 1e-12

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ParameterError(f"rel_tol={self.rel_tol!r} must be positive")
        if not self.abs_tol > 0:
            raise ParameterError(f"abs_tol={self.abs_tol!r} must be positive")
        if not 0 < self.h_min <= self.h_max:
            raise ParameterError(f"need 0 < h_min <= h_max, got {self.h_min!r}, {self.h_max!r}")
        if not self.h_init > 0:
            raise ParameterError(f"h_init={self.h_init!r} must be positive")
        if not self.event_tol > 0:
            raise ParameterError(f"event_tol={self.event_tol!r} must be positive")
        if self.max_steps < 1:
            raise ParameterError(f"max_steps={self.max_steps!r} must be positive")

    def kernel_args(self):
        return (float(self.rel_tol), float(self.abs_tol), float(self.h_init),
                float(self.h_min), float(self.h_max), int(self.max_steps),
                float(self.event_tol))


DEFAULT_CONFIG = IntegratorConfig()


class Terminal(Enum):
    REACHED_END = _kernel.REACHED_END
    IMPACT = _kernel.IMPACT
    ESCAPE = _kernel.ESCAPE


@dataclass(frozen=True)
class PropagationOutcome:
    """Result of one leg.

    ``ld`` is the descriptor integral over the leg (zero when it was not
    accumulated). ``f_escape`` is the first anomaly at which the escape
    condition held, or None.
    """

    terminal: Terminal
    f_end: float
    state_end: SynodicState
    ld: float
    f_escape: float | None
    steps: int


def raise_for_status(status: int, f: float):
    if status == _kernel.ERR_MAX_STEPS:
        raise NumericalError(f"step limit exceeded at f={f!r}")
    if status == _kernel.ERR_STEP_UNDERFLOW:
        raise StiffnessError(f"step size underflow at f={f!r}")
    if status == _kernel.ERR_NONFINITE:
        raise NumericalError(f"non-finite stage value at f={f!r}")


def step_rk87(state, f: float, h: float, params: SystemParams, gamma: float = 0.5,
              with_ld: bool = True):
    """Take one RK8(7) step of the extended system.

    ``state`` is a length-4 ``(x, y, x', y')`` or length-5 array (the fifth
    entry being the descriptor accumulator). Returns ``(new_state, error)``
    where ``error`` is the embedded-difference vector.
    """
    if h == 0:
        raise ParameterError("step size must be non-zero")
    y = np.zeros(_kernel.NDIM)
    arr = np.asarray(state, dtype=float)
    y[:arr.size] = arr
    k = np.empty((_kernel.NSTAGE, _kernel.NDIM))
    ynew = np.empty(_kernel.NDIM)
    err = np.empty(_kernel.NDIM)
    ld_sign = math.copysign(1.0, h) if with_ld else 0.0
    ok = _kernel.rk_step(float(f), y, float(h), params.mu, params.e_p, float(gamma),
                         ld_sign, k, ynew, err)
    if not ok:
        raise NumericalError(f"non-finite stage value in step from f={f!r}")
    return ynew, err


def _run(state0: SynodicState, f1, config, params, with_ld, gamma, stop_on_escape,
         out_f=None):
    y0 = np.zeros(_kernel.NDIM)
    y0[:4] = state0.as_array()
    if out_f is None:
        out_f = np.empty(0)
    out_y = np.full((out_f.size, _kernel.NDIM), np.nan)
    res = _kernel.propagate_core(
        y0, float(state0.f), float(f1), params.mu, params.e_p, params.R_norm,
        params.Rsoi_norm, *config.kernel_args(), float(gamma),
        bool(with_ld), bool(stop_on_escape), out_f, out_y)
    status, f_end, y_end, has_esc, f_esc, _, nsteps, nout = res
    raise_for_status(status, f_end)
    outcome = PropagationOutcome(
        terminal=Terminal(status),
        f_end=float(f_end),
        state_end=SynodicState.from_array(f_end, y_end),
        ld=float(y_end[4]),
        f_escape=float(f_esc) if has_esc else None,
        steps=int(nsteps),
    )
    return outcome, out_y[:nout]


def propagate(state0: SynodicState, f1: float, config: IntegratorConfig = DEFAULT_CONFIG,
              params: SystemParams | None = None, with_ld: bool = False,
              gamma: float = 0.5, stop_on_escape: bool = False) -> PropagationOutcome:
    """Integrate ``state0`` (which carries its own anomaly) to ``f1``.

    Impact with the target's surface always ends the leg. Escape is recorded
    at its first occurrence and ends the leg only if ``stop_on_escape``.
    """
    return _run(state0, f1, config, params or SUN_MARS, with_ld, gamma, stop_on_escape)[0]


def propagate_samples(state0: SynodicState, f1: float, df: float,
                      config: IntegratorConfig = DEFAULT_CONFIG,
                      params: SystemParams | None = None, gamma: float = 0.5):
    """Propagate and sample the state every ``|df|`` in anomaly.

    Returns ``(outcome, f_samples, states)``; ``states`` has rows
    ``(x, y, x', y', M)`` and stops at the last sample before termination.
    """
    if df <= 0:
        raise ParameterError(f"df={df!r} must be positive")
    f0 = state0.f
    n = int(math.floor(abs(f1 - f0) / df + 1e-9))
    fs = f0 + math.copysign(df, f1 - f0) * np.arange(n + 1)
    if fs[-1] != f1:
        fs = np.append(fs, f1)
    outcome, states = _run(state0, f1, config, params or SUN_MARS, True, gamma, False, fs)
    return outcome, fs[:len(states)], states


def locate_event(bracket: tuple[float, float], event_fn: Callable[[float], float | bool],
                 config: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """Bisect a bracket on which ``event_fn`` changes sign or truth value.

    Boolean-valued functions are located at their first True (taking the
    bracket's first endpoint as the False side); real-valued ones at their
    sign change. The returned anomaly is within ``event_tol`` of the event.
    """
    a, b = map(float, bracket)
    va, vb = event_fn(a), event_fn(b)
    if isinstance(va, (bool, np.bool_)):
        side = lambda v: bool(v)
    else:
        side = lambda v: v > 0
    if side(va) == side(vb):
        raise BracketError(f"no event in bracket ({a!r}, {b!r})")
    sa = side(va)
    while abs(b - a) > config.event_tol:
        m = 0.5 * (a + b)
        if side(event_fn(m)) == sa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)
