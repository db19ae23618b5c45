"""Lagrangian-descriptor survey of ballistic capture in the elliptic restricted three-body problem."""

from .model import (SUN_MARS, EdgeMap, GridSpec, Label, LabelField, RelativeState,
                    ScalarField, SynodicState, SystemParams, make_params)

__version__ = "0.1.0"

__all__ = [
    "SUN_MARS", "EdgeMap", "GridSpec", "Label", "LabelField", "RelativeState",
    "ScalarField", "SynodicState", "SystemParams", "make_params",
]
