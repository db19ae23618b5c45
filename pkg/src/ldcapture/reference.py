"""Reference sample orbits about Mars (initial anomaly 0, eccentricity 0.9).

Each entry gives the synodic offset from Mars, the tabulated synodic
velocity components, and the stability sets the orbit belongs to, as
``(label, extent)`` pairs measured from ``f0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Label

PI = math.pi
W, X, K = Label.WEAKLY_STABLE, Label.UNSTABLE, Label.CRASH


@dataclass(frozen=True)
class SampleOrbit:
    name: str
    offset: tuple[float, float]
    velocity: tuple[float, float]
    memberships: tuple[tuple[Label, float], ...]

    @property
    def is_capture(self) -> bool:
        labels = [m[0] for m in self.memberships]
        return labels == [X, W]


SAMPLE_ORBITS = {
    o.name: o for o in [
        SampleOrbit("a", (-5.170000e-05, -1.000000e-04), (6.258637e-02, -3.235715e-02), ((W, -PI),)),
        SampleOrbit("b", (-7.575000e-05, 1.695000e-04), (-4.999940e-02, -2.234486e-02), ((K, -PI),)),
        SampleOrbit("c", (4.509000e-04, 3.621000e-04), (-1.913330e-02, 2.382548e-02), ((W, -PI),)),
        SampleOrbit("d", (4.533000e-04, 3.475000e-04), (-1.871302e-02, 2.441039e-02), ((X, -PI),)),
        SampleOrbit("e", (-7.094000e-05, 1.960000e-04), (-4.856863e-02, -1.757887e-02), ((K, 2 * PI),)),
        SampleOrbit("f", (-1.719000e-04, -9.739000e-05), (2.616042e-02, -4.617492e-02), ((X, 2 * PI),)),
        SampleOrbit("g", (-1.551000e-04, -9.239000e-05), (2.842583e-02, -4.771994e-02), ((W, 2 * PI),)),
        SampleOrbit("h", (1.094000e-04, -3.258000e-04), (3.796152e-02, 1.274705e-02), ((K, 2 * PI),)),
        SampleOrbit("i", (-1.286000e-04, 3.018000e-04), (-3.772815e-02, -1.607634e-02),
                    ((X, -PI), (W, 1.5 * PI))),
        SampleOrbit("j", (-6.373000e-05, 2.585000e-04), (-4.429485e-02, -1.092035e-02),
                    ((X, -PI), (W, 1.5 * PI))),
        SampleOrbit("k", (-4.990000e-04, 4.317000e-04), (-1.863920e-02, -2.154496e-02),
                    ((X, -PI), (W, 3 * PI))),
        SampleOrbit("l", (-1.719000e-04, 7.575000e-05), (-2.195327e-02, -4.981872e-02),
                    ((X, -PI), (W, 3 * PI))),
    ]
}
