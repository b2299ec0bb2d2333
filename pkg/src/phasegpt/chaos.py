"""Overlap-under-displacement curves and the entropy bound estimate."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import PhaseField, PhaseGrid, inner_product, translate
from .states import StateSpec, build_state


def overlap_curve(state, displacements, grid: PhaseGrid | None = None) -> list:
    """Pairs (dx, I) with I(dx) = <f, T_dx f> / <f, f>, displacing along q.

    ``state`` is a PhaseField or a StateSpec (then ``grid`` is required).
    """
    if isinstance(state, StateSpec):
        if grid is None:
            raise ValueError("a grid is needed to build the state")
        f = build_state(state, grid)
    else:
        f = state
    half = f.grid.length_q / 2
    norm = inner_product(f, f)
    out = []
    for dx in displacements:
        if abs(dx) > half:
            raise ValueError(f"displacement {dx} exceeds half the q-domain ({half})")
        out.append((float(dx), inner_product(f, translate(f, dx, 0.0)) / norm))
    return out


def centered_slope(state, dx: float, h: float, grid: PhaseGrid | None = None) -> float:
    """dI/d(dx) at ``dx`` by a centered difference with step ``h``."""
    (_, lo), (_, hi) = overlap_curve(state, [dx - h, dx + h], grid)
    return (hi - lo) / (2 * h)


@dataclass(frozen=True)
class ChaosEstimate:
    V_I: float
    sigma: float
    delta_I: float
    slope: float  # d(dx)/dI at the working point
    V_p: float

    def __post_init__(self):
        if self.sigma < 0 or self.delta_I < 0:
            raise ValueError("sigma and delta_I must be non-negative")
        if not self.V_p > 0:
            raise ValueError("V_p must be positive")

    @property
    def S(self) -> float:
        return entropy_bound(self)

    def to_json(self) -> str:
        d = asdict(self)
        d["S"] = self.S
        d["label"] = "entropy bound estimate"
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


def entropy_bound(est: ChaosEstimate) -> float:
    """log((V_I + sigma^2 + (delta_I * slope)^2) / V_p)."""
    arg = (est.V_I + est.sigma**2 + (est.delta_I * est.slope) ** 2) / est.V_p
    if not arg > 0:
        raise ValueError(f"log argument must be positive, got {arg}")
    return math.log(arg)


def estimate_for_state(f: PhaseField, working_dx: float, sigma: float, delta_I: float,
                       V_p: float, step: float | None = None) -> ChaosEstimate:
    """ChaosEstimate with V_I = 1/<f,f> and the slope d(dx)/dI taken at ``working_dx``."""
    step = step or 2 * f.grid.dq
    dI = centered_slope(f, working_dx, step)
    slope = math.inf if dI == 0 else 1.0 / dI
    return ChaosEstimate(1.0 / inner_product(f, f), sigma, delta_I, slope, V_p)


def curve_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dx", "I"])
    for dx, val in curve:
        w.writerow([f"{dx:.17g}", f"{val:.17g}"])
    return buf.getvalue()


def gaussian_overlap(dx, hbar: float = 1.0):
    """Closed-form overlap of a Gaussian state with its q-translate."""
    return np.exp(-np.asarray(dx) ** 2 / (2 * hbar))
