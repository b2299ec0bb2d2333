"""Constructors for Gaussian, oscillator-eigenstate, box, Cauchy, ring and product states."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.special import erfc

from .grid import PhaseField, PhaseGrid, integrate

TAIL_TOL = 1e-8
PRODUCT_CAP = 2**24  # default maximum number of points in a 4D product field

VARIANTS = ("gaussian", "sho_eigen", "box", "cauchy", "ring", "product")


class TailMassError(ValueError):
    pass


@dataclass(frozen=True)
class StateSpec:
    """Parameters of a named state; unused parameters are ignored by the variant."""

    variant: str
    q0: float = 0.0
    p0: float = 0.0
    hbar: float = 1.0
    n: int = 0
    stiffness: float = 1.0
    eps: float | None = None
    delta: float | None = None
    action: float | None = None
    width: float | None = None
    parts: tuple = field(default=())

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown state variant {self.variant!r}")
        if self.hbar <= 0 or self.stiffness <= 0:
            raise ValueError("hbar and stiffness must be positive")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("n must be a non-negative integer")
        if self.variant == "box" and not (self.eps and self.delta and self.eps > 0 and self.delta > 0):
            raise ValueError("box state needs positive eps and delta")
        if self.variant == "ring":
            if self.action is None or self.action <= 0:
                raise ValueError("ring state needs a positive action")
            if self.width is not None and self.width <= 0:
                raise ValueError("ring width must be positive")
        if self.variant == "product" and len(self.parts) != 2:
            raise ValueError("product state needs exactly two parts")

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown state parameters: {sorted(extra)}")
        if "parts" in d:
            d["parts"] = tuple(cls.from_dict(p) for p in d["parts"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v is not None and not (isinstance(v, tuple) and not v)}
        if self.parts:
            d["parts"] = [p.to_dict() for p in self.parts]
        return d


def gaussian(q0=0.0, p0=0.0, hbar=1.0) -> StateSpec:
    return StateSpec("gaussian", q0=q0, p0=p0, hbar=hbar)


def sho_eigen(n, hbar=1.0, stiffness=1.0) -> StateSpec:
    return StateSpec("sho_eigen", n=n, hbar=hbar, stiffness=stiffness)


def box(q0, p0, eps, delta) -> StateSpec:
    return StateSpec("box", q0=q0, p0=p0, eps=eps, delta=delta)


def cauchy(hbar=1.0) -> StateSpec:
    return StateSpec("cauchy", hbar=hbar)


def ring(action, width=None) -> StateSpec:
    return StateSpec("ring", action=action, width=width)


def laguerre(n: int, x):
    """L_n(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = 1.0 - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 - x) * cur - m * prev) / (m + 1)
    return cur


def sho_wigner(n: int, q, p, hbar=1.0):
    """Wigner function of the n-th oscillator eigenstate, centred at the origin."""
    r2 = (np.asarray(q) ** 2 + np.asarray(p) ** 2) / hbar
    return (-1) ** n / (np.pi * hbar) * laguerre(n, 2 * r2) * np.exp(-r2)


def gaussian_wigner(q, p, q0=0.0, p0=0.0, hbar=1.0):
    return np.exp(-((q - q0) ** 2 + (p - p0) ** 2) / hbar) / (np.pi * hbar)


# -- tail mass estimates -------------------------------------------------------

def _rect_gaussian_tail(grid: PhaseGrid, q0, p0, hbar) -> float:
    s = np.sqrt(hbar)
    inside_q = 1 - 0.5 * (erfc((q0 - grid.q_min) / s) + erfc((grid.q_max - q0) / s))
    inside_p = 1 - 0.5 * (erfc((p0 - grid.p_min) / s) + erfc((grid.p_max - p0) / s))
    return 1.0 - inside_q * inside_p


def _radial_tail(grid: PhaseGrid, density, r_scale: float, n_theta: int = 2048) -> float:
    """Mass of |density(r)| outside the grid rectangle, for a density centred at 0."""
    theta = (np.arange(n_theta) + 0.5) * 2 * np.pi / n_theta
    c, s = np.cos(theta), np.sin(theta)
    if not (grid.q_min < 0 < grid.q_max and grid.p_min < 0 < grid.p_max):
        return 1.0
    with np.errstate(divide="ignore"):
        tq = np.where(c > 0, grid.q_max / c, np.where(c < 0, grid.q_min / c, np.inf))
        tp = np.where(s > 0, grid.p_max / s, np.where(s < 0, grid.p_min / s, np.inf))
    exit_r = np.minimum(tq, tp)
    r_max = exit_r.max() + 40 * r_scale
    r = np.linspace(0, r_max, 200001)
    integrand = np.abs(density(r)) * r
    # cumulative trapezoid from the outside in
    seg = 0.5 * (integrand[1:] + integrand[:-1]) * (r[1] - r[0])
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return float(np.mean(np.interp(exit_r, r, tail)) * 2 * np.pi)


def tail_mass(spec: StateSpec, grid: PhaseGrid) -> float:
    if spec.variant == "gaussian":
        return _rect_gaussian_tail(grid, spec.q0, spec.p0, spec.hbar)
    if spec.variant == "sho_eigen":
        return _radial_tail(grid, lambda r: sho_wigner(spec.n, r, 0.0, spec.hbar), np.sqrt(spec.hbar))
    if spec.variant == "ring":
        w = spec.width if spec.width is not None else default_ring_width(spec.action, grid)
        i0 = spec.action
        norm = 2 * np.pi * w * np.sqrt(2 * np.pi)  # approximate normalization in action
        return _radial_tail(grid, lambda r: np.exp(-((r * r / 2 - i0) ** 2) / (2 * w * w)) / norm,
                            np.sqrt(2 * (i0 + 10 * w)))
    return 0.0


def required_half_width(spec: StateSpec) -> float:
    """Smallest square half-width (about the origin) that passes the tail check."""
    lo, hi = 0.5, 200.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        g = PhaseGrid(2, 2, -mid, mid, -mid, mid)
        if tail_mass(spec, g) > TAIL_TOL:
            lo = mid
        else:
            hi = mid
    return hi


def default_ring_width(action: float, grid: PhaseGrid) -> float:
    # two grid spacings measured in action near the shell: dI = r dr
    return 2.0 * np.sqrt(2 * action) * max(grid.dq, grid.dp)


# -- constructors --------------------------------------------------------------

def build_state(spec: StateSpec, grid: PhaseGrid) -> PhaseField:
    """Sample a normalized state on ``grid``; raises TailMassError for too-small grids."""
    if spec.variant == "product":
        raise ValueError("use product_state for composite states")
    tm = tail_mass(spec, grid)
    if tm > TAIL_TOL:
        raise TailMassError(
            f"{spec.variant} state loses mass {tm:.3g} outside the grid (limit {TAIL_TOL}); "
            f"use a square half-width of at least {required_half_width(spec):.4g} about the origin")
    Q, P = grid.mesh()
    v = spec.variant
    if v == "gaussian":
        vals = gaussian_wigner(Q, P, spec.q0, spec.p0, spec.hbar)
    elif v == "sho_eigen":
        vals = sho_wigner(spec.n, Q, P, spec.hbar)
    elif v == "box":
        vals = _box_values(spec, grid)
    elif v == "cauchy":
        vals = spec.hbar / (np.pi * (Q**2 + P**2 + spec.hbar))
        vals = vals / (vals.sum() * grid.weight)
    else:  # ring
        w = spec.width if spec.width is not None else default_ring_width(spec.action, grid)
        action = (Q**2 + P**2) / 2
        vals = np.exp(-((action - spec.action) ** 2) / (2 * w * w))
        vals = vals / (vals.sum() * grid.weight)
    return PhaseField(grid, vals, "state", {"spec": spec.to_dict()})


def _box_values(spec: StateSpec, grid: PhaseGrid) -> np.ndarray:
    mq, mp = spec.eps / grid.dq, spec.delta / grid.dp
    if abs(mq - round(mq)) > 1e-9 or abs(mp - round(mp)) > 1e-9:
        raise ValueError("box sides must be whole multiples of the grid spacings")
    mq, mp = int(round(mq)), int(round(mp))
    iq = (spec.q0 - grid.q_min) / grid.dq
    ip = (spec.p0 - grid.p_min) / grid.dp
    if abs(iq - round(iq)) > 1e-9 or abs(ip - round(ip)) > 1e-9:
        raise ValueError("box corner (q0, p0) must sit on a grid point")
    iq, ip = int(round(iq)), int(round(ip))
    if iq < 0 or ip < 0 or iq + mq > grid.n_q or ip + mp > grid.n_p:
        raise TailMassError("box does not fit inside the grid")
    vals = np.zeros(grid.shape)
    vals[iq:iq + mq, ip:ip + mp] = 1.0 / (spec.eps * spec.delta)
    return vals


def ring_volume(f: PhaseField) -> float:
    """Reported volume of a regularized ring shell: 1 / integral of g^2."""
    return 1.0 / (np.sum(f.values**2) * f.grid.weight)


class ProductField:
    """Values on a product of two phase-space grids, indexed ``[i1, j1, i2, j2]``."""

    def __init__(self, grid1: PhaseGrid, grid2: PhaseGrid, values: np.ndarray):
        self.grid1, self.grid2 = grid1, grid2
        self.values = np.asarray(values)
        if self.values.shape != grid1.shape + grid2.shape:
            raise ValueError("product values have the wrong shape")

    @property
    def weight(self) -> float:
        return self.grid1.weight * self.grid2.weight

    def integrate(self) -> float:
        return float(self.values.sum() * self.weight)

    def inner(self, other: "ProductField") -> float:
        if (self.grid1, self.grid2) != (other.grid1, other.grid2):
            raise ValueError("product grid mismatch")
        return float(np.sum(self.values * other.values) * self.weight)


def product_state(f1: PhaseField, f2: PhaseField, cap: int = PRODUCT_CAP) -> ProductField:
    size = f1.values.size * f2.values.size
    if size > cap:
        raise MemoryError(f"product field would have {size} points, above the cap of {cap}")
    return ProductField(f1.grid, f2.grid, np.multiply.outer(f1.values, f2.values))


def build_product(spec: StateSpec, grid1: PhaseGrid, grid2: PhaseGrid, cap: int = PRODUCT_CAP) -> ProductField:
    return product_state(build_state(spec.parts[0], grid1), build_state(spec.parts[1], grid2), cap)


def integral_of(f) -> float:
    return f.integrate() if isinstance(f, ProductField) else float(integrate(f))
