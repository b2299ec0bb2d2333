"""Periodic phase-space grids, Riemann quadrature and field utilities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("state", "effect-density", "hamiltonian", "generic")
STATE_NORM_TOL = 1e-6


class GridMismatchError(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseGrid:
    """Periodic rectangle in (q, p) sampled at ``n_q x n_p`` points.

    Points sit at ``q_min + i*dq`` for ``i = 0..n_q-1``; the upper edge is
    identified with the lower one.
    """

    n_q: int
    n_p: int
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    periodic: bool = True

    def __post_init__(self):
        for name in ("n_q", "n_p"):
            n = getattr(self, name)
            if int(n) != n or n <= 0 or n % 2:
                raise ValueError(f"{name} must be a positive even integer, got {n}")
        if not self.q_max > self.q_min or not self.p_max > self.p_min:
            raise ValueError("grid extents must satisfy q_max > q_min and p_max > p_min")
        if not self.periodic:
            raise ValueError("only periodic grids are supported")

    @classmethod
    def square(cls, n: int, half_width: float, center=(0.0, 0.0)) -> "PhaseGrid":
        q0, p0 = center
        return cls(n, n, q0 - half_width, q0 + half_width, p0 - half_width, p0 + half_width)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_q

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def weight(self) -> float:
        return self.dq * self.dp

    @property
    def length_q(self) -> float:
        return self.q_max - self.q_min

    @property
    def length_p(self) -> float:
        return self.p_max - self.p_min

    @property
    def area(self) -> float:
        return self.length_q * self.length_p

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_q, self.n_p)

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.n_q)

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays indexed ``[i_q, i_p]``."""
        return np.meshgrid(self.q, self.p, indexing="ij")

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular wavenumbers along q and p in FFT order (Nyquist negative)."""
        return (2 * np.pi * np.fft.fftfreq(self.n_q, d=self.dq),
                2 * np.pi * np.fft.fftfreq(self.n_p, d=self.dp))

    def is_square(self) -> bool:
        return self.n_q == self.n_p and np.isclose(self.length_q, self.length_p, rtol=0, atol=1e-14)

    def header(self) -> str:
        return "# grid {} {} {!r} {!r} {!r} {!r}".format(
            self.n_q, self.n_p, float(self.q_min), float(self.q_max),
            float(self.p_min), float(self.p_max))

    def to_dict(self) -> dict:
        return {"n_q": self.n_q, "n_p": self.n_p, "q_min": self.q_min, "q_max": self.q_max,
                "p_min": self.p_min, "p_max": self.p_max}


@dataclass(frozen=True, eq=False)
class PhaseField:
    """Samples of a phase-space function, ``values[i_q, i_p]``."""

    grid: PhaseGrid
    values: np.ndarray
    kind: str = "generic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {KINDS}")
        vals = np.array(self.values, copy=True)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        bad = ~np.isfinite(vals)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NonFiniteError(f"non-finite field value at index {idx}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.kind == "state":
            total = integrate(self)
            if abs(total - 1.0) > STATE_NORM_TOL:
                raise ValueError(f"state integrates to {total!r}, expected 1 within {STATE_NORM_TOL}")

    def with_values(self, values, kind: str = "generic") -> "PhaseField":
        return PhaseField(self.grid, values, kind)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other, self.grid))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other, self.grid))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self.with_values(-self.values)

    def __truediv__(self, c):
        return self.with_values(self.values / c)


def _vals(other, grid):
    if isinstance(other, PhaseField):
        check_same_grid(grid, other.grid)
        return other.values
    return other


def check_same_grid(*grids: PhaseGrid) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {g}")


def constant(grid: PhaseGrid, value: float = 1.0, kind: str = "generic") -> PhaseField:
    return PhaseField(grid, np.full(grid.shape, float(value)), kind)


def from_function(grid: PhaseGrid, func, kind: str = "generic") -> PhaseField:
    Q, P = grid.mesh()
    return PhaseField(grid, np.broadcast_to(func(Q, P), grid.shape), kind)


def integrate(f: PhaseField):
    """Riemann sum of the samples times dq*dp."""
    return f.values.sum() * f.grid.weight


def inner_product(f1: PhaseField, f2: PhaseField) -> float:
    """Integral of f1*f2 over the grid, with no prefactor."""
    check_same_grid(f1.grid, f2.grid)
    return float(np.vdot(f1.values.ravel(), f2.values.ravel()).real) * f1.grid.weight


def _integer_shift(shift: float, step: float):
    m = shift / step
    r = round(m)
    return int(r) if abs(m - r) < 1e-12 else None


def translate(f: PhaseField, a: float, b: float) -> PhaseField:
    """Return the field x -> f(q + a, p + b) on the same periodic grid.

    Shifts that are whole multiples of the spacing are exact index rolls; other
    shifts use the Fourier shift theorem (band-limited interpolation).
    """
    g = f.grid
    iq, ip = _integer_shift(a, g.dq), _integer_shift(b, g.dp)
    if iq is not None and ip is not None:
        return f.with_values(np.roll(f.values, (-iq, -ip), axis=(0, 1)))
    kq, kp = g.wavenumbers()
    phase_q = np.exp(1j * kq * a)
    phase_p = np.exp(1j * kp * b)
    # the Nyquist mode of a real signal shifts as a cosine
    phase_q[g.n_q // 2] = np.cos(kq[g.n_q // 2] * a)
    phase_p[g.n_p // 2] = np.cos(kp[g.n_p // 2] * b)
    out = np.fft.ifft2(np.fft.fft2(f.values) * phase_q[:, None] * phase_p[None, :])
    if not np.iscomplexobj(f.values):
        out = out.real
    return f.with_values(out)


def fourier_modes(f: PhaseField) -> np.ndarray:
    """Coefficients c[a, b] with f(q, p) = sum c e^{i(kq_a (q-q_min) + kp_b (p-p_min))}."""
    return np.fft.fft2(f.values) / (f.grid.n_q * f.grid.n_p)


def from_fourier_modes(grid: PhaseGrid, coeffs: np.ndarray, kind: str = "generic",
                       real: bool = True) -> PhaseField:
    vals = np.fft.ifft2(coeffs) * (grid.n_q * grid.n_p)
    return PhaseField(grid, vals.real if real else vals, kind)


def switch_axes(f: PhaseField) -> PhaseField:
    """Exchange the roles of q and p (square grids only)."""
    if not f.grid.is_square():
        raise ValueError("axis switch requires a square grid with matched extents")
    g = f.grid
    swapped = PhaseGrid(g.n_p, g.n_q, g.p_min, g.p_max, g.q_min, g.q_max)
    return PhaseField(swapped, f.values.T, f.kind if f.kind != "state" else "generic")


def reflect_p(f: PhaseField) -> PhaseField:
    """Values at (q, -p); needs a grid symmetric in p so that -p is a grid point."""
    g = f.grid
    if not np.isclose(g.p_min, -g.p_max, atol=1e-14):
        raise ValueError("momentum reflection needs p_min == -p_max")
    idx = (-np.arange(g.n_p)) % g.n_p
    return f.with_values(f.values[:, idx])


# -- CSV serialization -------------------------------------------------------

def write_field_csv(path, f: PhaseField) -> None:
    if np.iscomplexobj(f.values):
        raise ValueError("only real fields can be serialized")
    with open(path, "w", newline="\n") as fh:
        fh.write(field_to_csv(f))


def field_to_csv(f: PhaseField) -> str:
    lines = [f.grid.header()]
    for (i, j), v in np.ndenumerate(f.values):
        lines.append(f"{i},{j},{v:.17g}")
    return "\n".join(lines) + "\n"


def read_field_csv(path, kind: str = "generic") -> PhaseField:
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["#", "grid"] or len(header) != 8:
            raise ValueError(f"{path}: missing '# grid n_q n_p q_min q_max p_min p_max' header")
        n_q, n_p = int(header[2]), int(header[3])
        grid = PhaseGrid(n_q, n_p, *(float(x) for x in header[4:8]))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    vals = np.zeros(grid.shape)
    vals[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2]
    return PhaseField(grid, vals, kind)
