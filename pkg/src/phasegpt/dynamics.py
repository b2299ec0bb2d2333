"""Generators of motion, jump kernels, RK4 time stepping and conservation monitors."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import NonFiniteError, PhaseField, PhaseGrid, check_same_grid, integrate, inner_product
from .kernels import Kernel, k2_moment
from .transforms import Hamiltonian, _split, derivative_stencil, poisson_bracket, sine_bracket

DENSE_MAX_N = 32
MODE_TOL = 1e-12


# -- generators -----------------------------------------------------------------

def generator_from_hamiltonian(f: PhaseField, H, kernel: Kernel, V_p: float) -> PhaseField:
    """df/dt = 4 pi / (V_p kbar^2) sum_i w_i k_i^2 f sin(k_i Lambda / 2) H.

    With f sin(k Lambda/2) H = (k/2) sine_bracket(f, H, k). Zero-scale
    components vanish in this sum; a kernel made only of zero-scale components
    gives the Poisson flow df/dt = f Lambda H.
    """
    if not V_p > 0:
        raise ValueError("V_p must be positive")
    if kernel.all_classical:
        return poisson_bracket(f, H)
    pref = 4 * np.pi / (V_p * k2_moment(kernel))
    out = np.zeros(f.grid.shape)
    for c in kernel.components:
        if c.k == 0:
            continue
        out += pref * c.w * c.k**3 / 2 * sine_bracket(f, H, c.k).values
    return f.with_values(out)


def stationary_bracket(f: PhaseField, g: PhaseField, kernel: Kernel) -> PhaseField:
    """pi^2 sum_i w_i k_i^2 f sin(k_i Lambda / 2) g; Poisson bracket for zero-scale kernels."""
    if kernel.all_classical:
        return poisson_bracket(f, g)
    out = np.zeros(f.grid.shape)
    for c in kernel.components:
        if c.k == 0:
            continue
        out += np.pi**2 * c.w * c.k**3 / 2 * sine_bracket(f, g, c.k).values
    return f.with_values(out)


def generator_from_stationary(f: PhaseField, spectrum, kernel: Kernel | None = None) -> PhaseField:
    """sum_i rate_i * bracket(f, g_i) over the pure stationary states of ``spectrum``."""
    entries = spectrum.entries
    if not entries:
        raise ValueError("empty stationary spectrum")
    kernel = kernel or spectrum.kernel
    out = np.zeros(f.grid.shape)
    for e in entries:
        if e.rate == 0:
            continue
        out += e.rate * stationary_bracket(f, e.g, kernel).values
    return f.with_values(out)


def hamiltonian_generator(H, kernel: Kernel, V_p: float) -> Callable[[PhaseField], PhaseField]:
    return lambda f: generator_from_hamiltonian(f, H, kernel, V_p)


# -- jump kernels -----------------------------------------------------------------

class AliasingError(ValueError):
    pass


@dataclass
class JumpKernel:
    """df/dt(x) = sum_s f(x + s) J(x, s) dq dp over grid displacements s.

    ``terms`` maps integer displacements (i_l, i_j), reduced to the symmetric
    range, to coefficient arrays C_s = J(., s) dq dp.
    """

    grid: PhaseGrid
    k: float
    terms: dict = field(default_factory=dict)

    def add(self, shift, coeff) -> None:
        nq, n_p = self.grid.shape
        key = (_wrap(shift[0], nq), _wrap(shift[1], n_p))
        if key in self.terms:
            self.terms[key] = self.terms[key] + coeff
        else:
            self.terms[key] = np.array(coeff, dtype=float)

    def dense(self) -> np.ndarray:
        """J[i_q, i_p, i_l, i_j] with displacement indices taken mod N."""
        nq, n_p = self.grid.shape
        if max(nq, n_p) > DENSE_MAX_N:
            raise MemoryError(f"dense jump kernels are limited to N <= {DENSE_MAX_N}")
        J = np.zeros((nq, n_p, nq, n_p))
        for (l, j), c in self.terms.items():
            J[:, :, l % nq, j % n_p] += c / self.grid.weight
        return J


def _wrap(i: int, n: int) -> int:
    i = int(i) % n
    return i - n if i >= n // 2 else i


def build_jump_kernel(H, k: float, tol: float = 1e-9) -> JumpKernel:
    """Jump kernel of the bracket (2/k) f sin(k Lambda/2) H.

    Each Fourier mode (a, b) of the periodic part of H moves probability by
    s = (-k b/2, k a/2); these jumps must land on grid points. The quadratic
    part of a ``Hamiltonian`` becomes spectral-derivative stencils along the
    axes.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    periodic, quad = _split(H)
    grid = (periodic or quad).grid
    J = JumpKernel(grid, k)
    nq, n_p = grid.shape
    if periodic is not None:
        kq, kp = grid.wavenumbers()
        c = np.fft.fft2(periodic.values) / periodic.values.size
        mag = np.abs(c)
        significant = mag > MODE_TOL * max(mag.max(), 1e-300)
        significant[0, 0] = False  # constants are central
        ia = np.rint(np.fft.fftfreq(nq) * nq).astype(int)
        ib = np.rint(np.fft.fftfreq(n_p) * n_p).astype(int)
        Q, P = grid.mesh()
        for a, b in zip(*np.nonzero(significant)):
            if 2 * abs(ia[a]) >= nq // 2 or 2 * abs(ib[b]) >= n_p // 2:
                raise AliasingError(
                    f"Hamiltonian has spectral weight {mag[a, b]:.3g} at mode ({ia[a]}, {ib[b]}), "
                    f"outside the half band |a| < {nq // 4}, |b| < {n_p // 4}")
            sq = -k * kp[b] / 2 / grid.dq
            sp = k * kq[a] / 2 / grid.dp
            if abs(sq - round(sq)) > tol or abs(sp - round(sp)) > tol:
                raise ValueError(
                    f"mode ({ia[a]}, {ib[b]}) jumps by ({sq:.6g}, {sp:.6g}) grid steps; the grid must "
                    "make k*kp/(2 dq) and k*kq/(2 dp) integers (for example double the extent)")
            s = (int(round(sq)), int(round(sp)))
            wave = c[a, b] * np.exp(1j * (kq[a] * (Q - grid.q_min) + kp[b] * (P - grid.p_min)))
            # (1/ik) c e^{i theta} [f(x - s) - f(x + s)]; summed over +-modes it is real
            coeff = (wave / (1j * k)).real
            J.add((-s[0], -s[1]), coeff)
            J.add(s, -coeff)
    if quad is not None and quad.has_quadratic:
        dq_sten = derivative_stencil(nq, grid.dq)
        dp_sten = derivative_stencil(n_p, grid.dp)
        gq, gp = quad.grad_q(), quad.grad_p()
        for l in range(nq):
            if dq_sten[l] != 0:
                J.add((l, 0), -gp * dq_sten[l])
        for j in range(n_p):
            if dp_sten[j] != 0:
                J.add((0, j), gq * dp_sten[j])
    J.terms = {s: c for s, c in J.terms.items() if np.any(c != 0)}
    return J


def apply_jump_kernel(f: PhaseField, J: JumpKernel) -> PhaseField:
    check_same_grid(f.grid, J.grid)
    out = np.zeros(f.grid.shape)
    for (l, j), c in J.terms.items():
        out += np.roll(f.values, (-l, -j), axis=(0, 1)) * c
    return f.with_values(out)


def apply_dense_jump_kernel(f: PhaseField, Jd: np.ndarray) -> PhaseField:
    """Direct sum over all displacements of a dense kernel J[i_q, i_p, i_l, i_j]."""
    g = f.grid
    nq, n_p = g.shape
    iq = (np.arange(nq)[:, None] + np.arange(nq)[None, :]) % nq  # [i_q, i_l]
    ip = (np.arange(n_p)[:, None] + np.arange(n_p)[None, :]) % n_p
    shifted = f.values[iq[:, None, :, None], ip[None, :, None, :]]  # [i_q, i_p, i_l, i_j]
    return f.with_values(np.einsum("abcd,abcd->ab", shifted, Jd) * g.weight)


@dataclass
class SymmetryReport:
    antisymmetry: float
    conservation_pairing: float

    def ok(self, tol: float = 1e-10) -> bool:
        return self.antisymmetry <= tol and self.conservation_pairing <= tol


def verify_j_symmetries(J) -> SymmetryReport:
    """Max of |J(x,s) + J(x,-s)| and of |J(x,s) + J(x+2s,-s)| over the dense kernel."""
    Jd = J.dense() if isinstance(J, JumpKernel) else np.asarray(J)
    nq, n_p = Jd.shape[:2]
    neg_l = (-np.arange(nq)) % nq
    neg_j = (-np.arange(n_p)) % n_p
    flipped = Jd[:, :, neg_l][:, :, :, neg_j]
    anti = float(np.abs(Jd + flipped).max())
    a, b, l, j = np.meshgrid(np.arange(nq), np.arange(n_p), np.arange(nq), np.arange(n_p), indexing="ij")
    paired = Jd[(a + 2 * l) % nq, (b + 2 * j) % n_p, (-l) % nq, (-j) % n_p]
    pair = float(np.abs(Jd + paired).max())
    return SymmetryReport(anti, pair)


# -- time integration -------------------------------------------------------------


def step_rk4(f: PhaseField, generator, dt: float) -> PhaseField:
    v = f.values
    g = f.grid
    k1 = generator(f).values
    k2 = generator(PhaseField(g, v + 0.5 * dt * k1)).values
    k3 = generator(PhaseField(g, v + 0.5 * dt * k2)).values
    k4 = generator(PhaseField(g, v + dt * k3)).values
    return PhaseField(g, v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))


def estimate_generator_norm(generator, grid: PhaseGrid, iters: int = 30, seed: int = 0) -> float:
    """Growth-rate estimate of the generator by power iteration from a seeded start."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(grid.shape)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = generator(PhaseField(grid, x)).values
        est = float(np.linalg.norm(y))
        if est == 0:
            return 0.0
        x = y / est
    return est


@dataclass
class EvolutionRun:
    dt: float
    steps: int
    stride: int = 1
    monitors: tuple = ("norm",)
    cfl: float = 0.5
    check_cfl: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or self.stride < 1:
            raise ValueError("steps must be >= 0 and stride >= 1")
        unknown = set(self.monitors) - {"norm", "inner", "energy", "state_volume"}
        if unknown:
            raise ValueError(f"unknown monitors {sorted(unknown)}")


@dataclass
class Trajectory:
    times: list
    snapshots: list
    monitors: dict
    completed: bool = True
    failure: str | None = None

    @property
    def final(self):
        return self.snapshots[-1]


def evolve(f0, generator, run: EvolutionRun, energy_field: PhaseField | None = None,
           generator_norm: float | None = None) -> Trajectory:
    """Integrate df/dt = generator(f) with fixed-step RK4.

    ``f0`` may be a single field or a list; with a list the "inner" monitor
    tracks <f_0, f_i> for every later member. Snapshots and monitors are
    recorded every ``stride`` steps, including t = 0.
    """
    states = [f0] if isinstance(f0, PhaseField) else list(f0)
    grid = states[0].grid
    if run.check_cfl:
        norm = generator_norm if generator_norm is not None else estimate_generator_norm(generator, grid)
        if norm > 0 and run.dt > run.cfl / norm:
            raise ValueError(f"dt={run.dt} exceeds the stability guard {run.cfl}/{norm:.4g} = {run.cfl / norm:.4g}")
    if "energy" in run.monitors and energy_field is None:
        raise ValueError("energy monitor needs an energy field")
    series = {m: [] for m in run.monitors}

    def record(t, fs):
        for m in run.monitors:
            if m == "norm":
                series[m].append([float(integrate(x)) for x in fs])
            elif m == "inner":
                series[m].append([inner_product(fs[0], x) for x in fs[1:]] or [inner_product(fs[0], fs[0])])
            elif m == "energy":
                series[m].append([inner_product(energy_field, x) for x in fs])
            elif m == "state_volume":
                series[m].append([1.0 / inner_product(x, x) for x in fs])

    times, snaps = [0.0], [states]
    record(0.0, states)
    t = 0.0
    for n in range(1, run.steps + 1):
        try:
            new = [step_rk4(x, generator, run.dt) for x in states]
        except NonFiniteError:
            if times[-1] != t:
                times.append(t)
                snaps.append(states)
                record(t, states)
            return Trajectory(times, snaps, series, False,
                              f"non-finite values at step {n}; last good snapshot at t={t}")
        states = new
        t = n * run.dt
        if n % run.stride == 0 or n == run.steps:
            times.append(t)
            snaps.append(states)
            record(t, states)
    return Trajectory(times, snaps, series)


def rotate_field(f: PhaseField, angle: float, center=(0.0, 0.0), chunk: int = 4096) -> PhaseField:
    """Exact rotation of a band-limited field: (R f)(x) = f(R(-angle) x).

    The Fourier series of f is evaluated at the rotated points directly.
    """
    g = f.grid
    kq, kp = g.wavenumbers()
    kq = kq.copy()
    kp = kp.copy()
    kq[g.n_q // 2] = 0.0  # drop Nyquist modes, which have no consistent off-grid value
    kp[g.n_p // 2] = 0.0
    c = np.fft.fft2(f.values) / f.values.size
    c[g.n_q // 2, :] = 0
    c[:, g.n_p // 2] = 0
    Q, P = g.mesh()
    q0, p0 = center
    ca, sa = math.cos(angle), math.sin(angle)
    # clockwise phase-space flow: the point at x came from R(angle)^-1 x
    qs = q0 + ca * (Q - q0) - sa * (P - p0)
    ps = p0 + sa * (Q - q0) + ca * (P - p0)
    qs, ps = qs.ravel() - g.q_min, ps.ravel() - g.p_min
    out = np.empty(qs.size)
    for i in range(0, qs.size, chunk):
        eq = np.exp(1j * np.outer(qs[i:i + chunk], kq))  # [m, a]
        ep = np.exp(1j * np.outer(ps[i:i + chunk], kp))  # [m, b]
        out[i:i + chunk] = np.einsum("ma,ab,mb->m", eq, c, ep).real
    return f.with_values(out.reshape(g.shape))


def harmonic_flow_angle(stiffness: float, t: float) -> float:
    """Rotation angle after time t under H = stiffness (q^2 + p^2)."""
    return 2 * stiffness * t


# -- outputs ----------------------------------------------------------------------

def monitor_csv(times, values) -> str:
    lines = ["time,value"]
    for t, v in zip(times, values):
        lines.append(f"{t:.17g},{v:.17g}")
    return "\n".join(lines) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def manifest_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
