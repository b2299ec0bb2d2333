"""Volumes, effects, stationary spectra, energy values and composite energy checks."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import PhaseField, PhaseGrid, check_same_grid, constant, inner_product, integrate
from .kernels import Kernel, k2_moment
from .states import PRODUCT_CAP, build_state, sho_eigen

NEGATIVE_TOL = 1e-6


class NegativeProbabilityWarning(UserWarning):
    """An effect assigned a probability below -1e-6 to a state."""


class GeneralizedEnergyWarning(UserWarning):
    """Energies are in the [1/t] fallback units of a purely classical kernel."""


def state_volume(g: PhaseField) -> float:
    """1 / <g, g>."""
    norm = inner_product(g, g)
    if norm == 0:
        raise ZeroDivisionError("state has zero norm")
    return 1.0 / norm


@dataclass(frozen=True, eq=False)
class Effect:
    g: PhaseField
    V: float

    def __post_init__(self):
        if not self.V > 0:
            raise ValueError("effect volume must be positive")

    @classmethod
    def from_state(cls, g: PhaseField) -> "Effect":
        """State-dual effect: weight equal to the state volume, so that e(g) = 1."""
        return cls(g, state_volume(g))


def effect_probability(e: Effect, f: PhaseField) -> float:
    """V <f, g>; warns with NegativeProbabilityWarning below -1e-6."""
    prob = e.V * inner_product(f, e.g)
    if prob < -NEGATIVE_TOL:
        warnings.warn(f"negative probability {prob:.3g}: state and effect are not a valid pair",
                      NegativeProbabilityWarning, stacklevel=2)
    return prob


def coarse_grain(effects) -> Effect:
    """Merge effects: V = sum V_i and g = sum V_i g_i / V."""
    effects = list(effects)
    if not effects:
        raise ValueError("nothing to coarse-grain")
    grid = effects[0].g.grid
    check_same_grid(grid, *(e.g.grid for e in effects))
    V = sum(e.V for e in effects)
    vals = sum(e.V * e.g.values for e in effects) / V
    return Effect(PhaseField(grid, vals, "effect-density"), V)


# -- energies -----------------------------------------------------------------------

def energy_value(rate: float, V_i: float, V_p: float, kernel: Kernel) -> float:
    """E_i = pi rate V_p kbar^2 / (4 V_i).

    A kernel with only zero-scale components has kbar^2 = 0; then the
    energy falls back to rate * V_i, in units of 1/t, with a warning.
    """
    if not (V_i > 0 and V_p > 0):
        raise ValueError("volumes must be positive")
    k2 = k2_moment(kernel)
    if k2 == 0:
        warnings.warn("purely classical kernel: energy reported as rate*V_i in units of 1/t",
                      GeneralizedEnergyWarning, stacklevel=2)
        return rate * V_i
    return np.pi * rate * V_p * k2 / (4 * V_i)


def rate_from_energy(E: float, V_i: float, V_p: float, kernel: Kernel) -> float:
    """Inverse of energy_value."""
    if not (V_i > 0 and V_p > 0):
        raise ValueError("volumes must be positive")
    k2 = k2_moment(kernel)
    if k2 == 0:
        warnings.warn("purely classical kernel: rate taken from E/V_i in units of 1/t",
                      GeneralizedEnergyWarning, stacklevel=2)
        return E / V_i
    return 4 * V_i * E / (np.pi * V_p * k2)


@dataclass
class SpectrumEntry:
    g: PhaseField
    V: float
    rate: float
    E: float


@dataclass
class StationarySpectrum:
    entries: list
    V_p: float
    kernel: Kernel
    window: dict = field(default_factory=dict)

    def orthogonality_max(self) -> list:
        """Per entry, max |<g_i, g_j>| / sqrt(<g_i,g_i><g_j,g_j>) over j != i."""
        G = gram_matrix([e.g for e in self.entries])
        d = np.sqrt(np.diag(G))
        C = np.abs(G) / np.outer(d, d)
        np.fill_diagonal(C, 0)
        return list(C.max(axis=1)) if len(self.entries) > 1 else [0.0]

    def manifest(self) -> list:
        ortho = self.orthogonality_max()
        out = []
        for i, (e, o) in enumerate(zip(self.entries, ortho)):
            out.append({"index": i, "V": e.V, "E": e.E, "rate": e.rate,
                        "norm-residual": float(integrate(e.g)) - 1.0, "orthogonality-max": float(o)})
        return out

    def manifest_json(self) -> str:
        return json.dumps({"V_p": self.V_p, "kernel": self.kernel.to_config(), "window": self.window,
                           "entries": self.manifest()}, indent=2, sort_keys=True) + "\n"


def gram_matrix(fields) -> np.ndarray:
    X = np.array([f.values.ravel() for f in fields])
    return X @ X.T * fields[0].grid.weight


def spectrum_from_energies(states, energies, V_p: float, kernel: Kernel, volumes=None) -> StationarySpectrum:
    entries = []
    for i, (g, E) in enumerate(zip(states, energies)):
        V = state_volume(g) if volumes is None else volumes[i]
        entries.append(SpectrumEntry(g, V, rate_from_energy(E, V, V_p, kernel), E))
    return StationarySpectrum(entries, V_p, kernel)


def sho_energy(n: int, hbar: float = 1.0, stiffness: float = 1.0) -> float:
    """Quantum level n of H = stiffness (q^2 + p^2), whose angular frequency is 2*stiffness."""
    return stiffness * hbar * (2 * n + 1)


def sho_stationary_spectrum(n_max: int, hbar: float, stiffness: float, grid: PhaseGrid,
                            kernel: Kernel | None = None) -> StationarySpectrum:
    """Oscillator eigenstates 0..n_max with V_i = h and rates from the energy relation."""
    kernel = kernel or Kernel.quantum(hbar)
    h = 2 * np.pi * hbar
    entries = []
    for n in range(n_max + 1):
        g = build_state(sho_eigen(n, hbar, stiffness), grid)
        E = sho_energy(n, hbar, stiffness)
        entries.append(SpectrumEntry(g, h, rate_from_energy(E, h, h, kernel), E))
    window = {"disk_radius_squared": 2 * n_max * hbar}
    return StationarySpectrum(entries, h, kernel, window)


def completeness_residual(spectrum: StationarySpectrum, radius_squared: float | None = None) -> float:
    """max |sum V_i g_i - 1| on the disk q^2 + p^2 <= radius_squared."""
    grid = spectrum.entries[0].g.grid
    total = sum(e.V * e.g.values for e in spectrum.entries)
    Q, P = grid.mesh()
    r2 = radius_squared if radius_squared is not None else spectrum.window.get("disk_radius_squared", np.inf)
    mask = Q**2 + P**2 <= r2
    return float(np.abs(total - 1.0)[mask].max())


def hamiltonian_field(spectrum: StationarySpectrum) -> PhaseField:
    """H = sum_i E_i V_i g_i."""
    grid = spectrum.entries[0].g.grid
    vals = sum(e.E * e.V * e.g.values for e in spectrum.entries)
    return PhaseField(grid, np.broadcast_to(vals, grid.shape), "hamiltonian")


def energy_expectation(source, f: PhaseField) -> float:
    """<E> = integral of H f; ``source`` is a spectrum, a field or a Hamiltonian."""
    if isinstance(source, StationarySpectrum):
        source = hamiltonian_field(source)
    elif hasattr(source, "sample"):
        source = source.sample()
    return inner_product(source, f)


def energy_from_probabilities(spectrum: StationarySpectrum, f: PhaseField) -> float:
    return sum(effect_probability(Effect(e.g, e.V), f) * e.E for e in spectrum.entries)


# -- stationary states as a null space ---------------------------------------------

def find_stationary_states(generator, grid: PhaseGrid, rtol: float = 1e-8, max_n: int = 32) -> list:
    """Orthonormal basis (grid inner product) of the numerical null space of a linear generator."""
    if max(grid.shape) > max_n:
        raise MemoryError(f"dense generator limited to N <= {max_n}")
    size = grid.n_q * grid.n_p
    M = np.empty((size, size))
    basis = np.zeros(grid.shape)
    for i in range(size):
        basis.flat[i] = 1.0
        M[:, i] = generator(PhaseField(grid, basis)).values.ravel()
        basis.flat[i] = 0.0
    _, s, vt = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    null = vt[s <= rtol * smax] if smax > 0 else vt
    scale = 1.0 / np.sqrt(grid.weight)
    return [PhaseField(grid, v.reshape(grid.shape) * scale) for v in null]


def projection_residual(f: PhaseField, basis) -> float:
    """Relative norm of f minus its projection onto an orthonormal basis."""
    vals = f.values.copy()
    for b in basis:
        vals = vals - inner_product(b, f) * b.values
    return float(np.sqrt(np.sum(vals**2) / np.sum(f.values**2)))


# -- structural checks ------------------------------------------------------------

def reciprocity_residual(states) -> float:
    """max |P(i|j) - P(j|i)| for state-dual effects of the given states."""
    worst = 0.0
    for i, gi in enumerate(states):
        for gj in states[i + 1:]:
            pij = effect_probability(Effect.from_state(gi), gj)
            pji = effect_probability(Effect.from_state(gj), gi)
            worst = max(worst, abs(pij - pji))
    return worst


def box_tiling_count(grid: PhaseGrid, eps: float, delta: float) -> tuple[int, float]:
    """Number of disjoint eps x delta boxes tiling the grid and their total volume."""
    from .states import box

    nq = grid.length_q / eps
    n_p = grid.length_p / delta
    if abs(nq - round(nq)) > 1e-9 or abs(n_p - round(n_p)) > 1e-9:
        raise ValueError("boxes must tile the grid")
    nq, n_p = int(round(nq)), int(round(n_p))
    total = 0.0
    count = 0
    for i in range(nq):
        for j in range(n_p):
            g = build_state(box(grid.q_min + i * eps, grid.p_min + j * delta, eps, delta), grid)
            total += state_volume(g)
            count += 1
    return count, total


def density_matrix_state(rho: np.ndarray, grid: PhaseGrid, k: float) -> PhaseField:
    """Phase-space state (1/h) Wigner{rho} for a density matrix on a commensurate grid."""
    from .transforms import OperatorMatrix, wigner_transform

    W = wigner_transform(OperatorMatrix(grid, rho / np.trace(rho).real, k))
    return PhaseField(grid, W.values / (2 * np.pi * k))


# -- composite systems ------------------------------------------------------------

@dataclass
class CompositeReport:
    joint: float
    first: float
    second: float

    @property
    def discrepancy(self) -> float:
        return self.joint - (self.first + self.second)


def composite_energy_check(S1: StationarySpectrum, S2: StationarySpectrum, f1: PhaseField,
                           f2: PhaseField, cap: int = PRODUCT_CAP) -> CompositeReport:
    """Compare <E_12> under H_12 = sum (E_1i + E_2j) V_1i V_2j g_1i g_2j with <E_1> + <E_2>."""
    g1 = S1.entries[0].g.grid
    g2 = S2.entries[0].g.grid
    size = g1.n_q * g1.n_p * g2.n_q * g2.n_p
    if size > cap:
        raise MemoryError(f"composite field would have {size} points, above the cap of {cap}")
    H12 = np.zeros(g1.shape + g2.shape)
    for a in S1.entries:
        for b in S2.entries:
            H12 += (a.E + b.E) * a.V * b.V * np.multiply.outer(a.g.values, b.g.values)
    f12 = np.multiply.outer(f1.values, f2.values)
    joint = float(np.sum(H12 * f12) * g1.weight * g2.weight)
    return CompositeReport(joint, energy_expectation(S1, f1), energy_expectation(S2, f2))


def unit_field(grid: PhaseGrid) -> PhaseField:
    return constant(grid, 1.0)
