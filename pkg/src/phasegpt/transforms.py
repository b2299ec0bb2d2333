"""Weyl/Wigner transforms, Moyal product, sine and Poisson brackets, hybrid products.

Products are twisted convolutions over the discrete Fourier lattice of the
grid. A field mode e^{i(a q + b p)} times a mode e^{i(c q + d p)} picks up the
phase exp(-i k (a d - b c) / 2); mode sums past the Nyquist band wrap around.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PhaseField, PhaseGrid, check_same_grid
from .kernels import Kernel

COMMENSURATE_TOL = 1e-12
IMAG_TOL = 1e-10


# -- Hamiltonians with an exact quadratic part -----------------------------------

@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """H = quadratic polynomial + optional periodic field.

    The polynomial part ``qq q^2 + pp p^2 + qp q p + lq q + lp p + const`` is
    never sampled inside a bracket: for quadratics every bracket equals the
    Poisson bracket, which is taken with analytic gradients. The periodic part
    goes through the twisted convolution.
    """

    grid: PhaseGrid
    periodic: PhaseField | None = None
    qq: float = 0.0
    pp: float = 0.0
    qp: float = 0.0
    lq: float = 0.0
    lp: float = 0.0
    const: float = 0.0

    def __post_init__(self):
        if self.periodic is not None:
            check_same_grid(self.grid, self.periodic.grid)

    @classmethod
    def harmonic(cls, grid: PhaseGrid, stiffness: float = 1.0) -> "Hamiltonian":
        """H = stiffness * (q^2 + p^2); angular frequency 2*stiffness."""
        return cls(grid, qq=stiffness, pp=stiffness)

    @classmethod
    def kinetic(cls, grid: PhaseGrid, mass: float = 1.0, potential: PhaseField | None = None) -> "Hamiltonian":
        """H = p^2 / 2m + V(q, p) with V a periodic field."""
        return cls(grid, periodic=potential, pp=0.5 / mass)

    @property
    def has_quadratic(self) -> bool:
        return any((self.qq, self.pp, self.qp, self.lq, self.lp))

    def grad_q(self):
        Q, P = self.grid.mesh()
        return 2 * self.qq * Q + self.qp * P + self.lq

    def grad_p(self):
        Q, P = self.grid.mesh()
        return 2 * self.pp * P + self.qp * Q + self.lp

    def sample(self) -> PhaseField:
        Q, P = self.grid.mesh()
        vals = self.qq * Q**2 + self.pp * P**2 + self.qp * Q * P + self.lq * Q + self.lp * P + self.const
        if self.periodic is not None:
            vals = vals + self.periodic.values
        return PhaseField(self.grid, vals, "hamiltonian")

    def to_dict(self) -> dict:
        return {"qq": self.qq, "pp": self.pp, "qp": self.qp, "lq": self.lq, "lp": self.lp,
                "const": self.const, "periodic": self.periodic is not None}


def _split(H):
    if isinstance(H, Hamiltonian):
        return H.periodic, H
    return H, None


# -- spectral derivatives --------------------------------------------------------

def _deriv_multipliers(grid: PhaseGrid):
    kq, kp = grid.wavenumbers()
    kq = kq.copy()
    kp = kp.copy()
    kq[grid.n_q // 2] = 0.0
    kp[grid.n_p // 2] = 0.0
    return kq, kp


def d_dq(f: PhaseField) -> np.ndarray:
    kq, _ = _deriv_multipliers(f.grid)
    return np.fft.ifft(1j * kq[:, None] * np.fft.fft(f.values, axis=0), axis=0).real


def d_dp(f: PhaseField) -> np.ndarray:
    _, kp = _deriv_multipliers(f.grid)
    return np.fft.ifft(1j * kp[None, :] * np.fft.fft(f.values, axis=1), axis=1).real


def derivative_stencil(n: int, step: float) -> np.ndarray:
    """D[l] with (df/dx)(x_i) = sum_l D[l] f(x_{i+l}) for the spectral derivative (l mod n)."""
    k = 2 * np.pi * np.fft.fftfreq(n, d=step)
    k[n // 2] = 0.0
    d = np.fft.ifft(1j * k).real  # (df)_i = sum_j f_j d[i - j]
    return d[(-np.arange(n)) % n]


def poisson_bracket(f: PhaseField, H) -> PhaseField:
    """df/dp dH/dq - df/dq dH/dp with spectral derivatives."""
    periodic, quad = _split(H)
    fq, fp = d_dq(f), d_dp(f)
    out = np.zeros(f.grid.shape)
    if periodic is not None:
        check_same_grid(f.grid, periodic.grid)
        out += fp * d_dq(periodic) - fq * d_dp(periodic)
    if quad is not None and quad.has_quadratic:
        check_same_grid(f.grid, quad.grid)
        out += fp * quad.grad_q() - fq * quad.grad_p()
    return f.with_values(out)


# -- Moyal product ---------------------------------------------------------------

def _moyal_fft(fv: np.ndarray, gv: np.ndarray, grid: PhaseGrid, k: float) -> np.ndarray:
    nq, n_p = grid.shape
    kq, kp = grid.wavenumbers()
    fh = np.fft.fft2(fv) / fv.size
    gh = np.fft.fft2(gv) / gv.size
    # q-modes of the result, still in p-space
    out = np.zeros((nq, n_p), dtype=complex)
    for a in range(nq):
        # g translated in p by -k*kq[a]/2, then expressed as q-modes c over p-space
        g_a = np.fft.ifft(gh * np.exp(-0.5j * k * kq[a] * kp)[None, :], axis=1) * n_p
        # f's q-mode a evaluated at p + k*kq[c]/2 for every c
        f_a = np.fft.ifft(fh[a][None, :] * np.exp(0.5j * k * np.outer(kq, kp)), axis=1) * n_p
        out += np.roll(f_a * g_a, a, axis=0)
    return np.fft.ifft(out, axis=0) * nq


def _moyal_direct(fv: np.ndarray, gv: np.ndarray, grid: PhaseGrid, k: float) -> np.ndarray:
    nq, n_p = grid.shape
    kq, kp = grid.wavenumbers()
    fh = np.fft.fft2(fv) / fv.size
    gh = np.fft.fft2(gv) / gv.size
    out = np.zeros((nq, n_p), dtype=complex)
    A, B = np.meshgrid(kq, kp, indexing="ij")
    for c in range(nq):
        for d in range(n_p):
            if gh[c, d] == 0:
                continue
            phase = np.exp(-0.5j * k * (A * kp[d] - B * kq[c]))
            out += np.roll(fh * phase * gh[c, d], (c, d), axis=(0, 1))
    return np.fft.ifft2(out) * out.size


def moyal_product(f: PhaseField, g: PhaseField, k: float, method: str = "fft") -> PhaseField:
    """Star product f * g at scale k (complex-valued field).

    ``method="direct"`` sums every mode pair explicitly and is O(N^4); the
    default route factorizes the phase into translations and is O(N^3 log N).
    """
    check_same_grid(f.grid, g.grid)
    if k < 0:
        raise ValueError("scale k must be non-negative")
    if method == "fft":
        vals = _moyal_fft(f.values, g.values, f.grid, k)
    elif method == "direct":
        vals = _moyal_direct(f.values, g.values, f.grid, k)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PhaseField(f.grid, vals)


def sine_bracket(f: PhaseField, H, k: float, method: str = "fft") -> PhaseField:
    """(2/k) f sin(k Lambda / 2) H; tends to the Poisson bracket as k -> 0.

    Computed as (H*f - f*H)/(ik) from both products, which makes it exactly
    antisymmetric in its arguments. For a ``Hamiltonian`` the quadratic part
    contributes its Poisson bracket exactly.
    """
    if not k > 0:
        raise ValueError("sine bracket needs k > 0")
    periodic, quad = _split(H)
    out = np.zeros(f.grid.shape)
    if periodic is not None:
        check_same_grid(f.grid, periodic.grid)
        fh = moyal_product(f, periodic, k, method).values
        hf = moyal_product(periodic, f, k, method).values
        out += ((hf - fh) / (1j * k)).real
    if quad is not None and quad.has_quadratic:
        out += poisson_bracket(f, Hamiltonian(quad.grid, None, quad.qq, quad.pp, quad.qp, quad.lq, quad.lp)).values
    return f.with_values(out)


def hybrid_moyal_product(f: PhaseField, g: PhaseField, kernel: Kernel, method: str = "fft") -> PhaseField:
    """Kernel-weighted sum of star products, sum_i w_i (f *_{k_i} g)."""
    if not kernel.components:
        raise ValueError("empty kernel")
    total = None
    for c in kernel.components:
        term = moyal_product(f, g, c.k, method).values * c.w
        total = term if total is None else total + term
    return PhaseField(f.grid, total)


def associator(f: PhaseField, g: PhaseField, h: PhaseField, kernel: Kernel) -> float:
    """max |(f g) h - f (g h)| for the hybrid product of ``kernel``."""
    left = hybrid_moyal_product(hybrid_moyal_product(f, g, kernel), h, kernel)
    right = hybrid_moyal_product(f, hybrid_moyal_product(g, h, kernel), kernel)
    return float(np.abs(left.values - right.values).max())


# -- Weyl / Wigner matrix transforms -------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Operator in the discrete position basis q_n of a square commensurate grid."""

    grid: PhaseGrid
    entries: np.ndarray
    k: float

    @property
    def dim(self) -> int:
        return self.grid.n_q

    def hermiticity_error(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.entries @ other.entries, self.k)


def admissible_k(grid: PhaseGrid) -> float:
    return grid.n_q * grid.dq * grid.dp / (2 * np.pi)


def check_commensurate(grid: PhaseGrid, k: float) -> None:
    if grid.n_q != grid.n_p:
        raise ValueError("matrix transforms need n_q == n_p")
    k_ok = admissible_k(grid)
    if abs(k - k_ok) > COMMENSURATE_TOL * max(1.0, k_ok):
        raise ValueError(f"grid is not commensurate with k={k!r}; the admissible scale for this grid "
                         f"is k={k_ok!r} (n*dq*dp = 2*pi*k)")


def _true_modes(f_values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    kq, kp = grid.wavenumbers()
    c = np.fft.fft2(f_values) / f_values.size
    return c * np.exp(-1j * kq * grid.q_min)[:, None] * np.exp(-1j * kp * grid.p_min)[None, :]


def weyl_transform(f: PhaseField, k: float) -> OperatorMatrix:
    """Operator with matrix elements A[n, n+b] = sum_a fhat(a, b) exp(i kq_a (q_n + b dq/2)).

    Mode (a, b) maps to the displacement exp(i(kq_a q + kp_b p)), which acts on
    the position basis as a diagonal phase followed by a shift of b sites.
    """
    grid = f.grid
    check_commensurate(grid, k)
    n = grid.n_q
    kq, _ = grid.wavenumbers()
    fh = _true_modes(f.values, grid)
    shifts = np.rint(np.fft.fftfreq(n) * n).astype(int)
    q = grid.q
    A = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    for bi, b in enumerate(shifts):
        phases = np.exp(1j * np.outer(q + b * grid.dq / 2, kq))  # [n, a]
        A[rows, (rows + b) % n] = phases @ fh[:, bi]
    return OperatorMatrix(grid, A, k)


def wigner_transform(A: OperatorMatrix, real: bool = True) -> PhaseField:
    """Inverse of weyl_transform: the phase-space symbol of ``A``."""
    grid = A.grid
    n = grid.n_q
    kq, kp = grid.wavenumbers()
    shifts = np.rint(np.fft.fftfreq(n) * n).astype(int)
    q = grid.q
    rows = np.arange(n)
    fh = np.zeros((n, n), dtype=complex)
    for bi, b in enumerate(shifts):
        diag = A.entries[rows, (rows + b) % n]
        phases = np.exp(-1j * np.outer(kq, q + b * grid.dq / 2))  # [a, n]
        fh[:, bi] = phases @ diag / n
    c = fh * np.exp(1j * kq * grid.q_min)[:, None] * np.exp(1j * kp * grid.p_min)[None, :]
    vals = np.fft.ifft2(c) * c.size
    if real:
        resid = float(np.abs(vals.imag).max())
        if resid > IMAG_TOL * max(1.0, float(np.abs(vals).max())):
            raise ValueError(f"Wigner transform has imaginary residue {resid:.3g}; operator is not Hermitian")
        vals = vals.real
    return PhaseField(grid, vals)


def position_function_operator(grid: PhaseGrid, func, k: float) -> OperatorMatrix:
    """V(q) as a diagonal matrix in the position basis."""
    check_commensurate(grid, k)
    return OperatorMatrix(grid, np.diag(func(grid.q)).astype(complex), k)


def momentum_function_operator(grid: PhaseGrid, func, k: float) -> OperatorMatrix:
    """T(p) built from plane waves <q_n|p_m> = exp(i p_m q_n / k) / sqrt(N), p_m = m dp."""
    check_commensurate(grid, k)
    n = grid.n_q
    pm = np.fft.fftfreq(n) * n * grid.dp
    U = np.exp(1j * np.outer(grid.q, pm) / k) / np.sqrt(n)
    return OperatorMatrix(grid, (U * func(pm)[None, :]) @ U.conj().T, k)


def commutator_bracket(f: PhaseField, H, k: float) -> PhaseField:
    """Matrix-route bracket: Wigner of [H, rho] / (i k).

    ``H`` is an OperatorMatrix or a field to be Weyl transformed.
    """
    rho = weyl_transform(f, k).entries
    h = H.entries if isinstance(H, OperatorMatrix) else weyl_transform(H, k).entries
    return wigner_transform(OperatorMatrix(f.grid, (h @ rho - rho @ h) / (1j * k), k))
