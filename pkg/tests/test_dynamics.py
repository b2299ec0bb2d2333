import numpy as np
import pytest

from phasegpt import dynamics as dy
from phasegpt.gpt import hamiltonian_field, sho_stationary_spectrum, SpectrumEntry, StationarySpectrum
from phasegpt.grid import PhaseField, PhaseGrid, constant, from_function, inner_product, integrate
from phasegpt.kernels import Kernel
from phasegpt.states import build_state, gaussian, ring, sho_eigen
from phasegpt.transforms import Hamiltonian, poisson_bracket, sine_bracket

QUANTUM = Kernel.quantum(1.0)
H_BAR = 2 * np.pi


def gaussian_rotation_field(grid, q0, p0, stiffness):
    """Analytic df/dt = {f, H} for f = exp(-(q-q0)^2-(p-p0)^2)/pi and H = s (q^2 + p^2)."""
    Q, P = grid.mesh()
    f = np.exp(-((Q - q0) ** 2 + (P - p0) ** 2)) / np.pi
    fq, fp = -2 * (Q - q0) * f, -2 * (P - p0) * f
    return fp * 2 * stiffness * Q - fq * 2 * stiffness * P


def test_quantum_sho_generator_is_rigid_rotation(grid64):
    f = build_state(gaussian(1.0, -0.5), grid64)
    gen = dy.generator_from_hamiltonian(f, Hamiltonian.harmonic(grid64, 0.5), QUANTUM, H_BAR)
    assert np.abs(gen.values - gaussian_rotation_field(grid64, 1.0, -0.5, 0.5)).max() < 1e-6


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_eigenstates_are_stationary(grid64, n):
    W = build_state(sho_eigen(n), grid64)
    gen = dy.generator_from_hamiltonian(W, Hamiltonian.harmonic(grid64, 0.5), QUANTUM, H_BAR)
    assert np.abs(gen.values).max() < 1e-8


def test_constant_hamiltonian_gives_zero(grid64):
    f = build_state(gaussian(0.3, 0.2), grid64)
    gen = dy.generator_from_hamiltonian(f, constant(grid64, 4.0), QUANTUM, H_BAR)
    assert np.abs(gen.values).max() < 1e-14


def test_generator_needs_positive_volume(grid64):
    f = build_state(gaussian(), grid64)
    with pytest.raises(ValueError):
        dy.generator_from_hamiltonian(f, constant(grid64), QUANTUM, 0.0)


def test_classical_kernel_gives_poisson_flow(grid64):
    f = build_state(gaussian(0.5, 0.5), grid64)
    H = from_function(grid64, lambda q, p: np.cos(q / 2) * np.cos(p / 4))
    gen = dy.generator_from_hamiltonian(f, H, Kernel.classical(), 1.0)
    assert np.array_equal(gen.values, poisson_bracket(f, H).values)


def test_classical_component_drops_from_mixed_generator(grid64):
    f = build_state(gaussian(0.5, 0.5), grid64)
    H = from_function(grid64, lambda q, p: np.cos(q / 2) * np.cos(p / 4))
    mixed = dy.generator_from_hamiltonian(f, H, Kernel(((1.0, 1.0), (3.0, 0.0))), H_BAR)
    pure = dy.generator_from_hamiltonian(f, H, QUANTUM, H_BAR)
    assert np.abs(mixed.values - pure.values).max() < 1e-14


def test_classical_limit_of_generator():
    g = PhaseGrid.square(64, 2 * np.pi)
    f = build_state(gaussian(0.5, -0.3), g)
    H = from_function(g, lambda q, p: np.cos(q) + 0.5 * np.cos(p))
    pb = poisson_bracket(f, H).values
    errs = []
    for eps in (0.2, 0.1, 0.05):
        # V_p = 2 pi eps makes the prefactor 1 for a single delta at eps
        gen = dy.generator_from_hamiltonian(f, H, Kernel.quantum(eps), 2 * np.pi * eps).values
        errs.append(np.linalg.norm(gen - pb) / np.linalg.norm(pb))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2) < 0.3)


def test_stationary_generator_zero_rate(grid64):
    W0 = build_state(sho_eigen(0), grid64)
    spec = StationarySpectrum([SpectrumEntry(W0, H_BAR, 0.0, 0.0)], H_BAR, QUANTUM)
    f = build_state(gaussian(1.0, 0.0), grid64)
    assert np.abs(dy.generator_from_stationary(f, spec).values).max() == 0


def test_stationary_generator_empty_spectrum(grid64):
    with pytest.raises(ValueError):
        dy.generator_from_stationary(build_state(gaussian(), grid64), StationarySpectrum([], H_BAR, QUANTUM))


def test_stationary_route_matches_hamiltonian_route():
    g = PhaseGrid.square(64, 9.0)
    S = sho_stationary_spectrum(10, 1.0, 0.5, g)
    H = hamiltonian_field(S)
    f = build_state(gaussian(1.0, 0.5), g)
    a = dy.generator_from_stationary(f, S).values
    b = dy.generator_from_hamiltonian(f, H, QUANTUM, S.V_p).values
    assert np.abs(a - b).max() < 1e-6


@pytest.mark.parametrize("j", [0, 3, 6])
def test_stationary_generator_annihilates_members(j):
    g = PhaseGrid.square(64, 9.0)
    S = sho_stationary_spectrum(6, 1.0, 0.5, g)
    assert np.abs(dy.generator_from_stationary(S.entries[j].g, S).values).max() < 1e-8


# -- jump kernels ------------------------------------------------------------------

def test_kinetic_jump_kernel_is_derivative_stencil(grid64):
    f = build_state(gaussian(0.0, 1.0), grid64)
    J = dy.build_jump_kernel(Hamiltonian.kinetic(grid64, 2.0), 1.0)
    assert all(j == 0 for (_, j) in J.terms)
    Q, P = grid64.mesh()
    expected = -(P / 2.0) * (-2 * Q * f.values)
    assert np.abs(dy.apply_jump_kernel(f, J).values - expected).max() < 1e-10


def test_constant_hamiltonian_has_no_jumps(torus32):
    J = dy.build_jump_kernel(constant(torus32, 2.0), np.pi / 4)
    assert J.terms == {}
    f = build_state(gaussian(), torus32)
    assert np.abs(dy.apply_jump_kernel(f, J).values).max() == 0


def test_cos_q_jumps_along_p(torus32):
    k = np.pi / 4
    J = dy.build_jump_kernel(from_function(torus32, lambda q, p: np.cos(q)), k)
    # unit wavenumber jumps by k/2 in p
    step = round(k / 2 / torus32.dp)
    assert set(J.terms) == {(0, step), (0, -step)}


def test_jump_route_matches_sine_bracket(torus32):
    H = from_function(torus32, lambda q, p: np.cos(q) + 0.5 * np.cos(p) + 0.2 * np.sin(q - p))
    f = build_state(gaussian(0.5, -0.5), torus32)
    k = np.pi / 4
    J = dy.build_jump_kernel(H, k)
    out = dy.apply_jump_kernel(f, J)
    assert np.abs(out.values - sine_bracket(f, H, k).values).max() < 1e-12
    assert abs(integrate(out)) < 1e-9
    assert np.abs(dy.apply_dense_jump_kernel(f, J.dense()).values - out.values).max() < 1e-12


def test_off_grid_jumps_rejected():
    g = PhaseGrid.square(32, 2 * np.pi)
    with pytest.raises(ValueError, match="grid steps"):
        dy.build_jump_kernel(from_function(g, lambda q, p: np.cos(q)), 1.0)


def test_aliasing_detector(torus32):
    H = from_function(torus32, lambda q, p: np.cos(5 * q))
    with pytest.raises(dy.AliasingError):
        dy.build_jump_kernel(H, np.pi / 4)


def test_dense_size_limit(grid64):
    J = dy.build_jump_kernel(Hamiltonian.kinetic(grid64), 1.0)
    with pytest.raises(MemoryError):
        J.dense()


@pytest.mark.parametrize("func", [lambda q, p: np.cos(q), lambda q, p: np.cos(p),
                                  lambda q, p: np.cos(q) + np.cos(p)], ids=["cos_q", "cos_p", "cos_q_cos_p"])
def test_j_symmetries(torus32, func):
    rep = dy.verify_j_symmetries(dy.build_jump_kernel(from_function(torus32, func), np.pi / 4))
    assert rep.ok(1e-10)


def test_symmetry_detector_sees_corruption(torus32):
    Jd = dy.build_jump_kernel(from_function(torus32, lambda q, p: np.cos(q)), np.pi / 4).dense()
    idx = tuple(np.argwhere(np.abs(Jd) > 0)[0])
    bad = Jd.copy()
    bad[idx] = -bad[idx]
    rep = dy.verify_j_symmetries(bad)
    assert rep.antisymmetry == pytest.approx(2 * abs(Jd[idx]), rel=1e-12)
    assert rep.conservation_pairing == pytest.approx(2 * abs(Jd[idx]), rel=1e-12)


def test_even_field_has_no_jumps_at_symmetry_point(torus32):
    k = np.pi / 4
    i0 = torus32.n_q // 2  # the origin is a grid point
    even = dy.build_jump_kernel(from_function(torus32, lambda q, p: np.cos(q) + np.cos(p) + np.cos(q + p)), k)
    assert max(abs(c[i0, i0]) for c in even.terms.values()) < 1e-15
    odd = dy.build_jump_kernel(from_function(torus32, lambda q, p: np.sin(q)), k)
    assert max(abs(c[i0, i0]) for c in odd.terms.values()) > 0.1


# -- integration -------------------------------------------------------------------

def rotation_generator(grid, stiffness=0.5):
    return dy.hamiltonian_generator(Hamiltonian.harmonic(grid, stiffness), QUANTUM, H_BAR)


def test_rk4_fourth_order():
    g = PhaseGrid.square(32, 6.0)
    f = build_state(gaussian(1.0, 0.0), g)
    gen = rotation_generator(g)
    ref = dy.rotate_field(f, dy.harmonic_flow_angle(0.5, 0.4))
    errs = []
    for steps in (8, 16):
        tr = dy.evolve(f, gen, dy.EvolutionRun(0.4 / steps, steps, stride=steps, check_cfl=False))
        errs.append(np.abs(tr.final[0].values - ref.values).max())
    assert 12 < errs[0] / errs[1] < 20


def test_rotation_oracle_quarter_turn(grid64):
    f = build_state(gaussian(1.0, 0.0), grid64)
    rotated = dy.rotate_field(f, np.pi / 2)
    Q, P = grid64.mesh()
    # clockwise flow moves (1, 0) to (0, -1)
    assert np.abs(rotated.values - np.exp(-(Q**2 + (P + 1) ** 2)) / np.pi).max() < 1e-12


def test_zero_hamiltonian_identity_trajectory(grid64):
    f = build_state(gaussian(0.2, 0.1), grid64)
    gen = dy.hamiltonian_generator(constant(grid64, 0.0), QUANTUM, H_BAR)
    tr = dy.evolve(f, gen, dy.EvolutionRun(0.01, 10, stride=5))
    assert all(np.array_equal(s[0].values, f.values) for s in tr.snapshots)
    assert tr.times == [0.0, 0.05, 0.1]


def test_monitor_lengths_match_stride(grid64):
    f = build_state(gaussian(0.2, 0.1), grid64)
    run = dy.EvolutionRun(1e-3, 10, stride=3, monitors=("norm", "state_volume", "energy"))
    tr = dy.evolve(f, rotation_generator(grid64), run, energy_field=Hamiltonian.harmonic(grid64, 0.5).sample())
    assert len(tr.times) == 5  # t = 0, 3, 6, 9 and the final step
    assert all(len(v) == len(tr.times) for v in tr.monitors.values())


def test_inner_product_drift_per_step(grid64):
    f1 = build_state(gaussian(1.0, 0.0), grid64)
    f2 = build_state(gaussian(0.0, 1.5), grid64)
    tr = dy.evolve([f1, f2], rotation_generator(grid64), dy.EvolutionRun(1e-3, 50, monitors=("inner",)))
    inner = np.array(tr.monitors["inner"])[:, 0]
    assert np.abs(np.diff(inner)).max() < 1e-8


def test_cfl_guard(grid64):
    f = build_state(gaussian(), grid64)
    with pytest.raises(ValueError, match="stability guard"):
        dy.evolve(f, rotation_generator(grid64), dy.EvolutionRun(0.5, 2))


def test_blowup_keeps_last_good_snapshot(grid64):
    f = build_state(gaussian(), grid64)
    calls = {"n": 0}

    def gen(x):
        calls["n"] += 1
        return x.with_values(np.full(x.grid.shape, np.inf if calls["n"] > 8 else 0.0))

    tr = dy.evolve(f, gen, dy.EvolutionRun(0.1, 10, stride=4, check_cfl=False))
    assert not tr.completed
    assert "non-finite" in tr.failure
    assert tr.times[-1] == pytest.approx(0.2)
    assert np.isfinite(tr.final[0].values).all()


def test_ring_stationary_under_classical_flow():
    g = PhaseGrid.square(128, 8.0)
    f = build_state(ring(3.0, 1.0), g)
    gen = dy.generator_from_hamiltonian(f, Hamiltonian.harmonic(g, 0.5), Kernel.classical(), 1.0)
    assert np.abs(gen.values).max() < 1e-8 * np.abs(f.values).max()


def test_unknown_monitor_rejected():
    with pytest.raises(ValueError):
        dy.EvolutionRun(0.1, 1, monitors=("bogus",))


def test_manifest_helpers():
    assert dy.monitor_csv([0.0, 0.5], [1.0, 2.0]) == "time,value\n0,1\n0.5,2\n"
    assert dy.manifest_json({"b": 1, "a": 2}).index('"a"') < dy.manifest_json({"b": 1, "a": 2}).index('"b"')
