"""Property suites behind ``phasegpt verify``; each check reports its measured residual."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import chaos, dynamics, gpt, spekkens
from .grid import PhaseGrid, from_function, inner_product, integrate, reflect_p, switch_axes, translate
from .kernels import Kernel
from .states import box, build_state, gaussian, sho_eigen
from .transforms import (Hamiltonian, associator, commutator_bracket, moyal_product,
                         momentum_function_operator, poisson_bracket, position_function_operator,
                         sine_bracket)

SUITES = ("inner-product", "star-algebra", "dynamics-equivalence", "volumes", "spekkens", "chaos")


def _check(prop, value, threshold, comparison="<="):
    value = float(value)
    ok = value <= threshold if comparison == "<=" else value >= threshold
    return {"property": prop, "value": value, "threshold": threshold, "comparison": comparison, "pass": bool(ok)}


def _exact(prop, ok, detail=""):
    return {"property": prop, "value": detail, "threshold": "exact", "comparison": "==", "pass": bool(ok)}


def inner_product_suite():
    g = PhaseGrid.square(64, 8.0)
    f1 = build_state(gaussian(1.0, 0.5), g)
    f2 = build_state(gaussian(-0.5, 1.0), g)
    base = inner_product(f1, f2)
    a, b = 3 * g.dq, -5 * g.dp
    return [
        _check("symmetry", abs(base - inner_product(f2, f1)), 1e-15),
        _check("translation_grid_shift", abs(inner_product(translate(f1, a, b), translate(f2, a, b)) - base), 1e-12),
        _check("translation_fractional_shift",
               abs(inner_product(translate(f1, 0.37, -0.21), translate(f2, 0.37, -0.21)) - base), 1e-10),
        _check("switch_axes", abs(inner_product(switch_axes(f1), switch_axes(f2)) - base), 1e-12),
        _check("parity", abs(inner_product(reflect_p(f1), reflect_p(f2)) - base), 1e-12),
    ]


def hybrid_witness(grid: PhaseGrid | None = None):
    """Three unit-amplitude Gaussians used to expose non-associativity of mixed kernels."""
    grid = grid or PhaseGrid.square(64, 8.0)
    centers = [(0.5, 0.0), (0.0, 0.5), (-0.5, -0.5)]
    return [from_function(grid, lambda q, p, c=c: np.exp(-((q - c[0]) ** 2 + (p - c[1]) ** 2)))
            for c in centers]


def classical_limit_orders(eps=(0.2, 0.1, 0.05)):
    g = PhaseGrid.square(64, 2 * np.pi)
    f = build_state(gaussian(0.5, -0.3), g)
    H = from_function(g, lambda q, p: np.cos(q) + 0.5 * np.cos(p) + 0.3 * np.sin(q + p))
    pb = poisson_bracket(f, H).values
    errs = [np.linalg.norm(sine_bracket(f, H, e).values - pb) / np.linalg.norm(pb) for e in eps]
    return [math.log(errs[i] / errs[i + 1]) / math.log(eps[i] / eps[i + 1]) for i in range(len(eps) - 1)]


def star_algebra_suite():
    g = PhaseGrid.square(32, 6.0)
    fs = [build_state(gaussian(*c), g) for c in [(0.5, 0.0), (0.0, 0.5), (-0.5, -0.5)]]
    one = from_function(g, lambda q, p: np.ones_like(q))
    small = PhaseGrid.square(16, 5.0)
    a = from_function(small, lambda q, p: np.exp(-(q - 0.3) ** 2 - p**2))
    b = from_function(small, lambda q, p: np.exp(-q**2 - (p + 0.4) ** 2))
    fft_direct = np.abs(moyal_product(a, b, 1.0).values - moyal_product(a, b, 1.0, "direct").values).max()
    witness = hybrid_witness()
    mixed = Kernel(((0.5, 1.0), (0.5, 0.0)))
    orders = classical_limit_orders()
    return [
        _check("associativity_single_delta", associator(*fs, Kernel.quantum(1.0)), 1e-10),
        _check("unit", np.abs(moyal_product(fs[0], one, 1.0).values - fs[0].values).max(), 1e-12),
        _check("fft_matches_direct", fft_direct, 1e-12),
        _check("hybrid_non_associativity_witness", associator(*witness, mixed), 1e-3, ">="),
        _check("classical_limit_order_min", min(orders), 1.7, ">="),
        _check("classical_limit_order_max", max(orders), 2.3),
    ]


def three_route_setup():
    """Commensurate N=64 grid, k=1/2, H = p^2/2 + cos q, and a Gaussian test state."""
    g = PhaseGrid(64, 64, -2 * np.pi, 2 * np.pi, -8.0, 8.0)
    k = 0.5
    V = from_function(g, lambda q, p: np.cos(q))
    H = Hamiltonian.kinetic(g, 1.0, V)
    f = build_state(gaussian(0.4, 0.3, hbar=1.0), g)
    H_op = momentum_function_operator(g, lambda p: p**2 / 2, k)
    H_op = type(H_op)(g, H_op.entries + position_function_operator(g, np.cos, k).entries, k)
    return g, k, H, H_op, f


def three_routes():
    g, k, H, H_op, f = three_route_setup()
    a = sine_bracket(f, H, k).values
    b = dynamics.apply_jump_kernel(f, dynamics.build_jump_kernel(H, k)).values
    c = commutator_bracket(f, H_op, k).values
    return a, b, c


def dynamics_suite():
    a, b, c = three_routes()
    out = [
        _check("sine_vs_jump", np.abs(a - b).max(), 1e-6),
        _check("sine_vs_matrix", np.abs(a - c).max(), 1e-6),
        _check("jump_vs_matrix", np.abs(b - c).max(), 1e-6),
    ]
    g = PhaseGrid.square(32, 2 * np.pi)
    for name, func in [("cos_q", lambda q, p: np.cos(q)), ("cos_p", lambda q, p: np.cos(p)),
                       ("cos_q_plus_cos_p", lambda q, p: np.cos(q) + np.cos(p))]:
        rep = dynamics.verify_j_symmetries(dynamics.build_jump_kernel(from_function(g, func), np.pi / 4))
        out.append(_check(f"antisymmetry_{name}", rep.antisymmetry, 1e-10))
        out.append(_check(f"conservation_pairing_{name}", rep.conservation_pairing, 1e-10))
    return out


def volumes_suite():
    g = PhaseGrid.square(128, 8.0)
    h = 2 * np.pi
    W0 = build_state(sho_eigen(0), g)
    W1 = build_state(sho_eigen(1), g)
    cg = gpt.coarse_grain([gpt.Effect.from_state(W0), gpt.Effect.from_state(W1)])
    gauss = [build_state(gaussian(q, p), g) for q, p in [(0, 0), (1, 0), (0, -1.5)]]
    tiles = PhaseGrid.square(16, 6.0)
    count, area = gpt.box_tiling_count(tiles, 3.0, 1.5)
    bv = gpt.state_volume(build_state(box(-6.0, -6.0, 3.0, 1.5), tiles))
    comp = gpt.composite_energy_check(box_theory(tiles, (3.0, 1.5), lambda i: 0.5 * i),
                                      box_theory(tiles, (1.5, 3.0), lambda i: 1.0 + 0.25 * i),
                                      _grid_normalized(gaussian(0.3, -0.2), tiles),
                                      _grid_normalized(gaussian(-0.5, 0.4), tiles))
    return [
        _check("gaussian_volume_relative", abs(gpt.state_volume(gauss[0]) / h - 1), 1e-3),
        _exact("box_volume", bv == 4.5, repr(bv)),
        _check("coarse_grained_pair_relative", abs(cg.V / (2 * h) - 1), 1e-3),
        _check("reciprocity", gpt.reciprocity_residual(gauss), 1e-10),
        _exact("box_tiling_count", count * 4.5 == tiles.area and area == tiles.area, f"{count} tiles, {area}"),
        _check("composite_additivity_box_theory", abs(comp.discrepancy), 1e-6),
    ]


def _grid_normalized(spec, grid):
    f = build_state(spec, grid)
    return f.with_values(f.values / integrate(f), "state")


def box_theory(grid: PhaseGrid, size, energy) -> gpt.StationarySpectrum:
    """A complete orthogonal spectrum of box states tiling ``grid``; ``energy(i)`` gives E_i."""
    eps, delta = size
    nq, n_p = round(grid.length_q / eps), round(grid.length_p / delta)
    states, energies = [], []
    for i in range(nq):
        for j in range(n_p):
            states.append(build_state(box(grid.q_min + i * eps, grid.p_min + j * delta, eps, delta), grid))
            energies.append(energy(len(energies)))
    return gpt.spectrum_from_energies(states, energies, eps * delta, Kernel.quantum(1.0))


def spekkens_suite():
    T = spekkens.ToyTransformation.from_cycles
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    v = spekkens.stationary_polytope_vertices
    s = spekkens.EpistemicState
    three = spekkens.state_dual_measurement_exists(T((1, 2, 3)))
    return [
        _exact("pure_volume", spekkens.toy_state_volume(spekkens.pair_state(1, 2)) == 2),
        _exact("mixed_volume", spekkens.toy_state_volume(spekkens.MAXIMALLY_MIXED) == 4),
        _exact("transition_1v3_given_1v2",
               spekkens.toy_measure(spekkens.pair_state(1, 3), spekkens.pair_state(1, 2)) == half),
        _exact("identity_vertices", set(v(T())) == set(spekkens.PURE_STATES)),
        _exact("transposition_vertices", set(v(T((3, 4)))) == {
            s((half, half, 0, 0)), s((0, 0, half, half)), s((half, 0, quarter, quarter)),
            s((0, half, quarter, quarter))}),
        _exact("double_transposition_vertices",
               set(v(T((1, 2), (3, 4)))) == {spekkens.pair_state(1, 2), spekkens.pair_state(3, 4)}),
        _exact("four_cycle_vertices", v(T((1, 2, 3, 4))) == [spekkens.MAXIMALLY_MIXED]),
        _exact("three_cycle_no_dual_measurement",
               not three.exists and three.witness is not None and spekkens.dot(*three.witness) > 0),
    ]


def chaos_suite():
    g = PhaseGrid.square(64, 8.0)
    fg = build_state(gaussian(), g)
    dxs = np.linspace(0, 4, 21)
    curve = chaos.overlap_curve(fg, dxs)
    vals = np.array([v for _, v in curve])
    sym = chaos.overlap_curve(build_state(sho_eigen(1), g), [-1.3, 1.3])
    est = chaos.ChaosEstimate(V_I=3.0, sigma=0.0, delta_I=0.0, slope=1.0, V_p=2 * np.pi)
    return [
        _check("unit_at_zero", max(abs(chaos.overlap_curve(build_state(s, g), [0.0])[0][1] - 1)
                                   for s in (gaussian(), sho_eigen(1), sho_eigen(2))), 1e-12),
        _check("gaussian_closed_form", np.abs(vals - np.exp(-dxs**2 / 2)).max(), 1e-6),
        _exact("gaussian_strictly_decreasing", bool(np.all(np.diff(vals) < 0))),
        _check("parity_symmetry", abs(sym[0][1] - sym[1][1]), 1e-10),
        _check("entropy_unperturbed", abs(chaos.entropy_bound(est) - math.log(3.0 / (2 * np.pi))), 1e-15),
    ]


_RUNNERS = {
    "inner-product": inner_product_suite,
    "star-algebra": star_algebra_suite,
    "dynamics-equivalence": dynamics_suite,
    "volumes": volumes_suite,
    "spekkens": spekkens_suite,
    "chaos": chaos_suite,
}


def run_suite(name: str, threads: int = 1) -> dict:
    """Results keyed by suite name; ``all`` runs every suite, concurrently if threads > 1."""
    if name == "all":
        names = list(SUITES)
    elif name in _RUNNERS:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    if threads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda n: _RUNNERS[n](), names))
    else:
        results = [_RUNNERS[n]() for n in names]
    return dict(zip(names, results))


def all_passed(report: dict) -> bool:
    return all(c["pass"] for checks in report.values() for c in checks)

