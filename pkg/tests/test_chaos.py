import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phasegpt import chaos
from phasegpt import dynamics as dy
from phasegpt.grid import inner_product
from phasegpt.kernels import Kernel
from phasegpt.states import build_state, gaussian, sho_eigen
from phasegpt.transforms import Hamiltonian

DXS = np.linspace(0, 4, 41)


@pytest.mark.parametrize("spec", [gaussian(), gaussian(0.5, -0.3), sho_eigen(1), sho_eigen(2)])
def test_unit_at_zero(grid64, spec):
    assert chaos.overlap_curve(spec, [0.0], grid64)[0][1] == pytest.approx(1.0, abs=1e-12)


def test_gaussian_closed_form(grid64):
    vals = np.array([v for _, v in chaos.overlap_curve(gaussian(), DXS, grid64)])
    assert np.abs(vals - chaos.gaussian_overlap(DXS)).max() < 1e-6
    assert np.all(np.diff(vals) < 0)


def test_first_excited_closed_form(grid64):
    vals = np.array([v for _, v in chaos.overlap_curve(sho_eigen(1), DXS, grid64)])
    exact = np.exp(-DXS**2 / 2) * (1 - DXS**2 / 2) ** 2
    assert np.abs(vals - exact).max() < 1e-6


@given(st.floats(0.0, 3.0))
def test_parity(dx):
    from phasegpt.grid import PhaseGrid
    f = build_state(sho_eigen(2), PhaseGrid.square(64, 8.0))
    (_, a), (_, b) = chaos.overlap_curve(f, [-dx, dx])
    assert a == pytest.approx(b, abs=1e-10)


def test_displacement_beyond_half_domain(grid64):
    with pytest.raises(ValueError, match="half the q-domain"):
        chaos.overlap_curve(gaussian(), [8.5], grid64)


def test_spec_needs_grid():
    with pytest.raises(ValueError):
        chaos.overlap_curve(gaussian(), [0.0])


def test_centered_slope_matches_derivative(grid64):
    d = 1.2
    slope = chaos.centered_slope(gaussian(), d, 0.25, grid64)
    assert slope == pytest.approx(-d * math.exp(-d * d / 2), rel=2e-2)


def test_entropy_unperturbed():
    est = chaos.ChaosEstimate(V_I=3.0, sigma=0.0, delta_I=0.0, slope=1.0, V_p=2 * np.pi)
    assert est.S == pytest.approx(math.log(3.0 / (2 * np.pi)), abs=1e-15)


def test_entropy_formula():
    est = chaos.ChaosEstimate(V_I=2.0, sigma=0.5, delta_I=0.1, slope=3.0, V_p=1.0)
    assert est.S == pytest.approx(math.log(2.0 + 0.25 + 0.09), rel=1e-14)


@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_entropy_monotone_in_sigma(s1, s2):
    lo, hi = sorted((s1, s2))
    a = chaos.ChaosEstimate(1.0, lo, 0.2, 1.0, 1.0)
    b = chaos.ChaosEstimate(1.0, hi, 0.2, 1.0, 1.0)
    assert a.S <= b.S


def test_entropy_rejects_non_positive_argument():
    with pytest.raises(ValueError, match="positive"):
        chaos.entropy_bound(chaos.ChaosEstimate(V_I=0.0, sigma=0.0, delta_I=0.0, slope=1.0, V_p=1.0))
    with pytest.raises(ValueError):
        chaos.ChaosEstimate(1.0, -1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        chaos.ChaosEstimate(1.0, 0.0, 0.0, 1.0, 0.0)


def test_estimate_for_gaussian(grid64):
    f = build_state(gaussian(), grid64)
    est = chaos.estimate_for_state(f, 1.0, sigma=0.0, delta_I=0.0, V_p=2 * np.pi, step=0.01)
    assert est.V_I == pytest.approx(2 * np.pi, abs=1e-6)
    assert est.slope == pytest.approx(-1 / math.exp(-0.5), rel=1e-4)
    data = json.loads(est.to_json())
    assert data["label"] == "entropy bound estimate" and data["S"] == pytest.approx(0.0, abs=1e-6)


def test_curve_csv_round_trip(grid64):
    curve = chaos.overlap_curve(gaussian(), [0.0, 0.5], grid64)
    lines = chaos.curve_csv(curve).splitlines()
    assert lines[0] == "dx,I"
    assert [float(x) for x in lines[2].split(",")] == list(curve[1])


def test_overlap_with_perturbed_twin_is_conserved(grid64):
    f = build_state(gaussian(1.0, 0.0), grid64)
    twin = build_state(gaussian(1.1, 0.0), grid64)
    gen = dy.hamiltonian_generator(Hamiltonian.harmonic(grid64, 0.5), Kernel.quantum(1.0), 2 * np.pi)
    tr = dy.evolve([f, twin], gen, dy.EvolutionRun(0.002, 500, stride=500))
    a, b = tr.final
    assert inner_product(a, b) == pytest.approx(inner_product(f, twin), abs=1e-10)
