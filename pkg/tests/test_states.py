import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkpcircuit.core import ModelParams, ValidationError, delta_from_ratio
from gkpcircuit.operators import hermite_functions
from gkpcircuit.spectra import lll_confined_hamiltonian, lll_spectrum
from gkpcircuit.states import (
    SQRT_PI, GridMismatch, GridStateParams, GridTooNarrow, SampledWavefunction,
    approx_grid_state, default_grid, envelope_width, fidelity, fock_to_grid, fourier_1d,
    grid_to_fock, hadamard_pair, hadamard_weights, peak_width,
)


def _l2(a, b):
    return math.sqrt(np.trapezoid(np.abs(a.values - b.values) ** 2, a.grid))


@pytest.fixture(scope="module")
def codewords():
    return approx_grid_state(0, 0.25), approx_grid_state(1, 0.25)


def test_params_auto_cutoff():
    p = GridStateParams(0.25)
    assert p.n_peaks == math.ceil(3 / (SQRT_PI * 0.0625)) + 2
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValidationError):
            GridStateParams(bad)


def test_default_grid_shape():
    x = default_grid(0.25)
    assert x[0] == -24 and x[-1] == 24 and len(x) == 4096
    assert 0.25 / (x[1] - x[0]) >= 20


def test_normalized_and_even(codewords):
    for psi in codewords:
        assert psi.norm_defect < 1e-8
        assert np.allclose(psi.values, psi.values[::-1], atol=1e-12)


def test_grid_too_narrow():
    with pytest.raises(GridTooNarrow):
        approx_grid_state(0, 0.25, np.linspace(-10, 10, 2001))


@pytest.mark.parametrize("d", [0.2, 0.25, 0.3])
def test_codeword_overlap(d):
    p0, p1 = approx_grid_state(0, d), approx_grid_state(1, d)
    # neighbouring peaks of the two combs are sqrt(pi) apart
    assert abs(p0.inner(p1)) < 3 * math.exp(-math.pi / (4 * d**2))


@pytest.mark.parametrize("d", [0.2, 0.25, 0.3])
def test_width_law(d):
    psi = approx_grid_state(0, d)
    assert abs(peak_width(psi, 0.0, d) / d - 1) < 0.02
    assert abs(envelope_width(psi, 0) * d - 1) < 0.05


def test_comb_limit():
    weights = []
    for d in (0.2, 0.1, 0.05):
        psi = approx_grid_state(0, d)
        x = psi.grid
        dist = np.abs(x - 2 * SQRT_PI * np.round(x / (2 * SQRT_PI)))
        weights.append(np.trapezoid(np.abs(psi.values) ** 2 * (dist < 0.25), x))
    assert weights[0] < weights[1] < weights[2]
    assert weights[2] > 1 - 1e-9


def test_unnormalized_prefactor_close_to_one():
    psi = approx_grid_state(0, 0.25, normalize=False)
    assert abs(psi.norm - 1) < 0.01


def test_hadamard_weights_and_orthogonality(codewords):
    c, s = hadamard_weights()
    assert abs(c - 0.92388) < 1e-5 and abs(s - 0.38268) < 1e-5
    hp, hm = hadamard_pair(*codewords)
    assert abs(hp.inner(hm)) < 1e-10 + 2 * abs(codewords[0].inner(codewords[1]))
    a, b = hadamard_pair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert np.allclose(a, [c, s]) and np.allclose(b, [-s, c])


def test_hadamard_pair_grid_mismatch(codewords):
    other = approx_grid_state(0, 0.25, np.linspace(-24, 24, 4001))
    with pytest.raises(GridMismatch):
        hadamard_pair(codewords[0], other)


def test_fourier_gaussian_and_fock():
    x = np.linspace(-20, 20, 4001)
    g = SampledWavefunction(x, np.pi**-0.25 * np.exp(-x**2 / 2))
    f = fourier_1d(g, out_grid=x)
    assert _l2(f, g) < 1e-10
    one = SampledWavefunction(x, hermite_functions(x, 1)[1])
    f1 = fourier_1d(one, out_grid=x)
    assert _l2(f1, SampledWavefunction(x, -1j * one.values)) < 1e-10


def test_fourier_fft_parseval(codewords):
    f = fourier_1d(codewords[0], pad=2)
    assert abs(np.sum(np.abs(f.values) ** 2) * (f.grid[1] - f.grid[0]) - 1) < 1e-8


def test_fourier_maps_codeword_to_plus_state(codewords):
    p0, p1 = codewords
    f = fourier_1d(p0, out_grid=p0.grid)
    plus = SampledWavefunction(p0.grid, (p0.values + p1.values) / math.sqrt(2))
    assert _l2(f, plus) < 5 * 0.25**2


def test_fourier_hadamard_eigenstates(codewords):
    hp, hm = hadamard_pair(*codewords)
    for s, sign in ((hp, 1), (hm, -1)):
        f = fourier_1d(s, out_grid=s.grid)
        assert _l2(f, SampledWavefunction(s.grid, sign * s.values)) < 5 * 0.25**2


def test_fidelity_basics(codewords):
    p0 = codewords[0]
    assert math.isclose(fidelity(p0, p0), 1, rel_tol=1e-12)
    assert fidelity(np.array([1, 0]), np.array([0, 1])) == 0
    assert math.isclose(fidelity(p0, SampledWavefunction(p0.grid, 1j * p0.values)), 1, rel_tol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1), min_size=3, max_size=8).filter(
    lambda v: sum(abs(z) ** 2 for z in v) > 1e-3))
def test_fock_grid_roundtrip(vec):
    x = np.linspace(-15, 15, 3001)
    psi = fock_to_grid(vec, x)
    back = grid_to_fock(psi, len(vec) - 1)
    assert np.allclose(back, vec, atol=1e-10)
    assert math.isclose(fidelity(psi, np.array(vec)), 1, rel_tol=1e-10)


@pytest.fixture(scope="module")
def lll_pair():
    sol = lll_spectrum(ModelParams.from_lll_ratio(0.05), 300, 4, units="v0")
    d = delta_from_ratio(0.05)
    return sol, hadamard_pair(approx_grid_state(0, d), approx_grid_state(1, d))


def test_numerical_pair_matches_analytic(lll_pair):
    sol, (hp, hm) = lll_pair
    assert list(sol.labels[:2]) == [0, 2]
    assert fidelity(sol.vectors[:, 0], hp) > 0.99
    assert fidelity(sol.vectors[:, 1], hm) > 0.99


def test_analytic_pair_sector_support(lll_pair):
    # both combs are even, so only m = 0, 2 (mod 4) may appear; the Hadamard
    # weights then put most of the weight in the matching sector
    _, (hp, hm) = lll_pair
    m = np.arange(301)
    for psi, sec in ((hp, 0), (hm, 2)):
        c = grid_to_fock(psi, 300)
        assert np.sum(np.abs(c[m % 2 == 1]) ** 2) < 1e-8
        assert np.sum(np.abs(c[m % 4 == sec]) ** 2) > 0.99


def test_rayleigh_quasi_degeneracy(lll_pair):
    sol, (hp, hm) = lll_pair
    h = lll_confined_hamiltonian(ModelParams.from_lll_ratio(0.05), 300, units="v0").matrix
    r = []
    for psi in (hp, hm):
        c = grid_to_fock(psi, 300)
        r.append((np.vdot(c, h @ c) / np.vdot(c, c)).real)
    gap = sol.values[2] - sol.values[1]
    assert abs(r[0] - r[1]) < 3 * gap
    assert abs(r[0] - r[1]) < 3 * abs(sol.values[1] - sol.values[0]) + 1e-12
