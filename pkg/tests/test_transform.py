import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.ndimage import maximum_filter

from gkpcircuit.core import ModelParams, ValidationError
from gkpcircuit.operators import hermite_functions
from gkpcircuit.spectra import lll_spectrum
from gkpcircuit.states import SQRT_PI, SampledWavefunction, approx_grid_state, fock_to_grid, hadamard_pair
from gkpcircuit.transform import (
    KERNEL_NORM, BadTau, GridTooCoarse, NonSquareGrid, ThetaSpec, Wavefunction2D,
    confined_wavefunction_2d, count_zeros, default_grid_2d, hadamard_2d, husimi, kernel_k0,
    lift_to_2d, lll_residual, lower_to_1d, rotation_fourier_check, shape_defect,
    shift_relation_defect, theta, zak_wavefunction_2d,
)

X_WIDE = np.linspace(-20, 20, 4001)


def _vacuum():
    return SampledWavefunction(X_WIDE, np.pi**-0.25 * np.exp(-X_WIDE**2 / 2))


def _central_peaks(Psi, count=9):
    a = np.abs(Psi.values) ** 2
    mx = (a == maximum_filter(a, size=9)) & (a > 1e-3 * a.max())
    pk = np.argwhere(mx)
    r = np.hypot(Psi.x1[pk[:, 0]], Psi.x2[pk[:, 1]])
    return pk, pk[np.argsort(r)[:count]]


# ---- kernel

def test_kernel_at_origin():
    X = np.linspace(-3, 3, 61)
    k = kernel_k0(0.0, 0.0, X)
    assert np.allclose(k.imag, 0)
    assert np.argmax(k.real) == 30
    assert math.isclose(k.real[30], KERNEL_NORM)


def test_kernel_lll_condition():
    rng = np.random.default_rng(0)
    x1, x2, X = rng.uniform(-3, 3, (3, 200))
    assert lll_residual(x1, x2, X) < 1e-5


def test_kernel_resolution_of_identity():
    # int K0*(x; X) K0(x; X') d^2x = delta(X - X'): checked on Hermite functions
    g = np.linspace(-12, 12, 241)
    X = np.linspace(-12, 12, 1201)
    h = hermite_functions(X, 4)
    lifts = [lift_to_2d(SampledWavefunction(X, row), g, g) for row in h]
    gram = np.array([[np.trapezoid(np.trapezoid(np.conj(a.values) * b.values, g, axis=1), g)
                      for b in lifts] for a in lifts])
    assert np.max(np.abs(gram - np.eye(5))) < 1e-6


# ---- lift

def test_lift_vacuum_is_centred_gaussian():
    L = lift_to_2d(_vacuum())
    x1, x2 = L.mesh()
    expect = KERNEL_NORM * np.pi**0.25 * np.exp(-(x1**2 + x2**2) / 4)
    assert np.max(np.abs(np.abs(L.values) - expect)) < 1e-12
    assert rotation_fourier_check(L, 0) < 1e-8


def test_lift_unitarity_on_test_set():
    X = np.linspace(-24, 24, 4096)
    states = [SampledWavefunction(X, r) for r in hermite_functions(X, 3)]
    states.append(approx_grid_state(0, 0.4))
    g = np.linspace(-18, 18, 301)
    lifts = [lift_to_2d(s, g, g) for s in states]
    for i, a in enumerate(states):
        for j, b in enumerate(states):
            ov2 = np.trapezoid(np.trapezoid(np.conj(lifts[i].values) * lifts[j].values, g, axis=1), g)
            assert abs(ov2 - a.inner(b)) < 0.01


def test_lift_too_coarse():
    g = np.linspace(-2, 2, 21)
    with pytest.raises(GridTooCoarse):
        lift_to_2d(approx_grid_state(0, 0.25), g, g)


def test_lift_lower_roundtrip():
    g = np.linspace(-14, 14, 281)
    psi = SampledWavefunction(X_WIDE, hermite_functions(X_WIDE, 2)[2])
    back = lower_to_1d(lift_to_2d(psi, g, g), X_WIDE[::20])
    assert np.max(np.abs(back.values - psi.values[::20])) < 1e-8


def test_codeword_lift_peak_lattice():
    L = lift_to_2d(approx_grid_state(0, 0.25), norm_tol=None)
    _, sel = _central_peaks(L)
    pts = np.column_stack([L.x1[sel[:, 0]], L.x2[sel[:, 1]]])
    # peaks at (2 sqrt(pi) n, sqrt(pi) m)
    dx = L.x1[1] - L.x1[0]
    assert np.all(np.abs(pts[:, 0] / (2 * SQRT_PI) - np.round(pts[:, 0] / (2 * SQRT_PI))) * 2 * SQRT_PI <= dx)
    assert np.all(np.abs(pts[:, 1] / SQRT_PI - np.round(pts[:, 1] / SQRT_PI)) * SQRT_PI <= dx)


# ---- theta

def test_theta_examples():
    s = ThetaSpec(0, 0, 2j)
    assert abs(theta(s, 0) - sum(math.exp(-2 * math.pi * n * n) for n in range(-6, 7))) < 1e-15
    assert abs(theta(s, 0) - 1.00373) < 1e-5
    with pytest.raises(BadTau):
        ThetaSpec(0, 0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-2, 2), st.floats(-1, 1), st.floats(0.5, 3))
def test_theta_quasi_periodicity(a, b, zr, zi, t):
    s = ThetaSpec(a, b, 1j * t + 0.3)
    z = complex(zr, zi)
    lhs = theta(s, z + 1)
    rhs = np.exp(2j * np.pi * a) * theta(s, z)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_theta_parity_of_half_characteristic():
    # [1/2; 0]: n -> -n-1 maps the sum onto itself at -z, so it is even
    s = ThetaSpec(0.5, 0, 2j)
    z = np.array([0.1 + 0.05j, 0.37 - 0.2j, 0.8])
    assert np.allclose(theta(s, -z), theta(s, z), atol=1e-14)
    odd = ThetaSpec(0.5, 0.5, 2j)
    assert np.allclose(theta(odd, -z), -theta(odd, z), atol=1e-14)


# ---- Zak states

def test_zak_periodicity():
    g = np.linspace(-2 * SQRT_PI, 2 * SQRT_PI, 81)
    for k1, k2 in [(0, 0), (0.4, 0.7), (1.1, -0.3)]:
        base = np.abs(zak_wavefunction_2d(k1, k2, g, g).values)
        s1 = np.abs(zak_wavefunction_2d(k1, k2, g + 2 * SQRT_PI, g).values)
        s2 = np.abs(zak_wavefunction_2d(k1, k2, g, g + SQRT_PI).values)
        assert np.max(np.abs(s1 - base)) / base.max() < 1e-10
        assert np.max(np.abs(s2 - base)) / base.max() < 1e-10


def test_zak_matches_comb_sum():
    g = np.linspace(-2 * SQRT_PI, 2 * SQRT_PI, 41)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    Xn = 2 * SQRT_PI * np.arange(-40, 41)
    direct = kernel_k0(x1[..., None], x2[..., None], Xn).sum(axis=-1)
    z = zak_wavefunction_2d(0, 0, g, g).values
    assert np.max(np.abs(z - direct)) / np.max(np.abs(direct)) < 1e-12


def test_zak_zero_lattice():
    # unit cell 2 sqrt(pi) x sqrt(pi) holds one flux quantum, so one zero
    h = 4 * SQRT_PI
    g = np.linspace(-h - 0.3, h + 0.3, 300)
    Z = zak_wavefunction_2d(0.3, 0.2, g, g)
    n = count_zeros(Z, (-h, h, -h, h))
    assert n == round((2 * h) ** 2 / (2 * SQRT_PI * SQRT_PI))


# ---- closed form with finite Delta

@pytest.mark.parametrize("d", [0.2, 0.25, 0.3])
@pytest.mark.parametrize("j", [0, 1])
def test_closed_form_vs_quadrature(d, j):
    g1, g2 = default_grid_2d()
    quad = lift_to_2d(approx_grid_state(j, d, normalize=False), g1, g2, norm_tol=None)
    closed = confined_wavefunction_2d(j, d, g1, g2)
    _, sel = _central_peaks(closed)
    rel = max(abs(quad.values[i, k] - closed.values[i, k]) / abs(closed.values[i, k]) for i, k in sel)
    assert rel < 1e-4


def test_closed_form_small_delta_limit():
    g = np.linspace(-3 * SQRT_PI, 3 * SQRT_PI, 121)
    a = confined_wavefunction_2d(0, 1e-3, g, g).values
    b = zak_wavefunction_2d(0, 0, g, g).values
    assert shape_defect(a, b)[0] < 1e-2
    a1 = confined_wavefunction_2d(1, 1e-3, g, g).values
    b1 = zak_wavefunction_2d(0, SQRT_PI, g, g).values
    assert shape_defect(a1, b1)[0] < 1e-2


@pytest.mark.parametrize("d", [0.2, 0.25, 0.3])
def test_closed_form_envelope_scale(d):
    C = confined_wavefunction_2d(0, d)
    pk, _ = _central_peaks(C)
    a = np.abs(C.values[pk[:, 0], pk[:, 1]]) ** 2
    r2 = C.x1[pk[:, 0]] ** 2 + C.x2[pk[:, 1]] ** 2
    scale = -1 / np.polyfit(r2, np.log(a), 1)[0]
    assert abs(scale * d**2 - 1) < 0.2


def test_confined_validation():
    with pytest.raises(ValidationError):
        confined_wavefunction_2d(2, 0.25)
    with pytest.raises(ValidationError):
        confined_wavefunction_2d(0, 0.6)


# ---- rotation and shift identities

@pytest.fixture(scope="module")
def numerical_pair_2d():
    sol = lll_spectrum(ModelParams.from_lll_ratio(0.05), 400, 2, units="v0")
    X = np.linspace(-40, 40, 8001)
    return [lift_to_2d(fock_to_grid(sol.vectors[:, k], X), norm_tol=None) for k in (0, 1)]


def test_rotation_identity_for_eigenstates(numerical_pair_2d):
    hp, hm = numerical_pair_2d
    assert rotation_fourier_check(hp, 0) < 1e-3
    assert rotation_fourier_check(hm, 2) < 1e-3
    assert rotation_fourier_check(hp, 2) > 0.5


def test_rotation_identity_for_fock_states():
    g = np.linspace(-10, 10, 201)
    for n in range(4):
        L = lift_to_2d(SampledWavefunction(X_WIDE, hermite_functions(X_WIDE, n)[n]), g, g)
        assert rotation_fourier_check(L, n) < 1e-8


def test_rotation_needs_square_grid():
    W = Wavefunction2D(np.linspace(-1, 1, 5), np.linspace(-1, 2, 5), np.ones((5, 5)))
    with pytest.raises(NonSquareGrid):
        rotation_fourier_check(W, 0)


def test_shift_relation():
    d, c = shift_relation_defect()
    assert d < 1e-3
    assert abs(c - 1j) < 1e-10
    # the constant is a pure phase; any other global phase fails the pointwise check
    assert shift_relation_defect(constant_phase=1.0)[0] > 1.0


def test_hadamard_2d_matches_lift():
    g = np.linspace(-3 * SQRT_PI, 3 * SQRT_PI, 91)
    p0, p1 = approx_grid_state(0, 0.25), approx_grid_state(1, 0.25)
    l0, l1 = (lift_to_2d(p, g, g, norm_tol=None) for p in (p0, p1))
    a, _ = hadamard_2d(l0, l1)
    hp, _ = hadamard_pair(p0.values, p1.values)
    b = lift_to_2d(SampledWavefunction(p0.grid, hp), g, g, norm_tol=None)
    assert np.max(np.abs(a.values - b.values)) < 1e-12


# ---- Husimi

def test_husimi_vacuum_and_norm():
    g = np.linspace(-12, 12, 241)
    q = husimi(_vacuum(), g, g)
    assert np.all(q >= 0)
    assert abs(np.trapezoid(np.trapezoid(q, g, axis=1), g) - 1) < 0.01
    assert np.unravel_index(np.argmax(q), q.shape) == (120, 120)


def test_husimi_codeword_norm_on_wide_grid():
    g = np.linspace(-24, 24, 401)
    q = husimi(approx_grid_state(0, 0.25), g, g)
    assert abs(np.trapezoid(np.trapezoid(q, g, axis=1), g) - 1) < 0.01
