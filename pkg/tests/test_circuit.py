import math

import numpy as np
import pytest

from gkpcircuit.core import (E_CHARGE, HBAR, PHI0_S, CircuitParams, FluxRatio, MissingInductance,
                             ModelParams, ValidationError)
from gkpcircuit.circuit import (
    DriveProtocol, ZeroCurrent, charge_offset_defect, circuit_model, codeword_fock, fig10_circuit,
    flux_biased_hamiltonian, flux_sweep, gate_time_z, noise_matrix_elements, noise_operators,
    simulate_z_gate, sweet_spot_derivatives,
)
from gkpcircuit.spectra import confined_hamiltonian, confined_spectrum, lll_spectrum

TRUNC = (16, 40)


@pytest.fixture(scope="module")
def circ():
    return fig10_circuit()


def test_fig10_model(circ):
    m = circuit_model(circ)
    assert m.flux.p == 1 and m.flux.q == 2
    assert math.isclose(m.v_over_hwc, 0.26 * math.pi / 2, rel_tol=1e-9)


def test_missing_inductance():
    c = CircuitParams(1e-15, None, 1e-24)
    with pytest.raises(MissingInductance):
        flux_biased_hamiltonian(c, 4, 8)


def test_zero_flux_matches_confined(circ):
    a = flux_biased_hamiltonian(circ, *TRUNC).matrix
    b = confined_hamiltonian(circuit_model(circ), *TRUNC).matrix
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("axis", ["phi1", "phi2", "phiG1", "phiG2"])
def test_flux_periodicity(circ, axis):
    res = flux_sweep(circ, axis, [0.3, 0.3 + 2 * math.pi], 4, *TRUNC)
    assert np.max(np.abs(res.energies[0] - res.energies[1])) < 1e-9


def test_flux_sweep_matches_direct_build(circ):
    phi = 0.7
    res = flux_sweep(circ, "phi1", [phi], 4, *TRUNC)
    h = flux_biased_hamiltonian(circ.with_fluxes((phi, 0, 0, 0)), *TRUNC).matrix
    assert np.allclose(res.energies[0], np.linalg.eigvalsh(h)[:4], atol=1e-10)


def test_flux_sweep_reflection_symmetry(circ):
    grid = np.array([0.4, 1.3, 2.2])
    a = flux_sweep(circ, "phi1", grid, 4, *TRUNC).energies
    b = flux_sweep(circ, "phi1", -grid, 4, *TRUNC).energies
    assert np.max(np.abs(a - b)) < 1e-10


def test_sweet_spots(circ):
    grid = np.linspace(0, 2 * math.pi, 9)
    res = flux_sweep(circ, "phi1", grid, 4, *TRUNC)
    ranges = np.ptp(res.energies, axis=0)
    assert np.all(ranges > 1e-4)
    d = sweet_spot_derivatives(circ, "phi1", levels=4, n_max=TRUNC[0], m_max=TRUNC[1])
    assert np.all(np.abs(d) < 1e-3 * ranges)
    # away from the sweet spots the slope is finite
    off = sweet_spot_derivatives(circ, "phi1", points=(math.pi / 2,), levels=4,
                                 n_max=TRUNC[0], m_max=TRUNC[1])
    assert np.max(np.abs(off)) > 1e-3 * ranges.max()


def test_h_minus_is_second_excited(circ):
    sol = confined_spectrum(circuit_model(circ), 24, 48, 4)
    assert list(sol.labels) == [0, 1, 2, 3]


def test_bad_axis(circ):
    with pytest.raises(ValidationError):
        flux_sweep(circ, "phi3", [0.0])


def test_noise_operators_hermitian():
    ops = noise_operators(FluxRatio(1, 2), 60)
    assert set(ops) == {"phi1", "phi2", "sin_phi1", "sin_phi2", "sin_half_phi1", "sin_half_phi2"}
    for o in ops.values():
        assert np.max(np.abs(o - o.conj().T)) < 1e-12


def test_noise_matrix_elements_vanish(circ):
    reps = noise_matrix_elements(circ, *TRUNC, with_controls=True)
    main = [r for r in reps if not r.label.startswith("control")]
    ctrl = [r for r in reps if r.label.startswith("control")]
    assert len(main) == 6 and all(r.vanishes for r in main)
    assert len(ctrl) == 2 and all(r.magnitude > 1e-2 for r in ctrl)


def test_noise_needs_zero_flux(circ):
    with pytest.raises(ValidationError):
        noise_matrix_elements(circ.with_fluxes((0.1, 0, 0, 0)), *TRUNC)


def test_charge_offset_shrinks_with_truncation(circ):
    m = circuit_model(circ)
    small = charge_offset_defect(m, 0.1, 12, 32)
    large = charge_offset_defect(m, 0.1, 24, 48)
    assert large < small and large < 1e-6


# ---- gate

def test_gate_time():
    t = gate_time_z(1e-9)
    assert math.isclose(t, HBAR * math.pi / (1e-9 * PHI0_S), rel_tol=1e-15)
    assert math.isclose(t, E_CHARGE / 1e-9, rel_tol=1e-12)
    assert abs(t - 160.2e-12) < 0.1e-12
    assert math.isclose(gate_time_z(2e-9), t / 2, rel_tol=1e-15)
    assert gate_time_z(1e6) < 1e-24
    for bad in (0.0, -1e-9):
        with pytest.raises(ZeroCurrent):
            gate_time_z(bad)


def test_protocol_validation():
    with pytest.raises(ValidationError):
        DriveProtocol([(1e-9, -1.0)])
    with pytest.raises(ValidationError):
        DriveProtocol([(1e-9, 1.0)], port=3)
    p = DriveProtocol.constant(1e-9, 2.0)
    assert math.isclose(p.charge, 2.0, rel_tol=1e-12)


def test_codewords_orthonormal_basis():
    a, b, code = codeword_fock(0.25, 200)
    assert np.allclose(code.conj().T @ code, np.eye(2), atol=1e-12)
    assert abs(np.vdot(a, b)) < 1e-4


@pytest.fixture(scope="module")
def one_gate():
    return simulate_z_gate(DriveProtocol.constant(1e-9), delta=0.25, m_max=300)


def test_z_gate_fidelity(one_gate):
    assert one_gate.fidelity > 0.95
    assert one_gate.logical_fidelity > 0.99
    assert max(one_gate.norm_defects) < 1e-9
    assert math.isclose(one_gate.n_gates, 1.0, rel_tol=1e-12)


def test_z_gate_independent_of_current_split():
    # two half-gates at twice the current equal one gate
    t = gate_time_z(1e-9)
    r = simulate_z_gate(DriveProtocol([(2e-9, t / 4), (2e-9, t / 4)]), m_max=200)
    ref = simulate_z_gate(DriveProtocol([(2e-9, t / 2)]), m_max=200)
    assert abs(np.vdot(r.final_state, ref.final_state)) ** 2 > 1 - 1e-12


def test_port_two_drives_x_logical():
    r = simulate_z_gate(DriveProtocol.constant(1e-9, port=2), m_max=300)
    assert r.fidelity > 0.95


def test_zero_current_eigenstate_is_stationary():
    ideal = lll_spectrum(ModelParams(FluxRatio(1, 2), 1.0, 0.0), 200, 1, units="v0").vectors[:, 0]
    r = simulate_z_gate(DriveProtocol([(0.0, 1e-9)]), m_max=200, initial=ideal, confined=False)
    assert r.fidelity > 1 - 1e-6
    assert r.raw_return > 1 - 1e-6


def test_bad_initial_vector():
    with pytest.raises(ValidationError):
        simulate_z_gate(DriveProtocol.constant(1e-9), m_max=50, initial=np.ones(7))
