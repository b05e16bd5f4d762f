"""Flux-biased circuit Hamiltonians, noise matrix elements and the current-driven logical gate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (E_CHARGE, HBAR, PHI0_S, PLANCK, CircuitParams, ConvergenceError,
                   FluxRatio, GYRATOR_G, ModelParams, ValidationError, map_circuit_to_model,
                   warn_truncation)
from .operators import Operator, displacement_matrix, hermitian_function, quadrature_matrices
from .spectra import (SweepResult, _map, confined_hamiltonian, confined_spectrum,
                      eigensolve, lll_confined_hamiltonian)
from .states import approx_grid_state, grid_to_fock, GridStateParams

__all__ = [
    "ZeroCurrent", "DriveProtocol", "NoiseReport", "ZGateResult", "FLUX_AXES",
    "fig10_circuit", "circuit_model", "flux_biased_hamiltonian", "flux_sweep",
    "sweet_spot_derivatives", "noise_operators", "noise_matrix_elements",
    "charge_offset_defect", "gate_time_z", "simulate_z_gate", "codeword_fock",
    "CIRCUIT_TRUNCATION",
]

FLUX_AXES = ("phi1", "phi2", "phiG1", "phiG2")
# truncation used for circuit sweeps; the spectrum is converged to ~1e-8 here
CIRCUIT_TRUNCATION = (24, 48)
NOISE_THRESHOLD = 1e-8


class ZeroCurrent(ValidationError):
    pass


def fig10_circuit(ej_over_ec: float = 0.26, el_over_ec: float = 5e-3, ec_ghz: float = 13.5,
                  ext_fluxes=(0.0, 0.0, 0.0, 0.0)) -> CircuitParams:
    """Circuit at given E_J/E_C and E_L/E_C with the gyrator at p/q = 1/2."""
    return CircuitParams.from_energies(ec_ghz, ej_over_ec * ec_ghz, el_over_ec * ec_ghz,
                                       GYRATOR_G, ext_fluxes)


def circuit_model(circ: CircuitParams) -> ModelParams:
    return map_circuit_to_model(circ, require_inductance=True)[0]


def _phases(ext):
    p1, p2, g1, g2 = ext
    # Josephson loop flux enters as -phi_i, gyrator loop flux as +phi_Gi
    return (p1 - g1, p2 - g2)


def flux_biased_hamiltonian(circ: CircuitParams, n_max: int | None = None,
                            m_max: int | None = None) -> Operator:
    """Two-mode circuit Hamiltonian (units hbar w_c) including the four external fluxes."""
    n_max, m_max = _trunc(n_max, m_max)
    model = circuit_model(circ)
    return confined_hamiltonian(model, n_max, m_max, _phases(circ.ext_fluxes))


def _trunc(n_max, m_max):
    return (CIRCUIT_TRUNCATION[0] if n_max is None else n_max,
            CIRCUIT_TRUNCATION[1] if m_max is None else m_max)


def _axis_index(axis):
    if axis not in FLUX_AXES:
        raise ValidationError(f"flux axis must be one of {FLUX_AXES}, got {axis!r}")
    return FLUX_AXES.index(axis)


def _flux_family(circ, axis, n_max, m_max):
    """H(phi) = H0 + cos(phi) A + sin(phi) B along one flux axis."""
    i = _axis_index(axis)
    ext = list(circ.ext_fluxes)
    mats = []
    for val in (0.0, math.pi / 2, math.pi):
        ext[i] = val
        mats.append(flux_biased_hamiltonian(circ.with_fluxes(ext), n_max, m_max).matrix)
    h0p, hq, hpi = mats
    h0 = 0.5 * (h0p + hpi)
    a = 0.5 * (h0p - hpi)
    b = hq - h0
    return h0, a, b


def flux_sweep(circ: CircuitParams, axis: str = "phi1", grid=None, levels: int = 4,
               n_max: int | None = None, m_max: int | None = None) -> SweepResult:
    """Lowest ``levels`` energies (units hbar w_c) versus one external flux.

    The other fluxes keep the values stored in ``circ``.
    """
    n_max, m_max = _trunc(n_max, m_max)
    grid = np.linspace(0, 2 * np.pi, 41) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        from .spectra import EmptyGrid
        raise EmptyGrid("empty flux grid")
    h0, a, b = _flux_family(circ, axis, n_max, m_max)

    def one(phi):
        return eigensolve(h0 + math.cos(phi) * a + math.sin(phi) * b, levels).values

    energies = np.array(_map(one, grid))
    return SweepResult(axis, grid, energies,
                       metadata={"n_max": n_max, "m_max": m_max, "levels": levels,
                                 "ext_fluxes": list(circ.ext_fluxes)})


def sweet_spot_derivatives(circ: CircuitParams, axis: str = "phi1", points=(0.0, math.pi, 2 * math.pi),
                           levels: int = 4, step: float = 1e-3, n_max: int | None = None,
                           m_max: int | None = None):
    """Central-difference dE_i/dphi at ``points`` (rows) for each level (columns)."""
    n_max, m_max = _trunc(n_max, m_max)
    h0, a, b = _flux_family(circ, axis, n_max, m_max)

    def e(phi):
        return eigensolve(h0 + math.cos(phi) * a + math.sin(phi) * b, levels).values

    return np.array([(e(p + step) - e(p - step)) / (2 * step) for p in points])


# --------------------------------------------------------------------------
# noise

@dataclass
class NoiseReport:
    label: str
    magnitude: float
    threshold: float = NOISE_THRESHOLD

    @property
    def vanishes(self) -> bool:
        return self.magnitude < self.threshold


def noise_operators(flux: FluxRatio, m_max: int) -> dict:
    """LLL-projected noise operators on the guiding-center Fock space.

    With x = R + rho, projecting exp(i k rho) onto the cyclotron ground
    state gives the form factor exp(-(k l_B)^2 / 4).
    """
    x, p = quadrature_matrices(m_max)
    kl = math.sqrt(2 * math.pi * flux.q / flux.p)   # k l_B
    f1 = math.exp(-kl**2 / 4)
    fh = math.exp(-kl**2 / 16)
    ops = {}
    for name, q in (("1", x), ("2", p)):
        ops[f"phi{name}"] = kl * q
        ops[f"sin_phi{name}"] = f1 * hermitian_function(q, lambda w: np.sin(kl * w))
        ops[f"sin_half_phi{name}"] = fh * hermitian_function(q, lambda w: np.sin(kl * w / 2))
    return ops


def _sector_ground(model, n_max, m_max, sector):
    from .spectra import confined_sector_blocks
    blocks, _ = confined_sector_blocks(model, n_max, m_max, sectors=[sector])
    h, flat = blocks[sector]
    sol = eigensolve(h, 1)
    vec = np.zeros((n_max + 1) * (m_max + 1), dtype=complex)
    vec[flat] = sol.vectors[:, 0]
    return sol.values[0], vec


def noise_matrix_elements(circ: CircuitParams, n_max: int | None = None, m_max: int | None = None,
                          with_controls: bool = False):
    """|<psi_H-| P O P |psi_H+>| for the six flux and quasiparticle noise operators.

    psi_H+ and psi_H- are the lowest states of the rotation sectors 0 and 2
    (the two Fourier-even codeword combinations); P projects on the lowest
    Landau level.  With ``with_controls`` two non-vanishing reference
    elements are appended: <H+|cos(k X)|H+> and <odd|phi1|H+> where odd is
    the lowest sector-1 state.
    """
    if any(circ.ext_fluxes):
        raise ValidationError("noise matrix elements are defined at zero external flux")
    n_max, m_max = _trunc(n_max, m_max)
    model = circuit_model(circ)
    _, hp = _sector_ground(model, n_max, m_max, 0)
    _, hm = _sector_ground(model, n_max, m_max, 2)
    lp = hp.reshape(n_max + 1, m_max + 1)[0]
    lm = hm.reshape(n_max + 1, m_max + 1)[0]
    ops = noise_operators(model.flux, m_max)
    reports = [NoiseReport(k, float(abs(np.vdot(lm, o @ lp)))) for k, o in ops.items()]
    if with_controls:
        x, _ = quadrature_matrices(m_max)
        kl = math.sqrt(2 * math.pi * model.flux.q / model.flux.p)
        cos_x = hermitian_function(x, lambda w: np.cos(kl * w))
        _, odd = _sector_ground(model, n_max, m_max, 1)
        lo = odd.reshape(n_max + 1, m_max + 1)[0]
        reports.append(NoiseReport("control:cos_phi1(H+,H+)", float(abs(np.vdot(lp, cos_x @ lp)))))
        reports.append(NoiseReport("control:phi1(odd,H+)", float(abs(np.vdot(lo, ops["phi1"] @ lp)))))
    return reports


def charge_offset_defect(model: ModelParams, offset: complex, n_max: int | None = None,
                         m_max: int | None = None, count: int = 6) -> float:
    """Largest shift of the lowest levels caused by a static charge offset on the cyclotron mode."""
    n_max, m_max = _trunc(n_max, m_max)
    e0 = eigensolve(confined_hamiltonian(model, n_max, m_max), count).values
    e1 = eigensolve(confined_hamiltonian(model, n_max, m_max, charge_offset=offset), count).values
    return float(np.max(np.abs(e1 - e0)))


# --------------------------------------------------------------------------
# logical gate

def gate_time_z(current: float) -> float:
    """hbar pi / (I Phi0s): time for one logical Z at constant current (seconds)."""
    if not np.isfinite(current) or current <= 0:
        raise ZeroCurrent("the drive current must be positive")
    return HBAR * math.pi / (current * PHI0_S)


@dataclass
class DriveProtocol:
    """Piecewise-constant current (amperes) with segment durations (seconds) on port 1 or 2."""

    segments: list
    port: int = 1

    def __post_init__(self):
        if self.port not in (1, 2):
            raise ValidationError("port must be 1 or 2")
        self.segments = [(float(i), float(t)) for i, t in self.segments]
        if not self.segments:
            raise ValidationError("protocol needs at least one segment")
        for i, t in self.segments:
            if not (t > 0 and np.isfinite(t)) or not np.isfinite(i):
                raise ValidationError("segment durations must be positive and finite")

    @classmethod
    def constant(cls, current: float, duration_tz: float = 1.0, port: int = 1) -> "DriveProtocol":
        """Constant ``current`` for ``duration_tz`` gate times."""
        return cls([(current, duration_tz * gate_time_z(current))], port)

    @property
    def charge(self) -> float:
        """Transferred charge in units of e, i.e. the number of logical gates."""
        return sum(i * t for i, t in self.segments) / E_CHARGE


@dataclass
class ZGateResult:
    final_state: np.ndarray
    fidelity: float
    logical_fidelity: float
    raw_return: float
    leakage: float
    norm_defects: list = field(default_factory=list)
    n_gates: float = 0.0


V0_REFERENCE = 3.5e9 * PLANCK * math.exp(-math.pi)


def codeword_fock(delta: float, m_max: int):
    """Fock amplitudes of the two approximate codewords (orthonormalized)."""
    x = np.linspace(-32, 32, 16001)
    cs = [grid_to_fock(approx_grid_state(j, GridStateParams(delta), x), m_max) for j in (0, 1)]
    basis = np.array(cs).T
    # symmetric orthonormalization keeps both codewords on equal footing
    u, _, vh = np.linalg.svd(basis, full_matrices=False)
    return cs[0] / np.linalg.norm(cs[0]), cs[1] / np.linalg.norm(cs[1]), u @ vh


def simulate_z_gate(protocol: DriveProtocol, delta: float = 0.25, v0_energy: float = V0_REFERENCE,
                    m_max: int = 300, initial=(1.0, 0.0), confined: bool = True) -> ZGateResult:
    """Evolve a codeword superposition under H_GKP - (I Phi0s / sqrt(pi)) X inside the LLL.

    H_GKP is the LLL Hamiltonian in units of V0 (``v0_energy`` joules) with
    confinement 4 pi Delta^4, or without it when ``confined`` is False.
    ``initial`` is either (c0, c1) for the approximate codewords or a Fock
    vector.  Port 2 drives P instead of X.

    fidelity is |<U psi_in | target>|^2 with target = exp(i n sqrt(pi) Q) psi_in,
    n the transferred charge in units of e and Q = X (port 1) or P (port 2).
    logical_fidelity compares the code-space projection with the logical
    Pauli action (NaN when n is not an integer).
    """
    ratio = 4 * math.pi * delta**4 if confined else 0.0
    model = ModelParams(FluxRatio(1, 2), 1.0, math.sqrt(ratio * math.exp(-math.pi)))
    h0 = lll_confined_hamiltonian(model, m_max, units="v0").matrix
    x, p = quadrature_matrices(m_max)
    q = x if protocol.port == 1 else p
    psi0, psi1, code = codeword_fock(delta, m_max)
    init = np.asarray(initial, dtype=complex)
    if init.shape == (2,):
        c = init / np.linalg.norm(init)
        psi_in = c[0] * psi0 + c[1] * psi1
    else:
        if init.shape != (m_max + 1,):
            raise ValidationError("initial must be (c0, c1) or a Fock vector of length m_max+1")
        c = None
        psi_in = init
    psi_in = psi_in / np.linalg.norm(psi_in)

    psi = psi_in.copy()
    defects = []
    for current, dur in protocol.segments:
        f = current * PHI0_S / (math.sqrt(math.pi) * v0_energy)
        tau = v0_energy * dur / HBAR
        w, v = np.linalg.eigh(h0 - f * q)
        psi = v @ (np.exp(-1j * w * tau) * (v.conj().T @ psi))
        nd = abs(np.linalg.norm(psi) - 1.0)
        defects.append(float(nd))
        if nd > 1e-6:
            warn_truncation(f"norm changed by {nd:.1e} during a drive segment")

    n = protocol.charge
    target = hermitian_function(q, lambda w: np.exp(1j * n * math.sqrt(math.pi) * w)) @ psi_in
    fid = abs(np.vdot(target, psi)) ** 2
    raw = abs(np.vdot(psi_in, psi)) ** 2
    proj = code.conj().T @ psi
    leak = 1.0 - float(np.vdot(proj, proj).real)
    logical = float("nan")
    n_int = round(n)
    if c is not None and abs(n - n_int) < 1e-6:
        cin = code.conj().T @ psi_in
        cin = cin / np.linalg.norm(cin)
        pauli = np.diag([1.0, -1.0]) if protocol.port == 1 else np.array([[0.0, 1.0], [1.0, 0.0]])
        expect = np.linalg.matrix_power(pauli, n_int % 2) @ cin
        logical = float(abs(np.vdot(expect, proj)) ** 2 / np.vdot(proj, proj).real)
    return ZGateResult(psi, float(fid), logical, float(raw), leak, defects, float(n))
