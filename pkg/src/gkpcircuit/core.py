"""Parameter types, physical constants and the circuit-to-model mapping.

Energies of the dimensionless model are measured in units of the cyclotron
energy hbar*omega_c and lengths in units of the magnetic length l_B.  The
flux per unit cell of the cosine lattice is the rational number p/q.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np
from scipy import constants as _sc

__all__ = [
    "E_CHARGE", "PLANCK", "HBAR", "PHI0", "PHI0_S", "G0", "GYRATOR_G",
    "GKPError", "ValidationError", "ConvergenceError", "TruncationWarning",
    "NonRationalFlux", "MissingInductance", "ZeroConfinement",
    "FluxRatio", "ModelParams", "CircuitParams", "DerivedQuantities",
    "map_circuit_to_model", "v0", "squeeze_delta", "delta_from_ratio",
    "confinement_ratio", "table_ii_circuit",
]

E_CHARGE = _sc.e
PLANCK = _sc.h
HBAR = _sc.hbar
PHI0 = PLANCK / E_CHARGE          # single-electron flux quantum h/e
PHI0_S = PLANCK / (2 * E_CHARGE)  # superconducting flux quantum h/2e
G0 = 4 * E_CHARGE**2 / PLANCK     # conductance at which p/q = 1
GYRATOR_G = 2 * E_CHARGE**2 / PLANCK


# --------------------------------------------------------------------------
# errors and warnings

class GKPError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GKPError, ValueError):
    """Invalid input; mapped to exit code 2 on the command line."""


class ConvergenceError(GKPError, RuntimeError):
    """A numerical quality check failed; mapped to exit code 3."""


class TruncationWarning(UserWarning):
    """Emitted when a truncated operator deviates noticeably from its ideal."""


class NonRationalFlux(ValidationError):
    pass


class MissingInductance(ValidationError):
    pass


class ZeroConfinement(ValidationError):
    pass


# --------------------------------------------------------------------------
# model parameters

@dataclass(frozen=True)
class FluxRatio:
    """Coprime flux ratio p/q (flux per unit cell over h/e)."""

    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise ValidationError("p and q must be integers")
        if self.p <= 0 or self.q <= 0:
            raise ValidationError(f"p and q must be positive, got {self.p}/{self.q}")
        if math.gcd(int(self.p), int(self.q)) != 1:
            raise ValidationError(f"{self.p}/{self.q} is not in lowest terms")

    @classmethod
    def from_float(cls, value: float, max_denominator: int = 64, tol: float = 1e-9) -> "FluxRatio":
        """Rational approximation of ``value`` by continued fractions.

        Raises NonRationalFlux when no fraction with denominator at most
        ``max_denominator`` lies within ``tol`` of ``value``.
        """
        if not np.isfinite(value) or value <= 0:
            raise NonRationalFlux(f"flux ratio must be positive and finite, got {value}")
        frac = Fraction(value).limit_denominator(max_denominator)
        if abs(float(frac) - value) > tol:
            raise NonRationalFlux(
                f"p/q={value!r} has no rational approximant with q<={max_denominator} within {tol}")
        return cls(frac.numerator, frac.denominator)

    @property
    def value(self) -> float:
        return self.p / self.q

    @property
    def lattice_constant(self) -> float:
        """Period L0 of the cosine potential in units of l_B."""
        return math.sqrt(2 * math.pi * self.p / self.q)

    @property
    def displacement(self) -> float:
        """Magnitude of the ladder displacement generated by exp(i k x)."""
        return math.sqrt(math.pi * self.q / self.p)

    def __str__(self):
        return f"{self.p}/{self.q}"


GKP_FLUX = FluxRatio(1, 2)


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model: flux ratio, V/hbar w_c and hbar w_0/V.

    ``hw0_over_v`` may be zero for the unconfined crystal.
    """

    flux: FluxRatio = GKP_FLUX
    v_over_hwc: float = 0.25
    hw0_over_v: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.v_over_hwc) or self.v_over_hwc < 0:
            raise ValidationError("v_over_hwc must be finite and non-negative")
        if not np.isfinite(self.hw0_over_v) or self.hw0_over_v < 0:
            raise ValidationError("hw0_over_v must be finite and non-negative")

    @property
    def kappa(self) -> float:
        """Confinement hbar w0^2/w_c in units of hbar w_c."""
        return (self.hw0_over_v * self.v_over_hwc) ** 2

    @property
    def v0(self) -> float:
        return v0(self)

    @classmethod
    def from_lll_ratio(cls, ratio: float, v_over_hwc: float = 0.25,
                       flux: FluxRatio = GKP_FLUX) -> "ModelParams":
        """Model with a prescribed hbar w0^2/(w_c V0)."""
        if ratio < 0:
            raise ValidationError("ratio must be non-negative")
        v0_ = v_over_hwc * math.exp(-math.pi * flux.q / (2 * flux.p))
        kappa = ratio * v0_
        return cls(flux, v_over_hwc, math.sqrt(kappa) / v_over_hwc if v_over_hwc else 0.0)


def v0(model: ModelParams) -> float:
    """Lowest-Landau-level potential depth V0 = V exp(-pi q / 2p), units hbar w_c."""
    f = model.flux
    return model.v_over_hwc * math.exp(-math.pi * f.q / (2 * f.p))


def confinement_ratio(model: ModelParams) -> float:
    """hbar w0^2 / (w_c V0), the confinement strength seen inside the LLL."""
    return model.kappa / v0(model)


def delta_from_ratio(ratio: float) -> float:
    """Squeezing Delta = (hbar w0^2 / 4 pi w_c V0)^(1/4)."""
    if ratio <= 0:
        raise ZeroConfinement("the confinement ratio must be positive")
    return (ratio / (4 * math.pi)) ** 0.25


def squeeze_delta(model: ModelParams) -> float:
    if model.kappa <= 0 or model.v_over_hwc <= 0:
        raise ZeroConfinement("Delta is undefined without confinement")
    return delta_from_ratio(confinement_ratio(model))


# --------------------------------------------------------------------------
# circuit parameters

@dataclass(frozen=True)
class CircuitParams:
    """Physical circuit in SI units.

    ``ext_fluxes`` holds the reduced external fluxes
    (phi1_ext, phi2_ext, phiG1_ext, phiG2_ext) in radians.
    """

    capacitance: float
    inductance: float | None
    josephson_energy: float
    gyrator_conductance: float = GYRATOR_G
    ext_fluxes: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("capacitance", "josephson_energy", "gyrator_conductance"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ValidationError(f"{name} must be positive, got {val}")
        if self.inductance is not None and (not np.isfinite(self.inductance) or self.inductance <= 0):
            raise ValidationError("inductance must be positive or None")
        if len(self.ext_fluxes) != 4:
            raise ValidationError("ext_fluxes needs four entries")
        object.__setattr__(self, "ext_fluxes", tuple(float(x) for x in self.ext_fluxes))

    @classmethod
    def from_energies(cls, ec_ghz: float, ej_ghz: float, el_ghz: float | None,
                      gyrator_conductance: float = GYRATOR_G, ext_fluxes=(0.0, 0.0, 0.0, 0.0)):
        """Build from E_C, E_J, E_L given as frequencies E/h in GHz."""
        ec = ec_ghz * 1e9 * PLANCK
        c = E_CHARGE**2 / (2 * ec)
        ind = None
        if el_ghz is not None:
            el = el_ghz * 1e9 * PLANCK
            ind = PHI0_S**2 / (4 * math.pi**2 * el)
        return cls(c, ind, ej_ghz * 1e9 * PLANCK, gyrator_conductance, tuple(ext_fluxes))

    def with_fluxes(self, ext_fluxes) -> "CircuitParams":
        return CircuitParams(self.capacitance, self.inductance, self.josephson_energy,
                             self.gyrator_conductance, tuple(ext_fluxes))


def table_ii_circuit() -> CircuitParams:
    """Reference device: C = 1.434 fF, L = 2.3 uH, E_J/h = 3.5 GHz, G = 2e^2/h."""
    return CircuitParams(1.434e-15, 2.3e-6, 3.5e9 * PLANCK, GYRATOR_G)


@dataclass(frozen=True)
class DerivedQuantities:
    """Scales derived from a circuit.  Energies in joules, frequencies in Hz."""

    flux: FluxRatio
    e_c: float
    e_l: float | None
    e_j: float
    omega_c: float
    omega_lc: float | None
    hbar_omega_c: float
    v_over_hwc: float
    hw0_over_v: float
    v0: float
    delta: float | None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["flux"] = str(self.flux)
        return d

    def in_ghz(self) -> dict:
        """Energies and angular frequencies expressed as GHz."""
        to = lambda e: None if e is None else e / PLANCK / 1e9
        return {
            "E_C": to(self.e_c), "E_L": to(self.e_l), "E_J": to(self.e_j),
            "omega_c/2pi": self.omega_c / (2 * math.pi) / 1e9,
            "omega_LC/2pi": None if self.omega_lc is None else self.omega_lc / (2 * math.pi) / 1e9,
            "V0": to(self.v0),
        }


def map_circuit_to_model(circuit: CircuitParams, max_denominator: int = 64,
                         tol: float = 1e-9, require_inductance: bool = False):
    """Map a circuit to the dimensionless model.

    Returns ``(model, derived)``.  Without an inductance the model is the
    unconfined crystal (hw0_over_v = 0) unless ``require_inductance`` is set,
    in which case MissingInductance is raised.
    """
    flux = FluxRatio.from_float(circuit.gyrator_conductance / G0, max_denominator, tol)
    c = circuit.capacitance
    e_c = E_CHARGE**2 / (2 * c)
    omega_c = circuit.gyrator_conductance / c
    hwc = HBAR * omega_c
    e_j = circuit.josephson_energy
    v = e_j / hwc
    v0_j = e_j * math.exp(-math.pi * flux.q / (2 * flux.p))
    if circuit.inductance is None:
        if require_inductance:
            raise MissingInductance("an inductance is required for the confined model")
        model = ModelParams(flux, v, 0.0)
        return model, DerivedQuantities(flux, e_c, None, e_j, omega_c, None, hwc, v, 0.0, v0_j, None)
    ind = circuit.inductance
    e_l = PHI0_S**2 / (4 * math.pi**2 * ind)
    omega_lc = 1.0 / math.sqrt(ind * c)
    hw0_over_v = HBAR * omega_lc / e_j
    model = ModelParams(flux, v, hw0_over_v)
    # hbar w0^2/(w_c V0), evaluated with SI quantities
    ratio = HBAR * omega_lc**2 / (omega_c * v0_j)
    delta = delta_from_ratio(ratio)
    derived = DerivedQuantities(flux, e_c, e_l, e_j, omega_c, omega_lc, hwc, v,
                                hw0_over_v, v0_j, delta, {"confinement_ratio": ratio})
    return model, derived


def warn_truncation(msg: str):
    warnings.warn(msg, TruncationWarning, stacklevel=3)
