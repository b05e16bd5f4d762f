"""Two-dimensional (symmetric gauge) wavefunctions of lowest-Landau-level states.

A 1-D guiding-center wavefunction psi(X) is lifted to the plane with the
coherent-state kernel

    K0(x1, x2; X) = exp(-(X - x1)^2 / 2) exp(-i x2 X) exp(i x1 x2 / 2) / (sqrt2 pi^(3/4)),

and |Psi(x1, x2)|^2 is the Husimi Q function of psi.  Lengths are in
magnetic units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .core import ConvergenceError, ValidationError
from .states import SQRT_PI, SampledWavefunction, hadamard_weights

__all__ = [
    "GridTooCoarse", "NonSquareGrid", "BadTau", "Wavefunction2D", "ThetaSpec",
    "KERNEL_NORM", "default_grid_2d", "kernel_k0", "lift_to_2d", "lower_to_1d", "theta",
    "zak_wavefunction_2d", "confined_wavefunction_2d", "hadamard_2d", "rotation_fourier_check",
    "shift_relation_defect", "husimi", "count_zeros", "lll_residual", "shape_defect",
]

KERNEL_NORM = 1.0 / (math.sqrt(2.0) * math.pi**0.75)


class GridTooCoarse(ConvergenceError):
    pass


class NonSquareGrid(ValidationError):
    pass


class BadTau(ValidationError):
    pass


@dataclass
class Wavefunction2D:
    """values[i, j] = Psi(x1[i], x2[j]) in the symmetric gauge."""

    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray
    gauge: str = "symmetric"

    @property
    def norm(self) -> float:
        return float(trapezoid(trapezoid(np.abs(self.values) ** 2, self.x2, axis=1), self.x1))

    def mesh(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")


def default_grid_2d(n: int = 256, half_width: float = 4 * SQRT_PI):
    g = np.linspace(-half_width, half_width, n)
    return g, g.copy()


def kernel_k0(x1, x2, X):
    """Coherent-state kernel K0(x1, x2; X), broadcasting over its arguments."""
    x1, x2, X = np.asarray(x1), np.asarray(x2), np.asarray(X)
    return KERNEL_NORM * np.exp(-(X - x1) ** 2 / 2 - 1j * x2 * X + 0.5j * x1 * x2)


def _weights(x):
    w = np.full(len(x), x[1] - x[0])
    w[0] = w[-1] = 0.5 * (x[1] - x[0])
    return w


def lift_to_2d(psi: SampledWavefunction, x1=None, x2=None, norm_tol: float | None = 0.01) -> Wavefunction2D:
    """Quadrature of int K0(x1, x2; X) psi(X) dX on a product grid.

    The kernel factorizes into a Gaussian in (x1, X) and a plane wave in
    (X, x2), so the sum is a single matrix product.  GridTooCoarse is raised
    when the 2-D norm differs from the 1-D norm by more than ``norm_tol``
    (relative); pass None to skip the check.
    """
    if x1 is None:
        x1, x2 = default_grid_2d()
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2 if x2 is not None else x1, dtype=float)
    X = psi.grid
    g = np.exp(-(X[None, :] - x1[:, None]) ** 2 / 2) * (psi.values * _weights(X))[None, :]
    e = np.exp(-1j * np.outer(X, x2))
    vals = KERNEL_NORM * np.exp(0.5j * np.outer(x1, x2)) * (g @ e)
    out = Wavefunction2D(x1, x2, vals)
    if norm_tol is not None:
        n1 = psi.norm
        defect = abs(out.norm - n1) / n1
        if defect > norm_tol:
            raise GridTooCoarse(f"2-D norm defect {defect:.2e} exceeds {norm_tol}; enlarge or refine the grid")
    return out


def lower_to_1d(Psi: Wavefunction2D, X) -> SampledWavefunction:
    """Inverse transform int K0*(x1, x2; X) Psi(x1, x2) dx1 dx2."""
    X = np.asarray(X, dtype=float)
    x1, x2 = Psi.x1, Psi.x2
    f = Psi.values * np.exp(-0.5j * np.outer(x1, x2))
    f = f * np.outer(_weights(x1), _weights(x2))
    g = np.exp(-(X[:, None] - x1[None, :]) ** 2 / 2)          # (X, x1)
    e = np.exp(1j * np.outer(x2, X))                           # (x2, X)
    vals = KERNEL_NORM * np.einsum("ai,ij,ja->a", g, f, e)
    return SampledWavefunction(X, vals)


@dataclass(frozen=True)
class ThetaSpec:
    """Theta function with characteristics [a; b] and modular parameter tau."""

    a: float
    b: float
    tau: complex
    n_terms: int | None = None

    def __post_init__(self):
        tau = complex(self.tau)
        if tau.imag <= 0:
            raise BadTau(f"Im(tau) must be positive, got {tau}")
        object.__setattr__(self, "tau", tau)
        if self.n_terms is None:
            # |exp(i pi n^2 tau)| < 1e-16 beyond n_terms
            n = math.ceil(math.sqrt(16 * math.log(10) / (math.pi * tau.imag))) + 1
            object.__setattr__(self, "n_terms", n)


def theta(spec: ThetaSpec, z):
    """sum_n exp(i pi (n+a)^2 tau + 2 pi i (n+a)(z+b)).

    The summation window is centred on the dominant term for each z, so the
    truncation is uniform in Im z.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    a, b, tau = spec.a, spec.b, spec.tau
    c = np.round(-flat.imag / tau.imag - a)
    k = np.arange(-spec.n_terms, spec.n_terms + 1)
    na = c[:, None] + k[None, :] + a
    terms = np.exp(1j * np.pi * na**2 * tau + 2j * np.pi * na * (flat[:, None] + b))
    return terms.sum(axis=1).reshape(z.shape)


def _mesh(x1, x2):
    if x1 is None:
        x1, x2 = default_grid_2d()
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2 if x2 is not None else x1, dtype=float)
    return x1, x2, *np.meshgrid(x1, x2, indexing="ij")


def zak_wavefunction_2d(k1: float, k2: float, x1=None, x2=None) -> Wavefunction2D:
    """Lift of the ideal comb sum_n exp(-i k1 X_n) delta(X - X_n), X_n = 2 sqrt(pi) n + k2."""
    x1, x2, g1, g2 = _mesh(x1, x2)
    w = g1 - 1j * g2
    spec = ThetaSpec(k2 / (2 * SQRT_PI), -k1 / SQRT_PI, 2j)
    vals = KERNEL_NORM * np.exp(-g1 * w / 2) * theta(spec, -1j * w / SQRT_PI)
    return Wavefunction2D(x1, x2, vals)


def confined_wavefunction_2d(j: int, delta: float, x1=None, x2=None) -> Wavefunction2D:
    """Closed-form lift of the approximate codeword psi_j with the asymptotic prefactor."""
    if j not in (0, 1):
        raise ValidationError("j must be 0 or 1")
    if not (0 < delta <= 0.5):
        raise ValidationError("delta must lie in (0, 0.5]")
    x1, x2, g1, g2 = _mesh(x1, x2)
    w = g1 - 1j * g2
    d2 = delta**2
    den = 1 + d2 + d2**2
    spec = ThetaSpec(j / 2, 0.0, 2j * (1 + d2) / den)
    pref = math.sqrt(2 * d2 / (math.pi * den))
    vals = pref * np.exp(d2 * w**2 / (2 * den) - g1 * w / 2) * theta(spec, -1j * w / (SQRT_PI * den))
    return Wavefunction2D(x1, x2, vals)


def hadamard_2d(psi0: Wavefunction2D, psi1: Wavefunction2D):
    """(Psi_H+, Psi_H-) from two lifted codewords."""
    c, s = hadamard_weights()
    return (Wavefunction2D(psi0.x1, psi0.x2, c * psi0.values + s * psi1.values),
            Wavefunction2D(psi0.x1, psi0.x2, -s * psi0.values + c * psi1.values))


def _check_square(Psi):
    x1, x2 = Psi.x1, Psi.x2
    if (x1.shape != x2.shape or not np.allclose(x1, x2, atol=1e-12)
            or not np.allclose(x1, -x1[::-1], atol=1e-12)):
        raise NonSquareGrid("rotation needs identical grids symmetric about zero")


def rotation_fourier_check(Psi: Wavefunction2D, n: int) -> float:
    """max |Psi(x2, -x1) - i^n Psi(x1, x2)| / max |Psi| over the grid."""
    _check_square(Psi)
    p = Psi.values
    rot = p[:, ::-1].T
    return float(np.max(np.abs(rot - (1j) ** n * p)) / np.max(np.abs(p)))


def shape_defect(a, b, mask=None):
    """Defect of a = c b after the best complex scalar c.

    Returns (max|a - c b| / max|a|, c) over ``mask``.
    """
    a, b = np.asarray(a), np.asarray(b)
    if mask is not None:
        a, b = a[mask], b[mask]
    c = np.vdot(b, a) / np.vdot(b, b)
    return float(np.max(np.abs(a - c * b)) / np.max(np.abs(a))), complex(c)


def shift_relation_defect(x1=None, x2=None, constant_phase: complex | None = None):
    """Test Psi_H+(x1, x2) = C exp(-i sqrt(pi) (x1 - x2) / 2) Psi_H-(x1 + sqrt(pi), x2 + sqrt(pi)).

    Uses the ideal Hadamard combinations of the two comb states.  When
    ``constant_phase`` is None the global constant C is fitted; the fitted
    value (exactly i for this normalization) is returned alongside the defect.
    """
    x1, x2, g1, g2 = _mesh(x1, x2)
    c, s = hadamard_weights()
    z0 = zak_wavefunction_2d(0.0, 0.0, x1, x2).values
    z1 = zak_wavefunction_2d(0.0, SQRT_PI, x1, x2).values
    hp = c * z0 + s * z1
    sx1, sx2 = x1 + SQRT_PI, x2 + SQRT_PI
    w0 = zak_wavefunction_2d(0.0, 0.0, sx1, sx2).values
    w1 = zak_wavefunction_2d(0.0, SQRT_PI, sx1, sx2).values
    hm = (-s * w0 + c * w1) * np.exp(-0.5j * SQRT_PI * (g1 - g2))
    if constant_phase is None:
        d, const = shape_defect(hp, hm)
        return d, const
    d = float(np.max(np.abs(hp - constant_phase * hm)) / np.max(np.abs(hp)))
    return d, complex(constant_phase)


def husimi(psi: SampledWavefunction, x1=None, x2=None, norm_tol: float | None = 0.01) -> np.ndarray:
    """|Psi(x1, x2)|^2 of the lifted state (non-negative)."""
    return np.abs(lift_to_2d(psi, x1, x2, norm_tol).values) ** 2


def count_zeros(Psi: Wavefunction2D, region=None) -> int:
    """Number of zeros (with sign) from phase winding around grid plaquettes.

    ``region`` = (x1_lo, x1_hi, x2_lo, x2_hi) restricts the count to
    plaquettes whose lower-left corner lies inside it.
    """
    ph = np.angle(Psi.values)

    def wrap(d):
        return (d + np.pi) % (2 * np.pi) - np.pi

    w = (wrap(ph[1:, :-1] - ph[:-1, :-1]) + wrap(ph[1:, 1:] - ph[1:, :-1])
         + wrap(ph[:-1, 1:] - ph[1:, 1:]) + wrap(ph[:-1, :-1] - ph[:-1, 1:]))
    wind = np.rint(w / (2 * np.pi)).astype(int)
    if region is not None:
        a, b, c, d = region
        m1 = (Psi.x1[:-1] >= a) & (Psi.x1[:-1] < b)
        m2 = (Psi.x2[:-1] >= c) & (Psi.x2[:-1] < d)
        wind = wind[np.ix_(m1, m2)]
    return int(np.abs(wind).sum())


def lll_residual(x1, x2, X, h: float = 1e-4) -> float:
    """Finite-difference residual of (d1 - i d2 + x1/2 - i x2/2) K0 relative to |K0|."""
    x1, x2, X = np.broadcast_arrays(*map(np.asarray, (x1, x2, X)))
    k = kernel_k0(x1, x2, X)
    d1 = (kernel_k0(x1 + h, x2, X) - kernel_k0(x1 - h, x2, X)) / (2 * h)
    d2 = (kernel_k0(x1, x2 + h, X) - kernel_k0(x1, x2 - h, X)) / (2 * h)
    r = d1 - 1j * d2 + (x1 / 2 - 1j * x2 / 2) * k
    return float(np.max(np.abs(r)) / np.max(np.abs(k)))
