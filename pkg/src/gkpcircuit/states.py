"""Approximate grid-state codewords on a 1-D grid, Fourier transforms and fidelities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .core import ValidationError
from .operators import hermite_functions

__all__ = [
    "GridTooNarrow", "GridMismatch", "GridStateParams", "SampledWavefunction",
    "default_grid", "approx_grid_state", "hadamard_pair", "hadamard_weights",
    "fourier_1d", "fidelity", "fock_to_grid", "grid_to_fock",
    "peak_width", "envelope_width", "SQRT_PI",
]

SQRT_PI = math.sqrt(math.pi)


class GridTooNarrow(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


@dataclass(frozen=True)
class GridStateParams:
    """Squeezing Delta and the comb cutoff (auto when None)."""

    delta: float
    n_peaks: int | None = None

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.n_peaks is None:
            object.__setattr__(self, "n_peaks", math.ceil(3 / (SQRT_PI * self.delta**2)) + 2)
        elif self.n_peaks < 1:
            raise ValidationError("n_peaks must be positive")


@dataclass
class SampledWavefunction:
    """Complex samples on a uniform 1-D grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValidationError("grid and values must be 1-D of equal length")
        if self.grid.size < 2:
            raise ValidationError("grid needs at least two points")

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def norm(self) -> float:
        """Trapezoid estimate of the integral of |psi|^2."""
        return float(trapezoid(np.abs(self.values) ** 2, self.grid))

    @property
    def norm_defect(self) -> float:
        return abs(self.norm - 1.0)

    def normalized(self) -> "SampledWavefunction":
        return SampledWavefunction(self.grid, self.values / math.sqrt(self.norm))

    def phase_fixed(self) -> "SampledWavefunction":
        """Global phase chosen so the largest-magnitude sample is real positive."""
        k = np.argmax(np.abs(self.values))
        ph = self.values[k] / abs(self.values[k]) if self.values[k] != 0 else 1.0
        return SampledWavefunction(self.grid, self.values / ph)

    def inner(self, other: "SampledWavefunction") -> complex:
        """<self|other> by the trapezoid rule."""
        _same_grid(self, other)
        return complex(trapezoid(np.conj(self.values) * other.values, self.grid))


def _same_grid(a, b):
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid, rtol=0, atol=1e-12):
        raise GridMismatch("wavefunctions live on different grids")


def default_grid(delta: float = 0.25) -> np.ndarray:
    """Symmetric grid covering [-4/Delta, 4/Delta] with >= 20 samples per Delta.

    For Delta = 0.25 this is [-24, 24] with 4096 points.
    """
    half = max(24.0, 6.0 / delta)
    n = max(4096, int(math.ceil(2 * half / (delta / 20))) + 1)
    return np.linspace(-half, half, n)


def approx_grid_state(j: int, params, grid=None, normalize: bool = True) -> SampledWavefunction:
    """Approximate codeword psi_j: Gaussian comb of width Delta under an envelope of width 1/Delta.

    With ``normalize=False`` the asymptotic prefactor sqrt(2)/pi^(1/4) is used
    instead of the trapezoid normalization.
    """
    if j not in (0, 1):
        raise ValidationError("j must be 0 or 1")
    if not isinstance(params, GridStateParams):
        params = GridStateParams(float(params))
    d = params.delta
    x = default_grid(d) if grid is None else np.asarray(grid, dtype=float)
    if x.min() > -4 / d or x.max() < 4 / d:
        raise GridTooNarrow(f"grid must span [-{4 / d:.3g}, {4 / d:.3g}]")
    n = np.arange(-params.n_peaks, params.n_peaks + 1)
    centers = SQRT_PI * (2 * n + j)
    comb = np.zeros_like(x)
    # chunk over peaks to keep memory flat on long grids
    for c in np.array_split(centers, max(1, len(centers) // 64)):
        comb += np.exp(-(x[:, None] - c[None, :]) ** 2 / (2 * d**2)).sum(axis=1)
    vals = np.exp(-x**2 * d**2 / 2) * comb
    psi = SampledWavefunction(x, vals * (math.sqrt(2) / math.pi**0.25))
    return psi.normalized() if normalize else psi


def hadamard_weights():
    """(cos pi/8, sin pi/8)."""
    return math.cos(math.pi / 8), math.sin(math.pi / 8)


def hadamard_pair(psi0, psi1):
    """Hadamard-eigenstate combinations (psi_H+, psi_H-), renormalized.

    Also accepts plain arrays (1-D, 2-D or Fock vectors), returned unnormalized.
    """
    c, s = hadamard_weights()
    if isinstance(psi0, SampledWavefunction):
        _same_grid(psi0, psi1)
        hp = SampledWavefunction(psi0.grid, c * psi0.values + s * psi1.values)
        hm = SampledWavefunction(psi0.grid, -s * psi0.values + c * psi1.values)
        return hp.normalized(), hm.normalized()
    a, b = np.asarray(psi0), np.asarray(psi1)
    if a.shape != b.shape:
        raise GridMismatch("inputs have different shapes")
    return c * a + s * b, -s * a + c * b


def fourier_1d(psi: SampledWavefunction, out_grid=None, pad: int = 1) -> SampledWavefunction:
    """Unitary continuous Fourier transform (2 pi)^(-1/2) int psi(X) exp(-i X P) dX.

    Without ``out_grid`` the FFT is used on the reciprocal grid of the
    (``pad``-fold zero-padded) input.  With ``out_grid`` the same sum is
    evaluated directly at the requested momenta.
    """
    x, f = psi.grid, psi.values
    dx = psi.dx
    if out_grid is None:
        n = pad * len(x)
        p = 2 * np.pi * np.fft.fftfreq(n, d=dx)
        vals = np.fft.fft(f, n) * np.exp(-1j * x[0] * p) * dx / np.sqrt(2 * np.pi)
        order = np.argsort(p)
        return SampledWavefunction(p[order], vals[order])
    p = np.asarray(out_grid, dtype=float)
    out = np.empty(p.shape, dtype=complex)
    step = max(1, 2**22 // len(x))
    for i in range(0, len(p), step):
        out[i:i + step] = np.exp(-1j * np.outer(p[i:i + step], x)) @ f
    return SampledWavefunction(p, out * dx / np.sqrt(2 * np.pi))


def fock_to_grid(vec, grid) -> SampledWavefunction:
    """Render Fock amplitudes sum_m c_m psi_m(X) on a grid."""
    vec = np.asarray(vec, dtype=complex)
    h = hermite_functions(grid, len(vec) - 1)
    return SampledWavefunction(grid, vec @ h)


def grid_to_fock(psi: SampledWavefunction, m_max: int) -> np.ndarray:
    """Fock amplitudes c_m = int psi_m(X) psi(X) dX (trapezoid)."""
    h = hermite_functions(psi.grid, m_max)
    return trapezoid(h * psi.values[None, :], psi.grid, axis=1)


def fidelity(a, b) -> float:
    """Phase-free |<a|b>|^2 / (<a|a><b|b>).

    Each argument is a SampledWavefunction or a Fock vector; a Fock vector
    paired with a sampled state is rendered on that state's grid.
    """
    sa, sb = isinstance(a, SampledWavefunction), isinstance(b, SampledWavefunction)
    if sa and not sb:
        b = fock_to_grid(b, a.grid)
    elif sb and not sa:
        a = fock_to_grid(a, b.grid)
    elif not sa and not sb:
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        n = max(len(a), len(b))
        a = np.pad(a, (0, n - len(a)))
        b = np.pad(b, (0, n - len(b)))
        return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))
    ov = a.inner(b)
    return float(abs(ov) ** 2 / (a.norm * b.norm))


def _gauss_sigma(x, y):
    # fit log y = c - x^2 / (2 sigma^2)
    slope = np.polyfit(x**2, np.log(y), 1)[0]
    return float(math.sqrt(-1 / (2 * slope)))


def peak_width(psi: SampledWavefunction, center: float = 0.0, delta_guess: float = 0.25) -> float:
    """Gaussian width sigma of the peak at ``center`` (psi ~ exp(-x^2/2 sigma^2))."""
    x = psi.grid - center
    sel = np.abs(x) < delta_guess
    return _gauss_sigma(x[sel], np.abs(psi.values[sel]))


def envelope_width(psi: SampledWavefunction, j: int = 0, threshold: float = 1e-6) -> float:
    """Gaussian width of the envelope through the comb peak maxima."""
    y = np.abs(psi.values)
    top = y.max()
    n = np.arange(-200, 201)
    centers = SQRT_PI * (2 * n + j)
    centers = centers[(centers > psi.grid[0]) & (centers < psi.grid[-1])]
    idx = np.searchsorted(psi.grid, centers)
    xs, ys = [], []
    half = max(2, int(0.5 * SQRT_PI / psi.dx))
    for i in idx:
        lo, hi = max(0, i - half), min(len(y), i + half)
        k = lo + np.argmax(y[lo:hi])
        if y[k] > threshold * top:
            xs.append(psi.grid[k])
            ys.append(y[k])
    return _gauss_sigma(np.array(xs), np.array(ys))
