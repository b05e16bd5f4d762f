"""Truncated Fock-space and magnetic-translation operators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import FluxRatio, ValidationError, warn_truncation

__all__ = [
    "Basis", "Operator", "ladder_matrix", "number_matrix", "quadrature_matrices",
    "displacement_matrix", "displacement_keep", "unitarity_defect", "mto_pair", "hermite_functions",
    "quadrature_fourier_matrix", "hermitian_function",
]

# displacement matrices whose retained block deviates more than this from
# unitarity trigger a TruncationWarning
UNITARITY_WARN = 1e-8


@dataclass(frozen=True)
class Basis:
    """Tag describing the ordering of a matrix basis.

    kind is one of ``fock`` (single mode, dim m_max+1), ``fock2`` (n-major
    product |n, m>), ``crystal`` (Landau level n times sublattice l) or
    ``harper`` (sublattice only).
    """

    kind: str
    n_max: int = 0
    m_max: int = 0
    p: int = 1

    @property
    def dim(self) -> int:
        if self.kind == "fock":
            return self.m_max + 1
        if self.kind == "fock2":
            return (self.n_max + 1) * (self.m_max + 1)
        if self.kind == "crystal":
            return (self.n_max + 1) * self.p
        if self.kind == "harper":
            return self.p
        raise ValidationError(f"unknown basis kind {self.kind!r}")


@dataclass
class Operator:
    """Matrix with its basis tag and a truncation quality figure.

    ``defect`` is the unitarity defect for unitary builders and the
    largest such defect among ingredients for composite Hamiltonians.
    """

    matrix: np.ndarray
    basis: Basis
    defect: float = 0.0

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def truncation_warning(self) -> bool:
        return self.defect > UNITARITY_WARN

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _check_m(m_max):
    if int(m_max) != m_max or m_max < 0:
        raise ValidationError(f"truncation must be a non-negative integer, got {m_max}")
    return int(m_max)


def ladder_matrix(m_max: int) -> np.ndarray:
    """Annihilation operator on span{|0>, ..., |m_max>}."""
    m_max = _check_m(m_max)
    return np.diag(np.sqrt(np.arange(1.0, m_max + 1)), 1)


def number_matrix(m_max: int) -> np.ndarray:
    return np.diag(np.arange(float(_check_m(m_max) + 1)))


def quadrature_matrices(m_max: int):
    """X = (b + b^dag)/sqrt2 and P = (b - b^dag)/(i sqrt2)."""
    b = ladder_matrix(m_max)
    x = (b + b.T) / np.sqrt(2)
    p = (b - b.T) / (1j * np.sqrt(2))
    return x, p


def unitarity_defect(u: np.ndarray, keep: int | None = None) -> float:
    """max |(U^dag U - 1)_ij| over the leading ``keep`` x ``keep`` block.

    Truncation always spoils unitarity near the cutoff, so by default only
    the lower half of the Fock ladder is inspected.
    """
    n = u.shape[0]
    keep = n // 2 + 1 if keep is None else max(1, min(keep, n))
    g = u.conj().T @ u
    return float(np.max(np.abs(g[:keep, :keep] - np.eye(keep))))


def displacement_keep(alpha: complex, m_max: int) -> int:
    """Number of leading columns whose displaced image stays inside the truncation.

    Column n of D(alpha) spreads to sqrt(m) ~ sqrt(n) + |alpha|; two extra
    units of sqrt(m) leave tails far below double precision.
    """
    return int(max(1.0, math.sqrt(m_max) - abs(alpha) - 2.0) ** 2)


def displacement_matrix(alpha: complex, m_max: int, warn: bool = True) -> Operator:
    """Matrix of exp(alpha b^dag - alpha* b) truncated to m_max.

    Entries are evaluated from the associated Laguerre closed form through
    the normalized quantity sqrt(n!/(n+k)!) e^(-x/2) x^(k/2) L_n^k(x), whose
    three-term recurrence in n is bounded, so it is stable for |alpha|^2 of
    order 2 pi and m_max in the thousands.
    """
    m_max = _check_m(m_max)
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    ln_a = np.log(abs(alpha)) if alpha != 0 else -np.inf
    phase = alpha / abs(alpha) if alpha != 0 else 1.0
    k = np.arange(m_max + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        start = np.where(k == 0, 0.0, k * ln_a)
    g = np.zeros((m_max + 1, m_max + 1))  # g[n, k]
    g[0] = np.exp(start - 0.5 * gammaln(k + 1.0) - x / 2)
    if m_max >= 1:
        g[1] = g[0] * (1.0 + k - x) / np.sqrt(1.0 + k)
    for n in range(1, m_max):
        g[n + 1] = ((2 * n + 1 + k - x) * g[n] - np.sqrt(n * (n + k)) * g[n - 1]) / np.sqrt(
            (n + 1.0) * (n + 1 + k)
        )
    d = np.zeros((m_max + 1, m_max + 1), dtype=complex)
    rows, ks = np.nonzero(np.add.outer(np.arange(m_max + 1), k) <= m_max)
    val = phase**ks * g[rows, ks]
    d[rows + ks, rows] = val
    # <n|D(a)|n+k> = conj(<n+k|D(-a)|n>)
    off = ks > 0
    d[rows[off], rows[off] + ks[off]] = np.conj((-1.0) ** ks[off] * val[off])
    # columns whose displaced image stays well inside the truncated space
    keep = displacement_keep(alpha, m_max)
    op = Operator(d, Basis("fock", m_max=m_max), unitarity_defect(d, keep))
    if warn and op.truncation_warning:
        warn_truncation(f"displacement({alpha:.4g}) at m_max={m_max}: unitarity defect {op.defect:.2e}")
    return op


def mto_pair(flux: FluxRatio, k1: float, k2: float):
    """p x p matrices of the two magnetic translations on a Bloch band.

    k1, k2 are crystal momenta in units of 1/l_B.  T1 is the cyclic shift
    between sublattices and T2 is diagonal.
    """
    p, q = flux.p, flux.q
    l0 = flux.lattice_constant
    l = np.arange(p)
    t2 = np.diag(np.exp(1j * q * (k2 * l0 + 2 * np.pi * l) / p))
    t1 = np.zeros((p, p), dtype=complex)
    t1[(l + 1) % p, l] = np.exp(1j * k1 * q * l0 / p)
    return t1, t2


def hermite_functions(x, m_max: int) -> np.ndarray:
    """Normalized Hermite functions psi_m(x), shape (m_max+1, len(x))."""
    x = np.asarray(x, dtype=float)
    m_max = _check_m(m_max)
    out = np.empty((m_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-x**2 / 2)
    if m_max > 0:
        out[1] = np.sqrt(2.0) * x * out[0]
    for m in range(2, m_max + 1):
        out[m] = np.sqrt(2.0 / m) * x * out[m - 1] - np.sqrt((m - 1) / m) * out[m - 2]
    return out


def quadrature_fourier_matrix(m_max: int) -> np.ndarray:
    """Continuous Fourier transform discretized on the eigenbasis of truncated X.

    The eigenvalues of the truncated position quadrature are Gauss-Hermite
    nodes; the transform kernel exp(-i x p)/sqrt(2 pi) is applied with the
    matching quadrature weights and mapped back to the Fock basis.  For
    m well below m_max column m approaches (-i)^m e_m.
    """
    x, _ = quadrature_matrices(m_max)
    nodes = np.linalg.eigvalsh(x)
    h = hermite_functions(nodes, m_max)
    norm = np.sqrt(np.sum(h**2, axis=0))
    vec = h / norm
    w = 1.0 / norm  # square roots of the quadrature weights
    kern = np.outer(w, w) * np.exp(-1j * np.outer(nodes, nodes)) / np.sqrt(2 * np.pi)
    return vec @ kern @ vec.T


def hermitian_function(h: np.ndarray, fn) -> np.ndarray:
    """Apply ``fn`` to the spectrum of a Hermitian matrix."""
    w, v = np.linalg.eigh(h)
    return (v * fn(w)) @ v.conj().T
