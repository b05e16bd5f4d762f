"""Hamiltonians in truncated bases, diagonalization and parameter sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as sla

from .core import (FluxRatio, ModelParams, ValidationError, ZeroConfinement,
                   v0 as _v0, warn_truncation)
from .operators import (Basis, Operator, displacement_matrix, ladder_matrix,
                        mto_pair, UNITARITY_WARN)

__all__ = [
    "EigenSolution", "SweepResult", "NonHermitianInput", "EmptyGrid",
    "eigensolve", "harper_hamiltonian", "brillouin_grid", "farey_fluxes", "butterfly",
    "crystal_hamiltonian", "crystal_bands", "confined_hamiltonian", "confined_sector_blocks",
    "confined_spectrum", "lll_confined_hamiltonian", "lll_spectrum", "lll_weight",
    "confinement_sweep", "fit_gap_law", "find_level_crossings", "convergence_defect",
    "DEFAULT_TRUNCATION",
]

HERMITIAN_TOL = 1e-12
# (n_max, m_max) meeting the doubling contract at the reference operating point
DEFAULT_TRUNCATION = (32, 64)
THREADS_ENV = "GKPCIRCUIT_THREADS"


class NonHermitianInput(ValidationError):
    pass


class EmptyGrid(ValidationError):
    pass


@dataclass
class EigenSolution:
    """Ascending eigenvalues with orthonormal eigenvector columns.

    ``labels`` carries the rotation sector (m - n) mod 4 of each vector when
    the solver worked sector by sector, else None.
    """

    values: np.ndarray
    vectors: np.ndarray
    basis: Basis | None = None
    residual: float = 0.0
    labels: np.ndarray | None = None
    defect: float = 0.0

    def __len__(self):
        return len(self.values)


@dataclass
class SweepResult:
    """Energies over a one-parameter grid.

    ``energies`` is a (points x levels) array, or a list of 1-D arrays when
    the number of levels varies between points (butterfly).
    """

    axis: str
    values: np.ndarray
    energies: object
    labels: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def rows(self):
        """Long-format rows (parameter, level, energy[, sector])."""
        out = []
        for i, x in enumerate(self.values):
            for lev, e in enumerate(self.energies[i]):
                row = [float(x), lev, float(e)]
                if self.labels is not None:
                    row.append(int(self.labels[i][lev]))
                out.append(row)
        return out


# --------------------------------------------------------------------------
# eigensolver

def _fix_phases(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    ph = ph / np.where(np.abs(ph) > 0, np.abs(ph), 1.0)
    return vecs / ph


def _norm2_estimate(h, iters=40):
    rng = np.random.default_rng(1234)
    x = rng.standard_normal(h.shape[0]) + 0j
    lam = 0.0
    for _ in range(iters):
        y = h @ x
        lam = np.linalg.norm(y)
        if lam == 0:
            return 0.0
        x = y / lam
    return float(lam)


def eigensolve(h, count: int | None = None, basis: Basis | None = None) -> EigenSolution:
    """Dense Hermitian eigensolve of the ``count`` lowest pairs (all if None)."""
    if isinstance(h, Operator):
        basis = h.basis if basis is None else basis
        h = h.matrix
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError("matrix must be square")
    n = h.shape[0]
    asym = np.max(np.abs(h - h.conj().T)) if n else 0.0
    if asym > HERMITIAN_TOL:
        raise NonHermitianInput(f"matrix is not Hermitian (max |H - H^dag| = {asym:.2e})")
    if count is None or count >= n:
        w, v = sla.eigh(h)
    else:
        if count < 1:
            raise ValidationError("count must be positive")
        w, v = sla.eigh(h, subset_by_index=[0, count - 1])
    v = _fix_phases(v)
    hn = _norm2_estimate(h) if n else 0.0
    res = np.linalg.norm(h @ v - v * w, axis=0).max() / max(hn, 1e-300) if len(w) else 0.0
    return EigenSolution(w, v, basis, float(res))


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    nt = _threads()
    if nt == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(nt) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# Harper model and butterfly

def harper_hamiltonian(flux: FluxRatio, k1: float, k2: float, v0: float = 1.0) -> Operator:
    """p x p lowest-Landau-level Bloch Hamiltonian, energies in units of ``v0``."""
    t1, t2 = mto_pair(flux, k1, k2)
    t = t1 + t2
    return Operator(-0.5 * v0 * (t + t.conj().T), Basis("harper", p=flux.p))


def brillouin_grid(flux: FluxRatio, n1: int = 32, n2: int | None = None):
    """Uniform k-grid over the magnetic Brillouin zone, upper endpoints excluded."""
    n2 = n1 if n2 is None else n2
    if n1 < 1 or n2 < 1:
        raise EmptyGrid("k-grid needs at least one point per direction")
    l0 = flux.lattice_constant
    k1 = np.arange(n1) * (2 * np.pi / (flux.q * l0)) / n1
    k2 = np.arange(n2) * (2 * np.pi / l0) / n2
    return k1, k2


def farey_fluxes(max_denominator: int = 12, max_ratio: float = 4.0):
    """All coprime p/q with p, q <= max_denominator and q/p in (0, max_ratio], sorted by q/p."""
    out = set()
    for p in range(1, max_denominator + 1):
        for q in range(1, max_denominator + 1):
            if math.gcd(p, q) == 1 and q <= max_ratio * p:
                out.add(Fraction(q, p))
    return [FluxRatio(f.denominator, f.numerator) for f in sorted(out)]


def butterfly(fluxes, k_points: int = 32, v0: float = 1.0) -> SweepResult:
    """Harper spectra over a k-grid for each flux, axis q/p."""
    fluxes = list(fluxes)
    if not fluxes or k_points < 1:
        raise EmptyGrid("butterfly needs at least one flux and one k-point")

    def one(f):
        k1, k2 = brillouin_grid(f, k_points)
        t1s, t2s = [], []
        for a in k1:
            for b in k2:
                t1, t2 = mto_pair(f, a, b)
                t1s.append(t1)
                t2s.append(t2)
        t = np.array(t1s) + np.array(t2s)
        h = -0.5 * v0 * (t + np.conj(np.swapaxes(t, 1, 2)))
        return np.sort(np.linalg.eigvalsh(h).ravel())

    energies = _map(one, fluxes)
    axis = np.array([f.q / f.p for f in fluxes])
    return SweepResult("q_over_p", axis, energies,
                       metadata={"fluxes": [str(f) for f in fluxes], "k_points": k_points, "v0": v0})


# --------------------------------------------------------------------------
# crystal (no confinement)

def crystal_hamiltonian(model: ModelParams, k1: float, k2: float, n_max: int) -> Operator:
    """Bloch Hamiltonian over Landau levels 0..n_max and the p sublattice labels.

    Ordering is Landau-level major: index = n * p + l.  Units hbar w_c.
    """
    if model.hw0_over_v != 0:
        raise ValidationError("crystal_hamiltonian takes an unconfined model (hw0_over_v = 0)")
    f = model.flux
    lam = f.displacement
    v = model.v_over_hwc
    t1, t2 = mto_pair(f, k1, k2)
    d1 = displacement_matrix(1j * lam, n_max, warn=False)
    d2 = displacement_matrix(-lam, n_max, warn=False)
    t = np.kron(d1.matrix, t1) + np.kron(d2.matrix, t2)
    h = np.kron(np.diag(np.arange(n_max + 1) + 0.5), np.eye(f.p)) - 0.5 * v * (t + t.conj().T)
    top = v * max(abs(d1.matrix[n_max, 0]), abs(d2.matrix[n_max, 0]))
    if top > 1e-6:
        warn_truncation(f"coupling of the lowest level to n_max={n_max} is {top:.1e}")
    return Operator(h, Basis("crystal", n_max=n_max, p=f.p), max(d1.defect, d2.defect))


def crystal_bands(v_over_hwc: float, fluxes, k_points: int = 8, n_max: int = 10,
                  levels: int | None = None) -> SweepResult:
    """Band energies of the unconfined crystal versus q/p (units hbar w_c)."""
    import warnings
    from .core import TruncationWarning
    fluxes = list(fluxes)
    if not fluxes or k_points < 1:
        raise EmptyGrid("bands need at least one flux and one k-point")

    def one(f):
        model = ModelParams(f, v_over_hwc, 0.0)
        k1, k2 = brillouin_grid(f, k_points)
        out = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            for a in k1:
                for b in k2:
                    w = np.linalg.eigvalsh(crystal_hamiltonian(model, a, b, n_max).matrix)
                    out.append(w if levels is None else w[: levels * f.p])
        return np.sort(np.concatenate(out))

    energies = _map(one, fluxes)
    axis = np.array([f.q / f.p for f in fluxes])
    return SweepResult("q_over_p", axis, energies,
                       metadata={"v_over_hwc": v_over_hwc, "n_max": n_max, "k_points": k_points})


# --------------------------------------------------------------------------
# confined two-mode model

def _two_mode_displacements(flux: FluxRatio, n_max: int, m_max: int):
    lam = flux.displacement
    ops = [displacement_matrix(lam, n_max, warn=False),
           displacement_matrix(-lam, m_max, warn=False),
           displacement_matrix(1j * lam, n_max, warn=False),
           displacement_matrix(1j * lam, m_max, warn=False)]
    defect = max(o.defect for o in ops)
    if defect > UNITARITY_WARN:
        warn_truncation(f"displacement truncation defect {defect:.1e} at (n_max, m_max)=({n_max}, {m_max})")
    return [o.matrix for o in ops], defect


def _require_confinement(model):
    if model.hw0_over_v <= 0:
        raise ZeroConfinement("the confined model needs hw0_over_v > 0")


def confined_hamiltonian(model: ModelParams, n_max: int, m_max: int, phases=(0.0, 0.0),
                         charge_offset: complex = 0.0, require_confinement: bool = True) -> Operator:
    """Full two-mode Hamiltonian on |n, m> (n-major), units hbar w_c.

    ``phases`` = (theta1, theta2) multiply the exp(i k x1) and exp(i k x2)
    cosine terms by exp(-i theta).  ``charge_offset`` c adds
    c* a + c a^dag + |c|^2 to the cyclotron term.
    """
    if require_confinement:
        _require_confinement(model)
    (da2, db2, da1, db1), defect = _two_mode_displacements(model.flux, n_max, m_max)
    kap = model.kappa
    v = model.v_over_hwc
    na, nb = n_max + 1, m_max + 1
    a = ladder_matrix(n_max)
    b = ladder_matrix(m_max)
    th1, th2 = phases
    t = np.exp(-1j * th2) * np.kron(da2, db2) + np.exp(-1j * th1) * np.kron(da1, db1)
    h = -0.5 * v * (t + t.conj().T)
    diag = (1 + kap) * np.repeat(np.arange(na), nb) + kap * np.tile(np.arange(nb), na)
    h[np.diag_indices_from(h)] += diag
    ab = kap * np.kron(a, b)
    h += ab + ab.T
    if charge_offset:
        c = complex(charge_offset)
        ka = np.kron(a, np.eye(nb))
        h += np.conj(c) * ka + c * ka.T
        h[np.diag_indices_from(h)] += abs(c) ** 2
    return Operator(h, Basis("fock2", n_max=n_max, m_max=m_max), defect)


def sector_indices(n_max: int, m_max: int, sector: int):
    """(n, m) labels and flat n-major indices of the (m - n) mod 4 sector."""
    n, m = np.divmod(np.arange((n_max + 1) * (m_max + 1)), m_max + 1)
    sel = np.flatnonzero((m - n) % 4 == sector)
    return n[sel], m[sel], sel


def confined_sector_blocks(model: ModelParams, n_max: int, m_max: int, sectors=range(4)):
    """Blocks of the confined Hamiltonian in the rotation sectors (m - n) mod 4.

    Returns (dict sector -> (H_block, flat_indices), defect).  The full
    Hamiltonian has no matrix elements between different sectors.
    """
    _require_confinement(model)
    (da2, db2, da1, db1), defect = _two_mode_displacements(model.flux, n_max, m_max)
    kap = model.kappa
    v = model.v_over_hwc
    out = {}
    for s in sectors:
        nn, mm, flat = sector_indices(n_max, m_max, s)
        t = (da2[np.ix_(nn, nn)] * db2[np.ix_(mm, mm)]
             + da1[np.ix_(nn, nn)] * db1[np.ix_(mm, mm)])
        h = -0.5 * v * (t + t.conj().T)
        h[np.diag_indices_from(h)] += (1 + kap) * nn + kap * mm
        # kappa (ab + a^dag b^dag) links (n, m) with (n-1, m-1), same sector
        pos = {int(f): i for i, f in enumerate(flat)}
        src = np.flatnonzero((nn > 0) & (mm > 0))
        dst = np.array([pos[int(flat[i] - (m_max + 1) - 1)] for i in src], dtype=int)
        if len(src):
            val = kap * np.sqrt(nn[src] * mm[src])
            h[dst, src] += val
            h[src, dst] += val
        out[s] = (h, flat)
    return out, defect


def _merge_sectors(blocks, dim, count, basis):
    vals, vecs, labs, res = [], [], [], 0.0
    for s, (h, flat) in blocks.items():
        k = min(count, h.shape[0]) if count else h.shape[0]
        sol = eigensolve(h, k)
        res = max(res, sol.residual)
        for j in range(len(sol.values)):
            full = np.zeros(dim, dtype=complex)
            full[flat] = sol.vectors[:, j]
            vals.append(sol.values[j])
            vecs.append(full)
            labs.append(s)
    order = np.argsort(vals, kind="stable")
    if count:
        order = order[:count]
    return EigenSolution(np.asarray(vals)[order], np.array(vecs).T[:, order], basis,
                         res, np.asarray(labs)[order])


def confined_spectrum(model: ModelParams, n_max: int | None = None, m_max: int | None = None,
                      count: int = 10) -> EigenSolution:
    """Lowest ``count`` levels solved sector by sector, vectors on the full |n, m> basis."""
    n_max = DEFAULT_TRUNCATION[0] if n_max is None else n_max
    m_max = DEFAULT_TRUNCATION[1] if m_max is None else m_max
    blocks, defect = confined_sector_blocks(model, n_max, m_max)
    sol = _merge_sectors(blocks, (n_max + 1) * (m_max + 1), count,
                         Basis("fock2", n_max=n_max, m_max=m_max))
    sol.defect = defect
    return sol


def lll_weight(vector, n_max: int, m_max: int) -> float:
    """Weight of a |n, m> (n-major) state on the lowest Landau level n = 0."""
    v = np.asarray(vector).reshape(n_max + 1, m_max + 1)
    return float(np.sum(np.abs(v[0]) ** 2) / np.sum(np.abs(v) ** 2))


# --------------------------------------------------------------------------
# lowest-Landau-level model

def lll_confined_hamiltonian(model: ModelParams, m_max: int, units: str = "hwc") -> Operator:
    """kappa b^dag b - (V0/2) sum of the four displacements D_b(+-lambda), D_b(+-i lambda).

    ``units`` is ``"hwc"`` (hbar w_c) or ``"v0"`` (V0).  Entries vanish
    unless the two Fock indices agree mod 4.
    """
    lam = model.flux.displacement
    v0_ = _v0(model)
    kap = model.kappa
    if units == "v0":
        if v0_ == 0:
            raise ValidationError("V0 units need a non-zero potential")
        kap, v0_ = kap / v0_, 1.0
    elif units != "hwc":
        raise ValidationError("units must be 'hwc' or 'v0'")
    ops = [displacement_matrix(a, m_max, warn=False) for a in (1j * lam, -1j * lam, lam, -lam)]
    defect = max(o.defect for o in ops)
    if defect > UNITARITY_WARN:
        warn_truncation(f"displacement truncation defect {defect:.1e} at m_max={m_max}")
    h = -0.5 * v0_ * sum(o.matrix for o in ops)
    h = 0.5 * (h + h.conj().T)
    h[np.diag_indices_from(h)] += kap * np.arange(m_max + 1)
    idx = np.arange(m_max + 1)
    h[(idx[:, None] - idx[None, :]) % 4 != 0] = 0.0
    return Operator(h, Basis("fock", m_max=m_max), defect)


def lll_spectrum(model: ModelParams, m_max: int = 300, count: int = 6, units: str = "hwc") -> EigenSolution:
    """Sector-resolved lowest levels of the LLL Hamiltonian; labels are m mod 4."""
    op = lll_confined_hamiltonian(model, m_max, units)
    idx = np.arange(m_max + 1)
    blocks = {s: (op.matrix[np.ix_(idx[idx % 4 == s], idx[idx % 4 == s])], idx[idx % 4 == s])
              for s in range(4) if np.any(idx % 4 == s)}
    sol = _merge_sectors(blocks, m_max + 1, count, op.basis)
    sol.defect = op.defect
    return sol


# --------------------------------------------------------------------------
# sweeps, fits, convergence

def confinement_sweep(v_over_hwc: float, hw0_values, count: int = 10, n_max: int = 10,
                      m_max: int = 120, flux: FluxRatio = FluxRatio(1, 2)) -> SweepResult:
    """Lowest levels versus hbar w0 / V at fixed V / hbar w_c."""
    hw0_values = np.asarray(hw0_values, dtype=float)
    if hw0_values.size == 0:
        raise EmptyGrid("empty confinement grid")

    def one(x):
        sol = confined_spectrum(ModelParams(flux, v_over_hwc, float(x)), n_max, m_max, count)
        return sol.values, sol.labels

    res = _map(one, hw0_values)
    return SweepResult("hw0_over_v", hw0_values, np.array([r[0] for r in res]),
                       np.array([r[1] for r in res]),
                       metadata={"v_over_hwc": v_over_hwc, "n_max": n_max, "m_max": m_max,
                                 "flux": str(flux)})


def fit_gap_law(sweep: SweepResult, lower: int = 0, upper: int = 1):
    """Fit E_upper - E_lower = c exp(-alpha V / hbar w0).

    Returns dict with alpha, c and the R^2 of the linear fit of log(gap)
    against V / hbar w0.
    """
    x = 1.0 / np.asarray(sweep.values, dtype=float)
    e = np.asarray(sweep.energies)
    gap = e[:, upper] - e[:, lower]
    if np.any(gap <= 0):
        raise ValidationError("gap must be positive on the fitted range")
    y = np.log(gap)
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    r2 = 1 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)
    return {"alpha": float(-slope), "c": float(np.exp(icpt)), "r2": float(r2),
            "gap": gap}


def find_level_crossings(sweep: SweepResult):
    """Adjacent level pairs whose sector labels swap between grid points.

    Returns a list of (i, level) meaning levels ``level`` and ``level+1``
    exchange between points i and i+1.
    """
    if sweep.labels is None:
        raise ValidationError("crossings need sector labels")
    lab = np.asarray(sweep.labels)
    out = []
    for i in range(len(lab) - 1):
        for l in range(lab.shape[1] - 1):
            if lab[i, l] != lab[i + 1, l] and lab[i, l] == lab[i + 1, l + 1] \
                    and lab[i, l + 1] == lab[i + 1, l]:
                out.append((i, l))
    return out


def convergence_defect(model: ModelParams, n_max: int | None = None, m_max: int | None = None,
                       count: int = 6) -> float:
    """Largest change of the lowest ``count`` levels when both truncations double."""
    n_max = DEFAULT_TRUNCATION[0] if n_max is None else n_max
    m_max = DEFAULT_TRUNCATION[1] if m_max is None else m_max
    a = confined_spectrum(model, n_max, m_max, count).values
    b = confined_spectrum(model, 2 * n_max, 2 * m_max, count).values
    return float(np.max(np.abs(a - b)))
