"""Open tight-binding chains closed by energy-dependent boundary potentials.

Sites run from -L to L. Outside that window the potential vanishes and the
wave function is a pure outgoing exponential z^|n| with z = exp(iK dx), so
the two boundary sites pick up V_eff(E) = -(t_h/2) z(E) on the diagonal.
A resonance is a fixed point E* that is an eigenvalue of H_eff(E*).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from .core import (RETARDED, BRANCHES, ResonantState, Units, classify, lattice_wavenumber,
                   make_state, outgoing_z)
from .errors import NoConvergenceQR, NotConverged, OscillationDetected

MAX_DENSE_DIM = 64


@dataclass(frozen=True)
class LatticeModel:
    """Chain of 2L+1 sites with a real onsite potential strictly inside +-L."""

    half_width: int
    onsite: Mapping[int, float] = field(default_factory=dict)
    hopping: float = 1.0
    dx: float = 1.0

    def __post_init__(self):
        if int(self.half_width) != self.half_width or self.half_width < 1:
            raise ValueError("half_width must be a positive integer")
        if not self.hopping > 0 or not self.dx > 0:
            raise ValueError("hopping and dx must be positive")
        clean = {}
        for site, value in dict(self.onsite).items():
            site = int(site)
            if abs(site) >= self.half_width:
                raise ValueError(f"site {site} must lie strictly inside +-{self.half_width}")
            if not math.isfinite(value):
                raise ValueError("onsite potential must be finite")
            clean[site] = float(value)
        object.__setattr__(self, "half_width", int(self.half_width))
        object.__setattr__(self, "onsite", clean)

    @classmethod
    def two_site(cls, V0: float = 1.0, hopping: float = 1.0) -> "LatticeModel":
        """Equal barriers V0 on sites +-1 of a five-site window."""
        return cls(2, {-1: V0, 1: V0}, hopping)

    @property
    def dimension(self) -> int:
        return 2 * self.half_width + 1

    @property
    def units(self) -> Units:
        return Units(lattice_dx=self.dx, hopping_th=self.hopping)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def diagonal(self) -> np.ndarray:
        return np.array([self.onsite.get(int(n), 0.0) for n in self.sites])


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray
    energy_used: complex
    kind: str = RETARDED

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def effective_potential(E: complex, hopping: float = 1.0, kind: str = RETARDED) -> complex:
    """V_eff(E) = -(t_h/2) z(E) = (E - i sqrt(t_h^2 - E^2))/2 on the chosen branch."""
    return -0.5 * hopping * outgoing_z(E, hopping, kind)


def _tight_binding(model: LatticeModel) -> np.ndarray:
    n = model.dimension
    H = np.diag(model.diagonal().astype(complex))
    off = -0.5 * model.hopping * np.ones(n - 1)
    H += np.diag(off, 1) + np.diag(off, -1)
    return H


def assemble(model: LatticeModel, E: complex, kind: str = RETARDED) -> EffectiveHamiltonian:
    H = _tight_binding(model)
    v = effective_potential(E, model.hopping, kind)
    H[0, 0] += v
    H[-1, -1] += v
    return EffectiveHamiltonian(H, complex(E), kind)


# -- determinant landscape --------------------------------------------------

@dataclass
class DeterminantScan:
    re: np.ndarray
    im: np.ndarray
    log_d: np.ndarray          # shape (len(im), len(re))
    minima: list

    @property
    def deepest(self) -> complex:
        if not self.minima:
            raise ValueError("no interior local minimum in the mesh")
        return self.minima[0]


def _log_det_rows(model, re, im_row, kind):
    out = np.empty(len(re))
    base = _tight_binding(model)
    mats = np.empty((len(re), model.dimension, model.dimension), dtype=complex)
    for j, x in enumerate(re):
        E = complex(x, im_row)
        M = base.copy()
        v = effective_potential(E, model.hopping, kind)
        M[0, 0] += v
        M[-1, -1] += v
        M -= E * np.eye(model.dimension)
        mats[j] = M
    sign, logabs = np.linalg.slogdet(mats)
    out[:] = np.where(sign == 0, -np.inf, logabs)
    return out


def determinant_scan(model: LatticeModel, re: Sequence[float], im: Sequence[float],
                     kind: str = RETARDED, workers: int | None = None) -> DeterminantScan:
    """log|det(H_eff(E) - E)| on the mesh re x im.

    LU with partial pivoting per node; interior local minima (3x3
    neighbourhood) are returned deepest first as pole candidates.
    """
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise ValueError("mesh must be finite")
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda y: _log_det_rows(model, re, y, kind), im))
    else:
        rows = [_log_det_rows(model, re, y, kind) for y in im]
    log_d = np.vstack(rows)
    finite = np.where(np.isfinite(log_d), log_d, -1e300)
    low = ndimage.minimum_filter(finite, size=3, mode="nearest")
    mask = finite == low
    mask[0, :] = mask[-1, :] = False
    mask[:, 0] = mask[:, -1] = False
    iy, ix = np.nonzero(mask)
    order = np.argsort(finite[iy, ix])
    minima = [complex(re[ix[i]], im[iy[i]]) for i in order]
    return DeterminantScan(re, im, log_d, minima)


# -- dense eigen-solver -------------------------------------------------------

def _as_matrix(H) -> np.ndarray:
    return np.asarray(H.matrix if isinstance(H, EffectiveHamiltonian) else H, dtype=complex)


def eigenvalues_small(H, max_dim: int = MAX_DENSE_DIM, vectors: bool = False):
    """All eigenvalues (and optionally right eigenvectors) of a small dense matrix."""
    A = _as_matrix(H)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] > max_dim:
        raise ValueError(f"dimension {A.shape[0]} exceeds dense limit {max_dim}")
    try:
        if vectors:
            return np.linalg.eig(A)
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceQR(str(exc)) from exc


def eigenvector(H, eigenvalue: complex, iterations: int = 2, anchor: int | None = None) -> np.ndarray:
    """Inverse iteration at a known eigenvalue.

    Normalized so the ``anchor`` entry (default: middle site) equals 1; if
    that entry vanishes (odd states) the largest entry is used instead.
    """
    A = _as_matrix(H)
    n = A.shape[0]
    scale = max(np.linalg.norm(A, np.inf), 1.0)
    shift = complex(eigenvalue) + 1e-13 * scale
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    M = A - shift * np.eye(n)
    for _ in range(max(iterations, 1)):
        try:
            x = np.linalg.solve(M, x)
        except np.linalg.LinAlgError:
            M = A - (shift + 1e-10 * scale) * np.eye(n)
            x = np.linalg.solve(M, x)
        x /= np.linalg.norm(x)
    idx = n // 2 if anchor is None else anchor
    if abs(x[idx]) < 1e-8 * np.max(np.abs(x)):
        idx = int(np.argmax(np.abs(x)))
    return x / x[idx]


def parity_of(v: np.ndarray, tol: float = 1e-6) -> str:
    v = np.asarray(v)
    norm = np.linalg.norm(v)
    if np.linalg.norm(v - v[::-1]) <= tol * norm:
        return "even"
    if np.linalg.norm(v + v[::-1]) <= tol * norm:
        return "odd"
    return "none"


# -- self-consistent pole iteration -------------------------------------------

@dataclass
class IterationTrace:
    postulates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    def errors(self, target: complex | None = None) -> np.ndarray:
        """|E^(q) - E*| for every postulate (E* defaults to the last one)."""
        target = self.postulates[-1] if target is None else target
        return np.abs(np.asarray(self.postulates) - target)

    def log_slope(self, target: complex) -> float:
        """Least-squares slope of log10 |E^(q) - E*| against q."""
        err = self.errors(target)
        keep = err > 0
        q = np.arange(err.size)[keep]
        return float(np.polyfit(q, np.log10(err[keep]), 1)[0])


def _closest(values: np.ndarray, E: complex) -> complex:
    d = np.abs(values - E)
    best = d.min()
    ties = np.nonzero(d <= best + 1e-14)[0]
    i = ties[np.argmin(np.abs(values[ties].imag))]
    return complex(values[i])


def self_consistent_pole(model: LatticeModel, E0: complex, tol: float = 1e-12,
                         max_iter: int = 200, kind: str = RETARDED,
                         mixing: float = 1.0, max_period: int = 8):
    """Iterate E <- eigenvalue of H_eff(E) closest to E until it stops moving.

    Returns (ResonantState, IterationTrace). ``mixing`` < 1 under-relaxes the
    update. Raises NotConverged or OscillationDetected with the trace.
    """
    if kind not in BRANCHES:
        raise ValueError(f"unknown branch {kind!r}")
    if not (0 < mixing <= 1):
        raise ValueError("mixing must lie in (0, 1]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    E = complex(E0)
    if not (math.isfinite(E.real) and math.isfinite(E.imag)):
        raise ValueError("E0 must be finite")
    trace = IterationTrace([E])
    for _ in range(max_iter):
        lam = _closest(eigenvalues_small(assemble(model, E, kind)), E)
        E_new = E + mixing * (lam - E)
        trace.postulates.append(E_new)
        trace.residuals.append(abs(E_new - E))
        E = E_new
        if trace.residuals[-1] < tol:
            trace.converged = True
            break
        p = trace.postulates
        for period in range(2, max_period + 1):
            if len(p) > 2 * period and all(
                abs(p[-1 - j] - p[-1 - j - period]) < tol for j in range(period)
            ):
                raise OscillationDetected(f"postulates cycle with period {period}", trace)
    if not trace.converged:
        raise NotConverged(f"no convergence after {max_iter} steps "
                           f"(last residual {trace.residuals[-1]:.3e})", trace)
    H = assemble(model, E, kind)
    lam = _closest(eigenvalues_small(H), E)
    vec = eigenvector(H, lam)
    K = lattice_wavenumber(E, model.units, kind).value
    state = make_state(K, E, parity_of(vec), abs(lam - E), model="lattice",
                       eigenvector=vec, branch=kind, iterations=trace.iterations)
    return state, trace


# -- exact two-site reference -------------------------------------------------

def two_site_cubic(V0_over_th: float) -> np.ndarray:
    """Coefficients of 2V z^3 - z^2 + 2V z + 1 (highest power first)."""
    v = float(V0_over_th)
    return np.array([2 * v, -1.0, 2 * v, 1.0])


def _state_from_z(z: complex, hopping: float, parity: str, residual: float) -> ResonantState:
    K = -1j * np.log(complex(z))
    E = -0.5 * hopping * (z + 1 / z)
    if abs(E.imag) <= 1e-13 * hopping:
        E = complex(E.real, 0.0)
    return make_state(K, E, parity, residual, kind=classify(K, E), z=complex(z))


def exact_two_site_reference(V0_over_th: float, hopping: float = 1.0) -> list[ResonantState]:
    """Odd bound state plus the three even cubic roots, sorted by Re E then Im E."""
    v = float(V0_over_th)
    if not v > 0:
        raise ValueError("V0/t_h must be positive")
    coeffs = two_site_cubic(v)
    states = [_state_from_z(-1 / (2 * v), hopping, "odd", 0.0)]
    for z in np.roots(coeffs):
        # one Newton polish step
        z = z - np.polyval(coeffs, z) / np.polyval(np.polyder(coeffs), z)
        states.append(_state_from_z(z, hopping, "even", abs(np.polyval(coeffs, z))))
    states.sort(key=lambda s: (s.energy.real, s.energy.imag))
    return states
