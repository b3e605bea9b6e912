"""Energy expectation, boundary momentum flux and particle-number balance.

For any wave function and a real potential supported inside [-L, L],

    Im <psi|H|psi>_[-L,L] = -(hbar / 2m) Re <psi|p_n|psi>_boundary,

and for a resonant eigenfunction this becomes (Gamma/2) N = (hbar^2 k/2m)
(|psi(L)|^2 + |psi(-L)|^2). The sampled versions use trapezoidal quadrature
and ``numpy.gradient`` derivatives (central inside, one-sided second order
at the grid ends), so the balance holds to O(dx^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import NATURAL, ResonantState, Units
from .delta_well import DoubleDeltaModel, siegert_function, wavefunction_coefficients
from .errors import NonPositiveKappa, NotARoot, NotDecaying, SegmentOutOfGrid


@dataclass(frozen=True)
class SampledWaveFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size < 5:
            raise ValueError("need at least 5 samples")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > 1e-12 * abs(steps.mean()) * grid.size:
            raise ValueError("grid must be uniform")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def dx(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))

    @classmethod
    def from_function(cls, f, lo, hi, n):
        x = np.linspace(lo, hi, n)
        return cls(x, f(x))


@dataclass(frozen=True)
class SegmentReport:
    L: float
    energy_expectation: complex
    boundary_flux: float
    imbalance: float


def _segment(psi: SampledWaveFunction, L: float):
    dx = psi.dx
    x0 = psi.grid[0]
    i_lo = (-L - x0) / dx
    i_hi = (L - x0) / dx
    n = psi.grid.size
    if L <= 0 or i_lo < -1e-9 or i_hi > n - 1 + 1e-9:
        raise SegmentOutOfGrid(f"[-{L}, {L}] not inside [{x0}, {psi.grid[-1]}]")
    lo, hi = int(round(i_lo)), int(round(i_hi))
    if abs(lo - i_lo) > 1e-6 or abs(hi - i_hi) > 1e-6:
        raise ValueError(f"+-{L} must coincide with grid nodes")
    return lo, hi


def _derivatives(psi):
    d1 = np.gradient(psi.values, psi.dx, edge_order=2)
    d2 = np.gradient(d1, psi.dx, edge_order=2)
    return d1, d2


def energy_expectation(psi: SampledWaveFunction, V: Optional[Callable] = None,
                       L: float = 1.0, units: Units = NATURAL) -> complex:
    """Trapezoidal <psi|H|psi> over [-L, L] (not normalized)."""
    lo, hi = _segment(psi, L)
    _, d2 = _derivatives(psi)
    h_psi = -units.kinetic_scale * d2
    if V is not None:
        h_psi = h_psi + np.asarray(V(psi.grid), dtype=float) * psi.values
    integrand = np.conj(psi.values[lo:hi + 1]) * h_psi[lo:hi + 1]
    return complex(np.trapezoid(integrand, dx=psi.dx))


def momentum_flux(psi: SampledWaveFunction, L: float, units: Units = NATURAL) -> float:
    """Re <psi|p_n|psi> on the two ends of [-L, L]."""
    lo, hi = _segment(psi, L)
    d1, _ = _derivatives(psi)
    j = units.hbar * np.imag(np.conj(psi.values) * d1)
    return float(j[hi] - j[lo])


def boundary_flux(psi: SampledWaveFunction, L: float, units: Units = NATURAL,
                  V: Optional[Callable] = None) -> SegmentReport:
    """Both sides of the flux identity and their imbalance."""
    H = energy_expectation(psi, V, L, units)
    flux = momentum_flux(psi, L, units)
    imbalance = abs(H.imag + units.hbar / (2 * units.mass) * flux)
    return SegmentReport(float(L), H, flux, imbalance)


def particle_number(psi: SampledWaveFunction, L: float) -> float:
    lo, hi = _segment(psi, L)
    return float(np.trapezoid(np.abs(psi.values[lo:hi + 1]) ** 2, dx=psi.dx))


# -- exact double-delta eigenfunctions -------------------------------------

def _int_exp(c: complex, a: float, b: float) -> complex:
    """Integral of exp(c x) over [a, b]."""
    z = c * (b - a)
    if abs(z) < 1e-4:
        core = (b - a) * (1 + z / 2 + z * z / 6 + z ** 3 / 24)
    else:
        core = (np.exp(z) - 1) / c
    return complex(np.exp(c * a) * core)


def segment_norm(model: DoubleDeltaModel, K: complex, parity: str, L: float) -> float:
    """Analytic integral of |psi|^2 over [-L, L] for the outgoing solution."""
    B, F, G, C = wavefunction_coefficients(model, K, parity)
    kappa = -K.imag
    k = K.real
    l = model.l
    m = min(L, l)
    inner = (abs(F) ** 2 * _int_exp(2 * kappa, -m, m)
             + abs(G) ** 2 * _int_exp(-2 * kappa, -m, m)
             + 2 * (F * np.conj(G) * _int_exp(2j * k, -m, m)).real)
    total = inner.real
    if L > l:
        total += (abs(B) ** 2 + abs(C) ** 2) * _int_exp(2 * kappa, l, L).real
    return float(total)


def boundary_density(model: DoubleDeltaModel, K: complex, parity: str, L: float) -> float:
    """|psi(L)|^2 + |psi(-L)|^2 for L outside the potential."""
    B, _, _, C = wavefunction_coefficients(model, K, parity)
    return float((abs(B) ** 2 + abs(C) ** 2) * math.exp(2 * (-K.imag) * L))


@dataclass(frozen=True)
class GammaFlux:
    lhs: float
    rhs: float
    relative_gap: float


def gamma_flux_identity(state: ResonantState, model: DoubleDeltaModel, L: float,
                        tol: float = 1e-10, check_root: bool = True) -> GammaFlux:
    """(Gamma/2) <psi|psi> against (hbar^2 k / 2m) boundary density.

    Both sides use the closed-form eigenfunction, so the gap is set by
    rounding alone.
    """
    if L <= model.l:
        raise ValueError("L must exceed the potential half-width l")
    K = state.wavenumber
    parity = state.parity if state.parity in ("even", "odd") else "even"
    if check_root:
        res = abs(siegert_function(model, K, parity))
        if res > tol:
            raise NotARoot(f"|F(K)| = {res:.3e} exceeds {tol:.1e}")
    u = model.units
    lhs = 0.5 * state.gamma * segment_norm(model, K, parity, L)
    rhs = u.hbar ** 2 * K.real / (2 * u.mass) * boundary_density(model, K, parity, L)
    scale = max(abs(lhs), abs(rhs))
    gap = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return GammaFlux(lhs, rhs, gap)


@dataclass
class ExpandingVolume:
    t: np.ndarray
    N: np.ndarray
    L: np.ndarray

    @property
    def drift(self) -> np.ndarray:
        """d log N / dt on the sample grid."""
        if self.t.size < 2:
            return np.zeros_like(self.t)
        return np.gradient(np.log(self.N), self.t)


def expanding_volume_number(state: ResonantState, t_grid, model: DoubleDeltaModel | None = None,
                            units: Units = NATURAL, mode: str = "tail",
                            fixed_L: float | None = None) -> ExpandingVolume:
    """Particle number e^{-Gamma t/hbar} int_{-L(t)}^{L(t)} |psi|^2.

    L(t) = hbar k t / m unless ``fixed_L`` is given. ``mode="tail"`` keeps
    only the asymptotic outgoing tails, (|B|^2 + |C|^2) e^{2 kappa L}/(2 kappa),
    which is what makes N exactly constant; ``mode="full"`` integrates the
    whole eigenfunction of ``model`` analytically.
    """
    if state.kind != "resonant" or state.k <= 0 or state.gamma <= 0:
        raise NotDecaying(f"state of kind {state.kind!r} is not a decaying resonance")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t grid must be positive and increasing")
    if model is not None:
        units = model.units
    K = state.wavenumber
    kappa = state.kappa
    if fixed_L is not None:
        L = np.full_like(t, float(fixed_L))
    else:
        L = units.hbar * state.k * t / units.mass
    if model is None:
        weight = 2.0
        parity = "even"
    else:
        parity = state.parity if state.parity in ("even", "odd") else "even"
        B, _, _, C = wavefunction_coefficients(model, K, parity)
        weight = abs(B) ** 2 + abs(C) ** 2
    decay = np.exp(-state.gamma * t / units.hbar)
    if mode == "tail":
        inside = weight * np.exp(2 * kappa * L) / (2 * kappa)
    elif mode == "full":
        if model is None:
            raise ValueError("mode='full' needs the model")
        inside = np.array([segment_norm(model, K, parity, x) for x in L])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ExpandingVolume(t, decay * inside, L)


def regularized_norm(state) -> float:
    """1/sqrt(2 kappa), the Gaussian-regularized tail normalization."""
    kappa = state.kappa if isinstance(state, ResonantState) else float(state)
    if not kappa > 0:
        raise NonPositiveKappa(f"kappa = {kappa} must be positive")
    return 1.0 / math.sqrt(2.0 * kappa)
