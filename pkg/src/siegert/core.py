"""Units, complex wave numbers/energies and the two dispersion maps.

Sign conventions follow the resonance literature: a wave number is written
K = k - i*kappa and an energy E = epsilon - i*Gamma/2, so a decaying
resonance has k > 0, kappa > 0 and Gamma > 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

Parity = Literal["even", "odd", "none"]
Kind = Literal["bound", "anti_bound", "resonant", "anti_resonant", "continuum"]

RETARDED = "retarded_decaying"
ADVANCED = "advanced_growing"
BRANCHES = (RETARDED, ADVANCED)

# |Gamma| at or below this (in local energy units) counts as a real energy.
GAMMA_TOL = 1e-10


@dataclass(frozen=True)
class Units:
    """Scales for the continuum (hbar, mass) and the lattice (dx, hopping)."""

    hbar: float = 1.0
    mass: float = 1.0
    lattice_dx: float = 1.0
    hopping_th: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "lattice_dx", "hopping_th"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")

    @property
    def kinetic_scale(self) -> float:
        """hbar^2 / 2m."""
        return self.hbar**2 / (2.0 * self.mass)


NATURAL = Units()


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite component {v!r}")


@dataclass(frozen=True)
class ComplexWaveNumber:
    """K = k - i*kappa."""

    k: float
    kappa: float

    def __post_init__(self):
        _check_finite(self.k, self.kappa)

    @classmethod
    def from_complex(cls, K: complex) -> "ComplexWaveNumber":
        K = complex(K)
        return cls(K.real, -K.imag)

    @property
    def value(self) -> complex:
        return complex(self.k, -self.kappa)

    def __complex__(self):
        return self.value


@dataclass(frozen=True)
class ComplexEnergy:
    """E = epsilon - i*Gamma/2."""

    epsilon: float
    half_gamma: float

    def __post_init__(self):
        _check_finite(self.epsilon, self.half_gamma)

    @classmethod
    def from_complex(cls, E: complex) -> "ComplexEnergy":
        E = complex(E)
        return cls(E.real, -E.imag)

    @property
    def value(self) -> complex:
        return complex(self.epsilon, -self.half_gamma)

    @property
    def gamma(self) -> float:
        return 2.0 * self.half_gamma

    def __complex__(self):
        return self.value


WaveNumberLike = Union[ComplexWaveNumber, complex, float]
EnergyLike = Union[ComplexEnergy, complex, float]


def as_complex(x) -> complex:
    """Plain complex value of a wave number, energy or number."""
    if isinstance(x, (ComplexWaveNumber, ComplexEnergy)):
        return x.value
    return complex(x)


@dataclass(frozen=True)
class ResonantState:
    """A discrete solution (K, E) of an outgoing-wave eigenproblem."""

    K: ComplexWaveNumber
    E: ComplexEnergy
    parity: Parity = "none"
    kind: Kind = "resonant"
    residual: float = 0.0
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def wavenumber(self) -> complex:
        return self.K.value

    @property
    def energy(self) -> complex:
        return self.E.value

    @property
    def k(self) -> float:
        return self.K.k

    @property
    def kappa(self) -> float:
        return self.K.kappa

    @property
    def gamma(self) -> float:
        return self.E.gamma

    def mirror(self) -> "ResonantState":
        """Time-reversed partner (-k, kappa) with conjugate energy."""
        K = -self.wavenumber.conjugate()
        E = self.energy.conjugate()
        kind = {"resonant": "anti_resonant", "anti_resonant": "resonant"}.get(
            self.kind, self.kind
        )
        return ResonantState(
            ComplexWaveNumber.from_complex(K),
            ComplexEnergy.from_complex(E),
            self.parity,
            kind,
            self.residual,
            dict(self.meta),
        )


def continuum_dispersion(K: WaveNumberLike, units: Units = NATURAL) -> ComplexEnergy:
    """E = hbar^2 K^2 / 2m."""
    K = as_complex(K)
    return ComplexEnergy.from_complex(units.kinetic_scale * K * K)


def decay_width(K: WaveNumberLike, units: Units = NATURAL) -> float:
    """Gamma = 2 hbar^2 k kappa / m for a continuum wave number."""
    K = ComplexWaveNumber.from_complex(as_complex(K))
    return 2.0 * units.hbar**2 * K.k * K.kappa / units.mass


def lattice_dispersion(K: WaveNumberLike, units: Units = NATURAL) -> ComplexEnergy:
    """E = -t_h cos(K dx) of the tight-binding chain."""
    K = as_complex(K)
    return ComplexEnergy.from_complex(
        -units.hopping_th * cmath.cos(K * units.lattice_dx)
    )


def outgoing_z(E: complex, hopping: float = 1.0, kind: str = RETARDED,
               real_tol: float = 1e-12) -> complex:
    """Root z = exp(iK dx) of z + 1/z = -2E/t selected by branch.

    ``retarded_decaying`` picks the root with Re K in (0, pi/dx), i.e.
    Im(z - 1/z) > 0, which is the retarded self-energy continued through
    the band into the lower half plane. ``advanced_growing`` is its mirror,
    Re K in (-pi/dx, 0). On the real axis outside the band both branches
    return the decaying root |z| < 1, the limit taken from the physical
    sheet.
    """
    if kind not in BRANCHES:
        raise ValueError(f"unknown branch {kind!r}")
    E = complex(E)
    w = -E / hopping
    s = cmath.sqrt(1.0 - w * w)
    z1 = w + 1j * s
    z2 = w - 1j * s
    if abs(E.imag) <= real_tol * hopping and abs(E.real) > hopping:
        return z1 if abs(z1) < 1.0 else z2
    chirality = (z1 - 1.0 / z1).imag
    if kind == RETARDED:
        return z1 if chirality > 0 else z2
    return z1 if chirality < 0 else z2


def lattice_wavenumber(E: EnergyLike, units: Units = NATURAL,
                       kind: str = RETARDED) -> ComplexWaveNumber:
    """Inverse of :func:`lattice_dispersion` on the chosen branch.

    For the retarded branch Re K lies in [0, pi/dx]; for the advanced
    branch in [-pi/dx, 0].
    """
    z = outgoing_z(as_complex(E), units.hopping_th, kind)
    K = -1j * cmath.log(z) / units.lattice_dx
    if kind == RETARDED and K.real < 0:
        K += 2 * math.pi / units.lattice_dx
    return ComplexWaveNumber.from_complex(K)


def classify(K: complex, E: complex, tol: float = GAMMA_TOL) -> Kind:
    """Bound / anti-bound / resonant / anti-resonant from (K, E)."""
    K = complex(K)
    E = complex(E)
    if abs(E.imag) <= tol:
        return "bound" if K.imag > 0 else "anti_bound"
    return "resonant" if E.imag < 0 else "anti_resonant"


def make_state(K: complex, E: complex, parity: Parity = "none",
               residual: float = 0.0, kind: Kind | None = None,
               tol: float = GAMMA_TOL, **meta) -> ResonantState:
    if kind is None:
        kind = classify(K, E, tol)
    return ResonantState(
        ComplexWaveNumber.from_complex(K),
        ComplexEnergy.from_complex(E),
        parity,
        kind,
        float(residual),
        meta,
    )


def relative_error(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)))


@dataclass(frozen=True)
class WaveField:
    """Complex amplitudes on sites -L..L, an optional adatom slot and a time."""

    sites: np.ndarray
    adatom: complex | None = None
    time: float = 0.0

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=complex)
        if sites.ndim != 1 or sites.size % 2 != 1:
            raise ValueError("sites must be a 1-D array of odd length 2L+1")
        if not np.all(np.isfinite(sites)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "sites", sites)
        if self.adatom is not None:
            object.__setattr__(self, "adatom", complex(self.adatom))

    @property
    def half_width(self) -> int:
        return (self.sites.size - 1) // 2

    @property
    def x(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def at(self, x: int) -> complex:
        return complex(self.sites[x + self.half_width])

    def vector(self) -> np.ndarray:
        """Sites followed by the adatom amplitude, if present."""
        if self.adatom is None:
            return self.sites.copy()
        return np.append(self.sites, self.adatom)
