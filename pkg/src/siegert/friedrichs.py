"""Chain-plus-adatom (Friedrichs-Fano) model solved exactly.

A single adatom with level E_d hangs off site 0 with coupling g. Even
solutions psi(x) = B z^|x|, psi(d) = F, with z = exp(iK), reduce the
problem to the quartic

    z^4 + 2 Ed z^3 + 4 g^2 z^2 - 2 Ed z - 1 = 0   (Ed, g in units of t_h).

Odd solutions vanish at the origin, never see the adatom and are ignored.
"""

from __future__ import annotations

import cmath
import string
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (ComplexEnergy, ComplexWaveNumber, ResonantState, Units, WaveField,
                   classify, make_state)
from .lattice import eigenvalues_small

KIND_ORDER = {"bound": 0, "resonant": 1, "anti_resonant": 2, "anti_bound": 3, "continuum": 4}


@dataclass(frozen=True)
class FriedrichsModel:
    g_tilde: float
    Ed_tilde: float
    hopping: float = 1.0

    def __post_init__(self):
        if not self.hopping > 0:
            raise ValueError("hopping must be positive")
        if not self.g_tilde >= 0:
            raise ValueError("g_tilde must be non-negative")

    @property
    def g(self) -> float:
        return self.g_tilde * self.hopping

    @property
    def Ed(self) -> float:
        return self.Ed_tilde * self.hopping

    @property
    def units(self) -> Units:
        return Units(hopping_th=self.hopping)

    def quartic(self) -> np.ndarray:
        """Monic coefficients, highest power first."""
        e, g = self.Ed_tilde, self.g_tilde
        return np.array([1.0, 2 * e, 4 * g * g, -2 * e, -1.0])


@dataclass(frozen=True)
class FriedrichsState:
    z: complex
    K: ComplexWaveNumber
    E: ComplexEnergy
    kind: str
    B_over_F: complex
    residual: float
    label: str = ""

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

    def as_resonant(self) -> ResonantState:
        return make_state(self.wavenumber, self.energy, "even", self.residual, kind=self.kind,
                          z=self.z, label=self.label, model="friedrichs")


def quartic_residual(model: FriedrichsModel, z: complex) -> float:
    return float(abs(np.polyval(model.quartic(), z)))


def companion(coeffs) -> np.ndarray:
    """Companion matrix of a monic polynomial (highest power first)."""
    c = np.asarray(coeffs, dtype=complex)
    n = c.size - 1
    C = np.zeros((n, n), dtype=complex)
    C[0, :] = -c[1:] / c[0]
    C[1:, :-1] = np.eye(n - 1)
    return C


def _kind(z: complex, K: complex, E: complex, tol: float) -> str:
    if abs(abs(z) - 1.0) <= tol and abs(E.imag) <= tol:
        return "continuum"
    return classify(K, E, tol)


def quartic_roots(model: FriedrichsModel, tol: float = 1e-10) -> list[FriedrichsState]:
    """The four roots, each polished by one Newton step, labelled a, b, c, d.

    Labels go bound (highest energy first), resonant, anti-resonant,
    anti-bound, then unit-modulus continuum roots of the decoupled limit.
    """
    coeffs = model.quartic()
    deriv = np.polyder(coeffs)
    t = model.hopping
    states = []
    for z in eigenvalues_small(companion(coeffs)):
        dp = np.polyval(deriv, z)
        if dp != 0:
            z = z - np.polyval(coeffs, z) / dp
        z = complex(z)
        K = -1j * cmath.log(z)
        E = -0.5 * t * (z + 1 / z)
        if abs(z.imag) <= 1e-14 * abs(z):
            z = complex(z.real, 0.0)
            K = -1j * cmath.log(z)
            E = complex(E.real, 0.0)
        kind = _kind(z, K, E, tol)
        ratio = (E - model.Ed) / model.g if model.g > 0 else complex("nan")
        states.append(FriedrichsState(z, ComplexWaveNumber.from_complex(K),
                                      ComplexEnergy.from_complex(E), kind, ratio,
                                      quartic_residual(model, z)))
    states.sort(key=lambda s: (KIND_ORDER[s.kind], -s.energy.real, s.energy.imag, -s.k))
    return [FriedrichsState(s.z, s.K, s.E, s.kind, s.B_over_F, s.residual, string.ascii_lowercase[i])
            for i, s in enumerate(states)]


def energy_plane_check(state, model: FriedrichsModel) -> float:
    """min over signs of |(E - E_d) sqrt(E^2 - t^2) -+ g^2|, in units of t^2."""
    E = complex(state.energy if hasattr(state, "energy") else state)
    t = model.hopping
    lhs = (E - model.Ed) * cmath.sqrt(E * E - t * t)
    g2 = model.g ** 2
    return float(min(abs(lhs - g2), abs(lhs + g2)) / t ** 2)


def eigenfunction(state: FriedrichsState, model: FriedrichsModel, half_width: int) -> WaveField:
    """B z^|x| on sites -L..L with the adatom amplitude F = 1."""
    if model.g == 0:
        raise ValueError("decoupled adatom has no chain amplitude")
    x = np.arange(-half_width, half_width + 1)
    B = (state.energy - model.Ed) / model.g
    return WaveField(B * state.z ** np.abs(x), 1.0)


def stencil_residual(field: WaveField, model: FriedrichsModel, E: complex) -> np.ndarray:
    """|(H psi - E psi)| on interior sites and the adatom (boundaries excluded)."""
    psi = field.sites
    t = model.hopping
    n0 = field.half_width
    Hpsi = -0.5 * t * (psi[:-2] + psi[2:])
    Hpsi[n0 - 1] += model.g * field.adatom
    out = np.abs(Hpsi - E * psi[1:-1])
    ad = abs(model.g * psi[n0] + model.Ed * field.adatom - E * field.adatom)
    return np.append(out, ad)


@dataclass
class Sweep:
    Ed: np.ndarray
    z: np.ndarray        # (n, 4), columns are tracked roots
    g_tilde: float
    hopping: float = 1.0

    @property
    def K(self) -> np.ndarray:
        return -1j * np.log(self.z)

    @property
    def E(self) -> np.ndarray:
        return -0.5 * self.hopping * (self.z + 1 / self.z)

    def kinds(self, tol: float = 1e-10) -> np.ndarray:
        K, E = self.K, self.E
        return np.array([[_kind(self.z[i, j], K[i, j], E[i, j], tol) for j in range(4)]
                         for i in range(self.z.shape[0])])


def sweep(g_tilde: float, Ed_values, hopping: float = 1.0) -> Sweep:
    """Roots along a path of impurity levels, tracked by optimal assignment."""
    Ed_values = np.asarray(Ed_values, dtype=float)
    rows = []
    for e in Ed_values:
        roots = np.array([s.z for s in quartic_roots(FriedrichsModel(g_tilde, e, hopping))])
        if rows:
            prev = rows[-1]
            cost = np.abs(prev[:, None] - roots[None, :])
            _, cols = linear_sum_assignment(cost)
            roots = roots[cols]
        rows.append(roots)
    return Sweep(Ed_values, np.array(rows), g_tilde, hopping)
