"""Double-delta potential V(x) = V0 [delta(x+l) + delta(x-l)].

Resonances are the complex zeros of

    F(K) = 1 - 2iKa + s exp(2iKl),     s = +1 (even), -1 (odd),

with a = hbar^2 / (2 m V0). Everything here is exact in K; only the root
search is iterative.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import NATURAL, Units, continuum_dispersion, make_state
from .errors import AtPole, EmptyWindow

log = logging.getLogger(__name__)

PARITY_SIGN = {"even": 1.0, "odd": -1.0}
POLE_THRESHOLD = 1e-13


@dataclass(frozen=True)
class DoubleDeltaModel:
    a_over_l: float
    l: float = 1.0
    units: Units = NATURAL

    def __post_init__(self):
        if not (self.a_over_l > 0 and self.l > 0):
            raise ValueError("a/l and l must be positive")

    @property
    def a(self) -> float:
        return self.a_over_l * self.l

    @property
    def strength(self) -> float:
        """V0 = hbar^2 / (2 m a)."""
        return self.units.kinetic_scale / self.a


class RootList(list):
    """Roots found by :func:`siegert_roots` plus search diagnostics."""

    def __init__(self, roots=(), unconverged=0, notes=()):
        super().__init__(roots)
        self.unconverged = unconverged
        self.notes = list(notes)


def siegert_function(model: DoubleDeltaModel, K: complex, parity: str) -> complex:
    s = PARITY_SIGN[parity]
    return 1.0 - 2j * K * model.a + s * cmath.exp(2j * K * model.l)


def _siegert_derivative(model, K, parity):
    s = PARITY_SIGN[parity]
    return -2j * model.a + 2j * model.l * s * cmath.exp(2j * K * model.l)


def _newton(model, K, parity, tol, max_iter):
    f = siegert_function(model, K, parity)
    for _ in range(max_iter):
        if abs(f) < tol:
            break
        df = _siegert_derivative(model, K, parity)
        if df == 0:
            return K, f, False
        step = f / df
        for _ in range(30):
            trial = K - step
            try:
                ft = siegert_function(model, trial, parity)
            except OverflowError:
                ft = complex("inf")
            if abs(ft) < abs(f):
                break
            step *= 0.5
        else:
            return K, f, False
        K, f = trial, ft
    # one extra polishing step, kept only if it helps
    df = _siegert_derivative(model, K, parity)
    if df != 0:
        trial = K - f / df
        ft = siegert_function(model, trial, parity)
        if abs(ft) <= abs(f):
            K, f = trial, ft
    return K, f, abs(f) < tol


def circle_etas(model: DoubleDeltaModel, xi: float, eta_max: float | None = None,
                n: int = 2000) -> tuple:
    """All eta >= 0 on the modulus curve |1 - 2iKa| = exp(2 kappa l) at xi.

    In l = 1 units the curve reads exp(4 eta) - (1 - c eta)^2 = (c xi)^2
    with c = 2a/l.
    """
    c = 2.0 * model.a_over_l
    target = (c * xi) ** 2

    def g(eta):
        return math.exp(4 * eta) - (1 - c * eta) ** 2 - target

    if eta_max is None:
        # beyond this exp(4 eta) dominates every other term
        eta_max = 2.0 + 0.5 * math.log1p(c * c * (1 + xi * xi)) + c
    grid = np.linspace(0.0, eta_max, n)
    vals = np.exp(4 * grid) - (1 - c * grid) ** 2 - target
    out = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0 and i > 0:
            out.append(float(grid[i]))
        elif a * b < 0:
            out.append(brentq(g, grid[i], grid[i + 1], xtol=1e-14))
    return tuple(out)


def has_closed_branch(model: DoubleDeltaModel) -> bool:
    """True when the modulus curve splits off a loop near the origin."""
    c = 2.0 * model.a_over_l
    eta = np.linspace(1e-6, 3.0 + c, 4000)
    return bool(np.any(np.exp(4 * eta) - (1 - c * eta) ** 2 < 0))


def _seeds(model, parity, lo, hi):
    offset = 0.5 if parity == "even" else 0.0
    xis = {x for n in range(int(hi / math.pi) + 2)
           if lo < (x := (n + offset) * math.pi) <= hi + math.pi / 2}
    xis.update(np.arange(max(lo, 0.05), hi + 0.25, math.pi / 4).tolist())
    seeds = []
    for xi in sorted(xis):
        etas = {0.1, 0.5, 1.0, 2.0}
        etas.update(circle_etas(model, xi, n=400))
        for eta in etas:
            seeds.append(complex(xi, -max(eta, 0.05)) / model.l)
    return seeds


def siegert_roots(model: DoubleDeltaModel, parity: str, window=(0.0, 2 * math.pi),
                  tol: float = 1e-13, include_mirror: bool = False,
                  max_iter: int = 60) -> RootList:
    """Resonant roots of the requested parity with k*l inside ``window``.

    ``window`` is the half-open interval (lo, hi] in units of k*l. Roots
    are deduplicated at |dK| l < 1e-8 and sorted by Re K. With
    ``include_mirror`` the anti-resonant partner (-k, kappa) of every root
    is appended.
    """
    if parity not in PARITY_SIGN:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = map(float, window)
    if not (hi > lo >= 0.0):
        raise EmptyWindow(f"window {window!r} is empty")

    found: list[complex] = []
    residuals: list[float] = []
    failed = 0
    for seed in _seeds(model, parity, lo, hi):
        K, f, ok = _newton(model, seed, parity, tol, max_iter)
        if not ok:
            failed += 1
            continue
        xi = K.real * model.l
        if not (lo < xi <= hi) or xi <= 1e-8 or K.imag >= 0:
            continue
        if any(abs(K - other) * model.l < 1e-8 for other in found):
            continue
        found.append(K)
        residuals.append(abs(f))

    order = np.argsort([K.real for K in found])
    roots = RootList(unconverged=failed)
    for i in order:
        K = found[i]
        E = continuum_dispersion(K, model.units).value
        roots.append(make_state(K, E, parity, residuals[i], kind="resonant"))
    if include_mirror:
        roots.extend([st.mirror() for st in list(roots)])
    if failed:
        log.debug("%d of the seeds did not converge", failed)
    if has_closed_branch(model):
        roots.notes.append(
            "modulus curve has a closed branch near the origin; the lowest "
            "even pole may be absent"
        )
    return roots


def all_roots(model: DoubleDeltaModel, window=(0.0, 2 * math.pi), **kw) -> list:
    """Both parities merged and sorted by Re K."""
    roots = list(siegert_roots(model, "even", window, **kw))
    roots += list(siegert_roots(model, "odd", window, **kw))
    return sorted(roots, key=lambda st: (st.k < 0, abs(st.k)))


def even_root_count(a_over_l: float, window=(0.0, math.pi)) -> int:
    return len(siegert_roots(DoubleDeltaModel(a_over_l), "even", window))


def missing_pole_threshold(lo: float = 3.5, hi: float = 4.0, xtol: float = 1e-7) -> float:
    """Bisect the a/l at which the lowest even pole leaves (0, pi)."""
    if not (even_root_count(lo) == 1 and even_root_count(hi) == 0):
        raise ValueError("bracket does not straddle the disappearance")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if even_root_count(mid) >= 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ParityCurveSample:
    xi: float
    eta_fixed_point: float
    eta_circle: tuple = field(default_factory=tuple)


def phase_curve(model: DoubleDeltaModel, xi):
    """eta = l/2a + xi / tan(2 xi)."""
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / (2.0 * model.a_over_l) + xi / np.tan(2.0 * xi)


def parity_curves(model: DoubleDeltaModel, xi_grid: Sequence[float]) -> list:
    """Sample both curve families whose crossings are the roots."""
    xi_grid = np.asarray(xi_grid, dtype=float)
    if np.any(xi_grid <= 0):
        raise ValueError("xi grid must be strictly positive")
    eta_phase = phase_curve(model, xi_grid)
    return [
        ParityCurveSample(float(x), float(e), circle_etas(model, float(x)))
        for x, e in zip(xi_grid, eta_phase)
    ]


def curve_crossings(model: DoubleDeltaModel, samples: Sequence[ParityCurveSample]) -> list:
    """Linearly interpolated crossings (xi, eta, parity) of sampled curves."""
    out = []
    for s0, s1 in zip(samples[:-1], samples[1:]):
        e0, e1 = s0.eta_fixed_point, s1.eta_fixed_point
        # skip the poles of xi / tan(2 xi)
        if not (math.isfinite(e0) and math.isfinite(e1)):
            continue
        if math.floor(2 * s0.xi / math.pi) != math.floor(2 * s1.xi / math.pi):
            continue
        for c0 in s0.eta_circle:
            c1 = min(s1.eta_circle, key=lambda c: abs(c - c0), default=None)
            if c1 is None:
                continue
            d0, d1 = e0 - c0, e1 - c1
            if d0 == 0 or d0 * d1 < 0:
                w = d0 / (d0 - d1) if d0 != d1 else 0.0
                xi = s0.xi + w * (s1.xi - s0.xi)
                eta = c0 + w * (c1 - c0)
                K = complex(xi, -eta) / model.l
                parity = min(PARITY_SIGN, key=lambda p: abs(siegert_function(model, K, p)))
                out.append((xi, eta, parity))
    return out


class Scattering(NamedTuple):
    r: complex
    t: complex


def s_matrix_denominator(model: DoubleDeltaModel, K: complex) -> complex:
    a, l = model.a, model.l
    return (2j * K * a - 1) ** 2 - cmath.exp(4j * K * l)


def s_matrix(model: DoubleDeltaModel, K) -> Scattering:
    """Reflection and transmission amplitudes r(K), t(K)."""
    K = complex(K)
    a, l = model.a, model.l
    D = s_matrix_denominator(model, K)
    if abs(D) < POLE_THRESHOLD:
        raise AtPole(f"K = {K} is a pole (|D| = {abs(D):.3e})")
    r = (4j * K * a * cmath.cos(2 * K * l) + 2j * cmath.sin(2 * K * l)) / D
    t = -4 * K * K * a * a / D
    return Scattering(r, t)


def transmission(model: DoubleDeltaModel, k) -> np.ndarray:
    """T = |t(k)|^2 on real k, vectorized."""
    k = np.asarray(k, dtype=float)
    a, l = model.a, model.l
    D = (2j * k * a - 1) ** 2 - np.exp(4j * k * l)
    return np.abs(-4 * k * k * a * a / D) ** 2


@dataclass
class TransmissionScan:
    k: np.ndarray
    T: np.ndarray
    peaks: np.ndarray
    roots: list

    def rows(self):
        return zip(self.k, self.T)


def local_maxima(y) -> np.ndarray:
    y = np.asarray(y)
    return np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1


def transmission_scan(model: DoubleDeltaModel, k_grid) -> TransmissionScan:
    """T(k) on a real grid with its local maxima and the overlay poles."""
    k = np.asarray(k_grid, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k grid must be positive")
    T = transmission(model, k)
    window = (0.0, float(k.max()) * model.l)
    return TransmissionScan(k, T, k[local_maxima(T)], all_roots(model, window))


def wavefunction_coefficients(model: DoubleDeltaModel, K: complex, parity: str):
    """(B, F, G, C) of the outgoing-wave solution with F = 1.

    psi = B e^{-iKx} (x < -l), F e^{iKx} + G e^{-iKx} (|x| < l),
    C e^{iKx} (x > l).
    """
    s = PARITY_SIGN[parity]
    F = 1.0 + 0j
    G = s * F
    C = (cmath.exp(1j * K * model.l) + s * cmath.exp(-1j * K * model.l)) \
        * cmath.exp(-1j * K * model.l)
    B = s * C
    return B, F, G, C


def wavefunction(model: DoubleDeltaModel, K: complex, parity: str, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    B, F, G, C = wavefunction_coefficients(model, K, parity)
    l = model.l
    return np.where(
        x < -l, B * np.exp(-1j * K * x),
        np.where(x > l, C * np.exp(1j * K * x),
                 F * np.exp(1j * K * x) + G * np.exp(-1j * K * x)),
    )
