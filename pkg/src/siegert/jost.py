"""Partial-wave Jost solutions, Jost functions, S matrix and poles.

The reduced radial function obeys

    chi'' = (U(r) + l(l+1)/r^2 - k^2) chi,     U = 2m V / hbar^2.

Jost solutions f_+-(r; k) are fixed at r_max by the outgoing/incoming
Riccati-Hankel functions (which tend to exp(+-ikr)) and integrated inward
with classical RK4. The equation is linear, so every RK4 step is a 2x2
matrix; the steps are built for all k at once and multiplied pairwise.
The Jost function is (2l+1) times the r -> 0 intercept of r^l f(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import eval_legendre

from .core import NATURAL, Units, continuum_dispersion, make_state
from .errors import AtPole, BadPotential, ExtrapolationUnstable, NoConvergence, Overflow

OVERFLOW_LIMIT = 300.0


@dataclass(frozen=True)
class RadialProblem:
    """One partial wave of a central potential V(r) (energy units)."""

    V: Callable[[np.ndarray], np.ndarray]
    l: int = 0
    r_max: float = 40.0
    r_min: float = 1e-4
    units: Units = NATURAL
    breakpoints: Sequence[float] = ()
    step: float = 0.0035
    inner_ratio: float = 0.005
    check_tail: bool = True

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise ValueError("l must be a non-negative integer")
        if not (0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if self.check_tail:
            tail = abs(float(self.U(np.array([self.r_max]))[0])) * self.r_max ** 2
            if not tail < 1e-8:
                raise BadPotential(f"r_max^2 |U(r_max)| = {tail:.2e} is not below 1e-8")

    def U(self, r):
        return np.asarray(self.V(np.asarray(r, dtype=float)), dtype=float) / self.units.kinetic_scale

    def with_l(self, l: int) -> "RadialProblem":
        return RadialProblem(self.V, l, self.r_max, self.r_min, self.units, self.breakpoints,
                             self.step, self.inner_ratio, self.check_tail)

    def grid(self) -> np.ndarray:
        """Nodes from r_max down to r_min: uniform outside, geometric near 0."""
        r_switch = min(self.step / self.inner_ratio, self.r_max)
        marks = sorted({float(self.r_max), float(r_switch),
                        *(float(b) for b in self.breakpoints if r_switch < b < self.r_max)},
                       reverse=True)
        outer = [np.array([marks[0]])]
        for hi, lo in zip(marks[:-1], marks[1:]):
            n = max(1, int(math.ceil((hi - lo) / self.step)))
            outer.append(np.linspace(hi, lo, n + 1)[1:])
        inner_marks = sorted({float(r_switch), float(self.r_min),
                              *(float(b) for b in self.breakpoints if self.r_min < b < r_switch)},
                             reverse=True)
        for hi, lo in zip(inner_marks[:-1], inner_marks[1:]):
            n = max(1, int(math.ceil(math.log(hi / lo) / math.log1p(self.inner_ratio))))
            outer.append(np.geomspace(hi, lo, n + 1)[1:])
        return np.concatenate(outer)


@dataclass(frozen=True)
class JostPair:
    k: complex
    f_plus: complex
    f_minus: complex


def riccati_hankel(l: int, rho, sign: int = +1):
    """u_l^+-(rho) -> exp(+-i rho) and its rho-derivative."""
    rho = np.asarray(rho, dtype=complex)
    s = 1j if sign > 0 else -1j
    P = np.zeros_like(rho)
    dP = np.zeros_like(rho)
    for m in range(l + 1):
        a = math.factorial(l + m) / (math.factorial(m) * math.factorial(l - m)) * (s / 2) ** m
        P = P + a * rho ** (-m)
        dP = dP - m * a * rho ** (-m - 1)
    e = np.exp(s * rho)
    return e * P, e * (s * P + dP)


def _check_overflow(prob: RadialProblem, k: np.ndarray):
    worst = float(np.max(np.abs(k.imag))) * prob.r_max
    if worst >= OVERFLOW_LIMIT:
        raise Overflow(f"|Im k| r_max = {worst:.1f} exceeds {OVERFLOW_LIMIT:g}")


def _step_matrices(prob: RadialProblem, r: np.ndarray, k: np.ndarray) -> np.ndarray:
    """RK4 propagators for chi, chi' between consecutive nodes, shape (steps, nk, 2, 2)."""
    h = np.diff(r)                       # negative: inward
    a, b = r[:-1], r[1:]
    nudge = 1e-9 * np.abs(h)
    ll = prob.l * (prob.l + 1)
    # potential sampled just inside each step so jumps sit on nodes
    Ua = prob.U(a - nudge) + ll / a ** 2
    Um = prob.U(0.5 * (a + b)) + ll / (0.5 * (a + b)) ** 2
    Ub = prob.U(b + nudge) + ll / b ** 2
    k2 = (k * k)[None, :]
    a_, m_, b_ = Ua[:, None] - k2, Um[:, None] - k2, Ub[:, None] - k2
    h = h[:, None]
    h2 = h * h
    # RK4 with A = [[0, 1], [W, 0]] written out element by element
    M = np.empty(a_.shape + (2, 2), dtype=complex)
    M[..., 0, 0] = 1 + h2 / 6 * (a_ + 2 * m_ + a_ * m_ * h2 / 4)
    M[..., 0, 1] = h * (1 + m_ * h2 / 6)
    M[..., 1, 0] = h / 6 * (a_ + 4 * m_ + b_ + m_ * (a_ + b_) * h2 / 2)
    M[..., 1, 1] = 1 + h2 / 6 * (2 * m_ + b_ + b_ * m_ * h2 / 4)
    return M


def _product(M: np.ndarray) -> np.ndarray:
    """M[n-1] @ ... @ M[0] by pairwise reduction."""
    while M.shape[0] > 1:
        if M.shape[0] % 2:
            pad = np.broadcast_to(np.eye(2, dtype=complex), (1,) + M.shape[1:])
            M = np.concatenate([M, pad])
        M = M[1::2] @ M[0::2]
    return M[0]


def _initial(prob: RadialProblem, k: np.ndarray, sign: int) -> np.ndarray:
    u, du = riccati_hankel(prob.l, k * prob.r_max, sign)
    return np.stack([u, k * du], axis=-1)


def jost_solution(prob: RadialProblem, k: complex, sign: int = +1):
    """(r, f(r), f'(r)) on the integration grid for a single k."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    _check_overflow(prob, k)
    r = prob.grid()
    M = _step_matrices(prob, r, k)[:, 0]
    y = _initial(prob, k, sign)[0]
    out = np.empty((r.size, 2), dtype=complex)
    out[0] = y
    for i in range(M.shape[0]):
        y = M[i] @ y
        out[i + 1] = y
    return r, out[:, 0], out[:, 1]


def _intercept(l: int, r: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Fit r^l f = c + d r^2 + b r^(2l+1) through three radii; returns c per k."""
    p = 2 * l + 1
    cols = [np.ones(3), r, r ** 2] if p == 1 else [np.ones(3), r ** 2, r ** p]
    X = np.column_stack(cols)
    coef = np.linalg.solve(X, g)        # g shape (3, nk)
    return coef[0]


def _jost_many(prob: RadialProblem, k: np.ndarray, sign: int, tol: float = 1e-6) -> np.ndarray:
    r = prob.grid()
    n_steps = r.size - 1
    # sample radii r_min * 2^j (j = 0..3) among the innermost geometric nodes
    per_octave = int(round(math.log(2.0) / math.log1p(prob.inner_ratio)))
    tail = min(3 * per_octave + 1, n_steps)
    M = _step_matrices(prob, r, k)
    y = _initial(prob, k, sign)[..., None]           # (nk, 2, 1)
    head = n_steps - tail
    if head > 0:
        y = _product(M[:head]) @ y
    samples = {}
    wanted = {n_steps - j * per_octave for j in range(4)}
    for i in range(head, n_steps):
        y = M[i] @ y
        if i + 1 in wanted:
            samples[i + 1] = y[:, 0, 0].copy()
    idx = sorted(samples)                             # outer ... inner
    if len(idx) < 4:
        raise ExtrapolationUnstable("radial grid too short near the origin")
    radii = r[idx]
    g = np.array([samples[i] for i in idx]) * (radii ** prob.l)[:, None]
    inner = _intercept(prob.l, radii[-3:], g[-3:])
    outer = _intercept(prob.l, radii[:3], g[:3])
    # compare against the size of r^l f itself: the intercept vanishes at a pole
    scale = np.maximum(np.abs(inner), np.max(np.abs(g), axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        gap = np.abs(inner - outer) / scale
    bad = ~(gap <= tol)
    if np.any(bad):
        raise ExtrapolationUnstable(f"intercept not settled near r_min (relative gap {gap.max():.2e})")
    return (2 * prob.l + 1) * inner


def jost_function(prob: RadialProblem, k, sign: int = +1, chunk: int = 256):
    """f_+-(k); accepts a scalar or an array of wave numbers."""
    k_arr = np.atleast_1d(np.asarray(k, dtype=complex))
    _check_overflow(prob, k_arr)
    out = np.concatenate([_jost_many(prob, k_arr[i:i + chunk], sign)
                          for i in range(0, k_arr.size, chunk)])
    out = out.reshape(np.shape(k))
    return complex(out) if np.ndim(k) == 0 else out


def jost_pair(prob: RadialProblem, k: complex) -> JostPair:
    return JostPair(complex(k), jost_function(prob, k, +1), jost_function(prob, k, -1))


def partial_wave_smatrix(prob: RadialProblem, k, pole_tol: float = 1e-12):
    """S_l(k) = (-1)^l f_-(k) / f_+(k)."""
    fp = np.asarray(jost_function(prob, k, +1))
    fm = np.asarray(jost_function(prob, k, -1))
    scale = np.maximum(np.abs(fm), 1.0)
    if np.any(np.abs(fp) < pole_tol * scale):
        raise AtPole("f_+(k) vanishes: k is an S-matrix pole")
    S = (-1) ** prob.l * fm / fp
    return complex(S) if np.ndim(k) == 0 else S


@dataclass
class CrossSection:
    k: float
    theta: np.ndarray
    dsigma: np.ndarray
    sigma_total: float
    partial: np.ndarray            # per-l contributions to sigma_total
    truncation: float              # last partial term / total

    @property
    def l_max(self) -> int:
        return self.partial.size - 1


def cross_section_from_smatrix(S_l: Sequence[complex], k: float, theta=None) -> CrossSection:
    """dsigma/dOmega = |f(theta)|^2 and sigma = (pi/k^2) sum (2l+1)|1 - S_l|^2."""
    if not k > 0:
        raise ValueError("k must be positive")
    S = np.asarray(S_l, dtype=complex)
    theta = np.linspace(0, np.pi, 181) if theta is None else np.asarray(theta, dtype=float)
    ls = np.arange(S.size)
    amp = np.zeros(theta.shape, dtype=complex)
    for l, s in zip(ls, S):
        amp += (2 * l + 1) * (s - 1) * eval_legendre(l, np.cos(theta))
    amp /= 2j * k
    partial = math.pi / k ** 2 * (2 * ls + 1) * np.abs(1 - S) ** 2
    total = float(partial.sum())
    trunc = float(partial[-1] / total) if total > 0 else 0.0
    return CrossSection(float(k), theta, np.abs(amp) ** 2, total, partial, trunc)


def cross_section(prob: RadialProblem, l_max: int, k: float, theta=None) -> CrossSection:
    S = [partial_wave_smatrix(prob.with_l(l), complex(k)) for l in range(l_max + 1)]
    return cross_section_from_smatrix(S, k, theta)


# -- poles ------------------------------------------------------------------------

@dataclass
class PoleSearch(list):
    failures: list = field(default_factory=list)

    def __init__(self, states=(), failures=()):
        super().__init__(states)
        self.failures = list(failures)


def _newton(prob, k0, tol, max_iter):
    k = complex(k0)
    for _ in range(max_iter):
        h = 1e-6 * max(1.0, abs(k))
        f, fa, fb = jost_function(prob, np.array([k, k + h, k - h]), +1)
        d = (fa - fb) / (2 * h)
        if d == 0:
            break
        dk = f / d
        k -= dk
        if abs(dk) < tol * max(1.0, abs(k)):
            return k, abs(jost_function(prob, k, +1))
    raise NoConvergence(f"Newton from {k0} stalled at {k}")


def pole_search(prob: RadialProblem, re_range=(0.0, 3.0), im_range=(-1.0, 1.0),
                n_re: int = 31, n_im: int = 31, tol: float = 1e-12,
                max_iter: int = 40) -> PoleSearch:
    """Zeros of f_+ in a rectangle of the k plane.

    A coarse scan of |f_+| seeds Newton iterations at interior local minima;
    seeds that fail are listed in ``failures`` rather than raised.
    """
    from scipy import ndimage

    re = np.linspace(*re_range, n_re)
    im = np.linspace(*im_range, n_im)
    kk = re[None, :] + 1j * im[:, None]
    mag = np.abs(jost_function(prob, kk.ravel(), +1)).reshape(kk.shape)
    low = ndimage.minimum_filter(mag, size=3, mode="nearest")
    seeds = kk[(mag == low)]
    found, failures = [], []
    span = max(re_range[1] - re_range[0], im_range[1] - im_range[0])
    for s in seeds:
        try:
            k, res = _newton(prob, s, tol, max_iter)
        except (NoConvergence, Overflow, ExtrapolationUnstable) as exc:
            failures.append((complex(s), str(exc)))
            continue
        inside = (re_range[0] - 1e-9 <= k.real <= re_range[1] + 1e-9
                  and im_range[0] - 1e-9 <= k.imag <= im_range[1] + 1e-9)
        if not inside or any(abs(k - q) < 1e-8 * max(1.0, span) for q in found):
            continue
        found.append(k)
    states = []
    for k in sorted(found, key=lambda z: (z.real, z.imag)):
        E = continuum_dispersion(k, prob.units).value
        if abs(k.real) < 1e-10:
            k = complex(0.0, k.imag)
            E = complex(E.real, 0.0)
        states.append(make_state(k, E, "none", abs(jost_function(prob, k, +1)),
                                 l=prob.l, model="jost"))
    return PoleSearch(states, failures)


# -- stock potentials --------------------------------------------------------------

def exponential_well(V0: float, a: float = 1.0) -> Callable:
    """V(r) = V0 exp(-r/a) (attractive for V0 < 0)."""
    return lambda r: V0 * np.exp(-np.asarray(r) / a)


def square_well(depth: float, radius: float) -> Callable:
    """V = -depth inside r < radius, zero outside (put radius in breakpoints)."""
    return lambda r: np.where(np.asarray(r) < radius, -depth, 0.0)
