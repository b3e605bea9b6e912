"""RK4 time evolution on a truncated chain with fixed effective-potential ends.

The generator is dPsi/dt = -(i/hbar) H_eff Psi, where H_eff is the
tight-binding matrix on sites -L..L (plus the adatom for the Friedrichs
model) with V_eff = -(t_h/2) exp(iK) on both end sites. V_eff is frozen at
the wave number of the state being evolved, so only that eigenstate sees an
exact boundary.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import WaveField
from .errors import DimensionMismatch, UnstableStep
from .friedrichs import FriedrichsModel
from .lattice import LatticeModel

OVERFLOW_GUARD = 1e100
DT_MAX = 0.1


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 0.02
    t_end: float = 60.0
    record_every: int = 10
    V_eff: complex | None = None
    hbar: float = 1.0
    dt_max: float = DT_MAX

    def __post_init__(self):
        if not (0 < self.dt <= self.dt_max):
            raise ValueError(f"dt must lie in (0, {self.dt_max}]")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Evolution:
    times: np.ndarray
    sites: np.ndarray                 # (frames, 2L+1)
    adatom: np.ndarray | None         # (frames,)
    V_eff: complex
    config: EvolutionConfig
    hopping: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def half_width(self) -> int:
        return (self.sites.shape[1] - 1) // 2

    def site(self, x: int) -> np.ndarray:
        return self.sites[:, x + self.half_width]

    def frame(self, i: int) -> WaveField:
        ad = None if self.adatom is None else self.adatom[i]
        return WaveField(self.sites[i], ad, float(self.times[i]))

    def __len__(self):
        return self.times.size


def boundary_potential(K: complex, hopping: float = 1.0) -> complex:
    """V_eff = -(t_h/2) exp(iK) for a lattice wave number K (dx = 1)."""
    return -0.5 * hopping * cmath.exp(1j * complex(K))


class _Generator:
    """Applies -(i/hbar) H_eff to a packed (sites [+ adatom]) vector."""

    def __init__(self, model, n_sites: int, V_eff: complex, hbar: float):
        L = (n_sites - 1) // 2
        self.n = n_sites
        self.off = -0.5 * model.hopping
        diag = np.zeros(n_sites, dtype=complex)
        if isinstance(model, LatticeModel):
            diag += model.diagonal()
            self.g = None
        else:
            self.g = model.g
            self.Ed = model.Ed
        diag[0] += V_eff
        diag[-1] += V_eff
        self.diag = diag
        self.centre = L
        self.factor = -1j / hbar

    def __call__(self, y):
        psi = y[: self.n]
        out = np.empty_like(y)
        h = out[: self.n]
        np.multiply(self.diag, psi, out=h)
        h[:-1] += self.off * psi[1:]
        h[1:] += self.off * psi[:-1]
        if self.g is not None:
            F = y[self.n]
            h[self.centre] += self.g * F
            out[self.n] = self.g * psi[self.centre] + self.Ed * F
        out *= self.factor
        return out


def evolve(model, init: WaveField, state=None, cfg: EvolutionConfig = EvolutionConfig()) -> Evolution:
    """Classical RK4 from ``init`` to ``cfg.t_end``.

    The boundary term comes from ``cfg.V_eff`` if set, otherwise from the
    wave number of ``state`` (any object with ``wavenumber``).
    """
    n = init.sites.size
    if isinstance(model, LatticeModel):
        if n != model.dimension:
            raise DimensionMismatch(f"field has {n} sites, model needs {model.dimension}")
        if init.adatom is not None:
            raise DimensionMismatch("plain chain has no adatom slot")
    elif isinstance(model, FriedrichsModel):
        if init.adatom is None:
            raise DimensionMismatch("adatom amplitude missing")
    else:
        raise TypeError(f"unsupported model {type(model).__name__}")
    if cfg.V_eff is not None:
        V_eff = complex(cfg.V_eff)
    elif state is not None:
        V_eff = boundary_potential(state.wavenumber, model.hopping)
    else:
        raise ValueError("need a state or an explicit V_eff")

    f = _Generator(model, n, V_eff, cfg.hbar)
    y = init.vector()
    dt = cfg.dt
    steps = cfg.steps
    times = [init.time]
    frames = [y.copy()]
    for step in range(1, steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % cfg.record_every == 0 or step == steps:
            if not np.max(np.abs(y)) < OVERFLOW_GUARD:
                raise UnstableStep(f"amplitude exceeded {OVERFLOW_GUARD:g} at t = {init.time + step * dt}")
            times.append(init.time + step * dt)
            frames.append(y.copy())
    frames = np.array(frames)
    adatom = frames[:, n] if init.adatom is not None else None
    return Evolution(np.array(times), frames[:, :n], adatom, V_eff, cfg, model.hopping)


def eigenstate_phase_check(evo: Evolution, E: complex) -> float:
    """max |Psi(x,t) - psi(x) exp(-iEt/hbar)| over recorded frames."""
    E = complex(E.value if hasattr(E, "value") else E)
    t = evo.times - evo.times[0]
    phase = np.exp(-1j * E * t / evo.config.hbar)
    dev = np.abs(evo.sites - evo.sites[0][None, :] * phase[:, None]).max()
    if evo.adatom is not None:
        dev = max(dev, np.abs(evo.adatom - evo.adatom[0] * phase).max())
    return float(dev)


@dataclass
class NormSeries:
    t: np.ndarray
    N: np.ndarray
    flux: np.ndarray

    def continuity_residual(self) -> np.ndarray:
        """dN/dt + flux, with dN/dt from second-order differences."""
        return np.gradient(self.N, self.t, edge_order=2) + self.flux


def _current(a, b, hopping, hbar):
    """Particle current from site with amplitude a to its right neighbour b."""
    return hopping / hbar * np.imag(np.conj(a) * b)


def window_norm_series(evo: Evolution, L_window: int) -> NormSeries:
    """Particle number in |x| <= L_window and the net outward current.

    For the full window the missing outside neighbour is the ghost value
    z psi(+-L), z = -2 V_eff / t_h.
    """
    L = evo.half_width
    if not (0 <= L_window <= L):
        raise ValueError(f"window {L_window} outside 0..{L}")
    c = L
    psi = evo.sites
    inside = psi[:, c - L_window: c + L_window + 1]
    N = np.sum(np.abs(inside) ** 2, axis=1)
    if evo.adatom is not None:
        N = N + np.abs(evo.adatom) ** 2
    hbar = evo.config.hbar
    if L_window < L:
        right_out = psi[:, c + L_window + 1]
        left_out = psi[:, c - L_window - 1]
    else:
        z = -2.0 * evo.V_eff / evo.hopping
        right_out = z * psi[:, -1]
        left_out = z * psi[:, 0]
    j_right = _current(psi[:, c + L_window], right_out, evo.hopping, hbar)
    j_left = _current(left_out, psi[:, c - L_window], evo.hopping, hbar)
    return NormSeries(evo.times.copy(), N, j_right - j_left)


def decay_rate(t: np.ndarray, amplitude: np.ndarray, floor: float = 1e-6) -> float:
    """Least-squares slope of -log|amplitude| where it stays above ``floor``."""
    a = np.abs(amplitude)
    keep = a > floor
    return float(-np.polyfit(t[keep], np.log(a[keep]), 1)[0])


def write_frames(evo: Evolution, out_dir, energy: complex | None = None, label: str = "") -> Path:
    """One CSV per frame (x, re, im) plus manifest.json; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x = np.arange(-evo.half_width, evo.half_width + 1)
    entries = []
    for i, t in enumerate(evo.times):
        name = f"frame_{i:05d}.csv"
        data = np.column_stack([x, evo.sites[i].real, evo.sites[i].imag])
        np.savetxt(out / name, data, fmt=["%d", "%.17g", "%.17g"], delimiter=",",
                   header="units: x [dx], psi [dimensionless], t [hbar/t_h]\nx,re,im",
                   comments="# ")
        entry = {"index": i, "t": float(t), "file": name}
        if evo.adatom is not None:
            entry["adatom"] = [float(evo.adatom[i].real), float(evo.adatom[i].imag)]
        entries.append(entry)
    cfg = asdict(evo.config)
    cfg["V_eff"] = None if cfg["V_eff"] is None else [cfg["V_eff"].real, cfg["V_eff"].imag]
    manifest = {
        "label": label,
        "units": {"time": "hbar/t_h", "energy": "t_h", "length": "dx"},
        "hopping": evo.hopping,
        "V_eff": [evo.V_eff.real, evo.V_eff.imag],
        "config": cfg,
        "frames": entries,
    }
    if energy is not None:
        E = complex(energy)
        manifest["E"] = [E.real, E.imag]
        manifest["Gamma"] = -2.0 * E.imag
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_frames(manifest_path) -> Evolution:
    """Inverse of :func:`write_frames`."""
    manifest_path = Path(manifest_path)
    m = json.loads(manifest_path.read_text())
    frames, ads, times = [], [], []
    for entry in m["frames"]:
        data = np.loadtxt(manifest_path.parent / entry["file"], delimiter=",")
        frames.append(data[:, 1] + 1j * data[:, 2])
        times.append(entry["t"])
        if "adatom" in entry:
            ads.append(complex(*entry["adatom"]))
    cfg = dict(m["config"])
    if cfg.get("V_eff") is not None:
        cfg["V_eff"] = complex(*cfg["V_eff"])
    return Evolution(np.array(times), np.array(frames), np.array(ads) if ads else None,
                     complex(*m["V_eff"]), EvolutionConfig(**cfg), m["hopping"])
