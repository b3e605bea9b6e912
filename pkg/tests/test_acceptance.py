"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (with the measured
numbers) before asserting, so the verdicts show up in the pytest log.
"""

import cmath
import math
import time

import numpy as np
import pytest

from oracles import (REFERENCE_ROOTS, TWO_SITE_BOUND, TWO_SITE_ODD, TWO_SITE_RESONANCE,
                     random_smooth_wavefunction, square_well_bound_kappas)
from siegert import delta_well as dw
from siegert import dynamics as dy
from siegert import flux as fx
from siegert import friedrichs as fr
from siegert import jost as js
from siegert import lattice as lt
from siegert.core import decay_width


@pytest.fixture
def report(capsys):
    def emit(n, checks, detail=""):
        ok = all(checks.values())
        failed = [name for name, good in checks.items() if not good]
        with capsys.disabled():
            line = f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}"
            if failed:
                line += f"  failed: {', '.join(failed)}"
            print(line)
        assert ok, failed
    return emit


def test_criterion_01_reference_roots(report):
    t0 = time.perf_counter()
    worst_K = worst_E = 0.0
    for a, parity, K, E in REFERENCE_ROOTS:
        roots = dw.siegert_roots(dw.DoubleDeltaModel(a), parity)
        best = min(roots, key=lambda s: abs(s.wavenumber - K))
        worst_K = max(worst_K, abs(best.wavenumber - K) / abs(K))
        worst_E = max(worst_E, abs(best.energy - E) / abs(E))
    elapsed = time.perf_counter() - t0
    report(1, {"K": worst_K <= 1e-12, "E": worst_E <= 1e-12, "runtime": elapsed < 1.0},
           f"rows={len(REFERENCE_ROOTS)} max relK={worst_K:.1e} max relE={worst_E:.1e} t={elapsed:.2f}s")


def test_criterion_02_missing_pole(report):
    counts = {a: dw.even_root_count(a) for a in (0.1, 1.0, 3.5, 4.0, 10.0)}
    expected = {0.1: 1, 1.0: 1, 3.5: 1, 4.0: 0, 10.0: 0}
    scan = dw.transmission_scan(dw.DoubleDeltaModel(4.0), np.linspace(0.01, math.pi, 4000))
    peaks = [p for p in scan.peaks if 0 < p < math.pi]
    report(2, {"counts": counts == expected, "peak at a/l=4": len(peaks) >= 1},
           f"counts={counts} peaks(a/l=4)={np.round(peaks, 4).tolist()}")


def test_criterion_03_exact_two_site(report):
    states = lt.exact_two_site_reference(1)
    E = [s.energy for s in states]
    bound = min(abs(e - TWO_SITE_BOUND) for e in E)
    res = min(abs(e - TWO_SITE_RESONANCE) for e in E)
    anti = min(abs(e - TWO_SITE_RESONANCE.conjugate()) for e in E)
    odd = min(abs(e - TWO_SITE_ODD) for e in E)
    report(3, {"bound": bound < 1e-12, "resonance": res < 1e-12, "anti": anti < 1e-12,
               "odd": odd < 1e-12},
           f"errors bound={bound:.1e} res={res:.1e} anti={anti:.1e} odd={odd:.1e}")


def test_criterion_04_self_consistent_iteration(report):
    model = lt.LatticeModel.two_site()
    lt.self_consistent_pole(model, -0.3 - 0.1j)          # warm-up imports and caches
    t0 = time.perf_counter()
    state, trace = lt.self_consistent_pole(model, -0.3 - 0.1j)
    elapsed = time.perf_counter() - t0
    err = trace.errors(TWO_SITE_RESONANCE)
    first = int(np.argmax(err < 1e-10)) if np.any(err < 1e-10) else None
    keep = err > 0
    q = np.arange(err.size)[keep]
    y = np.log10(err[keep])
    slope, icpt = np.polyfit(q, y, 1)
    r2 = 1 - np.sum((y - slope * q - icpt) ** 2) / np.sum((y - y.mean()) ** 2)
    report(4, {"converged": first is not None and first <= 40, "R2": r2 > 0.98,
               "slope": slope < 0, "runtime": elapsed < 0.1},
           f"|E-E*|<1e-10 at q={first} slope={slope:.3f} R2={r2:.4f} t={elapsed * 1e3:.1f}ms")


def test_criterion_05_smatrix_root_equivalence(report):
    worst_D = 0.0
    for a, parity, K, E in REFERENCE_ROOTS:
        worst_D = max(worst_D, abs(dw.s_matrix_denominator(dw.DoubleDeltaModel(a), K)))
    rng = np.random.default_rng(2024)
    worst_U = 0.0
    for a in (0.1, 1.0, 10.0):
        model = dw.DoubleDeltaModel(a)
        for k in rng.uniform(0.01, 30.0, 1000):
            r, t = dw.s_matrix(model, k)
            worst_U = max(worst_U, abs(abs(r) ** 2 + abs(t) ** 2 - 1))
    report(5, {"denominator": worst_D < 1e-10, "unitarity": worst_U < 1e-12},
           f"max|D|={worst_D:.1e} max||r|^2+|t|^2-1|={worst_U:.1e}")


def _lattice_gamma(K, t=1.0):
    # -2 Im E for E = -t cos K; the continuum relation 2 k kappa is its small-K limit
    return 2 * t * math.sin(K.real) * math.sinh(-K.imag)


def test_criterion_06_flux_identities(report):
    # Gamma = 2 hbar^2 k kappa / m for the continuum solvers
    cont = [s for a in (0.1, 1.0, 3.5, 4.0, 10.0) for s in dw.all_roots(dw.DoubleDeltaModel(a))]
    cont += list(js.pole_search(js.RadialProblem(js.exponential_well(-20.0), 3),
                                (0.3, 0.8), (-0.2, 0.0), 11, 9))
    cont += list(js.pole_search(js.RadialProblem(js.square_well(15.0, 1.0), 0, breakpoints=[1.0]),
                                (-0.05, 0.05), (0.2, 5.4), 3, 55))
    gap_c = max(abs(s.gamma - decay_width(s.wavenumber)) / max(abs(s.gamma), 1e-300)
                if s.gamma != 0 else abs(decay_width(s.wavenumber)) for s in cont)
    # the lattice solvers obey the same identity with the lattice dispersion
    latt = [s for s in lt.exact_two_site_reference(1.0)]
    latt.append(lt.self_consistent_pole(lt.LatticeModel.two_site(), -0.3 - 0.1j)[0])
    latt += [s.as_resonant() for s in fr.quartic_roots(fr.FriedrichsModel(0.1, -0.5))]
    gap_l = max(abs(s.gamma - _lattice_gamma(s.wavenumber)) / abs(s.gamma)
                if s.gamma != 0 else abs(_lattice_gamma(s.wavenumber)) for s in latt)
    # flux identity: Richardson ratio on 100 random smooth functions
    ratios = []
    for seed in range(100):
        f = lambda x, seed=seed: random_smooth_wavefunction(np.random.default_rng(seed), x)
        a = fx.boundary_flux(fx.SampledWaveFunction.from_function(f, -5, 5, 401), 4.0).imbalance
        b = fx.boundary_flux(fx.SampledWaveFunction.from_function(f, -5, 5, 801), 4.0).imbalance
        ratios.append(a / b)
    ratios = np.array(ratios)
    # expanding-volume tail number
    s = dw.all_roots(dw.DoubleDeltaModel(1.0))[0]
    ev = fx.expanding_volume_number(s, np.linspace(5, 50, 46), dw.DoubleDeltaModel(1.0), mode="tail")
    drift = np.ptp(ev.N) / np.mean(ev.N)
    report(6, {"gamma continuum": gap_c < 1e-12, "gamma lattice": gap_l < 1e-12,
               "richardson": bool(np.all(np.abs(ratios - 4) <= 0.8)), "tail": drift < 1e-10},
           f"Gamma gap cont={gap_c:.1e} ({len(cont)} roots) latt={gap_l:.1e} ({len(latt)} roots) "
           f"ratio in [{ratios.min():.3f}, {ratios.max():.3f}] tail drift={drift:.1e}")


def test_criterion_07_friedrichs_quartic(report):
    model = fr.FriedrichsModel(0.1, -0.5)
    roots = fr.quartic_roots(model)
    quartic = max(s.residual for s in roots)
    plane = max(fr.energy_plane_check(s, model) for s in roots)
    kinds = sorted(s.kind for s in roots)
    free = fr.quartic_roots(fr.FriedrichsModel(0.0, -0.5))
    expected = [1, -1, cmath.exp(1j * math.pi / 3), cmath.exp(-1j * math.pi / 3)]
    factor = max(min(abs(s.z - e) for s in free) for e in expected)
    report(7, {"quartic": quartic < 1e-12, "energy plane": plane < 1e-10,
               "classification": kinds == ["anti_resonant", "bound", "bound", "resonant"],
               "g=0": factor < 1e-12},
           f"max quartic res={quartic:.1e} max Eq-plane res={plane:.1e} kinds={kinds} g=0 err={factor:.1e}")


def _run(label, dt, t_end=60.0, record_every=10, half_width=200):
    model = fr.FriedrichsModel(0.1, -0.5)
    s = {r.label: r for r in fr.quartic_roots(model)}[label]
    cfg = dy.EvolutionConfig(dt=dt, t_end=t_end, record_every=record_every)
    t0 = time.perf_counter()
    evo = dy.evolve(model, fr.eigenfunction(s, model, half_width), s, cfg)
    return s, evo, time.perf_counter() - t0


def test_criterion_08_dynamics(report):
    c, evo, elapsed = _run("c", 0.02)
    rate = dy.decay_rate(evo.times, evo.adatom)
    # |Psi| decays at Gamma/2hbar, so twice the amplitude rate is compared with Gamma
    rate_err = abs(2 * rate - c.gamma) / c.gamma
    drift = 0.0
    for label in "ab":
        _, e, _ = _run(label, 0.02)
        amp = np.abs(e.sites)
        drift = max(drift, np.max(np.abs(amp - amp[0])) / np.max(amp[0]),
                    np.max(np.abs(np.abs(e.adatom) - 1)))
    _, coarse, _ = _run("c", 0.1, 20, 10, 40)
    _, fine, _ = _run("c", 0.05, 20, 20, 40)
    ratio = dy.eigenstate_phase_check(coarse, c.energy) / dy.eigenstate_phase_check(fine, c.energy)
    report(8, {"decay rate": rate_err < 0.01, "stationary": drift < 1e-8,
               "RK4 order": abs(ratio - 16) <= 0.3 * 16, "runtime": elapsed < 5.0},
           f"2*rate/Gamma-1={rate_err:.1e} bound drift={drift:.1e} Richardson={ratio:.2f} "
           f"t(L=200)={elapsed:.2f}s")


def test_criterion_09_jost(report):
    free = lambda r: np.zeros_like(r)
    k = np.linspace(0.1, 3.0, 30)
    s_free = max(np.max(np.abs(js.partial_wave_smatrix(js.RadialProblem(free, l), k) - 1))
                 for l in range(4))
    well = js.exponential_well(-3.0)
    unit = max(np.max(np.abs(np.abs(js.partial_wave_smatrix(js.RadialProblem(well, l), k)) - 1))
               for l in range(4))
    oracle = square_well_bound_kappas(30.0, 1.0)
    found = js.pole_search(js.RadialProblem(js.square_well(15.0, 1.0), 0, breakpoints=[1.0]),
                           (-0.05, 0.05), (0.2, 5.4), 3, 55)
    kap = sorted((s.wavenumber.imag for s in found), reverse=True)
    bound_err = (max(abs(a - b) for a, b in zip(kap, oracle))
                 if len(kap) == len(oracle) else math.inf)
    report(9, {"free S=1": s_free < 1e-7, "unitarity": unit < 1e-7, "square well": bound_err < 1e-6},
           f"max|S_free-1|={s_free:.1e} max||S|-1|={unit:.1e} bound-state err={bound_err:.1e} "
           f"({len(kap)} states)")


def test_criterion_10_property_coverage(report):
    # no printed coordinates exist; the convergence and classification
    # properties of criteria 4 and 7 stand in for value reproduction
    _, trace = lt.self_consistent_pole(lt.LatticeModel.two_site(), -0.3 - 0.1j)
    res = np.asarray(trace.residuals)
    monotone = bool(np.all(np.diff(res[1:]) < 0))
    slope = trace.log_slope(TWO_SITE_RESONANCE)
    sw = fr.sweep(0.1, np.linspace(-2, 2, 401))
    jump = np.max(np.abs(np.diff(sw.E, axis=0)))
    report(10, {"monotone residuals": monotone, "negative slope": slope < 0,
                "sweep continuity": jump < 10 * 0.01},
           f"iteration slope={slope:.3f}/step monotone={monotone} max sweep |dE|={jump:.2e}")
