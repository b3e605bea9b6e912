"""Command-line front end: ``siegert <group> <action> [options]``.

Every run writes comma-separated files with ``#`` header lines (17
significant digits, LF endings) and a ``manifest.json`` echoing the fully
resolved configuration, so ``siegert replay <manifest>`` reproduces it.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import delta_well as dw
from . import dynamics as dyn
from . import flux
from . import friedrichs as fr
from . import jost
from . import lattice as lat
from .core import ADVANCED, RETARDED
from .errors import ConfigError, NoConvergence, NoConvergenceQR, NotConverged, SiegertError

OUTPUT_ENV = "SIEGERT_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FIGURES = ("fig3", "fig4", "fig5", "fig8", "fig9", "fig12", "fig13")


# -- value parsing -------------------------------------------------------------

def parse_complex(text) -> complex:
    """'re,im' or any Python complex literal."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip()
    if "," in s:
        re_, im_ = s.split(",")
        return complex(float(re_), float(im_))
    return complex(s.replace(" ", ""))


def parse_pair(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    lo, hi = str(text).split(",")
    return float(lo), float(hi)


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable
    default: object
    help: str = ""
    choices: tuple | None = None


@dataclass(frozen=True)
class Command:
    group: str
    action: str
    run: Callable
    options: tuple
    help: str = ""


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, tuple):
        return list(v)
    return v


# -- CSV output ------------------------------------------------------------------

def write_csv(path: Path, columns, rows, units: str, comment: str = "") -> Path:
    """Deterministic CSV: '#' header lines, '%.17g' floats, LF endings."""
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write(f"# units: {units}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (str, np.str_)):
                cells.append(str(v))
            elif isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            else:
                cells.append("%.17g" % float(v))
        buf.write(",".join(cells) + "\n")
    path.write_text(buf.getvalue(), newline="\n")
    return path


# -- delta well --------------------------------------------------------------------

DELTA_UNITS = "K in 1/l, E in hbar^2/(m l^2)"


def _delta_roots(p, out):
    model = dw.DoubleDeltaModel(p["a_over_l"])
    parities = ("even", "odd") if p["parity"] == "both" else (p["parity"],)
    rows = []
    for parity in parities:
        for s in dw.siegert_roots(model, parity, window=(0.0, p["kmax"])):
            rows.append((parity, s.k, s.kappa, s.energy.real, s.gamma / 2, s.residual))
    return [write_csv(out / "roots.csv", ["parity", "k", "kappa", "epsilon", "half_gamma", "residual"],
                      rows, DELTA_UNITS, f"a/l = {p['a_over_l']}")]


def _delta_curves(p, out):
    model = dw.DoubleDeltaModel(p["a_over_l"])
    xi = np.linspace(p["kmax"] / p["n"], p["kmax"], p["n"])
    samples = dw.parity_curves(model, xi)
    rows = [(s.xi, s.eta_fixed_point, *(list(s.eta_circle) + [float("nan")] * 3)[:3]) for s in samples]
    files = [write_csv(out / "curves.csv", ["xi", "eta_phase", "eta_modulus_1", "eta_modulus_2",
                                            "eta_modulus_3"], rows, "xi = k l, eta = kappa l")]
    files.append(write_csv(out / "crossings.csv", ["xi", "eta", "parity"],
                           [(x, e, par) for x, e, par in dw.curve_crossings(model, samples)],
                           "xi = k l, eta = kappa l"))
    return files


def _delta_transmission(p, out):
    model = dw.DoubleDeltaModel(p["a_over_l"])
    scan = dw.transmission_scan(model, np.linspace(p["kmax"] / p["n"], p["kmax"], p["n"]))
    files = [write_csv(out / "transmission.csv", ["k", "T"], scan.rows(), "k in 1/l")]
    files.append(write_csv(out / "peaks.csv", ["k_peak"], [(k,) for k in scan.peaks], "k in 1/l"))
    return files


def _delta_threshold(p, out):
    value = dw.missing_pole_threshold(xtol=p["xtol"])
    return [write_csv(out / "threshold.csv", ["a_over_l"], [(value,)], "dimensionless")]


# -- flux ------------------------------------------------------------------------------

def _pick_root(model, parity, index):
    roots = dw.siegert_roots(model, parity)
    if index >= len(roots):
        raise ConfigError(f"only {len(roots)} {parity} roots in the default window")
    return roots[index]


def _flux_report(p, out):
    model = dw.DoubleDeltaModel(p["a_over_l"])
    s = _pick_root(model, p["parity"], p["index"])
    g = flux.gamma_flux_identity(s, model, p["L"])
    rows = [(p["L"], s.k, s.kappa, s.gamma, g.lhs, g.rhs, g.relative_gap)]
    return [write_csv(out / "gamma_flux.csv", ["L", "k", "kappa", "Gamma", "lhs", "rhs", "relative_gap"],
                      rows, DELTA_UNITS)]


def _flux_expanding(p, out):
    model = dw.DoubleDeltaModel(p["a_over_l"])
    s = _pick_root(model, p["parity"], p["index"])
    t = np.linspace(p["t_start"], p["t_end"], p["n"])
    ev = flux.expanding_volume_number(s, t, model, mode=p["mode"])
    rows = zip(ev.t, ev.L, ev.N, ev.drift)
    return [write_csv(out / "expanding.csv", ["t", "L", "N", "dlogN_dt"], rows,
                      "t in m l^2/hbar, L in l")]


# -- lattice ------------------------------------------------------------------------------

def load_lattice_model(path) -> lat.LatticeModel:
    """INI model file: [model] half_width, hopping; [onsite] site = value."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError(f"cannot read model file {path}")
    if "model" not in cp:
        raise ConfigError("model file needs a [model] section")
    known = {"half_width", "hopping"}
    extra = set(cp["model"]) - known
    if extra:
        raise ConfigError(f"unknown model keys: {sorted(extra)}")
    onsite = {int(k): float(v) for k, v in cp["onsite"].items()} if "onsite" in cp else {}
    return lat.LatticeModel(cp["model"].getint("half_width"), onsite,
                            cp["model"].getfloat("hopping", 1.0))


def _lattice_model(p):
    if p["model"]:
        return load_lattice_model(p["model"])
    if p["preset"] == "two-site":
        return lat.LatticeModel.two_site(p["v0"])
    return lat.LatticeModel(p["half_width"], {}, 1.0)


def _branch(name):
    return {"retarded": RETARDED, "advanced": ADVANCED}[name]


def _lattice_solve(p, out):
    model = _lattice_model(p)
    try:
        state, trace = lat.self_consistent_pole(model, p["e0"], p["tol"], p["max_iter"],
                                                _branch(p["branch"]), p["mixing"])
    except NotConverged as exc:
        _write_trace(out, exc.trace)
        raise
    files = [_write_trace(out, trace)]
    rows = [(state.energy.real, state.energy.imag, state.k, state.kappa, state.kind, state.parity,
             trace.iterations, state.residual)]
    files.append(write_csv(out / "pole.csv", ["ReE", "ImE", "k", "kappa", "kind", "parity",
                                              "iterations", "residual"], rows, "E in t_h, K in 1/dx"))
    return files


def _write_trace(out, trace):
    rows = [(q, E.real, E.imag, trace.residuals[q - 1] if q else float("nan"))
            for q, E in enumerate(trace.postulates)]
    return write_csv(out / "trace.csv", ["q", "ReE", "ImE", "residual"], rows, "E in t_h")


def _lattice_scan(p, out):
    model = _lattice_model(p)
    re = np.linspace(*p["re"], p["n_re"])
    im = np.linspace(*p["im"], p["n_im"])
    scan = lat.determinant_scan(model, re, im, _branch(p["branch"]), workers=p["threads"])
    rows = ((x, y, scan.log_d[i, j]) for i, y in enumerate(im) for j, x in enumerate(re))
    files = [write_csv(out / "scan.csv", ["ReE", "ImE", "logD"], rows, "E in t_h")]
    files.append(write_csv(out / "minima.csv", ["ReE", "ImE"],
                           [(m.real, m.imag) for m in scan.minima], "E in t_h"))
    return files


def _lattice_exact(p, out):
    rows = [(s.energy.real, s.energy.imag, s.k, s.kappa, s.kind, s.parity, s.residual)
            for s in lat.exact_two_site_reference(p["v0"])]
    return [write_csv(out / "exact.csv", ["ReE", "ImE", "k", "kappa", "kind", "parity", "residual"],
                      rows, "E in t_h, K in 1/dx")]


# -- friedrichs ---------------------------------------------------------------------------

FR_UNITS = "E in t_h, K in 1/dx"


def _fr_model(p):
    return fr.FriedrichsModel(p["g"], p["ed"])


def _state_rows(states):
    return [(s.label, s.z.real, s.z.imag, s.k, -s.kappa, s.energy.real, s.energy.imag, s.kind,
             s.residual) for s in states]


def _fr_roots(p, out):
    states = fr.quartic_roots(_fr_model(p))
    return [write_csv(out / "roots.csv", ["root_id", "Rez", "Imz", "ReK", "ImK", "ReE", "ImE", "kind",
                                          "quartic_residual"], _state_rows(states), FR_UNITS)]


def _sweep_rows(sw):
    K, E, kinds = sw.K, sw.E, sw.kinds()
    for i, e in enumerate(sw.Ed):
        for j in range(4):
            yield (e, j, K[i, j].real, K[i, j].imag, E[i, j].real, E[i, j].imag, kinds[i, j])


def _fr_sweep(p, out):
    sw = fr.sweep(p["g"], np.linspace(*p["ed_range"], p["n"]))
    return [write_csv(out / "sweep.csv", ["Ed", "root_id", "ReK", "ImK", "ReE", "ImE", "kind"],
                      _sweep_rows(sw), FR_UNITS)]


def _fr_state(model, label):
    states = {s.label: s for s in fr.quartic_roots(model)}
    if label not in states:
        raise ConfigError(f"unknown root id {label!r}; have {sorted(states)}")
    return states[label]


def _fr_eigenfunction(p, out):
    model = _fr_model(p)
    s = _fr_state(model, p["root"])
    w = fr.eigenfunction(s, model, p["half_width"])
    rows = zip(w.x, w.sites.real, w.sites.imag, np.abs(w.sites))
    return [write_csv(out / f"eigenfunction_{s.label}.csv", ["x", "re", "im", "abs"], rows,
                      "x in dx; adatom amplitude F = 1")]


# -- dynamics ------------------------------------------------------------------------------

def load_friedrichs_model(path) -> fr.FriedrichsModel:
    cp = configparser.ConfigParser()
    if not cp.read(path) or "model" not in cp:
        raise ConfigError(f"cannot read [model] section from {path}")
    extra = set(cp["model"]) - {"g_tilde", "ed_tilde", "hopping"}
    if extra:
        raise ConfigError(f"unknown model keys: {sorted(extra)}")
    m = cp["model"]
    return fr.FriedrichsModel(m.getfloat("g_tilde"), m.getfloat("ed_tilde"), m.getfloat("hopping", 1.0))


def _dyn_run(p, out):
    model = load_friedrichs_model(p["model"]) if p["model"] else _fr_model(p)
    s = _fr_state(model, p["state"])
    init = fr.eigenfunction(s, model, p["half_width"])
    cfg = dyn.EvolutionConfig(dt=p["dt"], t_end=p["t_end"], record_every=p["record_every"])
    evo = dyn.evolve(model, init, s, cfg)
    manifest = dyn.write_frames(evo, out / "frames", s.energy, label=s.label)
    series = dyn.window_norm_series(evo, p["half_width"])
    files = [manifest, write_csv(out / "norm.csv", ["t", "N", "flux"],
                                 zip(series.t, series.N, series.flux), "t in hbar/t_h")]
    return files


# -- jost -----------------------------------------------------------------------------------

def _potential(p):
    if p["potential"] == "exponential":
        return jost.exponential_well(p["v0"], p["range"]), ()
    if p["potential"] == "square":
        return jost.square_well(-p["v0"], p["range"]), (p["range"],)
    return (lambda r: 0.0 * np.asarray(r)), ()


def _radial(p, l=None):
    V, bps = _potential(p)
    return jost.RadialProblem(V, p["l"] if l is None else l, p["r_max"], breakpoints=bps)


def _jost_smatrix(p, out):
    prob = _radial(p)
    k = np.linspace(*p["k_range"], p["n"])
    S = jost.partial_wave_smatrix(prob, k)
    phase = np.unwrap(np.angle(S))
    return [write_csv(out / "smatrix.csv", ["k", "ReS", "ImS", "absS", "phase"],
                      zip(k, S.real, S.imag, np.abs(S), phase), "k in 1/range")]


def _jost_poles(p, out):
    prob = _radial(p)
    found = jost.pole_search(prob, p["re"], p["im"], p["n_re"], p["n_im"])
    rows = [(s.k, -s.kappa, s.energy.real, s.energy.imag, s.kind, s.residual) for s in found]
    files = [write_csv(out / "poles.csv", ["ReK", "ImK", "ReE", "ImE", "kind", "residual"], rows,
                       "k in 1/range, E in hbar^2/(m range^2)")]
    if found.failures:
        files.append(write_csv(out / "failed_seeds.csv", ["ReK", "ImK"],
                               [(s.real, s.imag) for s, _ in found.failures], "k in 1/range"))
    return files


def _jost_sigma(p, out):
    cs = jost.cross_section(_radial(p, 0), p["l_max"], p["k"])
    files = [write_csv(out / "dsigma.csv", ["theta", "dsigma_domega"], zip(cs.theta, cs.dsigma),
                       "theta in rad, sigma in range^2", f"sigma_total = {cs.sigma_total!r}")]
    files.append(write_csv(out / "partial.csv", ["l", "sigma_l"], enumerate(cs.partial),
                           "range^2", f"truncation = {cs.truncation!r}"))
    return files


# -- figures ----------------------------------------------------------------------------------

FIG_A = (0.1, 1.0, 3.5, 4.0, 10.0)


def _fig3(out):
    files = []
    xi = np.linspace(0.01, 2 * math.pi, 1200)
    for a in FIG_A:
        model = dw.DoubleDeltaModel(a)
        samples = dw.parity_curves(model, xi)
        rows = [(s.xi, s.eta_fixed_point, *(list(s.eta_circle) + [float("nan")] * 3)[:3]) for s in samples]
        files.append(write_csv(out / f"fig3_curves_a{a:g}.csv",
                               ["xi", "eta_phase", "eta_modulus_1", "eta_modulus_2", "eta_modulus_3"],
                               rows, "xi = k l, eta = kappa l"))
        roots = [(s.parity, s.k, s.kappa) for s in dw.all_roots(model)]
        files.append(write_csv(out / f"fig3_roots_a{a:g}.csv", ["parity", "xi", "eta"], roots,
                               "xi = k l, eta = kappa l"))
    return files


def _fig4(out):
    files = []
    k = np.linspace(0.005, 2 * math.pi, 2000)
    for a in FIG_A:
        model = dw.DoubleDeltaModel(a)
        files.append(write_csv(out / f"fig4_transmission_a{a:g}.csv", ["k", "T"],
                               zip(k, dw.transmission(model, k)), "k in 1/l"))
    return files


def _fig5(out):
    sw = fr.sweep(0.1, np.linspace(-2, 2, 401))
    return [write_csv(out / "fig5_sweep.csv", ["Ed", "root_id", "ReK", "ImK", "ReE", "ImE", "kind"],
                      _sweep_rows(sw), FR_UNITS)]


def _fig8(out, threads=None):
    model = lat.LatticeModel.two_site(1.0)
    re, im = np.linspace(-1.0, 2.0, 200), np.linspace(-0.5, 0.5, 200)
    scan = lat.determinant_scan(model, re, im, workers=threads)
    rows = ((x, y, scan.log_d[i, j]) for i, y in enumerate(im) for j, x in enumerate(re))
    return [write_csv(out / "fig8_logD.csv", ["ReE", "ImE", "logD"], rows, "E in t_h")]


def _fig9(out):
    model = lat.LatticeModel.two_site(1.0)
    exact = [s for s in lat.exact_two_site_reference(1.0) if s.kind == "resonant"][0].energy
    _, trace = lat.self_consistent_pole(model, -0.3 - 0.1j, tol=1e-14)
    err = trace.errors(exact)
    rows = [(q, math.log10(e) if e > 0 else float("-inf")) for q, e in enumerate(err)]
    return [write_csv(out / "fig9_convergence.csv", ["q", "log10_residual"], rows, "E in t_h")]


def _fig12(out):
    model = fr.FriedrichsModel(0.1, -0.5)
    files = []
    for s in fr.quartic_roots(model):
        w = fr.eigenfunction(s, model, 100)
        files.append(write_csv(out / f"fig12_state_{s.label}.csv", ["x", "re", "im", "abs"],
                               zip(w.x, w.sites.real, w.sites.imag, np.abs(w.sites)),
                               "x in dx", f"kind = {s.kind}, E = {s.energy!r}"))
    return files


def _fig13(out):
    model = fr.FriedrichsModel(0.1, -0.5)
    files = []
    cfg = dyn.EvolutionConfig(dt=0.02, t_end=60.0, record_every=1000)
    for s in fr.quartic_roots(model):
        evo = dyn.evolve(model, fr.eigenfunction(s, model, 200), s, cfg)
        rows = []
        for i, t in enumerate(evo.times):
            for x, v in zip(range(-evo.half_width, evo.half_width + 1), evo.sites[i]):
                rows.append((t, x, abs(v)))
        files.append(write_csv(out / f"fig13_state_{s.label}.csv", ["t", "x", "abs_psi"], rows,
                               "t in hbar/t_h, x in dx", f"kind = {s.kind}"))
    return files


def _figure(p, out):
    fig = p["id"]
    if fig == "fig8":
        return _fig8(out, p["threads"])
    return {"fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig9": _fig9,
            "fig12": _fig12, "fig13": _fig13}[fig](out)


# -- registry ------------------------------------------------------------------------------------

A_OPT = Opt("a_over_l", float, 1.0, "barrier parameter a/l")
PAR_OPT = Opt("parity", str, "even", "parity sector", ("even", "odd"))
LAT_OPTS = (Opt("preset", str, "two-site", "built-in model", ("two-site", "free")),
            Opt("v0", float, 1.0, "barrier height V0/t_h"),
            Opt("half_width", int, 2, "L for the free chain"),
            Opt("model", str, "", "INI model file (overrides preset)"),
            Opt("branch", str, "retarded", "boundary branch", ("retarded", "advanced")))
FR_OPTS = (Opt("g", float, 0.1, "coupling g/t_h"), Opt("ed", float, -0.5, "impurity level E_d/t_h"))
JOST_OPTS = (Opt("potential", str, "exponential", "potential family", ("exponential", "square", "free")),
             Opt("v0", float, -10.0, "strength (exponential: V0; square: -depth)"),
             Opt("range", float, 1.0, "decay length or well radius"),
             Opt("l", int, 0, "partial wave"), Opt("r_max", float, 40.0, "outer radius"))

COMMANDS = [
    Command("delta-well", "roots", _delta_roots,
            (A_OPT, Opt("parity", str, "both", "parity sector", ("even", "odd", "both")),
             Opt("kmax", float, 2 * math.pi, "upper end of the k l window")), "Siegert roots"),
    Command("delta-well", "curves", _delta_curves,
            (A_OPT, Opt("kmax", float, 2 * math.pi, "largest k l"), Opt("n", int, 2000, "grid size")),
            "phase and modulus curves with their crossings"),
    Command("delta-well", "transmission", _delta_transmission,
            (A_OPT, Opt("kmax", float, 2 * math.pi, "largest k l"), Opt("n", int, 2000, "grid size")),
            "transmission probability"),
    Command("delta-well", "threshold", _delta_threshold,
            (Opt("xtol", float, 1e-7, "bisection tolerance"),), "a/l where the first even pole leaves"),
    Command("flux", "report", _flux_report,
            (A_OPT, PAR_OPT, Opt("index", int, 0, "root index"), Opt("L", float, 2.0, "half-width / l")),
            "Gamma-flux identity"),
    Command("flux", "expanding", _flux_expanding,
            (A_OPT, PAR_OPT, Opt("index", int, 0, "root index"), Opt("t_start", float, 5.0, "first t"),
             Opt("t_end", float, 50.0, "last t"), Opt("n", int, 46, "samples"),
             Opt("mode", str, "full", "tail or full", ("tail", "full"))),
            "particle number in an expanding window"),
    Command("lattice", "solve", _lattice_solve,
            LAT_OPTS + (Opt("e0", parse_complex, -0.3 - 0.1j, "first postulate 're,im'"),
                        Opt("tol", float, 1e-12, "step tolerance"),
                        Opt("max_iter", int, 200, "iteration cap"),
                        Opt("mixing", float, 1.0, "update fraction")),
            "self-consistent pole iteration"),
    Command("lattice", "scan", _lattice_scan,
            LAT_OPTS + (Opt("re", parse_pair, (-1.0, 2.0), "'lo,hi' of Re E"),
                        Opt("im", parse_pair, (-0.5, 0.5), "'lo,hi' of Im E"),
                        Opt("n_re", int, 200, "mesh columns"), Opt("n_im", int, 200, "mesh rows")),
            "log|det(H_eff - E)| landscape"),
    Command("lattice", "exact", _lattice_exact, (Opt("v0", float, 1.0, "barrier height V0/t_h"),),
            "closed-form two-site states"),
    Command("friedrichs", "roots", _fr_roots, FR_OPTS, "the four quartic roots"),
    Command("friedrichs", "sweep", _fr_sweep,
            FR_OPTS[:1] + (Opt("ed_range", parse_pair, (-2.0, 2.0), "'lo,hi' of E_d"),
                           Opt("n", int, 401, "number of levels")), "tracked roots along E_d"),
    Command("friedrichs", "eigenfunction", _fr_eigenfunction,
            FR_OPTS + (Opt("root", str, "a", "root id"), Opt("half_width", int, 50, "sites per side")),
            "chain amplitudes of one root"),
    Command("dynamics", "run", _dyn_run,
            FR_OPTS + (Opt("model", str, "", "INI model file"), Opt("state", str, "c", "root id"),
                       Opt("half_width", int, 200, "sites per side"), Opt("dt", float, 0.02, "time step"),
                       Opt("t_end", float, 60.0, "final time"),
                       Opt("record_every", int, 50, "steps between frames")),
            "RK4 evolution of a root's eigenfunction"),
    Command("jost", "smatrix", _jost_smatrix,
            JOST_OPTS + (Opt("k_range", parse_pair, (0.05, 3.0), "'lo,hi' of k"), Opt("n", int, 60, "points")),
            "partial-wave S matrix on the real axis"),
    Command("jost", "poles", _jost_poles,
            JOST_OPTS + (Opt("re", parse_pair, (0.05, 3.0), "'lo,hi' of Re k"),
                         Opt("im", parse_pair, (-0.3, -0.005), "'lo,hi' of Im k"),
                         Opt("n_re", int, 21, "scan columns"), Opt("n_im", int, 11, "scan rows")),
            "zeros of f_+ in a k rectangle"),
    Command("jost", "sigma", _jost_sigma,
            JOST_OPTS + (Opt("k", float, 1.0, "wave number"), Opt("l_max", int, 4, "last partial wave")),
            "differential and total cross section"),
    Command("figure", "make", _figure,
            (Opt("id", str, "fig9", "figure id", FIGURES),), "plot-ready data for one figure"),
]
REGISTRY = {(c.group, c.action): c for c in COMMANDS}


# -- argument handling -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siegert", description="Resonant-state toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; section named after the group")
    common.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./siegert-output)")
    common.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    groups = parser.add_subparsers(dest="group", required=True)
    by_group: dict = {}
    for c in COMMANDS:
        if c.group not in by_group:
            g = groups.add_parser(c.group, help=f"{c.group} tools")
            by_group[c.group] = g.add_subparsers(dest="action", required=True)
        a = by_group[c.group].add_parser(c.action, help=c.help, parents=[common])
        for o in c.options:
            flag = "--" + o.name.replace("_", "-")
            a.add_argument(flag, dest=o.name, default=None, choices=o.choices,
                           type=str if o.type in (parse_complex, parse_pair) else o.type,
                           help=f"{o.help} (default: {_jsonable(o.default)})")
    replay = groups.add_parser("replay", help="re-run from a manifest.json")
    replay.add_argument("manifest")
    replay.add_argument("--out", help="output directory for the replay")
    return parser


def _coerce(opt: Opt, value):
    try:
        v = opt.type(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value {value!r} for {opt.name}: {exc}") from exc
    if opt.choices and v not in opt.choices:
        raise ConfigError(f"{opt.name} must be one of {opt.choices}")
    return v


def resolve(cmd: Command, ns: argparse.Namespace) -> dict:
    """defaults < config file < command-line flags."""
    params = {o.name: o.default for o in cmd.options}
    opts = {o.name: o for o in cmd.options}
    if getattr(ns, "config", None):
        cp = configparser.ConfigParser()
        try:
            if not cp.read(ns.config):
                raise ConfigError(f"cannot read config file {ns.config}")
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        for section in cp.sections():
            if section != cmd.group:
                raise ConfigError(f"unexpected section [{section}] for '{cmd.group}'")
        if cp.has_section(cmd.group):
            for key, value in cp.items(cmd.group):
                name = key.replace("-", "_")
                if name not in opts:
                    raise ConfigError(f"unknown key '{key}' in [{cmd.group}]")
                params[name] = _coerce(opts[name], value)
    for name, opt in opts.items():
        value = getattr(ns, name, None)
        if value is not None:
            params[name] = _coerce(opt, value)
    for name, opt in opts.items():
        if opt.type in (parse_complex, parse_pair):
            params[name] = opt.type(params[name])
    return params


def output_dir(arg: str | None, cmd: Command) -> Path:
    root = Path(arg) if arg else Path(os.environ.get(OUTPUT_ENV, "siegert-output"))
    return root if arg else root / f"{cmd.group}-{cmd.action}"


def _execute(cmd: Command, params: dict, out: Path, threads) -> int:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"command": [cmd.group, cmd.action],
                "config": {k: _jsonable(v) for k, v in sorted(params.items())},
                "outputs": []}
    code = EXIT_OK
    run_params = dict(params, threads=threads)
    try:
        files = cmd.run(run_params, out)
    except (NoConvergence, NoConvergenceQR, NotConverged) as exc:
        print(f"siegert: no convergence: {exc}", file=sys.stderr)
        files = sorted(p for p in out.iterdir() if p.name != "manifest.json")
        manifest["error"] = str(exc)
        code = EXIT_NUMERIC
    manifest["outputs"] = sorted(str(Path(f).relative_to(out)) for f in files)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return code


def _replay(ns) -> int:
    m = json.loads(Path(ns.manifest).read_text())
    group, action = m["command"]
    cmd = REGISTRY.get((group, action))
    if cmd is None:
        raise ConfigError(f"manifest names unknown command {group} {action}")
    opts = {o.name: o for o in cmd.options}
    params = {o.name: o.default for o in cmd.options}
    for key, value in m["config"].items():
        if key not in opts:
            raise ConfigError(f"unknown key '{key}' in manifest")
        o = opts[key]
        if o.type is parse_complex:
            params[key] = complex(*value)
        elif o.type is parse_pair:
            params[key] = tuple(value)
        else:
            params[key] = _coerce(o, value)
    out = Path(ns.out) if ns.out else Path(ns.manifest).parent
    return _execute(cmd, params, out, None)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        if ns.group == "replay":
            return _replay(ns)
        cmd = REGISTRY[(ns.group, ns.action)]
        params = resolve(cmd, ns)
        threads = ns.threads if ns.threads else os.cpu_count()
        return _execute(cmd, params, output_dir(ns.out, cmd), threads)
    except ConfigError as exc:
        print(f"siegert: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"siegert: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SiegertError as exc:
        print(f"siegert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
