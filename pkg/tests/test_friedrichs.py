import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import durand_kerner, match_multisets
from siegert import friedrichs as fr


def _roots(g=0.1, Ed=-0.5):
    return {s.label: s for s in fr.quartic_roots(fr.FriedrichsModel(g, Ed))}


def test_model_validation():
    with pytest.raises(ValueError):
        fr.FriedrichsModel(-0.1, 0.0)
    with pytest.raises(ValueError):
        fr.FriedrichsModel(0.1, 0.0, hopping=0.0)


def test_decoupled_limit_factorizes():
    model = fr.FriedrichsModel(0.0, -0.5)
    z = [s.z for s in fr.quartic_roots(model)]
    expected = [1, -1, 0.5 + 0.5j * math.sqrt(3), 0.5 - 0.5j * math.sqrt(3)]
    assert match_multisets(z, expected) < 1e-14
    # (z^2 - 1)(z^2 + 2 Ed z + 1)
    np.testing.assert_allclose(model.quartic(), np.polymul([1, 0, -1], [1, -1.0, 1]), atol=0)
    for s in fr.quartic_roots(model):
        assert s.kind == "continuum"
    on_level = [s for s in fr.quartic_roots(model) if abs(s.z - expected[2]) < 1e-12][0]
    assert on_level.energy == pytest.approx(-0.5, abs=1e-15)
    assert fr.energy_plane_check(on_level, model) == 0.0


def test_reference_classification():
    r = _roots()
    assert [r[x].kind for x in "abcd"] == ["bound", "bound", "resonant", "anti_resonant"]
    assert r["a"].k == pytest.approx(math.pi)
    assert r["b"].k == pytest.approx(0.0, abs=1e-15)
    assert r["c"].k > 0 and r["c"].energy.imag < 0
    assert r["d"].k < 0 and r["d"].energy.imag > 0
    for x in "ab":
        assert abs(r[x].z) < 1
        assert r[x].energy.imag == 0
    for x in "cd":
        assert abs(r[x].z) > 1


def test_reference_residuals():
    model = fr.FriedrichsModel(0.1, -0.5)
    for s in fr.quartic_roots(model):
        assert s.residual < 1e-12
        assert fr.quartic_residual(model, s.z) < 1e-12
        assert fr.energy_plane_check(s, model) < 1e-10


def test_against_durand_kerner():
    model = fr.FriedrichsModel(0.1, -0.5)
    assert match_multisets([s.z for s in fr.quartic_roots(model)], durand_kerner(model.quartic())) < 1e-12


def test_energy_plane_negative_control():
    model = fr.FriedrichsModel(0.1, -0.5)
    rng = np.random.default_rng(2)
    for _ in range(50):
        E = complex(rng.uniform(-2, 2), rng.uniform(-1, 1))
        assert fr.energy_plane_check(E, model) > 1e-6


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1.5), st.floats(-3, 3))
def test_quartic_invariants(g, Ed):
    model = fr.FriedrichsModel(g, Ed)
    roots = fr.quartic_roots(model)
    assert len(roots) == 4
    z = np.array([s.z for s in roots])
    # Vieta: product of the roots of the monic quartic is -1
    assert abs(np.prod(z) + 1) < 1e-10
    scale = 1 + abs(Ed) + g * g
    for s in roots:
        assert s.residual < 1e-12 * scale * max(1.0, abs(s.z)) ** 4
        # rounding in E is amplified by |dE sqrt(E^2 - 1)| near the band edges
        E = s.energy
        cond = abs(E) * abs(E - Ed) / max(abs(cmath.sqrt(E * E - 1)), 1e-300)
        assert fr.energy_plane_check(s, model) < 1e-10 * scale ** 2 + 1e-14 * cond
        if s.kind == "bound":
            assert abs(s.z) < 1
        if s.kind in ("resonant", "anti_resonant"):
            assert abs(s.z) > 1


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(-0.95, 0.95))
def test_resonances_come_in_mirror_pairs(g, Ed):
    roots = fr.quartic_roots(fr.FriedrichsModel(g, Ed))
    res = [s for s in roots if s.kind == "resonant"]
    anti = [s for s in roots if s.kind == "anti_resonant"]
    assert len(res) == len(anti)
    for s in res:
        mirror = -s.wavenumber.conjugate()
        best = min(anti, key=lambda a: abs(a.wavenumber - mirror))
        assert abs(best.wavenumber - mirror) < 1e-10
        assert abs(best.energy - s.energy.conjugate()) < 1e-10


def test_amplitude_ratio():
    model = fr.FriedrichsModel(0.1, -0.5)
    for s in fr.quartic_roots(model):
        assert s.B_over_F == pytest.approx((s.energy - model.Ed) / model.g)


def test_eigenfunction_bound_decays_resonance_grows():
    model = fr.FriedrichsModel(0.1, -0.5)
    r = _roots()
    for x in "ab":
        w = fr.eigenfunction(r[x], model, 20)
        amp = np.abs(w.sites[20:])
        assert np.all(np.diff(amp) < 0)
        assert w.adatom == 1
    for x in "cd":
        w = fr.eigenfunction(r[x], model, 20)
        amp = np.abs(w.sites[20:])
        rate = np.diff(np.log(amp))
        np.testing.assert_allclose(rate, r[x].kappa, rtol=1e-10)
        assert r[x].kappa > 0
        np.testing.assert_allclose(np.abs(w.sites), np.abs(w.sites[::-1]))


def test_eigenfunction_stencil():
    model = fr.FriedrichsModel(0.1, -0.5)
    for s in fr.quartic_roots(model):
        w = fr.eigenfunction(s, model, 15)
        scale = np.max(np.abs(w.vector()))
        assert np.max(fr.stencil_residual(w, model, s.energy)) < 1e-12 * scale


def test_stencil_rejects_wrong_energy():
    model = fr.FriedrichsModel(0.1, -0.5)
    s = _roots()["c"]
    w = fr.eigenfunction(s, model, 5)
    assert np.max(fr.stencil_residual(w, model, s.energy + 1e-3)) > 1e-4


def test_eigenfunction_requires_coupling():
    s = fr.quartic_roots(fr.FriedrichsModel(0.0, -0.5))[0]
    with pytest.raises(ValueError):
        fr.eigenfunction(s, fr.FriedrichsModel(0.0, -0.5), 3)


def test_as_resonant_state():
    s = _roots()["c"].as_resonant()
    assert s.kind == "resonant"
    assert s.gamma > 0
    assert s.meta["label"] == "c"


def test_sweep_is_continuous_in_energy():
    step = 0.01
    Ed = np.arange(-2, 2 + step / 2, step)
    sw = fr.sweep(0.1, Ed)
    assert sw.z.shape == (Ed.size, 4)
    jumps = np.abs(np.diff(sw.E, axis=0))
    assert jumps.max() < 10 * step
    # every row is a permutation of the independent root set
    for i in (0, 137, 399):
        ref = [s.z for s in fr.quartic_roots(fr.FriedrichsModel(0.1, Ed[i]))]
        assert match_multisets(sw.z[i], ref) < 1e-14


def test_anti_bound_roots_have_real_energy():
    Ed = np.linspace(-2, 2, 401)
    sw = fr.sweep(0.1, Ed)
    kinds = sw.kinds()
    K, E = sw.K, sw.E
    pure = np.abs(np.sin(K.real)) < 1e-10
    assert np.any(kinds == "anti_bound")
    assert np.all(np.abs(E[pure].imag) < 1e-10)
    assert np.all(np.abs(sw.z[kinds == "anti_bound"]) > 1)
