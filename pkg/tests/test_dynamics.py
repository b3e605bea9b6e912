import numpy as np
import pytest

from siegert import dynamics as dy
from siegert import friedrichs as fr
from siegert import lattice as lt
from siegert.core import WaveField
from siegert.errors import DimensionMismatch, UnstableStep

MODEL = fr.FriedrichsModel(0.1, -0.5)
ROOTS = {s.label: s for s in fr.quartic_roots(MODEL)}
L = 50


def _run(label, dt=0.02, t_end=60.0, record_every=10, half_width=L):
    s = ROOTS[label]
    init = fr.eigenfunction(s, MODEL, half_width)
    return dy.evolve(MODEL, init, s, dy.EvolutionConfig(dt=dt, t_end=t_end, record_every=record_every))


def test_config_validation():
    with pytest.raises(ValueError):
        dy.EvolutionConfig(dt=0.0)
    with pytest.raises(ValueError):
        dy.EvolutionConfig(dt=0.2)
    with pytest.raises(ValueError):
        dy.EvolutionConfig(record_every=0)
    with pytest.raises(ValueError):
        dy.EvolutionConfig(t_end=-1)
    assert dy.EvolutionConfig(dt=0.05, t_end=1).steps == 20


def test_boundary_potential_matches_lattice_branch():
    c = ROOTS["c"]
    assert dy.boundary_potential(c.wavenumber) == pytest.approx(lt.effective_potential(c.energy), abs=1e-12)


@pytest.mark.parametrize("label", ["a", "b"])
def test_bound_states_are_stationary(label):
    evo = _run(label)
    amp = np.abs(evo.sites)
    drift = np.max(np.abs(amp - amp[0])) / np.max(amp[0])
    assert drift < 1e-8
    assert np.max(np.abs(np.abs(evo.adatom) - 1)) < 1e-8


def test_bound_state_phase_at_small_step():
    evo = _run("a", dt=0.005, record_every=40)
    assert dy.eigenstate_phase_check(evo, ROOTS["a"].energy) < 1e-8


def test_phase_check_zero_at_start():
    evo = _run("c", t_end=0.0)
    assert len(evo) == 1
    assert dy.eigenstate_phase_check(evo, ROOTS["c"].energy) == 0.0


def test_resonance_decays_at_half_gamma():
    c = ROOTS["c"]
    evo = _run("c")
    rate = dy.decay_rate(evo.times, evo.adatom)
    assert rate == pytest.approx(c.gamma / 2, rel=5e-3)


def test_anti_resonance_grows():
    d = ROOTS["d"]
    evo = _run("d")
    rate = dy.decay_rate(evo.times, evo.adatom)
    assert d.gamma < 0
    assert rate == pytest.approx(d.gamma / 2, rel=5e-3)
    assert abs(evo.adatom[-1]) > abs(evo.adatom[0])


def test_rk4_order():
    c = ROOTS["c"]
    coarse = _run("c", dt=0.1, t_end=20, record_every=10, half_width=20)
    fine = _run("c", dt=0.05, t_end=20, record_every=20, half_width=20)
    np.testing.assert_allclose(coarse.times, fine.times)
    ratio = dy.eigenstate_phase_check(coarse, c.energy) / dy.eigenstate_phase_check(fine, c.energy)
    assert ratio == pytest.approx(16, rel=0.3)


def test_shape_is_frozen():
    evo = _run("c", t_end=30)
    shape = evo.sites / evo.site(0)[:, None]
    assert np.max(np.abs(shape - shape[0])) < 1e-6 * np.max(np.abs(shape[0]))


def test_linearity():
    c = ROOTS["c"]
    f1 = fr.eigenfunction(c, MODEL, 20)
    rng = np.random.default_rng(4)
    f2 = WaveField(rng.normal(size=41) + 1j * rng.normal(size=41), 0.5 - 0.2j)
    alpha, beta = 0.7 - 0.3j, -1.1 + 0.4j
    mix = WaveField(alpha * f1.sites + beta * f2.sites, alpha * f1.adatom + beta * f2.adatom)
    cfg = dy.EvolutionConfig(dt=0.05, t_end=10, record_every=20)
    e1, e2, em = (dy.evolve(MODEL, f, c, cfg) for f in (f1, f2, mix))
    combo = alpha * e1.sites + beta * e2.sites
    assert np.max(np.abs(em.sites - combo)) < 1e-12 * max(1.0, np.max(np.abs(combo)))


def test_window_norm_decays_at_gamma():
    c = ROOTS["c"]
    evo = _run("c")
    for W in (5, L):
        ns = dy.window_norm_series(evo, W)
        slope = np.polyfit(ns.t, np.log(ns.N), 1)[0]
        assert -slope == pytest.approx(c.gamma, rel=1e-2)


def test_bound_window_norm_constant():
    ns = dy.window_norm_series(_run("a"), 10)
    assert np.ptp(ns.N) / ns.N[0] < 1e-8


def test_continuity_for_eigenstate():
    ns = dy.window_norm_series(_run("c"), L)
    assert np.max(np.abs(ns.continuity_residual())) < 1e-6 * ns.N.max()


def test_continuity_for_arbitrary_data():
    x = np.arange(-L, L + 1)
    init = WaveField(np.exp(-(x / 5.0) ** 2) + 0j, 0.3)
    evo = dy.evolve(MODEL, init, ROOTS["c"], dy.EvolutionConfig(dt=0.02, t_end=20, record_every=5))
    for W in (10, L):
        ns = dy.window_norm_series(evo, W)
        assert np.max(np.abs(ns.continuity_residual())) < 1e-5 * ns.N.max()


def test_zero_field_stays_zero():
    init = WaveField(np.zeros(2 * L + 1, complex), 0j)
    evo = dy.evolve(MODEL, init, ROOTS["c"], dy.EvolutionConfig(t_end=5))
    ns = dy.window_norm_series(evo, L)
    assert np.all(ns.N == 0)
    assert np.all(evo.sites == 0)


def test_plain_lattice_eigenstate():
    model = lt.LatticeModel.two_site()
    state, _ = lt.self_consistent_pole(model, -0.3 - 0.1j)
    init = WaveField(state.meta["eigenvector"])
    evo = dy.evolve(model, init, state, dy.EvolutionConfig(dt=0.02, t_end=10))
    assert dy.eigenstate_phase_check(evo, state.energy) < 1e-6
    with pytest.raises(ValueError):
        dy.window_norm_series(evo, 3)


def test_dimension_mismatch():
    model = lt.LatticeModel.two_site()
    with pytest.raises(DimensionMismatch):
        dy.evolve(model, WaveField(np.ones(7)), cfg=dy.EvolutionConfig(V_eff=-0.5j))
    with pytest.raises(DimensionMismatch):
        dy.evolve(model, WaveField(np.ones(5), 1.0), cfg=dy.EvolutionConfig(V_eff=-0.5j))
    with pytest.raises(DimensionMismatch):
        dy.evolve(MODEL, WaveField(np.ones(5)), cfg=dy.EvolutionConfig(V_eff=-0.5j))
    with pytest.raises(ValueError):
        dy.evolve(MODEL, WaveField(np.ones(5), 1.0))


def test_unstable_step():
    # a strongly amplifying boundary blows the field up long before t_end
    init = fr.eigenfunction(ROOTS["a"], MODEL, 10)
    with pytest.raises(UnstableStep):
        dy.evolve(MODEL, init, cfg=dy.EvolutionConfig(t_end=60, V_eff=50j))


def test_frames_round_trip(tmp_path):
    evo = _run("c", t_end=2, record_every=25, half_width=5)
    path = dy.write_frames(evo, tmp_path, ROOTS["c"].energy, "c")
    back = dy.read_frames(path)
    np.testing.assert_array_equal(back.times, evo.times)
    np.testing.assert_array_equal(back.sites, evo.sites)
    np.testing.assert_array_equal(back.adatom, evo.adatom)
    assert back.V_eff == evo.V_eff
    assert back.config == evo.config
    assert (tmp_path / "frame_00000.csv").read_text().startswith("# units:")
