import logging

import numpy as np
import pytest

from circradon.abel import BoundaryTrace
from circradon.errors import ConfigError, NotApplicableError
from circradon.fields import (Grid, WavePacket, bump_field, gaussian_field, soft_disc,
                              wavepacket_field)
from circradon.geometry import Covector, SampledCurve, circle, mirror
from circradon.wave import (CFL, WaveConfig, cone_diagnostic, energy_history, forward_trace,
                            incoming_inverse, inside_mask, side_mask, time_reversal,
                            unitary_ghost)


@pytest.fixture(scope="module")
def curve():
    return circle()


def small_cfg(curve, T=1.0, h=0.02, reach=0.5, **kw):
    return WaveConfig.build(WaveConfig.causal_half_width(curve, T, reach), h, T, **kw)


# -- configuration -------------------------------------------------------------

def test_cfl_violation_rejected():
    g = Grid.centered(1.0, 0.02)
    with pytest.raises(ConfigError, match="CFL"):
        WaveConfig(g, 1.01 * CFL * 0.02, 1.0, 0.8)


@pytest.mark.parametrize("T0, T", [(0.0, 1.0), (1.0, 1.0), (1.2, 1.0)])
def test_cutoff_window_validated(T0, T):
    with pytest.raises(ConfigError):
        WaveConfig(Grid.centered(1.0, 0.02), 0.01, T, T0)


def test_sponge_must_fit():
    with pytest.raises(ConfigError, match="sponge"):
        WaveConfig(Grid.centered(0.2, 0.02), 0.01, 1.0, 0.5, sponge=20)


def test_build_respects_cfl():
    cfg = WaveConfig.build(1.0, 0.01, 1.0)
    assert cfg.dt <= CFL * cfg.grid.h
    assert cfg.t_grid[-1] == pytest.approx(1.0)


def test_chi_profile():
    cfg = WaveConfig.build(1.0, 0.02, 2.0, 1.0)
    assert cfg.chi(0.5) == 1.0 and cfg.chi(2.0) == pytest.approx(0.0)
    t = np.linspace(1.0, 2.0, 50)
    assert np.all(np.diff(cfg.chi(t)) <= 0)


def test_arrival_time_bound(curve):
    cfg = WaveConfig.build(1.0, 0.02, 1.5, 1.2)
    with pytest.raises(ConfigError, match="must exceed"):
        cfg.check_arrival_time(curve, (0.0, 0.0), 0.3)
    assert cfg.check_arrival_time(curve, (0.0, 0.0), 0.1) == pytest.approx(1.1)


def test_nonuniform_trace_time_rejected():
    with pytest.raises(ConfigError):
        BoundaryTrace(np.array([0.0, 0.1, 0.3]), np.arange(4.0), np.zeros((3, 4)))


def test_refined_halves_h():
    cfg = WaveConfig.build(1.0, 0.02, 1.0, sponge=10)
    fine = cfg.refined()
    assert fine.grid.h == pytest.approx(0.01)
    assert fine.interior_box() == pytest.approx(cfg.interior_box())


# -- forward trace -------------------------------------------------------------

def test_zero_field_gives_zero_trace(curve):
    cfg = small_cfg(curve, n_s=32)
    tr = forward_trace(cfg.grid.zeros(), cfg, curve)
    assert not np.any(tr.values)


def test_wrong_grid_rejected(curve):
    cfg = small_cfg(curve, n_s=32)
    with pytest.raises(ConfigError):
        forward_trace(Grid.centered(1.0, 0.05).zeros(), cfg, curve)


def test_radial_field_trace_independent_of_s(curve):
    cfg = small_cfg(curve, n_s=64)
    tr = forward_trace(bump_field(cfg.grid, (0.0, 0.0), 0.3), cfg, curve)
    spread = np.abs(tr.values - tr.values.mean(axis=1, keepdims=True)).max()
    assert spread <= 0.02 * np.abs(tr.values).max()


def test_sponge_warning(curve, caplog):
    cfg = WaveConfig.build(1.1, 0.02, 0.5, sponge=10, n_s=16)
    f = gaussian_field(cfg.grid, (0.0, 0.0), 0.5)
    with caplog.at_level(logging.WARNING, logger="circradon.wave"):
        forward_trace(f, cfg, curve)
    assert any("sponge" in r.message for r in caplog.records)


def test_finite_speed(curve):
    T = 1.0
    cfg = WaveConfig.build(WaveConfig.causal_half_width(curve, T, 1.0), 0.01, T, n_s=64)
    f = bump_field(cfg.grid, (0.0, 0.0), 0.3)
    tr = forward_trace(f, cfg, curve)
    early = tr.t_grid < 0.7 - 2 * cfg.grid.h
    assert np.abs(tr.values[early]).max() <= 1e-6 * np.abs(f.values).max()
    assert np.abs(tr.values[~early]).max() > 1e-3


def test_energy_conserved_in_closed_box():
    cfg = WaveConfig.build(1.0, 0.02, 1.0, sponge=0)
    e = energy_history(bump_field(cfg.grid, (0.1, 0.0), 0.3), cfg, 2.0)
    assert np.abs(e - e[0]).max() <= 1e-12 * e[0]


def test_centered_energy_fluctuation_is_second_order():
    drift = []
    for h in (0.02, 0.01):
        cfg = WaveConfig.build(1.0, h, 1.0, sponge=0)
        e = energy_history(bump_field(cfg.grid, (0.1, 0.0), 0.3), cfg, 2.0, centered=True)
        drift.append(np.abs(e - e[0]).max() / e[0])
    assert drift[1] <= 1e-3
    assert drift[0] / drift[1] == pytest.approx(4.0, rel=0.25)


# -- backward solves -----------------------------------------------------------

def _rel(a, b, m):
    return np.linalg.norm((a - b)[m]) / np.linalg.norm(b[m])


def test_time_reversal_of_zero_trace(curve):
    cfg = small_cfg(curve, T=2.0, n_s=32)
    tr = BoundaryTrace(cfg.t_grid, cfg.s_grid(curve), np.zeros((len(cfg.t_grid), 32)))
    assert not np.any(time_reversal(tr, cfg, curve).values)


def test_time_reversal_short_trace_rejected(curve):
    cfg = small_cfg(curve, T=2.0, n_s=32)
    tr = BoundaryTrace(cfg.t_grid[:10], cfg.s_grid(curve), np.zeros((10, 32)))
    with pytest.raises(ConfigError, match="before T"):
        time_reversal(tr, cfg, curve)


def test_time_reversal_gaussian_improves_with_T(curve):
    errs = []
    for T in (4.0, 8.0):
        cfg = WaveConfig.build(WaveConfig.causal_half_width(curve, T, 0.6), 0.02, T, 0.75 * T,
                               sponge=0, n_s=256)
        f = gaussian_field(cfg.grid, (0.1, 0.05), 0.12)
        rec = time_reversal(forward_trace(f, cfg, curve), cfg, curve)
        errs.append(_rel(rec.values, f.values, inside_mask(curve, cfg.grid)))
    assert errs[1] <= 0.05
    assert errs[1] < errs[0]


def test_time_reversal_keeps_disc_edge(curve):
    T = 8.0
    cfg = WaveConfig.build(WaveConfig.causal_half_width(curve, T, 0.5), 0.01, T, 6.0,
                           sponge=0, n_s=512)
    f = soft_disc(cfg.grid, 0.4, width=0.02)
    rec = time_reversal(forward_trace(f, cfg, curve), cfg, curve)
    g = cfg.grid
    j = np.argmin(np.abs(g.y))
    row = rec.values[j]
    x = g.x
    sel = (x > 0.1) & (x < 0.8)
    edge = x[sel][np.argmax(np.abs(np.gradient(row[sel], g.h)))]
    assert abs(edge - 0.4) <= 2 * g.h


@pytest.fixture(scope="module")
def packet_setup(curve):
    cfg = WaveConfig.build(2.1, 0.01, 1.0, 0.8, n_s=512)
    p = WavePacket(np.array([0.6, 0.0]), np.array([2 * np.pi / 0.16, 0.0]), 0.08)
    return cfg, p, wavepacket_field(cfg.grid, p)


def test_incoming_left_inverse_round_trip(curve, packet_setup):
    cfg, _, f = packet_setup
    back = incoming_inverse(forward_trace(f, cfg, curve), "left", cfg, curve)
    m = side_mask(curve, cfg.grid, "left")
    a, b = back.values[m], f.values[m]
    assert a @ b / (np.linalg.norm(a) * np.linalg.norm(b)) >= 0.95
    assert np.linalg.norm(a) / np.linalg.norm(b) == pytest.approx(1.0, abs=0.1)


def test_incoming_exterior_needs_room(curve):
    cfg = WaveConfig.build(1.3, 0.02, 1.0, n_s=32, sponge=10)
    tr = BoundaryTrace(cfg.t_grid, cfg.s_grid(curve), np.zeros((len(cfg.t_grid), 32)))
    with pytest.raises(ConfigError, match="exterior"):
        incoming_inverse(tr, "right", cfg, curve)


def test_ghost_of_zero_is_zero(curve, packet_setup):
    cfg, _, _ = packet_setup
    out = unitary_ghost(cfg.grid.zeros(), cfg, curve, Covector([0.6, 0.0], [1.0, 0.0]))
    assert not np.any(out.values)


def test_ghost_needs_left_visible_covector(curve, packet_setup):
    cfg, _, f = packet_setup
    with pytest.raises(NotApplicableError):
        unitary_ghost(f, cfg, curve, Covector([1.5, 0.0], [0.0, 1.0]))


def test_ghost_sits_at_mirror_point(curve, packet_setup):
    cfg, p, f = packet_setup
    cv = Covector(p.x0, [1.0, 0.0])
    f_R = unitary_ghost(f, cfg, curve, cv)
    X, Y = cfg.grid.mesh()
    w = np.abs(f_R.values)
    com = np.array([(w * X).sum(), (w * Y).sum()]) / w.sum()
    assert np.linalg.norm(com - mirror(curve, cv).x) <= 3 * p.sigma
    assert not np.any(f_R.values[inside_mask(curve, cfg.grid)])


# -- cone diagnostic -----------------------------------------------------------

def test_cone_zero_trace():
    tr = BoundaryTrace(np.linspace(0, 1, 33), np.arange(16) * 2 * np.pi / 16, np.zeros((33, 16)))
    assert cone_diagnostic(tr, 1.0) == 0.0


def test_cone_s_constant_trace():
    t = np.linspace(0, 1, 65)
    s = np.arange(32) * 2 * np.pi / 32
    tr = BoundaryTrace(t, s, np.repeat(np.sin(7 * t)[:, None], 32, axis=1))
    assert cone_diagnostic(tr, 1.0) == pytest.approx(0.0, abs=1e-20)


def test_cone_detects_fast_s_oscillation():
    t = np.arange(64) / 64
    s = np.arange(64) * 2 * np.pi / 64
    # |sigma| = 30 against |tau| = 8 pi
    tr = BoundaryTrace(t, s, np.outer(np.cos(8 * np.pi * t), np.cos(30 * s)))
    assert cone_diagnostic(tr, 1.0) > 0.5


def test_cone_requires_periodic_s(curve):
    tr = BoundaryTrace(np.linspace(0, 1, 9), np.linspace(0, 2 * np.pi, 16), np.zeros((9, 16)))
    with pytest.raises(ConfigError, match="periodic"):
        cone_diagnostic(tr, 1.0, curve)


def test_cone_interior_phantom(curve):
    T = 3.0
    cfg = WaveConfig.build(WaveConfig.causal_half_width(curve, T, 0.5), 0.02, T, n_s=128)
    tr = forward_trace(bump_field(cfg.grid, (0.1, 0.0), 0.3), cfg, curve)
    assert cone_diagnostic(tr, 1.0, curve) <= 0.05


# -- masks ---------------------------------------------------------------------

def test_masks_partition_grid():
    c = SampledCurve.from_function(lambda u: (np.cos(2 * np.pi * u), 0.6 * np.sin(2 * np.pi * u)), 200)
    g = Grid.centered(1.5, 0.05)
    L, R = side_mask(c, g, "left"), side_mask(c, g, "right")
    assert not np.any(L & R)
    assert np.array_equal(L, inside_mask(c, g))
    with pytest.raises(ConfigError):
        side_mask(c, g, "middle")
