import numpy as np
import pytest
from hypothesis import given, strategies as st

from circradon.errors import InvalidInputError, ResolutionError
from circradon.fields import (Grid, GridField, JumpTerm, RadialProfile, WavePacket, bilinear_matrix,
                              disc_indicator, eval_radial, gaussian_field, soft_disc, wavepacket_field,
                              write_pgm)

G = Grid.centered(1.0, 0.005)


def test_grid_rejects_bad_spacing():
    with pytest.raises(InvalidInputError):
        Grid((0, 0), 0.0, 4, 4)


def test_field_rejects_nonfinite():
    g = Grid((0, 0), 1.0, 2, 2)
    with pytest.raises(InvalidInputError):
        GridField(g, [[0, 1], [np.nan, 0]])


@pytest.mark.parametrize("point, value", [((0, 0), 1.0), ((1, 0), 0.0)])
def test_disc_indicator_values(point, value):
    f = disc_indicator(G, 0.5)
    assert f.sample(*point) == value


def test_disc_indicator_area():
    assert disc_indicator(G, 0.5).integral() == pytest.approx(np.pi / 4, rel=1e-2)


def test_disc_indicator_too_small():
    with pytest.raises(ResolutionError):
        disc_indicator(G, 0.009)


def test_disc_indicator_radially_symmetric():
    f = disc_indicator(G, 0.5, smooth=True)
    X, Y = G.mesh()
    d = np.hypot(X, Y)
    # nodes at equal distance carry equal values
    for r in (0.3, 0.49, 0.6):
        sel = np.abs(d - r) < 1e-9
        if np.any(sel):
            assert np.ptp(f.values[sel]) == 0
    band = np.abs(d - 0.5) < G.h
    assert np.all((f.values[~band] == 0) | (f.values[~band] == 1))


def test_soft_disc_edge_width():
    f = soft_disc(G, 0.5, width=0.04)
    assert f.sample(0.5, 0) == pytest.approx(0.5, abs=1e-12)
    assert f.sample(0.5 + 6 * 0.04, 0) < 1e-8


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
def test_bilinear_reproduces_affine(a, b, c, x, y):
    X, Y = G.mesh()
    f = GridField(G, a + b * X + c * Y)
    assert f.sample(x, y) == pytest.approx(a + b * x + c * y, abs=1e-12)


def test_bilinear_matrix_matches_sample(rng):
    g = Grid((0, 0), 0.1, 11, 9)
    f = GridField(g, rng.normal(size=(9, 11)))
    x, y = rng.uniform(0, 0.99, 20), rng.uniform(0, 0.79, 20)
    M = bilinear_matrix(g, x, y)
    np.testing.assert_allclose(M @ f.values.ravel(), f.sample(x, y), atol=1e-13)


def test_sample_outside_is_zero():
    f = gaussian_field(G, (0, 0), 0.2)
    assert f.sample(5.0, 0.0) == 0.0


def test_field_save_load(tmp_path, rng):
    g = Grid((-0.3, 0.7), 0.125, 5, 3)
    f = GridField(g, rng.normal(size=(3, 5)))
    f.save(tmp_path / "f.bin")
    raw = (tmp_path / "f.bin").read_bytes()
    assert raw[:80].split() == [b"5", b"3", b"-0.3", b"0.7", b"0.125"]
    assert len(raw) == 80 + 15 * 8
    back = GridField.load(tmp_path / "f.bin")
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)


def test_field_load_truncated(tmp_path):
    g = Grid((0, 0), 1.0, 3, 3)
    g.zeros().save(tmp_path / "f.bin")
    data = (tmp_path / "f.bin").read_bytes()
    (tmp_path / "g.bin").write_bytes(data[:-8])
    with pytest.raises(InvalidInputError):
        GridField.load(tmp_path / "g.bin")


def test_pgm_header_and_range(tmp_path):
    write_pgm(tmp_path / "a.pgm", np.array([[0.0, 1.0], [2.0, 4.0]]))
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n2 2\n255\n")
    assert list(raw[-4:]) == [0, 64, 128, 255]


def test_field_arithmetic_grid_mismatch():
    a = Grid((0, 0), 1.0, 3, 3).zeros()
    b = Grid((0, 0), 0.5, 3, 3).zeros()
    with pytest.raises(InvalidInputError):
        a + b


# -- wave packets ---------------------------------------------------------------------

P = WavePacket((0.1, -0.2), (60.0, 30.0), 0.05)


def test_packet_center_value():
    assert wavepacket_field(G, P).sample(0.1, -0.2) == pytest.approx(1.0, abs=1e-12)


def test_packet_envelope_decay():
    k = np.array(P.k) / np.hypot(*P.k)
    x = np.array(P.x0) + 4 * P.sigma * k
    assert abs(P(*x)) <= np.exp(-8) + 1e-15


def test_packet_spectrum_peak():
    g = Grid.centered(0.5, 0.005)
    p = WavePacket((0.0, 0.0), (60.0, 30.0), 0.05)
    f = wavepacket_field(g, p)
    spec = np.abs(np.fft.fft2(f.values))
    ky = 2 * np.pi * np.fft.fftfreq(g.ny, g.h)
    kx = 2 * np.pi * np.fft.fftfreq(g.nx, g.h)
    j, i = np.unravel_index(np.argmax(spec), spec.shape)
    dk = 2 * np.pi / (g.nx * g.h)
    assert min(abs(kx[i] - 60), abs(kx[i] + 60)) <= dk
    assert min(abs(ky[j] - 30), abs(ky[j] + 30)) <= dk
    assert np.sign(kx[i]) * np.sign(ky[j]) > 0


def test_packet_resolution_error():
    with pytest.raises(ResolutionError):
        wavepacket_field(Grid.centered(1.0, 0.05), WavePacket((0, 0), (100.0, 0.0), 0.1))


def test_packet_margin_error():
    with pytest.raises(InvalidInputError):
        wavepacket_field(G, WavePacket((0.95, 0), (60.0, 0.0), 0.05))


@pytest.mark.parametrize("sigma, k", [(0.0, (1.0, 0.0)), (0.1, (0.0, 0.0))])
def test_packet_invalid(sigma, k):
    with pytest.raises(InvalidInputError):
        WavePacket((0, 0), k, sigma)


# -- radial profiles ---------------------------------------------------------------------

def test_eval_radial_printed_ghost():
    g = RadialProfile.ghost(9 / 4, (np.sqrt(3) / 3, -5 / 16, 83 / 5184))
    expect = np.sqrt(3) / 3 - 5 / 16 * 0.01 + 83 / 5184 * 1e-4
    assert eval_radial(g, 9 / 4 + 0.01) == pytest.approx(expect, abs=1e-15)
    assert expect == pytest.approx(0.574227, abs=1e-6)
    assert eval_radial(g, 9 / 4 - 0.01) == 0.0


def test_eval_radial_background_only():
    p = RadialProfile.tabulated([0.0, 1.0, 2.0], [3.0, 3.0, 3.0])
    assert eval_radial(p, 0.5) == 3.0
    assert eval_radial(p, 5.0) == 0.0


def test_eval_radial_rejects_negative():
    with pytest.raises(InvalidInputError):
        eval_radial(RadialProfile.disc(0.5), -1.0)


def test_profile_arithmetic():
    f = RadialProfile.disc(0.5)
    g = RadialProfile.ghost(2.25, (1.0,))
    d = f - g
    assert d(0.1) == 1.0 and d(3.0) == -1.0 and d(1.0) == 0.0
    assert d.breakpoints == [0.25, 2.25]


def test_empty_ghost_is_zero():
    assert RadialProfile.ghost(2.25, ())(3.0) == 0.0


def test_jump_location_must_be_positive():
    with pytest.raises(InvalidInputError):
        RadialProfile((JumpTerm(0.0, (1.0,)),))
