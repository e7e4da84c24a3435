import numpy as np
import pytest
from hypothesis import given, strategies as st

from circradon.errors import ConfigError, InvalidInputError, TruncationError
from circradon.fields import Grid, GridField, JumpTerm, RadialProfile, disc_indicator, gaussian_field
from circradon.geometry import circle
from circradon.radon import (Sinogram, disc_arc_length, forward_sinogram, max_radial_derivative,
                             radial_transform, support_bounds)

from _oracles import disc_arc, example1_a0, example1_rf

C = circle()
S = C.length * np.arange(16) / 16


def disc(x, y):
    return (np.hypot(x, y) < 0.5).astype(float)


def test_zero_field_gives_zero():
    sg = forward_sinogram(lambda x, y: np.zeros(np.broadcast(x, y).shape), C, [0.2, 0.5], S)
    assert not np.any(sg.values)


def test_disc_sinogram_independent_of_s(rng):
    s = rng.uniform(0, C.length, 12)
    r = np.array([0.7, 1.0, 1.3])
    sg = forward_sinogram(disc, C, r, s, n_theta=4096)
    # each of the two edge crossings costs at most one node weight r * dtheta
    assert np.all(np.ptp(sg.values, axis=1) <= 2 * r * 2 * np.pi / 4096)
    assert np.all(np.abs(sg.values - disc_arc(r, 1.0, 0.5)[:, None]) <= 2 * 2 * np.pi / 4096)


def test_disc_arc_at_r_075():
    expect = 2 * 0.75 * np.arccos((0.75 ** 2 + 0.75) / (2 * 0.75))
    assert expect == pytest.approx(0.7580, abs=1e-4)
    sg = forward_sinogram(disc, C, [0.75], S, n_theta=128, support=((0, 0), 0.5))
    np.testing.assert_allclose(sg.values[0], expect, rtol=0, atol=1e-13)
    assert disc_arc_length(0.75, 1.0, 0.5) == pytest.approx(expect, abs=1e-15)


def test_trapezoid_on_indicator_converges():
    sg = forward_sinogram(disc, C, [0.75], S[:1], n_theta=8192)
    assert sg.values[0, 0] == pytest.approx(disc_arc(0.75, 1.0, 0.5), rel=1e-3)


def test_arc_rule_matches_trapezoid_for_smooth_field():
    f = lambda x, y: np.exp(-((x - 0.1) ** 2 + y ** 2) / (2 * 0.05 ** 2))
    r = np.linspace(0.5, 1.4, 10)
    a = forward_sinogram(f, C, r, S, n_theta=4096)
    b = forward_sinogram(f, C, r, S, n_theta=128, support=((0.1, 0.0), 0.6))
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(alpha, beta):
    f = lambda x, y: np.exp(-((x - 0.2) ** 2 + y ** 2) / 0.02)
    g = lambda x, y: np.cos(3 * x) * np.exp(-(x ** 2 + (y + 0.1) ** 2) / 0.05)
    r = np.linspace(0.3, 1.5, 7)
    a = forward_sinogram(f, C, r, S, n_theta=128).values
    b = forward_sinogram(g, C, r, S, n_theta=128).values
    c = forward_sinogram(lambda x, y: alpha * f(x, y) + beta * g(x, y), C, r, S, n_theta=128).values
    np.testing.assert_allclose(c, alpha * a + beta * b, atol=1e-12 * (abs(alpha) + abs(beta) + 1) * np.abs(c).max())


def test_support_vanishing():
    center, rad = np.array([0.3, 0.0]), 0.25
    g = Grid.centered(2.6, 0.005)
    f = disc_indicator(g, rad, center)
    r = np.linspace(0.01, 2.0, 200)
    sg = forward_sinogram(f, C, r, S, n_theta=256)
    for j, s in enumerate(S):
        lo, hi = support_bounds(center, rad, C, s)
        out = (r < lo - g.h) | (r > hi + g.h)
        assert np.all(np.abs(sg.values[out, j]) < 1e-8)


@pytest.mark.parametrize("center, s, bounds", [
    ((0, 0), 1.234, (0.5, 1.5)),
    ((0.3, 0), 0.0, (0.2, 1.2)),
])
def test_support_bounds(center, s, bounds):
    assert support_bounds(center, 0.5, C, s) == pytest.approx(bounds, abs=1e-12)


def test_rotational_equivariance():
    phi = 2 * np.pi / 16
    c0 = np.array([0.3, 0.1])
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    c1 = rot @ c0

    def gauss(c):
        return lambda x, y: np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / 0.01)
    r = np.linspace(0.3, 1.5, 9)
    a = forward_sinogram(gauss(c0), C, r, S, n_theta=512).values
    b = forward_sinogram(gauss(c1), C, r, S, n_theta=512).values
    np.testing.assert_allclose(np.roll(a, 1, axis=1), b, atol=1e-10)


def test_radial_consistency():
    """Direct quadrature over circles / (2r) agrees with the radial fast path."""
    # (1 - |x|^2)^2 inside the unit disc: C^1 across the rim
    prof = RadialProfile((JumpTerm(1.0, (0.0, 0.0, 1.0), outside=False),))
    r = np.array([0.3, 0.8, 1.2, 1.7])
    sg = forward_sinogram(prof.as_function(), C, r, S[:2], n_theta=4096)
    fast = np.array([radial_transform(prof, x) for x in r])
    np.testing.assert_allclose(sg.values[:, 0] / (2 * r), fast, rtol=1e-4)


def test_truncation_error():
    g = Grid.centered(0.5, 0.01)
    f = GridField(g, np.ones((g.ny, g.nx)))
    with pytest.raises(TruncationError):
        forward_sinogram(f, C, [1.0], S)


def test_input_validation():
    with pytest.raises(ConfigError):
        forward_sinogram(disc, C, [0.5], S, n_theta=32)
    with pytest.raises(ConfigError):
        forward_sinogram(disc, C, [0.0, 0.5], S)


# -- radial transform -----------------------------------------------------------------

def test_radial_zero():
    assert radial_transform(RadialProfile(), 0.7) == 0.0


@pytest.mark.parametrize("h", [1e-6, 1e-3, 0.01, 0.1, 0.4])
def test_radial_disc_closed_form(h):
    assert radial_transform(RadialProfile.disc(0.5), 0.5 + h) == pytest.approx(float(example1_rf(h)), abs=1e-12)


def test_radial_disc_value_at_h_001():
    assert radial_transform(RadialProfile.disc(0.5), 0.51) == pytest.approx(np.arccos(1.0101 / 1.02), abs=1e-13)
    assert np.arccos(1.0101 / 1.02) == pytest.approx(0.139439, abs=1e-6)


@pytest.mark.parametrize("h", [1e-6, 1e-3, 0.05, 0.3])
def test_radial_ghost_step_closed_form(h):
    val = radial_transform(RadialProfile.ghost(9 / 4, (1.0,)), 0.5 + h)
    assert val == pytest.approx(float(example1_a0(h)), abs=1e-12)


def test_radial_vanishes_before_jump():
    assert radial_transform(RadialProfile.disc(0.5), 0.49) == 0.0


def test_radial_requires_positive_r():
    with pytest.raises(InvalidInputError):
        radial_transform(RadialProfile.disc(0.5), 0.0)


# -- containers -------------------------------------------------------------------------

def test_sinogram_conventions_roundtrip(rng):
    sg = Sinogram([0.1, 0.2, 0.3], [0.0, 1.0], rng.normal(size=(3, 2)))
    back = sg.to_radial_normalized().to_raw()
    np.testing.assert_allclose(back.values, sg.values, rtol=1e-15)
    np.testing.assert_allclose(sg.to_radial_normalized().values, sg.values / (2 * sg.r_grid[:, None]))


def test_sinogram_validation():
    with pytest.raises(InvalidInputError):
        Sinogram([0.1, 0.1], [0.0], np.zeros((2, 1)))
    with pytest.raises(InvalidInputError):
        Sinogram([0.1, 0.2], [0.0], np.zeros((2, 2)))
    with pytest.raises(InvalidInputError):
        Sinogram([0.1], [0.0], np.zeros((1, 1)), "scaled")


def test_sinogram_csv_roundtrip(tmp_path, rng):
    sg = Sinogram(0.01 * np.arange(1, 6), 0.5 * np.arange(4), rng.normal(size=(5, 4)), "radial-normalized")
    sg.to_csv(tmp_path / "s.csv")
    head = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert head == "convention,r0,dr,nr,s0,ds,ns"
    back = Sinogram.from_csv(tmp_path / "s.csv")
    assert back.convention == "radial-normalized"
    np.testing.assert_array_equal(back.values, sg.values)
    np.testing.assert_allclose(back.r_grid, sg.r_grid, rtol=1e-14)


def test_sinogram_pgm(tmp_path):
    sg = Sinogram([0.1, 0.2], [0.0, 1.0, 2.0], [[0, 1, 2], [3, 4, 5]])
    sg.save_pgm(tmp_path / "s.pgm")
    assert (tmp_path / "s.pgm").read_bytes().startswith(b"P5\n3 2\n255\n")


def test_max_radial_derivative():
    r = np.linspace(0.1, 1.0, 91)
    sg = Sinogram(r, [0.0, 1.0], np.stack([3 * r, -2 * r], axis=1))
    assert max_radial_derivative(sg, 0.2, 0.8) == pytest.approx(3.0)
    assert max_radial_derivative(sg, 0.2, 0.8, [False, True]) == pytest.approx(2.0)
