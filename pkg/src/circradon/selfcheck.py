"""Quick invariant suite behind ``circradon selfcheck``.

Each check returns a measured value and its threshold.  Output lines carry
no timings, so a fixed seed gives byte-identical reports.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CircRadonError


@dataclass(frozen=True)
class Check:
    name: str
    run: Callable          # rng -> measured value
    limit: float
    larger_is_better: bool = False

    def verdict(self, value: float) -> bool:
        if not np.isfinite(value):
            return False
        return value >= self.limit if self.larger_is_better else value <= self.limit


def smooth_bump(x, c, a):
    q = ((np.asarray(x, float) - c) / a) ** 2
    out = np.zeros_like(q)
    m = q < 1
    out[m] = np.exp(1 - 1 / (1 - q[m]))
    return out


def random_bump(rng, lo=0.3, hi=2.0):
    """Center and half width of a smooth bump supported inside ``(lo, hi)``."""
    a = rng.uniform(0.1, 0.3)
    return rng.uniform(lo + a, hi - a), a


def abel_left_inverse_error(c, a, dr=1e-3, r_max=2.1, interior=0.8):
    """``max |B A h - h| / max |h|`` over the central ``interior`` fraction of the support."""
    from .abel import abel_apply, abel_invert
    r = dr * np.arange(1, int(round(r_max / dr)) + 1)
    H = abel_apply(lambda x: smooth_bump(x, c, a), r)
    B = abel_invert(H)
    h = smooth_bump(r, c, a)
    m = np.abs(r - c) <= interior * a
    return float(np.max(np.abs(B.values[m] - h[m])) / np.max(np.abs(h)))


def _mirror_involution(rng):
    from .geometry import Covector, circle, first_hit, mirror
    c = circle()
    worst = 0.0
    for _ in range(20):
        rad, ang = 0.9 * np.sqrt(rng.uniform()), rng.uniform(0, 2 * np.pi)
        phi = rng.uniform(0, 2 * np.pi)
        cv = Covector(rad * np.array([np.cos(ang), np.sin(ang)]), [np.cos(phi), np.sin(phi)])
        s = first_hit(c, cv).s
        back = mirror(c, mirror(c, cv, s), s)
        worst = max(worst, np.abs(back.x - cv.x).max(), np.abs(back.xi - cv.xi).max())
    return worst


def _distance_preservation(rng):
    from .geometry import Covector, circle, first_hit, mirror
    c = circle()
    worst = 0.0
    for _ in range(20):
        x = rng.uniform(-0.6, 0.6, 2)
        phi = rng.uniform(0, 2 * np.pi)
        cv = Covector(x, [np.cos(phi), np.sin(phi)])
        h = first_hit(c, cv)
        worst = max(worst, abs(np.linalg.norm(x - h.point) - np.linalg.norm(mirror(c, cv).x - h.point)))
    return worst


def _billiard_chord_oracle(rng):
    """Flow on the unit circle against the closed form: chords keep their angle with the wall."""
    from .geometry import Covector, billiard_flow, circle
    c = circle()
    x = rng.uniform(-0.5, 0.5, 2)
    phi = rng.uniform(0, 2 * np.pi)
    d = np.array([np.cos(phi), np.sin(phi)])
    # first wall hit and chord geometry
    b = x @ d
    t1 = -b + np.sqrt(b * b - x @ x + 1)
    p = x + t1 * d
    alpha = np.arctan2(p[1], p[0])
    delta = np.pi - 2 * np.arccos(abs(p @ d))       # angle subtended by each chord
    sgn = np.sign(p[0] * d[1] - p[1] * d[0])
    chord = 2 * np.cos(np.arccos(abs(p @ d)))
    worst = 0.0
    for k in (0, 10, 25, 50):
        t = t1 + k * chord + 0.5 * chord
        ak = alpha + sgn * delta * k
        a0, a1 = np.array([np.cos(ak), np.sin(ak)]), np.array([np.cos(ak + sgn * delta), np.sin(ak + sgn * delta)])
        expect = 0.5 * (a0 + a1)
        got = billiard_flow(c, Covector(x, d), t)
        worst = max(worst, np.abs(got.x - expect).max())
    return worst


def _first_artifact_is_mirror(rng):
    from .geometry import Covector, artifact_set, circle, mirror
    c = circle()
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(-0.6, 0.6, 2)
        phi = rng.uniform(0, 2 * np.pi)
        cv = Covector(x, [np.cos(phi), np.sin(phi)])
        link = next(a for a in artifact_set(c, cv, 2.5) if a.segment == 1)
        m = mirror(c, cv)
        worst = max(worst, np.abs(link.covector.x - m.x).max(), np.abs(link.covector.xi - m.xi).max())
    return worst


def _disc_arc_length(rng):
    from .geometry import circle
    from .radon import disc_arc_length, forward_sinogram

    def f(x, y):
        return (np.hypot(x, y) < 0.5).astype(float)
    sg = forward_sinogram(f, circle(), [0.75], [0.0, 1.0, 2.0], n_theta=128, support=((0.0, 0.0), 0.5))
    return float(np.abs(sg.values[0] - disc_arc_length(0.75, 1.0, 0.5)).max())


def _abel_exact_pairs(rng):
    from .abel import abel_apply
    t = np.linspace(0.05, 2.0, 40)
    e1 = np.abs(abel_apply(lambda x: np.ones_like(x), t).values - t).max()
    e2 = np.abs(abel_apply(lambda x: x, t).values - np.pi * t ** 2 / 4).max()
    return float(max(e1, e2))


def _abel_left_inverse(rng):
    return max(abel_left_inverse_error(*random_bump(rng)) for _ in range(3))


def _rf_leading(rng):
    from .cancel import disc_series
    return abs(disc_series(3).coeffs[0] - np.sqrt(2))


def _ghost_a0(rng):
    from .cancel import example_ghost
    return abs(example_ghost(1).a[0] - np.sqrt(3) / 3)


def _energy_drift(rng):
    from .fields import bump_field
    from .wave import WaveConfig, energy_history
    cfg = WaveConfig.build(1.0, 0.02, 1.0, sponge=0)
    e = energy_history(bump_field(cfg.grid, (0.1, 0.0), 0.3), cfg, 2.0)
    return float(np.abs(e - e[0]).max() / e[0])


def _finite_speed(rng):
    from .fields import bump_field
    from .geometry import circle
    from .wave import WaveConfig, forward_trace
    c = circle()
    T = 1.0
    cfg = WaveConfig.build(WaveConfig.causal_half_width(c, T, 1.0), 0.01, T, n_s=64)
    f = bump_field(cfg.grid, (0.0, 0.0), 0.3)
    tr = forward_trace(f, cfg, c)
    early = tr.t_grid < 0.7 - 2 * cfg.grid.h
    return float(np.abs(tr.values[early]).max() / np.abs(f.values).max())


def _cone(rng):
    from .fields import bump_field
    from .geometry import circle
    from .wave import WaveConfig, cone_diagnostic, forward_trace
    c = circle()
    T = 3.0
    cfg = WaveConfig.build(WaveConfig.causal_half_width(c, T, 0.5), 0.02, T, n_s=128)
    tr = forward_trace(bump_field(cfg.grid, (0.1, 0.0), 0.3), cfg, c)
    return cone_diagnostic(tr, 1.0, c)


CHECKS = (
    Check("geometry.mirror_involution", _mirror_involution, 1e-12),
    Check("geometry.distance_preservation", _distance_preservation, 1e-12),
    Check("geometry.billiard_chord_oracle", _billiard_chord_oracle, 1e-8),
    Check("geometry.first_artifact_is_mirror", _first_artifact_is_mirror, 1e-10),
    Check("radon.disc_arc_length", _disc_arc_length, 1e-10),
    Check("abel.exact_pairs", _abel_exact_pairs, 1e-8),
    Check("abel.left_inverse", _abel_left_inverse, 1e-5),
    Check("cancel.rf_leading_coefficient", _rf_leading, 1e-5),
    Check("cancel.ghost_a0", _ghost_a0, 1e-6),
    Check("wave.closed_box_energy_drift", _energy_drift, 1e-3),
    Check("wave.finite_speed", _finite_speed, 1e-6),
    Check("wave.cone_fraction", _cone, 0.05),
)


def run_checks(seed: int = 0, checks=CHECKS) -> tuple[list[str], bool]:
    lines, ok = [], True
    for chk in checks:
        rng = np.random.default_rng(seed)
        try:
            value = float(chk.run(rng))
            passed = chk.verdict(value)
            detail = f"{value:.3e} ({'>=' if chk.larger_is_better else '<='} {chk.limit:.0e})"
        except CircRadonError as exc:
            passed, detail = False, f"error: {exc}"
        ok &= passed
        lines.append(f"{'PASS' if passed else 'FAIL'} {chk.name} {detail}")
    lines.append(f"{'ALL PASS' if ok else 'SOME CHECKS FAILED'} ({len(checks)} checks, seed {seed})")
    return lines, ok
