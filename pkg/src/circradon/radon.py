"""Circular Radon transform with centers on a curve."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import roots_legendre

from .errors import ConfigError, InvalidInputError, NumericsError, TruncationError
from .fields import GridField, RadialProfile, write_pgm
from .geometry import Curve

CONVENTIONS = ("raw", "radial-normalized")


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Samples of the transform; ``values[i, j]`` belongs to ``(r_grid[i], s_grid[j])``."""
    r_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray = field(repr=False)
    convention: str = "raw"

    def __post_init__(self):
        r = np.asarray(self.r_grid, float)
        s = np.asarray(self.s_grid, float)
        v = np.asarray(self.values, float)
        if self.convention not in CONVENTIONS:
            raise InvalidInputError(f"unknown convention {self.convention!r}")
        if r.ndim != 1 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise InvalidInputError("r_grid must be strictly increasing and positive")
        if v.shape != (len(r), len(s)):
            raise InvalidInputError(f"values shape {v.shape} does not match grids ({len(r)}, {len(s)})")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("sinogram values must be finite")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "values", v)

    def to_raw(self) -> "Sinogram":
        if self.convention == "raw":
            return self
        return Sinogram(self.r_grid, self.s_grid, self.values * 2 * self.r_grid[:, None], "raw")

    def to_radial_normalized(self) -> "Sinogram":
        if self.convention == "radial-normalized":
            return self
        return Sinogram(self.r_grid, self.s_grid, self.values / (2 * self.r_grid[:, None]),
                        "radial-normalized")

    def circular_mean(self) -> np.ndarray:
        """Average of ``f`` over each circle, ``R_gamma f / (2 pi r)``."""
        return self.to_raw().values / (2 * np.pi * self.r_grid[:, None])

    def to_csv(self, path):
        write_grid_csv(path, {"convention": self.convention}, self.r_grid, self.s_grid, self.values)

    @classmethod
    def from_csv(cls, path) -> "Sinogram":
        meta, r, s, v = read_grid_csv(path, "convention")
        return cls(r, s, v, meta["convention"])

    def save_pgm(self, path):
        write_pgm(path, self.values[::-1])


def _uniform(a, name):
    a = np.asarray(a, float)
    if len(a) < 2:
        return float(a[0]), 1.0
    d = np.diff(a)
    if np.max(np.abs(d - d[0])) > 1e-9 * max(1.0, abs(d[0])) * len(a):
        raise InvalidInputError(f"{name} grid must be uniform for CSV export")
    return float(a[0]), float(d[0])


def write_grid_csv(path, meta: dict, rows, cols, values):
    """Header ``<meta keys>,r0,dr,nr,s0,ds,ns`` + one value row per entry of ``rows``."""
    r0, dr = _uniform(rows, "row")
    s0, ds = _uniform(cols, "column")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*meta.keys(), "r0", "dr", "nr", "s0", "ds", "ns"])
        w.writerow([*meta.values(), repr(r0), repr(dr), len(rows), repr(s0), repr(ds), len(cols)])
        for row in np.asarray(values):
            w.writerow([repr(float(v)) for v in row])


def read_grid_csv(path, *meta_keys):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd)
        vals = next(rd)
        expect = [*meta_keys, "r0", "dr", "nr", "s0", "ds", "ns"]
        if head[:len(meta_keys)] != list(meta_keys) or head[len(meta_keys):] != expect[len(meta_keys):]:
            raise InvalidInputError(f"{path}: unexpected header {head}")
        meta = dict(zip(meta_keys, vals[:len(meta_keys)]))
        r0, dr = float(vals[-6]), float(vals[-5])
        nr = int(vals[-4])
        s0, ds = float(vals[-3]), float(vals[-2])
        ns = int(vals[-1])
        data = np.array([[float(x) for x in row] for row in rd if row])
    if data.shape != (nr, ns):
        raise InvalidInputError(f"{path}: expected {nr}x{ns} values, found {data.shape}")
    return meta, r0 + dr * np.arange(nr), s0 + ds * np.arange(ns), data


def forward_sinogram(f, curve: Curve, r_grid, s_grid, n_theta: int = 256,
                     chunk: int = 4_000_000, support=None) -> Sinogram:
    """Trapezoid rule on each circle: ``sum_k f(gamma(s) + r e^{i theta_k}) * r * dtheta``.

    ``f`` is a :class:`GridField` (bilinear, zero outside its grid) or a
    vectorized callable ``f(x, y)``.  With ``support = (center, radius)`` a
    disc outside which ``f`` vanishes, only the arc inside that disc is
    integrated, by Gauss-Legendre with ``n_theta`` nodes.
    """
    r = np.asarray(r_grid, float)
    s = np.asarray(s_grid, float)
    if n_theta < 64:
        raise ConfigError("n_theta must be at least 64")
    if np.any(r <= 0):
        raise ConfigError("the r = 0 column is excluded; use positive radii")
    centers = np.atleast_2d(curve.point(s))
    if isinstance(f, GridField):
        _check_truncation(f, centers, r.max())
        func = f.sample
    else:
        func = f
    if support is not None:
        return Sinogram(r, s, _arc_sinogram(func, centers, r, n_theta, support, chunk), "raw")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty((len(r), len(s)))
    per = max(1, chunk // (len(r) * n_theta))
    for j0 in range(0, len(s), per):
        c = centers[j0:j0 + per]
        X = c[:, None, None, 0] + r[None, :, None] * ct
        Y = c[:, None, None, 1] + r[None, :, None] * st
        vals = func(X, Y)
        out[:, j0:j0 + per] = (vals.sum(axis=2) * (2 * np.pi / n_theta) * r[None, :]).T
    return Sinogram(r, s, out, "raw")


def _arc_sinogram(func, centers, r, n_theta, support, chunk):
    kc = np.asarray(support[0], float)
    rho = float(support[1])
    u, w = roots_legendre(n_theta)
    out = np.zeros((len(r), len(centers)))
    per = max(1, chunk // (len(r) * n_theta))
    for j0 in range(0, len(centers), per):
        c = centers[j0:j0 + per]
        v = kc - c
        d = np.hypot(v[:, 0], v[:, 1])[:, None]
        phi0 = np.arctan2(v[:, 1], v[:, 0])[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            cosa = (r[None, :] ** 2 + d ** 2 - rho ** 2) / (2 * r[None, :] * d)
        alpha = np.where(r[None, :] + d <= rho, np.pi, np.arccos(np.clip(cosa, -1.0, 1.0)))
        alpha = np.where(r[None, :] >= d + rho, 0.0, alpha)
        th = phi0[..., None] + alpha[..., None] * u
        X = c[:, None, None, 0] + r[None, :, None] * np.cos(th)
        Y = c[:, None, None, 1] + r[None, :, None] * np.sin(th)
        vals = func(X, Y)
        out[:, j0:j0 + per] = ((vals @ w) * alpha * r[None, :]).T
    return out


def _check_truncation(f: GridField, centers, rmax):
    g = f.grid
    lo = centers.min(axis=0) - rmax
    hi = centers.max(axis=0) + rmax
    outside = lo[0] < g.x[0] or lo[1] < g.y[0] or hi[0] > g.x[-1] or hi[1] > g.y[-1]
    if not outside:
        return
    v = f.values
    edge = max(np.abs(v[0]).max(), np.abs(v[-1]).max(), np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max())
    if edge > 0:
        raise TruncationError("circles leave the grid while the field is nonzero on its boundary")


def _half_angles(b, r):
    """``(theta, pi - theta)`` where ``1 + r^2 + 2 r cos(theta) = b``, or ``None``.

    ``1 -/+ cos(theta)`` are formed in factored form so both angles keep full
    relative precision when the crossing is near 0 or pi.
    """
    sb = np.sqrt(b)
    one_minus = (r - (sb - 1)) * (1 + r + sb) / (2 * r)
    one_plus = (r + (sb - 1)) * ((sb + 1) - r) / (2 * r)
    if one_minus <= 0 or one_plus <= 0:
        return None
    return 2 * np.arctan2(np.sqrt(one_minus), np.sqrt(one_plus)), 2 * np.arctan2(np.sqrt(one_plus), np.sqrt(one_minus))


def radial_transform(F: RadialProfile, r: float, epsabs: float = 1e-13) -> float:
    """``int_0^pi F(1 + r^2 + 2 r cos(theta)) dtheta``: the radially normalized transform
    ``R_gamma f / (2r)`` for ``f = F(|x|^2)`` and the unit circle as ``gamma``.

    The half ``[pi/2, pi]`` is integrated in ``phi = pi - theta``; both halves
    are split where the argument crosses a breakpoint of ``F``.
    """
    if not r > 0:
        raise InvalidInputError("r must be positive")
    half = np.pi / 2
    cuts_t, cuts_p = [0.0, half], [0.0, half]
    for b in F.breakpoints:
        ang = _half_angles(b, r) if b > 0 else None
        if ang is None:
            continue
        th, ph = ang
        (cuts_t if th < half else cuts_p).append(float(th if th < half else ph))
    total = 0.0
    for cuts, sign in ((cuts_t, 1.0), (cuts_p, -1.0)):
        cuts = sorted(set(cuts))
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a <= 0:
                continue
            with warnings.catch_warnings():
                # convergence is judged from the returned error estimate below
                warnings.simplefilter("ignore", IntegrationWarning)
                val, err = quad(lambda x: float(F(1 + r * r + sign * 2 * r * np.cos(x))), a, b,
                                epsabs=epsabs, epsrel=1e-14, limit=200)
            if err > 1e3 * max(epsabs, 1e-13 * abs(val)):
                raise NumericsError(f"adaptive quadrature did not converge at r={r} (err {err:.2e})")
            total += val
    return total


def max_radial_derivative(sg: Sinogram, r_lo: float, r_hi: float, s_mask=None) -> float:
    """``max |d/dr values|`` over ``r_lo <= r <= r_hi`` by first differences."""
    d = np.diff(sg.values, axis=0) / np.diff(sg.r_grid)[:, None]
    rm = 0.5 * (sg.r_grid[1:] + sg.r_grid[:-1])
    sel = (rm >= r_lo) & (rm <= r_hi)
    if s_mask is not None:
        d = d[:, np.asarray(s_mask, bool)]
    if not np.any(sel) or d.shape[1] == 0:
        raise InvalidInputError("the requested band contains no samples")
    return float(np.abs(d[sel]).max())


def support_bounds(center, radius: float, curve: Curve, s: float) -> tuple[float, float]:
    """Min/max distance from ``curve.point(s)`` to the disc ``|x - center| <= radius``."""
    d = float(np.linalg.norm(curve.point(s) - np.asarray(center, float)))
    return max(0.0, d - radius), d + radius


def disc_arc_length(r, d, radius):
    """Length of the part of the circle of radius ``r`` lying inside a disc of radius
    ``radius`` whose center is at distance ``d`` from the circle's center."""
    r = np.asarray(r, float)
    c = (r ** 2 + d ** 2 - radius ** 2) / (2 * r * d)
    ang = np.arccos(np.clip(c, -1.0, 1.0))
    full = (r + d <= radius)
    return np.where(full, 2 * np.pi * r, 2 * r * ang)
