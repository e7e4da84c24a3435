"""The Abel operator pair and the sinogram-to-trace map.

``A h(t) = int_0^t r h(r) / sqrt(t^2 - r^2) dr`` is evaluated after the
substitution ``r = t sin(phi)``, which removes the endpoint singularity:
``A h(t) = t * int_0^{pi/2} sin(phi) h(t sin(phi)) dphi``.

The left inverse is ``B H(r) = 2/(pi r) d/dr int_0^r t H(t) / sqrt(r^2 - t^2) dt``,
i.e. ``B = (2/(pi r)) d/dr A``.
"""
from __future__ import annotations

import warnings
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from .errors import ConfigError, DomainError, InvalidInputError, SingularFrequencyError
from .radon import Sinogram, read_grid_csv, write_grid_csv

N_NODES = 400


@dataclass(frozen=True, eq=False)
class Samples1D:
    grid: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid, float)
        v = np.asarray(self.values, float)
        if g.ndim != 1 or g.shape != v.shape[:1]:
            raise InvalidInputError("grid and values must have matching leading length")
        if np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise InvalidInputError("grid must be positive and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def support(self) -> tuple[int, int] | None:
        nz = np.flatnonzero(np.any(np.reshape(self.values, (len(self.grid), -1)) != 0, axis=1))
        return (int(nz[0]), int(nz[-1])) if nz.size else None

    def interpolant(self):
        """Cubic spline of the samples: extrapolated down to r = 0, zero beyond the last sample."""
        spline = CubicSpline(self.grid, self.values, axis=0, bc_type="not-a-knot", extrapolate=True)
        hi = self.grid[-1]

        def ev(x):
            x = np.asarray(x, float)
            out = spline(np.clip(x, 0.0, hi))
            mask = x > hi
            if np.any(mask):
                out = np.where(mask.reshape(mask.shape + (1,) * (out.ndim - mask.ndim)), 0.0, out)
            return out
        return ev


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """``values[n, j]`` is the trace at ``(t_grid[n], s_grid[j])``; ``t_grid`` is uniform from 0."""
    t_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, float)
        s = np.asarray(self.s_grid, float)
        v = np.asarray(self.values, float)
        if v.shape != (len(t), len(s)):
            raise InvalidInputError(f"trace shape {v.shape} does not match grids ({len(t)}, {len(s)})")
        if len(t) > 1:
            dt = np.diff(t)
            if abs(t[0]) > 1e-12 or np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0] * len(t):
                raise ConfigError("trace time grid must be uniform and start at t = 0")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "values", v)

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    def norm(self) -> float:
        ds = self.s_grid[1] - self.s_grid[0] if len(self.s_grid) > 1 else 1.0
        return float(np.sqrt(np.sum(self.values ** 2) * self.dt * ds))

    def to_csv(self, path):
        write_grid_csv(path, {"kind": "trace"}, self.t_grid, self.s_grid, self.values)

    @classmethod
    def from_csv(cls, path) -> "BoundaryTrace":
        meta, t, s, v = read_grid_csv(path, "kind")
        if meta["kind"] != "trace":
            raise InvalidInputError(f"{path}: not a trace file (kind={meta['kind']})")
        return cls(t, s, v)


@lru_cache(maxsize=16)
def _nodes(n):
    x, w = roots_legendre(n)
    phi = (x + 1) * np.pi / 4
    return phi, w * np.pi / 4


def _as_callable(h):
    if isinstance(h, Samples1D):
        return h.interpolant()
    return h


def abel_apply(h, t=None, n_nodes: int = N_NODES) -> Samples1D:
    """``A h`` on ``t`` (default: the grid of ``h``); ``h`` may also be a callable."""
    if t is None:
        if not isinstance(h, Samples1D):
            raise InvalidInputError("an evaluation grid is required for callable input")
        t = h.grid
        if h.support is not None:
            lo, hi = h.support
            width = h.grid[hi] - h.grid[lo]
            if hi - lo < 4 and width > 0:
                warnings.warn("grid resolves the input with fewer than 4 samples", RuntimeWarning)
    t = np.asarray(t, float)
    func = _as_callable(h)
    phi, w = _nodes(n_nodes)
    sphi = np.sin(phi)
    ws = w * sphi
    probe = np.asarray(func(t[:1, None] * sphi[None, :1]))
    width = int(np.prod(probe.shape[2:])) if probe.ndim > 2 else 1
    block = max(1, 4_000_000 // (n_nodes * width))
    parts = []
    for i in range(0, len(t), block):
        tb = t[i:i + block]
        vals = func(tb[:, None] * sphi[None, :])
        tb = tb.reshape((-1,) + (1,) * (vals.ndim - 2))
        parts.append(tb * np.einsum("ij...,j->i...", vals, ws))
    return Samples1D(t, np.concatenate(parts, axis=0))


_PRINTED_KERNEL = False


def _inner(H, r, n_nodes, printed):
    """``int_0^r t H(t)/sqrt(r^2-t^2) dt``; ``printed`` drops the factor ``t`` (for mutation tests)."""
    phi, w = _nodes(n_nodes)
    sphi = np.sin(phi)
    vals = H(r[:, None] * sphi[None, :])
    if printed:
        return np.einsum("ij...,j->i...", vals, w)
    return r.reshape((-1,) + (1,) * (vals.ndim - 2)) * np.einsum("ij...,j->i...", vals, w * sphi)


def _derivative(y, x):
    """4th-order differences on a uniform grid: centered inside, one-sided at both ends."""
    h = x[1] - x[0]
    if len(x) < 6:
        return np.gradient(y, x, axis=0, edge_order=2)
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


def abel_invert(H: Samples1D, r=None, n_nodes: int = N_NODES, printed_kernel: bool | None = None) -> Samples1D:
    """Left inverse ``B`` of :func:`abel_apply` on the uniform grid ``r`` (default: ``H.grid``)."""
    if printed_kernel is None:
        printed_kernel = _PRINTED_KERNEL
    scale = np.max(np.abs(H.values)) if H.values.size else 0.0
    if scale > 0 and np.max(np.abs(H.values[0])) > 1e-2 * scale:
        raise DomainError("data must vanish near t = 0 (operators act on distributions supported in t > 0)")
    r = H.grid if r is None else np.asarray(r, float)
    dr = np.diff(r)
    if np.max(np.abs(dr - dr[0])) > 1e-9 * dr[0] * len(r):
        raise ConfigError("abel_invert needs a uniform r grid")
    inner = _inner(H.interpolant(), r, n_nodes, printed_kernel)
    d = _derivative(inner, r)
    shape = (-1,) + (1,) * (d.ndim - 1)
    return Samples1D(r, 2 / (np.pi * r.reshape(shape)) * d)


def principal_symbol_A(r: float, tau: float) -> complex:
    """``sqrt(pi/2) e^{-i pi/4} sqrt(r) (tau_+^{-1/2} + i tau_-^{-1/2})``."""
    if tau == 0:
        raise SingularFrequencyError("the symbol is singular at tau = 0")
    if not r > 0:
        raise InvalidInputError("r must be positive")
    plus = tau ** -0.5 if tau > 0 else 0.0
    minus = (-tau) ** -0.5 if tau < 0 else 0.0
    return np.sqrt(np.pi / 2) * np.exp(-1j * np.pi / 4) * np.sqrt(r) * (plus + 1j * minus)


def principal_symbol_B(r: float, tau: float) -> complex:
    return 1 / principal_symbol_A(r, tau)


def abel_matrix(r_grid, t) -> np.ndarray:
    """Matrix ``K`` with ``(K @ m)(t) = A[m_lin](t)``, ``m_lin`` the piecewise-linear
    interpolant of samples ``m`` on ``r_grid`` (zero below the first sample and
    above the last).  Integrals against each hat function are taken in closed form."""
    r = np.asarray(r_grid, float)
    t = np.asarray(t, float)
    n = len(r)
    K = np.zeros((len(t), n))
    a, b = r[:-1], r[1:]
    dr = b - a
    for i, ti in enumerate(t):
        m = a < ti
        if not np.any(m):
            continue
        lo, hi = a[m], np.minimum(b[m], ti)
        sa, sb = np.sqrt(ti * ti - lo * lo), np.sqrt(np.maximum(ti * ti - hi * hi, 0.0))
        i0 = (hi * hi - lo * lo) / (sa + sb)                       # int r / sqrt(t^2 - r^2)
        i1 = 0.5 * (lo * sa - hi * sb) + 0.5 * ti * ti * (np.arcsin(np.minimum(hi / ti, 1.0)) - np.arcsin(lo / ti))
        d = dr[m]
        wl = (b[m] * i0 - i1) / d                                  # hat falling from a
        wr = (i1 - a[m] * i0) / d                                  # hat rising to b
        k = np.flatnonzero(m)
        np.add.at(K[i], k, wl)
        np.add.at(K[i], k + 1, wr)
    return K


def lambda_from_sinogram(sg: Sinogram, t_grid) -> BoundaryTrace:
    """Boundary trace of the wave solution with Cauchy data ``(0, f)`` from its sinogram.

    ``A`` acts in ``r`` on the circular means ``R_gamma f / (2 pi r)``; this
    normalization is what makes the Poisson formula in the plane read
    ``u(t, p) = A[mean_p](t)``.  The means are interpolated linearly in ``r``
    and vanish below the first sampled radius.
    """
    t = np.asarray(t_grid, float)
    K = abel_matrix(sg.r_grid, t)
    return BoundaryTrace(t, sg.s_grid, K @ sg.circular_mean())
