"""Leapfrog solver for u_tt = Laplace(u) in the plane and the operators built on it.

* forward trace of the solution with Cauchy data (0, f) on the curve,
* backward (incoming) solves with Dirichlet data on the curve, giving the
  time-reversal reconstruction, the one-sided inverses and the ghost map,
* the cone diagnostic on the spectrum of a trace.

Backward solves impose the curve data through Shortley-Weller cut cells:
the stencil arm crossing the curve is shortened to the crossing point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix

from .abel import BoundaryTrace, lambda_from_sinogram
from .errors import ConfigError, NotApplicableError
from .fields import Grid, GridField, bilinear_matrix
from .geometry import Circle, Covector, Curve, classify_covector
from .radon import Sinogram

log = logging.getLogger(__name__)

CFL = 0.9 / np.sqrt(2)


@dataclass(frozen=True)
class WaveConfig:
    """Solver settings; ``grid`` includes the ``sponge`` cells at its edges."""
    grid: Grid
    dt: float
    T: float
    T0: float
    sponge: int = 40
    n_s: int = 256
    sponge_strength: float = 1e-4   # target amplitude reflection of the layer

    def __post_init__(self):
        if not self.dt > 0 or self.dt > CFL * self.grid.h * (1 + 1e-12):
            raise ConfigError(f"dt={self.dt} violates the CFL bound {CFL * self.grid.h:.6g}")
        if not 0 < self.T0 < self.T:
            raise ConfigError(f"need 0 < T0 < T, got T0={self.T0}, T={self.T}")
        if self.sponge < 0 or 2 * self.sponge >= min(self.grid.nx, self.grid.ny):
            raise ConfigError("sponge width does not fit in the grid")

    @classmethod
    def build(cls, half_width: float, h: float, T: float, T0: float | None = None,
              sponge: int = 40, n_s: int = 256, cfl: float = 0.9) -> "WaveConfig":
        """Square grid covering [-half_width, half_width]^2 plus the sponge cells."""
        grid = Grid.centered(half_width + sponge * h, h)
        n = int(np.ceil(T / (cfl * h / np.sqrt(2))))
        return cls(grid, T / n, T, 0.8 * T if T0 is None else T0, sponge, n_s)

    @staticmethod
    def causal_half_width(curve: Curve, T: float, reach: float, margin: float = 0.05) -> float:
        """Half width for which echoes from the grid edge reach the curve only after ``T``.

        ``reach`` bounds ``|x|`` over the initial support.
        """
        s = np.linspace(0, curve.length, 512, endpoint=False)
        rc = float(np.max(np.linalg.norm(curve.point(s), axis=1)))
        return max(rc, reach) + margin if T <= 0 else (T + reach + rc) / 2 + margin

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def t_grid(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def s_grid(self, curve: Curve) -> np.ndarray:
        return curve.length * np.arange(self.n_s) / self.n_s

    def refined(self, factor: int = 2) -> "WaveConfig":
        g = self.grid
        half = (g.nx - 1) * g.h / 2 - self.sponge * g.h
        c = (g.origin[0] + (g.nx - 1) * g.h / 2, g.origin[1] + (g.ny - 1) * g.h / 2)
        if abs(c[0]) > 1e-12 or abs(c[1]) > 1e-12 or g.nx != g.ny:
            raise ConfigError("refinement is only defined for centered square grids")
        return WaveConfig.build(half, g.h / factor, self.T, self.T0, self.sponge * factor, self.n_s)

    def chi(self, t):
        """1 on [0, T0], 0 at T, quintic smoothstep in between."""
        x = np.clip((np.asarray(t, float) - self.T0) / (self.T - self.T0), 0.0, 1.0)
        return 1.0 - x ** 3 * (10 - 15 * x + 6 * x * x)

    def interior_box(self):
        g = self.grid
        w = self.sponge * g.h
        return (g.x[0] + w, g.x[-1] - w, g.y[0] + w, g.y[-1] - w)

    def check_arrival_time(self, curve: Curve, support_center, support_radius: float):
        """Require T0 (hence T) to exceed the largest distance from the curve to the support disc."""
        s = np.linspace(0, curve.length, 2048, endpoint=False)
        dmax = float(np.max(np.linalg.norm(curve.point(s) - np.asarray(support_center, float), axis=1))) + support_radius
        if not self.T0 > dmax:
            raise ConfigError(f"T0={self.T0:.4g} (and T={self.T:.4g}) must exceed max |x - y| over "
                              f"x on the curve, y in the support = {dmax:.4g}")
        return dmax


@dataclass(frozen=True, eq=False)
class CauchySlice:
    u: GridField
    ut: GridField
    t: float


# -- kernels -----------------------------------------------------------------

@njit(cache=True)
def _leapfrog(u, u_old, out, inv, m, active, r2):
    ny, nx = u.shape
    for j in range(1, ny - 1):
        for i in range(1, nx - 1):
            if active[j, i]:
                lap = u[j, i + 1] + u[j, i - 1] + u[j + 1, i] + u[j - 1, i] - 4.0 * u[j, i]
                out[j, i] = (2.0 * u[j, i] - m[j, i] * u_old[j, i] + r2 * lap) * inv[j, i]
            else:
                out[j, i] = 0.0


@njit(cache=True)
def _laplacian(u, out, h2):
    ny, nx = u.shape
    for j in range(1, ny - 1):
        for i in range(1, nx - 1):
            out[j, i] = (u[j, i + 1] + u[j, i - 1] + u[j + 1, i] + u[j - 1, i] - 4.0 * u[j, i]) / h2


def _lap(u, h):
    out = np.zeros_like(u)
    _laplacian(u, out, h * h)
    return out


def sponge_profile(grid: Grid, width: int, dt: float, reflection: float = 1e-4):
    """Damping coefficient, quadratic in the depth into the edge layer."""
    if width == 0:
        return np.zeros((grid.ny, grid.nx))
    L = width * grid.h
    smax = 3.0 * np.log(1.0 / reflection) / (2.0 * L)
    ix = np.arange(grid.nx)
    iy = np.arange(grid.ny)
    dx = np.maximum(np.maximum(width - ix, ix - (grid.nx - 1 - width)), 0) / width
    dy = np.maximum(np.maximum(width - iy, iy - (grid.ny - 1 - width)), 0) / width
    return smax * (np.maximum(dx[None, :], dy[:, None]) ** 2)


class Solver:
    """Two-level leapfrog state on a grid with an optional sponge and Dirichlet band.

    Nodes outside ``active`` are held at zero except the ``band`` nodes,
    whose values are imposed each step.  A single instance is driven by one
    worker; distinct instances are independent.
    """

    def __init__(self, grid: Grid, dt: float, active=None, sponge: int = 0,
                 reflection: float = 1e-4):
        self.grid = grid
        self.dt = dt
        shape = (grid.ny, grid.nx)
        self.active = np.ones(shape, bool) if active is None else np.asarray(active, bool).copy()
        self.active[0, :] = self.active[-1, :] = False
        self.active[:, 0] = self.active[:, -1] = False
        sig = sponge_profile(grid, sponge, dt, reflection)
        s = 0.5 * sig * dt
        self.sigma = sig
        self.inv = 1.0 / (1.0 + s)
        self.m = 1.0 - s
        self.r2 = (dt / grid.h) ** 2
        self.u_old = np.zeros(shape)
        self.u = np.zeros(shape)
        self.band = None
        self.step_count = 0

    def set_band(self, flat_index):
        self.band = np.asarray(flat_index, np.int64)

    def start(self, u0, ut0):
        """Second-order start from Cauchy data ``(u0, ut0)``."""
        h, dt = self.grid.h, self.dt
        u0 = np.where(self.active, u0, 0.0)
        ut0 = np.where(self.active, ut0, 0.0)
        utt = _lap(u0, h) - self.sigma * ut0
        uttt = _lap(ut0, h)
        self.u_old = u0.copy()
        self.u = np.where(self.active, u0 + dt * ut0 + 0.5 * dt * dt * utt + dt ** 3 / 6 * uttt, 0.0)
        self.step_count = 1

    def step(self, band_values=None):
        out = np.empty_like(self.u)
        out[0, :] = out[-1, :] = 0.0
        out[:, 0] = out[:, -1] = 0.0
        _leapfrog(self.u, self.u_old, out, self.inv, self.m, self.active, self.r2)
        if self.band is not None and band_values is not None:
            out.ravel()[self.band] = band_values
        self.u_old, self.u = self.u, out
        self.step_count += 1

    def energy(self):
        """Leapfrog-conserved energy at the half step: |D_t u|^2 + grad u^{n+1} . grad u^n."""
        h = self.grid.h
        ut = (self.u - self.u_old) / self.dt
        gx = (np.diff(self.u, axis=1) * np.diff(self.u_old, axis=1)).sum()
        gy = (np.diff(self.u, axis=0) * np.diff(self.u_old, axis=0)).sum()
        return float((ut ** 2).sum() * h * h + gx + gy)

    def energy_centered(self, u_next):
        """``sum(u_t^2 + |grad u|^2) h^2`` with a centered time difference at the current level."""
        h = self.grid.h
        ut = (u_next - self.u_old) / (2 * self.dt)
        g2 = (np.diff(self.u, axis=1) ** 2).sum() + (np.diff(self.u, axis=0) ** 2).sum()
        return float((ut ** 2).sum() * h * h + g2)


# -- geometry helpers ------------------------------------------------------------

def inside_mask(curve: Curve, grid: Grid):
    X, Y = grid.mesh()
    if isinstance(curve, Circle):
        return np.hypot(X - curve.center[0], Y - curve.center[1]) < curve.radius
    s = np.linspace(0, curve.length, 4096, endpoint=False)
    p = curve.point(s)
    q = np.roll(p, -1, axis=0)
    xs, ys = grid.x, grid.y
    inside = np.zeros(X.shape, bool)
    # even-odd rule: each edge toggles the nodes left of its crossing, row by row
    for (xi, yi), (xj, yj) in zip(p, q):
        if yi == yj:
            continue
        j0 = np.searchsorted(ys, min(yi, yj), side="right")
        j1 = np.searchsorted(ys, max(yi, yj), side="right")
        for j in range(j0, j1):
            xint = xi + (ys[j] - yi) * (xj - xi) / (yj - yi)
            inside[j, :np.searchsorted(xs, xint, side="left")] ^= True
    return inside


def interior_is_left(curve: Curve) -> bool:
    s = np.linspace(0, curve.length, 2048, endpoint=False)
    p = curve.point(s)
    area = 0.5 * np.sum(p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1])
    return area > 0


def side_mask(curve: Curve, grid: Grid, side: str):
    if side not in ("left", "right", "interior", "exterior"):
        raise ConfigError(f"unknown side {side!r}")
    inside = inside_mask(curve, grid)
    if side in ("interior", "exterior"):
        return inside if side == "interior" else ~inside
    want_inside = (side == "left") == interior_is_left(curve)
    return inside if want_inside else ~inside


def band_nodes(active):
    """Inactive nodes with an active 4-neighbour."""
    a = active
    nb = np.zeros_like(a)
    nb[1:, :] |= a[:-1, :]
    nb[:-1, :] |= a[1:, :]
    nb[:, 1:] |= a[:, :-1]
    nb[:, :-1] |= a[:, 1:]
    return nb & ~a


def _periodic_interp_matrix(s_grid, length, s_query):
    ns = len(s_grid)
    ds = length / ns
    if np.max(np.abs(np.asarray(s_grid) - ds * np.arange(ns))) > 1e-9 * length:
        raise ConfigError("trace s-grid must be uniform and periodic over the curve length")
    f = np.mod(np.asarray(s_query, float), length) / ds
    i0 = np.floor(f).astype(np.int64) % ns
    a = f - np.floor(f)
    rows = np.repeat(np.arange(len(f)), 2)
    cols = np.stack([i0, (i0 + 1) % ns], axis=1).ravel()
    w = np.stack([1 - a, a], axis=1).ravel()
    return csr_matrix((w, (rows, cols)), shape=(len(f), ns))


def _trace_sampler(curve: Curve, grid: Grid, s_grid):
    pts = np.atleast_2d(curve.point(s_grid))
    return bilinear_matrix(grid, pts[:, 0], pts[:, 1])


# -- operators -------------------------------------------------------------------

def _check_field(f: GridField, cfg: WaveConfig):
    if f.grid != cfg.grid:
        raise ConfigError("field grid does not match the solver grid")


def forward_trace(f: GridField, cfg: WaveConfig, curve: Curve, closed_box: bool = False) -> BoundaryTrace:
    """Trace on the curve of the whole-plane solution with ``u = 0, u_t = f`` at t = 0."""
    _check_field(f, cfg)
    g = cfg.grid
    x0, x1, y0, y1 = cfg.interior_box()
    X, Y = g.mesh()
    margin = 4 * g.h
    inner = (X > x0 + margin) & (X < x1 - margin) & (Y > y0 + margin) & (Y < y1 - margin)
    if np.any(np.abs(f.values[~inner]) > 1e-12 * np.abs(f.values).max(initial=0.0)):
        log.warning("phantom support reaches into the sponge layer; the trace may be truncated")
    s_grid = cfg.s_grid(curve)
    M = _trace_sampler(curve, g, s_grid)
    solver = Solver(g, cfg.dt, sponge=0 if closed_box else cfg.sponge, reflection=cfg.sponge_strength)
    solver.start(np.zeros_like(f.values), f.values)
    n = cfg.n_steps
    out = np.empty((n + 1, len(s_grid)))
    out[0] = M @ solver.u_old.ravel()
    out[1] = M @ solver.u.ravel()
    for k in range(2, n + 1):
        solver.step()
        out[k] = M @ solver.u.ravel()
    return BoundaryTrace(cfg.t_grid, s_grid, out)


THETA_MIN = 0.15     # cut fractions below this pin the node to the boundary data
_SUBSTEPS = 2        # keeps the cut-cell stencil inside the leapfrog stability bound


@njit(cache=True)
def _leapfrog_cut(u, u_old, out, inv, m, active, r2, theta, bidx, g):
    ny, nx = u.shape
    for j in range(1, ny - 1):
        for i in range(1, nx - 1):
            if not active[j, i]:
                continue
            u0 = u[j, i]
            if bidx[0, j, i] >= 0:
                ul = g[bidx[0, j, i]]
                hl = theta[0, j, i]
            else:
                ul = u[j, i - 1]
                hl = 1.0
            if bidx[1, j, i] >= 0:
                ur = g[bidx[1, j, i]]
                hr = theta[1, j, i]
            else:
                ur = u[j, i + 1]
                hr = 1.0
            if bidx[2, j, i] >= 0:
                ud = g[bidx[2, j, i]]
                hd = theta[2, j, i]
            else:
                ud = u[j - 1, i]
                hd = 1.0
            if bidx[3, j, i] >= 0:
                uu = g[bidx[3, j, i]]
                hu = theta[3, j, i]
            else:
                uu = u[j + 1, i]
                hu = 1.0
            lap = (2.0 * ((ur - u0) / hr - (u0 - ul) / hl) / (hl + hr)
                   + 2.0 * ((uu - u0) / hu - (u0 - ud) / hd) / (hd + hu))
            out[j, i] = (2.0 * u0 - m[j, i] * u_old[j, i] + r2 * lap) * inv[j, i]


_DIRS = ((0, -1), (0, 1), (-1, 0), (1, 0))   # (dj, di): left, right, down, up


def _crossing_fraction(curve: Curve, pa, pb, phi_a, phi_b):
    """Fraction along ``pa -> pb`` where the segment meets the curve."""
    if isinstance(curve, Circle):
        d = pb - pa
        w = pa - curve.c
        A = np.sum(d * d, axis=1)
        B = 2 * np.sum(w * d, axis=1)
        C = np.sum(w * w, axis=1) - curve.radius ** 2
        disc = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
        r1 = (-B - disc) / (2 * A)
        r2 = (-B + disc) / (2 * A)
        ok1 = (r1 >= 0) & (r1 <= 1)
        return np.clip(np.where(ok1, r1, r2), 0.0, 1.0)
    return np.clip(phi_a / (phi_a - phi_b), 0.0, 1.0)


def _signed_distance(curve: Curve, pts, active_inside: bool):
    """Distance to the curve, negative on the active side."""
    if isinstance(curve, Circle):
        d = np.linalg.norm(pts - curve.c, axis=1) - curve.radius
    else:
        s = np.atleast_1d(curve.nearest_param(pts))
        q = pts - np.atleast_2d(curve.point(s))
        nu = np.atleast_2d(curve.normal(s))
        d = np.linalg.norm(q, axis=1) * np.sign(np.sum(q * nu, axis=1))
        if interior_is_left(curve):
            d = -d
    return d if active_inside else -d


def _cut_cells(curve: Curve, grid: Grid, active, active_inside: bool):
    """Shortley-Weller geometry: per-direction cut fractions and boundary points.

    Returns the reduced active mask, ``theta`` and ``bidx`` arrays of shape
    ``(4, ny, nx)``, curve parameters of the cut points, and the flat indices
    and curve parameters of pinned nodes.
    """
    ny, nx = active.shape
    X, Y = grid.mesh()
    h = grid.h
    inner = np.zeros_like(active)
    inner[1:-1, 1:-1] = active[1:-1, 1:-1]
    near = inner & ~(np.roll(active, 1, 1) & np.roll(active, -1, 1) & np.roll(active, 1, 0) & np.roll(active, -1, 0))
    jj, ii = np.nonzero(near)
    cuts = []      # (dir, j, i, theta, point)
    for k, (dj, di) in enumerate(_DIRS):
        nb = ~active[jj + dj, ii + di]
        if not np.any(nb):
            continue
        j, i = jj[nb], ii[nb]
        pa = np.column_stack([X[j, i], Y[j, i]])
        pb = np.column_stack([X[j + dj, i + di], Y[j + dj, i + di]])
        phi_a = phi_b = None
        if not isinstance(curve, Circle):
            phi_a = _signed_distance(curve, pa, active_inside)
            phi_b = _signed_distance(curve, pb, active_inside)
        th = _crossing_fraction(curve, pa, pb, phi_a, phi_b)
        cuts.append((k, j, i, th, pa + th[:, None] * (pb - pa)))
    pinned = np.zeros_like(active)
    for k, j, i, th, _ in cuts:
        pinned[j[th < THETA_MIN], i[th < THETA_MIN]] = True
    reduced = active & ~pinned
    theta = np.ones((4, ny, nx))
    bidx = -np.ones((4, ny, nx), np.int64)
    pts = []
    n = 0
    for k, j, i, th, p in cuts:
        keep = reduced[j, i]
        j, i, th, p = j[keep], i[keep], th[keep], p[keep]
        theta[k, j, i] = th
        bidx[k, j, i] = n + np.arange(len(j))
        pts.append(p)
        n += len(j)
    cut_pts = np.concatenate(pts) if pts else np.zeros((0, 2))
    s_cut = np.atleast_1d(curve.nearest_param(cut_pts)) if n else np.zeros(0)
    pin_idx = np.flatnonzero(pinned)
    pin_pts = np.column_stack([X.ravel()[pin_idx], Y.ravel()[pin_idx]])
    s_pin = np.atleast_1d(curve.nearest_param(pin_pts)) if len(pin_idx) else np.zeros(0)
    return reduced, theta, bidx, s_cut, pin_idx, s_pin


def _incoming(hdata: BoundaryTrace, cfg: WaveConfig, curve: Curve, active, active_inside: bool,
              use_chi: bool):
    """Solve with zero data at t = T and Dirichlet data on the curve; return d/dt u at t = 0.

    The boundary enters through cut-cell (Shortley-Weller) stencils at the
    exact crossings of grid lines with the curve.  Runs forward in reversed
    time ``tau = T - t`` so that the sponge keeps absorbing.
    """
    g = cfg.grid
    if len(hdata.t_grid) < 2:
        raise ConfigError("trace needs at least two time samples")
    if hdata.t_grid[-1] < cfg.T - 1e-9 * cfg.T:
        raise ConfigError(f"trace ends at t={hdata.t_grid[-1]:.4g} before T={cfg.T:.4g}")
    reduced, theta, bidx, s_cut, pin_idx, s_pin = _cut_cells(curve, g, active, active_inside)
    W_cut = _periodic_interp_matrix(hdata.s_grid, curve.length, s_cut)
    W_pin = _periodic_interp_matrix(hdata.s_grid, curve.length, s_pin)
    values = hdata.values
    nt = len(hdata.t_grid)
    dth = hdata.dt

    def data_row(t):
        fi = t / dth
        i = int(np.clip(np.floor(fi), 0, nt - 2))
        a = fi - i
        row = (1 - a) * values[i] + a * values[i + 1]
        return row * cfg.chi(t) if use_chi else row

    dt = cfg.dt / _SUBSTEPS
    n = cfg.n_steps * _SUBSTEPS
    sig = sponge_profile(g, cfg.sponge, dt, cfg.sponge_strength)
    inv = 1.0 / (1.0 + 0.5 * sig * dt)
    m = 1.0 - 0.5 * sig * dt
    r2 = (dt / g.h) ** 2
    shape = (g.ny, g.nx)
    u_old = np.zeros(shape)
    u = np.zeros(shape)
    for k, arr in ((0, u_old), (1, u)):
        arr.ravel()[pin_idx] = W_pin @ data_row(max(cfg.T - k * dt, 0.0))
    keep = u_old
    for k in range(2, n + 1):
        row = data_row(max(cfg.T - k * dt, 0.0))
        out = np.zeros(shape)
        _leapfrog_cut(u, u_old, out, inv, m, reduced, r2, theta, bidx, W_cut @ row)
        out.ravel()[pin_idx] = W_pin @ row
        u_old, u = u, out
        if k == n - 1:
            keep = u_old
    # d/dt = -d/dtau; one-sided second-order difference at tau = T
    dv = -(3 * u - 4 * u_old + keep) / (2 * dt)
    return np.where(active, dv, 0.0)


def time_reversal(hdata: BoundaryTrace, cfg: WaveConfig, curve: Curve, apply_chi: bool = True) -> GridField:
    """``G h = d/dt v(0)`` for the interior solve with ``v = chi h`` on the curve and zero data at T."""
    active = inside_mask(curve, cfg.grid)
    return GridField(cfg.grid, _incoming(hdata, cfg, curve, active, True, apply_chi))


def parametrix_reconstruct(sg: Sinogram, cfg: WaveConfig, curve: Curve,
                           support=None) -> GridField:
    """Sinogram -> boundary trace (Abel in r) -> cutoff -> time reversal.

    ``support = (center, radius)`` declares a disc containing the singular
    support; T0 and T are then checked against the arrival-time bound.
    """
    if support is not None:
        cfg.check_arrival_time(curve, *support)
    if abs(sg.s_grid[-1] + (sg.s_grid[1] - sg.s_grid[0]) - curve.length) > 1e-6 * curve.length:
        raise ConfigError("sinogram s-grid must cover the closed curve uniformly")
    trace = lambda_from_sinogram(sg, cfg.t_grid)
    return time_reversal(trace, cfg, curve)


def incoming_inverse(hdata: BoundaryTrace, side: str, cfg: WaveConfig, curve: Curve) -> GridField:
    """``2 d/dt u(0)`` for the incoming solution on one side of the curve with Dirichlet data ``hdata``."""
    active = side_mask(curve, cfg.grid, side)
    if not (np.any(active[1:-1, 1:-1])):
        raise ConfigError(f"no grid nodes on the {side} side of the curve")
    interior = inside_mask(curve, cfg.grid)
    side_is_inside = bool(np.any(active & interior))
    if not side_is_inside:
        x0, x1, y0, y1 = cfg.interior_box()
        s = np.linspace(0, curve.length, 1024, endpoint=False)
        p = curve.point(s)
        room = min(p[:, 0].min() - x0, x1 - p[:, 0].max(), p[:, 1].min() - y0, y1 - p[:, 1].max())
        if room < cfg.T:
            raise ConfigError(f"exterior region leaves {room:.3g} outside the curve, less than T={cfg.T:.3g}")
    return GridField(cfg.grid, 2.0 * _incoming(hdata, cfg, curve, active, side_is_inside, use_chi=False))


def unitary_ghost(f_L: GridField, cfg: WaveConfig, curve: Curve, covector: Covector) -> GridField:
    """``f_R = -(right inverse)(trace of f_L)``: the exterior field whose trace cancels that of ``f_L``.

    ``covector`` is the central covector of ``f_L``; only hits reached within
    the recorded time window ``|t| <= T`` count.
    """
    _check_field(f_L, cfg)
    tag = classify_covector(curve, covector, t_range=(-cfg.T, cfg.T))
    if not tag.startswith("SigmaL"):
        raise NotApplicableError(f"central covector classifies as {tag}, need a single left hit")
    if not np.any(f_L.values):
        return cfg.grid.zeros()
    h = forward_trace(f_L, cfg, curve)
    return -incoming_inverse(h, "right", cfg, curve)


def cone_diagnostic(trace: BoundaryTrace, delta: float, curve: Curve | None = None,
                    skip_bins: int = 4) -> float:
    """Fraction of spectral energy of the trace with ``|sigma| > delta |tau|``.

    Bins with fewer than ``skip_bins`` steps from zero in either frequency
    are excluded.  Returns 0 when nothing remains.
    """
    s = trace.s_grid
    ns = len(s)
    if ns < 2:
        raise ConfigError("cone diagnostic needs at least two s samples")
    ds = s[1] - s[0]
    if np.max(np.abs(np.diff(s) - ds)) > 1e-9 * abs(ds):
        raise ConfigError("s-grid must be uniform")
    if curve is not None and abs(ns * ds - curve.length) > 1e-6 * curve.length:
        raise ConfigError("s-grid is not periodic over the curve")
    spec = np.abs(np.fft.fft2(trace.values)) ** 2
    nt = len(trace.t_grid)
    kt = np.fft.fftfreq(nt) * nt
    ks = np.fft.fftfreq(ns) * ns
    tau = 2 * np.pi * np.fft.fftfreq(nt, trace.dt)
    sig = 2 * np.pi * np.fft.fftfreq(ns, ds)
    keep = (np.abs(kt)[:, None] >= skip_bins) & (np.abs(ks)[None, :] >= skip_bins)
    total = spec[keep].sum()
    if total == 0:
        return 0.0
    outside = keep & (np.abs(sig)[None, :] > delta * np.abs(tau)[:, None])
    return float(spec[outside].sum() / total)


def energy_history(f: GridField, cfg: WaveConfig, duration: float, every: int = 1,
                   centered: bool = False) -> np.ndarray:
    """Discrete energy of the closed-box (Dirichlet walls, no sponge) run.

    The default half-step form is conserved by leapfrog to rounding; ``centered``
    gives ``sum(u_t^2 + |grad u|^2) h^2`` at integer levels, which fluctuates at O(h^2).
    """
    _check_field(f, cfg)
    solver = Solver(cfg.grid, cfg.dt, sponge=0)
    solver.start(np.zeros_like(f.values), f.values)
    n = int(round(duration / cfg.dt))
    out = [] if centered else [solver.energy()]
    for k in range(2, n + 1):
        if centered:
            prev, cur = solver.u_old.copy(), solver.u.copy()
            solver.step()
            if k % every == 0:
                ut = (solver.u - prev) / (2 * cfg.dt)
                g2 = (np.diff(cur, axis=1) ** 2).sum() + (np.diff(cur, axis=0) ** 2).sum()
                out.append(float((ut ** 2).sum() * cfg.grid.h ** 2 + g2))
        else:
            solver.step()
            if k % every == 0:
                out.append(solver.energy())
    return np.array(out)
