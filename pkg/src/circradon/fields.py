"""Sampled fields on square grids, phantoms and radial profiles."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InvalidInputError, ResolutionError

HEADER_BYTES = 80


@dataclass(frozen=True)
class Grid:
    """Square-cell grid; node ``(i, j)`` sits at ``origin + h*(i, j)``."""
    origin: tuple
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        if not self.h > 0:
            raise InvalidInputError(f"grid spacing must be positive, got {self.h}")
        if self.nx < 2 or self.ny < 2:
            raise InvalidInputError("grid needs at least 2x2 nodes")

    @classmethod
    def centered(cls, half_width: float, h: float) -> "Grid":
        n = int(round(2 * half_width / h)) + 1
        return cls((-(n - 1) * h / 2, -(n - 1) * h / 2), h, n, n)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y)  # arrays of shape (ny, nx)

    def padded(self, cells: int) -> "Grid":
        return Grid((self.origin[0] - cells * self.h, self.origin[1] - cells * self.h),
                    self.h, self.nx + 2 * cells, self.ny + 2 * cells)

    def zeros(self) -> "GridField":
        return GridField(self, np.zeros((self.ny, self.nx)))


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.ny, self.grid.nx):
            v = v.reshape(self.grid.ny, self.grid.nx)
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("field values must be finite")
        object.__setattr__(self, "values", v)

    # arithmetic on matching grids
    def _other(self, other):
        if isinstance(other, GridField):
            if other.grid != self.grid:
                raise InvalidInputError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.grid, self.values - self._other(other))

    def __mul__(self, a):
        return GridField(self.grid, self.values * self._other(a))

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.grid, -self.values)

    def norm(self, mask=None) -> float:
        v = self.values if mask is None else self.values[mask]
        return float(np.sqrt(np.sum(v ** 2) * self.grid.h ** 2))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.h ** 2)

    def sample(self, x, y):
        """Bilinear interpolation; zero outside the grid."""
        return bilinear(self.values, self.grid, x, y)

    def __call__(self, x, y):
        return self.sample(x, y)

    # -- I/O --------------------------------------------------------------
    def save(self, path):
        g = self.grid
        head = f"{g.nx} {g.ny} {g.origin[0]!r} {g.origin[1]!r} {g.h!r}".encode("ascii")
        if len(head) > HEADER_BYTES:
            raise InvalidInputError("grid header does not fit in 80 bytes")
        with open(path, "wb") as fh:
            fh.write(head.ljust(HEADER_BYTES, b" "))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "GridField":
        with open(path, "rb") as fh:
            head = fh.read(HEADER_BYTES).decode("ascii").split()
            if len(head) != 5:
                raise InvalidInputError(f"{path}: malformed grid header")
            nx, ny = int(head[0]), int(head[1])
            ox, oy, h = map(float, head[2:])
            data = np.frombuffer(fh.read(), dtype="<f8")
        if data.size != nx * ny:
            raise InvalidInputError(f"{path}: expected {nx * ny} values, found {data.size}")
        return cls(Grid((ox, oy), h, nx, ny), data.reshape(ny, nx).copy())

    def save_pgm(self, path):
        write_pgm(path, self.values[::-1])


def write_pgm(path, arr):
    """Binary PGM, min-max normalized to 0..255; first array row is the top line."""
    a = np.asarray(arr, float)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros_like(a) if hi == lo else (a - lo) / (hi - lo)
    img = np.round(scaled * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def bilinear(values, grid: Grid, x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    fx = (x - grid.origin[0]) / grid.h
    fy = (y - grid.origin[1]) / grid.h
    inside = (fx >= 0) & (fx <= grid.nx - 1) & (fy >= 0) & (fy <= grid.ny - 1)
    i0 = np.clip(np.floor(fx), 0, grid.nx - 2).astype(np.int64)
    j0 = np.clip(np.floor(fy), 0, grid.ny - 2).astype(np.int64)
    ax = np.clip(fx - i0, 0.0, 1.0)
    ay = np.clip(fy - j0, 0.0, 1.0)
    v = values
    out = ((1 - ax) * (1 - ay) * v[j0, i0] + ax * (1 - ay) * v[j0, i0 + 1]
           + (1 - ax) * ay * v[j0 + 1, i0] + ax * ay * v[j0 + 1, i0 + 1])
    return np.where(inside, out, 0.0)


def bilinear_matrix(grid: Grid, x, y):
    """Sparse matrix mapping flattened grid values to bilinear samples at (x, y)."""
    from scipy.sparse import csr_matrix
    x = np.ravel(np.asarray(x, float))
    y = np.ravel(np.asarray(y, float))
    fx = (x - grid.origin[0]) / grid.h
    fy = (y - grid.origin[1]) / grid.h
    i0 = np.clip(np.floor(fx).astype(np.int64), 0, grid.nx - 2)
    j0 = np.clip(np.floor(fy).astype(np.int64), 0, grid.ny - 2)
    ax = fx - i0
    ay = fy - j0
    if np.any((ax < -1e-9) | (ax > 1 + 1e-9) | (ay < -1e-9) | (ay > 1 + 1e-9)):
        raise InvalidInputError("sample points lie outside the grid")
    rows = np.repeat(np.arange(len(x)), 4)
    cols = np.stack([j0 * grid.nx + i0, j0 * grid.nx + i0 + 1,
                     (j0 + 1) * grid.nx + i0, (j0 + 1) * grid.nx + i0 + 1], axis=1).ravel()
    w = np.stack([(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay], axis=1).ravel()
    return csr_matrix((w, (rows, cols)), shape=(len(x), grid.nx * grid.ny))


# -- phantoms ---------------------------------------------------------------

def disc_indicator(grid: Grid, radius: float, center=(0.0, 0.0), smooth: bool = False) -> GridField:
    """Indicator of the open disc; ``smooth`` ramps the edge linearly over one cell."""
    if not radius > 0:
        raise InvalidInputError("disc radius must be positive")
    if radius < 2 * grid.h:
        raise ResolutionError(f"disc radius {radius} is below two grid cells ({2 * grid.h})")
    X, Y = grid.mesh()
    dist = np.hypot(X - center[0], Y - center[1])
    if smooth:
        vals = np.clip(0.5 - (dist - radius) / grid.h, 0.0, 1.0)
    else:
        vals = (dist < radius).astype(float)
    return GridField(grid, vals)


def soft_disc_function(center, radius: float, width: float) -> Callable:
    """Disc indicator with an ``erfc`` edge of standard width ``width``."""
    from scipy.special import erfc
    c = np.asarray(center, float)

    def f(x, y):
        d = np.hypot(np.asarray(x) - c[0], np.asarray(y) - c[1])
        return 0.5 * erfc((d - radius) / (width * np.sqrt(2)))
    return f


def soft_disc(grid: Grid, radius: float, center=(0.0, 0.0), width: float | None = None) -> GridField:
    """Disc whose edge is resolved over ``width`` (default four cells)."""
    width = 4 * grid.h if width is None else width
    if width < grid.h:
        raise ResolutionError(f"edge width {width} is below one grid cell")
    X, Y = grid.mesh()
    return GridField(grid, soft_disc_function(center, radius, width)(X, Y))


def gaussian_field(grid: Grid, center, sigma: float, amplitude: float = 1.0) -> GridField:
    X, Y = grid.mesh()
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    return GridField(grid, amplitude * np.exp(-r2 / (2 * sigma ** 2)))


def bump_field(grid: Grid, center, radius: float) -> GridField:
    """Compactly supported C-infinity bump ``exp(1 - 1/(1 - |x-c|^2/a^2))``."""
    X, Y = grid.mesh()
    q = ((X - center[0]) ** 2 + (Y - center[1]) ** 2) / radius ** 2
    vals = np.zeros_like(q)
    m = q < 1
    vals[m] = np.exp(1 - 1 / (1 - q[m]))
    return GridField(grid, vals)


@dataclass(frozen=True)
class WavePacket:
    x0: tuple
    k: tuple
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInputError("packet width must be positive")
        if np.hypot(*self.k) == 0:
            raise InvalidInputError("packet wavevector must be nonzero")

    @property
    def wavelength(self) -> float:
        return 2 * np.pi / float(np.hypot(*self.k))

    def __call__(self, x, y):
        dx = np.asarray(x) - self.x0[0]
        dy = np.asarray(y) - self.x0[1]
        return np.cos(self.k[0] * dx + self.k[1] * dy) * np.exp(-(dx ** 2 + dy ** 2) / (2 * self.sigma ** 2))


def wavepacket_field(grid: Grid, p: WavePacket) -> GridField:
    if p.wavelength < 4 * grid.h:
        raise ResolutionError(f"packet wavelength {p.wavelength:.4g} is below 4 cells")
    m = 4 * p.sigma
    if (p.x0[0] - m < grid.x[0] or p.x0[0] + m > grid.x[-1]
            or p.x0[1] - m < grid.y[0] or p.x0[1] + m > grid.y[-1]):
        raise InvalidInputError("packet does not fit inside the grid with a 4-sigma margin")
    X, Y = grid.mesh()
    return GridField(grid, p(X, Y))


# -- radial profiles ----------------------------------------------------------

@dataclass(frozen=True)
class JumpTerm:
    """``H(+/-(rho2 - t_jump)) * sum_k coeffs[k] (rho2 - t_jump)^k``.

    ``outside=True`` keeps ``rho2 > t_jump``; otherwise ``rho2 < t_jump``.
    """
    t_jump: float
    coeffs: tuple
    outside: bool = True

    def __call__(self, rho2):
        t = np.asarray(rho2, float) - self.t_jump
        poly = np.polynomial.polynomial.polyval(t, np.asarray(self.coeffs, float))
        keep = t > 0 if self.outside else t < 0
        return np.where(keep, poly, 0.0)

    def scaled(self, a: float) -> "JumpTerm":
        return JumpTerm(self.t_jump, tuple(a * c for c in self.coeffs), self.outside)


@dataclass(frozen=True)
class RadialProfile:
    """``f(x) = F(|x|^2)`` as a sum of jump terms plus an optional tabulated background."""
    jumps: tuple = ()
    table: tuple | None = None   # (rho2 samples, values), zero outside the range

    def __post_init__(self):
        for j in self.jumps:
            if not j.t_jump > 0:
                raise InvalidInputError("jump location must be positive")
        if self.table is not None:
            r, v = (np.asarray(a, float) for a in self.table)
            if r.ndim != 1 or r.shape != v.shape or np.any(np.diff(r) <= 0):
                raise InvalidInputError("background table must be increasing 1D samples")

    @classmethod
    def disc(cls, radius: float) -> "RadialProfile":
        return cls((JumpTerm(radius ** 2, (1.0,), outside=False),))

    @classmethod
    def ghost(cls, t_jump: float, coeffs) -> "RadialProfile":
        if len(coeffs) == 0:
            return cls()
        return cls((JumpTerm(t_jump, tuple(coeffs), outside=True),))

    @classmethod
    def tabulated(cls, rho2, values) -> "RadialProfile":
        return cls((), (np.asarray(rho2, float), np.asarray(values, float)))

    @property
    def breakpoints(self) -> list[float]:
        pts = [j.t_jump for j in self.jumps]
        if self.table is not None:
            pts += [float(self.table[0][0]), float(self.table[0][-1])]
        return sorted(set(pts))

    def __call__(self, rho2):
        rho2 = np.asarray(rho2, float)
        out = np.zeros_like(rho2)
        for j in self.jumps:
            out = out + j(rho2)
        if self.table is not None:
            r, v = self.table
            out = out + np.interp(rho2, r, v, left=0.0, right=0.0)
        return out

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        if self.table is not None and other.table is not None:
            raise InvalidInputError("cannot add two tabulated backgrounds")
        return RadialProfile(self.jumps + other.jumps, self.table if self.table is not None else other.table)

    def __neg__(self):
        table = None if self.table is None else (self.table[0], -np.asarray(self.table[1]))
        return RadialProfile(tuple(j.scaled(-1.0) for j in self.jumps), table)

    def __sub__(self, other):
        return self + (-other)

    def as_function(self, center=(0.0, 0.0)) -> Callable:
        return lambda x, y: self((np.asarray(x) - center[0]) ** 2 + (np.asarray(y) - center[1]) ** 2)


def eval_radial(p: RadialProfile, rho2):
    if np.any(np.asarray(rho2) < 0):
        raise InvalidInputError("squared radius must be nonnegative")
    out = p(rho2)
    return float(out) if np.ndim(out) == 0 else out
