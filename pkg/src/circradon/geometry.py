"""Curves, ray-curve intersections, tangent-line mirrors and the billiard flow.

Orientation: the left normal of a curve is ``(-ty, tx)`` for the unit
tangent ``(tx, ty)``.  For a counter-clockwise circle the left side is the
interior.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (InvalidInputError, NotMirrorableError, OnCurveError,
                     TangencyError)

TRANSVERSAL_TOL = 0.05
TAGS = ("SigmaL_plus", "SigmaL_minus", "SigmaR_plus", "SigmaR_minus",
        "tangent", "multiple", "no_hit")


def _vec(a) -> np.ndarray:
    v = np.asarray(a, dtype=float).reshape(2)
    return v


def left_normal(tangent):
    tangent = np.asarray(tangent, dtype=float)
    return np.stack([-tangent[..., 1], tangent[..., 0]], axis=-1)


@dataclass(frozen=True)
class Covector:
    """A phase-space point ``(x, xi)`` with ``xi != 0``."""
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vec(self.x))
        object.__setattr__(self, "xi", _vec(self.xi))
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.xi)):
            raise InvalidInputError("covector entries must be finite")
        if np.linalg.norm(self.xi) == 0:
            raise InvalidInputError("covector direction xi must be nonzero")

    @property
    def direction(self) -> np.ndarray:
        return self.xi / np.linalg.norm(self.xi)

    def allclose(self, other: "Covector", atol=1e-12) -> bool:
        return (np.allclose(self.x, other.x, rtol=0, atol=atol)
                and np.allclose(self.xi, other.xi, rtol=0, atol=atol))


@dataclass(frozen=True)
class Hit:
    t: float
    s: float
    cos_angle: float
    point: np.ndarray = field(repr=False)


class Curve:
    """Arc-length parametrized planar curve (abstract)."""

    closed: bool = True
    length: float

    def point(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def normal(self, s):
        return left_normal(self.tangent(s))

    def contains(self, x) -> bool:
        raise NotImplementedError

    def nearest_param(self, pts):
        raise NotImplementedError

    def line_intersections(self, x, d, t_lo, t_hi) -> list[Hit]:
        raise NotImplementedError

    def distance(self, x) -> float:
        s = self.nearest_param(np.asarray(x, float)[None, :])[0]
        return float(np.linalg.norm(self.point(s) - x))

    def max_distance(self, x) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(Curve):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise InvalidInputError(f"circle radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    closed = True

    @property
    def length(self) -> float:
        return 2 * np.pi * self.radius

    @property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    def point(self, s):
        a = np.asarray(s, dtype=float) / self.radius
        return self.c + self.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)

    def tangent(self, s):
        a = np.asarray(s, dtype=float) / self.radius
        return np.stack([-np.sin(a), np.cos(a)], axis=-1)

    def contains(self, x) -> bool:
        return bool(np.linalg.norm(_vec(x) - self.c) < self.radius)

    def nearest_param(self, pts):
        pts = np.asarray(pts, dtype=float)
        ang = np.arctan2(pts[..., 1] - self.center[1], pts[..., 0] - self.center[0])
        return np.mod(ang, 2 * np.pi) * self.radius

    def max_distance(self, x) -> float:
        return float(np.linalg.norm(_vec(x) - self.c) + self.radius)

    def line_intersections(self, x, d, t_lo, t_hi):
        # |x + t d - c|^2 = R^2 with |d| = 1
        w = x - self.c
        b = float(w @ d)
        disc = b * b - (float(w @ w) - self.radius ** 2)
        if disc < 0:
            return []
        sq = np.sqrt(disc)
        roots = sorted({-b - sq, -b + sq}) if sq > 0 else [-b]
        hits = []
        for t in roots:
            if t_lo <= t <= t_hi:
                p = x + t * d
                s = float(self.nearest_param(p[None, :])[0])
                hits.append(Hit(float(t), s, float(d @ self.normal(s)), p))
        return hits


@dataclass(frozen=True, eq=False)
class SampledCurve(Curve):
    """Curve given by samples ``(s, point, unit tangent)``.

    Between samples the curve is the cubic Hermite interpolant of points and
    tangents.  A closed curve has ``length > s[-1]`` and wraps around to the
    first sample.
    """
    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    closed: bool = True
    length: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.s, float)
        pts = np.asarray(self.points, float).reshape(-1, 2)
        tan = np.asarray(self.tangents, float).reshape(-1, 2)
        if len(s) < 4 or len(pts) != len(s) or len(tan) != len(s):
            raise InvalidInputError("sampled curve needs at least 4 consistent samples")
        if np.any(np.diff(s) <= 0):
            raise InvalidInputError("curve parameter must be strictly increasing")
        nrm = np.linalg.norm(tan, axis=1)
        if np.any(np.abs(nrm - 1) > 1e-6):
            raise InvalidInputError("curve tangents must have unit norm")
        tan = tan / nrm[:, None]
        length = float(self.length)
        if self.closed:
            if length <= s[-1]:
                length = float(s[-1] + np.linalg.norm(pts[0] - pts[-1]))
        else:
            length = float(s[-1] - s[0])
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "tangents", tan)
        object.__setattr__(self, "length", length)
        _check_simple(self._nodes()[1])

    # -- construction --------------------------------------------------
    @classmethod
    def from_function(cls, fn, n: int, closed=True, n_fine=20000):
        """Sample ``fn(u)``, ``u`` in [0, 1), at ``n`` points equispaced in arc length."""
        u = np.linspace(0, 1, n_fine + 1)
        p = np.array([fn(ui) for ui in u])
        seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
        arc = np.concatenate([[0], np.cumsum(seg)])
        L = arc[-1]
        s = np.linspace(0, L, n, endpoint=not closed)
        uu = np.interp(s, arc, u)
        pts = np.array([fn(ui) for ui in uu])
        eps = 1e-6
        der = np.array([(np.asarray(fn(ui + eps)) - np.asarray(fn(ui - eps))) for ui in uu])
        tan = der / np.linalg.norm(der, axis=1)[:, None]
        return cls(s, pts, tan, closed=closed, length=L if closed else 0.0)

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["s", "x", "y", "tx", "ty"]:
                raise InvalidInputError(f"{path}: expected header s,x,y,tx,ty")
            for row in reader:
                rows.append([float(row[k]) for k in ("s", "x", "y", "tx", "ty")])
        a = np.array(rows)
        if len(a) < 2:
            raise InvalidInputError(f"{path}: too few samples")
        # a repeated first point closes the curve; its s is the total length
        if np.linalg.norm(a[-1, 1:3] - a[0, 1:3]) < 1e-9:
            return cls(a[:-1, 0], a[:-1, 1:3], a[:-1, 3:5], closed=True, length=a[-1, 0])
        return cls(a[:, 0], a[:, 1:3], a[:, 3:5], closed=False)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "x", "y", "tx", "ty"])
            for si, p, t in zip(self.s, self.points, self.tangents):
                w.writerow([repr(float(v)) for v in (si, *p, *t)])
            if self.closed:
                w.writerow([repr(float(v)) for v in (self.s[0] + self.length, *self.points[0], *self.tangents[0])])

    # -- evaluation -----------------------------------------------------
    def _knots(self):
        if self.closed:
            s = np.append(self.s, self.s[0] + self.length)
            return s, np.vstack([self.points, self.points[:1]]), np.vstack([self.tangents, self.tangents[:1]])
        return self.s, self.points, self.tangents

    def _nodes(self):
        s, p, _ = self._knots()
        return s, p

    def _locate(self, s):
        ks, kp, kt = self._knots()
        s = np.asarray(s, float)
        if self.closed:
            s = self.s[0] + np.mod(s - self.s[0], self.length)
        else:
            s = np.clip(s, ks[0], ks[-1])
        i = np.clip(np.searchsorted(ks, s, side="right") - 1, 0, len(ks) - 2)
        delta = ks[i + 1] - ks[i]
        u = (s - ks[i]) / delta
        return i, u, delta, kp, kt

    def point(self, s):
        i, u, delta, kp, kt = self._locate(s)
        u2, u3 = u * u, u * u * u
        h00 = 2 * u3 - 3 * u2 + 1
        h10 = u3 - 2 * u2 + u
        h01 = -2 * u3 + 3 * u2
        h11 = u3 - u2
        dl = delta[..., None]
        return (h00[..., None] * kp[i] + h10[..., None] * dl * kt[i]
                + h01[..., None] * kp[i + 1] + h11[..., None] * dl * kt[i + 1])

    def tangent(self, s):
        i, u, delta, kp, kt = self._locate(s)
        u2 = u * u
        d00 = 6 * u2 - 6 * u
        d10 = 3 * u2 - 4 * u + 1
        d01 = -6 * u2 + 6 * u
        d11 = 3 * u2 - 2 * u
        dl = delta[..., None]
        der = (d00[..., None] * kp[i] / dl + d10[..., None] * kt[i]
               + d01[..., None] * kp[i + 1] / dl + d11[..., None] * kt[i + 1])
        return der / np.linalg.norm(der, axis=-1, keepdims=True)

    def _fine(self, m=8):
        ks, _, _ = self._knots()
        ss = np.concatenate([np.linspace(ks[j], ks[j + 1], m, endpoint=False) for j in range(len(ks) - 1)] + [ks[-1:]])
        return ss, self.point(ss)

    def contains(self, x) -> bool:
        if not self.closed:
            return False
        _, p = self._fine(4)
        x = _vec(x)
        # even-odd rule on the refined polygon
        xi, yi = p[:-1, 0], p[:-1, 1]
        xj, yj = p[1:, 0], p[1:, 1]
        cross = (yi > x[1]) != (yj > x[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = xi + (x[1] - yi) * (xj - xi) / (yj - yi)
        return bool(np.count_nonzero(cross & (x[0] < xint)) % 2 == 1)

    def nearest_param(self, pts):
        pts = np.asarray(pts, float)
        flat = pts.reshape(-1, 2)
        ss, p = self._fine(16)
        out = np.empty(len(flat))
        for n, q in enumerate(flat):
            j = int(np.argmin(np.sum((p - q) ** 2, axis=1)))
            lo, hi = ss[max(j - 1, 0)], ss[min(j + 1, len(ss) - 1)]
            # golden-section polish of the squared distance
            g = (np.sqrt(5) - 1) / 2
            a, b = lo, hi
            for _ in range(60):
                c1, c2 = b - g * (b - a), a + g * (b - a)
                if np.sum((self.point(c1) - q) ** 2) < np.sum((self.point(c2) - q) ** 2):
                    b = c2
                else:
                    a = c1
            out[n] = 0.5 * (a + b)
        if self.closed:
            out = self.s[0] + np.mod(out - self.s[0], self.length)
        return out.reshape(pts.shape[:-1])

    def max_distance(self, x) -> float:
        _, p = self._fine(2)
        return float(np.max(np.linalg.norm(p - _vec(x), axis=1)))

    def line_intersections(self, x, d, t_lo, t_hi):
        ss, p = self._fine(4)

        def offset(s):
            q = self.point(s) - x
            return d[0] * q[..., 1] - d[1] * q[..., 0]

        g = d[0] * (p[:, 1] - x[1]) - d[1] * (p[:, 0] - x[0])
        # signs, not products: a product of tiny offsets can underflow to zero
        sg = np.sign(g)
        hits = []
        for j in range(len(ss) - 1):
            if sg[j] == 0 or sg[j] * sg[j + 1] < 0:
                a, b = ss[j], ss[j + 1]
                ga = offset(a)
                if ga == 0:
                    root = a
                else:
                    while b - a > 1e-12:
                        m = 0.5 * (a + b)
                        gm = offset(m)
                        if gm == 0:
                            a = b = m
                            break
                        if (gm > 0) == (ga > 0):
                            a, ga = m, gm
                        else:
                            b = m
                    root = 0.5 * (a + b)
                pt = self.point(root)
                t = float((pt - x) @ d)
                if t_lo <= t <= t_hi:
                    s = float(root)
                    if self.closed:
                        s = self.s[0] + (s - self.s[0]) % self.length
                    hits.append(Hit(t, s, float(d @ self.normal(s)), pt))
        if not self.closed and g[-1] == 0:
            pt = p[-1]
            t = float((pt - x) @ d)
            if t_lo <= t <= t_hi:
                hits.append(Hit(t, float(ss[-1]), float(d @ self.normal(ss[-1])), pt))
        hits.sort(key=lambda h: h.t)
        # collapse duplicates found on both sides of a shared knot
        out = []
        for h in hits:
            if out and abs(h.t - out[-1].t) < 1e-10:
                continue
            out.append(h)
        return out


def _check_simple(p):
    a, b = p[:-1], p[1:]
    n = len(a)
    if n < 3:
        return
    d = b - a
    # segment i vs segment j: solve a_i + u d_i = a_j + v d_j
    den = d[:, None, 0] * d[None, :, 1] - d[:, None, 1] * d[None, :, 0]
    w = a[None, :, :] - a[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (w[..., 0] * d[None, :, 1] - w[..., 1] * d[None, :, 0]) / den
        v = (w[..., 0] * d[:, None, 1] - w[..., 1] * d[:, None, 0]) / den
    idx = np.arange(n)
    far = np.abs(idx[:, None] - idx[None, :]) > 1
    far &= ~((idx[:, None] == 0) & (idx[None, :] == n - 1))
    far &= ~((idx[:, None] == n - 1) & (idx[None, :] == 0))
    eps = 1e-12
    # non-adjacent segments may not even touch
    crossing = far & (u >= -eps) & (u <= 1 + eps) & (v >= -eps) & (v <= 1 + eps)
    if np.any(crossing):
        raise InvalidInputError("curve is self-intersecting")


def circle(center=(0.0, 0.0), radius=1.0) -> Circle:
    return Circle(tuple(center), float(radius))


# -- operations -----------------------------------------------------------

def ray_curve_intersections(curve: Curve, cv: Covector, t_range=None) -> list[Hit]:
    """All hits of the line ``x + t xi/|xi|`` with ``curve`` for ``t`` in ``t_range``, sorted by ``t``."""
    if t_range is None:
        bound = curve.max_distance(cv.x) + 1.0
        t_range = (-bound, bound)
    lo, hi = map(float, t_range)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise InvalidInputError(f"t_range must be a finite interval, got {t_range}")
    return curve.line_intersections(cv.x, cv.direction, lo, hi)


def classify_covector(curve: Curve, cv: Covector, tol: float = TRANSVERSAL_TOL,
                      t_range=None) -> str:
    """Tag ``cv`` by the decomposition into left/right, plus/minus visible sets.

    ``t_range`` restricts the hits considered, e.g. to a finite observation window.
    """
    if curve.distance(cv.x) <= 1e-9:
        raise OnCurveError(f"point {cv.x} lies on the curve")
    hits = ray_curve_intersections(curve, cv, t_range)
    if not hits:
        return "no_hit"
    if any(abs(h.cos_angle) < tol for h in hits):
        return "tangent"
    if len(hits) > 1:
        return "multiple"
    h = hits[0]
    side = "L" if (cv.x - h.point) @ curve.normal(h.s) > 0 else "R"
    sign = "plus" if h.t > 0 else "minus"
    return f"Sigma{side}_{sign}"


def first_hit(curve: Curve, cv: Covector, tol: float = TRANSVERSAL_TOL) -> Hit:
    """Nearest crossing along ``+xi`` (falling back to ``-xi``) used by :func:`mirror`."""
    if curve.distance(cv.x) <= 1e-9:
        raise OnCurveError(f"point {cv.x} lies on the curve")
    hits = ray_curve_intersections(curve, cv)
    fwd = [h for h in hits if h.t > 0]
    bwd = [h for h in hits if h.t < 0]
    if fwd:
        h = fwd[0]
    elif bwd:
        h = bwd[-1]
    else:
        raise NotMirrorableError("line does not meet the curve")
    if abs(h.cos_angle) < tol:
        raise NotMirrorableError(f"line meets the curve tangentially (cos={h.cos_angle:.3g})")
    return h


def reflect_across_tangent(curve: Curve, cv: Covector, s: float) -> Covector:
    p = curve.point(s)
    nu = curve.normal(s)
    x = cv.x - 2 * ((cv.x - p) @ nu) * nu
    xi = cv.xi - 2 * (cv.xi @ nu) * nu
    return Covector(x, xi)


def mirror(curve: Curve, cv: Covector, s: float | None = None,
           tol: float = TRANSVERSAL_TOL) -> Covector:
    """Reflect ``cv`` across the tangent line at its hit point.

    With ``s`` given, the tangent at ``curve.point(s)`` is used directly.
    """
    if s is None:
        s = first_hit(curve, cv, tol).s
    return reflect_across_tangent(curve, cv, s)


# -- billiard --------------------------------------------------------------

def _next_wall(curve: Curve, y, d):
    if isinstance(curve, Circle):
        w = y - curve.c
        b = float(w @ d)
        disc = b * b - (float(w @ w) - curve.radius ** 2)
        if disc < 0:
            raise InvalidInputError("trajectory left the billiard table")
        a = -b + np.sqrt(disc)
        p = y + a * d
        return a, float(curve.nearest_param(p[None, :])[0]), p
    hits = curve.line_intersections(y, d, 1e-9, curve.max_distance(y) + 1.0)
    if not hits:
        raise InvalidInputError("trajectory left the billiard table")
    h = hits[0]
    return h.t, h.s, h.point


def _run(curve: Curve, y, d, duration, inclusive, tangency_tol, events=None):
    elapsed = 0.0
    while True:
        a, s, p = _next_wall(curve, y, d)
        remaining = duration - elapsed
        if a < remaining or (inclusive and a == remaining):
            nu = curve.normal(s)
            cosang = float(d @ nu)
            if abs(cosang) < tangency_tol:
                raise TangencyError(f"trajectory grazes the boundary at s={s:.6g}")
            d = d - 2 * cosang * nu
            d = d / np.linalg.norm(d)
            y = p
            elapsed += a
            if events is not None:
                events.append((elapsed, p.copy(), d.copy()))
        else:
            return y + remaining * d, d


def _require_inside(curve: Curve, x):
    if not curve.closed or not curve.contains(x):
        raise InvalidInputError(f"point {x} is not inside the closed curve")


def billiard_flow(curve: Curve, cv: Covector, t: float, tangency_tol: float = 1e-8) -> Covector:
    """Unit-speed billiard flow with specular reflection; left limits at reflection times."""
    _require_inside(curve, cv.x)
    norm = np.linalg.norm(cv.xi)
    d = cv.direction
    if t >= 0:
        y, d = _run(curve, cv.x, d, float(t), False, tangency_tol)
        return Covector(y, norm * d)
    y, d = _run(curve, cv.x, -d, float(-t), True, tangency_tol)
    return Covector(y, -norm * d)


@dataclass(frozen=True)
class ArtifactLink:
    segment: int
    reflection_time: float
    covector: Covector


def artifact_set(curve: Curve, cv: Covector, t_max: float,
                 tangency_tol: float = 1e-8) -> list[ArtifactLink]:
    """One representative of ``Phi^{-t} o Phi_gamma^t (x, xi)`` per billiard segment with |t| <= t_max.

    Sorted by segment index; segment 0 is ``cv`` itself.
    """
    if not t_max > 0:
        raise InvalidInputError("t_max must be positive")
    _require_inside(curve, cv.x)
    norm = np.linalg.norm(cv.xi)
    chain = [ArtifactLink(0, 0.0, cv)]
    fwd: list = []
    _run(curve, cv.x, cv.direction, float(t_max), True, tangency_tol, fwd)
    for k, (tk, p, d) in enumerate(fwd, start=1):
        chain.append(ArtifactLink(k, tk, Covector(p - tk * d, norm * d)))
    bwd: list = []
    _run(curve, cv.x, -cv.direction, float(t_max), True, tangency_tol, bwd)
    for k, (tk, p, e) in enumerate(bwd, start=1):
        chain.append(ArtifactLink(-k, -tk, Covector(p - tk * e, -norm * e)))
    chain.sort(key=lambda link: link.segment)
    return chain
