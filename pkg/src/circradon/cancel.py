"""Half-integer conormal expansions of radial transforms and ghost construction.

Setting: ``gamma`` is the unit circle, ``f`` the indicator of ``|x| < 1/2``
and ``R = R_gamma / (2r)``.  ``R f(1/2 + h)`` has a one-sided expansion in
``h^{j+1/2}``.  A radial ``g = H(t) sum_k a_k t^k`` with ``t = |x|^2 - 9/4``,
supported outside the unit disc, is chosen so that ``R(f - g)`` is smoother
at ``r = 1/2``: each ``a_k`` kills one more half-integer order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EllipticityError, FitError, InvalidInputError
from .fields import RadialProfile
from .radon import radial_transform

R0 = 0.5
T_JUMP = 9.0 / 4.0
H_MAX = 2.5e-4        # fit window for coefficient extraction
N_SAMPLES = 40
H_MIN = 1e-8


@dataclass(frozen=True)
class ConormalSeries:
    """``F(h) ~ sum_j coeffs[j] h^{j+1/2}`` for ``0 < h <= h_max``."""
    r0: float
    coeffs: tuple
    h_max: float
    uncertainty: tuple = ()

    def __post_init__(self):
        if not self.h_max > 0:
            raise InvalidInputError("h_max must be positive")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidInputError("coefficients must be finite")

    def __call__(self, h):
        h = np.asarray(h, float)
        c = np.asarray(self.coeffs, float)
        hp = np.maximum(h, 0.0)
        return np.where(h > 0, np.sqrt(hp) * np.polynomial.polynomial.polyval(hp, c), 0.0)

    def __len__(self):
        return len(self.coeffs)


@dataclass(frozen=True)
class GhostSpec:
    """``g(x) = H(t) sum_k a[k] t^k`` with ``t = |x|^2 - t_jump``."""
    t_jump: float
    a: tuple
    uncertainty: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.t_jump > 1:
            raise InvalidInputError("the ghost must live outside the unit disc (t_jump > 1)")

    def profile(self) -> RadialProfile:
        return RadialProfile.ghost(self.t_jump, self.a)


def _samples(F, h):
    return np.array([float(F(x)) for x in h])


def _lsq(h, y, n_terms, h_max):
    # columns scaled to O(1) on the window
    V = (h[:, None] / h_max) ** np.arange(n_terms)
    cond = np.linalg.cond(V)
    if cond > 1e10:
        raise FitError(f"conormal fit is ill-conditioned (cond {cond:.2e})")
    c, *_ = np.linalg.lstsq(V, y, rcond=None)
    return c / h_max ** np.arange(n_terms), V, c


def conormal_expand(F, n_terms: int = 4, h_max: float = H_MAX, n_samples: int = N_SAMPLES,
                    h_min: float = H_MIN, r0: float = R0) -> ConormalSeries:
    """Least-squares fit ``F(h) / sqrt(h) ~ sum_j c_j h^j`` on geometric samples in ``[h_min, h_max]``.

    Dividing by ``sqrt(h)`` puts every sample on the same relative footing.
    The uncertainty combines the residual scatter with the change of each
    coefficient when the window is halved (a truncation-bias estimate).
    """
    if not 1 <= n_terms <= 4:
        raise InvalidInputError("n_terms must be between 1 and 4")
    if not 0 < h_min < h_max:
        raise InvalidInputError("need 0 < h_min < h_max")
    h = np.geomspace(h_min, h_max, n_samples)
    h = (r0 + h) - r0          # the offsets actually realized by r = r0 + h
    y = _samples(F, h) / np.sqrt(h)
    c, V, cs = _lsq(h, y, n_terms, h_max)
    dof = max(n_samples - n_terms, 1)
    res = y - V @ cs
    cov = np.linalg.inv(V.T @ V) * (res @ res) / dof
    stat = np.sqrt(np.diag(cov)) / h_max ** np.arange(n_terms)
    half = h <= h_max / 2
    if np.count_nonzero(half) > n_terms + 2:
        c_half, _, _ = _lsq(h[half], y[half], n_terms, h_max / 2)
        bias = np.abs(c - c_half)
    else:
        bias = np.zeros(n_terms)
    unc = np.maximum(stat, bias)
    return ConormalSeries(r0, tuple(map(float, c)), h_max, tuple(map(float, unc)))


def disc_series(n_terms: int = 4, h_max: float = H_MAX, n_samples: int = N_SAMPLES) -> ConormalSeries:
    """Expansion of ``R f(1/2 + h)`` for ``f`` the indicator of the disc of radius 1/2."""
    prof = RadialProfile.disc(R0)
    return conormal_expand(lambda h: radial_transform(prof, R0 + h, 1e-15), n_terms, h_max, n_samples)


def basis_series(k: int, n_terms: int = 4, h_max: float = H_MAX, n_samples: int = N_SAMPLES,
                 t_jump: float = T_JUMP) -> ConormalSeries:
    """Expansion of ``A_k(h) = R[H(t) t^k](1/2 + h)``, ``t = |x|^2 - t_jump``."""
    if not 0 <= k <= 3:
        raise InvalidInputError("k must be between 0 and 3")
    prof = RadialProfile.ghost(t_jump, tuple(1.0 if i == k else 0.0 for i in range(k + 1)))
    return conormal_expand(lambda h: radial_transform(prof, R0 + h, 1e-15), n_terms, h_max, n_samples)


def solve_ghost_coeffs(target: ConormalSeries, basis, t_jump: float = T_JUMP,
                       pivot_tol: float = 1e-8) -> GhostSpec:
    """Forward substitution so that ``target - sum_k a_k basis[k]`` vanishes through ``h^{n-1/2}``."""
    n = len(basis)
    if n == 0:
        return GhostSpec(t_jump, ())
    if any(len(b) < n for b in basis) or len(target) < n:
        raise InvalidInputError(f"every series needs at least {n} coefficients")
    a = np.zeros(n)
    unc = np.zeros(n)
    for j in range(n):
        piv = basis[j].coeffs[j]
        if abs(piv) < pivot_tol:
            raise EllipticityError(f"basis {j} has vanishing leading coefficient {piv:.3e}")
        rest = target.coeffs[j] - sum(a[k] * basis[k].coeffs[j] for k in range(j))
        a[j] = rest / piv
        if target.uncertainty and all(b.uncertainty for b in basis):
            e = target.uncertainty[j] + sum(abs(a[k]) * basis[k].uncertainty[j] + unc[k] * abs(basis[k].coeffs[j])
                                            for k in range(j))
            unc[j] = e / abs(piv) + abs(a[j]) * basis[j].uncertainty[j] / abs(piv)
    return GhostSpec(t_jump, tuple(map(float, a)), tuple(map(float, unc)))


def example_ghost(n_terms: int = 3, h_max: float = H_MAX, n_samples: int = N_SAMPLES) -> GhostSpec:
    """Ghost coefficients ``a_0 .. a_{n-1}`` for the disc of radius 1/2."""
    m = max(n_terms, 1) + 1 if n_terms < 4 else 4
    target = disc_series(m, h_max, n_samples)
    basis = [basis_series(k, m, h_max, n_samples) for k in range(n_terms)]
    return solve_ghost_coeffs(target, basis)


@dataclass(frozen=True)
class ResidualFit:
    slope: float
    coefficient: float         # fitted coefficient of h^{n + 1/2}
    noise_limited: bool
    h: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)


def residual_curve(f: RadialProfile, g: GhostSpec, h) -> np.ndarray:
    prof = f - g.profile()
    return np.array([radial_transform(prof, R0 + x, 1e-15) for x in np.asarray(h, float)])


def residual_order(f: RadialProfile, g: GhostSpec, n_terms_used: int | None = None,
                   h_lo: float = 1e-4, h_hi: float = 1e-2, n_samples: int = 25,
                   noise: float = 1e-13) -> ResidualFit:
    """Log-log slope of ``|R(f - g)(1/2 + h)|`` over ``[h_lo, h_hi]``.

    Samples below ``noise`` are dropped and flag the result as noise limited.
    The leading coefficient is read off as ``residual / h^{n + 1/2}`` at ``h_lo``,
    extrapolated linearly in ``h``.
    """
    n = len(g.a) if n_terms_used is None else n_terms_used
    if n_terms_used is not None and len(g.a) != n_terms_used:
        raise InvalidInputError(f"ghost has {len(g.a)} coefficients, expected {n_terms_used}")
    h = np.geomspace(h_lo, h_hi, n_samples)
    res = residual_curve(f, g, h)
    ok = np.abs(res) > noise
    if np.count_nonzero(ok) < 3:
        return ResidualFit(float("nan"), float("nan"), True, h, res)
    slope = float(np.polyfit(np.log(h[ok]), np.log(np.abs(res[ok])), 1)[0])
    # coefficient of h^{n+1/2}: scaled residual is c_n + c_{n+1} h + ...
    q = res / h ** (n + 0.5)
    k = min(5, len(h))
    coef = float(np.polyfit(h[:k], q[:k], 1)[1])
    return ResidualFit(slope, coef, bool(not np.all(ok)), h, res)
