"""Build the exterior ghost of an interior wave packet and measure sinogram cancellation."""
import time
from dataclasses import dataclass

import numpy as np

from _config import parse
from circradon.fields import WavePacket, wavepacket_field
from circradon.geometry import Covector, circle, first_hit, mirror
from circradon.radon import forward_sinogram, max_radial_derivative
from circradon.wave import WaveConfig, unitary_ghost


@dataclass
class Config:
    """Ghost of a packet travelling toward the unit circle."""
    h: float = 0.005
    sigma: float = 0.04
    wavelength: float = 0.08
    T: float = 1.0
    center: tuple[float, ...] = (0.6, 0.0)
    direction: tuple[float, ...] = (1.0, 0.0)


def run(cfg: Config):
    curve = circle()
    x0 = np.asarray(cfg.center, float)
    d = np.asarray(cfg.direction, float) / np.linalg.norm(cfg.direction)
    packet = WavePacket(tuple(x0), tuple(2 * np.pi / cfg.wavelength * d), cfg.sigma)
    wc = WaveConfig.build(1.0 + cfg.T + 0.05, cfg.h, cfg.T, 0.8 * cfg.T, n_s=1024)
    f_L = wavepacket_field(wc.grid, packet)
    cv = Covector(x0, d)
    t0 = time.time()
    f_R = unitary_ghost(f_L, wc, curve, cv)
    t1 = time.time()
    X, Y = wc.grid.mesh()
    w = np.abs(f_R.values)
    com = np.array([(w * X).sum(), (w * Y).sum()]) / w.sum()
    target = mirror(curve, cv).x
    hit = first_hit(curve, cv)
    d0 = float(np.linalg.norm(hit.point - x0))
    s = hit.s + np.linspace(-0.3, 0.3, 61)
    r = np.linspace(max(d0 - 6 * cfg.sigma, 1e-3), d0 + 6 * cfg.sigma, 401)
    band = (d0 - 3 * cfg.sigma, d0 + 3 * cfg.sigma)
    gL = max_radial_derivative(forward_sinogram(f_L, curve, r, s, n_theta=2048), *band)
    gLR = max_radial_derivative(forward_sinogram(f_L + f_R, curve, r, s, n_theta=2048), *band)
    t2 = time.time()
    dist = float(np.linalg.norm(com - target))
    print(f"ghost solve {t1 - t0:.1f}s, sinograms {t2 - t1:.1f}s")
    print(f"centre of |f_R| = {com}, mirror point = {target}, distance = {dist:.4f} (3 sigma = {3 * cfg.sigma})")
    print(f"max |d_r R f_L| = {gL:.4g}, max |d_r R (f_L + f_R)| = {gLR:.4g}, ratio = {gLR / gL:.4f}")
    print(f"norms: |f_L| = {f_L.norm():.4g}, |f_R| = {f_R.norm():.4g}")
    return gLR / gL, dist


if __name__ == "__main__":
    run(parse(Config))
