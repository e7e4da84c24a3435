"""Reconstruction inside the unit disc from an exterior disc phantom versus an interior one.

Both discs have the same radius and erfc edge, hence equal norms.
"""
import time
from dataclasses import dataclass

import numpy as np

from _config import parse
from circradon.fields import soft_disc_function
from circradon.geometry import circle
from circradon.radon import forward_sinogram
from circradon.wave import WaveConfig, parametrix_reconstruct


@dataclass
class Config:
    """Max interior gradient of the reconstruction, exterior against interior disc."""
    h: float = 0.005
    T: float = 10.0
    T0: float = 8.0
    radius: float = 0.2
    width: float = 0.04
    interior: tuple[float, ...] = (0.1, 0.05)
    exterior: tuple[float, ...] = (1.5, 0.0)


def max_gradient(field, rmax=0.8):
    g = field.grid
    gy, gx = np.gradient(field.values, g.h)
    X, Y = g.mesh()
    m = np.hypot(X, Y) < rmax
    return float(np.max(np.hypot(gx, gy)[m]))


def run(cfg: Config) -> float:
    curve = circle()
    wc = WaveConfig.build(1.05, cfg.h, cfg.T, cfg.T0, n_s=1024)
    r = np.arange(1, 4001) * 1e-3
    out = {}
    for name, c in (("interior", cfg.interior), ("exterior", cfg.exterior)):
        t0 = time.time()
        f = soft_disc_function(c, cfg.radius, cfg.width)
        sg = forward_sinogram(f, curve, r, wc.s_grid(curve), n_theta=128,
                              support=(c, cfg.radius + 6 * cfg.width))
        out[name] = max_gradient(parametrix_reconstruct(sg, wc, curve))
        print(f"{name}: max |grad| = {out[name]:.4g}  ({time.time() - t0:.1f}s)")
    ratio = out["exterior"] / out["interior"]
    print(f"ratio = {ratio:.4f}")
    return ratio


if __name__ == "__main__":
    run(parse(Config))
