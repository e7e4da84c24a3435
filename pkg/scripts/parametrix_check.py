"""End-to-end reconstruction of an interior Gaussian from its sinogram, with one refinement step."""
import time
from dataclasses import dataclass

import numpy as np

from _config import parse
from circradon.fields import gaussian_field
from circradon.geometry import circle
from circradon.radon import forward_sinogram
from circradon.wave import WaveConfig, inside_mask, parametrix_reconstruct


@dataclass
class Config:
    """Sinogram -> Abel -> time reversal for a Gaussian phantom."""
    h: tuple[float, ...] = (0.01, 0.005)
    T: float = 10.0
    T0: float = 8.0
    sigma: float = 0.03
    center: tuple[float, ...] = (0.1, 0.05)
    n_s: int = 1024
    dr: float = 1e-3
    r_max: float = 2.0
    n_theta: int = 128


def error_at(cfg: Config, h: float) -> float:
    curve = circle()
    support = (cfg.center, 12 * cfg.sigma)
    wc = WaveConfig.build(1.05, h, cfg.T, cfg.T0, n_s=cfg.n_s)
    r = np.arange(1, int(round(cfg.r_max / cfg.dr)) + 1) * cfg.dr
    c = np.asarray(cfg.center)

    def phantom(x, y):
        return np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / (2 * cfg.sigma ** 2))

    t0 = time.time()
    sg = forward_sinogram(phantom, curve, r, wc.s_grid(curve), n_theta=cfg.n_theta, support=support)
    t1 = time.time()
    rec = parametrix_reconstruct(sg, wc, curve, support=support)
    t2 = time.time()
    f = gaussian_field(wc.grid, cfg.center, cfg.sigma)
    m = inside_mask(curve, wc.grid)
    err = np.linalg.norm((rec.values - f.values)[m]) / np.linalg.norm(f.values[m])
    print(f"h={h} T={cfg.T} sinogram={t1 - t0:.1f}s reconstruct={t2 - t1:.1f}s rel L2={err:.4f}")
    return err


def run(cfg: Config):
    errs = [error_at(cfg, h) for h in cfg.h]
    if len(errs) > 1:
        print("ratios", [f"{e0 / e1:.2f}" for e0, e1 in zip(errs, errs[1:])])
    return errs


if __name__ == "__main__":
    run(parse(Config))
