"""Reconstruct a Gaussian phantom from its computed trace by time reversal."""
import time
from dataclasses import dataclass

import numpy as np

from _config import parse
from circradon.fields import gaussian_field
from circradon.geometry import circle
from circradon.wave import WaveConfig, forward_trace, inside_mask, time_reversal


@dataclass
class Config:
    """Time reversal of an interior Gaussian on the unit circle."""
    h: float = 0.01
    T: float = 8.0
    T0: float = 6.0
    sigma: float = 0.12
    center: tuple[float, ...] = (0.1, 0.05)
    n_s: int = 512


def run(cfg: Config) -> float:
    curve = circle()
    wc = WaveConfig.build(WaveConfig.causal_half_width(curve, cfg.T, 0.6), cfg.h, cfg.T, cfg.T0,
                          sponge=0, n_s=cfg.n_s)
    f = gaussian_field(wc.grid, cfg.center, cfg.sigma)
    t0 = time.time()
    tr = forward_trace(f, wc, curve)
    t1 = time.time()
    rec = time_reversal(tr, wc, curve)
    t2 = time.time()
    m = inside_mask(curve, wc.grid)
    err = np.linalg.norm((rec.values - f.values)[m]) / np.linalg.norm(f.values[m])
    print(f"h={cfg.h} T={cfg.T} forward={t1 - t0:.1f}s reversal={t2 - t1:.1f}s rel L2={err:.4f}")
    return err


if __name__ == "__main__":
    run(parse(Config))
