"""Compare the wave-solver boundary trace of a disc phantom with the Abel route."""
import time
from dataclasses import dataclass

import numpy as np

from _config import parse
from circradon.abel import lambda_from_sinogram
from circradon.fields import disc_indicator
from circradon.geometry import circle
from circradon.radon import Sinogram, disc_arc_length
from circradon.wave import WaveConfig, forward_trace


@dataclass
class Config:
    """Disc phantom: FDTD trace against A applied to the exact arc lengths."""
    h: float = 0.005
    T: float = 2.0
    radius: float = 0.5


def run(cfg: Config) -> float:
    curve = circle()
    wc = WaveConfig.build(1.0 + cfg.T / 2 + 0.1, cfg.h, cfg.T, n_s=64)
    f = disc_indicator(wc.grid, cfg.radius, smooth=True)
    t0 = time.time()
    tr = forward_trace(f, wc, curve)
    t1 = time.time()
    r = np.linspace(1e-3, cfg.T + 0.1, 4000)
    col = disc_arc_length(r, 1.0, cfg.radius)
    sg = Sinogram(r, tr.s_grid, np.repeat(col[:, None], len(tr.s_grid), axis=1))
    ref = lambda_from_sinogram(sg, tr.t_grid)
    err = np.linalg.norm(tr.values - ref.values) / np.linalg.norm(ref.values)
    print(f"h={cfg.h} steps={wc.n_steps} solve={t1 - t0:.1f}s rel L2={err:.4f}")
    return err


if __name__ == "__main__":
    run(parse(Config))
