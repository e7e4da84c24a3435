"""Refinement study of the forward trace of a smooth Gaussian against the Abel route."""
from dataclasses import dataclass

import numpy as np

from _config import parse
from circradon.abel import lambda_from_sinogram
from circradon.fields import gaussian_field
from circradon.geometry import circle
from circradon.radon import forward_sinogram
from circradon.wave import WaveConfig, forward_trace


@dataclass
class Config:
    """Forward-trace error against the sinogram route under refinement."""
    h: tuple[float, ...] = (0.02, 0.01, 0.005)
    T: float = 1.5
    sigma: float = 0.1
    center: tuple[float, ...] = (0.2, 0.1)


def trace_error(cfg: Config, h: float) -> float:
    curve = circle()
    wc = WaveConfig.build(1.0 + cfg.T / 2 + 0.6, h, cfg.T, 0.8 * cfg.T, n_s=128)
    f = gaussian_field(wc.grid, cfg.center, cfg.sigma)
    tr = forward_trace(f, wc, curve)
    c = np.asarray(cfg.center)
    r = np.arange(1, 3001) * 1e-3

    def g(x, y):
        return np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / (2 * cfg.sigma ** 2))

    sg = forward_sinogram(g, curve, r, tr.s_grid, n_theta=256, support=(cfg.center, 10 * cfg.sigma))
    ref = lambda_from_sinogram(sg, tr.t_grid)
    return np.linalg.norm(tr.values - ref.values) / np.linalg.norm(ref.values)


def run(cfg: Config):
    errs = [trace_error(cfg, h) for h in cfg.h]
    for h, e in zip(cfg.h, errs):
        print(f"h={h}: rel L2 = {e:.3e}")
    print("ratios", [f"{e0 / e1:.2f}" for e0, e1 in zip(errs, errs[1:])])
    return errs


if __name__ == "__main__":
    run(parse(Config))
