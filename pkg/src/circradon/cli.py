"""Command-line entry point.

Every command reads one JSON document (``--config``) merged over
:data:`DEFAULTS`; ``--set section.key=value`` overrides single keys.  Results
go to ``--out`` or to a fresh ``<command>-<timestamp>`` directory together
with ``manifest.json``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericsError

DEFAULTS = {
    "curve": {"type": "circle", "center": [0.0, 0.0], "radius": 1.0, "path": None},
    "phantom": {"type": "disc", "center": [0.0, 0.0], "radius": 0.5, "edge": 0.0, "sigma": 0.1,
                "amplitude": 1.0, "k": [80.0, 0.0], "path": None},
    "grid": {"h": 0.01, "half_width": None},
    "sinogram": {"r_max": 2.0, "dr": 0.005, "n_s": 256, "n_theta": 256, "path": None},
    "solver": {"T": 10.0, "T0": 8.0, "sponge": 0},
    "support": None,
    "artifacts": {"covectors": [[0.0, 0.0, 1.0, 0.0]], "t_max": 4.0},
    "cancel": {"n_terms": 3, "h_max": 2.5e-4, "n_samples": 40, "image_size": 256},
    "ghost": {"center": [0.6, 0.0], "direction": [1.0, 0.0], "wavelength": 0.08, "sigma": 0.04,
              "h": 0.005, "T": 1.0, "measure": True},
    "seed": 0,
}

COMMANDS = ("forward", "reconstruct", "artifacts", "cancel", "ghost", "selfcheck")
THREADS_ENV = "CIRCRADON_THREADS"


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    command: str
    settings: dict
    out: Path | None
    seed: int

    @property
    def digest(self) -> str:
        blob = json.dumps({"command": self.command, "settings": self.settings}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def section(self, name: str) -> dict:
        return self.settings[name]


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{path}{k}.")
        elif isinstance(base[k], dict) and v is not None:
            raise ConfigError(f"config key {path + k!r} must be an object")
        else:
            out[k] = v
    return out


def _parse_override(item: str):
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    nested = value
    for part in reversed(key.split(".")):
        nested = {part: nested}
    return nested


def load_config(command: str, path=None, overrides=(), out=None, seed=None) -> RunConfig:
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    settings = _merge(DEFAULTS, user)
    for item in overrides:
        settings = _merge(settings, _parse_override(item))
    if seed is not None:
        settings["seed"] = seed
    if not isinstance(settings["seed"], int):
        raise ConfigError("seed must be an integer")
    return RunConfig(command, settings, Path(out) if out else None, settings["seed"])


def _num(sec: dict, key: str, lo=None, hi=None, integer=False):
    v = sec.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"{key}={v} outside [{lo}, {hi}]")
    return int(v) if integer else float(v)


def _vec2(v, name):
    try:
        a = np.asarray(v, float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a pair of numbers") from exc
    if a.shape != (2,) or not np.all(np.isfinite(a)):
        raise ConfigError(f"{name} must be a pair of finite numbers, got {v!r}")
    return a


# -- builders -------------------------------------------------------------------------

def build_curve(cfg: RunConfig):
    from .geometry import SampledCurve, circle
    c = cfg.section("curve")
    if c["type"] == "circle":
        return circle(_vec2(c["center"], "curve.center"), _num(c, "radius", 1e-9))
    if c["type"] == "csv":
        if not c.get("path"):
            raise ConfigError("curve.path is required for a csv curve")
        return SampledCurve.from_csv(c["path"])
    raise ConfigError(f"unknown curve type {c['type']!r}")


@dataclass
class Phantom:
    """A phantom as a callable, an optional support disc and a grid sampler."""
    func: object
    support: tuple | None
    on_grid: object


def build_phantom(cfg: RunConfig) -> Phantom:
    from .fields import (GridField, WavePacket, bump_field, disc_indicator, gaussian_field, soft_disc,
                         soft_disc_function, wavepacket_field)
    p = cfg.section("phantom")
    kind = p["type"]
    if kind == "none":
        raise ConfigError("this command needs a phantom")
    if kind == "zero":
        return Phantom(lambda x, y: np.zeros(np.broadcast(x, y).shape), None, lambda g: g.zeros())
    if kind == "file":
        if not p.get("path"):
            raise ConfigError("phantom.path is required for a file phantom")
        f = GridField.load(p["path"])
        return Phantom(f.sample, None, lambda g: GridField(g, f.sample(*g.mesh())))
    c = _vec2(p["center"], "phantom.center")
    if kind == "disc":
        rad = _num(p, "radius", 1e-9)
        edge = _num(p, "edge", 0.0)
        if edge == 0:
            def f(x, y):
                return (np.hypot(np.asarray(x) - c[0], np.asarray(y) - c[1]) < rad).astype(float)
            return Phantom(f, (c, rad), lambda g: disc_indicator(g, rad, c))
        return Phantom(soft_disc_function(c, rad, edge), (c, rad + 6 * edge),
                       lambda g: soft_disc(g, rad, c, edge))
    if kind == "gaussian":
        sig = _num(p, "sigma", 1e-9)
        amp = _num(p, "amplitude")

        def f(x, y):
            return amp * np.exp(-((np.asarray(x) - c[0]) ** 2 + (np.asarray(y) - c[1]) ** 2) / (2 * sig ** 2))
        return Phantom(f, (c, 12 * sig), lambda g: gaussian_field(g, c, sig, amp))
    if kind == "bump":
        rad = _num(p, "radius", 1e-9)

        def f(x, y):
            q = ((np.asarray(x) - c[0]) ** 2 + (np.asarray(y) - c[1]) ** 2) / rad ** 2
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(q < 1, np.exp(1 - 1 / (1 - np.minimum(q, 1 - 1e-300))), 0.0)
        return Phantom(f, (c, rad), lambda g: bump_field(g, c, rad))
    if kind == "packet":
        pk = WavePacket(tuple(c), tuple(_vec2(p["k"], "phantom.k")), _num(p, "sigma", 1e-9))
        return Phantom(pk, (c, 8 * pk.sigma), lambda g: wavepacket_field(g, pk))
    raise ConfigError(f"unknown phantom type {kind!r}")


def _grids(cfg: RunConfig, curve):
    s = cfg.section("sinogram")
    dr = _num(s, "dr", 1e-6)
    r_max = _num(s, "r_max", dr)
    n_s = _num(s, "n_s", 8, integer=True)
    r = dr * np.arange(1, int(np.floor(r_max / dr + 1e-9)) + 1)
    return r, curve.length * np.arange(n_s) / n_s


def _curve_reach(curve):
    s = np.linspace(0, curve.length, 1024, endpoint=False)
    return float(np.max(np.linalg.norm(curve.point(s), axis=1)))


# -- output ---------------------------------------------------------------------------

def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.out or Path(f"{cfg.command}-{time.strftime('%Y%m%d-%H%M%S')}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, cfg: RunConfig, files: list[Path]):
    inputs = []
    for sec, key in (("curve", "path"), ("phantom", "path"), ("sinogram", "path")):
        v = cfg.settings[sec].get(key)
        if v:
            inputs.append(str(v))
    manifest = {
        "command": cfg.command,
        "version": __version__,
        "config_sha256": cfg.digest,
        "config": cfg.settings,
        "inputs": inputs,
        "outputs": {f.name: _sha(f) for f in files},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
    return path


def _write_rows(path: Path, header, rows):
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


# -- commands -------------------------------------------------------------------------

def cmd_forward(cfg: RunConfig) -> list[Path]:
    from .radon import forward_sinogram
    curve = build_curve(cfg)
    ph = build_phantom(cfg)
    r, s = _grids(cfg, curve)
    n_theta = _num(cfg.section("sinogram"), "n_theta", 64, integer=True)
    sg = forward_sinogram(ph.func, curve, r, s, n_theta=n_theta, support=ph.support)
    out = _out_dir(cfg)
    sg.to_csv(out / "sinogram.csv")
    sg.save_pgm(out / "sinogram.pgm")
    return [out / "sinogram.csv", out / "sinogram.pgm"]


def _support(cfg: RunConfig, ph: Phantom | None):
    sup = cfg.settings["support"]
    if sup is not None:
        if not isinstance(sup, dict):
            raise ConfigError("support must be an object with center and radius")
        return _vec2(sup.get("center"), "support.center"), _num(sup, "radius", 0.0)
    return ph.support if ph is not None else None


def cmd_reconstruct(cfg: RunConfig) -> list[Path]:
    from .radon import Sinogram, forward_sinogram
    from .wave import WaveConfig, inside_mask, parametrix_reconstruct
    curve = build_curve(cfg)
    solver, grid = cfg.section("solver"), cfg.section("grid")
    h = _num(grid, "h", 1e-4)
    T = _num(solver, "T", 0.0)
    T0 = _num(solver, "T0", 0.0)
    half = grid["half_width"]
    half = _curve_reach(curve) + 0.05 if half is None else _num(grid, "half_width", h)
    wc = WaveConfig.build(half, h, T, T0, sponge=_num(solver, "sponge", 0, integer=True),
                          n_s=_num(cfg.section("sinogram"), "n_s", 8, integer=True))
    path = cfg.section("sinogram").get("path")
    ph = None if cfg.section("phantom")["type"] == "none" else build_phantom(cfg)
    if ph is None and not path:
        raise ConfigError("reconstruct needs sinogram.path or a phantom")
    support = _support(cfg, ph)
    bound = None if support is None else wc.check_arrival_time(curve, *support)
    if path:
        sg = Sinogram.from_csv(path)
    else:
        r, s = _grids(cfg, curve)
        sg = forward_sinogram(ph.func, curve, r, s, n_theta=_num(cfg.section("sinogram"), "n_theta", 64, integer=True),
                              support=ph.support)
    rec = parametrix_reconstruct(sg, wc, curve)
    out = _out_dir(cfg)
    rec.save(out / "reconstruction.bin")
    rec.save_pgm(out / "reconstruction.pgm")
    report = {"T": T, "T0": T0, "h": h, "arrival_bound": bound, "relative_l2_error": None}
    if ph is not None:
        truth = ph.on_grid(wc.grid)
        m = inside_mask(curve, wc.grid)
        nt = float(np.linalg.norm(truth.values[m]))
        if nt > 0:
            report["relative_l2_error"] = float(np.linalg.norm((rec.values - truth.values)[m]) / nt)
    files = [out / "reconstruction.bin", out / "reconstruction.pgm", _write_json(out / "report.json", report)]
    return files


def _covectors(cfg: RunConfig):
    from .geometry import Covector
    items = cfg.section("artifacts")["covectors"]
    if not isinstance(items, list) or not items:
        raise ConfigError("artifacts.covectors must be a non-empty list of [x, y, xi_x, xi_y]")
    out = []
    for i, c in enumerate(items):
        a = np.asarray(c, float) if isinstance(c, list) else None
        if a is None or a.shape != (4,):
            raise ConfigError(f"covector {i} must be [x, y, xi_x, xi_y]")
        out.append(Covector(a[:2], a[2:]))
    return out


def cmd_artifacts(cfg: RunConfig) -> list[Path]:
    from .geometry import artifact_set
    curve = build_curve(cfg)
    t_max = _num(cfg.section("artifacts"), "t_max", 0.0)
    chains = [artifact_set(curve, cv, t_max) for cv in _covectors(cfg)]
    out = _out_dir(cfg)
    files = []
    for i, chain in enumerate(chains):
        rows = [(c.segment, c.reflection_time, *c.covector.x, *c.covector.xi) for c in chain]
        files.append(_write_rows(out / f"artifacts-{i}.csv", ("segment", "t_reflect", "x", "y", "xix", "xiy"), rows))
    return files


def cmd_cancel(cfg: RunConfig) -> list[Path]:
    from . import cancel as cc
    from .fields import Grid, RadialProfile, write_pgm
    from .radon import radial_transform
    c = cfg.section("cancel")
    n = _num(c, "n_terms", 0, 3, integer=True)
    h_max = _num(c, "h_max", 1e-7, 0.1)
    n_samples = _num(c, "n_samples", 8, 1000, integer=True)
    size = _num(c, "image_size", 16, 4096, integer=True)
    m = 4
    target = cc.disc_series(m, h_max, n_samples)
    basis = [cc.basis_series(k, m, h_max, n_samples) for k in range(max(n, 1))]
    ghost = cc.solve_ghost_coeffs(target, basis[:n]) if n else cc.GhostSpec(cc.T_JUMP, ())
    f = RadialProfile.disc(cc.R0)
    out = _out_dir(cfg)
    files = [
        _write_rows(out / "coefficients.csv", ("k", "a", "uncertainty"),
                    [(k, a, u) for k, (a, u) in enumerate(zip(ghost.a, ghost.uncertainty))]),
        _write_rows(out / "series.csv", ("series", "j", "coefficient", "uncertainty"),
                    [(name, j, v, u) for name, s in [("Rf", target)] + [(f"A{k}", b) for k, b in enumerate(basis)]
                     for j, (v, u) in enumerate(zip(s.coeffs, s.uncertainty))]),
    ]
    fits = [cc.residual_order(f, cc.GhostSpec(cc.T_JUMP, ghost.a[:k])) for k in range(n + 1)]
    files.append(_write_rows(out / "orders.csv", ("n_terms_used", "slope", "coefficient", "noise_limited"),
                             [(k, r.slope, r.coefficient, int(r.noise_limited)) for k, r in enumerate(fits)]))
    files.append(_write_rows(out / "residual.csv", ("h", *[f"n{k}" for k in range(n + 1)]),
                             [(h, *[r.residual[i] for r in fits]) for i, h in enumerate(fits[0].h)]))
    # transform curves near r = 1/2 and the profiles of f and g
    g = ghost.profile()
    rr = np.linspace(0.3, 0.7, 161)
    files.append(_write_rows(out / "transform.csv", ("r", "Rf", "R(f-g)"),
                             [(r, radial_transform(f, r), radial_transform(f - g, r)) for r in rr]))
    rho = np.linspace(0.0, 2.0, 201)
    files.append(_write_rows(out / "profile.csv", ("radius", "f", "g"),
                             [(x, float(f(x * x)), float(g(x * x))) for x in rho]))
    grid = Grid.centered(2.0, 4.0 / (size - 1))
    X, Y = grid.mesh()
    img = f(X ** 2 + Y ** 2) - g(X ** 2 + Y ** 2)
    write_pgm(out / "density.pgm", img[::-1])
    files.append(out / "density.pgm")
    return files


def cmd_ghost(cfg: RunConfig) -> list[Path]:
    from .fields import WavePacket, wavepacket_field
    from .geometry import Covector, first_hit, mirror
    from .radon import forward_sinogram, max_radial_derivative
    from .wave import WaveConfig, unitary_ghost
    curve = build_curve(cfg)
    g = cfg.section("ghost")
    x0 = _vec2(g["center"], "ghost.center")
    d = _vec2(g["direction"], "ghost.direction")
    if np.linalg.norm(d) == 0:
        raise ConfigError("ghost.direction must be nonzero")
    d = d / np.linalg.norm(d)
    lam, sig = _num(g, "wavelength", 1e-6), _num(g, "sigma", 1e-6)
    h, T = _num(g, "h", 1e-4), _num(g, "T", 1e-6)
    cv = Covector(x0, d)
    packet = WavePacket(tuple(x0), tuple(2 * np.pi / lam * d), sig)
    wc = WaveConfig.build(WaveConfig.causal_half_width(curve, 2 * T, _curve_reach(curve)), h, T, 0.8 * T,
                          sponge=40, n_s=max(256, int(np.ceil(curve.length / h / 6))))
    f_L = wavepacket_field(wc.grid, packet)
    f_R = unitary_ghost(f_L, wc, curve, cv)
    X, Y = wc.grid.mesh()
    w = np.abs(f_R.values)
    com = np.array([(w * X).sum(), (w * Y).sum()]) / w.sum()
    target = mirror(curve, cv)
    report = {"mirror_point": target.x.tolist(), "ghost_center": com.tolist(),
              "distance": float(np.linalg.norm(com - target.x)), "three_sigma": 3 * sig,
              "norm_f_L": f_L.norm(), "norm_f_R": f_R.norm()}
    if g["measure"]:
        fh = first_hit(curve, cv)
        d0 = float(np.linalg.norm(fh.point - x0))
        s = fh.s + np.linspace(-0.3, 0.3, 61)
        r = np.linspace(max(d0 - 6 * sig, 1e-3), d0 + 6 * sig, 401)
        gL = max_radial_derivative(forward_sinogram(f_L, curve, r, s, n_theta=2048), d0 - 3 * sig, d0 + 3 * sig)
        gLR = max_radial_derivative(forward_sinogram(f_L + f_R, curve, r, s, n_theta=2048),
                                    d0 - 3 * sig, d0 + 3 * sig)
        report.update(band_gradient_f_L=gL, band_gradient_sum=gLR, band_ratio=gLR / gL)
    out = _out_dir(cfg)
    files = []
    for name, fld in (("f_L", f_L), ("f_R", f_R)):
        fld.save(out / f"{name}.bin")
        fld.save_pgm(out / f"{name}.pgm")
        files += [out / f"{name}.bin", out / f"{name}.pgm"]
    files.append(_write_json(out / "report.json", report))
    return files


def cmd_selfcheck(cfg: RunConfig) -> tuple[list[Path], bool]:
    from .selfcheck import run_checks
    lines, ok = run_checks(cfg.seed)
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    files = []
    if cfg.out is not None:
        out = _out_dir(cfg)
        (out / "selfcheck.txt").write_text(report)
        files.append(out / "selfcheck.txt")
    return files, ok


HANDLERS = {"forward": cmd_forward, "reconstruct": cmd_reconstruct, "artifacts": cmd_artifacts,
            "cancel": cmd_cancel, "ghost": cmd_ghost}


# -- entry point ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="circradon", description="Circular Radon transform toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. grid.h=0.005")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        if name == "selfcheck":
            sp.add_argument("--printed-abel-kernel", action="store_true", help=argparse.SUPPRESS)
    return p


def _set_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return
    try:
        import numba
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {n!r}") from exc


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _set_threads()
        cfg = load_config(args.command, args.config, args.overrides, args.out, args.seed)
        if args.command == "selfcheck":
            from . import abel
            abel._PRINTED_KERNEL = bool(args.printed_abel_kernel)
            try:
                files, ok = cmd_selfcheck(cfg)
            finally:
                abel._PRINTED_KERNEL = False
            if files:
                _write_manifest(files[0].parent, cfg, files)
            return 0 if ok else 2
        files = HANDLERS[args.command](cfg)
        _write_manifest(files[0].parent, cfg, files)
        print(files[0].parent)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except (KeyError, TypeError) as exc:
        print(f"config error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
