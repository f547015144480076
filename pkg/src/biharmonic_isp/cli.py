"""Command-line entry point: simulate, reconstruct, radon-profile, detect, error."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import export, plotting, radon
from .config import ConfigError, ExperimentConfig, load_config
from .forward import DatasetFormatError, read_dataset, simulate_dataset, write_dataset
from .indicators import (IndicatorField, MissingChannelError, SamplingGrid, indicator_boundary,
                         indicator_source_1, indicator_source_2)
from .metrics import append_ledger, normalized_difference_field, relative_error

log = logging.getLogger("biharmonic_isp")

EXIT_OK, EXIT_CONFIG, EXIT_MISMATCH, EXIT_IO = 0, 2, 3, 4


class MismatchError(ValueError):
    """Dataset and requested operation are incompatible."""


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "indicator", None):
        over["indicator"] = args.indicator
    if getattr(args, "out", None):
        over["out"] = args.out
    return cfg.with_overrides(**over)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sidecar(out: Path, command: str, cfg: ExperimentConfig) -> None:
    """Timestamps live only here so the primary outputs stay reproducible."""
    with (out / "run.log").open("a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {command} seed={cfg.seed}\n")


def _load(path):
    if path is None:
        raise ConfigError("--dataset is required")
    try:
        return read_dataset(path)
    except DatasetFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise DatasetFormatError(f"{path}: {exc}") from None


def _truth(cfg: ExperimentConfig, grid: SamplingGrid) -> IndicatorField | None:
    if not cfg.source:
        return None
    return grid.sample(cfg.model())


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if not cfg.source:
        raise ConfigError("field 'source' is required to simulate")
    out = _outdir(cfg)
    ds = simulate_dataset(cfg.model(), cfg.sensors(), cfg.freqs(), cfg.delta, cfg.seed, cfg.with_laplacian,
                          source=json.dumps(cfg.source, sort_keys=True))
    path = Path(args.dataset) if args.dataset else out / "dataset.csv"
    write_dataset(ds, path)
    (out / "config.json").write_text(cfg.dumps())
    _sidecar(out, "simulate", cfg)
    print(f"wrote {path} ({ds.sensors.L} sensors x {ds.freqs.count} wavenumbers)")
    return EXIT_OK


def _reconstruct(cfg: ExperimentConfig, ds, grid: SamplingGrid) -> IndicatorField:
    if cfg.indicator == "boundary":
        return indicator_boundary(ds, grid)
    if cfg.indicator == "source1":
        return indicator_source_1(ds, grid, cfg.quad())
    return indicator_source_2(ds, grid)


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    ds = _load(args.dataset)
    grid = cfg.grid(fast=args.fast_grid)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            field = _reconstruct(cfg, ds, grid)
    except MissingChannelError as exc:
        raise MismatchError(str(exc)) from None
    except ValueError as exc:
        if "sensor circle" in str(exc):
            raise MismatchError(str(exc)) from None
        raise
    out = _outdir(cfg)
    stem = out / cfg.indicator
    export.write_field_csv(field, stem.with_suffix(".csv"))
    export.write_pgm(field, stem.with_suffix(".pgm"))
    plotting.plot_field(field, stem.with_suffix(".png"))
    truth = _truth(cfg, grid) if cfg.indicator != "boundary" else None
    if truth is not None:
        echo = {"L": ds.sensors.L, "dk": ds.freqs.dk, "delta": ds.delta, "seed": ds.seed}
        rep = relative_error(truth, field, echo)
        diff = normalized_difference_field(truth, field)
        export.write_pgm(diff, out / f"{cfg.indicator}_difference.pgm")
        plotting.plot_comparison(truth, field, diff, out / f"{cfg.indicator}_comparison.png")
        (out / f"{cfg.indicator}_error.txt").write_text(rep.as_text() + "\n")
        append_ledger(out / "results.csv", rep, cfg.indicator, cfg.to_dict())
        print(rep.as_text())
    _sidecar(out, "reconstruct", cfg)
    print(f"wrote {stem}.csv/.pgm/.png")
    return EXIT_OK


def _reports(ds, dr: float = 0.01):
    r_max = ds.sensors.radius + 2.0
    reports = []
    for l in range(ds.sensors.L):
        prof = radon.radon_from_dataset(ds, l, r_max=r_max, dr=dr)
        reports.append(radon.detect_jumps(prof))
    return reports


def cmd_radon_profile(args) -> int:
    cfg = _config(args)
    ds = _load(args.dataset)
    l = args.sensor
    if not 0 <= l < ds.sensors.L:
        raise MismatchError(f"sensor index {l} out of range 0..{ds.sensors.L - 1}")
    r_max = ds.sensors.radius + 2.0
    prof = radon.radon_from_dataset(ds, l, r_max=r_max)
    deriv = radon.differentiate_profile(prof)
    report = radon.detect_jumps(prof)
    exact = None
    if args.config and cfg.source:
        exact = radon.exact_profile(cfg.model(), prof.sensor, r_max, prof.dr).values
    out = _outdir(cfg)
    export.write_profile_csv(prof, deriv, out / f"profile_{l}.csv", exact)
    export.write_jump_report(report, out / f"jumps_{l}.csv")
    plotting.plot_profile(prof, deriv, out / f"profile_{l}.png", exact, report)
    _sidecar(out, "radon-profile", cfg)
    for j in report.jumps:
        print(f"r0={j.r0:.4f}  bounded={j.bounded:+.4g}  singular={j.singular:+.4g}  {j.kind}")
    return EXIT_OK


def _suppress(scores: np.ndarray, coords: np.ndarray, scale: np.ndarray, top: int) -> list[int]:
    """Greedy pick of the highest positive scores at least ``scale`` apart (coordinatewise)."""
    order = np.argsort(-scores, kind="stable")
    picked: list[int] = []
    for i in order:
        if len(picked) == top or scores[i] <= 0:
            break
        if all(np.any(np.abs(coords[i] - coords[j]) > scale) for j in picked):
            picked.append(int(i))
    return picked


def cmd_detect(args) -> int:
    cfg = _config(args)
    ds = _load(args.dataset)
    if ds.sensors.L < 2:
        warnings.warn("fewer than 2 sensors: counts are at most 2 and no separation is claimed", stacklevel=1)
    reports = _reports(ds)
    a, b, c, d = cfg.domain
    step = args.step
    g1 = np.arange(a, b + 1e-9, step)
    g2 = np.arange(c, d + 1e-9, step)
    p1, p2 = np.meshgrid(g1, g2, indexing="ij")
    pts = np.stack([p1.ravel(), p2.ravel()], axis=-1)
    fv = radon.count_vertex(pts, reports)
    vsel = _suppress(fv.astype(float), pts, np.array([0.15, 0.15]), args.top)

    centres = pts[:, None, :]
    radii = np.arange(0.05, min(b - a, d - c) / 2 + 1e-9, 0.05)
    fa = radon.count_annular(centres, radii[None, :], reports)
    ci, ri = np.unravel_index(np.arange(fa.size), fa.shape)
    coords = np.column_stack([pts[ci], radii[ri]])
    asel = _suppress(fa.ravel().astype(float), coords, np.array([0.15, 0.15, 0.1]), args.top)

    out = _outdir(cfg)
    lines = ["type,x1,x2,radius,count"]
    lines += [f"vertex,{pts[i, 0]:.4f},{pts[i, 1]:.4f},,{int(fv[i])}" for i in vsel]
    lines += [f"circle,{coords[i, 0]:.4f},{coords[i, 1]:.4f},{coords[i, 2]:.4f},{int(fa.ravel()[i])}" for i in asel]
    (out / "candidates.csv").write_text("\n".join(lines) + "\n")
    _sidecar(out, "detect", cfg)
    print("\n".join(lines))
    return EXIT_OK


def _read_field_csv(path) -> IndicatorField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x1 = np.unique(data[:, 0])
    x2 = np.unique(data[:, 1])
    grid = SamplingGrid((float(x1[0]), float(x1[-1]), float(x2[0]), float(x2[-1])), (x1.size, x2.size))
    if data.shape[0] != x1.size * x2.size:
        raise DatasetFormatError(f"{path}: not a full rectangular grid")
    return IndicatorField(grid, data[:, 2].reshape(x1.size, x2.size), Path(path).stem)


def cmd_error(args) -> int:
    cfg = _config(args)
    if not cfg.source:
        raise ConfigError("field 'source' is required to compute errors")
    try:
        field = _read_field_csv(args.field)
    except (ValueError, IndexError) as exc:
        raise DatasetFormatError(f"{args.field}: {exc}") from None
    truth = field.grid.sample(cfg.model())
    rep = relative_error(truth, field, {"L": cfg.L, "dk": cfg.dk, "delta": cfg.delta, "seed": cfg.seed})
    out = _outdir(cfg)
    append_ledger(out / "results.csv", rep, field.kind, cfg.to_dict())
    print(rep.as_text())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biharmonic-isp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=True):
        sp.add_argument("--config", help="experiment configuration (JSON)")
        sp.add_argument("--out", help="output directory (overrides config)")
        if dataset:
            sp.add_argument("--dataset", help="dataset file")
        return sp

    s = common(sub.add_parser("simulate", help="synthesise a dataset"))
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    s = common(sub.add_parser("reconstruct", help="evaluate an indicator on the sampling grid"))
    s.add_argument("--indicator", choices=("boundary", "source1", "source2"))
    s.add_argument("--fast-grid", action="store_true", help="use a 101x101 grid")
    s.set_defaults(func=cmd_reconstruct)

    s = common(sub.add_parser("radon-profile", help="circular Radon profile and jumps for one sensor"))
    s.add_argument("--sensor", type=int, default=0)
    s.set_defaults(func=cmd_radon_profile)

    s = common(sub.add_parser("detect", help="rank vertex and circle candidates by jump counts"))
    s.add_argument("--step", type=float, default=0.05, help="candidate grid step")
    s.add_argument("--top", type=int, default=8)
    s.set_defaults(func=cmd_detect)

    s = common(sub.add_parser("error", help="relative error of a field CSV against the config source"), dataset=False)
    s.add_argument("field", help="field CSV written by reconstruct")
    s.set_defaults(func=cmd_error)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MismatchError as exc:
        print(f"data mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (OSError, DatasetFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
