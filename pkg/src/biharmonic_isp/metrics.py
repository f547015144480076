"""Error measures between a reconstruction and the sampled ground truth."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .indicators import IndicatorField

__all__ = ["ErrorReport", "relative_error", "normalized_difference_field", "config_hash", "append_ledger"]


@dataclass(frozen=True)
class ErrorReport:
    relative_l2: float
    max_abs: float
    resolution: tuple[int, int]
    config: dict = field(default_factory=dict)
    zero_truth: bool = False

    def as_text(self) -> str:
        rows = [("relative L2 error", f"{self.relative_l2:.6f}"),
                ("max abs error", f"{self.max_abs:.6g}"),
                ("grid", f"{self.resolution[0]}x{self.resolution[1]}")]
        rows += [(k, str(v)) for k, v in sorted(self.config.items())]
        if self.zero_truth:
            rows.append(("note", "truth is identically zero; relative error undefined"))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _check_grids(truth: IndicatorField, recon: IndicatorField) -> None:
    if truth.grid != recon.grid:
        raise ValueError(f"grid mismatch: {truth.grid} vs {recon.grid}")


def relative_error(truth: IndicatorField, recon: IndicatorField, config: dict | None = None) -> ErrorReport:
    """||S - I||_2 / ||S||_2 over the grid nodes (root-sum-square norms)."""
    _check_grids(truth, recon)
    diff = recon.values - truth.values
    den = float(np.sqrt(np.sum(truth.values**2)))
    num = float(np.sqrt(np.sum(diff**2)))
    zero = den == 0.0
    rel = math.inf if zero else num / den
    return ErrorReport(rel, float(np.abs(diff).max()), tuple(truth.grid.shape), dict(config or {}), zero)


def normalized_difference_field(truth: IndicatorField, recon: IndicatorField,
                                normalize: bool = True) -> IndicatorField:
    """recon - truth, min-max scaled to [0, 1] unless ``normalize`` is False or the field is constant."""
    _check_grids(truth, recon)
    d = recon.values - truth.values
    lo, hi = d.min(), d.max()
    if normalize and hi > lo:
        d = (d - lo) / (hi - lo)
    return IndicatorField(truth.grid, d, "difference")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


LEDGER_COLUMNS = ("config_hash", "indicator", "L", "dk", "delta", "seed", "grid", "relative_l2", "max_abs")


def append_ledger(path, report: ErrorReport, indicator: str, config: dict) -> Path:
    """Append one CSV row keyed by the config hash; writes the header on first use."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    row = {
        "config_hash": config_hash(config),
        "indicator": indicator,
        "L": report.config.get("L", ""),
        "dk": report.config.get("dk", ""),
        "delta": report.config.get("delta", ""),
        "seed": report.config.get("seed", ""),
        "grid": "x".join(map(str, report.resolution)),
        "relative_l2": repr(report.relative_l2),
        "max_abs": repr(report.max_abs),
    }
    with path.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LEDGER_COLUMNS)
        if new:
            w.writeheader()
        w.writerow(row)
    return path
