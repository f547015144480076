"""CSV and PGM writers for indicator fields and radial profiles."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .indicators import IndicatorField
from .radon import JumpReport, RadialProfile

__all__ = ["write_field_csv", "field_to_image", "write_pgm", "read_pgm", "write_profile_csv", "write_jump_report"]


def write_field_csv(field: IndicatorField, path) -> Path:
    """Rows ``x1,x2,value`` with x1 varying slowest."""
    path = Path(path)
    z1, z2 = field.grid.mesh()
    data = np.column_stack([z1.ravel(), z2.ravel(), field.values.ravel()])
    np.savetxt(path, data, delimiter=",", header="x1,x2,value", comments="", fmt="%.10g")
    return path


def field_to_image(values: np.ndarray) -> np.ndarray:
    """8-bit image with rows = descending x2 and columns = ascending x1, linear min-max scaling."""
    v = np.asarray(values, float).T[::-1]
    lo, hi = v.min(), v.max()
    if hi > lo:
        scaled = (v - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(v)
    return np.round(255.0 * scaled).astype(np.uint8)


def write_pgm(field: IndicatorField | np.ndarray, path) -> Path:
    """Binary (P5) 8-bit greyscale image; the top row is the largest x2."""
    path = Path(path)
    values = field.values if isinstance(field, IndicatorField) else field
    img = field_to_image(values)
    h, w = img.shape
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5" or int(parts[3]) != 255:
        raise ValueError("not an 8-bit binary PGM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_profile_csv(profile: RadialProfile, derivative: RadialProfile, path, exact: np.ndarray | None = None) -> Path:
    path = Path(path)
    cols = [profile.r, profile.values, derivative.values]
    header = "r,I,dI"
    if exact is not None:
        cols.append(exact)
        header += ",exact"
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="", fmt="%.12g")
    return path


def write_jump_report(report: JumpReport, path) -> Path:
    path = Path(path)
    lines = ["r0,bounded,singular,kind"]
    lines += [f"{j.r0:.6f},{j.bounded:.6g},{j.singular:.6g},{j.kind}" for j in report.jumps]
    path.write_text("\n".join(lines) + "\n")
    return path
