"""Text artefacts: CSV dumps, point-set files and SVG scatter plots.

Point-set file: one ``x y z`` triple per line (``%.17g``), optionally with a
sidecar ``<stem>.json`` holding ``shape_id`` and ``normalization``
(``center``, ``scale``).  CSV files start with ``#`` comment lines describing
the run and units, followed by a header row.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .pointflow.shapes import PointSet


class PointSetFormatError(ValueError):
    pass


def fmt(v):
    return format(float(v), ".17g")


def write_csv(path, columns, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Return ``(columns, rows)`` skipping comment lines; numeric cells become floats."""
    cols, rows = None, []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        cells = line.split(",")
        if cols is None:
            cols = cells
            continue
        row = []
        for c in cells:
            try:
                row.append(float(c))
            except ValueError:
                row.append(c)
        rows.append(row)
    return cols, rows


def write_samples_csv(path, points, logp=None, comments=()):
    points = np.asarray(points, dtype=np.float64).reshape(-1, np.shape(points)[-1] if np.size(points) else 2)
    names = ["x", "y", "z"][: points.shape[1]]
    cols = list(names)
    data = points
    if logp is not None:
        cols.append("logp")
        data = np.column_stack([points, np.asarray(logp).reshape(-1, 1)])
    write_csv(path, cols, data, comments)


# -- point-set files ------------------------------------------------------------
def write_pointset(path, ps: PointSet, sidecar=True):
    path = Path(path)
    path.write_text("".join(" ".join(fmt(v) for v in p) + "\n" for p in ps.points))
    if sidecar:
        meta = {"shape_id": ps.shape_id, "normalization": ps.normalization}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def read_pointset(path):
    path = Path(path)
    try:
        pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except (ValueError, OSError) as err:
        raise PointSetFormatError(f"{path}: cannot parse point set ({err})") from None
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise PointSetFormatError(f"{path}: expected non-empty lines of 'x y z'")
    side = path.with_suffix(".json")
    shape_id, norm = path.stem, None
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as err:
            raise PointSetFormatError(f"{side}: bad sidecar ({err})") from None
        shape_id = meta.get("shape_id", shape_id)
        norm = meta.get("normalization")
    try:
        ps = PointSet(pts, shape_id)
    except ValueError as err:
        raise PointSetFormatError(f"{path}: {err}") from None
    if norm:
        ps.normalization = norm
    return ps


def read_pointset_dir(directory):
    files = sorted(p for p in Path(directory).iterdir() if p.suffix in (".xyz", ".txt", ".pts"))
    if not files:
        raise PointSetFormatError(f"{directory}: no point-set files (*.xyz, *.txt, *.pts)")
    return [read_pointset(f) for f in files]


# -- SVG ------------------------------------------------------------------------
def svg_scatter(path, points, lim=None, size=400, radius=1.2, title=""):
    """Minimal standalone SVG scatter of 2-D points."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if lim is None:
        lim = float(np.abs(p).max()) * 1.05 if len(p) else 1.0
        lim = lim or 1.0
    sx = lambda v: (v + lim) / (2 * lim) * size  # noqa: E731
    sy = lambda v: size - (v + lim) / (2 * lim) * size  # noqa: E731
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white" stroke="black"/>']
    if title:
        out.append(f'<text x="6" y="16" font-size="12" font-family="monospace">{title}</text>')
    for x, y in p:
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="{radius}" fill="#1f4e9c" fill-opacity="0.6"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def svg_projections(prefix, points, title=""):
    """Three orthographic projections (xy, xz, yz) of a 3-D set; returns the paths."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    lim = float(np.abs(p).max()) * 1.05 if len(p) else 1.0
    paths = []
    for name, (i, j) in {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}.items():
        path = f"{prefix}_{name}.svg"
        svg_scatter(path, p[:, [i, j]], lim=lim or 1.0, title=f"{title} {name}".strip())
        paths.append(path)
    return paths


def resolve_out(path):
    """Relative output paths are placed under ``$SOFTFLOW_OUTPUT_ROOT`` when set."""
    root = os.environ.get("SOFTFLOW_OUTPUT_ROOT")
    p = Path(path)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p
