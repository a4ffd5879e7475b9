"""Render exported field data files into figures.

Stateless batch rendering: each job reads the CSV/JSON files produced by the
simulator CLI and writes one raster image.  The scripts validate the file
schemas and apply plotting transforms only; no physics is recomputed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["SchemaError", "PlotJob", "FieldGrid", "STYLES",
           "load_field_grid", "load_vortices", "load_streamlines",
           "load_bernoulli", "render"]

STYLES = ("amp", "phase", "flow", "bernoulli")

FIELD_COLUMNS = ["y", "z", "re_v", "im_v", "amp", "phase", "gy", "gz", "w"]
BERNOULLI_COLUMNS = ["z", "y"]


class SchemaError(ValueError):
    """An input file does not conform to the exporter's schema."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering task over exported data files."""

    field_csv: str
    output_image: str
    style: str
    vortices_json: str | None = None
    streamlines_json: str | None = None

    def __post_init__(self):
        if self.style not in STYLES:
            raise SchemaError(f"unknown style '{self.style}', expected one of {STYLES}")


@dataclass(frozen=True)
class FieldGrid:
    """Rectangular field export: 1D axes plus one 2D array per column."""

    y: np.ndarray
    z: np.ndarray
    columns: dict


def _read_csv(path, required):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for col in required:
            if col not in header:
                raise SchemaError(f"missing column '{col}' in {path}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise SchemaError(f"malformed numeric data in {path}: {exc}") from None
    if data.shape[1] != len(header):
        raise SchemaError(
            f"{path}: rows have {data.shape[1]} fields but header lists {len(header)}"
        )
    return header, data


def load_field_grid(path) -> FieldGrid:
    """Read a field CSV (z-outer, y-inner row order) back into 2D arrays."""
    header, data = _read_csv(path, FIELD_COLUMNS)
    cols = {name: data[:, header.index(name)] for name in FIELD_COLUMNS}
    zcol = cols["z"]
    change = np.nonzero(zcol != zcol[0])[0]
    ny = int(change[0]) if change.size else len(zcol)
    if ny == 0 or len(zcol) % ny:
        raise SchemaError(f"{path}: rows do not form a rectangular grid")
    nz = len(zcol) // ny
    y = cols["y"][:ny]
    z = zcol[::ny]
    grids = {name: cols[name].reshape(nz, ny).T for name in FIELD_COLUMNS
             if name not in ("y", "z")}
    return FieldGrid(y=y, z=z, columns=grids)


def load_vortices(path) -> list:
    """Read a critical-point report, checking the record schema."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a JSON array of critical points")
    for rec in data:
        for key in ("kind", "y", "z"):
            if key not in rec:
                raise SchemaError(f"{path}: critical-point record lacks '{key}'")
    return data


def load_streamlines(path) -> list:
    """Read a streamline report, checking the record schema."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a JSON array of streamlines")
    for rec in data:
        for key in ("points", "closed"):
            if key not in rec:
                raise SchemaError(f"{path}: streamline record lacks '{key}'")
    return data


def load_bernoulli(path):
    """Read a sampled streamline-equation solution (columns z, y)."""
    header, data = _read_csv(path, BERNOULLI_COLUMNS)
    return data[:, header.index("z")], data[:, header.index("y")]


def _mark_critical_points(ax, records):
    nodes = [r for r in records if r["kind"] == "node"]
    stags = [r for r in records if r["kind"] == "stagnation"]
    if nodes:
        ax.plot([r["y"] for r in nodes], [r["z"] for r in nodes], "o",
                mfc="none", mec="white", mew=1.6, ms=9, label="node")
    if stags:
        ax.plot([r["y"] for r in stags], [r["z"] for r in stags], "x",
                color="white", mew=1.6, ms=8, label="stagnation")


def _interface_line(ax):
    ax.axhline(0.0, color="0.2", lw=0.9, ls="--")


def render(job: PlotJob) -> str:
    """Run one rendering job; returns the output image path."""
    vortices = load_vortices(job.vortices_json) if job.vortices_json else []
    streamlines = (load_streamlines(job.streamlines_json)
                   if job.streamlines_json else [])

    fig, ax = plt.subplots(figsize=(7.2, 4.6), constrained_layout=True)
    if job.style == "bernoulli":
        z, y = load_bernoulli(job.field_csv)
        ax.plot(z, y, lw=1.6)
        ax.axvline(0.0, color="0.2", lw=0.9, ls="--")
        ax.axhline(0.0, color="0.6", lw=0.7)
        ax.set_xlabel("z / lambda0")
        ax.set_ylabel("y(z)")
        ax.set_title("streamline equation solution")
    else:
        grid = load_field_grid(job.field_csv)
        if job.style == "amp":
            mesh = ax.pcolormesh(grid.y, grid.z, grid.columns["amp"].T,
                                 cmap="viridis", shading="nearest")
            fig.colorbar(mesh, ax=ax, label="|V|")
            ax.set_title("amplitude")
        elif job.style == "phase":
            mesh = ax.pcolormesh(grid.y, grid.z, grid.columns["phase"].T,
                                 cmap="twilight", shading="nearest",
                                 vmin=-math.pi, vmax=math.pi)
            fig.colorbar(mesh, ax=ax, label="arg V")
            ax.set_title("phase")
        else:  # flow
            gmag = np.hypot(grid.columns["gy"], grid.columns["gz"])
            mesh = ax.pcolormesh(grid.y, grid.z, gmag.T, cmap="magma",
                                 shading="nearest")
            fig.colorbar(mesh, ax=ax, label="|g|")
            for line in streamlines:
                pts = np.asarray(line["points"], dtype=float)
                if len(pts) > 1:
                    ax.plot(pts[:, 0], pts[:, 1],
                            color="deepskyblue" if line["closed"] else "0.85",
                            lw=1.1 if line["closed"] else 0.7)
            ax.set_title("energy flow")
        _mark_critical_points(ax, vortices)
        _interface_line(ax)
        ax.set_xlabel("y / lambda0")
        ax.set_ylabel("z / lambda0")
    fig.savefig(job.output_image, dpi=130)
    plt.close(fig)
    return job.output_image
