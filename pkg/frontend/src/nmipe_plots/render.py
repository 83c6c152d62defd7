"""Figure rendering for nmipe results tables.

Three figure kinds:

* ``decay``    — kernel value T against propagation distance, one curve
  per (evaluation point, method),
* ``residual`` — |T_method - T_oracle| against distance on a log scale;
  several input files may be overlaid (e.g. a coupling-halving pair,
  whose curves then sit a factor of four apart),
* ``heatmap``  — modulus of the two-point coherence matrix |G(x1, x2)|
  from a coherence block.

Rendering is read-only over its inputs and uses a fixed style, so a
given (inputs, matplotlib version) pair reproduces the output file
byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import MalformedCsvError, ResultTable, read_results

__all__ = ["PlotSpec", "render", "load_spec"]

_KINDS = ("decay", "residual", "heatmap")

# Fixed palette so re-renders are pixel-identical and the flat-line test
# can locate curves by color.
_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


@dataclass(frozen=True)
class PlotSpec:
    input_csv: tuple  # one or more result-CSV paths
    figure_kind: str
    output_image: str

    def __post_init__(self):
        if self.figure_kind not in _KINDS:
            raise ValueError(
                f"unknown figure_kind '{self.figure_kind}' (choose from {_KINDS})"
            )
        if not self.input_csv:
            raise ValueError("input_csv must name at least one file")
        for p in self.input_csv:
            if not Path(p).is_file():
                raise FileNotFoundError(f"input CSV not found: {p}")


def load_spec(path) -> PlotSpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("input_csv", "figure_kind", "output_image"):
        if key not in doc:
            raise ValueError(f"plot spec is missing '{key}'")
    inputs = doc["input_csv"]
    if isinstance(inputs, str):
        inputs = [inputs]
    return PlotSpec(
        input_csv=tuple(str(p) for p in inputs),
        figure_kind=str(doc["figure_kind"]),
        output_image=str(doc["output_image"]),
    )


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    return fig, ax


def _g_label(table: ResultTable) -> str:
    g = table.header.get("normalized", {}).get("g")
    return f"g={g:.3g}" if g is not None else "g=?"


def _render_decay(tables, ax):
    ci = 0
    for table in tables:
        rows = table.kernel_rows()
        if not rows:
            raise MalformedCsvError("<input>", 0, "no kernel rows to plot")
        series = {}
        for r in rows:
            series.setdefault((r.point_index, r.method), []).append((r.z, r.value.real))
        for (pidx, method), pts in sorted(series.items()):
            pts.sort()
            zs, vals = zip(*pts)
            ax.plot(
                zs,
                vals,
                color=_COLORS[ci % len(_COLORS)],
                label=f"point {pidx}, {method} ({_g_label(table)})",
            )
            ci += 1
    ax.set_xlabel("propagation distance z [m]")
    ax.set_ylabel("turbulence propagation kernel T [1]")
    ax.legend(fontsize=7)


def _render_residual(tables, ax):
    ci = 0
    for table in tables:
        rows = table.kernel_rows()
        methods = table.methods()
        if "oracle" not in methods:
            raise MalformedCsvError(
                "<input>", 0, "residual figure needs an 'oracle' method column"
            )
        ref = {
            (r.point_index, r.z): r.value.real for r in rows if r.method == "oracle"
        }
        series = {}
        for r in rows:
            if r.method == "oracle" or (r.point_index, r.z) not in ref:
                continue
            resid = abs(r.value.real - ref[(r.point_index, r.z)])
            series.setdefault((r.point_index, r.method), []).append((r.z, resid))
        if not series:
            raise MalformedCsvError("<input>", 0, "no non-oracle rows to compare")
        for (pidx, method), pts in sorted(series.items()):
            pts.sort()
            zs, vals = zip(*pts)
            ax.semilogy(
                zs,
                vals,
                marker="o",
                markersize=3,
                color=_COLORS[ci % len(_COLORS)],
                label=f"point {pidx}, |{method} - oracle| ({_g_label(table)})",
            )
            ci += 1
    ax.set_xlabel("propagation distance z [m]")
    ax.set_ylabel("kernel deviation from oracle [1]")
    ax.legend(fontsize=7)


def _render_heatmap(tables, ax, fig):
    if len(tables) != 1:
        raise MalformedCsvError("<input>", 0, "heatmap takes exactly one input CSV")
    table = tables[0]
    rows = table.coherence_rows()
    if not rows:
        raise MalformedCsvError("<input>", 0, "no coherence rows to plot")
    n = max(r.point_index for r in rows) + 1
    mat = np.full((n, n), np.nan)
    for r in rows:
        mat[r.point_index, r.aux_index] = abs(r.value)
    axis = (
        table.header.get("scenario", {}).get("coherence", {}).get("axis_points")
    )
    extent = None
    if axis and len(axis) == n:
        extent = (axis[0], axis[-1], axis[0], axis[-1])
    im = ax.imshow(
        mat.T, origin="lower", extent=extent, aspect="equal", cmap="viridis"
    )
    fig.colorbar(im, ax=ax, label="|G(x1, x2)|")
    ax.set_xlabel("x1 [m]")
    ax.set_ylabel("x2 [m]")


def render(spec: PlotSpec) -> str:
    """Render the figure described by ``spec``; returns the output path."""
    tables = [read_results(p) for p in spec.input_csv]
    fig, ax = _new_axes()
    try:
        if spec.figure_kind == "decay":
            _render_decay(tables, ax)
        elif spec.figure_kind == "residual":
            _render_residual(tables, ax)
        else:
            _render_heatmap(tables, ax, fig)
        if spec.output_image.lower().endswith(".png"):
            fig.savefig(spec.output_image, metadata={"Software": "nmipe-plots"})
        else:
            fig.savefig(spec.output_image)
    finally:
        plt.close(fig)
    return spec.output_image
