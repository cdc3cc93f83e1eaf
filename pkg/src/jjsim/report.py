"""Deterministic tables, atomic file output, plot data and figures."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ConfigurationError  # noqa: E402


def fmt(value) -> str:
    """17 significant digits for floats so every value round-trips."""
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise ConfigurationError(f"unknown column {name!r}; available: {', '.join(self.columns)}")
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class OutputWriter:
    """Writes files into ``directory`` atomically, refusing to clobber unless allowed."""

    def __init__(self, directory, overwrite: bool = False):
        self.directory = Path(directory)
        self.overwrite = overwrite
        self.written: list[str] = []

    def check(self, names):
        if self.overwrite:
            return
        existing = [n for n in names if (self.directory / n).exists()]
        if existing:
            raise ConfigurationError(
                f"refusing to overwrite {', '.join(existing)} in {self.directory}; pass --overwrite"
            )

    def write_bytes(self, name: str, data: bytes):
        self.directory.mkdir(parents=True, exist_ok=True)
        target = self.directory / name
        if target.exists() and not self.overwrite:
            raise ConfigurationError(f"refusing to overwrite {target}; pass --overwrite")
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.directory)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.written.append(name)

    def write_text(self, name: str, text: str):
        self.write_bytes(name, text.encode("utf-8"))


@dataclass
class PlotSpec:
    """Axes and series for a plot: ``y`` columns against ``x``.

    With ``group_by`` set, one series per distinct value of that column is
    emitted (one gnuplot index block each) and ``y`` must hold one column.
    """

    name: str
    x: str
    y: list[str]
    group_by: str | None = None
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    style: str = "lines"


def _series(table: Table, spec: PlotSpec) -> list[tuple[str, list, list]]:
    xs = table.column(spec.x)
    ys = {c: table.column(c) for c in spec.y}
    if spec.group_by is None:
        return [(c, xs, ys[c]) for c in spec.y]
    keys = table.column(spec.group_by)
    if len(spec.y) != 1:
        raise ConfigurationError("grouped plots take exactly one y column")
    (col,) = spec.y
    order = list(dict.fromkeys(keys))
    out = []
    for k in order:
        idx = [i for i, v in enumerate(keys) if v == k]
        out.append((f"{spec.group_by}={fmt(k)}", [xs[i] for i in idx], [ys[col][i] for i in idx]))
    return out


def plot_data(table: Table, spec: PlotSpec) -> tuple[str, str]:
    """Gnuplot data text (one index block per series) and a matching script stub."""
    series = _series(table, spec)
    lines = [f"# {spec.title or spec.name}", f"# x: {spec.x}", f"# series: {len(series)}"]
    for block, (label, xs, ys) in enumerate(series):
        if block:
            lines += ["", ""]
        lines.append(f"# index {block}: {label}")
        lines.append(f"# {spec.x} {label}")
        lines += [f"{fmt(x)} {fmt(y)}" for x, y in zip(xs, ys)]
    data = "\n".join(lines) + "\n"
    plots = [
        f"'{spec.name}.dat' index {i} using 1:2 with {spec.style} title '{label}'" for i, (label, _, _) in enumerate(series)
    ]
    script = "\n".join(
        [
            f"# gnuplot script for {spec.name}.dat",
            "set terminal pngcairo size 800,600",
            f"set output '{spec.name}_gnuplot.png'",
            f"set title '{spec.title}'",
            f"set xlabel '{spec.xlabel or spec.x}'",
            f"set ylabel '{spec.ylabel}'",
            ("plot " + ", \\\n     ".join(plots)) if plots else "# empty table: nothing to plot",
        ]
    ) + "\n"
    return data, script


def render_figure(table: Table, spec: PlotSpec) -> bytes:
    """PNG bytes of the same series drawn with matplotlib."""
    series = _series(table, spec)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=100)
    marker = "o" if spec.style == "points" else None
    ls = "none" if spec.style == "points" else "-"
    for label, xs, ys in series:
        ax.plot(xs, ys, marker=marker, linestyle=ls, label=label, ms=3)
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    if len(series) > 1:
        ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="png", metadata={"Software": None})
    plt.close(fig)
    return buf.getvalue()


def emit_plot_data(writer: OutputWriter, table: Table, spec: PlotSpec, figure: bool = True):
    data, script = plot_data(table, spec)
    writer.write_text(f"{spec.name}.dat", data)
    writer.write_text(f"{spec.name}.gp", script)
    if figure:
        writer.write_bytes(f"{spec.name}.png", render_figure(table, spec))
