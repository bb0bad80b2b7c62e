"""CSV and SVG renderings of campaign results.

SVGs are built with :mod:`xml.etree` from a handful of primitives (axes,
polylines, circles) so every output is well-formed XML without a plotting
dependency.
"""

from __future__ import annotations

import csv
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .campaign import RunLog, SUMMARY_COLUMNS, summarize
from .design_space import ELEMENTS, DesignGrid, pentagon_project, pentagon_vertices
from .errors import InvalidParameterError
from .sampler import KdeModel
from .utility import UtilityModel

REPORT_KINDS = ("convergence", "failed-attempts", "pentagon", "kde", "utility-curves")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass(frozen=True)
class ReportSpec:
    kind: str
    inputs: tuple[str, ...] = ()
    out: str = "."
    width: int = 640
    height: int = 420

    def __post_init__(self):
        if self.kind not in REPORT_KINDS:
            raise InvalidParameterError(f"unknown report kind {self.kind!r}")
        if self.width < 100 or self.height < 100:
            raise InvalidParameterError("report images must be at least 100x100")

    @property
    def svg_path(self) -> Path:
        return Path(self.out) / f"{self.kind}.svg"

    @property
    def csv_path(self) -> Path:
        return Path(self.out) / f"{self.kind}.csv"


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# --- svg primitives -------------------------------------------------------

class _Frame:
    """Maps data coordinates into a padded plotting area."""

    pad = 56

    def __init__(self, width, height, xlim, ylim):
        self.w, self.h = width, height
        self.xlim = _widen(xlim)
        self.ylim = _widen(ylim)

    def x(self, v):
        lo, hi = self.xlim
        return self.pad + (v - lo) / (hi - lo) * (self.w - 2 * self.pad)

    def y(self, v):
        lo, hi = self.ylim
        return self.h - self.pad - (v - lo) / (hi - lo) * (self.h - 2 * self.pad)


def _widen(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _svg_root(width, height, title):
    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width),
                      height=str(height), viewBox=f"0 0 {width} {height}")
    ET.SubElement(root, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    t = ET.SubElement(root, "text", x=str(width / 2), y="22", attrib={"text-anchor": "middle"})
    t.set("font-size", "15")
    t.text = title
    return root


def _text(parent, x, y, s, size=11, anchor="middle"):
    t = ET.SubElement(parent, "text", x=f"{x:.2f}", y=f"{y:.2f}",
                      attrib={"text-anchor": anchor, "font-size": str(size)})
    t.text = s


def _axes(root, f: _Frame, xlabel, ylabel, nticks=5):
    g = ET.SubElement(root, "g", stroke="black", fill="none")
    x0, x1 = f.x(f.xlim[0]), f.x(f.xlim[1])
    y0, y1 = f.y(f.ylim[0]), f.y(f.ylim[1])
    ET.SubElement(g, "line", x1=f"{x0:.2f}", y1=f"{y0:.2f}", x2=f"{x1:.2f}", y2=f"{y0:.2f}")
    ET.SubElement(g, "line", x1=f"{x0:.2f}", y1=f"{y0:.2f}", x2=f"{x0:.2f}", y2=f"{y1:.2f}")
    for v in np.linspace(*f.xlim, nticks):
        _text(root, f.x(v), y0 + 16, f"{v:.3g}", 10)
    for v in np.linspace(*f.ylim, nticks):
        _text(root, x0 - 6, f.y(v) + 4, f"{v:.3g}", 10, anchor="end")
    _text(root, (x0 + x1) / 2, f.h - 12, xlabel, 12)
    lab = ET.SubElement(root, "text", x="16", y=f"{(y0 + y1) / 2:.2f}",
                        transform=f"rotate(-90 16 {(y0 + y1) / 2:.2f})",
                        attrib={"text-anchor": "middle", "font-size": "12"})
    lab.text = ylabel


def _polyline(root, f: _Frame, xs, ys, color, label=None, dashed=False):
    pts = " ".join(f"{f.x(a):.2f},{f.y(b):.2f}" for a, b in zip(xs, ys))
    attrs = {"points": pts, "fill": "none", "stroke": color, "stroke-width": "1.8"}
    if dashed:
        attrs["stroke-dasharray"] = "5,3"
    el = ET.SubElement(root, "polyline", attrib=attrs)
    if label:
        el.set("data-label", label)
    return el


def _legend(root, f: _Frame, labels, colors):
    for i, (lab, col) in enumerate(zip(labels, colors)):
        y = f.pad + 14 * i
        x = f.w - f.pad - 120
        ET.SubElement(root, "line", x1=f"{x}", y1=f"{y}", x2=f"{x + 18}", y2=f"{y}",
                      stroke=col, attrib={"stroke-width": "2"})
        _text(root, x + 24, y + 4, lab, 10, anchor="start")


def save_svg(root, path) -> None:
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def line_chart(series: dict, xlabel, ylabel, title, width=640, height=420, ylim=None):
    xs_all = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys_all = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    f = _Frame(width, height, (xs_all.min(), xs_all.max()),
               ylim or (ys_all.min(), ys_all.max()))
    root = _svg_root(width, height, title)
    _axes(root, f, xlabel, ylabel)
    colors = [PALETTE[i % len(PALETTE)] for i in range(len(series))]
    for (label, (x, y)), col in zip(series.items(), colors):
        _polyline(root, f, x, y, col, label)
    _legend(root, f, list(series), colors)
    return root


def _viridis_like(t: float) -> str:
    # two-segment blue -> teal -> yellow ramp
    t = min(max(float(t), 0.0), 1.0)
    stops = np.array([[68, 1, 84], [33, 145, 140], [253, 231, 37]], dtype=float)
    s = 2 * t
    i = min(int(s), 1)
    rgb = stops[i] + (s - i) * (stops[i + 1] - stops[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


# --- report builders -------------------------------------------------------

def load_runs(paths: Sequence[str]) -> list[RunLog]:
    """Run logs from files, or from every ``*.jsonl`` inside directories."""
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.jsonl")))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"no such run log: {p}")
    if not files:
        raise FileNotFoundError("no run logs found in the given inputs")
    return [RunLog.read(f) for f in files]


def convergence_report(spec: ReportSpec, logs: list[RunLog]) -> list[tuple]:
    rows = summarize(logs)
    write_csv(spec.csv_path, SUMMARY_COLUMNS, rows)
    it = [r[0] for r in rows]
    series = {
        "mean": (it, [r[1] for r in rows]),
        "min": (it, [r[2] for r in rows]),
        "max": (it, [r[3] for r in rows]),
    }
    root = line_chart(series, "iteration", "best-so-far utility",
                      f"Convergence over {len(logs)} run(s)", spec.width, spec.height)
    save_svg(root, spec.svg_path)
    return rows


def failed_attempts_report(spec: ReportSpec, logs: list[RunLog]) -> list[tuple]:
    rows = [(r[0], r[4]) for r in summarize(logs)[1:]]
    write_csv(spec.csv_path, ("iter", "mean_failed"), rows)
    series = {"mean failed": ([r[0] for r in rows] or [0], [r[1] for r in rows] or [0.0])}
    ymax = max(1.0, max(r[1] for r in rows)) if rows else 1.0
    root = line_chart(series, "iteration", "failed attempts",
                      f"Failed subproblem attempts, {len(logs)} run(s)",
                      spec.width, spec.height, ylim=(0.0, ymax))
    save_svg(root, spec.svg_path)
    return rows


def pentagon_report(spec: ReportSpec, grid: DesignGrid, utilities: np.ndarray) -> np.ndarray:
    """Grid points on the pentagon coloured by utility over its maximum."""
    u = np.asarray(utilities, dtype=float)
    umax = u.max()
    if not umax > 0:
        raise InvalidParameterError("pentagon report needs a positive maximum utility")
    norm = u / umax
    xy = pentagon_project(grid.points)
    rows = [(i, *grid.points[i].round(6), *xy[i].round(6), u[i], norm[i]) for i in range(len(u))]
    write_csv(spec.csv_path, ("index", *[e.lower() for e in ELEMENTS], "x", "y", "utility",
                              "normalized"), rows)

    side = min(spec.width, spec.height)
    root = _svg_root(side, side, "Normalised utility over the design space")
    f = _Frame(side, side, (-1.1, 1.1), (-1.1, 1.1))
    verts = pentagon_vertices()
    pts = " ".join(f"{f.x(a):.2f},{f.y(b):.2f}" for a, b in np.vstack([verts, verts[:1]]))
    ET.SubElement(root, "polyline", points=pts, fill="none", stroke="black")
    for e, (a, b) in zip(ELEMENTS, verts):
        _text(root, f.x(1.08 * a), f.y(1.08 * b) + 4, e, 12)
    r = max(0.8, 40.0 / math.sqrt(len(u)))
    # low utilities first so the optimum is drawn on top
    for i in np.argsort(norm, kind="stable"):
        c = ET.SubElement(root, "circle", cx=f"{f.x(xy[i, 0]):.2f}", cy=f"{f.y(xy[i, 1]):.2f}",
                          r=f"{r:.2f}", fill=_viridis_like(norm[i]))
        c.set("data-value", f"{norm[i]:.6f}")
    save_svg(root, spec.svg_path)
    return norm


def marginal_density(kde: KdeModel, dim: int, z) -> np.ndarray:
    """One-dimensional marginal of the isotropic Gaussian KDE along ``dim``."""
    z = np.asarray(z, dtype=float)
    h = kde.bandwidth
    diff = (z[:, None] - kde.support[None, :, dim]) / h
    return np.exp(-0.5 * diff ** 2).mean(axis=1) / (h * math.sqrt(2 * math.pi))


def kde_report(spec: ReportSpec, log: RunLog, n: int = 200) -> list[tuple]:
    k0, k1 = log.kde_snapshot("initial"), log.kde_snapshot("final")
    rows = []
    series = {}
    for d in range(k0.dim):
        pts = np.concatenate([k0.support[:, d], k1.support[:, d]])
        pad = 3 * max(k0.bandwidth, k1.bandwidth)
        z = np.linspace(pts.min() - pad, pts.max() + pad, n)
        a, b = marginal_density(k0, d, z), marginal_density(k1, d, z)
        rows += [(d + 1, zi, ai, bi) for zi, ai, bi in zip(z, a, b)]
        series[f"beta{d + 1} init"] = (z, a)
        series[f"beta{d + 1} final"] = (z, b)
    write_csv(spec.csv_path, ("dim", "z", "initial", "final"), rows)

    zs = np.concatenate([s[0] for s in series.values()])
    ds = np.concatenate([s[1] for s in series.values()])
    f = _Frame(spec.width, spec.height, (zs.min(), zs.max()), (0.0, ds.max()))
    root = _svg_root(spec.width, spec.height, "Formulation density, initial (dashed) vs final")
    _axes(root, f, "reduced coordinate", "marginal density")
    labels, colors = [], []
    for d in range(k0.dim):
        col = PALETTE[d % len(PALETTE)]
        z, a = series[f"beta{d + 1} init"]
        _, b = series[f"beta{d + 1} final"]
        _polyline(root, f, z, a, col, f"beta{d + 1} init", dashed=True)
        _polyline(root, f, z, b, col, f"beta{d + 1} final")
        labels.append(f"beta{d + 1}")
        colors.append(col)
    _legend(root, f, labels, colors)
    save_svg(root, spec.svg_path)
    return rows


def utility_curve_samples(model: UtilityModel, n: int = 200) -> list[tuple]:
    """``(curve, qoi_value, utility)`` rows over each curve's working range."""
    spans = {
        "cp": (model.cp.lo, model.cp.hi),
        "ys": (0.0, 400.0),
        "density": (4.0, 20.0),
        "sr": (model.sr.lo, model.sr.hi),
    }
    rows = []
    for name, curve in zip(spans, model.curves):
        xs = np.linspace(*spans[name], n)
        if name == "density":
            # make the inflection sample explicit
            xs = np.unique(np.append(xs, model.density.midpoint))
        rows += [(name, float(x), float(curve(x))) for x in xs]
    return rows


def utility_curves_report(spec: ReportSpec, model: UtilityModel) -> list[tuple]:
    rows = utility_curve_samples(model)
    write_csv(spec.csv_path, ("curve", "x", "utility"), rows)
    # one panel per curve, stacked horizontally in a single document
    names = ("cp", "ys", "density", "sr")
    units = {"cp": "Cauchy pressure (GPa)", "ys": "yield strength (MPa)",
             "density": "density (g/cc)", "sr": "solidification range (K)"}
    pw, ph = spec.width // 2, spec.height // 2
    root = _svg_root(2 * pw, 2 * ph + 24, "Single-attribute utility curves")
    for k, name in enumerate(names):
        sub = [(x, u) for c, x, u in rows if c == name]
        xs, us = zip(*sub)
        g = ET.SubElement(root, "g", transform=f"translate({(k % 2) * pw} {24 + (k // 2) * ph})")
        f = _Frame(pw, ph, (min(xs), max(xs)), (0.0, 1.0))
        _axes(g, f, units[name], "utility", nticks=4)
        _polyline(g, f, xs, us, PALETTE[k], name)
        if name == "density":
            x9 = model.density.midpoint
            c = ET.SubElement(g, "circle", cx=f"{f.x(x9):.2f}", cy=f"{f.y(model.density(x9)):.2f}",
                              r="3.5", fill="black")
            c.set("data-value", f"{float(model.density(x9)):.6f}")
    save_svg(root, spec.svg_path)
    return rows

