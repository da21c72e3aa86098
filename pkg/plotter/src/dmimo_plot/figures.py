"""Error-bar trade-off figures from simulator sweep CSVs.

The only coupling to the simulator is the CSV schema pinned below. Rows carry
both the AP count and the precomputed AP density, so nothing numeric is ever
rederived here; the plotter just groups, sorts, and draws.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.ticker import NullFormatter, ScalarFormatter

EXPECTED_HEADER = [
    "Q", "S", "l_m", "M", "density_aps_per_km2", "mean_se_bps_hz", "stderr",
    "se_p5", "se_p50", "se_p95", "n_net", "n_ch", "seed",
]

X_MODES = ("q", "density")
FORMATS = ("png", "svg", "pdf")

MARKERS = ("o", "s", "d", "^", "v", "<", ">", "p")

# svg ids are salted; a fixed salt keeps repeated renders byte-identical.
_SVG_HASHSALT = "dmimo-plot"

# Written timestamps would break render-twice reproducibility, so the
# date-carrying metadata fields are cleared per backend.
_NO_TIMESTAMP = {"png": None, "svg": {"Date": None}, "pdf": {"CreationDate": None}}


class SchemaError(ValueError):
    """The CSV header does not match the simulator's sweep schema."""


@dataclass(frozen=True)
class SweepRow:
    q: int
    s: int
    l_m: float
    m: int
    density: float
    mean_se: float
    stderr: float
    se_p5: float
    se_p50: float
    se_p95: float
    n_net: int
    n_ch: int
    seed: int


@dataclass(frozen=True)
class FigureSpec:
    csv_path: Path
    x_mode: str                 # "q" or "density"
    out_path: Path
    fmt: str | None = None      # inferred from out_path suffix when None


def load_rows(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EXPECTED_HEADER:
            raise SchemaError(
                f"unexpected CSV header in {path}: expected "
                f"{','.join(EXPECTED_HEADER)}")
        rows = [
            SweepRow(q=int(r[0]), s=int(r[1]), l_m=float(r[2]), m=int(r[3]),
                     density=float(r[4]), mean_se=float(r[5]),
                     stderr=float(r[6]), se_p5=float(r[7]), se_p50=float(r[8]),
                     se_p95=float(r[9]), n_net=int(r[10]), n_ch=int(r[11]),
                     seed=int(r[12]))
            for r in reader if r
        ]
    if not rows:
        raise ValueError(f"{path} has no data rows")
    return rows


def build_figure(rows: list[SweepRow], x_mode: str):
    """One error-bar line per area side l over a log x axis of Q or density."""
    if x_mode not in X_MODES:
        raise ValueError(f"x_mode must be one of {X_MODES}, got {x_mode!r}")
    x_of = (lambda r: r.q) if x_mode == "q" else (lambda r: r.density)

    series = {}
    for row in rows:
        series.setdefault(row.l_m, []).append(row)

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for i, l_m in enumerate(sorted(series)):
        pts = sorted(series[l_m], key=x_of)
        xs = [x_of(r) for r in pts]
        ys = [r.mean_se for r in pts]
        es = [r.stderr for r in pts]
        style = {}
        if len(pts) == 1:
            warnings.warn(f"series l = {l_m:g} m has a single point; "
                          "drawing a marker without a line")
            style["linestyle"] = "none"
        ax.errorbar(xs, ys, yerr=es, marker=MARKERS[i % len(MARKERS)],
                    capsize=3, label=f"l = {l_m:g} m", **style)

    ax.set_xscale("log")
    ticks = sorted({x_of(r) for r in rows})
    ax.set_xticks(ticks)
    ax.xaxis.set_major_formatter(ScalarFormatter())
    ax.xaxis.set_minor_formatter(NullFormatter())
    ax.set_xlabel("number of APs" if x_mode == "q" else "AP density [APs/km$^2$]")
    ax.set_ylabel("mean per-user SE [bit/s/Hz]")
    ax.grid(True, which="major", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def resolve_format(spec: FigureSpec) -> str:
    fmt = spec.fmt or Path(spec.out_path).suffix.lstrip(".").lower()
    if fmt not in FORMATS:
        raise ValueError(
            f"cannot determine image format: got {fmt!r}, want one of {FORMATS}")
    return fmt


def render(spec: FigureSpec) -> Path:
    """Read the CSV, draw the figure, write the image; returns the output path."""
    rows = load_rows(spec.csv_path)
    fmt = resolve_format(spec)
    fig = build_figure(rows, spec.x_mode)
    try:
        with plt.rc_context({"svg.hashsalt": _SVG_HASHSALT}):
            fig.savefig(spec.out_path, format=fmt, dpi=150,
                        metadata=_NO_TIMESTAMP[fmt])
    finally:
        plt.close(fig)
    return Path(spec.out_path)
