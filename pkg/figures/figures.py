#!/usr/bin/env python3
"""Regenerate the paper-style figures from the CSV bundles written by voxfp.

    figures.py --fig fig1 --in runs/fig1 --out plots/

The script is pure presentation: it parses the documented CSV schemas
(energy.csv, rates.csv, v.csv and the `# grid` field CSVs) and draws them.
No physics is recomputed here; slope annotations are read verbatim from
rates.csv, which carries the analysis-module fits.

Rendering is deterministic: fixed style, Agg backend, PNG output with the
metadata text chunks stripped, so the same inputs produce identical bytes.
"""

import argparse
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.3,
}

# One fixed colour per curve label so panels are comparable across figures.
COLORS = {
    "linear": "tab:blue",
    "nonlinear": "tab:red",
    "linearized": "tab:green",
    "pde_int": "tab:red",
    "pde_pt": "tab:blue",
    "pde_scaled": "tab:orange",
    "sde_int": "darkred",
    "sde_pt": "navy",
}

LABELS = {
    "linear": "linear",
    "nonlinear": "nonlinear",
    "linearized": "linearized",
    "pde_int": "PDE, interacting",
    "pde_pt": "PDE, point particles",
    "pde_scaled": "PDE, interacting (scaled N)",
    "sde_int": "particles, interacting",
    "sde_pt": "particles, point",
}


class FigureError(Exception):
    """A named input file is missing, empty or malformed."""


# ---------------------------------------------------------------------------
# CSV readers (documented schemas only)


def _open_rows(path):
    if not os.path.isfile(path):
        raise FigureError(f"missing input file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FigureError(f"empty input file: {path}")
    return rows


def read_table(path, columns):
    """Read a headed CSV and return a list of dicts with the given columns."""
    rows = _open_rows(path)
    header = rows[0]
    missing = [c for c in columns if c not in header]
    if missing:
        raise FigureError(
            f"invalid input file: {path} (missing columns {', '.join(missing)})"
        )
    body = rows[1:]
    if not body:
        raise FigureError(f"empty input file: {path} (header only)")
    idx = {c: header.index(c) for c in columns}
    out = []
    for lineno, row in enumerate(body, start=2):
        try:
            out.append({c: row[idx[c]] for c in columns})
        except IndexError:
            raise FigureError(f"invalid input file: {path} (short row {lineno})")
    return out


def _floats(records, column, path):
    try:
        return [float(r[column]) for r in records]
    except ValueError as exc:
        raise FigureError(f"invalid input file: {path} ({exc})")


def read_curves(path):
    """energy.csv: label,t,E,dE -> {label: (t list, dE list)} in file order."""
    records = read_table(path, ["label", "t", "dE"])
    curves = {}
    for rec in records:
        try:
            t, de = float(rec["t"]), float(rec["dE"])
        except ValueError as exc:
            raise FigureError(f"invalid input file: {path} ({exc})")
        curves.setdefault(rec["label"], ([], []))
        curves[rec["label"]][0].append(t)
        curves[rec["label"]][1].append(de)
    return curves


def read_rates(path):
    """rates.csv: label,rate,r2,window_start,window_end -> {label: rate}."""
    records = read_table(path, ["label", "rate"])
    return {r["label"]: float(v)
            for r, v in zip(records, _floats(records, "rate", path))}


def read_field(path):
    """Field CSV (`# grid d=... n=...` header, coords...,value rows)."""
    rows = _open_rows(path)
    if not rows[0] or not rows[0][0].startswith("# grid"):
        raise FigureError(f"invalid input file: {path} (not a field csv)")
    if len(rows) < 2:
        raise FigureError(f"empty input file: {path} (no data rows)")
    try:
        x = [float(r[0]) for r in rows[1:]]
        v = [float(r[-1]) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise FigureError(f"invalid input file: {path} ({exc})")
    return x, v


# ---------------------------------------------------------------------------
# Panels


def _slope_label(label, rates):
    name = LABELS.get(label, label)
    if label in rates:
        return f"{name} (slope $-{rates[label]:.2f}$)"
    return name


def draw_decay_panel(ax, curves, rates, labels=None):
    """Semilog ΔE(t) curves, slopes annotated from rates.csv fits."""
    for label in labels if labels is not None else curves:
        if label not in curves:
            continue
        t, de = curves[label]
        pts = [(a, b) for a, b in zip(t, de) if b > 0.0]
        if not pts:
            continue
        ax.semilogy([a for a, _ in pts], [b for _, b in pts],
                    color=COLORS.get(label), label=_slope_label(label, rates))
    ax.set_xlabel("$t$")
    ax.set_ylabel(r"$E(t) - E_\infty$")
    ax.legend(fontsize=7)


def draw_profile_panel(ax, indir, stems, title):
    """Density snapshots `<stem>_t*.csv` plus steady state `<stem>_ss.csv`."""
    for stem in stems:
        snaps = sorted(glob.glob(os.path.join(indir, f"{stem}_t*.csv")))
        if not snaps:
            raise FigureError(
                f"missing input file: {os.path.join(indir, stem + '_t*.csv')}"
            )
        for i, path in enumerate(snaps):
            token = os.path.basename(path)[len(stem) + 2:-4]
            x, v = read_field(path)
            ax.plot(x, v, color=COLORS.get(stem), alpha=0.45 + 0.55 * i / max(
                len(snaps) - 1, 1), label=f"{LABELS.get(stem, stem)}, $t={token}$")
        ss = os.path.join(indir, f"{stem}_ss.csv")
        if os.path.isfile(ss):
            x, v = read_field(ss)
            ax.plot(x, v, color=COLORS.get(stem), linestyle="--",
                    label=f"{LABELS.get(stem, stem)}, steady state")
    ax.set_xlabel("$x$")
    ax.set_ylabel(r"$p(x)$")
    ax.set_title(title)
    ax.legend(fontsize=6)


# ---------------------------------------------------------------------------
# Figures


def render_fig1(indir, outpath):
    curves = read_curves(os.path.join(indir, "energy.csv"))
    rates = read_rates(os.path.join(indir, "rates.csv"))
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    draw_decay_panel(ax, curves, rates,
                     labels=["linear", "nonlinear", "linearized"])
    ax.set_title("free-energy decay")
    _save(fig, outpath)


def render_particle_figure(indir, outpath, title):
    curves = read_curves(os.path.join(indir, "energy.csv"))
    rates = read_rates(os.path.join(indir, "rates.csv"))
    vx, vv = read_table(os.path.join(indir, "v.csv"), ["x", "V"]), None
    fig, axes = plt.subplots(2, 2, figsize=(7.6, 5.6))
    ax = axes[0, 0]
    ax.plot([float(r["x"]) for r in vx], [float(r["V"]) for r in vx],
            color="black")
    ax.set_xlabel("$x$")
    ax.set_ylabel("$V(x)$")
    ax.set_title("external potential")

    draw_profile_panel(axes[0, 1], indir, ["pde_int", "sde_int"],
                       "interacting particles vs PDE")
    draw_profile_panel(axes[1, 0], indir, ["pde_pt", "sde_pt"],
                       "point particles vs PDE")
    draw_decay_panel(axes[1, 1], curves, rates)
    axes[1, 1].set_title("free-energy decay")
    fig.suptitle(title)
    _save(fig, outpath)


def _save(fig, outpath):
    fig.tight_layout()
    # Strip the Software chunk so the PNG bytes depend only on the inputs.
    fig.savefig(outpath, metadata={"Software": None})
    plt.close(fig)


RENDERERS = {
    "fig1": lambda indir, out: render_fig1(indir, out),
    "fig2": lambda indir, out: render_particle_figure(
        indir, out, "hard disks in a quadratic trap"),
    "fig3": lambda indir, out: render_particle_figure(
        indir, out, "Yukawa disks in a double-well"),
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fig", required=True, choices=sorted(RENDERERS))
    ap.add_argument("--in", dest="indir", required=True,
                    help="directory with the CSV bundle for this figure")
    ap.add_argument("--out", dest="outdir", required=True,
                    help="directory for the rendered PNG")
    args = ap.parse_args(argv)

    plt.rcParams.update(STYLE)
    os.makedirs(args.outdir, exist_ok=True)
    outpath = os.path.join(args.outdir, f"{args.fig}.png")
    try:
        RENDERERS[args.fig](args.indir, outpath)
    except FigureError as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return 2
    print(outpath)
    return 0


if __name__ == "__main__":
    sys.exit(main())
