"""PNG figures for CLI reports, rendered headless with matplotlib's Agg backend.

Figures carry no software or timestamp metadata, so identical data give
byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def phase_diagram_figure(rows, path, crossover=None, sigma0=None) -> Path:
    sig = np.array([r["sigma"] for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for key, label, style in (("lamellar", "lamellar", "-"), ("disk", "disk", "-"),
                              ("band_aid", "band-aid (area)", "--"), ("strip", "strip", ":")):
        vals = np.array([np.nan if r.get(key) is None else r[key] for r in rows], dtype=float)
        if np.any(np.isfinite(vals)):
            ax.plot(sig, vals, style, label=label)
    if crossover is not None:
        ax.axvline(crossover, color="k", lw=0.8, label=f"crossover {crossover:.4f}")
    if sigma0 is not None and sigma0 <= sig.max():
        ax.axvline(sigma0, color="grey", lw=0.8, ls="--", label="sigma0 bound")
    ax.set_xlabel("sigma")
    ax.set_ylabel("sharp energy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def energy_trace_figure(trace_rows, path) -> Path:
    steps = [r[0] for r in trace_rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(steps, [r[-2] for r in trace_rows])
    ax.set_xlabel("step")
    ax.set_ylabel("energy")
    fig.tight_layout()
    return _save(fig, path)


def field_figure(field, path, title=None) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    im = ax.imshow(field.values.T, origin="lower", extent=(-0.5, 0.5, -0.5, 0.5),
                   vmin=-1, vmax=1, cmap="RdBu_r")
    fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def certificate_figure(levels, sharp_total, path) -> Path:
    eps = [lv["epsilon"] for lv in levels]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(eps, [lv["diffuse_total"] for lv in levels], "o-", label="diffuse energy")
    ax.axhline(sharp_total, color="k", lw=0.8, label="sharp energy")
    ax.set_xscale("log")
    ax.set_xlabel("epsilon")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def curvature_figure(arclength, curvature, mask, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(arclength, curvature, ".", ms=2, label="curvature")
    if np.any(mask):
        ax.plot(arclength[mask], curvature[mask], "x", ms=3, color="grey", label="excluded")
    ax.set_xlabel("arclength")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
