"""SVG figures drawn purely from result data, so they can be regenerated offline."""

from __future__ import annotations

import io
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402
import numpy as np  # noqa: E402

from .artifacts import atomic_write  # noqa: E402
from .codes import LATTICE_CONSTANT  # noqa: E402

GRID_SPACING = LATTICE_CONSTANT / (2 * math.sqrt(2))

_RC = {"svg.hashsalt": "gridsim", "svg.fonttype": "path", "path.simplify": False}


def _svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def charfunc_svg(result: dict) -> str:
    """Heatmap of Re C(beta) on a linear color scale with lattice gridlines."""
    re_ = np.asarray(result["re"], dtype=float)
    bx = np.asarray(result["beta_re"], dtype=float)
    by = np.asarray(result["beta_im"], dtype=float)
    x0, x1, y0, y1 = bx.min(), bx.max(), by.min(), by.max()
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 4.2))
        im = ax.imshow(
            re_, origin="lower", extent=(x0, x1, y0, y1), cmap="RdBu_r",
            norm=Normalize(vmin=-1.0, vmax=1.0), interpolation="nearest",
        )
        kmax = int(max(abs(x0), abs(x1), abs(y0), abs(y1)) / GRID_SPACING)
        for k in range(-kmax, kmax + 1):
            v = k * GRID_SPACING
            if x0 <= v <= x1:
                ax.axvline(v, color="0.3", lw=0.4)
            if y0 <= v <= y1:
                ax.axhline(v, color="0.3", lw=0.4)
        ax.set_xlabel(r"Re $\beta$ ($\alpha$ units)")
        ax.set_ylabel(r"Im $\beta$ ($\alpha$ units)")
        ax.set_title(r"Re $C(\beta)$")
        fig.colorbar(im, ax=ax)
        return _svg(fig)


def series_svg(x, series: dict, xlabel: str, ylabel: str, title: str = "", logy: bool = False) -> str:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name in sorted(series):
            ax.plot(x, series[name], marker=".", lw=1, label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if logy:
            ax.set_yscale("log")
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        return _svg(fig)


def figures(doc: dict) -> dict[str, str]:
    """Map of file name -> SVG text for a result document."""
    kind = doc["experiment"]
    res = doc["result"]
    if kind == "charfunc":
        return {"charfunc.svg": charfunc_svg(res)}
    if kind == "lifetime":
        s = {"qec": res["qec"]["series"]}
        if res.get("control"):
            s["idle"] = res["control"]["series"]
        t = [v * 1e6 for v in res["qec"]["times"]]
        return {"lifetime.svg": series_svg(t, s, "time (us)", "signed Pauli expectation")}
    if kind == "stabilize":
        r = list(range(1, len(res["rounds"]) + 1))
        return {"stabilize.svg": series_svg(r, res["stabilizer_expectation"], "round", "Re <T>")}
    if kind in ("isthmus", "lossprobe"):
        s = {k: res[k]["frequencies"] for k in ("baseline", "injected")}
        r = list(range(len(s["baseline"])))
        return {f"{kind}.svg": series_svg(r, s, "round", 'frequency of "1"')}
    return {}


def write_figures(doc: dict, out_dir: str | Path) -> list[Path]:
    out = []
    for name, text in figures(doc).items():
        p = Path(out_dir) / name
        atomic_write(p, text)
        out.append(p)
    return out
