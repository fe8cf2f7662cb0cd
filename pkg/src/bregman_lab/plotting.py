"""Deterministic SVG rendering of one record column."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SVG_SALT = "bregman-lab"
LOG_AXES = ("gap", "lam")


def _x_column(record):
    for name in LOG_AXES:
        if name in record.columns:
            return name, True
    return "k", False


def emit_plot(record, which: str) -> str:
    """SVG text plotting column ``which`` against ``k`` (runs) or the
    boundary distance on a log axis (probes); one polyline per curve."""
    if not record.rows:
        raise ValueError("cannot plot an empty record")
    y = record.column(which)
    if y.dtype.kind not in "fi":
        raise ValueError(f"column {which!r} is not numeric")
    xname, log_x = _x_column(record)
    x = record.column(xname).astype(float)
    groups = (record.column("curve").astype(int) if "curve" in record.columns
              else np.zeros(len(x), dtype=int))

    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for g in np.unique(groups):
            sel = (groups == g) & np.isfinite(y.astype(float)) & np.isfinite(x)
            if log_x:
                sel &= x > 0
            label = f"curve {g}" if "curve" in record.columns else None
            ax.plot(x[sel], y[sel].astype(float), marker=".", linewidth=1, label=label)
        if log_x:
            ax.set_xscale("log")
        ax.set_xlabel(xname)
        ax.set_ylabel(which)
        ax.set_title(f"{record.kind}: {which}")
        if "curve" in record.columns:
            ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()
