"""
SVG relative-efficiency charts drawn from a table.csv.

One line per estimator (and per design when a table spans several), a
horizontal reference line at 1, and Inf cells drawn as off-scale markers
at the top of a capped y-axis. Every drawn point is labelled with its
rel_eff cell exactly as the CSV spells it, and text stays text in the SVG.
"""
import logging
import math
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("agg")
import matplotlib.pyplot as plt  # noqa: E402

from utils.errors import DomainError, MalformedTable  # noqa: E402
from visualization.report import numeric_column, read_table  # noqa: E402

logger = logging.getLogger(__name__)

X_AXES = ("delta2", "p")
CAP_HEADROOM = 1.15


def series_label(estimator: str, tuning: str) -> str:
    """EN + mix percentage, estimator(alpha) for pretests, else the id."""
    if tuning.startswith("mix="):
        return f"EN{round(100 * float(tuning[4:])):d}"
    if tuning:
        return f"{estimator}({tuning.split('=', 1)[1]})"
    return estimator


def _design_fields(design: str) -> dict:
    try:
        return dict(part.split("=", 1) for part in design.split(";") if part)
    except ValueError as exc:
        raise MalformedTable(f"bad design label {design!r}") from exc


def collect_series(frame, x: str = "delta2") -> dict:
    """
    Group table rows into {series name: (x values, rel_eff values, raw strings)}.
    Rows are kept in file order; the raw strings are the CSV cells unchanged.
    """
    if x not in X_AXES:
        raise DomainError(f"x axis must be one of {X_AXES}, got {x!r}")
    rel_eff = numeric_column(frame, "rel_eff")
    designs = [_design_fields(d) for d in frame["design"]]
    if x == "delta2":
        xs = numeric_column(frame, "delta2")
        split_keys = [tuple(sorted(d.items())) for d in designs]
    else:
        try:
            xs = np.array([float(d["p"]) for d in designs])
        except (KeyError, ValueError) as exc:
            raise MalformedTable("design column carries no p values") from exc
        split_keys = [tuple(sorted((k, v) for k, v in d.items() if k != "p"))
                      + (("delta2", s),) for d, s in zip(designs, frame["delta2"])]
    multi = len(set(split_keys)) > 1

    series = {}
    for i, (estimator, tuning) in enumerate(zip(frame["estimator"], frame["tuning"])):
        name = series_label(estimator, tuning)
        if multi:
            name += " [" + ";".join(f"{k}={v}" for k, v in split_keys[i]) + "]"
        xs_i, ys_i, raw_i = series.setdefault(name, ([], [], []))
        xs_i.append(xs[i])
        ys_i.append(rel_eff[i])
        raw_i.append(frame["rel_eff"].iloc[i])
    return series


def plot_table(table_path, out_path, x: str = "delta2", y_cap: float | None = None,
               title: str | None = None) -> Path:
    """Render table_path as an SVG line chart at out_path."""
    frame = read_table(table_path)
    series = collect_series(frame, x)

    kept = {}
    for name, (xs, ys, raw) in series.items():
        if all(math.isnan(v) for v in ys):
            logger.warning("series %s has no finite values; skipped", name)
            continue
        kept[name] = (xs, ys, raw)
    if not kept:
        raise MalformedTable(f"{table_path} has no plottable series")

    finite = [v for _, ys, _ in kept.values() for v in ys if math.isfinite(v)]
    if y_cap is None:
        y_cap = CAP_HEADROOM * max(finite + [1.0])
    elif y_cap <= 0:
        raise DomainError(f"y cap must be > 0, got {y_cap}")

    fig, ax = plt.subplots(figsize=(9.6, 6.4), dpi=100)
    for name, (xs, ys, raw) in kept.items():
        ys = np.asarray(ys, dtype=float)
        shown = np.where(np.isinf(ys) | (ys > y_cap), y_cap, ys)
        (line,) = ax.plot(xs, shown, marker="o", markersize=3, label=name)
        color = line.get_color()
        off = [i for i, v in enumerate(ys) if math.isinf(v) or v > y_cap]
        if off:
            ax.plot([xs[i] for i in off], [y_cap] * len(off), linestyle="none", marker="^",
                    markersize=8, color=color)
        # labels are the CSV cells as written, never re-formatted
        for i, v in enumerate(ys):
            if math.isnan(v):
                continue
            if i in off:
                ax.annotate(raw[i], (xs[i], y_cap), textcoords="offset points", xytext=(0, 6),
                            ha="center", fontsize=7, color=color)
            else:
                ax.annotate(raw[i], (xs[i], v), textcoords="offset points", xytext=(0, 3),
                            ha="center", fontsize=5, color=color, alpha=0.8)

    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_ylim(bottom=0.0, top=y_cap * 1.08)
    ax.set_xlabel("Δ²" if x == "delta2" else "p")
    ax.set_ylabel("relative efficiency (MSE of LSE / MSE)")
    ax.set_title(title or Path(table_path).parent.name or "relative efficiency")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.fonttype": "none"}):
        fig.savefig(out_path, format="svg")
    plt.close(fig)
    logger.info("wrote %s (%d series)", out_path, len(kept))
    return out_path
