"""Result emission: CSV and JSON tables, SVG quick-look plots."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .transport import SweepRecord


def format_value(v) -> str:
    """Shortest round-trip text for a cell; ``None`` becomes an empty cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return np.format_float_scientific(float(v), unique=True, trim="-")
    return str(v)


def table_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def records_csv(records: Sequence[SweepRecord]) -> str:
    names = SweepRecord.field_names()
    return table_csv(names, ([getattr(r, n) for n in names] for r in records))


def read_records_csv(text: str) -> list[dict]:
    """Parse a sweep CSV back into dicts with floats restored."""
    rows = list(csv.DictReader(io.StringIO(text)))
    text_fields = {"variable", "backend", "family", "dims", "status"}
    out = []
    for row in rows:
        parsed = {}
        for k, v in row.items():
            if k in text_fields:
                parsed[k] = v
            else:
                parsed[k] = None if v == "" else float(v)
        out.append(parsed)
    return out


def records_json(records: Sequence[SweepRecord]) -> str:
    return json.dumps([r.as_dict() for r in records], indent=1) + "\n"


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _series(records, name):
    return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in records],
                    dtype=float)


def records_svg(records: Sequence[SweepRecord], path: Path, title: str = "") -> None:
    """Two panels: correlations on a log axis, then the family's ratio metrics."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "omtrans"
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    by_backend: dict[str, list] = {}
    for r in records:
        by_backend.setdefault(r.backend, []).append(r)
    for backend, recs in by_backend.items():
        x = np.array([r.value for r in recs])
        for name in ("g2_L_fwd", "g2_C_fwd", "g2_R_fwd"):
            y = _series(recs, name)
            if np.isfinite(y).any():
                ax1.semilogy(x, y, label=f"{name} [{backend}]")
        metrics = ("S", "M_S", "M_R") if recs[0].family == "capacitor" else ("R", "T_L", "T_R")
        for name in metrics:
            y = _series(recs, name)
            if np.isfinite(y).any():
                ax2.plot(x, y, label=f"{name} [{backend}]")
    ax1.set_ylabel("g2(0)")
    ax2.set_ylabel("ratio")
    ax2.set_xlabel(records[0].variable if records else "")
    for ax in (ax1, ax2):
        if ax.lines:
            ax.legend(fontsize=7)
    if title:
        ax1.set_title(title)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
