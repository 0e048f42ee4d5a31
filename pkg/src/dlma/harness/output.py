"""CSV tables (the contract) and SVG plots (a convenience).

Run CSV, one row per (slot, node)::

    t,node_id,reward,short_tp,cum_tp,distinct_states,prior_visits

``t`` counts slots from 1; ``short_tp`` is left empty while ``t < N``.
Sweep CSV::

    param,seed,node_id,achieved_tp,oracle_tp

Floats carry 6 fractional digits, lines end with ``\\n``.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from dlma.harness.runner import MEAN, SUM, MetricsRecord, SweepRow

RUN_HEADER = ("t", "node_id", "reward", "short_tp", "cum_tp", "distinct_states", "prior_visits")
SWEEP_HEADER = ("param", "seed", "node_id", "achieved_tp", "oracle_tp")


class OutputError(OSError):
    pass


def _f(x) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else f"{x:.6f}"


def run_rows(metrics: MetricsRecord) -> Iterable[tuple]:
    short = metrics.short_term()
    cum = metrics.cumulative()
    for t in range(metrics.slots):
        for i in range(metrics.n_nodes):
            yield (t + 1, i, int(metrics.rewards[t, i]), _f(short[t, i]), _f(cum[t, i]),
                   int(metrics.distinct_states[t]), int(metrics.prior_visits[t]))


def sweep_rows(rows: Sequence[SweepRow]) -> Iterable[tuple]:
    for r in rows:
        yield (r.param, r.seed, r.node_id, _f(r.achieved_tp), _f(r.oracle_tp))


def csv_text(data: MetricsRecord | Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(data, MetricsRecord):
        writer.writerow(RUN_HEADER)
        writer.writerows(run_rows(data))
    else:
        writer.writerow(SWEEP_HEADER)
        writer.writerows(sweep_rows(data))
    return buf.getvalue()


def emit_csv(data: MetricsRecord | Sequence[SweepRow], path: str | Path) -> None:
    """Write a run record or a sweep table as CSV."""
    text = csv_text(data)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path: str | Path) -> tuple[tuple[str, ...], list[dict[str, str]]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            header = tuple(reader.fieldnames or ())
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return header, rows


def _num(s: str) -> float:
    return float(s) if s != "" else float("nan")


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    header, rows = read_csv(path)
    if header != SWEEP_HEADER:
        raise ValueError(f"{path}: not a sweep table (header {header})")

    def ident(s):
        return int(s) if s.lstrip("-").isdigit() else s

    return [
        SweepRow(r["param"], ident(r["seed"]), ident(r["node_id"]), _num(r["achieved_tp"]),
                 None if r["oracle_tp"] == "" else float(r["oracle_tp"]))
        for r in rows
    ]


def read_run_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns of a run CSV as arrays shaped ``(T, n_nodes)`` (visit columns ``(T,)``)."""
    header, rows = read_csv(path)
    if header != RUN_HEADER:
        raise ValueError(f"{path}: not a run table (header {header})")
    if not rows:
        return {name: np.zeros((0, 0)) for name in RUN_HEADER}
    n_nodes = max(int(r["node_id"]) for r in rows) + 1
    out = {}
    for name in ("reward", "short_tp", "cum_tp"):
        out[name] = np.array([_num(r[name]) for r in rows]).reshape(-1, n_nodes)
    for name in ("t", "distinct_states", "prior_visits"):
        out[name] = np.array([int(r[name]) for r in rows[::n_nodes]])
    return out


# --------------------------------------------------------------------------
# plots
# --------------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "dlma"
    import matplotlib.pyplot as plt

    return plt


def emit_svg(
    series: Mapping[str, np.ndarray],
    path: str | Path,
    kind: str = "line",
    x: np.ndarray | Sequence | None = None,
    title: str = "",
    ylabel: str = "throughput",
) -> None:
    """Line chart (one curve per series) or grouped bar chart of ``series``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    if kind == "line":
        for label, y in series.items():
            xs = np.arange(1, len(y) + 1) if x is None else x
            ax.plot(xs, y, label=label, linewidth=1)
        ax.set_xlabel("slot")
    elif kind == "bar":
        labels = list(x) if x is not None else [str(i) for i in range(len(next(iter(series.values()))))]
        width = 0.8 / max(len(series), 1)
        pos = np.arange(len(labels))
        for j, (label, y) in enumerate(series.items()):
            ax.bar(pos + j * width, y, width, label=label)
        ax.set_xticks(pos + width * (len(series) - 1) / 2, labels)
    else:
        raise ValueError(f"unknown chart kind {kind!r}")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize="small")
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)


def plot_csv(csv_path: str | Path, svg_path: str | Path) -> None:
    """Render a run CSV (short-term throughput curves) or a sweep CSV (bars)."""
    header, _ = read_csv(csv_path)
    if header == RUN_HEADER:
        cols = read_run_csv(csv_path)
        short = cols["short_tp"]
        series = {f"node {i}": short[:, i] for i in range(short.shape[1])}
        if short.size:
            series["sum"] = short.sum(axis=1)
        emit_svg(series, svg_path, "line", x=cols["t"], title=Path(csv_path).name)
    elif header == SWEEP_HEADER:
        rows = [r for r in read_sweep_csv(csv_path) if r.seed == MEAN and r.node_id == SUM]
        params = [r.param for r in rows]
        series = {"achieved": [r.achieved_tp for r in rows]}
        if all(r.oracle_tp is not None for r in rows):
            series["oracle"] = [r.oracle_tp for r in rows]
        emit_svg(series, svg_path, "bar", x=params, title=Path(csv_path).name, ylabel="sum throughput")
    else:
        raise ValueError(f"{csv_path}: unrecognized CSV header {header}")
