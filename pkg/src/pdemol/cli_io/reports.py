"""Report files: append-only timestamped CSVs and SVG plots."""

from __future__ import annotations

import csv
import time
from pathlib import Path

REPORT_VERSION = 1


def timestamped(out_dir: str | Path, stem: str, suffix: str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ts = time.strftime("%Y%m%d-%H%M%S")
    base = out_dir / f"{stem}-{ts}{suffix}"
    k = 1
    path = base
    while path.exists():  # reruns create new files, never overwrite
        path = out_dir / f"{stem}-{ts}-{k}{suffix}"
        k += 1
    return path


def write_csv(out_dir: str | Path, stem: str, rows: list[dict],
              header: dict | None = None) -> Path:
    path = timestamped(out_dir, stem, ".csv")
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        for hk, hv in {"schema_version": REPORT_VERSION, **(header or {})}.items():
            w.writerow([f"# {hk}", hv])
        w.writerow(keys)
        for r in rows:
            w.writerow([r.get(k, "") for k in keys])
    return path


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    header: dict = {}
    rows: list[dict] = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        keys = None
        for row in r:
            if row and str(row[0]).startswith("# "):
                header[row[0][2:]] = row[1] if len(row) > 1 else ""
            elif keys is None:
                keys = row
            else:
                rows.append(dict(zip(keys, row)))
    return header, rows


def plot_rows(out_dir: str | Path, stem: str, rows: list[dict], x_key: str,
              y_keys: list[str], title: str = "") -> Path:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    path = timestamped(out_dir, stem, ".svg")
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [float(r[x_key]) for r in rows]
    for yk in y_keys:
        ys = [float(r[yk]) for r in rows if r.get(yk) not in ("", None)]
        if len(ys) == len(xs):
            ax.plot(xs, ys, marker="o", label=yk)
    ax.set_xlabel(x_key)
    ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
