"""Per-episode metric records and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

GOAL, DEAD, MAX_STEP = "Goal", "Dead", "MaxStep"
FINAL_WINDOW = 5
SUMMARY_METRICS = ("connected_fraction", "total_energy_j", "covered_km2")


@dataclass(frozen=True)
class EpisodeMetrics:
    run: int
    episode: int
    rewards: tuple[float, ...]
    energy_j: tuple[float, ...]
    connected: tuple[int, ...]
    n_devices: int
    covered_km2: float
    steps: int
    cause: str
    comm_bits: int = 0

    @property
    def n_agents(self) -> int:
        return len(self.connected)

    @property
    def total_connected(self) -> int:
        return sum(self.connected)

    @property
    def total_energy_j(self) -> float:
        return sum(self.energy_j)

    @property
    def connected_fraction(self) -> float:
        return self.total_connected / self.n_devices if self.n_devices else 0.0


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def csv_header(n_agents: int) -> list[str]:
    cols = ["run", "episode"]
    for k in range(n_agents):
        cols += [f"reward_{k}", f"energy_j_{k}", f"connected_{k}"]
    cols += ["total_connected", "n_devices", "connected_fraction", "total_energy_j",
             "covered_km2", "steps", "cause", "comm_bits"]
    return cols


def csv_row(m: EpisodeMetrics) -> list[str]:
    row = [fmt(m.run), fmt(m.episode)]
    for r, e, c in zip(m.rewards, m.energy_j, m.connected):
        row += [fmt(r), fmt(e), fmt(c)]
    row += [fmt(m.total_connected), fmt(m.n_devices), fmt(m.connected_fraction),
            fmt(m.total_energy_j), fmt(m.covered_km2), fmt(m.steps), m.cause, fmt(m.comm_bits)]
    return row


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_csv(metrics: Sequence[EpisodeMetrics], path: str | Path, n_agents: int | None = None) -> Path:
    """One row per episode, fixed column order, 6 significant digits."""
    path = Path(path)
    if n_agents is None:
        n_agents = metrics[0].n_agents if metrics else 0
    write_table(path, csv_header(n_agents), (csv_row(m) for m in metrics))
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: Sequence[dict[str, str]], window: int = FINAL_WINDOW) -> dict[str, dict[str, float]]:
    """mean/min/max/std over each run's last ``window`` episodes.

    Works on the serialised rows so that re-reading the episode CSV gives
    back exactly the same numbers.
    """
    by_run: dict[str, list[dict[str, str]]] = {}
    for r in rows:
        by_run.setdefault(r["run"], []).append(r)
    picked = []
    for run_rows in by_run.values():
        run_rows = sorted(run_rows, key=lambda r: int(r["episode"]))
        picked.extend(run_rows[-window:])
    out = {}
    for name in SUMMARY_METRICS:
        vals = np.array([float(r[name]) for r in picked])
        if vals.size == 0:
            out[name] = dict(mean=0.0, min=0.0, max=0.0, std=0.0)
        else:
            out[name] = dict(mean=float(vals.mean()), min=float(vals.min()),
                             max=float(vals.max()), std=float(vals.std()))
    return out


def summary_rows(summary: dict[str, dict[str, float]]) -> list[list[str]]:
    return [[name, fmt(s["mean"]), fmt(s["min"]), fmt(s["max"]), fmt(s["std"])]
            for name, s in summary.items()]


def emit_summary_csv(summary: dict[str, dict[str, float]], path: str | Path) -> Path:
    path = Path(path)
    write_table(path, ["metric", "mean", "min", "max", "std"], summary_rows(summary))
    return path


def format_summary(summary: dict[str, dict[str, float]]) -> str:
    lines = [f"{'metric':<20}{'mean':>12}{'min':>12}{'max':>12}{'std':>12}"]
    for name, mean, lo, hi, sd in summary_rows(summary):
        lines.append(f"{name:<20}{mean:>12}{lo:>12}{hi:>12}{sd:>12}")
    return "\n".join(lines)
