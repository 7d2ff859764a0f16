"""RunRecord persistence and event-log replay.

On disk a run is a directory: run.json (config + summary), events.jsonl
(one JSON object per event), maps/NNN.csv posterior snapshots, and
truth/error CSVs when ground truth is available. run.json is written
deterministically (sorted keys, repr floats) so identical runs produce
byte-identical files; wall-clock timings live in a separate timings.json.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import recommender as rec
from .engine import RunRecord
from .grid import GridIndex, SpectralGrid, Spectrum
from .similarity import SsimParams


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _map_csv(path: Path, arr: np.ndarray, row_off: int, col_off: int,
             var: np.ndarray | None = None) -> None:
    lines = []
    h, w = arr.shape
    if var is None:
        lines.append("row,col,value")
        for r in range(h):
            for c in range(w):
                lines.append(f"{r + row_off},{c + col_off},{float(arr[r, c])!r}")
    else:
        lines.append("row,col,mean,variance")
        for r in range(h):
            for c in range(w):
                lines.append(
                    f"{r + row_off},{c + col_off},{float(arr[r, c])!r},{float(var[r, c])!r}"
                )
    path.write_text("\n".join(lines) + "\n")


def export_run(record: RunRecord, path) -> None:
    """Write the run directory layout."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    window = record.config.get("window", 4)
    off = window // 2

    summary = {
        "config": record.config,
        "explored_count": len(record.explored),
        "explored": record.explored,
        "final_target": None if record.final_target is None
        else [float(v) for v in record.final_target],
        "y_best": None if record.y_values is None else float(np.max(record.y_values)),
        "mse": record.mse,
        "aborted": record.aborted,
    }
    (out / "run.json").write_text(_dump(summary) + "\n")
    if record.timings:
        (out / "timings.json").write_text(json.dumps(record.timings) + "\n")

    with open(out / "events.jsonl", "w") as f:
        for ev in record.events:
            f.write(_dump(ev) + "\n")

    maps_dir = out / "maps"
    maps_dir.mkdir(exist_ok=True)
    for it, mean, var in record.map_snapshots:
        _map_csv(maps_dir / f"{it:03d}.csv", mean, off, off, var)
    if record.final_maps is not None:
        _map_csv(out / "final_map.csv", record.final_maps.mean, off, off,
                 record.final_maps.variance)
        if record.final_maps.truth is not None:
            _map_csv(out / "truth.csv", record.final_maps.truth, off, off)
        if record.final_maps.error is not None:
            _map_csv(out / "error.csv", record.final_maps.error, off, off)


def load_events(path) -> list[dict]:
    with open(Path(path) / "events.jsonl") as f:
        return [json.loads(line) for line in f if line.strip()]


def load_summary(path) -> dict:
    with open(Path(path) / "run.json") as f:
        return json.load(f)


def replay_events(
    events: list[dict], grid: SpectralGrid, params: SsimParams | None = None
) -> rec.TargetState:
    """Rebuild the target state machine from an event log.

    Spectra are re-read from the grid at the logged pixel positions, so the
    replayed final target must match the live session's bit-exactly.
    """
    state = rec.TargetState()
    for ev in events:
        t = ev["type"]
        if t == "vote":
            idx = GridIndex(ev["row"], ev["col"])
            s = Spectrum(values=grid.spectra[idx.row, idx.col, :].copy(), source=idx)
            state = rec.record_vote(state, idx, s, int(ev["vote"]), float(ev["preference"]))
        elif t == "freeze":
            state = rec.answer_satisfaction(state, True)
    return state
