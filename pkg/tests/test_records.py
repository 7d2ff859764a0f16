import json

import numpy as np
import pytest

from boars.engine import run_boars
from boars.grid import SimulatedInstrument
from boars.records import export_run, load_events, load_summary, replay_events
from boars.recommender import Phase
from boars.voters import ThresholdVoter

from test_engine import fast_config


@pytest.fixture
def finished_run(small_grid):
    cfg = fast_config(iterations=5)
    record = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=4))
    return cfg, record


class TestExportLayout:
    def test_directory_contents(self, finished_run, tmp_path):
        cfg, record = finished_run
        export_run(record, tmp_path / "run")
        out = tmp_path / "run"
        assert (out / "run.json").is_file()
        assert (out / "events.jsonl").is_file()
        assert (out / "final_map.csv").is_file()
        snapshots = sorted((out / "maps").glob("*.csv"))
        assert len(snapshots) == len(record.map_snapshots)
        # final snapshot labeled iterations+1
        assert snapshots[-1].name == f"{cfg.iterations + 1:03d}.csv"

    def test_summary_fields(self, finished_run, tmp_path):
        cfg, record = finished_run
        export_run(record, tmp_path)
        summary = load_summary(tmp_path)
        assert summary["explored_count"] == cfg.init_samples + cfg.iterations
        assert summary["config"]["kernel"] == cfg.kernel
        assert summary["aborted"] is False
        assert summary["y_best"] == pytest.approx(float(np.max(record.y_values)))
        np.testing.assert_allclose(summary["final_target"], record.final_target)

    def test_map_csv_offsets_and_values(self, finished_run, tmp_path):
        cfg, record = finished_run
        export_run(record, tmp_path)
        lines = (tmp_path / "final_map.csv").read_text().splitlines()
        assert lines[0] == "row,col,mean,variance"
        first = lines[1].split(",")
        off = cfg.window // 2
        assert (int(first[0]), int(first[1])) == (off, off)
        # repr round-trip restores the exact float64
        assert float(first[2]) == record.final_maps.mean[0, 0]
        h, w = record.final_maps.shape
        assert len(lines) == 1 + h * w

    def test_events_round_trip(self, finished_run, tmp_path):
        _, record = finished_run
        export_run(record, tmp_path)
        events = load_events(tmp_path)
        assert events == record.events

    def test_export_byte_identical_for_identical_runs(self, small_grid, tmp_path):
        outs = []
        for name in ("a", "b"):
            cfg = fast_config(iterations=5)
            record = run_boars(cfg, SimulatedInstrument(small_grid),
                               ThresholdVoter(satisfy_after=4))
            export_run(record, tmp_path / name)
            outs.append(tmp_path / name)
        for fname in ("run.json", "events.jsonl", "final_map.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_timings_kept_out_of_summary(self, finished_run, tmp_path):
        _, record = finished_run
        record.timings = {"wall_s": 1.23}
        export_run(record, tmp_path)
        assert "wall_s" not in (tmp_path / "run.json").read_text()
        assert json.loads((tmp_path / "timings.json").read_text()) == {"wall_s": 1.23}


class TestReplay:
    def test_replay_reproduces_final_target(self, small_grid, finished_run, tmp_path):
        _, record = finished_run
        export_run(record, tmp_path)
        state = replay_events(load_events(tmp_path), small_grid)
        assert state.phase is Phase.AUTOMATED
        np.testing.assert_array_equal(state.target, record.final_target)

    def test_replay_without_freeze_stays_live(self, small_grid):
        events = [
            {"type": "vote", "row": 3, "col": 3, "vote": 2, "preference": 0.5},
            {"type": "vote", "row": 4, "col": 4, "vote": 0, "preference": 0.5},
        ]
        state = replay_events(events, small_grid)
        assert state.phase is Phase.HUMAN_AUGMENTED
        assert len(state.history) == 2

    def test_replay_ignores_non_vote_events(self, small_grid):
        events = [
            {"type": "acquisition", "seq": 1, "row": 2, "col": 2},
            {"type": "vote", "row": 2, "col": 2, "vote": 1, "preference": 0.5},
            {"type": "satisfaction", "satisfied": True},
            {"type": "freeze"},
            {"type": "recompute", "count": 1},
        ]
        state = replay_events(events, small_grid)
        assert state.phase is Phase.AUTOMATED
