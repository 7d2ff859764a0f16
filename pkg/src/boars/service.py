"""Session-oriented HTTP API for the operator console.

Each session owns one run of the workflow, driven as a generator: with an
interactive voter the loop parks on a pending vote or satisfaction prompt
until the matching POST arrives; with a scripted voter the whole run
completes inside session creation. Requests to one session are serialized
with a lock; the HTTP layer never computes objectives itself.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .engine import (
    AcquisitionSpec,
    BOConfig,
    RunRecord,
    VoterAbort,
    boars_loop,
    evaluate_run,
    ground_truth_map,
    _config_dict,
)
from .errors import BoarsError
from .grid import SimulatedInstrument, SyntheticConfig, generate_synthetic_grid, load_dataset
from .records import export_run
from .similarity import SsimParams
from .surrogate import TrainConfig
from .voters import ReplayVoter, ThresholdVoter


class AcquisitionBody(BaseModel):
    kind: Literal["ei", "pi", "ucb"] = "ei"
    xi: float = 0.01
    kappa: float = 2.0


class SsimBody(BaseModel):
    win: int = 7
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0


class TrainBody(BaseModel):
    steps: int = 200
    learning_rate: float = 0.1
    jitter: float = 1e-6
    seed: int = 0


class ConfigBody(BaseModel):
    window: int = 4
    init_samples: int = 10
    iterations: int = 200
    kernel: Literal["rbf", "periodic", "deep"] = "rbf"
    acquisition: AcquisitionBody = Field(default_factory=AcquisitionBody)
    reward: float = 0.1
    ssim: SsimBody = Field(default_factory=SsimBody)
    train: TrainBody = Field(default_factory=TrainBody)
    refit_steps: int | None = None
    seed: int = 0

    def to_config(self) -> BOConfig:
        return BOConfig(
            window=self.window,
            init_samples=self.init_samples,
            iterations=self.iterations,
            kernel=self.kernel,
            acquisition=AcquisitionSpec(**self.acquisition.model_dump()),
            reward=self.reward,
            ssim=SsimParams(**self.ssim.model_dump()),
            train=TrainConfig(**self.train.model_dump()),
            refit_steps=self.refit_steps,
            seed=self.seed,
        )


class SyntheticBody(BaseModel):
    seed: int = 0
    height: int = 50
    width: int = 50
    spectrum_len: int = 64
    rho: float = 0.2


class VoterBody(BaseModel):
    policy: Literal["interactive", "threshold", "replay"] = "interactive"
    very_good: float = 0.9
    good: float = 0.75
    preference: float = 0.5
    satisfy_after: int = 10
    votes: list[dict] | None = None
    satisfaction: list[bool] | None = None


class CreateBody(BaseModel):
    dataset_path: str | None = None
    synthetic: SyntheticBody | None = None
    config: ConfigBody = Field(default_factory=ConfigBody)
    voter: VoterBody = Field(default_factory=VoterBody)


class VoteBody(BaseModel):
    vote: int
    preference: float


class SatisfactionBody(BaseModel):
    satisfied: bool


class ExportBody(BaseModel):
    path: str


@dataclass
class Session:
    id: str
    config: BOConfig
    instrument: SimulatedInstrument
    gen: object
    record: RunRecord
    status: str = "running"  # running | awaiting_human | finished | aborted
    pending: tuple | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _build_voter(body: VoterBody):
    if body.policy == "interactive":
        return None
    if body.policy == "threshold":
        return ThresholdVoter(
            very_good=body.very_good, good=body.good,
            preference=body.preference, satisfy_after=body.satisfy_after,
        )
    if not body.votes:
        raise HTTPException(400, "replay voter requires a votes list")
    votes = [(int(v["vote"]), float(v.get("preference", 0.5))) for v in body.votes]
    sat = [bool(x) for x in (body.satisfaction or [True])]
    return ReplayVoter(votes=votes, satisfaction=sat)


def create_app() -> FastAPI:
    app = FastAPI(title="boars")
    sessions: dict[str, Session] = {}

    def get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, f"unknown session {sid}")
        return s

    def finish(sess: Session, record: RunRecord) -> None:
        sess.record = record
        sess.pending = None
        if record.final_target is not None and record.final_maps is not None:
            truth = ground_truth_map(
                sess.instrument.grid, record.final_target,
                sess.config.window, sess.config.ssim,
            )
            evaluate_run(record, truth)
        sess.status = "finished"

    def advance(sess: Session, voter, reply=...) -> None:
        """Advance the generator; scripted voters answer prompts inline."""
        try:
            request = next(sess.gen) if reply is ... else sess.gen.send(reply)
            while voter is not None:
                if request[0] == "vote":
                    request = sess.gen.send(voter.vote(request[1], request[2], request[3]))
                else:
                    request = sess.gen.send(voter.satisfied(request[1]))
            sess.pending = request
            sess.status = "awaiting_human"
        except StopIteration as stop:
            finish(sess, stop.value)
        except (VoterAbort, BoarsError) as e:
            sess.record.aborted = True
            sess.status = "aborted"
            sess.pending = None
            sess.record.timings["abort_reason"] = str(e)

    def snapshot(sess: Session) -> dict:
        record = sess.record
        explored = sum(1 for e in record.events if e["type"] == "acquisition")
        iteration = max(0, explored - sess.config.init_samples)
        target = None
        for snap in reversed(record.target_snapshots):
            if snap["target"] is not None:
                target = snap["target"]
                break
        if record.final_target is not None:
            target = [float(v) for v in record.final_target]
        pending = None
        if sess.pending is not None:
            if sess.pending[0] == "vote":
                idx = sess.pending[1]
                pending = {"kind": "vote", "row": idx.row, "col": idx.col}
            else:
                pending = {"kind": "satisfaction"}
        return {
            "id": sess.id,
            "status": sess.status,
            "iteration": iteration,
            "explored_count": explored,
            "pending": pending,
            "target": target,
            "has_maps": bool(record.map_snapshots) or record.final_maps is not None,
            "mse": record.mse,
        }

    @app.post("/api/v1/sessions")
    def create_session(body: CreateBody):
        if (body.dataset_path is None) == (body.synthetic is None):
            raise HTTPException(400, "provide exactly one of dataset_path or synthetic")
        try:
            if body.dataset_path is not None:
                grid = load_dataset(body.dataset_path)
            else:
                syn = body.synthetic
                grid = generate_synthetic_grid(
                    SyntheticConfig(height=syn.height, width=syn.width,
                                    spectrum_len=syn.spectrum_len, rho=syn.rho),
                    seed=syn.seed,
                )
            config = body.config.to_config()
            config.validate_against(grid)
        except (BoarsError, ValueError) as e:
            raise HTTPException(400, str(e))
        voter = _build_voter(body.voter)
        instrument = SimulatedInstrument(grid)
        record = RunRecord(config=_config_dict(config))
        sess = Session(
            id=uuid.uuid4().hex,
            config=config,
            instrument=instrument,
            gen=boars_loop(config, instrument, record),
            record=record,
        )
        sessions[sess.id] = sess
        with sess.lock:
            advance(sess, voter)
        return snapshot(sess)

    @app.get("/api/v1/sessions/{sid}")
    def get_state(sid: str):
        return snapshot(get_session(sid))

    @app.get("/api/v1/sessions/{sid}/spectrum")
    def get_spectrum(sid: str):
        sess = get_session(sid)
        if sess.pending is None or sess.pending[0] != "vote":
            raise HTTPException(409, "no pending spectrum to vote on")
        _, idx, s_norm, target = sess.pending
        return {
            "row": idx.row,
            "col": idx.col,
            "values": [float(v) for v in s_norm],
            "bias": [float(v) for v in sess.instrument.grid.bias],
            "target": None if target is None else [float(v) for v in target],
        }

    @app.get("/api/v1/sessions/{sid}/target")
    def get_target(sid: str):
        snap = snapshot(get_session(sid))
        return {"target": snap["target"]}

    @app.get("/api/v1/sessions/{sid}/maps")
    def get_maps(sid: str, kind: str = "mean"):
        sess = get_session(sid)
        record = sess.record
        off = sess.config.window // 2
        arr = None
        if kind in ("mean", "variance"):
            if record.final_maps is not None:
                arr = record.final_maps.mean if kind == "mean" else record.final_maps.variance
            elif record.map_snapshots:
                _, mean, var = record.map_snapshots[-1]
                arr = mean if kind == "mean" else var
        elif kind in ("truth", "error") and record.final_maps is not None:
            arr = record.final_maps.truth if kind == "truth" else record.final_maps.error
        elif kind not in ("mean", "variance", "truth", "error"):
            raise HTTPException(400, f"unknown map kind {kind!r}")
        if arr is None:
            raise HTTPException(404, f"map {kind!r} not available yet")
        explored = [
            {"row": e["row"], "col": e["col"]}
            for e in record.events if e["type"] == "acquisition"
        ]
        return {
            "kind": kind,
            "rows": arr.shape[0],
            "cols": arr.shape[1],
            "row_offset": off,
            "col_offset": off,
            "values": [float(v) for v in np.asarray(arr).ravel()],
            "explored": explored,
        }

    @app.post("/api/v1/sessions/{sid}/vote")
    def submit_vote(sid: str, body: VoteBody):
        sess = get_session(sid)
        if body.vote not in (0, 1, 2) or not 0.0 <= body.preference <= 1.0:
            raise HTTPException(422, "vote must be 0/1/2 and preference in [0,1]")
        with sess.lock:
            if sess.pending is None or sess.pending[0] != "vote":
                raise HTTPException(409, "no pending vote")
            advance(sess, None, reply=(body.vote, body.preference))
        return snapshot(sess)

    @app.post("/api/v1/sessions/{sid}/satisfaction")
    def submit_satisfaction(sid: str, body: SatisfactionBody):
        sess = get_session(sid)
        with sess.lock:
            if sess.pending is None or sess.pending[0] != "satisfaction":
                raise HTTPException(409, "no pending satisfaction prompt")
            advance(sess, None, reply=body.satisfied)
        return snapshot(sess)

    @app.post("/api/v1/sessions/{sid}/abort")
    def abort(sid: str):
        sess = get_session(sid)
        with sess.lock:
            if sess.status == "finished":
                raise HTTPException(409, "session already finished")
            if sess.status != "aborted":
                sess.gen.close()
                sess.record.aborted = True
                sess.status = "aborted"
                sess.pending = None
        return snapshot(sess)

    @app.post("/api/v1/sessions/{sid}/export")
    def export(sid: str, body: ExportBody):
        sess = get_session(sid)
        if sess.status not in ("finished", "aborted"):
            raise HTTPException(409, "session still running")
        try:
            export_run(sess.record, body.path)
        except OSError as e:
            raise HTTPException(400, f"cannot write to {body.path}: {e}")
        return {"exported": body.path}

    return app


app = create_app()
