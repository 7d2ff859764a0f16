"""Acquisition functions and the full human-in-the-loop BO orchestration.

The loop: random initial sampling with operator votes, surrogate refit and
posterior prediction over the unexplored candidate lattice, acquisition
maximization, spectrum acquisition, operator interaction (satisfaction
prompt, then vote or freeze + objective recomputation), data augmentation.
Interaction requests are yielded to the caller, so the same loop drives
scripted voters, the CLI, and the interactive HTTP session alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import norm

from . import recommender as rec
from .errors import BoarsError
from .grid import (
    GridIndex,
    SimulatedInstrument,
    SpectralGrid,
    Spectrum,
    candidate_indices,
    candidate_lattice_shape,
    extract_patch,
    minmax_normalize,
)
from .similarity import SsimParams, DEFAULT_SSIM, human_objective, ssim_batch
from .surrogate import TrainConfig, fit_gp, posterior


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "ei"  # ei | pi | ucb
    xi: float = 0.01
    kappa: float = 2.0

    def __post_init__(self):
        if self.kind not in ("ei", "pi", "ucb"):
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.xi < 0 or self.kappa < 0:
            raise ValueError("xi and kappa must be nonnegative")


@dataclass(frozen=True)
class BOConfig:
    window: int = 4
    init_samples: int = 10
    iterations: int = 200
    kernel: str = "rbf"  # rbf | periodic | deep
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    reward: float = 0.1
    ssim: SsimParams = field(default_factory=SsimParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    refit_steps: int | None = None  # Adam steps per warm-started refit; None = train.steps
    seed: int = 0

    def __post_init__(self):
        if self.init_samples < 2:
            raise ValueError("need at least 2 initial samples")
        if self.iterations < 1:
            raise ValueError("need at least 1 BO iteration")
        if self.kernel not in ("rbf", "periodic", "deep"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.reward < 0:
            raise ValueError("reward must be nonnegative")

    def validate_against(self, grid: SpectralGrid) -> None:
        n_cand = np.prod(candidate_lattice_shape(grid, self.window))
        if self.init_samples + self.iterations > n_cand:
            raise ValueError(
                f"budget {self.init_samples}+{self.iterations} exceeds "
                f"{n_cand} candidates"
            )


@dataclass
class MapSet:
    """Maps over the candidate lattice (interior band of the image)."""

    shape: tuple[int, int]
    mean: np.ndarray
    variance: np.ndarray
    truth: np.ndarray | None = None
    error: np.ndarray | None = None
    mse: float | None = None


@dataclass
class RunRecord:
    """Persisted trajectory of one run: events, snapshots, final maps."""

    config: dict
    events: list[dict] = field(default_factory=list)
    target_snapshots: list[dict] = field(default_factory=list)
    map_snapshots: list[tuple[int, np.ndarray, np.ndarray]] = field(default_factory=list)
    final_maps: MapSet | None = None
    explored: list[tuple[int, int]] = field(default_factory=list)
    final_target: np.ndarray | None = None
    y_values: np.ndarray | None = None
    mse: float | None = None
    aborted: bool = False
    timings: dict = field(default_factory=dict)


class VoterAbort(BoarsError):
    """Raised by a voter that cannot answer a prompt."""


def acquisition_scores(
    means: np.ndarray, variances: np.ndarray, best: float, spec: AcquisitionSpec
) -> np.ndarray:
    """Score candidates from posterior mean/variance (maximization convention)."""
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    if means.shape != variances.shape:
        raise ValueError("means and variances must have equal length")
    if np.any(variances < 0):
        raise ValueError("negative variance input")
    sigma = np.sqrt(variances)
    if spec.kind == "ucb":
        return means + spec.kappa * sigma
    imp = means - best - spec.xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
    if spec.kind == "ei":
        ei = sigma * (z * norm.cdf(z) + norm.pdf(z))
        return np.where(sigma > 0, ei, np.maximum(0.0, imp))
    # pi
    return np.where(sigma > 0, norm.cdf(z), (imp > 0).astype(np.float64))


def select_next(
    scores: np.ndarray, candidates: list[GridIndex], explored: set[GridIndex]
) -> GridIndex:
    """Argmax over unexplored candidates; ties go to the lowest row-major index.

    Candidates are assumed in row-major order, so the first maximum wins.
    """
    best_i, best_s = -1, -np.inf
    for i, c in enumerate(candidates):
        if c in explored:
            continue
        if scores[i] > best_s:
            best_i, best_s = i, scores[i]
    if best_i < 0:
        raise BoarsError("all candidates explored")
    return candidates[best_i]


def _snapshot_iterations(m: int) -> set[int]:
    """Map snapshot cadence: every iteration for M <= 100, every 5th otherwise."""
    if m <= 100:
        return set(range(1, m + 1))
    return set(range(5, m + 1, 5)) | {m}


def boars_loop(config: BOConfig, instrument: SimulatedInstrument,
               record: RunRecord | None = None):
    """Generator running the full workflow.

    Yields ("vote", GridIndex, normalized spectrum values, target-or-None)
    expecting (vote, preference) in response, and ("satisfaction", target)
    expecting a bool. Returns the RunRecord (the caller may pass one in to
    observe progress while the loop is parked on an interaction).
    """
    grid = instrument.grid
    config.validate_against(grid)
    rng = np.random.default_rng(config.seed)
    candidates = candidate_indices(grid, config.window)
    lat_shape = candidate_lattice_shape(grid, config.window)
    cand_x = np.stack([extract_patch(grid, c, config.window).values for c in candidates])

    if record is None:
        record = RunRecord(config=_config_dict(config))
    state = rec.TargetState()
    explored: list[GridIndex] = []
    explored_set: set[GridIndex] = set()
    spectra: list[Spectrum] = []
    x_rows: list[np.ndarray] = []
    y_vals: list[float] = []

    def log(ev: dict) -> None:
        record.events.append(ev)

    def acquire(idx: GridIndex) -> Spectrum:
        s = instrument.acquire_spectrum(idx)
        explored.append(idx)
        explored_set.add(idx)
        spectra.append(s)
        x_rows.append(extract_patch(grid, idx, config.window).values)
        log({"type": "acquisition", "seq": len(explored), "row": idx.row, "col": idx.col})
        return s

    def cast_vote(idx: GridIndex, s: Spectrum):
        nonlocal state
        s_norm = minmax_normalize(s.values)
        vote, pref = yield ("vote", idx, s_norm, rec.current_target(state))
        state = rec.record_vote(state, idx, s, vote, pref)
        log({"type": "vote", "row": idx.row, "col": idx.col,
             "vote": int(vote), "preference": float(pref)})
        record.target_snapshots.append({
            "after_votes": len(state.history),
            "target": None if state.target is None else state.target.tolist(),
        })

    # --- initial random sampling, voted as a block, scored against the
    # target standing after all initial votes ---
    init_pick = rng.choice(len(candidates), size=config.init_samples, replace=False)
    for i in init_pick:
        idx = candidates[int(i)]
        s = acquire(idx)
        yield from cast_vote(idx, s)
    if state.target is None:
        raise BoarsError("no upvote during initialization; cannot form a target")
    votes_by_pos = {(r.idx.row, r.idx.col): r.vote for r in state.history}
    for s in spectra:
        v = votes_by_pos[(s.source.row, s.source.col)]
        y_vals.append(human_objective(state.target, s.values, v, config.reward, config.ssim))

    snapshot_at = _snapshot_iterations(config.iterations)
    kernel_module = None
    refit_steps = config.refit_steps or config.train.steps

    for k in range(1, config.iterations + 1):
        steps = config.train.steps if kernel_module is None else refit_steps
        train = TrainConfig(steps=steps, learning_rate=config.train.learning_rate,
                            jitter=config.train.jitter, seed=config.train.seed)
        try:
            model = fit_gp(np.stack(x_rows), np.asarray(y_vals), config.kernel,
                           train, warm_start=kernel_module)
        except BoarsError as e:
            raise BoarsError(f"surrogate failure at iteration {k}: {e}") from e
        kernel_module = model.kernel

        means, variances = posterior(model, cand_x)
        if k in snapshot_at:
            record.map_snapshots.append(
                (k, means.reshape(lat_shape).copy(), variances.reshape(lat_shape).copy())
            )
        best = float(np.max(y_vals))
        scores = acquisition_scores(means, variances, best, config.acquisition)
        nxt = select_next(scores, candidates, explored_set)
        s = acquire(nxt)

        if state.phase is not rec.Phase.AUTOMATED:
            satisfied = yield ("satisfaction", rec.current_target(state))
            log({"type": "satisfaction", "satisfied": bool(satisfied)})
            if satisfied:
                state = rec.answer_satisfaction(state, True)
                log({"type": "freeze"})
                new_y = rec.recompute_objectives(state, spectra[:-1], config.ssim)
                y_vals = list(new_y)
                log({"type": "recompute", "count": len(y_vals)})

        if state.phase is rec.Phase.AUTOMATED:
            y_new = float(
                ssim_batch(state.target, minmax_normalize(s.values)[None, :], config.ssim)[0]
            )
        else:
            yield from cast_vote(nxt, s)
            y_new = human_objective(state.target, s.values,
                                    state.history[-1].vote, config.reward, config.ssim)
        y_vals.append(y_new)

    # final posterior with all data included
    model = fit_gp(np.stack(x_rows), np.asarray(y_vals), config.kernel,
                   TrainConfig(steps=refit_steps, learning_rate=config.train.learning_rate,
                               jitter=config.train.jitter, seed=config.train.seed),
                   warm_start=kernel_module)
    means, variances = posterior(model, cand_x)
    mean_map, var_map = means.reshape(lat_shape), variances.reshape(lat_shape)
    record.map_snapshots.append((config.iterations + 1, mean_map.copy(), var_map.copy()))
    record.final_maps = MapSet(shape=lat_shape, mean=mean_map, variance=var_map)
    record.explored = [(i.row, i.col) for i in explored]
    record.final_target = rec.current_target(state)
    record.y_values = np.asarray(y_vals)
    return record


def run_boars(config: BOConfig, instrument: SimulatedInstrument, voter) -> RunRecord:
    """Drive the loop with a voter object (see boars.voters)."""
    gen = boars_loop(config, instrument)
    try:
        request = next(gen)
        while True:
            if request[0] == "vote":
                _, idx, s_norm, target = request
                reply = voter.vote(idx, s_norm, target)
            else:
                reply = voter.satisfied(request[1])
            request = gen.send(reply)
    except StopIteration as stop:
        return stop.value


def ground_truth_map(
    grid: SpectralGrid, target: np.ndarray, w: int, params: SsimParams = DEFAULT_SSIM
) -> np.ndarray:
    """Exhaustive frozen-target similarity over the candidate lattice."""
    if target is None:
        raise BoarsError("ground truth requires a frozen target")
    candidates = candidate_indices(grid, w)
    shape = candidate_lattice_shape(grid, w)
    spectra = np.stack([grid.spectra[c.row, c.col, :] for c in candidates])
    lo = spectra.min(axis=1, keepdims=True)
    hi = spectra.max(axis=1, keepdims=True)
    flat = hi[:, 0] == lo[:, 0]
    if np.any(flat):
        bad = candidates[int(np.argmax(flat))]
        raise BoarsError(f"degenerate spectrum at pixel ({bad.row},{bad.col})")
    normed = (spectra - lo) / (hi - lo)
    return ssim_batch(np.asarray(target), normed, params).reshape(shape)


def evaluate_run(record: RunRecord, truth: np.ndarray) -> MapSet:
    """Attach the squared-error map and its mean to the run's final maps."""
    if record.final_maps is None:
        raise BoarsError("run has no final posterior maps")
    maps = record.final_maps
    if maps.mean.shape != truth.shape:
        raise ValueError(f"truth shape {truth.shape} != map shape {maps.mean.shape}")
    maps.truth = np.asarray(truth, dtype=np.float64)
    maps.error = (maps.mean - maps.truth) ** 2
    maps.mse = float(maps.error.mean())
    record.mse = maps.mse
    return maps


def random_baseline(
    config: BOConfig, instrument: SimulatedInstrument, target: np.ndarray
) -> RunRecord:
    """Equal-budget control arm: uniform random distinct candidates scored
    against the given frozen target, surrogate fitted once at the end."""
    grid = instrument.grid
    config.validate_against(grid)
    rng = np.random.default_rng(config.seed)
    candidates = candidate_indices(grid, config.window)
    lat_shape = candidate_lattice_shape(grid, config.window)
    budget = config.init_samples + config.iterations
    picks = rng.choice(len(candidates), size=budget, replace=False)

    record = RunRecord(config={**_config_dict(config), "baseline": True})
    x_rows, y_vals = [], []
    for i in picks:
        idx = candidates[int(i)]
        s = instrument.acquire_spectrum(idx)
        x_rows.append(extract_patch(grid, idx, config.window).values)
        y_vals.append(float(
            ssim_batch(target, minmax_normalize(s.values)[None, :], config.ssim)[0]
        ))
        record.explored.append((idx.row, idx.col))
        record.events.append({"type": "acquisition", "seq": len(record.explored),
                              "row": idx.row, "col": idx.col})
    model = fit_gp(np.stack(x_rows), np.asarray(y_vals), config.kernel, config.train)
    cand_x = np.stack([extract_patch(grid, c, config.window).values for c in candidates])
    means, variances = posterior(model, cand_x)
    record.final_maps = MapSet(
        shape=lat_shape, mean=means.reshape(lat_shape), variance=variances.reshape(lat_shape)
    )
    record.final_target = np.asarray(target, dtype=np.float64)
    record.y_values = np.asarray(y_vals)
    return record


def _config_dict(config: BOConfig) -> dict:
    d = asdict(config)
    return d
