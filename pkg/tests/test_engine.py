import math

import numpy as np
import pytest
from scipy.stats import norm

from boars.engine import (
    AcquisitionSpec,
    BOConfig,
    RunRecord,
    VoterAbort,
    acquisition_scores,
    boars_loop,
    evaluate_run,
    ground_truth_map,
    random_baseline,
    run_boars,
    select_next,
    _snapshot_iterations,
)
from boars.errors import BoarsError
from boars.grid import GridIndex, SimulatedInstrument, minmax_normalize
from boars.recommender import Phase
from boars.similarity import ssim
from boars.voters import ReplayVoter, ThresholdVoter

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)  # standard normal density at zero


def fast_config(**kw):
    # small Adam budgets keep unit runs fast without changing semantics
    from boars.surrogate import TrainConfig

    base = dict(window=4, init_samples=4, iterations=6, kernel="rbf", seed=0,
                train=TrainConfig(steps=15), refit_steps=5)
    base.update(kw)
    return BOConfig(**base)


class TestAcquisitionScores:
    def test_ei_at_zero_improvement_unit_sigma(self):
        # mean - best - xi = 0, sigma = 1: EI = phi(0) = 0.39894...
        s = acquisition_scores(np.array([1.01]), np.array([1.0]), best=1.0,
                               spec=AcquisitionSpec(kind="ei", xi=0.01))
        assert s[0] == pytest.approx(PHI0, abs=1e-12)

    def test_ei_closed_form_general(self):
        spec = AcquisitionSpec(kind="ei", xi=0.0)
        mean, var, best = 0.3, 0.04, 0.1
        z = (mean - best) / 0.2
        expected = 0.2 * (z * norm.cdf(z) + norm.pdf(z))
        s = acquisition_scores(np.array([mean]), np.array([var]), best, spec)
        assert s[0] == pytest.approx(expected, abs=1e-12)

    def test_ei_zero_sigma_reduces_to_positive_part(self):
        spec = AcquisitionSpec(kind="ei", xi=0.0)
        s = acquisition_scores(np.array([0.5, -0.5]), np.zeros(2), 0.0, spec)
        np.testing.assert_allclose(s, [0.5, 0.0], atol=1e-15)

    def test_pi_at_zero_improvement(self):
        s = acquisition_scores(np.array([0.01]), np.array([1.0]), 0.0,
                               AcquisitionSpec(kind="pi", xi=0.01))
        assert s[0] == pytest.approx(0.5, abs=1e-12)

    def test_pi_zero_sigma_is_indicator(self):
        spec = AcquisitionSpec(kind="pi", xi=0.0)
        s = acquisition_scores(np.array([1.0, -1.0]), np.zeros(2), 0.0, spec)
        np.testing.assert_array_equal(s, [1.0, 0.0])

    def test_ucb_hand_values(self):
        spec = AcquisitionSpec(kind="ucb", kappa=2.0)
        s = acquisition_scores(np.array([1.0]), np.array([0.25]), best=99.0, spec=spec)
        assert s[0] == pytest.approx(2.0, abs=1e-12)

    def test_ucb_kappa_zero_is_mean(self):
        spec = AcquisitionSpec(kind="ucb", kappa=0.0)
        m = np.array([0.2, -0.1, 0.7])
        np.testing.assert_array_equal(acquisition_scores(m, np.ones(3), 0.0, spec), m)

    def test_validation(self):
        with pytest.raises(ValueError):
            AcquisitionSpec(kind="thompson")
        with pytest.raises(ValueError):
            AcquisitionSpec(xi=-0.1)
        with pytest.raises(ValueError):
            acquisition_scores(np.zeros(2), np.zeros(3), 0.0, AcquisitionSpec())
        with pytest.raises(ValueError):
            acquisition_scores(np.zeros(2), -np.ones(2), 0.0, AcquisitionSpec())


class TestSelectNext:
    def setup_method(self):
        self.cands = [GridIndex(0, 0), GridIndex(0, 1), GridIndex(1, 0), GridIndex(1, 1)]

    def test_plain_argmax(self):
        got = select_next(np.array([0.1, 0.9, 0.3, 0.2]), self.cands, set())
        assert got == GridIndex(0, 1)

    def test_tie_goes_to_lowest_row_major(self):
        got = select_next(np.array([0.5, 0.5, 0.5, 0.5]), self.cands, set())
        assert got == GridIndex(0, 0)

    def test_explored_masked_out(self):
        explored = {GridIndex(0, 1)}
        got = select_next(np.array([0.1, 0.9, 0.3, 0.2]), self.cands, explored)
        assert got == GridIndex(1, 0)

    def test_all_explored_raises(self):
        with pytest.raises(BoarsError):
            select_next(np.zeros(4), self.cands, set(self.cands))


class TestSnapshotCadence:
    def test_small_budget_every_iteration(self):
        assert _snapshot_iterations(100) == set(range(1, 101))

    def test_large_budget_every_fifth(self):
        at = _snapshot_iterations(200)
        assert at == set(range(5, 201, 5))

    def test_non_multiple_end_included(self):
        assert 103 in _snapshot_iterations(103)


class TestLoop:
    def test_budget_is_exact_and_distinct(self, small_grid):
        cfg = fast_config(init_samples=4, iterations=6)
        record = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=3))
        assert len(record.explored) == 10
        assert len(set(record.explored)) == 10

    def test_event_sequence_shape(self, small_grid):
        cfg = fast_config()
        record = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=5))
        kinds = [e["type"] for e in record.events]
        # initial block: acquisition/vote pairs
        assert kinds[: 2 * cfg.init_samples] == ["acquisition", "vote"] * cfg.init_samples
        assert kinds.count("acquisition") == cfg.init_samples + cfg.iterations
        assert kinds.count("freeze") == 1
        assert kinds.count("recompute") == 1
        i_freeze = kinds.index("freeze")
        assert kinds[i_freeze - 1] == "satisfaction"
        assert "vote" not in kinds[i_freeze:]

    def test_post_freeze_objectives_are_plain_similarity(self, small_grid):
        cfg = fast_config(iterations=5)
        inst = SimulatedInstrument(small_grid)
        record = run_boars(cfg, inst, ThresholdVoter(satisfy_after=4))
        target = record.final_target
        # every stored objective equals the frozen-target similarity, with
        # no reward offset left anywhere
        for (r, c), y in zip(record.explored, record.y_values):
            s_norm = minmax_normalize(small_grid.spectra[r, c, :])
            assert y == pytest.approx(ssim(target, s_norm, cfg.ssim), abs=1e-12)

    def test_target_bit_identical_after_freeze(self, small_grid):
        cfg = fast_config(iterations=5)
        record = RunRecord(config={})
        gen = boars_loop(cfg, SimulatedInstrument(small_grid), record)
        voter = ThresholdVoter(satisfy_after=2)
        frozen = None
        request = next(gen)
        try:
            while True:
                if request[0] == "vote":
                    _, idx, s_norm, target = request
                    reply = voter.vote(idx, s_norm, target)
                else:
                    reply = voter.satisfied(request[1])
                    if reply and frozen is None:
                        frozen = np.array(request[1])
                request = gen.send(reply)
        except StopIteration as stop:
            out = stop.value
        np.testing.assert_array_equal(out.final_target, frozen)

    def test_no_upvote_in_initialization_raises(self, small_grid):
        cfg = fast_config()
        downvoter = ReplayVoter(votes=[(0, 0.5)] * 10, satisfaction=[False] * 10)
        with pytest.raises(BoarsError):
            run_boars(cfg, SimulatedInstrument(small_grid), downvoter)

    def test_replay_exhaustion_raises_voter_abort(self, small_grid):
        cfg = fast_config()
        voter = ReplayVoter(votes=[(2, 0.5), (1, 0.5)], satisfaction=[])
        with pytest.raises(VoterAbort):
            run_boars(cfg, SimulatedInstrument(small_grid), voter)

    def test_determinism_same_seed(self, small_grid):
        cfg = fast_config(kernel="deep", iterations=4)
        r1 = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=3))
        cfg2 = fast_config(kernel="deep", iterations=4)
        r2 = run_boars(cfg2, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=3))
        assert r1.explored == r2.explored
        np.testing.assert_array_equal(r1.y_values, r2.y_values)
        np.testing.assert_array_equal(r1.final_target, r2.final_target)
        np.testing.assert_array_equal(r1.final_maps.mean, r2.final_maps.mean)

    def test_different_seed_diverges(self, small_grid):
        r1 = run_boars(fast_config(seed=0), SimulatedInstrument(small_grid),
                       ThresholdVoter(satisfy_after=3))
        r2 = run_boars(fast_config(seed=1), SimulatedInstrument(small_grid),
                       ThresholdVoter(satisfy_after=3))
        assert r1.explored != r2.explored

    def test_snapshot_labels(self, small_grid):
        cfg = fast_config(iterations=4)
        record = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=3))
        labels = [k for k, _, _ in record.map_snapshots]
        assert labels == [1, 2, 3, 4, 5]  # per-iteration plus the final refit

    def test_budget_exceeding_candidates_rejected(self, small_grid):
        cfg = fast_config(init_samples=50, iterations=60)  # 9x9 lattice has 81
        with pytest.raises(ValueError):
            run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter())

    def test_generator_interaction_protocol(self, small_grid):
        cfg = fast_config(init_samples=2, iterations=2)
        gen = boars_loop(cfg, SimulatedInstrument(small_grid))
        req = next(gen)
        assert req[0] == "vote"
        assert req[3] is None  # no target before the first upvote
        req = gen.send((2, 0.5))
        assert req[0] == "vote"
        assert req[3] is not None
        req = gen.send((0, 0.5))
        assert req[0] == "satisfaction"  # first BO iteration prompt
        # frozen: the remaining iteration runs without further interaction
        with pytest.raises(StopIteration) as stop:
            gen.send(True)
        assert stop.value.value.final_target is not None


class TestGroundTruthAndBaseline:
    def test_ground_truth_matches_pointwise_ssim(self, small_grid):
        rng = np.random.default_rng(0)
        target = rng.random(small_grid.spectrum_len)
        target = minmax_normalize(target)
        truth = ground_truth_map(small_grid, target, 4)
        assert truth.shape == (9, 9)
        # spot-check against scalar evaluation at a few lattice positions
        for r, c in [(0, 0), (3, 7), (8, 8)]:
            s = minmax_normalize(small_grid.spectra[r + 2, c + 2, :])
            assert truth[r, c] == pytest.approx(ssim(target, s), abs=1e-12)

    def test_ground_truth_requires_target(self, small_grid):
        with pytest.raises(BoarsError):
            ground_truth_map(small_grid, None, 4)

    def test_evaluate_run_attaches_error_map(self, small_grid):
        cfg = fast_config()
        record = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=3))
        truth = ground_truth_map(small_grid, record.final_target, cfg.window)
        maps = evaluate_run(record, truth)
        np.testing.assert_allclose(maps.error, (maps.mean - truth) ** 2, atol=1e-15)
        assert maps.mse == pytest.approx(maps.error.mean(), abs=1e-15)
        assert record.mse == maps.mse

    def test_evaluate_requires_matching_shapes(self, small_grid):
        cfg = fast_config()
        record = run_boars(cfg, SimulatedInstrument(small_grid), ThresholdVoter(satisfy_after=3))
        with pytest.raises(ValueError):
            evaluate_run(record, np.zeros((3, 3)))

    def test_baseline_budget_and_objectives(self, small_grid):
        cfg = fast_config()
        rng = np.random.default_rng(1)
        target = minmax_normalize(rng.random(small_grid.spectrum_len))
        record = random_baseline(cfg, SimulatedInstrument(small_grid), target)
        assert len(record.explored) == cfg.init_samples + cfg.iterations
        assert len(set(record.explored)) == len(record.explored)
        for (r, c), y in zip(record.explored, record.y_values):
            s_norm = minmax_normalize(small_grid.spectra[r, c, :])
            assert y == pytest.approx(ssim(target, s_norm, cfg.ssim), abs=1e-12)
        assert record.config["baseline"] is True

    def test_baseline_determinism(self, small_grid):
        rng = np.random.default_rng(2)
        target = minmax_normalize(rng.random(small_grid.spectrum_len))
        r1 = random_baseline(fast_config(), SimulatedInstrument(small_grid), target)
        r2 = random_baseline(fast_config(), SimulatedInstrument(small_grid), target)
        assert r1.explored == r2.explored
        np.testing.assert_array_equal(r1.final_maps.mean, r2.final_maps.mean)
