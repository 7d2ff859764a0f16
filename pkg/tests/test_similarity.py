import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boars.errors import DegenerateSpectrumError, PhaseError
from boars.similarity import SsimParams, auto_objective, human_objective, ssim


def ssim_oracle(a, b, params: SsimParams) -> float:
    """Brute-force sliding-window evaluation, written before the main build."""
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2
    win = params.win
    vals = []
    for i in range(len(a) - win + 1):
        wa, wb = a[i : i + win], b[i : i + win]
        ma = sum(wa) / win
        mb = sum(wb) / win
        va = sum((x - ma) ** 2 for x in wa) / (win - 1)
        vb = sum((x - mb) ** 2 for x in wb) / (win - 1)
        cab = sum((x - ma) * (y - mb) for x, y in zip(wa, wb)) / (win - 1)
        vals.append(((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return sum(vals) / len(vals)


P = SsimParams()


class TestSsim:
    def test_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.random(20)
            assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random(16), rng.random(16)
        assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12

    def test_anticorrelated_ramp_regression(self):
        a = np.linspace(0, 1, 16)
        b = 1 - a
        # frozen from the oracle above before wiring the implementation
        expected = -0.7329576109766782
        assert ssim(a, b) == pytest.approx(expected, abs=1e-12)
        assert ssim_oracle(list(a), list(b), P) == pytest.approx(expected, abs=1e-12)

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            a, b = rng.random(64), rng.random(64)
            assert ssim(a, b) == pytest.approx(ssim_oracle(list(a), list(b), P), abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ssim(np.zeros(8), np.zeros(9))

    def test_too_short(self):
        with pytest.raises(ValueError):
            ssim(np.zeros(5), np.zeros(5), SsimParams(win=7))

    def test_bad_params(self):
        with pytest.raises(ValueError):
            SsimParams(win=6)
        with pytest.raises(ValueError):
            SsimParams(k1=0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_range_property(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(24)
        b = rng.standard_normal(24)
        v = ssim(a, b)
        assert -1.0 <= v <= 1.0


class TestObjectives:
    def test_target_self_vote0(self):
        t = np.linspace(0, 1, 16)
        assert human_objective(t, t, vote=0) == pytest.approx(1.0, abs=1e-12)

    def test_target_self_vote2(self):
        t = np.linspace(0, 1, 16)
        assert human_objective(t, t, vote=2, reward=0.1) == pytest.approx(1.2, abs=1e-12)

    def test_derived_reward_offset(self):
        a = np.linspace(0, 1, 16)
        b = 1 - a
        psi = ssim(a, b)
        assert human_objective(a, b, vote=1, reward=0.1) == pytest.approx(psi + 0.1, abs=1e-12)

    def test_auto_equals_human_vote0(self):
        rng = np.random.default_rng(3)
        t = rng.random(16)
        t = (t - t.min()) / (t.max() - t.min())
        s = rng.random(16)
        assert auto_objective(t, s) == pytest.approx(human_objective(t, s, vote=0), abs=1e-15)

    def test_auto_anticorrelated(self):
        a = np.linspace(0, 1, 16)
        b = 1 - a
        assert auto_objective(a, b) == pytest.approx(ssim(a, b), abs=1e-12)

    def test_affine_in_reward(self):
        rng = np.random.default_rng(4)
        t = np.linspace(0, 1, 16)
        s = rng.random(16)
        for vote in (0, 1, 2):
            y0 = human_objective(t, s, vote=vote, reward=0.0)
            y1 = human_objective(t, s, vote=vote, reward=0.25)
            assert y1 - y0 == pytest.approx(vote * 0.25, abs=1e-12)

    def test_missing_target(self):
        with pytest.raises(PhaseError):
            human_objective(None, np.linspace(0, 1, 16), vote=1)
        with pytest.raises(PhaseError):
            auto_objective(None, np.linspace(0, 1, 16))

    def test_degenerate_spectrum(self):
        with pytest.raises(DegenerateSpectrumError):
            human_objective(np.linspace(0, 1, 16), np.full(16, 3.0), vote=1)
