"""Structural similarity between spectra and the two objective functions.

The human-phase objective adds a vote reward on top of the structural
similarity to the evolving target; the automated-phase objective scores
against the frozen target with no reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PhaseError
from .grid import minmax_normalize


@dataclass(frozen=True)
class SsimParams:
    """1-D structural-similarity configuration (uniform sliding windows)."""

    win: int = 7
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    def __post_init__(self):
        if self.win < 3 or self.win % 2 == 0:
            raise ValueError("win must be odd and >= 3")
        if self.k1 <= 0 or self.k2 <= 0 or self.data_range <= 0:
            raise ValueError("k1, k2, data_range must be positive")


DEFAULT_SSIM = SsimParams()


def _windows(x: np.ndarray, win: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(x, win, axis=-1)


def ssim_batch(a: np.ndarray, b: np.ndarray, params: SsimParams = DEFAULT_SSIM) -> np.ndarray:
    """Mean local SSIM between signal a (length L) and each row of b (.., L).

    Local SSIM over every length-win sliding window (stride 1, uniform
    weights), sample covariance with denominator win - 1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    if a.shape[-1] < params.win:
        raise ValueError(f"signals shorter than window {params.win}")
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2
    wa = _windows(a, params.win)  # (nw, win)
    wb = _windows(b, params.win)  # (.., nw, win)
    mu_a = wa.mean(axis=-1)
    mu_b = wb.mean(axis=-1)
    n1 = params.win - 1
    var_a = ((wa - mu_a[..., None]) ** 2).sum(axis=-1) / n1
    var_b = ((wb - mu_b[..., None]) ** 2).sum(axis=-1) / n1
    cov = ((wa - mu_a[..., None]) * (wb - mu_b[..., None])).sum(axis=-1) / n1
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return (num / den).mean(axis=-1)


def ssim(a: np.ndarray, b: np.ndarray, params: SsimParams = DEFAULT_SSIM) -> float:
    """Structural similarity index between two equal-length signals, in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("ssim expects two 1-D signals of equal length")
    return float(ssim_batch(a, b, params))


def human_objective(
    target: np.ndarray,
    s: np.ndarray,
    vote: int,
    reward: float = 0.1,
    params: SsimParams = DEFAULT_SSIM,
) -> float:
    """Vote-augmented objective: ssim(target, normalized s) + vote * reward."""
    if target is None or np.asarray(target).size == 0:
        raise PhaseError("no target exists yet")
    if vote not in (0, 1, 2):
        raise ValueError("vote must be 0, 1, or 2")
    if reward < 0:
        raise ValueError("reward must be nonnegative")
    return ssim(np.asarray(target), minmax_normalize(s), params) + vote * reward


def auto_objective(
    target: np.ndarray, s: np.ndarray, params: SsimParams = DEFAULT_SSIM
) -> float:
    """Frozen-target objective: ssim(target, normalized s), no reward term."""
    if target is None or np.asarray(target).size == 0:
        raise PhaseError("objective requested before a target was frozen")
    return ssim(np.asarray(target), minmax_normalize(s), params)
