"""Voting-driven target state machine.

The target is created on the first upvote, blended with later upvoted
spectra under a preference weight, min-max normalized after every update,
and frozen irreversibly once the operator reports satisfaction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PhaseError
from .grid import GridIndex, Spectrum, minmax_normalize
from .similarity import SsimParams, DEFAULT_SSIM, ssim


class Phase(enum.Enum):
    COLLECTING = "collecting"
    HUMAN_AUGMENTED = "human_augmented"
    AUTOMATED = "automated"


@dataclass(frozen=True)
class VoteRecord:
    idx: GridIndex
    vote: int
    preference: float
    target: np.ndarray | None  # snapshot after this vote


@dataclass(frozen=True)
class TargetState:
    """Immutable snapshot of the evolving target.

    vote_weight is the running sum of vote values since target creation;
    it feeds the blending denominator of the update rule.
    """

    target: np.ndarray | None = None
    vote_weight: float = 0.0
    phase: Phase = Phase.COLLECTING
    history: tuple[VoteRecord, ...] = field(default_factory=tuple)


def _check_vote(vote: int, preference: float) -> None:
    if vote not in (0, 1, 2):
        raise ValueError("vote must be 0, 1, or 2")
    if not 0.0 <= preference <= 1.0:
        raise ValueError("preference must lie in [0, 1]")


def record_vote(
    state: TargetState,
    idx: GridIndex,
    s: Spectrum,
    vote: int,
    preference: float,
) -> TargetState:
    """Apply one vote. Upvotes create or blend the target; downvotes only log."""
    _check_vote(vote, preference)
    if state.phase is Phase.AUTOMATED:
        raise PhaseError("votes are not accepted after the target is frozen")
    s_norm = minmax_normalize(s.values)

    if vote == 0:
        # Blending with v=0 is the identity (and 0/0 at p=1); skip it outright.
        target, weight = state.target, state.vote_weight
    elif state.target is None:
        target, weight = s_norm, float(vote)
    else:
        w = state.vote_weight
        blended = ((1.0 - preference) * w * state.target + preference * vote * s_norm) / (
            (1.0 - preference) * w + preference * vote
        )
        target = minmax_normalize(blended)
        weight = w + vote

    phase = Phase.HUMAN_AUGMENTED if target is not None else state.phase
    snapshot = None if target is None else target.copy()
    rec = VoteRecord(idx=idx, vote=vote, preference=preference, target=snapshot)
    return TargetState(
        target=target, vote_weight=weight, phase=phase, history=state.history + (rec,)
    )


def answer_satisfaction(state: TargetState, satisfied: bool) -> TargetState:
    """Freeze the target on a yes; a no leaves the state untouched.

    The freeze is irreversible and signals that stored objectives must be
    recomputed against the frozen target (see recompute_objectives).
    """
    if state.phase is Phase.AUTOMATED:
        raise PhaseError("target already frozen; satisfaction prompt no longer applies")
    if state.target is None:
        raise PhaseError("cannot answer satisfaction before any target exists")
    if not satisfied:
        return state
    return replace(state, phase=Phase.AUTOMATED)


def recompute_objectives(
    state: TargetState,
    spectra: list[Spectrum],
    params: SsimParams = DEFAULT_SSIM,
) -> np.ndarray:
    """Re-score every stored spectrum against the frozen target (reward removed)."""
    if state.phase is not Phase.AUTOMATED:
        raise PhaseError("objectives are recomputed only after the target is frozen")
    return np.array(
        [ssim(state.target, minmax_normalize(s.values), params) for s in spectra]
    )


def current_target(state: TargetState) -> np.ndarray | None:
    """Copy of the current target, or None before the first upvote."""
    return None if state.target is None else state.target.copy()
