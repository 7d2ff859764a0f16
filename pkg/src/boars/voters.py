"""Scripted voters that stand in for the human operator.

The threshold voter mechanizes "upvote loops that look symmetric": after
min-max normalization it compares the spectrum against its bias-reversed
mirror and votes on the mismatch. The replay voter plays back an explicit
vote/satisfaction script, which also makes recorded sessions reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .engine import VoterAbort
from .grid import GridIndex


def symmetry_score(s_norm: np.ndarray) -> float:
    """1 - mean |s(V) - s(-V)| for a normalized spectrum on a symmetric bias axis."""
    s = np.asarray(s_norm, dtype=np.float64)
    return float(1.0 - np.abs(s - s[::-1]).mean())


@dataclass
class ThresholdVoter:
    """Vote 2 above very_good, 1 above good, else 0; satisfied after N votes."""

    very_good: float = 0.9
    good: float = 0.75
    preference: float = 0.5
    satisfy_after: int = 10

    def __post_init__(self):
        if not self.good <= self.very_good:
            raise ValueError("threshold cutoffs must be ordered")
        self.votes_cast = 0

    def vote(self, idx: GridIndex, s_norm: np.ndarray, target) -> tuple[int, float]:
        score = symmetry_score(s_norm)
        v = 2 if score >= self.very_good else (1 if score >= self.good else 0)
        self.votes_cast += 1
        return v, self.preference

    def satisfied(self, target) -> bool:
        return self.votes_cast >= self.satisfy_after


@dataclass
class ReplayVoter:
    """Plays back explicit votes and satisfaction answers in order."""

    votes: list[tuple[int, float]]
    satisfaction: list[bool]

    def __post_init__(self):
        self._vi = 0
        self._si = 0

    def vote(self, idx: GridIndex, s_norm: np.ndarray, target) -> tuple[int, float]:
        if self._vi >= len(self.votes):
            raise VoterAbort(f"replay script exhausted after {self._vi} votes")
        v, p = self.votes[self._vi]
        self._vi += 1
        return int(v), float(p)

    def satisfied(self, target) -> bool:
        if self._si >= len(self.satisfaction):
            raise VoterAbort(
                f"replay script exhausted after {self._si} satisfaction answers"
            )
        ans = self.satisfaction[self._si]
        self._si += 1
        return bool(ans)

    @classmethod
    def from_file(cls, path) -> "ReplayVoter":
        """Load a replay script: {"votes": [{"vote", "preference"}...],
        "satisfaction": [bool...]}. Without a satisfaction list the first
        prompt is answered yes."""
        with open(path) as f:
            d = json.load(f)
        votes = [(int(v["vote"]), float(v.get("preference", 0.5))) for v in d["votes"]]
        if "satisfaction" in d:
            sat = [bool(x) for x in d["satisfaction"]]
        else:
            sat = [True]
        return cls(votes=votes, satisfaction=sat)


class QueueVoter:
    """Interactive bridge: the loop blocks on answers pushed in by the session."""

    def __init__(self):
        self.pending = None  # ("vote", idx, s_norm, target) | ("satisfaction", target)

    def vote(self, idx, s_norm, target):
        raise NotImplementedError("QueueVoter is driven through boars_loop directly")

    def satisfied(self, target):
        raise NotImplementedError("QueueVoter is driven through boars_loop directly")
