"""Splicing accepted candidates into greedy or transducer transcripts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .align import AlignedWord, WordAlignment
from .spotter import SpottedCandidate


@dataclass(frozen=True)
class MergeDecision:
    """One candidate's comparison against the words it would displace.

    greedy_score_sum is the threshold actually used: the overlapped words'
    score sum, or the weighted blank mass of the interval when nothing
    overlaps (+inf when that mass is unavailable, so nothing is inserted
    into unscored silence).
    """

    candidate: SpottedCandidate
    overlapped_words: tuple[AlignedWord, ...]
    greedy_score_sum: float
    accepted: bool


@dataclass(frozen=True)
class MergeResult:
    """Final transcript after candidate splicing."""

    text: str
    decisions: tuple[MergeDecision, ...]
    words: tuple[AlignedWord, ...]


def merge_ctc(
    alignment: WordAlignment,
    candidates: Sequence[SpottedCandidate],
    blank_scores: Sequence[float] | None = None,
) -> MergeResult:
    """Accept each candidate iff it outscores the greedy words it overlaps.

    Candidates (non-overlapping, e.g. find_best_hyps output) are processed
    left to right against the current word list: an accepted candidate
    removes every word its closed interval touches and takes their place.  A
    candidate overlapping no words is compared against the blank mass of its
    interval (`blank_scores`: per-frame ctc_w-weighted blank log-probs).
    """
    ordered = sorted(candidates, key=lambda c: (c.start_frame, c.end_frame))
    kept = list(alignment.words)
    inserted: list[AlignedWord] = []
    decisions: list[MergeDecision] = []
    for cand in ordered:
        over = [
            w for w in kept
            if w.start_frame <= cand.end_frame and cand.start_frame <= w.end_frame
        ]
        if over:
            threshold = sum(w.score for w in over)
        elif blank_scores is not None:
            threshold = float(sum(blank_scores[cand.start_frame:cand.end_frame + 1]))
        else:
            threshold = math.inf
        accepted = cand.score > threshold
        decisions.append(
            MergeDecision(
                candidate=cand,
                overlapped_words=tuple(over),
                greedy_score_sum=threshold,
                accepted=accepted,
            )
        )
        if accepted:
            if over:
                removed = set(map(id, over))
                kept = [w for w in kept if id(w) not in removed]
            inserted.append(
                AlignedWord(
                    word=cand.word,
                    start_frame=cand.start_frame,
                    end_frame=cand.end_frame,
                    score=cand.score,
                )
            )
    words = tuple(sorted(kept + inserted, key=lambda w: (w.start_frame, w.end_frame)))
    return MergeResult(
        text=" ".join(w.word for w in words),
        decisions=tuple(decisions),
        words=words,
    )


def merge_transducer(
    transducer_alignment: WordAlignment,
    ctc_alignment: WordAlignment,
    candidates: Sequence[SpottedCandidate],
    blank_scores: Sequence[float] | None = None,
) -> MergeResult:
    """Filter candidates against the CTC greedy alignment, then splice winners.

    Acceptance decisions are made exactly as in merge_ctc (the transducer's
    own scores never enter the comparison); every accepted candidate then
    unconditionally replaces the transducer words its interval touches.
    """
    filtered = merge_ctc(ctc_alignment, candidates, blank_scores)
    kept = list(transducer_alignment.words)
    inserted = []
    for decision in filtered.decisions:
        if not decision.accepted:
            continue
        cand = decision.candidate
        kept = [
            w for w in kept
            if w.end_frame < cand.start_frame or w.start_frame > cand.end_frame
        ]
        inserted.append(
            AlignedWord(
                word=cand.word,
                start_frame=cand.start_frame,
                end_frame=cand.end_frame,
                score=cand.score,
            )
        )
    words = tuple(sorted(kept + inserted, key=lambda w: (w.start_frame, w.end_frame)))
    return MergeResult(
        text=" ".join(w.word for w in words),
        decisions=filtered.decisions,
        words=words,
    )
