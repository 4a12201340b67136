"""Word-for-word masking of explicit temporal cues.

Masking happens at the word level, before any subword tokenization: every
word inside a cue span becomes exactly one mask literal, so token counts
and event positions survive unchanged.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace


class EventMasked(ValueError):
    """An event token sits inside a cue span; the example must be dropped."""


@dataclass(frozen=True)
class MaskConfig:
    mask_literal: str = "[mask]"
    mask_all_timexes: bool = True  # mask every timex in a timex-anchored context
    mask_connective_timexes: bool = False  # also mask timexes in connective examples

    def __post_init__(self):
        if not self.mask_literal or any(c.isspace() for c in self.mask_literal):
            raise ValueError("mask literal must be non-empty, whitespace-free")


def mask_example(ex, cfg: MaskConfig = MaskConfig()):
    """Return a copy of a labeled example with cue-span words masked."""
    masked = list(ex.tokens)
    for span in ex.cue_spans:
        if span.start <= ex.e1 < span.end or span.start <= ex.e2 < span.end:
            raise EventMasked(f"event inside cue span {span.start}:{span.end} of {ex.id}")
        for i in range(span.start, span.end):
            masked[i] = cfg.mask_literal
    return replace(ex, masked_tokens=masked)


@dataclass(frozen=True)
class MaskStats:
    n: int
    mean_ratio: float
    max_ratio: float
    histogram: tuple[tuple[float, int], ...]  # (bucket lower bound, count), 0.1 buckets


def mask_ratio(ex) -> float:
    if ex.masked_tokens is None:
        return 0.0
    masked = sum(1 for orig, m in zip(ex.tokens, ex.masked_tokens) if m != orig)
    return masked / len(ex.tokens)


def mask_stats(examples) -> MaskStats:
    """Mask-token load across a dataset: per-example ratio summary."""
    ratios = [mask_ratio(ex) for ex in examples]
    if not ratios:
        return MaskStats(0, 0.0, 0.0, ())
    buckets = Counter(min(int(r * 10), 9) for r in ratios)
    histogram = tuple((b / 10, buckets[b]) for b in sorted(buckets))
    return MaskStats(
        n=len(ratios),
        mean_ratio=sum(ratios) / len(ratios),
        max_ratio=max(ratios),
        histogram=histogram,
    )
