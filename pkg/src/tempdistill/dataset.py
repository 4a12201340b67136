"""Labeled-example schema, emission, sampling, splits, and statistics."""
from __future__ import annotations

import hashlib
import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from . import masker
from .corpus import Document
from .timex import BEFORE, AFTER, EQUAL

VAGUE = "VAGUE"
LABELS = (BEFORE, AFTER, EQUAL, VAGUE)

BEFOREAFTER, DISTANTTIMEX, GOLD = "BEFOREAFTER", "DISTANTTIMEX", "GOLD"
HEURISTICS = (BEFOREAFTER, DISTANTTIMEX, GOLD)

TIMEX_CUE, CONNECTIVE_CUE = "TIMEX", "CONNECTIVE"

EXAMPLE_FIELDS = ("id", "heuristic", "doc_id", "source", "tokens", "e1", "e2",
                  "label", "masked_tokens", "cue_spans")


class DatasetError(ValueError):
    """Raised for malformed example files or invalid requests."""


@dataclass(frozen=True)
class CueSpan:
    start: int
    end: int  # exclusive
    kind: str  # TIMEX or CONNECTIVE


@dataclass(frozen=True)
class LabeledExample:
    id: str
    heuristic: str
    doc_id: str
    source: str
    tokens: tuple[str, ...]
    e1: int
    e2: int
    label: str
    masked_tokens: tuple[str, ...] | None = None
    cue_spans: tuple[CueSpan, ...] = ()

    def __post_init__(self):
        if not self.tokens:
            raise DatasetError("example with no tokens")
        if not 0 <= self.e1 < self.e2 < len(self.tokens):
            raise DatasetError(f"bad event indices {self.e1}, {self.e2}")
        if self.label not in LABELS:
            raise DatasetError(f"bad label {self.label!r}")
        if self.heuristic not in HEURISTICS:
            raise DatasetError(f"bad heuristic {self.heuristic!r}")
        if self.heuristic != GOLD and self.label == VAGUE:
            raise DatasetError("distant heuristics never produce VAGUE")
        if self.masked_tokens is not None and len(self.masked_tokens) != len(self.tokens):
            raise DatasetError("masked_tokens length differs from tokens")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.masked_tokens is not None:
            object.__setattr__(self, "masked_tokens", tuple(self.masked_tokens))
        object.__setattr__(
            self, "cue_spans",
            tuple(s if isinstance(s, CueSpan) else CueSpan(**s) for s in self.cue_spans),
        )


@dataclass(frozen=True)
class ExtractedPair:
    """A labeled event pair still expressed in document coordinates."""
    heuristic: str
    e1_sent: int
    e1_token: int
    e2_sent: int
    e2_token: int
    label: str
    conn: tuple[int, int] | None = None  # (sent, token) of the connective


def example_id(doc_id: str, sent: int, e1: int, e2: int, heuristic: str) -> str:
    key = f"{doc_id}\t{sent}\t{e1}\t{e2}\t{heuristic}"
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def emit_examples(doc: Document, pairs, cfg: masker.MaskConfig | None = None,
                  timexes=None, counters: Counter | None = None,
                  apply_mask: bool = True) -> list[LabeledExample]:
    """Assemble extracted pairs into context-windowed labeled examples.

    The context is the sentence pair (or single sentence) holding the two
    events; indices are remapped into it, cue spans attached, and masking
    applied. Examples whose event would be masked are dropped and counted.
    """
    if cfg is None:
        cfg = masker.MaskConfig()
    if timexes is None:
        from .timex import detect_timexes
        timexes = detect_timexes(doc)
    out = []
    for pair in sorted(pairs, key=lambda p: (p.e1_sent, p.e1_token, p.e2_sent, p.e2_token)):
        if abs(pair.e1_sent - pair.e2_sent) > 1:
            raise DatasetError("events more than one sentence apart")
        first = min(pair.e1_sent, pair.e2_sent)
        last = max(pair.e1_sent, pair.e2_sent)
        sents = doc.sentences[first:last + 1]
        offsets = {}
        tokens = []
        for si, sent in enumerate(sents, start=first):
            offsets[si] = len(tokens)
            tokens.extend(t.text for t in sent.tokens)
        e1 = offsets[pair.e1_sent] + pair.e1_token
        e2 = offsets[pair.e2_sent] + pair.e2_token

        spans = []
        if pair.heuristic == BEFOREAFTER and pair.conn is not None:
            cs, ct = pair.conn
            spans.append(CueSpan(offsets[cs] + ct, offsets[cs] + ct + 1, CONNECTIVE_CUE))
        want_timexes = (pair.heuristic == DISTANTTIMEX and cfg.mask_all_timexes) or \
                       (pair.heuristic == BEFOREAFTER and cfg.mask_connective_timexes)
        if want_timexes:
            for timex in timexes:
                if first <= timex.sent <= last:
                    spans.append(CueSpan(offsets[timex.sent] + timex.start,
                                         offsets[timex.sent] + timex.end, TIMEX_CUE))
        spans.sort(key=lambda s: s.start)

        ex = LabeledExample(
            id=example_id(doc.doc_id, first, e1, e2, pair.heuristic),
            heuristic=pair.heuristic,
            doc_id=doc.doc_id,
            source=doc.source,
            tokens=tuple(tokens),
            e1=e1,
            e2=e2,
            label=pair.label,
            cue_spans=tuple(spans),
        )
        if apply_mask:
            try:
                ex = masker.mask_example(ex, cfg)
            except masker.EventMasked:
                if counters is not None:
                    counters["dropped_event_masked"] += 1
                continue
        out.append(ex)
    return out


# --- interchange -----------------------------------------------------------


def example_to_record(ex: LabeledExample) -> dict:
    return {
        "id": ex.id,
        "heuristic": ex.heuristic,
        "doc_id": ex.doc_id,
        "source": ex.source,
        "tokens": list(ex.tokens),
        "e1": ex.e1,
        "e2": ex.e2,
        "label": ex.label,
        "masked_tokens": list(ex.masked_tokens) if ex.masked_tokens is not None else None,
        "cue_spans": [{"start": s.start, "end": s.end, "kind": s.kind} for s in ex.cue_spans],
    }


def example_from_record(rec: dict) -> LabeledExample:
    missing = [f for f in EXAMPLE_FIELDS if f not in rec]
    if missing:
        raise DatasetError(f"example record missing fields {missing}")
    return LabeledExample(
        id=rec["id"],
        heuristic=rec["heuristic"],
        doc_id=rec["doc_id"],
        source=rec["source"],
        tokens=tuple(rec["tokens"]),
        e1=rec["e1"],
        e2=rec["e2"],
        label=rec["label"],
        masked_tokens=tuple(rec["masked_tokens"]) if rec["masked_tokens"] is not None else None,
        cue_spans=tuple(CueSpan(**s) for s in rec["cue_spans"]),
    )


def read_examples(path) -> list[LabeledExample]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if isinstance(rec, dict) and "_manifest" in rec:
                continue
            try:
                out.append(example_from_record(rec))
            except (DatasetError, TypeError) as exc:
                raise DatasetError(f"line {lineno}: {exc}") from exc
    return out


def write_examples(examples, path, manifest: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if manifest is not None:
            handle.write(json.dumps({"_manifest": manifest}, sort_keys=True) + "\n")
        for ex in examples:
            handle.write(json.dumps(example_to_record(ex), sort_keys=True) + "\n")


# --- sampling and splits ---------------------------------------------------


def balance_by_source(examples, per_source_cap: int, seed: int = 0) -> list[LabeledExample]:
    """Cap each news source's contribution, then shuffle deterministically."""
    if per_source_cap <= 0:
        raise DatasetError("per-source cap must be positive")
    by_source = defaultdict(list)
    for ex in examples:
        by_source[ex.source].append(ex)
    kept = []
    for source in sorted(by_source):
        group = by_source[source]
        if len(group) > per_source_cap:
            rng = random.Random(f"{seed}:{source}")
            group = rng.sample(group, per_source_cap)
        kept.extend(group)
    random.Random(seed).shuffle(kept)
    return kept


def subsample(examples, size: int, seed: int = 0) -> list[LabeledExample]:
    """Seeded uniform subsample of at most `size` examples."""
    if size >= len(examples):
        return list(examples)
    return random.Random(seed).sample(list(examples), size)


def split(examples, fractions: tuple[float, float], seed: int = 0):
    """Document-level train/test split: no doc_id crosses the boundary."""
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError("fractions must be positive and sum to 1")
    doc_ids = sorted({ex.doc_id for ex in examples})
    random.Random(seed).shuffle(doc_ids)
    n_train = round(fractions[0] * len(doc_ids))
    train_ids = set(doc_ids[:n_train])
    train = [ex for ex in examples if ex.doc_id in train_ids]
    test = [ex for ex in examples if ex.doc_id not in train_ids]
    return train, test


# --- statistics ------------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    n: int
    label_fractions: dict[str, float] = field(default_factory=dict)
    top_events: tuple[tuple[str, float], ...] = ()
    top_tuples: tuple[tuple[tuple[str, str, str], float], ...] = ()


def label_distribution(examples) -> dict[str, float]:
    if not examples:
        raise DatasetError("empty dataset has no label distribution")
    counts = Counter(ex.label for ex in examples)
    n = len(examples)
    return {label: counts.get(label, 0) / n for label in LABELS}


def top_events(examples, k: int = 10) -> list[tuple[str, float]]:
    """Most frequent event words as a fraction of all event mentions."""
    if k < 1:
        raise DatasetError("k must be >= 1")
    counts = Counter()
    for ex in examples:
        counts[ex.tokens[ex.e1].lower()] += 1
        counts[ex.tokens[ex.e2].lower()] += 1
    total = sum(counts.values())
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(word, c / total) for word, c in ranked[:k]]


def top_tuples(examples, k: int = 10) -> list[tuple[tuple[str, str, str], float]]:
    """Most frequent (event1, event2, label) tuples as a fraction of examples."""
    if k < 1:
        raise DatasetError("k must be >= 1")
    counts = Counter()
    for ex in examples:
        counts[(ex.tokens[ex.e1].lower(), ex.tokens[ex.e2].lower(), ex.label)] += 1
    n = len(examples)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(key, c / n) for key, c in ranked[:k]]


def dataset_stats(examples, k: int = 10) -> DatasetStats:
    return DatasetStats(
        n=len(examples),
        label_fractions=label_distribution(examples),
        top_events=tuple(top_events(examples, k)),
        top_tuples=tuple(top_tuples(examples, k)),
    )


def stats_to_record(stats: DatasetStats, mask: masker.MaskStats | None = None) -> dict:
    rec = {
        "n": stats.n,
        "label_fractions": stats.label_fractions,
        "top_events": [{"event": e, "fraction": f} for e, f in stats.top_events],
        "top_tuples": [
            {"e1": t[0], "e2": t[1], "label": t[2], "fraction": f}
            for t, f in stats.top_tuples
        ],
    }
    if mask is not None:
        rec["mask"] = {
            "mean_ratio": mask.mean_ratio,
            "max_ratio": mask.max_ratio,
            "histogram": [{"bucket": b, "count": c} for b, c in mask.histogram],
        }
    return rec


def render_stats(stats: DatasetStats, mask: masker.MaskStats | None = None) -> str:
    """Human-readable statistics table (fractions printed as percentages)."""
    lines = [f"examples: {stats.n}", "", "label distribution:"]
    for label in LABELS:
        lines.append(f"  {label:<7} {100 * stats.label_fractions.get(label, 0.0):5.1f}%")
    lines.append("")
    lines.append("top events (% of mentions):")
    for event, frac in stats.top_events:
        lines.append(f"  {event:<15} {100 * frac:5.2f}%")
    lines.append("")
    lines.append("top tuples (% of examples):")
    for (w1, w2, label), frac in stats.top_tuples:
        lines.append(f"  ({w1}, {w2}, {label:<6}) {100 * frac:5.2f}%")
    if mask is not None and mask.n:
        lines.append("")
        lines.append(f"mask ratio: mean {mask.mean_ratio:.3f}, max {mask.max_ratio:.3f}")
        for bucket, count in mask.histogram:
            lines.append(f"  [{bucket:.1f}, {bucket + 0.1:.1f}) {count}")
    return "\n".join(lines) + "\n"
