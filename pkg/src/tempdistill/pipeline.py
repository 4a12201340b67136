"""End-to-end extraction: documents in, labeled examples out."""
from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor

from . import connective, distant, masker
from .corpus import Document
from .dataset import (BEFOREAFTER, DISTANTTIMEX, ExtractedPair, LabeledExample,
                      emit_examples)
from .timex import detect_timexes

THREADS_ENV = "TEMPDISTILL_THREADS"


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def connective_pairs(doc: Document, timexes, counters: Counter) -> list[ExtractedPair]:
    pairs = []
    timex_tokens = {(t.sent, i) for t in timexes for i in range(t.start, t.end)}
    for si, sent in enumerate(doc.sentences):
        if sent.tree is None:
            counters["sentences_without_tree"] += 1
            continue
        for conn in connective.find_connectives(sent):
            if (si, conn.token_index) in timex_tokens:
                counters["connective_inside_timex"] += 1
                continue
            try:
                hit = connective.extract_pair(sent, conn, sent_index=si)
            except connective.NoParentVP:
                counters["no_parent_vp"] += 1
                continue
            except connective.NoChildVP:
                counters["no_child_vp"] += 1
                continue
            e1, e2, label = connective.label_pair(hit)
            pairs.append(ExtractedPair(
                heuristic=BEFOREAFTER,
                e1_sent=si, e1_token=e1, e2_sent=si, e2_token=e2,
                label=label, conn=(si, hit.conn_token),
            ))
    return pairs


def distant_pairs(doc: Document, timexes) -> list[ExtractedPair]:
    out = []
    for e1, e2, label in distant.extract_document(doc, timexes):
        out.append(ExtractedPair(
            heuristic=DISTANTTIMEX,
            e1_sent=e1.sent, e1_token=e1.token, e2_sent=e2.sent, e2_token=e2.token,
            label=label,
        ))
    return out


def extract_document(doc: Document, heuristic: str = "both",
                     cfg: masker.MaskConfig | None = None,
                     apply_mask: bool = True,
                     counters: Counter | None = None) -> list[LabeledExample]:
    """All labeled examples for one document under the selected heuristics.

    When both heuristics yield the same event pair, the timex-anchored
    copy wins.
    """
    if counters is None:
        counters = Counter()
    timexes = detect_timexes(doc)
    pairs: dict[tuple, ExtractedPair] = {}
    if heuristic in ("beforeafter", "both"):
        for pair in connective_pairs(doc, timexes, counters):
            pairs[(pair.e1_sent, pair.e1_token, pair.e2_sent, pair.e2_token)] = pair
    if heuristic in ("distanttimex", "both"):
        for pair in distant_pairs(doc, timexes):
            key = (pair.e1_sent, pair.e1_token, pair.e2_sent, pair.e2_token)
            if key in pairs:
                counters["dedup_kept_distanttimex"] += 1
            pairs[key] = pair
    counters["pairs"] += len(pairs)
    examples = emit_examples(doc, pairs.values(), cfg=cfg, timexes=timexes,
                             counters=counters, apply_mask=apply_mask)
    counters["examples"] += len(examples)
    return examples


def extract_corpus(docs, heuristic: str = "both",
                   cfg: masker.MaskConfig | None = None,
                   apply_mask: bool = True) -> tuple[list[LabeledExample], Counter]:
    """Extract every document, in parallel when TEMPDISTILL_THREADS allows,
    merging results in document order."""
    counters = Counter()

    def run(doc):
        local = Counter()
        examples = extract_document(doc, heuristic, cfg, apply_mask, local)
        return examples, local

    threads = _thread_count()
    ordered = sorted(docs, key=lambda d: d.doc_id)
    if threads == 1:
        results = [run(doc) for doc in ordered]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, ordered))
    examples = []
    for doc_examples, local in results:
        examples.extend(doc_examples)
        counters.update(local)
    return examples, counters
