"""Event pairs labeled through time-expression anchors.

Events detected in a document are anchored to nearby timexes through
short dependency paths, the timexes are ordered by their normalized
values, and event-event order follows by transitivity. Only relations
that hold under every reading of the anchors are emitted, so the labels
are high precision and never VAGUE.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .corpus import VERB_TAGS, Document
from .timex import (AFTER, BEFORE, EQUAL, INCOMPARABLE, CALENDAR,
                    NormalizedTime, TimexSpan, compare_times, detect_timexes)

IS_INCLUDED, INCLUDES = "IS_INCLUDED", "INCLUDES"
ADJACENT_VERB_TIMEX, TIME_TIME, TRANSITIVE = "ADJACENT_VERB_TIMEX", "TIME_TIME", "TRANSITIVE"

_INVERSE = {BEFORE: AFTER, AFTER: BEFORE, EQUAL: EQUAL,
            IS_INCLUDED: INCLUDES, INCLUDES: IS_INCLUDED}

# Dependency labels allowed on an event-to-timex anchor path: temporal
# modifiers, obliques/prepositional objects, adverbial modifiers, and
# case/preposition attachment (both UD and Stanford-style names).
ANCHOR_LABELS = frozenset({
    "tmod", "obl:tmod", "nmod:tmod", "advmod:tmod",
    "obl", "nmod", "pobj",
    "advmod",
    "case", "prep",
})
MAX_ANCHOR_PATH = 2

# Auxiliary dependency labels: a verb hanging off another verb with one of
# these labels is not an event mention.
_AUX_DEP_LABELS = frozenset({"aux", "auxpass", "aux:pass", "cop"})

# Past-tense attribution verbs anchor to the document creation time when
# nothing in the sentence anchors them explicitly.
ATTRIBUTION_LEMMAS = frozenset({"say", "tell", "report"})
DCT_TID = "t0"


@dataclass(frozen=True)
class EventMention:
    eid: str
    sent: int
    token: int
    lemma: str


@dataclass(frozen=True)
class TLink:
    a: str
    b: str
    rel: str
    origin: str

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("self-link")


def canonical_link(a: str, b: str, rel: str, origin: str) -> TLink:
    """Store each edge once, oriented from the lexicographically smaller id."""
    if a <= b:
        return TLink(a, b, rel, origin)
    return TLink(b, a, _INVERSE[rel], origin)


def detect_events(doc: Document) -> list[EventMention]:
    """One mention per main verb: verb-tagged tokens that are neither
    modals nor auxiliaries of another verb."""
    events = []
    counter = 1
    for si, sent in enumerate(doc.sentences):
        for tok in sent.tokens:
            if tok.pos not in VERB_TAGS:
                continue
            if tok.dep_label in _AUX_DEP_LABELS:
                continue
            events.append(EventMention(f"e{counter}", si, tok.index, tok.lemma))
            counter += 1
    return events


def _anchor_path_length(sent, timex_head: int, verb: int) -> int | None:
    """Length of the shortest dependency path (<= MAX_ANCHOR_PATH) between
    a timex head token and a verb, using only anchor-grade arcs."""
    n = len(sent.tokens)
    adjacency: dict[int, list[int]] = {i: [] for i in range(n)}
    for tok in sent.tokens:
        if tok.dep_head is None or tok.dep_label not in ANCHOR_LABELS:
            continue
        adjacency[tok.index].append(tok.dep_head)
        adjacency[tok.dep_head].append(tok.index)
    frontier = {timex_head}
    seen = {timex_head}
    for depth in range(1, MAX_ANCHOR_PATH + 1):
        nxt = set()
        for node in frontier:
            for other in adjacency[node]:
                if other not in seen:
                    nxt.add(other)
                    seen.add(other)
        if verb in nxt:
            return depth
        frontier = nxt
    return None


def anchor_events(doc: Document, events, timexes) -> list[TLink]:
    """IS_INCLUDED links from events to same-sentence timexes.

    An event anchors to the timex reachable through the shortest
    anchor-grade dependency path (at most one anchor per event, leftmost
    timex on ties). Past-tense attribution verbs with no explicit anchor
    attach to the document creation time instead, when it is known.
    """
    links = []
    for event in events:
        sent = doc.sentences[event.sent]
        best: tuple[int, int, TimexSpan] | None = None
        for timex in timexes:
            if timex.sent != event.sent:
                continue
            head = timex.end - 1
            length = _anchor_path_length(sent, head, event.token)
            if length is None:
                continue
            key = (length, timex.start)
            if best is None or key < (best[0], best[1]):
                best = (length, timex.start, timex)
        if best is not None:
            links.append(canonical_link(event.eid, best[2].tid, IS_INCLUDED,
                                        ADJACENT_VERB_TIMEX))
            continue
        token = sent.tokens[event.token]
        if doc.dct is not None and token.pos == "VBD" and token.lemma in ATTRIBUTION_LEMMAS:
            links.append(canonical_link(event.eid, DCT_TID, IS_INCLUDED,
                                        ADJACENT_VERB_TIMEX))
    return links


def dct_value(doc: Document) -> NormalizedTime | None:
    d = doc.dct_date()
    if d is None:
        return None
    return NormalizedTime(CALENDAR, d.year, d.month, d.day)


def timex_values(doc: Document, timexes) -> dict[str, NormalizedTime]:
    """tid -> normalized value, including the creation-time pseudo-timex."""
    values = {t.tid: t.value for t in timexes}
    dct = dct_value(doc)
    if dct is not None:
        values[DCT_TID] = dct
    return values


def link_timexes(doc: Document, timexes) -> list[TLink]:
    """Order every comparable timex pair, creation time included."""
    values = timex_values(doc, timexes)
    dct = doc.dct_date()
    links = []
    for ta, tb in combinations(sorted(values), 2):
        rel = compare_times(values[ta], values[tb], dct)
        if rel != INCOMPARABLE:
            links.append(canonical_link(ta, tb, rel, TIME_TIME))
    return links


def infer_event_pairs(doc: Document, events, timexes, tlinks):
    """Event pairs whose order follows from their anchors.

    Both events must be anchored; the pair label is the order of the two
    anchor values. EQUAL is only trusted down at day granularity (a shared
    year does not make two events simultaneous). Pairs are emitted in text
    order within a window of adjacent sentences.
    """
    values = timex_values(doc, timexes)
    anchors: dict[str, str] = {}
    order: dict[tuple[str, str], str] = {}
    for link in tlinks:
        if link.rel == IS_INCLUDED:
            anchors[link.a] = link.b
        elif link.rel == INCLUDES:
            anchors[link.b] = link.a
        elif link.origin == TIME_TIME:
            order[(link.a, link.b)] = link.rel
            order[(link.b, link.a)] = _INVERSE[link.rel]

    ordered = sorted(events, key=lambda e: (e.sent, e.token))
    pairs = []
    seen = set()
    for e1, e2 in combinations(ordered, 2):
        if abs(e1.sent - e2.sent) > 1:
            continue
        t1, t2 = anchors.get(e1.eid), anchors.get(e2.eid)
        if t1 is None or t2 is None:
            continue
        if t1 == t2:
            rel = EQUAL
        else:
            rel = order.get((t1, t2))
        if rel is None:
            continue
        if rel == EQUAL and not (values[t1].day_granular and values[t2].day_granular):
            continue
        key = (e1.eid, e2.eid)
        if key in seen:
            continue
        seen.add(key)
        pairs.append((e1, e2, rel))
    return pairs


def extract_document(doc: Document, timexes: list[TimexSpan] | None = None):
    """Run the full anchoring pipeline on one document."""
    if timexes is None:
        timexes = detect_timexes(doc)
    events = detect_events(doc)
    tlinks = anchor_events(doc, events, timexes) + link_timexes(doc, timexes)
    return infer_event_pairs(doc, events, timexes, tlinks)
