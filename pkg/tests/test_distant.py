import random

import pytest

from tempdistill.corpus import Document, Sentence, Token
from tempdistill.distant import (DCT_TID, IS_INCLUDED, TIME_TIME, EventMention,
                                 TLink, anchor_events, canonical_link,
                                 detect_events, extract_document, infer_event_pairs,
                                 link_timexes)
from tempdistill.timex import (BEFORE, CALENDAR, EQUAL, PAST_REF, UNRESOLVED,
                               NormalizedTime, TimexSpan, detect_timexes)

from interval_oracle import check_instance


def tok(i, text, pos, lemma=None, head=None, label="dep"):
    return Token(i, text, lemma or text.lower(), pos, head, label)


def doc_of(sent_rows, dct=None):
    sentences = []
    for rows in sent_rows:
        sentences.append(Sentence([tok(i, *row) for i, row in enumerate(rows)]))
    return Document("d", "s", dct, sentences)


class TestDetectEvents:
    def test_simple_verb(self):
        doc = doc_of([[("General", "NNP", None, 2, "compound"),
                       ("Electric", "NNP", None, 2, "nsubj"),
                       ("introduces", "VBZ", "introduce", None, "root"),
                       ("sets", "NNS", "set", 2, "obj")]])
        events = detect_events(doc)
        assert [e.token for e in events] == [2]
        assert events[0].lemma == "introduce"

    def test_control_verbs_both_detected(self):
        doc = doc_of([[("plans", "VBZ", "plan", None, "root"),
                       ("to", "TO", "to", 2, "mark"),
                       ("add", "VB", "add", 0, "xcomp"),
                       ("more", "JJR", "more", 2, "obj")]])
        assert [e.token for e in detect_events(doc)] == [0, 2]

    def test_auxiliaries_excluded(self):
        doc = doc_of([[("has", "VBZ", "have", 1, "aux"),
                       ("hired", "VBN", "hire", None, "root"),
                       ("did", "VBD", "do", 4, "aux"),
                       ("not", "RB", "not", 4, "advmod"),
                       ("work", "VB", "work", 1, "conj")]])
        assert [e.token for e in detect_events(doc)] == [1, 4]

    def test_no_verbs(self):
        doc = doc_of([[("quiet", "JJ", None, 1, "amod"), ("morning", "NN", None, None, "root")]])
        assert detect_events(doc) == []

    def test_eids_unique(self):
        doc = doc_of([[("ran", "VBD", "run", None, "root")],
                      [("jumped", "VBD", "jump", None, "root")]])
        eids = [e.eid for e in detect_events(doc)]
        assert len(set(eids)) == 2


class TestAnchorEvents:
    def anchor_doc(self):
        # "he finished his schooling in 1951"
        return doc_of([[("he", "PRP", None, 1, "nsubj"),
                        ("finished", "VBD", "finish", None, "root"),
                        ("his", "PRP$", None, 3, "nmod:poss"),
                        ("schooling", "NN", None, 1, "obj"),
                        ("in", "IN", None, 5, "case"),
                        ("1951", "CD", None, 1, "obl")]])

    def test_direct_anchor(self):
        doc = self.anchor_doc()
        events = detect_events(doc)
        timexes = detect_timexes(doc)
        links = anchor_events(doc, events, timexes)
        assert len(links) == 1
        assert links[0].rel == IS_INCLUDED
        assert links[0].a == events[0].eid
        assert links[0].b == timexes[0].tid

    def test_two_hop_prepositional_anchor(self):
        # Stanford-style arcs: prep(increased, since), pobj(since, 2006)
        doc = doc_of([[("increased", "VBD", "increase", None, "root"),
                       ("since", "IN", None, 0, "prep"),
                       ("2006", "CD", None, 1, "pobj")]])
        links = anchor_events(doc, detect_events(doc), detect_timexes(doc))
        assert len(links) == 1

    def test_cross_sentence_never_anchors(self):
        doc = doc_of([[("finished", "VBD", "finish", None, "root")],
                      [("in", "IN", None, 1, "case"), ("1951", "CD", None, None, "root")]])
        assert anchor_events(doc, detect_events(doc), detect_timexes(doc)) == []

    def test_disallowed_arc_blocks_anchor(self):
        doc = doc_of([[("plans", "VBZ", "plan", None, "root"),
                       ("to", "TO", None, 2, "mark"),
                       ("add", "VB", "add", 0, "xcomp"),
                       ("by", "IN", None, 4, "case"),
                       ("2013", "CD", None, 2, "obl")]])
        links = anchor_events(doc, detect_events(doc), detect_timexes(doc))
        # 2013 anchors "add" (1 hop); "plans" is 2 hops away but through xcomp
        assert len(links) == 1
        assert links[0].a == "e2"

    def test_attribution_verb_anchors_to_dct(self):
        doc = doc_of([[("the", "DT", None, 1, "det"),
                       ("official", "NN", None, 2, "nsubj"),
                       ("said", "VBD", "say", None, "root")]], dct="2013-07-15")
        links = anchor_events(doc, detect_events(doc), detect_timexes(doc))
        assert links == [TLink("e1", DCT_TID, IS_INCLUDED, "ADJACENT_VERB_TIMEX")]

    def test_attribution_needs_dct(self):
        doc = doc_of([[("said", "VBD", "say", None, "root")]])
        assert anchor_events(doc, detect_events(doc), detect_timexes(doc)) == []

    def test_explicit_anchor_beats_dct(self):
        doc = doc_of([[("said", "VBD", "say", None, "root"),
                       ("yesterday", "NN", None, 0, "obl:tmod")]], dct="2013-07-15")
        links = anchor_events(doc, detect_events(doc), detect_timexes(doc))
        assert len(links) == 1
        assert links[0].b == "t1"


class TestLinkTimexes:
    def test_years_ordered(self):
        doc = doc_of([[("1903", "CD", None, None, "root"), ("1962", "CD", None, 0, "dep")]])
        links = link_timexes(doc, detect_timexes(doc))
        assert links == [TLink("t1", "t2", BEFORE, TIME_TIME)]

    def test_identical_values_equal(self):
        doc = doc_of([[("2006", "CD", None, None, "root"), ("2006", "CD", None, 0, "dep")]])
        links = link_timexes(doc, detect_timexes(doc))
        assert links[0].rel == EQUAL

    def test_unresolved_not_linked(self):
        timexes = [
            TimexSpan("t1", 0, 0, 1, "DATE", NormalizedTime(CALENDAR, 2000)),
            TimexSpan("t2", 0, 2, 3, "DURATION", NormalizedTime(UNRESOLVED)),
        ]
        doc = doc_of([[("x", "NN", None, None, "root")]])
        assert link_timexes(doc, timexes) == []


class TestCanonicalLinks:
    def test_reverse_never_stored(self):
        link = canonical_link("t2", "t1", BEFORE, TIME_TIME)
        assert (link.a, link.b, link.rel) == ("t1", "t2", "AFTER")

    def test_self_link_rejected(self):
        with pytest.raises(ValueError):
            TLink("e1", "e1", BEFORE, TIME_TIME)


def abstract_setup(values, anchors, dct=None, sents=None):
    """values: {tid: NormalizedTime}; anchors: {eid: tid}."""
    timexes = [TimexSpan(tid, 0, 2 * i, 2 * i + 1, "DATE", values[tid])
               for i, tid in enumerate(sorted(values))]
    events = [EventMention(eid, (sents or {}).get(eid, 0), int(eid[1:]), eid)
              for eid in sorted(anchors)]
    doc = Document("d", "s", dct, [])
    tlinks = [canonical_link(eid, tid, IS_INCLUDED, "ADJACENT_VERB_TIMEX")
              for eid, tid in sorted(anchors.items()) if tid is not None]
    tlinks += link_timexes(doc, timexes)
    return doc, events, timexes, tlinks


class TestInfer:
    def test_transitive_before(self):
        doc, events, timexes, tlinks = abstract_setup(
            {"t1": NormalizedTime(CALENDAR, 1951), "t2": NormalizedTime(CALENDAR, 1961)},
            {"e1": "t1", "e2": "t2"},
        )
        pairs = infer_event_pairs(doc, events, timexes, tlinks)
        assert [(a.eid, b.eid, rel) for a, b, rel in pairs] == [("e1", "e2", BEFORE)]

    def test_same_year_no_pair(self):
        doc, events, timexes, tlinks = abstract_setup(
            {"t1": NormalizedTime(CALENDAR, 2006), "t2": NormalizedTime(CALENDAR, 2006)},
            {"e1": "t1", "e2": "t2"},
        )
        assert infer_event_pairs(doc, events, timexes, tlinks) == []

    def test_same_day_equal(self):
        doc, events, timexes, tlinks = abstract_setup(
            {"t1": NormalizedTime(CALENDAR, 2006, 5, 1),
             "t2": NormalizedTime(CALENDAR, 2006, 5, 1)},
            {"e1": "t1", "e2": "t2"},
        )
        pairs = infer_event_pairs(doc, events, timexes, tlinks)
        assert [rel for _, _, rel in pairs] == [EQUAL]

    def test_unanchored_event_no_pair(self):
        doc, events, timexes, tlinks = abstract_setup(
            {"t1": NormalizedTime(CALENDAR, 1951)}, {"e1": "t1", "e2": None},
        )
        assert infer_event_pairs(doc, events, timexes, tlinks) == []

    def test_sentence_window(self):
        doc, events, timexes, tlinks = abstract_setup(
            {"t1": NormalizedTime(CALENDAR, 1951), "t2": NormalizedTime(CALENDAR, 1961)},
            {"e1": "t1", "e2": "t2"}, sents={"e1": 0, "e2": 2},
        )
        assert infer_event_pairs(doc, events, timexes, tlinks) == []

    def test_text_order_flip(self):
        values = {"t1": NormalizedTime(CALENDAR, 1951), "t2": NormalizedTime(CALENDAR, 1961)}
        doc, events, timexes, tlinks = abstract_setup(values, {"e1": "t2", "e2": "t1"})
        pairs = infer_event_pairs(doc, events, timexes, tlinks)
        assert [(a.eid, b.eid, rel) for a, b, rel in pairs] == [("e1", "e2", "AFTER")]

    def test_never_vague_and_deterministic(self):
        doc, events, timexes, tlinks = abstract_setup(
            {"t1": NormalizedTime(CALENDAR, 1951), "t2": NormalizedTime(CALENDAR, 1961),
             "t3": NormalizedTime(PAST_REF)},
            {"e1": "t1", "e2": "t2", "e3": "t3"},
        )
        first = infer_event_pairs(doc, events, timexes, tlinks)
        second = infer_event_pairs(doc, events, timexes, tlinks)
        assert first == second
        assert all(rel in ("BEFORE", "AFTER", "EQUAL") for _, _, rel in first)


class TestFixtures:
    def test_inference_demo(self, inference_doc):
        pairs = extract_document(inference_doc)
        named = [(inference_doc.sentences[a.sent].tokens[a.token].text,
                  inference_doc.sentences[b.sent].tokens[b.token].text, rel)
                 for a, b, rel in pairs]
        assert named == [("finished", "published", BEFORE)]

    def test_corpus_inference(self, corpus_docs):
        named = []
        for doc in corpus_docs:
            for a, b, rel in extract_document(doc):
                named.append((doc.sentences[a.sent].tokens[a.token].text,
                              doc.sentences[b.sent].tokens[b.token].text, rel))
        assert named == [
            ("introduces", "designs", BEFORE),
            ("increased", "add", BEFORE),
            ("took", "said", BEFORE),
        ]


class TestOracleAgreement:
    def test_inference_matches_exhaustive_assignment(self):
        rng = random.Random(20240131)
        mismatches = []
        for _ in range(1000):
            mismatches.extend(check_instance(rng))
        assert mismatches == [], mismatches[:3]
