"""Event pairs labeled by "before"/"after" connectives in parse trees.

The connective's nearest governing verb phrase supplies one event, the
verb phrase of the clause it introduces supplies the other, and the label
is read straight off the connective word.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .corpus import Sentence, head_verb
from .timex import AFTER, BEFORE
from .trees import TreeNode

CONNECTIVE_WORDS = frozenset({"before", "after"})
CONNECTIVE_POS = frozenset({"IN", "RB"})
# Reserved for a future extension of the heuristic; not extracted today.
RESERVED_CONNECTIVES = frozenset({"prior to", "during", "until"})


class TreeMissing(ValueError):
    """Raised when a sentence has no constituency tree."""


class NoParentVP(LookupError):
    """No verb phrase governs the connective."""


class NoChildVP(LookupError):
    """No verb phrase follows the connective."""


@dataclass(frozen=True)
class ConnectiveHit:
    sent: int
    conn_token: int
    conn_word: str
    parent_event: int
    child_event: int

    def __post_init__(self):
        if self.conn_word not in CONNECTIVE_WORDS:
            raise ValueError(f"not a connective: {self.conn_word!r}")
        if self.parent_event == self.child_event:
            raise ValueError("parent and child events coincide")


def find_connectives(sent: Sentence) -> list[TreeNode]:
    """Leaves of the sentence tree that read "before"/"after" as IN or RB."""
    tree = sent.parsed_tree()
    if tree is None:
        raise TreeMissing("sentence has no constituency tree")
    hits = []
    for leaf in tree.leaves():
        token = sent.tokens[leaf.token_index]
        if token.text.lower() in CONNECTIVE_WORDS and token.pos in CONNECTIVE_POS:
            hits.append(leaf)
    return hits


def _parent_vp(conn: TreeNode) -> TreeNode:
    """Closest verb phrase governing the connective.

    Walking up the tree, an ancestor VP wins outright; otherwise a clause
    node's own VP child stands in (this covers fronted "Before ..." clauses
    where the main verb is a sibling, not an ancestor).
    """
    came_from: TreeNode = conn
    for ancestor in conn.ancestors():
        if ancestor.label == "VP":
            return ancestor
        following = []
        preceding = []
        bucket = preceding
        for child in ancestor.children:
            if child is came_from:
                bucket = following
                continue
            if child.label == "VP":
                bucket.append(child)
        if following:
            return following[0]
        if preceding:
            return preceding[-1]
        came_from = ancestor
    raise NoParentVP("no verb phrase above the connective")


def _child_vp(conn: TreeNode) -> TreeNode:
    """Closest verb phrase inside the phrase the connective introduces,
    searching left-to-right breadth-first."""
    site = conn.parent
    if site is None:
        raise NoChildVP("connective has no attachment site")
    queue = deque(child for child in site.children if child is not conn)
    while queue:
        node = queue.popleft()
        if node.label == "VP":
            return node
        queue.extend(node.children)
    raise NoChildVP("no verb phrase under the connective's attachment site")


def extract_pair(sent: Sentence, conn: TreeNode, sent_index: int = 0) -> ConnectiveHit:
    """Resolve the governed event pair for one connective occurrence."""
    parent = head_verb(sent, _parent_vp(conn))
    child = head_verb(sent, _child_vp(conn))
    if parent == child:
        raise NoChildVP("child verb phrase resolves to the governing verb")
    return ConnectiveHit(
        sent=sent_index,
        conn_token=conn.token_index,
        conn_word=sent.tokens[conn.token_index].text.lower(),
        parent_event=parent,
        child_event=child,
    )


def label_pair(hit: ConnectiveHit) -> tuple[int, int, str]:
    """(e1, e2, label) with events in text order.

    The semantic relation is parent-REL-child with REL read off the
    connective; flipping into text order flips the label.
    """
    rel = BEFORE if hit.conn_word == "before" else AFTER
    if hit.parent_event < hit.child_event:
        return hit.parent_event, hit.child_event, rel
    inverse = AFTER if rel == BEFORE else BEFORE
    return hit.child_event, hit.parent_event, inverse
