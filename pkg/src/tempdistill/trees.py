"""Bracketed constituency trees: parsing and traversal."""
from __future__ import annotations

from collections import deque


class TreeError(ValueError):
    """Raised for malformed bracketed tree strings."""


class TreeNode:
    """A node in a constituency tree.

    Leaves carry the surface word and its 0-based token index; internal
    nodes carry a phrase label and children. Preterminals are represented
    as leaves whose label is the POS tag.
    """

    __slots__ = ("label", "word", "token_index", "children", "parent")

    def __init__(self, label, word=None, token_index=None):
        self.label = label
        self.word = word
        self.token_index = token_index
        self.children: list[TreeNode] = []
        self.parent: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def leaves(self) -> list[TreeNode]:
        if self.is_leaf:
            return [self]
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def ancestors(self):
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def descendants_bfs(self):
        """All descendants in left-to-right breadth-first order."""
        queue = deque(self.children)
        while queue:
            node = queue.popleft()
            yield node
            queue.extend(node.children)

    def __repr__(self):
        if self.is_leaf:
            return f"({self.label} {self.word})"
        return f"({self.label} ...{len(self.children)} children)"


def parse_tree(text: str) -> TreeNode:
    """Parse a bracketed tree string like ``(S (NP (DT the) (NN cat)) ...)``.

    Token indices are assigned to leaves in reading order.
    """
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise TreeError("empty tree string")
    pos = 0
    index = [0]

    def read_node() -> TreeNode:
        nonlocal pos
        if tokens[pos] != "(":
            raise TreeError(f"expected '(' at item {pos}")
        pos += 1
        if pos >= len(tokens) or tokens[pos] in "()":
            raise TreeError("missing node label")
        label = tokens[pos]
        pos += 1
        node = TreeNode(label)
        while pos < len(tokens) and tokens[pos] != ")":
            if tokens[pos] == "(":
                child = read_node()
                child.parent = node
                node.children.append(child)
            else:
                node.word = tokens[pos]
                node.token_index = index[0]
                index[0] += 1
                pos += 1
        if pos >= len(tokens):
            raise TreeError("unbalanced parentheses")
        pos += 1  # consume ')'
        if node.word is not None and node.children:
            raise TreeError(f"node {label!r} mixes a word and children")
        if node.word is None and not node.children:
            raise TreeError(f"node {label!r} has no children")
        return node

    root = read_node()
    if pos != len(tokens):
        raise TreeError("trailing content after tree")
    return root
