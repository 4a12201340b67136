"""Document model and line-delimited corpus I/O.

Documents arrive pre-annotated (tokens, lemmas, PTB POS tags, dependencies,
optional bracketed constituency trees, optional creation date); nothing here
runs a tagger or parser.
"""
from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field

from .trees import TreeError, TreeNode, parse_tree

VERB_TAGS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})
AUX_LEMMAS = frozenset({"be", "have", "do"})

TOKEN_FIELDS = ("text", "lemma", "pos", "dep_head", "dep_label")


class CorpusError(ValueError):
    """Raised when a corpus file cannot be read or fails validation."""


class NoVerbFound(LookupError):
    """Raised when a tree node dominates no verb leaf."""


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    lemma: str
    pos: str
    dep_head: int | None  # governor index, None for the root
    dep_label: str


@dataclass
class Sentence:
    tokens: list[Token]
    tree: str | None = None
    _parsed_tree: TreeNode | None = field(default=None, repr=False, compare=False)

    def parsed_tree(self) -> TreeNode | None:
        if self.tree is None:
            return None
        if self._parsed_tree is None:
            self._parsed_tree = parse_tree(self.tree)
        return self._parsed_tree

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass
class Document:
    doc_id: str
    source: str
    dct: str | None  # ISO calendar date YYYY-MM-DD
    sentences: list[Sentence]

    def dct_date(self) -> datetime.date | None:
        if self.dct is None:
            return None
        return datetime.date.fromisoformat(self.dct)


def _token_from_record(rec: dict, index: int) -> Token:
    for name in TOKEN_FIELDS:
        if name not in rec:
            raise CorpusError(f"token missing field {name!r}")
    return Token(
        index=index,
        text=rec["text"],
        lemma=rec["lemma"],
        pos=rec["pos"],
        dep_head=rec["dep_head"],
        dep_label=rec["dep_label"],
    )


def document_from_record(rec: dict) -> Document:
    for name in ("doc_id", "source", "dct", "sentences"):
        if name not in rec:
            raise CorpusError(f"missing field {name!r}")
    sentences = []
    for sent_rec in rec["sentences"]:
        tokens = [
            _token_from_record(tok, i) for i, tok in enumerate(sent_rec.get("tokens", []))
        ]
        sentences.append(Sentence(tokens=tokens, tree=sent_rec.get("tree")))
    return Document(
        doc_id=rec["doc_id"], source=rec["source"], dct=rec["dct"], sentences=sentences
    )


def document_to_record(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "source": doc.source,
        "dct": doc.dct,
        "sentences": [
            {
                "tokens": [
                    {
                        "text": t.text,
                        "lemma": t.lemma,
                        "pos": t.pos,
                        "dep_head": t.dep_head,
                        "dep_label": t.dep_label,
                    }
                    for t in sent.tokens
                ],
                "tree": sent.tree,
            }
            for sent in doc.sentences
        ],
    }


def _is_valid_date(text: str) -> bool:
    try:
        datetime.date.fromisoformat(text)
    except ValueError:
        return False
    return True


def validate_document(doc: Document) -> list[str]:
    """Return human-readable descriptions of every invariant violation."""
    problems = []
    if not doc.doc_id:
        problems.append("empty doc_id")
    if doc.dct is not None and not _is_valid_date(doc.dct):
        problems.append("invalid calendar date")
    for si, sent in enumerate(doc.sentences):
        n = len(sent.tokens)
        roots = 0
        for tok in sent.tokens:
            if tok.dep_head is None:
                roots += 1
            elif tok.dep_head == tok.index:
                problems.append(f"sentence {si}: token {tok.index} is its own head")
            elif not 0 <= tok.dep_head < n:
                problems.append(
                    f"sentence {si}: token {tok.index} head {tok.dep_head} out of range"
                )
        if n > 0 and roots == 0:
            problems.append(f"sentence {si}: no root")
        elif roots > 1:
            problems.append(f"sentence {si}: multiple roots")
        if sent.tree is not None:
            try:
                leaves = parse_tree(sent.tree).leaves()
            except TreeError as exc:
                problems.append(f"sentence {si}: bad tree ({exc})")
                continue
            if len(leaves) != n:
                problems.append(f"leaf/token mismatch, sentence {si}")
            elif [l.word for l in leaves] != [t.text for t in sent.tokens]:
                problems.append(f"leaf/token mismatch, sentence {si}")
    return problems


def read_documents(path) -> list[Document]:
    """Read a line-delimited corpus file, validating every document.

    Lines holding a ``_manifest`` object (provenance headers written by the
    CLI) are skipped.
    """
    docs = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: not valid JSON ({exc})") from exc
            if isinstance(rec, dict) and "_manifest" in rec:
                continue
            try:
                doc = document_from_record(rec)
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from exc
            problems = validate_document(doc)
            if problems:
                raise CorpusError(f"line {lineno}: {'; '.join(problems)}")
            docs.append(doc)
    return docs


def write_documents(docs, path, manifest: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if manifest is not None:
            handle.write(json.dumps({"_manifest": manifest}, sort_keys=True) + "\n")
        for doc in docs:
            handle.write(json.dumps(document_to_record(doc), sort_keys=True) + "\n")


def head_verb(sent: Sentence, node: TreeNode) -> int:
    """Token index of the main verb under a verb-phrase node.

    The leftmost verb-tagged leaf wins, except that modals and auxiliary
    be/have/do forms defer to the verb phrase they govern, so "will add"
    and "has hired" resolve to "add" and "hired".
    """
    verbish = []
    for leaf in node.leaves():
        if leaf.token_index is None:
            continue
        pos = sent.tokens[leaf.token_index].pos
        if pos in VERB_TAGS or pos == "MD":
            verbish.append(leaf)
    if not verbish:
        raise NoVerbFound(f"no verb leaf under {node.label}")
    leaf = verbish[0]
    token = sent.tokens[leaf.token_index]
    if token.pos == "MD" or token.lemma in AUX_LEMMAS:
        nested = _governed_vp(leaf)
        if nested is not None:
            return head_verb(sent, nested)
    if token.pos == "MD":
        raise NoVerbFound(f"only a modal under {node.label}")
    return leaf.token_index


def _governed_vp(leaf: TreeNode) -> TreeNode | None:
    """The VP sibling an auxiliary/modal leaf governs, if any."""
    parent = leaf.parent
    if parent is None:
        return None
    seen_leaf = False
    for child in parent.children:
        if child is leaf:
            seen_leaf = True
        elif seen_leaf and child.label == "VP":
            return child
    return None


_NO_SPACE_BEFORE = {",", ".", "!", "?", ";", ":", "''", ")", "]", "}", "%", "n't",
                    "'s", "'re", "'ve", "'ll", "'d", "'m"}
_NO_SPACE_AFTER = {"``", "(", "[", "{", "$"}


def detokenize(tokens) -> str:
    """Render a token sequence as running text with PTB-style attachment."""
    out = []
    no_space = True
    quote_open = False
    for tok in tokens:
        if tok == '"':
            if quote_open:
                out.append(tok)  # close: attach left
                no_space = False
            else:
                if not no_space:
                    out.append(" ")
                out.append(tok)  # open: attach right
                no_space = True
            quote_open = not quote_open
            continue
        if tok in _NO_SPACE_BEFORE or tok.startswith("'") and len(tok) <= 3:
            out.append(tok)
            no_space = False
            continue
        if not no_space:
            out.append(" ")
        out.append(tok)
        no_space = tok in _NO_SPACE_AFTER
    return "".join(out)


def sentence_text(sent: Sentence) -> str:
    return detokenize(sent.words)
