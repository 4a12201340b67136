"""Reader for the example interchange format (one JSON object per line)."""
from __future__ import annotations

import json
from dataclasses import dataclass

from . import BridgeError, LABEL_ORDER


@dataclass(frozen=True)
class Example:
    id: str
    tokens: tuple[str, ...]
    e1: int
    e2: int
    label: str
    masked_tokens: tuple[str, ...] | None = None

    def words(self, masked: bool) -> tuple[str, ...]:
        if masked and self.masked_tokens is not None:
            return self.masked_tokens
        return self.tokens


def read_examples(path) -> list[Example]:
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
                ex = Example(
                    id=rec["id"],
                    tokens=tuple(rec["tokens"]),
                    e1=rec["e1"],
                    e2=rec["e2"],
                    label=rec["label"],
                    masked_tokens=tuple(rec["masked_tokens"])
                    if rec.get("masked_tokens") is not None else None,
                )
            except KeyError as exc:
                raise BridgeError(f"line {lineno}: example record missing {exc}") from exc
            if not 0 <= ex.e1 < len(ex.tokens) or not 0 <= ex.e2 < len(ex.tokens):
                raise BridgeError(f"line {lineno}: event index out of range for {ex.id}")
            if ex.label not in LABEL_ORDER:
                raise BridgeError(f"line {lineno}: unknown label {ex.label!r}")
            out.append(ex)
    return out
