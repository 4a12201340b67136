"""Word-to-subword alignment.

Words are tokenized one at a time, so the mapping from word positions to
subword positions is exact by construction: each word owns a contiguous
subword run and we record where it starts. Mask placeholder words become
exactly one encoder mask token, keeping one-mask-per-word semantics intact
through subword tokenization.
"""
from __future__ import annotations

from . import BridgeError


def subword_encode(words, tokenizer, mask_literal: str = "[mask]",
                   example_id: str = "?"):
    """Encode a word sequence; returns (input_ids, first_subword_positions).

    input_ids include the [CLS]/[SEP] specials; positions index into them.
    Every word gets at least one subword (unknown words fall back to the
    tokenizer's UNK), so len(positions) == len(words).
    """
    ids = [tokenizer.cls_token_id]
    positions = []
    for word in words:
        positions.append(len(ids))
        if word == mask_literal:
            ids.append(tokenizer.mask_token_id)
            continue
        piece_ids = tokenizer.convert_tokens_to_ids(tokenizer.tokenize(word))
        if not piece_ids:
            if tokenizer.unk_token_id is None:
                raise BridgeError(f"alignment failed for example {example_id}: "
                                  f"word {word!r} produced no subwords")
            piece_ids = [tokenizer.unk_token_id]
        ids.extend(piece_ids)
    ids.append(tokenizer.sep_token_id)
    return ids, positions
