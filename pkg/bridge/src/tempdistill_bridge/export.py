"""Export event embeddings from a pretrained encoder."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import torch

from . import BridgeError
from .align import subword_encode
from .examples import read_examples

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BridgeConfig:
    model: str  # model name or local path
    max_length: int = 128
    encode_masked: bool = True  # masked_tokens vs raw tokens: one per run
    mask_literal: str = "[mask]"
    device: str = "cpu"
    # fine-tuning defaults
    learning_rate: float = 2e-5
    warmup_proportion: float = 0.1
    batch_size: int = 16
    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.max_length < 8:
            raise BridgeError("max_length too small")
        if not 0 <= self.warmup_proportion < 1:
            raise BridgeError("warmup_proportion must be in [0, 1)")
        if self.batch_size < 1:
            raise BridgeError("batch_size must be positive")


def load_encoder(cfg: BridgeConfig):
    from transformers import AutoModel, AutoTokenizer
    tokenizer = AutoTokenizer.from_pretrained(cfg.model)
    model = AutoModel.from_pretrained(cfg.model)
    model.to(cfg.device)
    model.eval()
    return tokenizer, model


def encode_batch(model, batch_ids, device):
    """Pad a list of id sequences and run the encoder; final hidden states."""
    max_len = max(len(ids) for ids in batch_ids)
    pad_id = model.config.pad_token_id or 0
    input_ids = torch.full((len(batch_ids), max_len), pad_id, dtype=torch.long)
    attention = torch.zeros((len(batch_ids), max_len), dtype=torch.long)
    for i, ids in enumerate(batch_ids):
        input_ids[i, :len(ids)] = torch.tensor(ids)
        attention[i, :len(ids)] = 1
    with torch.no_grad():
        out = model(input_ids=input_ids.to(device),
                    attention_mask=attention.to(device))
    return out.last_hidden_state


def export_embeddings(examples_path, cfg: BridgeConfig, out_path):
    """Write the embedding interchange file for an example file.

    Event vectors are the encoder's final-layer states at the first
    subword of each event word. Examples longer than max_length are
    skipped and logged; output order follows input order.
    """
    tokenizer, model = load_encoder(cfg)
    examples = read_examples(examples_path)
    hidden = model.config.hidden_size

    prepared = []
    skipped = []
    for ex in examples:
        words = ex.words(cfg.encode_masked)
        ids, positions = subword_encode(words, tokenizer, cfg.mask_literal, ex.id)
        if len(positions) != len(words):
            raise BridgeError(f"alignment failed for example {ex.id}")
        if len(ids) > cfg.max_length:
            log.warning("skipping %s: %d subword tokens exceed max_length %d",
                        ex.id, len(ids), cfg.max_length)
            skipped.append(ex.id)
            continue
        prepared.append((ex, ids, positions))

    written = 0
    with open(out_path, "w", encoding="utf-8") as handle:
        manifest = {
            "tool": "tempdistill-bridge",
            "model": str(cfg.model).rsplit("/", 1)[-1],
            "encode_masked": cfg.encode_masked,
            "max_length": cfg.max_length,
            "skipped": skipped,
        }
        handle.write(json.dumps({"_manifest": manifest}, sort_keys=True) + "\n")
        for start in range(0, len(prepared), cfg.batch_size):
            chunk = prepared[start:start + cfg.batch_size]
            states = encode_batch(model, [ids for _, ids, _ in chunk], cfg.device)
            for row, (ex, ids, positions) in enumerate(chunk):
                e1_vec = states[row, positions[ex.e1]].cpu().tolist()
                e2_vec = states[row, positions[ex.e2]].cpu().tolist()
                rec = {"example_id": ex.id, "d": hidden,
                       "e1_vec": e1_vec, "e2_vec": e2_vec}
                handle.write(json.dumps(rec, sort_keys=True) + "\n")
                written += 1
    return written, skipped
