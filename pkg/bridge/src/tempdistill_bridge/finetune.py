"""End-to-end fine-tuning of an encoder with the pair-classification head.

Desk-scale smoke runs work on CPU with a small encoder; replicating
published transfer numbers needs the full pretrained model, the licensed
source corpus, and GPU time, none of which this module provides.
"""
from __future__ import annotations

import json
import logging

import torch
from torch import nn

from . import LABEL_ORDER, BridgeError
from .align import subword_encode
from .examples import read_examples
from .export import BridgeConfig

log = logging.getLogger(__name__)

_LABEL_INDEX = {label: i for i, label in enumerate(LABEL_ORDER)}


class PairClassifier(nn.Module):
    """Encoder plus a linear head over [e1; e2; e1*e2; e1-e2]."""

    def __init__(self, encoder):
        super().__init__()
        self.encoder = encoder
        hidden = encoder.config.hidden_size
        self.classifier = nn.Linear(4 * hidden, len(LABEL_ORDER))

    def forward(self, input_ids, attention_mask, pos1, pos2):
        states = self.encoder(input_ids=input_ids,
                              attention_mask=attention_mask).last_hidden_state
        rows = torch.arange(states.shape[0], device=states.device)
        e1 = states[rows, pos1]
        e2 = states[rows, pos2]
        combined = torch.cat([e1, e2, e1 * e2, e1 - e2], dim=-1)
        return self.classifier(combined)


def _prepare(examples, tokenizer, cfg: BridgeConfig):
    items = []
    for ex in examples:
        words = ex.words(cfg.encode_masked)
        ids, positions = subword_encode(words, tokenizer, cfg.mask_literal, ex.id)
        if len(ids) > cfg.max_length:
            log.warning("skipping %s: exceeds max_length", ex.id)
            continue
        items.append((ex, ids, positions[ex.e1], positions[ex.e2]))
    if not items:
        raise BridgeError("no trainable examples after length filtering")
    return items


def _batches(items, batch_size, pad_id, device, shuffle_generator=None):
    order = torch.arange(len(items))
    if shuffle_generator is not None:
        order = torch.randperm(len(items), generator=shuffle_generator)
    for start in range(0, len(items), batch_size):
        chunk = [items[i] for i in order[start:start + batch_size].tolist()]
        max_len = max(len(ids) for _, ids, _, _ in chunk)
        input_ids = torch.full((len(chunk), max_len), pad_id, dtype=torch.long)
        attention = torch.zeros((len(chunk), max_len), dtype=torch.long)
        for i, (_, ids, _, _) in enumerate(chunk):
            input_ids[i, :len(ids)] = torch.tensor(ids)
            attention[i, :len(ids)] = 1
        pos1 = torch.tensor([p1 for _, _, p1, _ in chunk])
        pos2 = torch.tensor([p2 for _, _, _, p2 in chunk])
        labels = torch.tensor([_LABEL_INDEX[ex.label] for ex, _, _, _ in chunk])
        yield ([ex for ex, _, _, _ in chunk], input_ids.to(device),
               attention.to(device), pos1.to(device), pos2.to(device),
               labels.to(device))


def finetune(train_path, dev_path, cfg: BridgeConfig, out_dir):
    """Train end to end; writes predictions.jsonl and metrics.json in out_dir."""
    import os

    from transformers import AutoModel, AutoTokenizer

    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(cfg.model)
    encoder = AutoModel.from_pretrained(cfg.model)
    model = PairClassifier(encoder).to(cfg.device)
    pad_id = encoder.config.pad_token_id or 0

    train_items = _prepare(read_examples(train_path), tokenizer, cfg)
    dev_items = _prepare(read_examples(dev_path), tokenizer, cfg)

    steps_per_epoch = (len(train_items) + cfg.batch_size - 1) // cfg.batch_size
    total_steps = max(1, cfg.epochs * steps_per_epoch)
    warmup = int(cfg.warmup_proportion * total_steps)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)

    def lr_lambda(step):
        if warmup and step < warmup:
            return step / warmup
        if total_steps == warmup:
            return 1.0
        return max(0.0, (total_steps - step) / (total_steps - warmup))

    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(cfg.seed)

    losses = []
    try:
        for _ in range(cfg.epochs):
            model.train()
            for _, ids, mask, pos1, pos2, labels in _batches(
                    train_items, cfg.batch_size, pad_id, cfg.device, generator):
                optimizer.zero_grad()
                logits = model(ids, mask, pos1, pos2)
                loss = loss_fn(logits, labels)
                loss.backward()
                optimizer.step()
                scheduler.step()
                losses.append(float(loss.detach()))
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            raise BridgeError(f"resource exhaustion during fine-tuning: {exc}") from exc
        raise

    model.eval()
    predictions = []
    correct = 0
    with torch.no_grad():
        for examples, ids, mask, pos1, pos2, labels in _batches(
                dev_items, cfg.batch_size, pad_id, cfg.device):
            probs = torch.softmax(model(ids, mask, pos1, pos2), dim=-1)
            choices = probs.argmax(dim=-1)
            correct += int((choices == labels).sum())
            for ex, probs_row, choice in zip(examples, probs, choices):
                predictions.append({
                    "example_id": ex.id,
                    "label": LABEL_ORDER[int(choice)],
                    "probs": [float(p) for p in probs_row],
                })

    os.makedirs(out_dir, exist_ok=True)
    preds_path = os.path.join(out_dir, f"predictions-{cfg.seed}.jsonl")
    with open(preds_path, "w", encoding="utf-8") as handle:
        for rec in predictions:
            handle.write(json.dumps(rec, sort_keys=True) + "\n")
    metrics = {
        "seed": cfg.seed,
        "train_examples": len(train_items),
        "dev_examples": len(dev_items),
        "final_train_loss": losses[-1] if losses else None,
        "dev_accuracy": correct / len(dev_items),
        "predictions": preds_path,
    }
    with open(os.path.join(out_dir, f"metrics-{cfg.seed}.json"), "w",
              encoding="utf-8") as handle:
        json.dump(metrics, handle, sort_keys=True, indent=2)
        handle.write("\n")
    return metrics
