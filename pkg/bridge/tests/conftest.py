import json
import random

import pytest
import torch

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "finish", "##ed", "publish", "study", "##ing",
    "he", "his", "schooling", "in", "1951", "1961", "first", "book", ".",
    "the", "official", "said", "took", "until", "recently", ",",
] + [f"w{i}" for i in range(20)]


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """A small randomly initialized encoder saved locally, with a WordPiece
    vocabulary under which 'finished' splits into two subwords."""
    from transformers import BertConfig, BertModel, BertTokenizer

    path = tmp_path_factory.mktemp("encoder")
    vocab_file = path / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(VOCAB), hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=64, max_position_embeddings=128,
    )
    torch.manual_seed(1234)
    model = BertModel(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


def synthetic_examples(n, seed=0, min_len=6, max_len=10):
    """Label-bearing token sequences over the tiny vocabulary: the first
    event word encodes the label."""
    rng = random.Random(seed)
    labels = ("BEFORE", "AFTER", "EQUAL", "VAGUE")
    records = []
    for i in range(n):
        label = labels[i % 4]
        length = rng.randrange(min_len, max_len + 1)
        tokens = [f"w{rng.randrange(4, 20)}" for _ in range(length)]
        e1 = rng.randrange(0, length - 1)
        e2 = rng.randrange(e1 + 1, length)
        tokens[e1] = f"w{labels.index(label)}"  # w0..w3 mark the label
        records.append({
            "id": f"syn{i:04d}", "heuristic": "GOLD", "doc_id": f"doc{i % 17}",
            "source": "synthetic", "tokens": tokens, "e1": e1, "e2": e2,
            "label": label, "masked_tokens": None, "cue_spans": [],
        })
    return records


def write_records(records, path):
    with open(path, "w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(json.dumps(rec, sort_keys=True) + "\n")


@pytest.fixture()
def synthetic_file(tmp_path):
    def make(n, name="examples.jsonl", seed=0):
        path = tmp_path / name
        write_records(synthetic_examples(n, seed=seed), path)
        return path
    return make
