"""Linear 4-way relation classifier over paired event embeddings.

The classifier sees only the combined vector [e1; e2; e1*e2; e1-e2] built
from two event embeddings, trains by full-batch maximum likelihood, and is
evaluated with precision/recall that ignore VAGUE predictions.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .dataset import LABELS, VAGUE

LABEL_ORDER = LABELS  # (BEFORE, AFTER, EQUAL, VAGUE); serialization contract
_LABEL_INDEX = {label: i for i, label in enumerate(LABEL_ORDER)}


class RelheadError(ValueError):
    """Raised for malformed inputs to the classification head."""


@dataclass(frozen=True)
class EmbeddingPair:
    example_id: str
    e1_vec: np.ndarray
    e2_vec: np.ndarray

    def __post_init__(self):
        e1 = np.asarray(self.e1_vec, dtype=np.float64)
        e2 = np.asarray(self.e2_vec, dtype=np.float64)
        if e1.ndim != 1 or e1.shape != e2.shape:
            raise RelheadError(f"embedding shape mismatch for {self.example_id}: "
                               f"{e1.shape} vs {e2.shape}")
        if not (np.isfinite(e1).all() and np.isfinite(e2).all()):
            raise RelheadError(f"non-finite embedding for {self.example_id}")
        object.__setattr__(self, "e1_vec", e1)
        object.__setattr__(self, "e2_vec", e2)

    @property
    def d(self) -> int:
        return self.e1_vec.shape[0]


@dataclass
class LinearHead:
    W: np.ndarray  # (4, 4d)
    b: np.ndarray  # (4,)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[0] != 4 or self.b.shape != (4,):
            raise RelheadError(f"bad head shapes {self.W.shape}, {self.b.shape}")
        if self.W.shape[1] % 4 != 0:
            raise RelheadError("weight width must be 4*d")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise RelheadError("non-finite head parameters")

    @property
    def d(self) -> int:
        return self.W.shape[1] // 4


@dataclass(frozen=True)
class Prediction:
    example_id: str
    label: str
    probs: tuple[float, float, float, float]


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    nonvague_accuracy: float
    n: int
    precision_undefined: bool = False


@dataclass
class TrainResult:
    head: LinearHead
    losses: list[float] = field(default_factory=list)
    eval_f1_by_epoch: list[float] = field(default_factory=list)

    @property
    def best_f1(self) -> float:
        return max(self.eval_f1_by_epoch) if self.eval_f1_by_epoch else float("nan")


def build_class_vector(pair: EmbeddingPair) -> np.ndarray:
    """[e1; e2; e1*e2; e1-e2], the fixed 4d block layout."""
    e1, e2 = pair.e1_vec, pair.e2_vec
    return np.concatenate([e1, e2, e1 * e2, e1 - e2])


def _design_matrix(pairs) -> np.ndarray:
    if not pairs:
        raise RelheadError("no embedding pairs")
    d = pairs[0].d
    for p in pairs:
        if p.d != d:
            raise RelheadError(f"dimension mismatch: {p.d} vs {d} for {p.example_id}")
    return np.stack([build_class_vector(p) for p in pairs])


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def predict(head: LinearHead, pair: EmbeddingPair) -> tuple[str, np.ndarray]:
    """Label and probability vector for one pair; ties go to label order."""
    if pair.d != head.d:
        raise RelheadError(f"pair dimension {pair.d} does not match head {head.d}")
    probs = _softmax(head.W @ build_class_vector(pair) + head.b)
    return LABEL_ORDER[int(np.argmax(probs))], probs


def predict_batch(head: LinearHead, pairs) -> list[Prediction]:
    X = _design_matrix(pairs)
    if X.shape[1] != 4 * head.d:
        raise RelheadError("pair dimension does not match head")
    P = _softmax(X @ head.W.T + head.b)
    out = []
    for pair, probs in zip(pairs, P):
        out.append(Prediction(pair.example_id, LABEL_ORDER[int(np.argmax(probs))],
                              tuple(float(x) for x in probs)))
    return out


def _one_hot(labels) -> np.ndarray:
    Y = np.zeros((len(labels), 4))
    for i, label in enumerate(labels):
        if label not in _LABEL_INDEX:
            raise RelheadError(f"unknown label {label!r}")
        Y[i, _LABEL_INDEX[label]] = 1.0
    return Y


def nll_and_grads(head: LinearHead, X: np.ndarray, Y: np.ndarray, l2: float = 0.0):
    """Mean negative log-likelihood and its analytic gradients."""
    P = _softmax(X @ head.W.T + head.b)
    n = X.shape[0]
    eps = 1e-300
    loss = -np.mean(np.log(np.sum(P * Y, axis=1) + eps)) + l2 * np.sum(head.W ** 2)
    delta = (P - Y) / n
    grad_W = delta.T @ X + 2.0 * l2 * head.W
    grad_b = delta.sum(axis=0)
    return loss, grad_W, grad_b


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    epochs: int = 500
    seed: int = 0
    l2: float = 0.0
    init_scale: float = 0.01


def init_head(d: int, seed: int = 0, scale: float = 0.01) -> LinearHead:
    rng = np.random.default_rng(seed)
    return LinearHead(W=scale * rng.standard_normal((4, 4 * d)), b=np.zeros(4))


def train(pairs, labels, cfg: TrainConfig = TrainConfig(),
          eval_pairs=None, eval_labels=None) -> TrainResult:
    """Full-batch gradient descent on the mean NLL; deterministic per seed."""
    if len(pairs) != len(labels):
        raise RelheadError("pairs and labels differ in length")
    X = _design_matrix(pairs)
    Y = _one_hot(labels)
    head = init_head(pairs[0].d, seed=cfg.seed, scale=cfg.init_scale)
    result = TrainResult(head=head)
    eval_X = eval_Y = None
    if eval_pairs is not None:
        eval_X = _design_matrix(eval_pairs)
    for epoch in range(cfg.epochs):
        loss, grad_W, grad_b = nll_and_grads(head, X, Y, cfg.l2)
        if not math.isfinite(loss):
            raise RelheadError(f"training diverged at epoch {epoch}")
        result.losses.append(float(loss))
        head.W = head.W - cfg.lr * grad_W
        head.b = head.b - cfg.lr * grad_b
        if eval_X is not None:
            P = _softmax(eval_X @ head.W.T + head.b)
            preds = [LABEL_ORDER[i] for i in np.argmax(P, axis=1)]
            result.eval_f1_by_epoch.append(evaluate(preds, eval_labels).f1)
    result.head = head
    return result


def grad_check(head: LinearHead, pairs, labels, step: float = 1e-5) -> float:
    """Max relative error of analytic vs central-difference NLL gradients."""
    if len(pairs) > 32:
        raise RelheadError("gradient check is for small batches")
    X = _design_matrix(pairs)
    Y = _one_hot(labels)
    _, grad_W, grad_b = nll_and_grads(head, X, Y)

    def loss_at(W, b):
        probe = LinearHead(W=W, b=b)
        return nll_and_grads(probe, X, Y)[0]

    worst = 0.0
    for analytic, param in ((grad_W, head.W), (grad_b, head.b)):
        flat_param = param.reshape(-1)
        flat_grad = analytic.reshape(-1)
        for i in range(flat_param.size):
            original = flat_param[i]
            flat_param[i] = original + step
            up = loss_at(head.W, head.b)
            flat_param[i] = original - step
            down = loss_at(head.W, head.b)
            flat_param[i] = original
            numeric = (up - down) / (2 * step)
            scale = max(abs(flat_grad[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(flat_grad[i] - numeric) / scale)
    return worst


def ensemble(prediction_sets) -> list[Prediction]:
    """Majority vote across aligned per-model predictions.

    Ties break on summed probability, then label order; the result is
    invariant to the order of the models.
    """
    if not prediction_sets:
        raise RelheadError("no predictions to ensemble")
    first = prediction_sets[0]
    ids = [p.example_id for p in first]
    for preds in prediction_sets[1:]:
        if [p.example_id for p in preds] != ids:
            raise RelheadError("prediction files are not aligned by example id")
    out = []
    for i, example_id in enumerate(ids):
        votes = Counter()
        summed = np.zeros(4)
        for preds in prediction_sets:
            votes[preds[i].label] += 1
            summed += np.asarray(preds[i].probs)
        top = max(votes.values())
        tied = [label for label, c in votes.items() if c == top]
        winner = min(tied, key=lambda lb: (-summed[_LABEL_INDEX[lb]], _LABEL_INDEX[lb]))
        probs = summed / len(prediction_sets)
        out.append(Prediction(example_id, winner, tuple(float(x) for x in probs)))
    return out


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def evaluate(preds, golds) -> EvalReport:
    """MATRES-style scoring: VAGUE predictions abstain, VAGUE golds only
    count against recall."""
    pred_labels = [p.label if isinstance(p, Prediction) else p for p in preds]
    if len(pred_labels) != len(golds) or not golds:
        raise RelheadError("predictions and golds must align and be non-empty")
    correct_nonvague = sum(1 for p, g in zip(pred_labels, golds) if p != VAGUE and p == g)
    n_pred = sum(1 for p in pred_labels if p != VAGUE)
    n_gold = sum(1 for g in golds if g != VAGUE)
    undefined = n_pred == 0
    precision = 0.0 if undefined else 100.0 * correct_nonvague / n_pred
    recall = 0.0 if n_gold == 0 else 100.0 * correct_nonvague / n_gold
    accuracy = 100.0 * sum(1 for p, g in zip(pred_labels, golds) if p == g) / len(golds)
    nonvague_pairs = [(p, g) for p, g in zip(pred_labels, golds) if g != VAGUE]
    nonvague_accuracy = 0.0 if not nonvague_pairs else \
        100.0 * sum(1 for p, g in nonvague_pairs if p == g) / len(nonvague_pairs)
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        accuracy=accuracy,
        nonvague_accuracy=nonvague_accuracy,
        n=len(golds),
        precision_undefined=undefined,
    )


def majority_baseline(train_labels, eval_golds) -> EvalReport:
    """Score the constant most-frequent-training-label predictor."""
    if not train_labels:
        raise RelheadError("empty training labels")
    counts = Counter(train_labels)
    top = max(counts.values())
    majority = min((lb for lb, c in counts.items() if c == top),
                   key=lambda lb: _LABEL_INDEX[lb])
    return evaluate([majority] * len(eval_golds), eval_golds)


def average_f1(reports) -> float:
    reports = list(reports)
    if not reports:
        raise RelheadError("no reports to average")
    return sum(r.f1 for r in reports) / len(reports)


# --- interchange -----------------------------------------------------------


def read_embeddings(path) -> list[EmbeddingPair]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if isinstance(rec, dict) and "_manifest" in rec:
                continue
            for name in ("example_id", "d", "e1_vec", "e2_vec"):
                if name not in rec:
                    raise RelheadError(f"line {lineno}: missing field {name!r}")
            pair = EmbeddingPair(rec["example_id"], rec["e1_vec"], rec["e2_vec"])
            if pair.d != rec["d"]:
                raise RelheadError(f"line {lineno}: declared d={rec['d']} but vectors "
                                   f"have {pair.d}")
            out.append(pair)
    return out


def write_embeddings(pairs, path, manifest: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if manifest is not None:
            handle.write(json.dumps({"_manifest": manifest}, sort_keys=True) + "\n")
        for pair in pairs:
            rec = {
                "example_id": pair.example_id,
                "d": pair.d,
                "e1_vec": [float(x) for x in pair.e1_vec],
                "e2_vec": [float(x) for x in pair.e2_vec],
            }
            handle.write(json.dumps(rec, sort_keys=True) + "\n")


def head_to_record(head: LinearHead) -> dict:
    return {
        "d": head.d,
        "label_order": list(LABEL_ORDER),
        "W": [float(x) for x in head.W.reshape(-1)],
        "b": [float(x) for x in head.b],
    }


def head_from_record(rec: dict) -> LinearHead:
    if tuple(rec.get("label_order", ())) != LABEL_ORDER:
        raise RelheadError(f"unsupported label order {rec.get('label_order')}")
    d = rec["d"]
    W = np.asarray(rec["W"], dtype=np.float64).reshape(4, 4 * d)
    return LinearHead(W=W, b=np.asarray(rec["b"], dtype=np.float64))


def write_head(head: LinearHead, path, manifest: dict | None = None) -> None:
    rec = head_to_record(head)
    if manifest is not None:
        rec["_manifest"] = manifest
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(rec, handle, sort_keys=True)
        handle.write("\n")


def read_head(path) -> LinearHead:
    with open(path, encoding="utf-8") as handle:
        return head_from_record(json.load(handle))


def read_predictions(path) -> list[Prediction]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if isinstance(rec, dict) and "_manifest" in rec:
                continue
            out.append(Prediction(rec["example_id"], rec["label"], tuple(rec["probs"])))
    return out


def write_predictions(preds, path, manifest: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if manifest is not None:
            handle.write(json.dumps({"_manifest": manifest}, sort_keys=True) + "\n")
        for p in preds:
            rec = {"example_id": p.example_id, "label": p.label, "probs": list(p.probs)}
            handle.write(json.dumps(rec, sort_keys=True) + "\n")


def report_to_record(report: EvalReport) -> dict:
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "accuracy": report.accuracy,
        "nonvague_accuracy": report.nonvague_accuracy,
        "n": report.n,
        "precision_undefined": report.precision_undefined,
    }


def render_report(report: EvalReport) -> str:
    lines = [
        f"n                {report.n}",
        f"precision        {report.precision:.1f}" +
        ("  (no non-vague predictions)" if report.precision_undefined else ""),
        f"recall           {report.recall:.1f}",
        f"f1               {report.f1:.1f}",
        f"accuracy         {report.accuracy:.1f}",
        f"nonvague acc.    {report.nonvague_accuracy:.1f}",
    ]
    return "\n".join(lines) + "\n"
