import json
import math
import pathlib

import numpy as np
import pytest

from tempdistill.relhead import (EmbeddingPair, LinearHead, Prediction, RelheadError,
                                 TrainConfig, build_class_vector, ensemble, evaluate,
                                 f1_score, grad_check, init_head, majority_baseline,
                                 nll_and_grads, predict, predict_batch, read_embeddings,
                                 read_head, train, write_embeddings, write_head)

DATA = pathlib.Path(__file__).parent / "data"


def pair(e1, e2, example_id="p"):
    return EmbeddingPair(example_id, np.asarray(e1, float), np.asarray(e2, float))


def synthetic_separable(n=1000, d=16, seed=5, margin=3.0, noise=0.3):
    """Labels encoded in the difference block: e1 - e2 points along a
    label-specific axis."""
    rng = np.random.default_rng(seed)
    labels_idx = rng.integers(0, 4, size=n)
    labels = [("BEFORE", "AFTER", "EQUAL", "VAGUE")[i] for i in labels_idx]
    pairs = []
    for i in range(n):
        e2 = rng.standard_normal(d)
        direction = np.zeros(d)
        direction[labels_idx[i]] = margin
        e1 = e2 + direction + noise * rng.standard_normal(d)
        pairs.append(EmbeddingPair(f"s{i}", e1, e2))
    return pairs, labels


class TestClassVector:
    def test_equal_vectors(self):
        v = np.array([1.0, -2.0])
        c = build_class_vector(pair(v, v))
        assert np.allclose(c, [1, -2, 1, -2, 1, 4, 0, 0])

    def test_block_layout(self):
        c = build_class_vector(pair([1, 2], [3, 4]))
        assert np.allclose(c, [1, 2, 3, 4, 3, 8, -2, -2])

    def test_dimension_mismatch(self):
        with pytest.raises(RelheadError):
            pair([1, 2], [3, 4, 5])

    def test_non_finite_rejected(self):
        with pytest.raises(RelheadError):
            pair([1, float("nan")], [3, 4])


class TestPredict:
    def test_zero_head_uniform(self):
        head = LinearHead(W=np.zeros((4, 8)), b=np.zeros(4))
        label, probs = predict(head, pair([1, 2], [3, 4]))
        assert np.allclose(probs, 0.25)
        assert label == "BEFORE"  # tie resolves to first label

    def test_bias_dominates(self):
        head = LinearHead(W=np.zeros((4, 8)), b=np.array([10.0, 0, 0, 0]))
        label, probs = predict(head, pair([1, 2], [3, 4]))
        expected = math.exp(10) / (math.exp(10) + 3)
        assert label == "BEFORE"
        assert probs[0] == pytest.approx(expected, abs=1e-9)
        assert probs[0] == pytest.approx(0.99986, abs=5e-5)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        head = LinearHead(W=rng.standard_normal((4, 8)), b=rng.standard_normal(4))
        shifted = LinearHead(W=head.W.copy(), b=head.b + 7.5)
        p = pair(rng.standard_normal(2), rng.standard_normal(2))
        # adding a constant to every logit via a uniform bias shift
        _, probs = predict(head, p)
        _, probs_shifted = predict(shifted, p)
        assert np.allclose(probs, probs_shifted)

    def test_dimension_check(self):
        head = LinearHead(W=np.zeros((4, 8)), b=np.zeros(4))
        with pytest.raises(RelheadError):
            predict(head, pair([1, 2, 3], [4, 5, 6]))

    def test_argmax_invariant_to_positive_scaling(self):
        rng = np.random.default_rng(3)
        head = LinearHead(W=rng.standard_normal((4, 8)), b=rng.standard_normal(4))
        scaled = LinearHead(W=2.5 * head.W, b=2.5 * head.b)
        for _ in range(10):
            p = pair(rng.standard_normal(2), rng.standard_normal(2))
            assert predict(head, p)[0] == predict(scaled, p)[0]


class TestTrain:
    def test_reaches_high_accuracy_and_beats_majority(self):
        pairs, labels = synthetic_separable()
        result = train(pairs, labels, TrainConfig(lr=0.5, epochs=500, seed=1))
        preds = [p.label for p in predict_batch(result.head, pairs)]
        accuracy = float(np.mean([p == g for p, g in zip(preds, labels)]))
        assert accuracy >= 0.99
        baseline = majority_baseline(labels, labels)
        assert 100 * accuracy - baseline.accuracy >= 30

    def test_independent_descent_oracle_agrees(self):
        # plain-loop softmax regression written from scratch
        pairs, labels = synthetic_separable(n=200, d=4, seed=11)
        X = np.stack([np.concatenate([p.e1_vec, p.e2_vec, p.e1_vec * p.e2_vec,
                                      p.e1_vec - p.e2_vec]) for p in pairs])
        index = {"BEFORE": 0, "AFTER": 1, "EQUAL": 2, "VAGUE": 3}
        Y = np.zeros((len(labels), 4))
        for i, lb in enumerate(labels):
            Y[i, index[lb]] = 1.0
        W = np.zeros((4, X.shape[1]))
        b = np.zeros(4)
        for _ in range(500):
            Z = X @ W.T + b
            Z -= Z.max(axis=1, keepdims=True)
            P = np.exp(Z)
            P /= P.sum(axis=1, keepdims=True)
            G = (P - Y) / len(labels)
            W -= 0.5 * (G.T @ X)
            b -= 0.5 * G.sum(axis=0)
        oracle_acc = float(np.mean(np.argmax(X @ W.T + b, axis=1) == np.argmax(Y, axis=1)))

        result = train(pairs, labels, TrainConfig(lr=0.5, epochs=500, seed=2))
        preds = [p.label for p in predict_batch(result.head, pairs)]
        lib_acc = float(np.mean([p == g for p, g in zip(preds, labels)]))
        assert oracle_acc >= 0.99
        assert lib_acc >= 0.99

    def test_loss_monotone_at_small_lr(self):
        pairs, labels = synthetic_separable(n=300, d=8, seed=3)
        result = train(pairs, labels, TrainConfig(lr=1e-3, epochs=200, seed=3))
        diffs = np.diff(result.losses)
        assert (diffs <= 1e-12).all()

    def test_single_example_memorized(self):
        pairs = [pair([1.0, 0.0], [0.0, 1.0], "only")]
        result = train(pairs, ["AFTER"], TrainConfig(lr=1.0, epochs=2000, seed=0))
        assert result.losses[-1] < 0.01
        assert predict(result.head, pairs[0])[0] == "AFTER"

    def test_zero_lr_keeps_initialization(self):
        pairs, labels = synthetic_separable(n=10, d=4, seed=4)
        result = train(pairs, labels, TrainConfig(lr=0.0, epochs=5, seed=9))
        fresh = init_head(4, seed=9)
        assert np.array_equal(result.head.W, fresh.W)
        assert np.array_equal(result.head.b, fresh.b)

    def test_deterministic_per_seed(self):
        pairs, labels = synthetic_separable(n=50, d=4, seed=6)
        first = train(pairs, labels, TrainConfig(lr=0.1, epochs=50, seed=13))
        second = train(pairs, labels, TrainConfig(lr=0.1, epochs=50, seed=13))
        assert np.array_equal(first.head.W, second.head.W)
        assert first.losses == second.losses

    def test_empty_data_rejected(self):
        with pytest.raises(RelheadError):
            train([], [], TrainConfig())


class TestGradCheck:
    def test_random_instances(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            pairs = [pair(rng.standard_normal(4), rng.standard_normal(4), f"g{i}")
                     for i in range(8)]
            labels = [("BEFORE", "AFTER", "EQUAL", "VAGUE")[i % 4] for i in range(8)]
            head = init_head(4, seed=seed, scale=0.5)
            assert grad_check(head, pairs, labels) < 1e-4

    def test_closed_form_at_zero(self):
        pairs = [pair([1.0, 0.0], [0.0, 1.0], "a"), pair([0.5, 0.5], [1.0, 1.0], "b")]
        labels = ["BEFORE", "AFTER"]
        head = LinearHead(W=np.zeros((4, 8)), b=np.zeros(4))
        X = np.stack([build_class_vector(p) for p in pairs])
        Y = np.zeros((2, 4))
        Y[0, 0] = Y[1, 1] = 1.0
        _, grad_W, grad_b = nll_and_grads(head, X, Y)
        # softmax at zero logits is uniform: grad_b = mean(0.25 - y)
        assert np.allclose(grad_b, (0.25 - Y).mean(axis=0))
        assert np.allclose(grad_W, ((0.25 - Y) / 2).T @ X)

    def test_duplicate_example_invariance(self):
        p = pair([1.0, 2.0], [0.5, -1.0])
        head = init_head(2, seed=1)
        X1 = np.stack([build_class_vector(p)])
        X2 = np.stack([build_class_vector(p)] * 2)
        Y1 = np.zeros((1, 4)); Y1[0, 0] = 1
        Y2 = np.zeros((2, 4)); Y2[:, 0] = 1
        _, gw1, gb1 = nll_and_grads(head, X1, Y1)
        _, gw2, gb2 = nll_and_grads(head, X2, Y2)
        assert np.allclose(gw1, gw2)
        assert np.allclose(gb1, gb2)


class TestEnsemble:
    def make(self, labels, probs=None):
        out = []
        for i, lb in enumerate(labels):
            p = probs[i] if probs else {"BEFORE": (0.7, 0.1, 0.1, 0.1),
                                        "AFTER": (0.1, 0.7, 0.1, 0.1),
                                        "EQUAL": (0.1, 0.1, 0.7, 0.1),
                                        "VAGUE": (0.1, 0.1, 0.1, 0.7)}[lb]
            out.append(Prediction(f"e{i}", lb, p))
        return out

    def test_majority(self):
        sets = [self.make(["BEFORE"]), self.make(["BEFORE"]), self.make(["AFTER"])]
        assert ensemble(sets)[0].label == "BEFORE"

    def test_tie_broken_by_summed_probability(self):
        sets = [
            [Prediction("e0", "BEFORE", (0.4, 0.3, 0.2, 0.1))],
            [Prediction("e0", "AFTER", (0.1, 0.8, 0.05, 0.05))],
            [Prediction("e0", "VAGUE", (0.2, 0.2, 0.2, 0.4))],
        ]
        assert ensemble(sets)[0].label == "AFTER"

    def test_k1_identity(self):
        preds = self.make(["AFTER", "EQUAL"])
        assert [p.label for p in ensemble([preds])] == ["AFTER", "EQUAL"]

    def test_permutation_invariant(self):
        sets = [self.make(["BEFORE", "AFTER"]), self.make(["AFTER", "AFTER"]),
                self.make(["BEFORE", "EQUAL"])]
        forward = [p.label for p in ensemble(sets)]
        backward = [p.label for p in ensemble(sets[::-1])]
        assert forward == backward

    def test_misaligned_ids_rejected(self):
        lhs = [Prediction("a", "BEFORE", (1, 0, 0, 0))]
        rhs = [Prediction("b", "BEFORE", (1, 0, 0, 0))]
        with pytest.raises(RelheadError):
            ensemble([lhs, rhs])


class TestEvaluate:
    def test_hand_counted_case(self):
        golds = ["BEFORE", "AFTER", "VAGUE", "EQUAL"]
        preds = ["BEFORE", "BEFORE", "BEFORE", "EQUAL"]
        report = evaluate(preds, golds)
        assert report.precision == pytest.approx(50.0)
        assert report.recall == pytest.approx(200 / 3, abs=0.05)
        assert report.f1 == pytest.approx(57.1, abs=0.05)
        assert report.accuracy == pytest.approx(50.0)
        assert report.nonvague_accuracy == pytest.approx(200 / 3, abs=0.05)

    def test_perfect_no_vague(self):
        golds = ["BEFORE", "AFTER", "EQUAL"]
        report = evaluate(list(golds), golds)
        assert (report.precision, report.recall, report.f1, report.accuracy) == \
            (100.0, 100.0, 100.0, 100.0)

    def test_all_metrics_coincide_without_vague(self):
        golds = ["BEFORE", "AFTER", "AFTER", "EQUAL"]
        preds = ["BEFORE", "BEFORE", "AFTER", "EQUAL"]
        report = evaluate(preds, golds)
        assert report.precision == report.recall == report.accuracy
        assert report.f1 == pytest.approx(report.precision)

    def test_vague_only_predictions_flagged(self):
        report = evaluate(["VAGUE", "VAGUE"], ["BEFORE", "AFTER"])
        assert report.precision == 0.0
        assert report.precision_undefined

    def test_published_triples_reproduced(self):
        triples = json.loads((DATA / "reference_prf.json").read_text())["triples"]
        for p, r, f1 in triples:
            assert f1_score(p, r) == pytest.approx(f1, abs=0.1)


class TestMajorityBaseline:
    def test_hand_counted(self):
        train_labels = ["AFTER"] * 6 + ["BEFORE"] * 4
        golds = ["AFTER"] * 5 + ["BEFORE"] * 4 + ["VAGUE"]
        report = majority_baseline(train_labels, golds)
        assert report.precision == pytest.approx(50.0)
        assert report.recall == pytest.approx(500 / 9, abs=0.05)

    def test_single_label(self):
        report = majority_baseline(["BEFORE"], ["BEFORE", "BEFORE"])
        assert report.precision == report.recall == 100.0

    def test_vague_majority_flagged(self):
        report = majority_baseline(["VAGUE", "VAGUE", "BEFORE"], ["BEFORE", "AFTER"])
        assert report.precision == 0.0
        assert report.precision_undefined
        assert report.recall == 0.0


class TestInterchange:
    def test_embeddings_round_trip(self, tmp_path):
        pairs = [pair([1.5, -2.25], [0.0, 3.125], "a"), pair([0.1, 0.2], [0.3, 0.4], "b")]
        path = tmp_path / "emb.jsonl"
        write_embeddings(pairs, path, manifest={"seed": 1})
        back = read_embeddings(path)
        assert [p.example_id for p in back] == ["a", "b"]
        for lhs, rhs in zip(pairs, back):
            assert np.array_equal(lhs.e1_vec, rhs.e1_vec)
            assert np.array_equal(lhs.e2_vec, rhs.e2_vec)

    def test_head_round_trip(self, tmp_path):
        head = init_head(3, seed=42)
        path = tmp_path / "head.json"
        write_head(head, path, manifest={"seed": 42})
        back = read_head(path)
        assert np.array_equal(head.W, back.W)
        assert np.array_equal(head.b, back.b)
