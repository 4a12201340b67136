import json

from tempdistill_bridge.export import BridgeConfig
from tempdistill_bridge.finetune import finetune


class TestFinetuneSmoke:
    def test_one_epoch_run_emits_aligned_predictions(self, tiny_encoder,
                                                     synthetic_file, tmp_path):
        train = synthetic_file(50, name="train.jsonl", seed=0)
        dev = synthetic_file(20, name="dev.jsonl", seed=9)
        out = tmp_path / "run"
        cfg = BridgeConfig(model=tiny_encoder, epochs=1, batch_size=16,
                           learning_rate=1e-3, seed=0)
        metrics = finetune(train, dev, cfg, out)
        assert metrics["train_examples"] == 50
        assert metrics["dev_examples"] == 20
        assert 0.0 <= metrics["dev_accuracy"] <= 1.0

        preds = [json.loads(l) for l in (out / "predictions-0.jsonl").read_text().splitlines()]
        dev_ids = [json.loads(l)["id"] for l in dev.read_text().splitlines()]
        assert [p["example_id"] for p in preds] == dev_ids
        assert all(len(p["probs"]) == 4 for p in preds)

        from tempdistill import relhead
        loaded = relhead.read_predictions(out / "predictions-0.jsonl")
        golds = [json.loads(l)["label"] for l in dev.read_text().splitlines()]
        report = relhead.evaluate(loaded, golds)
        assert report.n == 20

    def test_seeded_runs_reproducible(self, tiny_encoder, synthetic_file, tmp_path):
        train = synthetic_file(30, name="t.jsonl", seed=1)
        dev = synthetic_file(10, name="d.jsonl", seed=2)
        cfg = BridgeConfig(model=tiny_encoder, epochs=1, batch_size=8, seed=7)
        first = finetune(train, dev, cfg, tmp_path / "a")
        second = finetune(train, dev, cfg, tmp_path / "b")
        assert first["final_train_loss"] == second["final_train_loss"]
        assert (tmp_path / "a" / "predictions-7.jsonl").read_text() == \
            (tmp_path / "b" / "predictions-7.jsonl").read_text()
