"""Command-line pipeline driver.

Every subcommand writes its outputs atomically with an embedded manifest
line (config hash, input hashes, seeds) so identical configurations
reproduce byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__, dataset, masker, pipeline, relhead
from .corpus import CorpusError, read_documents, write_documents


class CliError(ValueError):
    """Raised for invalid configuration or unusable inputs."""


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


_PATH_KEYS = {"input", "gold", "embeddings", "examples"}


def _manifest(subcommand: str, config: dict, inputs: dict) -> dict:
    # Inputs are identified by content hash; path values are reduced to
    # basenames so re-runs from different directories stay byte-identical.
    config = {
        k: (os.path.basename(str(v)) if k in _PATH_KEYS else v)
        for k, v in sorted(config.items()) if v is not None
    }
    blob = json.dumps(config, sort_keys=True)
    return {
        "tool": f"tempdistill {__version__}",
        "subcommand": subcommand,
        "config": config,
        "config_hash": hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16],
        "inputs": {str(name): _sha256(path) for name, path in sorted(inputs.items())},
    }


def _atomic(path, writer) -> None:
    """Write through a temp file so partial outputs never take the real name."""
    tmp = f"{path}.tmp"
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _write_json(obj: dict, path) -> None:
    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(obj, handle, sort_keys=True, indent=2)
            handle.write("\n")
    _atomic(path, writer)


def _write_text(text: str, path) -> None:
    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(text)
    _atomic(path, writer)


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as handle:
        config = json.load(handle)
    if not isinstance(config, dict):
        raise CliError("config file must hold a JSON object")
    return config


def _setting(args, config: dict, name: str, default):
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        value = config.get(name, default)
    return value


def _parse_seeds(raw) -> list[int]:
    if isinstance(raw, list):
        return [int(s) for s in raw]
    return [int(s) for s in str(raw).split(",") if s.strip()]


def _parse_fractions(raw) -> tuple[float, float]:
    if isinstance(raw, (list, tuple)):
        parts = [float(x) for x in raw]
    else:
        parts = [float(x) for x in str(raw).split(",")]
    if len(parts) != 2:
        raise CliError("--split takes two comma-separated fractions")
    return parts[0], parts[1]


def _mask_config(args, config: dict) -> masker.MaskConfig:
    return masker.MaskConfig(
        mask_literal=_setting(args, config, "mask-literal", "[mask]"),
        mask_all_timexes=bool(_setting(args, config, "mask-all-timexes", True)),
        mask_connective_timexes=bool(_setting(args, config, "mask-connective-timexes", False)),
    )


# --- subcommands ------------------------------------------------------------


def cmd_ingest(args, config) -> int:
    docs = read_documents(args.input)
    manifest = _manifest("ingest", {"input": args.input}, {"input": args.input})
    out = _out_path(args, "corpus.jsonl")
    _atomic(out, lambda tmp: write_documents(docs, tmp, manifest=manifest))
    print(f"ingested {len(docs)} documents -> {out}")
    return 0


def cmd_extract(args, config) -> int:
    heuristic = _setting(args, config, "heuristic", "both")
    if heuristic not in ("beforeafter", "distanttimex", "both"):
        raise CliError(f"unknown heuristic {heuristic!r}")
    apply_mask = bool(_setting(args, config, "mask", True))
    cfg = _mask_config(args, config)
    docs = read_documents(args.input)
    examples, counters = pipeline.extract_corpus(docs, heuristic, cfg, apply_mask)
    manifest = _manifest(
        "extract",
        {"input": args.input, "heuristic": heuristic, "mask": apply_mask,
         "mask_literal": cfg.mask_literal, "mask_all_timexes": cfg.mask_all_timexes,
         "mask_connective_timexes": cfg.mask_connective_timexes},
        {"input": args.input},
    )
    out = _out_path(args, "examples.jsonl")
    _atomic(out, lambda tmp: dataset.write_examples(examples, tmp, manifest=manifest))
    for key in sorted(counters):
        print(f"{key}: {counters[key]}")
    print(f"wrote {len(examples)} examples -> {out}")
    return 0


def cmd_mask(args, config) -> int:
    cfg = _mask_config(args, config)
    examples = dataset.read_examples(args.input)
    masked = []
    dropped = 0
    for ex in examples:
        try:
            masked.append(masker.mask_example(ex, cfg))
        except masker.EventMasked:
            dropped += 1
    manifest = _manifest("mask", {"input": args.input, "mask_literal": cfg.mask_literal},
                         {"input": args.input})
    out = _out_path(args, "masked.jsonl")
    _atomic(out, lambda tmp: dataset.write_examples(masked, tmp, manifest=manifest))
    print(f"masked {len(masked)} examples ({dropped} dropped) -> {out}")
    return 0


def cmd_stats(args, config) -> int:
    examples = dataset.read_examples(args.input)
    if not examples:
        raise CliError("no examples to summarize")
    stats = dataset.dataset_stats(examples)
    mask = masker.mask_stats(examples)
    record = dataset.stats_to_record(stats, mask)
    record["_manifest"] = _manifest("stats", {"input": args.input}, {"input": args.input})
    _write_json(record, _out_path(args, "stats.json"))
    _write_text(dataset.render_stats(stats, mask), _out_path(args, "stats.txt"))
    print(dataset.render_stats(stats, mask))
    return 0


def cmd_split(args, config) -> int:
    fractions = _parse_fractions(_setting(args, config, "split", "0.8,0.2"))
    seed = int(_setting(args, config, "seed", 0))
    examples = dataset.read_examples(args.input)
    train, test = dataset.split(examples, fractions, seed)
    manifest = _manifest("split", {"input": args.input, "fractions": list(fractions),
                                   "seed": seed}, {"input": args.input})
    train_path = _out_path(args, "train.jsonl")
    test_path = _out_path(args, "test.jsonl")
    _atomic(train_path, lambda tmp: dataset.write_examples(train, tmp, manifest=manifest))
    _atomic(test_path, lambda tmp: dataset.write_examples(test, tmp, manifest=manifest))
    print(f"split {len(examples)} examples into {len(train)} train / {len(test)} test")
    return 0


def cmd_sample(args, config) -> int:
    seed = int(_setting(args, config, "seed", 0))
    size = _setting(args, config, "size", None)
    cap = _setting(args, config, "sources-cap", None)
    examples = dataset.read_examples(args.input)
    if cap is not None:
        examples = dataset.balance_by_source(examples, int(cap), seed)
    if size is not None:
        examples = dataset.subsample(examples, int(size), seed)
    manifest = _manifest("sample", {"input": args.input, "size": size,
                                    "sources_cap": cap, "seed": seed},
                         {"input": args.input})
    out = _out_path(args, "sampled.jsonl")
    _atomic(out, lambda tmp: dataset.write_examples(examples, tmp, manifest=manifest))
    print(f"sampled {len(examples)} examples -> {out}")
    return 0


def _labels_for(pairs, examples_path):
    examples = dataset.read_examples(examples_path)
    by_id = {ex.id: ex.label for ex in examples}
    missing = [p.example_id for p in pairs if p.example_id not in by_id]
    if missing:
        raise CliError(f"no labels for example ids {missing[:3]}...")
    return [by_id[p.example_id] for p in pairs]


def cmd_train_head(args, config) -> int:
    seeds = _parse_seeds(_setting(args, config, "seeds", "0"))
    cfg_common = dict(
        lr=float(_setting(args, config, "lr", 0.1)),
        epochs=int(_setting(args, config, "epochs", 500)),
        l2=float(_setting(args, config, "l2", 0.0)),
    )
    pairs = relhead.read_embeddings(args.embeddings)
    labels = _labels_for(pairs, args.examples)
    eval_pairs = eval_labels = None
    if args.eval_embeddings:
        eval_pairs = relhead.read_embeddings(args.eval_embeddings)
        eval_labels = _labels_for(eval_pairs, args.eval_examples or args.examples)
    log = {"seeds": {}, "config": cfg_common}
    for seed in seeds:
        cfg = relhead.TrainConfig(seed=seed, **cfg_common)
        result = relhead.train(pairs, labels, cfg, eval_pairs, eval_labels)
        manifest = _manifest("train-head",
                             {**cfg_common, "seed": seed, "embeddings": args.embeddings,
                              "examples": args.examples},
                             {"embeddings": args.embeddings, "examples": args.examples})
        path = _out_path(args, f"head-{seed}.json")
        relhead.write_head(result.head, path, manifest=manifest)
        entry = {"final_loss": result.losses[-1], "epochs": len(result.losses)}
        if result.eval_f1_by_epoch:
            entry["best_f1"] = result.best_f1
        log["seeds"][str(seed)] = entry
        print(f"seed {seed}: final loss {result.losses[-1]:.4f} -> {path}")
    if eval_pairs is not None:
        best = [log["seeds"][str(s)]["best_f1"] for s in seeds]
        log["avg_best_f1"] = sum(best) / len(best)
    log["_manifest"] = _manifest("train-head", {**cfg_common, "seeds": seeds},
                                 {"embeddings": args.embeddings, "examples": args.examples})
    _write_json(log, _out_path(args, "train_log.json"))
    return 0


def _predictions(args) -> list[list[relhead.Prediction]]:
    sets = []
    if args.preds:
        for path in args.preds:
            sets.append(relhead.read_predictions(path))
    if args.head:
        if not args.embeddings:
            raise CliError("--head requires --embeddings")
        pairs = relhead.read_embeddings(args.embeddings)
        for path in args.head:
            head = relhead.read_head(path)
            sets.append(relhead.predict_batch(head, pairs))
    if not sets:
        raise CliError("provide --preds files or --head files with --embeddings")
    return sets


def cmd_eval(args, config) -> int:
    sets = _predictions(args)
    gold_examples = dataset.read_examples(args.gold)
    gold_by_id = {ex.id: ex.label for ex in gold_examples}
    aligned_golds = []
    for p in sets[0]:
        if p.example_id not in gold_by_id:
            raise CliError(f"prediction for unknown example {p.example_id}")
        aligned_golds.append(gold_by_id[p.example_id])

    reports = [relhead.evaluate(preds, aligned_golds) for preds in sets]
    record: dict = {"models": [relhead.report_to_record(r) for r in reports]}
    text = ""
    if len(sets) > 1:
        record["avg_f1"] = relhead.average_f1(reports)
        ens = relhead.ensemble(sets)
        record["ensemble"] = relhead.report_to_record(relhead.evaluate(ens, aligned_golds))
        text += f"avg f1 over {len(sets)} models: {record['avg_f1']:.1f}\n\nensembled:\n"
        text += relhead.render_report(relhead.evaluate(ens, aligned_golds))
    else:
        text = relhead.render_report(reports[0])
    inputs = {"gold": args.gold}
    for i, path in enumerate(args.preds or []):
        inputs[f"preds{i}"] = path
    for i, path in enumerate(args.head or []):
        inputs[f"head{i}"] = path
    if args.embeddings:
        inputs["embeddings"] = args.embeddings
    record["_manifest"] = _manifest("eval", {"gold": args.gold}, inputs)
    _write_json(record, _out_path(args, "report.json"))
    _write_text(text, _out_path(args, "report.txt"))
    if args.write_preds:
        manifest = record["_manifest"]
        preds = relhead.ensemble(sets) if len(sets) > 1 else sets[0]
        _atomic(_out_path(args, "predictions.jsonl"),
                lambda tmp: relhead.write_predictions(preds, tmp, manifest=manifest))
    print(text)
    return 0


def cmd_ensemble(args, config) -> int:
    sets = _predictions(args)
    combined = relhead.ensemble(sets)
    inputs = {f"preds{i}": p for i, p in enumerate(args.preds or [])}
    for i, path in enumerate(args.head or []):
        inputs[f"head{i}"] = path
    if args.embeddings:
        inputs["embeddings"] = args.embeddings
    manifest = _manifest("ensemble", {"k": len(sets)}, inputs)
    out = _out_path(args, "predictions.jsonl")
    _atomic(out, lambda tmp: relhead.write_predictions(combined, tmp, manifest=manifest))
    print(f"ensembled {len(sets)} models over {len(combined)} examples -> {out}")
    if args.gold:
        golds = dataset.read_examples(args.gold)
        by_id = {ex.id: ex.label for ex in golds}
        aligned = [by_id[p.example_id] for p in combined]
        report = relhead.evaluate(combined, aligned)
        record = relhead.report_to_record(report)
        record["_manifest"] = manifest
        _write_json(record, _out_path(args, "report.json"))
        _write_text(relhead.render_report(report), _out_path(args, "report.txt"))
        print(relhead.render_report(report))
    return 0


def _manifest_of(path) -> dict | None:
    with open(path, encoding="utf-8") as handle:
        head = handle.readline().strip()
        if not head:
            return None
        try:
            rec = json.loads(head)
        except json.JSONDecodeError:
            # whole-file JSON documents (reports, heads)
            handle.seek(0)
            try:
                rec = json.load(handle)
            except json.JSONDecodeError:
                return None
        if isinstance(rec, dict):
            return rec.get("_manifest")
    return None


def cmd_report(args, config) -> int:
    chain = []
    for path in args.artifacts:
        manifest = _manifest_of(path)
        chain.append({
            "artifact": path,
            "sha256": _sha256(path),
            "manifest": manifest,
        })
    record = {"chain": chain}
    lines = []
    for entry in chain:
        lines.append(f"{entry['artifact']}  sha256:{entry['sha256'][:16]}")
        manifest = entry["manifest"]
        if manifest is None:
            lines.append("  (no manifest)")
            continue
        lines.append(f"  produced by: {manifest.get('tool')} {manifest.get('subcommand')}"
                     f" config:{manifest.get('config_hash')}")
        for name, digest in sorted(manifest.get("inputs", {}).items()):
            lines.append(f"  input {name}: sha256:{digest[:16]}")
    text = "\n".join(lines) + "\n"
    _write_json(record, _out_path(args, "provenance.json"))
    _write_text(text, _out_path(args, "provenance.txt"))
    print(text)
    return 0


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempdistill",
        description="Build, mask, and probe distantly-labeled temporal relation datasets.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_input=True):
        p.add_argument("--config", help="JSON config file; flags override its values")
        if needs_input:
            p.add_argument("--input", required=True, help="input file")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ingest", help="validate and normalize a document file")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="harvest labeled event pairs from documents")
    common(p)
    p.add_argument("--heuristic", choices=("beforeafter", "distanttimex", "both"))
    p.add_argument("--mask", dest="mask", action="store_true", default=None)
    p.add_argument("--no-mask", dest="mask", action="store_false", default=None)
    p.add_argument("--mask-literal")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("mask", help="mask cue spans in an example file")
    common(p)
    p.add_argument("--mask-literal")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("stats", help="label/event/tuple statistics for a dataset")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="document-level train/test split")
    common(p)
    p.add_argument("--split", help="train,test fractions, e.g. 0.8,0.2")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("sample", help="source-balanced, seeded subsampling")
    common(p)
    p.add_argument("--size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sources-cap", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train-head", help="train linear heads on exported embeddings")
    common(p, needs_input=False)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--examples", required=True, help="example file supplying labels")
    p.add_argument("--eval-embeddings")
    p.add_argument("--eval-examples")
    p.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--l2", type=float)
    p.set_defaults(func=cmd_train_head)

    p = sub.add_parser("eval", help="score predictions or heads against gold labels")
    common(p, needs_input=False)
    p.add_argument("--gold", required=True, help="gold example file")
    p.add_argument("--preds", nargs="*", help="prediction files")
    p.add_argument("--head", nargs="*", help="head files (with --embeddings)")
    p.add_argument("--embeddings")
    p.add_argument("--write-preds", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ensemble", help="majority-vote combine prediction sets")
    common(p, needs_input=False)
    p.add_argument("--preds", nargs="*")
    p.add_argument("--head", nargs="*")
    p.add_argument("--embeddings")
    p.add_argument("--gold")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("report", help="reconstruct provenance from manifests")
    common(p, needs_input=False)
    p.add_argument("--artifacts", nargs="+", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (CliError, CorpusError, dataset.DatasetError, relhead.RelheadError,
            masker.EventMasked, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
