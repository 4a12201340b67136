import json
from importlib import resources

import pytest

from tempdistill.corpus import document_from_record


def fixture_path(name: str):
    return resources.files("tempdistill.data").joinpath(name)


def load_fixture_docs(name: str):
    docs = []
    with fixture_path(name).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                docs.append(document_from_record(json.loads(line)))
    return docs


@pytest.fixture(scope="session")
def corpus_docs():
    return load_fixture_docs("fixture_corpus.jsonl")


@pytest.fixture(scope="session")
def inference_doc():
    return load_fixture_docs("fixture_inference.jsonl")[0]


@pytest.fixture(scope="session")
def masking_doc():
    return load_fixture_docs("fixture_masking.jsonl")[0]
