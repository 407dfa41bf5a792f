import json
from pathlib import Path

import pytest

from figlex.corpus import Corpus, Post, tokenize

DATA_DIR = Path(__file__).parent / "data"


def make_post(text: str, group: str = "A", author: str = "a0") -> Post:
    return Post(author_id=author, group=group, text=text, tokens=tuple(tokenize(text)))


def make_corpus(texts_by_group: dict[str, list[str]], labels=None) -> Corpus:
    posts = []
    for group, texts in texts_by_group.items():
        for i, text in enumerate(texts):
            posts.append(make_post(text, group=group, author=f"{group}{i}"))
    labels = labels or tuple(texts_by_group)
    return Corpus(posts=tuple(posts), group_labels=tuple(labels))


def write_jsonl(path: Path, records: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
