"""Group-labelled corpora: loading, tokenization, balancing, and random splits.

A corpus is an ordered collection of posts, each tagged with one of two
group labels.  All randomized operations take an explicit seed and are
pure functions of (input, seed).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

# Lowercase tokens, never empty.  Plain lists keep downstream code simple.
TokenSeq = list[str]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
# Runs of word characters (underscores excluded), optionally joined by
# internal apostrophes so "don't" and "one's" survive as single tokens.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def tokenize(text: str) -> TokenSeq:
    """Lowercase `text` and split it into tokens.

    URLs are stripped before splitting; punctuation separates tokens except
    for apostrophes inside a word.  Idempotent on its own space-joined
    output.
    """
    cleaned = _URL_RE.sub(" ", text)
    cleaned = cleaned.replace("’", "'")
    return _TOKEN_RE.findall(cleaned.lower())


@dataclass(frozen=True)
class Post:
    """One document by one author, already tokenized."""

    author_id: str
    group: str
    text: str
    tokens: tuple[str, ...]
    subreddit: str | None = None

    @property
    def token_count(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered post collection over exactly two group labels."""

    posts: tuple[Post, ...]
    group_labels: tuple[str, str]

    def __len__(self) -> int:
        return len(self.posts)

    def group_posts(self, group: str) -> list[Post]:
        self._check_group(group)
        return [p for p in self.posts if p.group == group]

    def totals(self) -> dict[str, dict[str, int]]:
        """Exact per-group post and token counts."""
        out = {g: {"posts": 0, "tokens": 0} for g in self.group_labels}
        for p in self.posts:
            out[p.group]["posts"] += 1
            out[p.group]["tokens"] += p.token_count
        return out

    def token_totals(self) -> dict[str, int]:
        return {g: t["tokens"] for g, t in self.totals().items()}

    def subset(self, posts: list[Post] | tuple[Post, ...]) -> "Corpus":
        return Corpus(posts=tuple(posts), group_labels=self.group_labels)

    def _check_group(self, group: str) -> None:
        if group not in self.group_labels:
            raise ValueError(f"unknown group {group!r}; labels are {self.group_labels}")


def load_corpus(path: str, group_labels: tuple[str, str] | None = None) -> Corpus:
    """Read a corpus from a JSON-lines file.

    Each line is an object with required keys ``author_id``, ``group`` and
    ``text`` (``subreddit``/``timestamp`` optional).  Lines starting with
    '#' and blank lines are skipped.  When `group_labels` is omitted the
    two labels are inferred from the file in first-seen order; a third
    distinct label is an error either way.
    """
    posts: list[Post] = []
    seen_labels: list[str] = []
    declared = tuple(group_labels) if group_labels is not None else None
    if declared is not None and (len(declared) != 2 or declared[0] == declared[1]):
        raise ValueError(f"group_labels must be two distinct labels, got {declared!r}")

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise ValueError(f"line {lineno}: expected a JSON object")
            for key in ("author_id", "group", "text"):
                if key not in rec or not isinstance(rec[key], str):
                    raise ValueError(f"line {lineno}: missing or non-string key {key!r}")
            group = rec["group"]
            if declared is not None:
                if group not in declared:
                    raise ValueError(f"line {lineno}: unknown group {group}")
            elif group not in seen_labels:
                seen_labels.append(group)
                if len(seen_labels) > 2:
                    raise ValueError(f"line {lineno}: unknown group {group}")
            posts.append(
                Post(
                    author_id=rec["author_id"],
                    group=group,
                    text=rec["text"],
                    tokens=tuple(tokenize(rec["text"])),
                    subreddit=rec.get("subreddit"),
                )
            )

    if declared is None:
        if len(seen_labels) < 2:
            raise ValueError(
                f"corpus declares {len(seen_labels)} group label(s); pass group_labels explicitly"
            )
        declared = (seen_labels[0], seen_labels[1])
    return Corpus(posts=tuple(posts), group_labels=declared)


def save_corpus(corpus: Corpus, path: str) -> None:
    """Write a corpus back to the JSON-lines format accepted by load_corpus."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus.posts:
            rec: dict[str, str] = {"author_id": p.author_id, "group": p.group, "text": p.text}
            if p.subreddit is not None:
                rec["subreddit"] = p.subreddit
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def balance_groups(corpus: Corpus, seed: int) -> Corpus:
    """Downsample whole posts from the larger-token group.

    Posts are removed in random order until the larger group's token total
    no longer exceeds the smaller's, so the residual imbalance is bounded
    by the last removed post's length.  Posts are never truncated and the
    smaller group is never touched.
    """
    totals = corpus.token_totals()
    a, b = corpus.group_labels
    for g in (a, b):
        if not any(p.group == g for p in corpus.posts):
            raise ValueError(f"group {g!r} has no posts")
    if totals[a] == totals[b]:
        return corpus

    larger, smaller = (a, b) if totals[a] > totals[b] else (b, a)
    larger_idx = [i for i, p in enumerate(corpus.posts) if p.group == larger]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(larger_idx))

    diff = totals[larger] - totals[smaller]
    removed: set[int] = set()
    for j in order:
        if diff <= 0:
            break
        i = larger_idx[j]
        removed.add(i)
        diff -= corpus.posts[i].token_count
    return corpus.subset([p for i, p in enumerate(corpus.posts) if i not in removed])


def random_halves(corpus: Corpus, group: str, seed: int) -> tuple[Corpus, Corpus]:
    """Partition one group's posts into two halves of near-equal token totals.

    The partition is exhaustive and disjoint; posts are assigned in random
    order to whichever half currently has fewer tokens.
    """
    corpus._check_group(group)
    posts = corpus.group_posts(group)
    if len(posts) < 2:
        raise ValueError(f"group {group!r} has fewer than 2 posts")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(posts))
    first: list[Post] = []
    second: list[Post] = []
    tot = [(0, 0), (0, 0)]  # (tokens, posts) per half
    for j in order:
        p = posts[j]
        side = 0 if tot[0] <= tot[1] else 1
        (first if side == 0 else second).append(p)
        tok, cnt = tot[side]
        tot[side] = (tok + p.token_count, cnt + 1)
    return corpus.subset(first), corpus.subset(second)
