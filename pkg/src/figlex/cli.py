"""Pipeline orchestration: prepare, analyze, and report subcommands.

Configuration is a line-oriented ``key = value`` file; every key can be
overridden by a command-line flag of the same name.  All outputs are plain
CSV/JSON data files, reproducible byte-for-byte from (inputs, config,
seed).  The FIGLEX_THREADS environment variable caps internal parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .affect import (
    DIMENSIONS,
    compare_vad,
    literal_baseline,
    load_vad_lexicon,
    save_vad_models,
    score_definitions,
    train_vad_models,
    usage_vad_series,
)
from .corpus import balance_groups, load_corpus, save_corpus
from .embeddings import (
    EmbeddingSpace,
    TrainParams,
    load_vectors,
    nearest_neighbors,
    save_vectors,
    sentence_embedding,
    train_sgns,
)
from .lexicon import (
    Lexicon,
    idiom_token,
    literality_score,
    load_lexicon,
    prune_variants,
    replace_entry,
    save_lexicon,
)
from .matcher import (
    build_matcher,
    count_usages,
    write_idiom_counts_csv,
    write_token_counts_csv,
)
from .stats import (
    divergence_gap_test,
    gscore_definition,
    gscore_surface,
    kde,
    log_odds_dirichlet,
    sim_rbo,
    spearman,
)

NEIGHBORS_PER_IDIOM = 10


def thread_cap() -> int:
    """Parallelism limit from FIGLEX_THREADS (default 1)."""
    raw = os.environ.get("FIGLEX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    corpus: str = ""
    lexicon: str = ""
    vad_lexicon: str = ""
    out: str = ""
    seed: int = 0
    groups: tuple[str, str] | None = None
    min_count: int = 50
    literality_threshold: float = 0.25
    rbo_depth: int = 100
    n_splits: int = 500
    baseline_n: int = 100
    train: TrainParams = field(default_factory=TrainParams)

    def out_path(self, name: str) -> Path:
        return Path(self.out) / name


_INT_KEYS = {"seed", "min_count", "rbo_depth", "n_splits", "baseline_n",
             "dim", "window", "negatives", "epochs", "train_min_count"}
_FLOAT_KEYS = {"literality_threshold", "initial_lr"}
_PATH_KEYS = {"corpus", "lexicon", "vad_lexicon", "out"}
_TRAIN_KEY_MAP = {"dim": "dim", "window": "window", "negatives": "negatives",
                  "epochs": "epochs", "train_min_count": "min_count",
                  "initial_lr": "initial_lr"}


def parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def build_config(file_values: dict[str, str], overrides: dict[str, object]) -> RunConfig:
    merged: dict[str, object] = dict(file_values)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value

    config = RunConfig()
    train_kwargs: dict[str, object] = {}
    known = ({f.name for f in fields(RunConfig)} - {"train"}) | set(_TRAIN_KEY_MAP)
    for key, value in merged.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        if key in _INT_KEYS:
            value = int(value)
        elif key in _FLOAT_KEYS:
            value = float(value)
        if key in _TRAIN_KEY_MAP:
            train_kwargs[_TRAIN_KEY_MAP[key]] = value
        elif key == "groups":
            if isinstance(value, str):
                parts = tuple(p.strip() for p in value.split(",") if p.strip())
            else:
                parts = tuple(value)  # type: ignore[arg-type]
            if len(parts) != 2:
                raise ValueError("groups must name exactly two labels")
            config.groups = parts  # type: ignore[assignment]
        else:
            setattr(config, key, value)
    config.train = TrainParams(seed=config.seed, **train_kwargs)  # type: ignore[arg-type]

    if config.min_count < 0:
        raise ValueError("min_count must be nonnegative (0 disables pruning)")
    for key in ("rbo_depth", "n_splits"):
        if getattr(config, key) <= 0:
            raise ValueError(f"{key} must be positive")
    if config.literality_threshold <= 0:
        raise ValueError("literality_threshold must be positive")
    if config.baseline_n < 0:
        raise ValueError("baseline_n must be nonnegative")
    return config


def _write_json(path: Path, payload: object) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _num(value: float | None) -> float | str:
    if value is None:
        return ""
    return float(value)


# ---------------------------------------------------------------------------
# prepare
# ---------------------------------------------------------------------------

def cmd_prepare(config: RunConfig) -> None:
    """Load inputs, balance groups, expand/match/prune the lexicon, train the
    combined embedding space, apply the literality filter, and write the
    prepared artifacts.

    Nothing is written unless every stage succeeds.
    """
    stage = "load"
    try:
        if not config.corpus or not config.lexicon or not config.out:
            raise ValueError("corpus, lexicon and out must be configured")
        corpus = load_corpus(config.corpus, group_labels=config.groups)
        lexicon = load_lexicon(config.lexicon)
        if len(lexicon) == 0:
            raise ValueError("lexicon is empty")

        stage = "balance"
        balanced = balance_groups(corpus, config.seed)

        stage = "count"
        matcher = build_matcher(lexicon)
        counts = count_usages(matcher, balanced)

        stage = "prune"
        pruned = prune_variants(lexicon, counts, config.min_count)

        stage = "embed"
        pruned_matcher = build_matcher(pruned)
        space = train_sgns(balanced, pruned_matcher, config.train)

        stage = "literality"
        filtered = Lexicon()
        literality_rows: list[tuple[str, float | None, str, str]] = []
        for entry in pruned:
            try:
                score = literality_score(entry, space)
            except (ValueError, KeyError) as exc:
                filtered.entries[entry.key] = replace_entry(entry)
                literality_rows.append((entry.key, None, "unscored", str(exc)))
                continue
            if score > config.literality_threshold:
                literality_rows.append((entry.key, score, "removed", ""))
            else:
                filtered.entries[entry.key] = replace_entry(entry, literality=score)
                literality_rows.append((entry.key, score, "kept", ""))
        if len(filtered) == 0:
            raise ValueError("literality filter removed every entry")

        stage = "recount"
        final_matcher = build_matcher(filtered)
        final_counts = count_usages(final_matcher, balanced)

        stage = "write"
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        save_corpus(balanced, str(config.out_path("corpus_balanced.jsonl")))
        save_lexicon(filtered, str(config.out_path("lexicon_filtered.jsonl")))
        write_idiom_counts_csv(final_counts, str(config.out_path("counts_idioms.csv")))
        write_token_counts_csv(final_counts, str(config.out_path("counts_tokens.csv")))
        save_vectors(space, str(config.out_path("vectors_combined.txt")))
        with open(config.out_path("literality_report.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["canonical", "literality", "status", "note"])
            for key, score, status, note in sorted(literality_rows):
                writer.writerow([key, _num(score), status, note])
        totals = balanced.totals()
        _write_json(
            config.out_path("prepare_meta.json"),
            {
                "seed": config.seed,
                "min_count": config.min_count,
                "literality_threshold": config.literality_threshold,
                "group_labels": list(balanced.group_labels),
                "balanced_totals": totals,
                "entries_after_prune": len(pruned),
                "entries_after_literality": len(filtered),
                "train": {
                    "dim": config.train.dim,
                    "window": config.train.window,
                    "negatives": config.train.negatives,
                    "min_count": config.train.min_count,
                    "epochs": config.train.epochs,
                    "initial_lr": config.train.initial_lr,
                },
            },
        )
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _require_artifact(config: RunConfig, name: str) -> Path:
    path = config.out_path(name)
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {path}; run prepare first")
    return path


def cmd_analyze(config: RunConfig) -> None:
    """Run every analysis over the prepared artifacts and emit the report
    data files.

    Stages run in order; on failure, completed outputs are retained and a
    failure marker names the broken stage.
    """
    warnings: list[str] = []
    stage = "load"
    try:
        corpus = load_corpus(str(_require_artifact(config, "corpus_balanced.jsonl")))
        lexicon = load_lexicon(str(_require_artifact(config, "lexicon_filtered.jsonl")))
        space = load_vectors(str(_require_artifact(config, "vectors_combined.txt")))
        if not config.vad_lexicon:
            raise ValueError("vad_lexicon must be configured for analyze")
        vad = load_vad_lexicon(config.vad_lexicon)

        group_a, group_b = sorted(corpus.group_labels)

        stage = "divergence"
        divergence = divergence_gap_test(corpus, lexicon, config.n_splits, config.seed)
        _write_json(
            config.out_path("divergence.json"),
            {
                "cross_jsd": divergence.cross_jsd,
                "baseline_mean": divergence.baseline_mean,
                "baseline_std": divergence.baseline_std,
                "baseline_max": divergence.baseline_max,
                "n_splits": divergence.n_splits,
                "p_empirical": divergence.p_value,
                "z_normal_fit": divergence.z,
                "log_base": 2,
            },
        )

        stage = "gscore"
        matcher = build_matcher(lexicon)
        counts = count_usages(matcher, corpus)
        table = log_odds_dirichlet(
            counts.tokens_for(group_a), counts.tokens_for(group_b), counts.combined_tokens()
        )
        with open(config.out_path("gscore_tokens.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["token", "delta", "sigma", "z"])
            for token in sorted(table.records):
                rec = table.records[token]
                writer.writerow([token, _num(rec.delta), _num(rec.sigma), _num(rec.z)])

        idiom_rows = []
        for canonical in lexicon.canonicals():
            entry = lexicon.get(canonical)
            tok = idiom_token(canonical)
            gi = table.z(tok) if tok in table else None
            try:
                gs = gscore_surface(entry, table)
            except ValueError:
                gs = None
            try:
                gd = gscore_definition(entry, table)
            except ValueError:
                gd = None
            idiom_rows.append(
                {
                    "canonical": canonical,
                    "gscore": gi,
                    "gscore_surface": gs,
                    "gscore_definition": gd,
                    f"count_{group_a}": counts.idiom_counts[canonical][group_a],
                    f"count_{group_b}": counts.idiom_counts[canonical][group_b],
                }
            )
        idiom_rows.sort(key=lambda r: r["canonical"])
        with open(config.out_path("gscore_idioms.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            header = ["canonical", "gscore", "gscore_surface", "gscore_definition",
                      f"count_{group_a}", f"count_{group_b}"]
            writer.writerow(header)
            for row in idiom_rows:
                writer.writerow([row["canonical"], _num(row["gscore"]),
                                 _num(row["gscore_surface"]), _num(row["gscore_definition"]),
                                 row[f"count_{group_a}"], row[f"count_{group_b}"]])

        paired_s = [(r["gscore"], r["gscore_surface"]) for r in idiom_rows
                    if r["gscore"] is not None and r["gscore_surface"] is not None]
        paired_d = [(r["gscore"], r["gscore_definition"]) for r in idiom_rows
                    if r["gscore"] is not None and r["gscore_definition"] is not None]
        rho_s = spearman([p[0] for p in paired_s], [p[1] for p in paired_s])
        rho_d = spearman([p[0] for p in paired_d], [p[1] for p in paired_d])
        _write_json(
            config.out_path("spearman.json"),
            {
                "surface": {"rho": rho_s.statistic, "p_value": rho_s.p_value, "n": rho_s.n_a},
                "definition": {"rho": rho_d.statistic, "p_value": rho_d.p_value, "n": rho_d.n_a},
            },
        )

        stage = "affect"
        models = train_vad_models(space, vad, max_workers=thread_cap())
        save_vad_models(models, str(config.out_path("vad_models.json")))

        def embedder(tokens):
            return sentence_embedding(space, tokens)

        scores = score_definitions(lexicon, embedder, models)
        with open(config.out_path("vad_scores.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["canonical", *DIMENSIONS])
            for canonical in sorted(scores.values):
                writer.writerow([canonical, *(_num(v) for v in scores.values[canonical])])

        series_a = usage_vad_series(counts, scores, group_a)
        series_b = usage_vad_series(counts, scores, group_b)
        comparison = compare_vad(series_a, series_b)
        _write_comparison_csv(config.out_path("vad_comparison.csv"), comparison, group_a, group_b)

        with open(config.out_path("kde_curves.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["dimension", "group", "x", "density"])
            for series_set in (series_a, series_b):
                for series in series_set:
                    try:
                        curve = kde(series.values)
                    except ValueError as exc:
                        warnings.append(
                            f"kde skipped for {series.dimension}/{series.group}: {exc}"
                        )
                        continue
                    for x, density in zip(curve.x, curve.density):
                        writer.writerow([series.dimension, series.group, _num(x), _num(density)])

        literal = literal_baseline(
            corpus, matcher, embedder, models, config.baseline_n, config.seed
        )
        literal_cmp = compare_vad(literal[group_a], literal[group_b])
        _write_comparison_csv(
            config.out_path("literal_baseline.csv"), literal_cmp, group_a, group_b
        )

        stage = "embeddings"
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(config.seed).spawn(2)]
        spaces: dict[str, EmbeddingSpace] = {}
        for group, child_seed in zip((group_a, group_b), seeds):
            params = TrainParams(
                dim=config.train.dim, window=config.train.window,
                negatives=config.train.negatives, min_count=config.train.min_count,
                epochs=config.train.epochs, initial_lr=config.train.initial_lr,
                seed=child_seed,
            )
            sub = corpus.subset(corpus.group_posts(group))
            spaces[group] = train_sgns(sub, matcher, params)
            save_vectors(spaces[group], str(config.out_path(f"vectors_{group}.txt")))

        depth = config.rbo_depth
        rbo_rows = []
        neighbor_rows = []
        for canonical in lexicon.canonicals():
            tok = idiom_token(canonical)
            if any(tok not in spaces[g] or len(spaces[g].vocab) - 1 < depth
                   for g in (group_a, group_b)):
                continue
            lists = {}
            for g in (group_a, group_b):
                ranked = nearest_neighbors(spaces[g], tok, depth)
                lists[g] = [t for t, _ in ranked.neighbors]
                for rank, (t, cos) in enumerate(ranked.neighbors[:NEIGHBORS_PER_IDIOM], start=1):
                    neighbor_rows.append([canonical, g, rank, t, cos])
            rbo_rows.append([canonical, sim_rbo(lists[group_a], lists[group_b], depth)])
        rbo_rows.sort(key=lambda r: (r[1], r[0]))
        with open(config.out_path("simrbo.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["canonical", "simrbo"])
            for canonical, value in rbo_rows:
                writer.writerow([canonical, _num(value)])
        with open(config.out_path("neighbors.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["canonical", "group", "rank", "token", "cosine"])
            for canonical, g, rank, t, cos in sorted(neighbor_rows):
                writer.writerow([canonical, g, rank, t, _num(cos)])
        if not rbo_rows:
            warnings.append(
                f"no idiom token present in both group vocabularies with {depth} neighbors"
            )

        stage = "figures"
        with open(config.out_path("fig_gscore_vs_count.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["canonical", "log10_count", "gscore"])
            for row in idiom_rows:
                total = row[f"count_{group_a}"] + row[f"count_{group_b}"]
                if total > 0 and row["gscore"] is not None:
                    writer.writerow([row["canonical"], _num(math.log10(total)), _num(row["gscore"])])

        _write_json(
            config.out_path("run_meta.json"),
            {
                "seed": config.seed,
                "group_labels": [group_a, group_b],
                "positive_group": group_a,
                "thresholds": {
                    "min_count": config.min_count,
                    "literality_threshold": config.literality_threshold,
                    "rbo_depth": config.rbo_depth,
                    "n_splits": config.n_splits,
                    "baseline_n": config.baseline_n,
                },
                "jsd_log_base": 2,
                "divergence_p": "empirical (r+1)/(n+1) over pooled within-group splits; "
                                "z from a normal fit to the same baseline",
                "significance_stars": {"*": "p<.01", "**": "p<.001"},
                "warnings": warnings,
            },
        )
    except StageError:
        raise
    except Exception as exc:
        err = StageError(stage, exc)
        out = Path(config.out)
        if out.is_dir():
            _write_json(config.out_path("failure.json"), {"stage": stage, "error": str(exc)})
        raise err from exc


def _write_comparison_csv(path: Path, comparison, group_a: str, group_b: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv_writer(fh)
        writer.writerow(["dimension", f"mean_{group_a}", f"mean_{group_b}",
                         "cohens_d", "p_value", "stars", f"n_{group_a}", f"n_{group_b}"])
        for row in comparison:
            writer.writerow([row.dimension, _num(row.mean_a), _num(row.mean_b),
                             _num(row.cohens_d), _num(row.p_value), row.stars,
                             row.n_a, row.n_b])


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _maybe_float(text: str) -> float | int | str | None:
    if text == "":
        return None
    try:
        as_int = int(text)
        return as_int
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def build_report(config: RunConfig) -> dict:
    """Assemble the consolidated report document from analyze artifacts."""
    meta = json.loads(_require_artifact(config, "run_meta.json").read_text("utf-8"))
    divergence = json.loads(_require_artifact(config, "divergence.json").read_text("utf-8"))
    spearman_doc = json.loads(_require_artifact(config, "spearman.json").read_text("utf-8"))

    def rows(name: str) -> list[dict]:
        return [
            {k: _maybe_float(v) for k, v in row.items()}
            for row in _read_csv(_require_artifact(config, name))
        ]

    kde_rows = rows("kde_curves.csv")
    curves: dict[tuple[str, str], dict] = {}
    for row in kde_rows:
        key = (str(row["dimension"]), str(row["group"]))
        curve = curves.setdefault(
            key, {"dimension": key[0], "group": key[1], "x": [], "density": []}
        )
        curve["x"].append(row["x"])
        curve["density"].append(row["density"])

    return {
        "metadata": meta,
        "divergence": divergence,
        "spearman": spearman_doc,
        "gscore_idioms": rows("gscore_idioms.csv"),
        "vad_comparison": rows("vad_comparison.csv"),
        "literal_baseline": rows("literal_baseline.csv"),
        "simrbo": rows("simrbo.csv"),
        "figures": {
            "gscore_vs_count": rows("fig_gscore_vs_count.csv"),
            "kde": [curves[k] for k in sorted(curves)],
        },
    }


def flatten_report(doc: object, prefix: str = "") -> list[tuple[str, str]]:
    """Depth-first (path, json-scalar) rows; shared by the CSV export and
    the cross-format equality tests."""
    rows: list[tuple[str, str]] = []
    if isinstance(doc, dict):
        for key in sorted(doc):
            rows.extend(flatten_report(doc[key], f"{prefix}{key}."))
    elif isinstance(doc, list):
        for i, item in enumerate(doc):
            rows.extend(flatten_report(item, f"{prefix}{i}."))
    else:
        rows.append((prefix.rstrip("."), json.dumps(doc)))
    return rows


def cmd_report(config: RunConfig, format: str) -> None:
    """Write the consolidated bundle as report.json or report.csv."""
    stage = "report"
    try:
        if format not in ("csv", "json"):
            raise ValueError(f"unknown format {format!r}")
        doc = build_report(config)
        if format == "json":
            _write_json(config.out_path("report.json"), doc)
        else:
            with open(config.out_path("report.csv"), "w", newline="", encoding="utf-8") as fh:
                writer = _csv_writer(fh)
                writer.writerow(["path", "value"])
                for path, value in flatten_report(doc):
                    writer.writerow([path, value])
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a 'key = value' config file")
    parser.add_argument("--corpus", help="corpus JSONL path")
    parser.add_argument("--lexicon", help="lexicon JSONL path")
    parser.add_argument("--vad-lexicon", dest="vad_lexicon", help="VAD ratings CSV path")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--groups", help="comma-separated pair of group labels")
    parser.add_argument("--min-count", dest="min_count", type=int)
    parser.add_argument("--literality-threshold", dest="literality_threshold", type=float)
    parser.add_argument("--rbo-depth", dest="rbo_depth", type=int)
    parser.add_argument("--n-splits", dest="n_splits", type=int)
    parser.add_argument("--baseline-n", dest="baseline_n", type=int)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--negatives", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--train-min-count", dest="train_min_count", type=int)
    parser.add_argument("--initial-lr", dest="initial_lr", type=float)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    override_keys = (
        set(_PATH_KEYS) | _INT_KEYS | _FLOAT_KEYS | {"groups"}
    )
    overrides = {k: getattr(args, k, None) for k in override_keys}
    return build_config(file_values, overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figlex",
        description="Contrast two author groups' idiomatic language usage.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("prepare", "build the filtered lexicon, counts, and combined embeddings"),
        ("analyze", "run all group-contrast analyses over prepared artifacts"),
        ("report", "export the consolidated report bundle"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_common_flags(p)
        if name == "report":
            p.add_argument("--format", choices=("csv", "json"), required=True)

    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "prepare":
            cmd_prepare(config)
        elif args.command == "analyze":
            cmd_analyze(config)
        else:
            cmd_report(config, args.format)
    except StageError as exc:
        print(f"error in {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # config/usage problems
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
