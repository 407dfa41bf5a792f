"""The whole pipeline through the command-line interface.

Runs prepare -> analyze -> report on the shipped fixture and prints the
headline numbers from the emitted artifacts.  Equivalent shell usage:

    figlex prepare --config tests/data/fixture.conf --out out/fixture
    figlex analyze --config tests/data/fixture.conf --out out/fixture
    figlex report  --config tests/data/fixture.conf --out out/fixture --format json
"""

import json
import tempfile
from pathlib import Path

from figlex.cli import main

REPO = Path(__file__).parent.parent

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "fixture"
    config = str(REPO / "tests" / "data" / "fixture.conf")
    base = ["--config", config, "--out", str(out),
            "--corpus", str(REPO / "tests/data/corpus_fixture.jsonl"),
            "--lexicon", str(REPO / "tests/data/lexicon_fixture.jsonl"),
            "--vad-lexicon", str(REPO / "tests/data/vad_fixture.csv")]

    print("running prepare ...")
    assert main(["prepare", *base]) == 0
    print("running analyze ...")
    assert main(["analyze", *base]) == 0
    print("running report ...")
    assert main(["report", *base, "--format", "json"]) == 0

    report = json.loads((out / "report.json").read_text())
    divergence = report["divergence"]
    print("\n== headline numbers ==")
    print(f"  cross-group JSD {divergence['cross_jsd']:.3f} vs within-group "
          f"baselines {divergence['baseline_mean']} (p={divergence['p_empirical']:.2g})")
    spearman_doc = report["spearman"]
    print(f"  surface-form correlation rho={spearman_doc['surface']['rho']:.3f}, "
          f"definition rho={spearman_doc['definition']['rho']:.3f}")
    for row in report["vad_comparison"]:
        stars = row["stars"] or ""
        print(f"  {row['dimension']:>9}: d={row['cohens_d']:+.2f} "
              f"(p={row['p_value']:.2g}{stars})")
    lowest = report["simrbo"][0]
    print(f"  most context-shifted idiom: {lowest['canonical']!r} "
          f"(overlap {lowest['simrbo']:.3f})")
    print(f"\nall artifacts were written under {out.name}/ "
          f"({len(list(out.iterdir()))} files)")
