"""Closed-form statistics for contrasting two groups' idiom usage.

Contents: usage distributions and Jensen-Shannon divergence (base 2, so
values live in [0, 1]) with a random-split baseline test; log-odds ratio
with an informative Dirichlet prior and the derived per-idiom association
scores; Spearman rank correlation; Wilcoxon rank-sum with exact
enumeration at small sizes; Cohen's d; rank-weighted prefix overlap of
ranked lists; and Gaussian kernel density estimation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.special import stdtr

from .corpus import Corpus, random_halves
from .lexicon import IdiomEntry, Lexicon
from .matcher import GroupCounts, build_matcher, find_matches


@dataclass(frozen=True)
class Distribution:
    """A probability distribution over an ordered support of idiom keys."""

    support: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        if len(self.support) != len(set(self.support)):
            raise ValueError("support entries must be unique")
        if self.probs.shape != (len(self.support),):
            raise ValueError("probs must parallel support")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {float(self.probs.sum())}, not 1")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n_a: int
    n_b: int
    effect_size: float | None = None


@dataclass
class DivergenceResult:
    """Cross-group divergence against within-group random-split baselines."""

    cross_jsd: float
    baseline_mean: dict[str, float]
    baseline_std: dict[str, float]
    baseline_max: dict[str, float]
    baseline_samples: dict[str, np.ndarray]
    n_splits: int
    p_value: float  # smoothed empirical: (exceedances + 1) / (pooled + 1)
    z: float        # normal fit to the pooled baseline


def usage_distribution(counts: GroupCounts, group: str) -> Distribution:
    """Normalize one group's idiom counts over the lexicon's canonical list."""
    if group not in counts.groups:
        raise ValueError(f"unknown group {group!r}")
    support = tuple(counts.idiom_counts.keys())
    raw = np.array([counts.idiom_counts[c][group] for c in support], dtype=np.float64)
    total = float(raw.sum())
    if total <= 0:
        raise ValueError(f"group {group!r} has zero idiom usage")
    return Distribution(support=support, probs=raw / total)


def jsd(p: Distribution, q: Distribution) -> float:
    """Jensen-Shannon divergence in base 2, with 0*log(0) := 0."""
    if p.support != q.support:
        raise ValueError("distributions must share an identical support")
    m = 0.5 * (p.probs + q.probs)

    def _kl(a: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

    value = 0.5 * _kl(p.probs) + 0.5 * _kl(q.probs)
    return float(min(max(value, 0.0), 1.0))


def divergence_gap_test(
    corpus: Corpus, lexicon: Lexicon, n_splits: int = 500, seed: int = 0
) -> DivergenceResult:
    """Compare the cross-group usage divergence with within-group baselines.

    The cross-group JSD is contrasted against `n_splits` random half-half
    splits inside each group.  The reported p-value is the smoothed
    fraction of pooled baseline samples at least as large as the observed
    value; z is measured against a normal fit to the pooled baseline.
    """
    if n_splits < 2:
        raise ValueError("n_splits must be >= 2")
    matcher = build_matcher(lexicon)
    support = tuple(lexicon.canonicals())
    per_post = {
        id(p): Counter(m.canonical for m in find_matches(matcher, list(p.tokens)))
        for p in corpus.posts
    }

    def distribution(posts) -> Distribution:
        agg: Counter = Counter()
        for p in posts:
            agg.update(per_post[id(p)])
        raw = np.array([agg.get(c, 0) for c in support], dtype=np.float64)
        total = float(raw.sum())
        if total <= 0:
            raise ValueError("a post sample has zero idiom usage; corpus too sparse")
        return Distribution(support=support, probs=raw / total)

    ga, gb = corpus.group_labels
    cross = jsd(distribution(corpus.group_posts(ga)), distribution(corpus.group_posts(gb)))

    children = np.random.SeedSequence(seed).spawn(2 * n_splits)
    samples: dict[str, np.ndarray] = {}
    for gi, g in enumerate((ga, gb)):
        vals = np.empty(n_splits, dtype=np.float64)
        for s in range(n_splits):
            child_seed = int(children[gi * n_splits + s].generate_state(1)[0])
            h1, h2 = random_halves(corpus, g, child_seed)
            vals[s] = jsd(distribution(h1.posts), distribution(h2.posts))
        samples[g] = vals

    pooled = np.concatenate([samples[ga], samples[gb]])
    exceed = int(np.sum(pooled >= cross))
    p_value = (exceed + 1) / (pooled.size + 1)
    std = float(pooled.std(ddof=1))
    if std > 0:
        z = (cross - float(pooled.mean())) / std
    else:
        z = 0.0 if cross == float(pooled.mean()) else math.inf
    return DivergenceResult(
        cross_jsd=cross,
        baseline_mean={g: float(samples[g].mean()) for g in (ga, gb)},
        baseline_std={g: float(samples[g].std(ddof=1)) for g in (ga, gb)},
        baseline_max={g: float(samples[g].max()) for g in (ga, gb)},
        baseline_samples=samples,
        n_splits=n_splits,
        p_value=float(p_value),
        z=float(z),
    )


@dataclass(frozen=True)
class GScore:
    delta: float
    sigma: float
    z: float


@dataclass
class GScoreTable:
    """Per-token group-association scores; positive favors corpus a."""

    records: dict[str, GScore]
    n_a: int
    n_b: int
    prior_total: float

    def __contains__(self, token: str) -> bool:
        return token in self.records

    def z(self, token: str) -> float:
        return self.records[token].z

    def delta(self, token: str) -> float:
        return self.records[token].delta


def log_odds_dirichlet(
    counts_a: Mapping[str, int],
    counts_b: Mapping[str, int],
    prior: Mapping[str, float],
) -> GScoreTable:
    """Log-odds ratio of two corpora with an informative Dirichlet prior.

    For every scored token w (the union of the three key sets):

        delta_w = ln((y_w^a + a_w) / (n^a + a_0 - y_w^a - a_w))
                - ln((y_w^b + a_w) / (n^b + a_0 - y_w^b - a_w))
        sigma_w^2 = 1/(y_w^a + a_w) + 1/(y_w^b + a_w)
        z_w = delta_w / sigma_w

    Natural log; swapping the corpora negates delta and z exactly.
    """
    tokens = sorted(set(counts_a) | set(counts_b) | set(prior))
    for t in tokens:
        if prior.get(t, 0) <= 0:
            raise ValueError(f"prior must be strictly positive for every token; {t!r} is not")
    n_a = sum(counts_a.values())
    n_b = sum(counts_b.values())
    a0 = float(sum(prior.values()))

    records: dict[str, GScore] = {}
    for t in tokens:
        ya = counts_a.get(t, 0)
        yb = counts_b.get(t, 0)
        aw = float(prior[t])
        rest_a = n_a + a0 - ya - aw
        rest_b = n_b + a0 - yb - aw
        if rest_a <= 0 or rest_b <= 0:
            raise ValueError(
                f"token {t!r} carries all the mass of a corpus; log-odds undefined"
            )
        delta = math.log((ya + aw) / rest_a) - math.log((yb + aw) / rest_b)
        sigma = math.sqrt(1.0 / (ya + aw) + 1.0 / (yb + aw))
        records[t] = GScore(delta=delta, sigma=sigma, z=delta / sigma)
    return GScoreTable(records=records, n_a=n_a, n_b=n_b, prior_total=a0)


def _mean_word_score(words: Sequence[str], table: GScoreTable, what: str) -> float:
    unique = list(dict.fromkeys(words))
    scored = [table.z(w) for w in unique if w in table]
    if not scored:
        raise ValueError(f"no {what} word present in the score table")
    return float(sum(scored) / len(scored))


def gscore_surface(entry: IdiomEntry, table: GScoreTable) -> float:
    """Mean association score over the canonical-form word set."""
    return _mean_word_score(entry.canonical, table, "surface")


def gscore_definition(entry: IdiomEntry, table: GScoreTable) -> float:
    """Mean association score over the definition word set."""
    return _mean_word_score(entry.definition, table, "definition")


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Spearman rank correlation with average ranks for ties.

    p-value by the t approximation with n-2 degrees of freedom.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("series must be one-dimensional and of equal length")
    n = len(xa)
    if n < 3:
        raise ValueError("need at least 3 observations")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise ValueError("constant series have no rank correlation")

    rx = _average_ranks(xa)
    ry = _average_ranks(ya)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(np.dot(rx, ry) / math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry))))
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return TestResult(statistic=rho, p_value=min(p, 1.0), n_a=n, n_b=n)


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def wilcoxon_ranksum(
    x: Sequence[float], y: Sequence[float], method: str = "auto"
) -> TestResult:
    """Two-sided rank-sum test with average ranks for ties.

    The statistic is the rank sum of `x`.  When the pooled size is at most
    12 (or method="exact"), the p-value is computed by exhaustive
    enumeration of rank assignments; otherwise by the normal approximation
    with tie and continuity corrections.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.size == 0 or ya.size == 0:
        raise ValueError("both samples must be nonempty")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    nx, ny = int(xa.size), int(ya.size)
    n = nx + ny
    pooled = np.concatenate([xa, ya])
    ranks = _average_ranks(pooled)
    w = float(ranks[:nx].sum())
    mu = nx * (n + 1) / 2.0

    use_exact = method == "exact" or (method == "auto" and n <= 12)
    if use_exact:
        d = abs(w - mu)
        count = 0
        total = 0
        for combo in combinations(ranks, nx):
            total += 1
            if abs(sum(combo) - mu) >= d - 1e-9:
                count += 1
        p = count / total
    else:
        _, tie_counts = np.unique(pooled, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1))
        var = nx * ny / 12.0 * ((n + 1) - tie_term)
        if var <= 0:
            p = 1.0
        else:
            z = max(0.0, abs(w - mu) - 0.5) / math.sqrt(var)
            p = min(1.0, 2.0 * _normal_sf(z))
    return TestResult(statistic=w, p_value=float(p), n_a=nx, n_b=ny)


def cohens_d(x: Sequence[float], y: Sequence[float]) -> float:
    """Standardized mean difference with the pooled (n-1) standard deviation."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.size < 2 or ya.size < 2:
        raise ValueError("both samples need at least 2 observations")
    nx, ny = xa.size, ya.size
    pooled_var = ((nx - 1) * xa.var(ddof=1) + (ny - 1) * ya.var(ddof=1)) / (nx + ny - 2)
    if pooled_var <= 0:
        raise ValueError("zero pooled standard deviation")
    return float((xa.mean() - ya.mean()) / math.sqrt(pooled_var))


def sim_rbo(list_a: Sequence[str], list_b: Sequence[str], depth: int = 100) -> float:
    """Rank-weighted overlap of two ranked lists.

    Mean over k = 1..depth of |prefix_k(a) n prefix_k(b)| / k, so agreement
    near the top weighs more than agreement further down.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if len(list_a) < depth or len(list_b) < depth:
        raise ValueError(f"both lists must have at least depth={depth} entries")
    if len(set(list_a[:depth])) != depth or len(set(list_b[:depth])) != depth:
        raise ValueError("list entries must be unique")

    seen_a: set[str] = set()
    seen_b: set[str] = set()
    overlap = 0
    acc = 0.0
    for k in range(depth):
        a, b = list_a[k], list_b[k]
        if a == b:
            overlap += 1
        else:
            if a in seen_b:
                overlap += 1
            if b in seen_a:
                overlap += 1
            seen_a.add(a)
            seen_b.add(b)
        acc += overlap / (k + 1)
    return acc / depth


@dataclass
class KdeCurve:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float


def kde(values: Sequence[float], bandwidth: float | None = None) -> KdeCurve:
    """Gaussian kernel density estimate on 256 grid points.

    The default bandwidth is Silverman's rule of thumb,
    0.9 * min(sd, IQR/1.34) * n^(-1/5); the grid spans the data range
    extended by three bandwidths on each side.
    """
    data = np.asarray(values, dtype=np.float64)
    if data.ndim != 1 or data.size < 2:
        raise ValueError("need at least 2 values")
    n = data.size
    if bandwidth is None:
        sd = float(data.std(ddof=1))
        iqr = float(np.percentile(data, 75) - np.percentile(data, 25))
        spread = min(sd, iqr / 1.34) if iqr > 0 else sd
        if spread <= 0:
            raise ValueError("zero variance; pass an explicit bandwidth")
        bandwidth = 0.9 * spread * n ** (-0.2)
    elif bandwidth <= 0:
        raise ValueError("bandwidth must be positive")

    h = float(bandwidth)
    grid = np.linspace(data.min() - 3 * h, data.max() + 3 * h, 256)
    density = np.zeros_like(grid)
    norm = 1.0 / (n * h * math.sqrt(2.0 * math.pi))
    for start in range(0, n, 4096):
        chunk = data[start : start + 4096]
        zsq = ((grid[:, None] - chunk[None, :]) / h) ** 2
        density += np.exp(-0.5 * zsq).sum(axis=1)
    return KdeCurve(x=grid, density=density * norm, bandwidth=h)
