"""Affect induction over idiom definitions and group comparison.

Three beta-regression models (one per affect dimension: valence, arousal,
dominance) are fit by maximum likelihood on word-level human ratings in
[0, 1], with word embeddings as features and a logit mean link.  The
fitted models score idiom definitions through their sentence embeddings;
count-weighted usage series are then compared across groups.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import digamma, expit, gammaln, logit

from .corpus import Corpus
from .embeddings import EmbeddingSpace
from .lexicon import Lexicon
from .matcher import GroupCounts, Matcher, find_matches
from .stats import cohens_d, wilcoxon_ranksum

DIMENSIONS = ("valence", "arousal", "dominance")

_TARGET_EPS = 1e-4      # beta log-likelihood diverges at {0, 1}
_PREDICT_EPS = 1e-12
_LOG_PHI_MAX = math.log(1e8)

Embedder = Callable[[Sequence[str]], np.ndarray]


@dataclass
class VadLexicon:
    """word -> (valence, arousal, dominance), each rated in [0, 1]."""

    ratings: dict[str, tuple[float, float, float]]

    def __len__(self) -> int:
        return len(self.ratings)

    def __contains__(self, word: str) -> bool:
        return word in self.ratings


def load_vad_lexicon(path: str) -> VadLexicon:
    """Read a CSV with header columns word, valence, arousal, dominance."""
    ratings: dict[str, tuple[float, float, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"word", "valence", "arousal", "dominance"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"VAD lexicon must have columns {sorted(required)}")
        for row_no, row in enumerate(reader, start=2):
            word = row["word"].strip()
            vals = tuple(float(row[d]) for d in DIMENSIONS)
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError(f"row {row_no}: ratings must lie in [0, 1]")
            ratings[word] = vals  # type: ignore[assignment]
    return VadLexicon(ratings=ratings)


@dataclass
class VadModel:
    dimension: str
    coefficients: np.ndarray  # length dim+1, intercept first
    precision: float
    link: str = "logit"
    ll_history: list[float] = field(default_factory=list, repr=False)
    n_iter: int = 0

    def __post_init__(self) -> None:
        if self.precision <= 0:
            raise ValueError("precision must be positive")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")


@dataclass
class VadScores:
    """canonical -> (valence, arousal, dominance), predicted from definitions."""

    values: dict[str, tuple[float, float, float]]

    def __contains__(self, canonical: str) -> bool:
        return canonical in self.values

    def get(self, canonical: str) -> tuple[float, float, float]:
        return self.values[canonical]


@dataclass
class UsageSeries:
    dimension: str
    group: str
    values: np.ndarray


@dataclass(frozen=True)
class VadComparison:
    dimension: str
    mean_a: float
    mean_b: float
    p_value: float
    cohens_d: float
    stars: str
    n_a: int
    n_b: int


def _design(features: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((features.shape[0], 1)), features])


def beta_log_likelihood(params: np.ndarray, features: np.ndarray, targets: np.ndarray) -> float:
    """Mean beta log-likelihood at params = (coefficients..., log phi).

    The mean scale keeps gradient magnitudes comparable across sample
    sizes, which is what the convergence tolerance is measured against.
    """
    coeffs, log_phi = params[:-1], params[-1]
    phi = math.exp(log_phi)
    mu = np.clip(expit(_design(features) @ coeffs), 1e-12, 1.0 - 1e-12)
    ll = (
        gammaln(phi)
        - gammaln(mu * phi)
        - gammaln((1.0 - mu) * phi)
        + (mu * phi - 1.0) * np.log(targets)
        + ((1.0 - mu) * phi - 1.0) * np.log(1.0 - targets)
    )
    return float(ll.mean())


def beta_log_likelihood_grad(
    params: np.ndarray, features: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Analytic gradient of `beta_log_likelihood` in coefficients and log phi."""
    coeffs, log_phi = params[:-1], params[-1]
    phi = math.exp(log_phi)
    X = _design(features)
    mu = np.clip(expit(X @ coeffs), 1e-12, 1.0 - 1e-12)
    log_ratio = np.log(targets) - np.log(1.0 - targets)

    dll_dmu = phi * (log_ratio - digamma(mu * phi) + digamma((1.0 - mu) * phi))
    grad_coeffs = X.T @ (dll_dmu * mu * (1.0 - mu)) / len(targets)

    dll_dphi = (
        digamma(phi)
        - mu * digamma(mu * phi)
        - (1.0 - mu) * digamma((1.0 - mu) * phi)
        + mu * np.log(targets)
        + (1.0 - mu) * np.log(1.0 - targets)
    )
    grad_log_phi = float(dll_dphi.mean()) * phi
    return np.concatenate([grad_coeffs, [grad_log_phi]])


def fit_beta_regression(
    features: np.ndarray,
    targets: Sequence[float],
    dimension: str = "value",
    max_iter: int = 500,
    tol: float = 1e-6,
) -> VadModel:
    """Maximum-likelihood beta regression with a logit mean link.

    Optimized by gradient ascent with backtracking line search over the
    coefficient vector and log precision.  Internally the feature columns
    are centered and whitened (an exact reparametrization, undone before
    returning), which keeps plain gradient ascent fast even on strongly
    correlated features.  Converges when the working-space gradient
    max-norm drops below `tol`; log phi is capped above so zero-residual
    targets, whose likelihood is unbounded in phi, still terminate.
    Raises if the iteration limit is hit first.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    y = np.clip(np.asarray(targets, dtype=np.float64), _TARGET_EPS, 1.0 - _TARGET_EPS)
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError("targets must parallel feature rows")
    if n < d + 2:
        raise ValueError(f"need at least {d + 2} rows to fit {d} features, got {n}")

    col_mean = X.mean(axis=0) if d > 0 else np.zeros(0)
    centered = X - col_mean
    if d > 0:
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        keep = svals > (svals[0] * 1e-10 if svals.size and svals[0] > 0 else math.inf)
        whiten = vt[keep].T * (math.sqrt(n) / svals[keep])
    else:
        whiten = np.zeros((0, 0))
    Z = centered @ whiten

    mean_y = float(y.mean())
    var_y = float(y.var()) + 1e-8
    phi0 = max(mean_y * (1.0 - mean_y) / var_y - 1.0, 1.0)
    params = np.zeros(Z.shape[1] + 2, dtype=np.float64)
    params[0] = float(logit(mean_y))
    params[-1] = min(math.log(phi0), _LOG_PHI_MAX)

    ll = beta_log_likelihood(params, Z, y)
    history = [ll]
    step = 1.0
    converged = False
    grad_norm = math.inf
    prev_params: np.ndarray | None = None
    prev_grad: np.ndarray | None = None
    it = 0
    for it in range(1, max_iter + 1):
        grad = beta_log_likelihood_grad(params, Z, y)
        if params[-1] >= _LOG_PHI_MAX and grad[-1] > 0:
            grad[-1] = 0.0  # projected: the cap is active
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            converged = True
            break

        # Barzilai-Borwein initial step, safeguarded by Armijo backtracking;
        # gradient-only, and the accepted-likelihood path stays monotone
        if prev_params is not None:
            s = params - prev_params
            delta_g = prev_grad - grad
            sy = float(s @ delta_g)
            if sy > 0:
                step = float(s @ s) / sy
            else:
                step = step * 2.0
        else:
            step = step * 2.0
        step = float(min(max(step, 1e-12), 1e8))
        prev_params, prev_grad = params.copy(), grad.copy()

        gsq = float(grad @ grad)
        accepted = False
        while step > 1e-20:
            trial = params + step * grad
            trial[-1] = min(trial[-1], _LOG_PHI_MAX)
            trial_ll = beta_log_likelihood(trial, Z, y)
            if np.isfinite(trial_ll) and trial_ll >= ll + 1e-4 * step * gsq:
                params, ll = trial, trial_ll
                history.append(ll)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

    if not converged:
        raise ValueError(
            f"beta regression did not converge after {it} iterations "
            f"(gradient max-norm {grad_norm:.3e})"
        )
    slopes = whiten @ params[1:-1]
    intercept = params[0] - float(col_mean @ slopes)
    return VadModel(
        dimension=dimension,
        coefficients=np.concatenate([[intercept], slopes]),
        precision=float(math.exp(params[-1])),
        ll_history=history,
        n_iter=it,
    )


def predict_beta(model: VadModel, feature: Sequence[float]) -> float:
    """Inverse-logit prediction, clamped strictly inside (0, 1)."""
    f = np.asarray(feature, dtype=np.float64)
    if f.shape != (len(model.coefficients) - 1,):
        raise ValueError(
            f"feature dimension {f.shape} does not match model ({len(model.coefficients) - 1})"
        )
    eta = float(model.coefficients[0] + model.coefficients[1:] @ f)
    return float(np.clip(expit(eta), _PREDICT_EPS, 1.0 - _PREDICT_EPS))


def train_vad_models(
    space: EmbeddingSpace, vad: VadLexicon, max_workers: int = 1
) -> dict[str, VadModel]:
    """Fit the three affect models on embeddings of in-vocabulary words."""
    words = sorted(w for w in vad.ratings if w in space)
    if not words:
        raise ValueError("no VAD lexicon word is in the embedding vocabulary")
    X = np.stack([space.vector(w).astype(np.float64) for w in words])
    columns = {
        dim: np.array([vad.ratings[w][i] for w in words]) for i, dim in enumerate(DIMENSIONS)
    }

    def fit(dim: str) -> VadModel:
        return fit_beta_regression(X, columns[dim], dimension=dim)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=min(max_workers, len(DIMENSIONS))) as pool:
            fitted = list(pool.map(fit, DIMENSIONS))
    else:
        fitted = [fit(dim) for dim in DIMENSIONS]
    return {m.dimension: m for m in fitted}


def score_definitions(
    lexicon: Lexicon, embedder: Embedder, models: Mapping[str, VadModel]
) -> VadScores:
    """Predict (valence, arousal, dominance) for every idiom definition."""
    values: dict[str, tuple[float, float, float]] = {}
    failures: list[str] = []
    for entry in lexicon:
        try:
            vec = embedder(list(entry.definition))
        except (ValueError, KeyError):
            failures.append(entry.key)
            continue
        values[entry.key] = tuple(predict_beta(models[d], vec) for d in DIMENSIONS)  # type: ignore[assignment]
    if failures:
        raise ValueError(f"definitions could not be embedded for: {', '.join(failures)}")
    return VadScores(values=values)


def usage_vad_series(
    counts: GroupCounts, scores: VadScores, group: str
) -> tuple[UsageSeries, UsageSeries, UsageSeries]:
    """One value series per affect dimension, with each idiom's score
    repeated once per usage in the group."""
    if group not in counts.groups:
        raise ValueError(f"unknown group {group!r}")
    columns: list[list[float]] = [[], [], []]
    for canonical, per_group in counts.idiom_counts.items():
        if canonical not in scores:
            raise ValueError(f"idiom {canonical!r} has no affect scores")
        c = per_group[group]
        if c <= 0:
            continue
        triple = scores.get(canonical)
        for i in range(3):
            columns[i].extend([triple[i]] * c)
    return tuple(
        UsageSeries(dimension=dim, group=group, values=np.array(columns[i], dtype=np.float64))
        for i, dim in enumerate(DIMENSIONS)
    )  # type: ignore[return-value]


def _stars(p: float) -> str:
    if p < 0.001:
        return "**"
    if p < 0.01:
        return "*"
    return ""


def compare_vad(
    series_a: Sequence[UsageSeries], series_b: Sequence[UsageSeries]
) -> list[VadComparison]:
    """Per-dimension means, rank-sum p, and Cohen's d for two usage triples."""
    out: list[VadComparison] = []
    for sa, sb in zip(series_a, series_b, strict=True):
        if sa.dimension != sb.dimension:
            raise ValueError(f"dimension mismatch: {sa.dimension} vs {sb.dimension}")
        test = wilcoxon_ranksum(sa.values, sb.values)
        out.append(
            VadComparison(
                dimension=sa.dimension,
                mean_a=float(sa.values.mean()),
                mean_b=float(sb.values.mean()),
                p_value=test.p_value,
                cohens_d=cohens_d(sa.values, sb.values),
                stars=_stars(test.p_value),
                n_a=len(sa.values),
                n_b=len(sb.values),
            )
        )
    return out


def literal_baseline(
    corpus: Corpus,
    matcher: Matcher,
    embedder: Embedder,
    models: Mapping[str, VadModel],
    n: int,
    seed: int,
) -> dict[str, tuple[UsageSeries, UsageSeries, UsageSeries]]:
    """Affect series over idiom-free posts, `n` sampled per group.

    Candidate posts contain no idiom match and at least one embeddable
    token; sampling is deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    out: dict[str, tuple[UsageSeries, UsageSeries, UsageSeries]] = {}
    for group in corpus.group_labels:
        candidates = []
        for post in corpus.group_posts(group):
            if find_matches(matcher, list(post.tokens)):
                continue
            try:
                vec = embedder(list(post.tokens))
            except (ValueError, KeyError):
                continue
            candidates.append(vec)
        if len(candidates) < n:
            raise ValueError(
                f"group {group!r} has only {len(candidates)} idiom-free embeddable posts, "
                f"need {n}"
            )
        chosen = rng.choice(len(candidates), size=n, replace=False)
        preds = {
            dim: np.array([predict_beta(models[dim], candidates[i]) for i in chosen])
            for dim in DIMENSIONS
        }
        out[group] = tuple(
            UsageSeries(dimension=dim, group=group, values=preds[dim]) for dim in DIMENSIONS
        )  # type: ignore[assignment]
    return out


def save_vad_models(models: Mapping[str, VadModel], path: str) -> None:
    payload = {
        "models": [
            {
                "dimension": dim,
                "coefficients": [float(c) for c in models[dim].coefficients],
                "precision": models[dim].precision,
                "link": models[dim].link,
            }
            for dim in DIMENSIONS
            if dim in models
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_vad_models(path: str) -> dict[str, VadModel]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    models = {}
    for rec in payload["models"]:
        models[rec["dimension"]] = VadModel(
            dimension=rec["dimension"],
            coefficients=np.array(rec["coefficients"], dtype=np.float64),
            precision=float(rec["precision"]),
            link=rec.get("link", "logit"),
        )
    return models
