"""Reference error estimators: repeated k-fold CV, .632 / .632+ bootstrap, plugin."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .classifiers import predict
from .equivalents import lda_deterministic_error, qda_deterministic_error
from .errors import DomainError, InsufficientDataError, RdaError
from .model import Classifier, ErrorReport, FittedDA, ProblemInstance, TrainingSet, fit_statistics, make_rng

__all__ = [
    "BaselineConfig",
    "BaselineMethod",
    "bootstrap_error",
    "combine_632",
    "cv_error",
    "no_information_rate",
    "plugin_error",
]

MAX_REDRAWS = 100


class BaselineMethod(str, enum.Enum):
    CV = "cv"
    B632 = "b632"
    B632PLUS = "b632plus"
    PLUGIN = "plugin"


@dataclass(frozen=True)
class BaselineConfig:
    method: BaselineMethod = BaselineMethod.CV
    folds: int = 5
    repetitions: int = 5
    bootstrap_samples: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", BaselineMethod(self.method))
        if self.folds < 2:
            raise DomainError("folds must be at least 2")
        if self.repetitions < 1:
            raise DomainError("repetitions must be at least 1")
        if self.bootstrap_samples < 1:
            raise DomainError("bootstrap_samples must be at least 1")


def _canonical_order(train: TrainingSet, label: int) -> np.ndarray:
    # Sorting by content makes every split independent of the input column order.
    idx = np.flatnonzero(train.labels == label)
    cols = train.samples[:, idx]
    return idx[np.lexsort(cols[::-1])]


def _misclassified(fit: FittedDA, kind: Classifier, test: TrainingSet) -> np.ndarray:
    return predict(test.samples, fit, kind) != test.labels


def _per_class_rate(wrong: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    return tuple(float(np.mean(wrong[labels == c])) for c in (0, 1))


def cv_error(train: TrainingSet, gamma: float, kind, cfg: BaselineConfig | None = None, seed=None) -> ErrorReport:
    """Stratified ``folds``-fold cross-validation repeated ``repetitions`` times.

    Each repetition scores every training point exactly once; per-class rates
    are averaged over repetitions and weighted by the training class fractions.
    """
    cfg = cfg or BaselineConfig()
    kind = Classifier(kind)
    seed = cfg.seed if seed is None else seed
    n0, n1 = train.n0, train.n1
    if min(n0, n1) < cfg.folds:
        raise InsufficientDataError(f"each class needs at least {cfg.folds} samples, got n0={n0}, n1={n1}")
    order = [_canonical_order(train, c) for c in (0, 1)]
    wrong_count = np.zeros(train.n)
    for rep in range(cfg.repetitions):
        rng = make_rng(seed, 1, rep)
        fold_of = np.empty(train.n, dtype=int)
        for idx in order:
            fold_of[rng.permutation(idx)] = np.arange(idx.size) % cfg.folds
        for k in range(cfg.folds):
            held = fold_of == k
            fit = fit_statistics(train.subset(np.flatnonzero(~held)), gamma)
            held_idx = np.flatnonzero(held)
            wrong_count[held_idx] += _misclassified(fit, kind, train.subset(held_idx))
    eps0, eps1 = _per_class_rate(wrong_count / cfg.repetitions, train.labels)
    return ErrorReport.weighted("cv", eps0, eps1, (n0 / train.n, n1 / train.n), kind,
                                folds=cfg.folds, repetitions=cfg.repetitions)


def no_information_rate(priors, predicted_fractions) -> float:
    """Error of a rule predicting independently of the features: ``sum_k p_k (1 - q_k)``."""
    return float(sum(p * (1.0 - q) for p, q in zip(priors, predicted_fractions)))


def combine_632(resub: float, oob: float, no_info: float) -> tuple[float, float, float, float]:
    """Return ``(b632, b632plus, R, w)`` from resubstitution, out-of-bag and no-information rates."""
    b632 = 0.368 * resub + 0.632 * oob
    if no_info > resub:
        R = (oob - resub) / (no_info - resub)
    else:
        R = 0.0 if oob <= resub else 1.0
    R = min(max(R, 0.0), 1.0)
    w = 0.632 / (1.0 - 0.368 * R)
    return b632, (1.0 - w) * resub + w * oob, R, w


def _draw_resample(rng: np.random.Generator, order: list[np.ndarray]) -> np.ndarray:
    for _ in range(MAX_REDRAWS):
        picks = [idx[rng.integers(0, idx.size, idx.size)] for idx in order]
        if all(np.unique(p).size >= 2 for p in picks):
            return np.concatenate(picks)
    raise InsufficientDataError(f"no usable bootstrap resample after {MAX_REDRAWS} redraws")


def bootstrap_error(train: TrainingSet, gamma: float, kind, cfg: BaselineConfig | None = None,
                    seed=None) -> ErrorReport:
    """Class-stratified .632 and .632+ bootstrap.

    The returned report carries the flavour named by ``cfg.method`` (``B632``
    unless ``B632PLUS`` is requested); ``details`` holds both flavours and the
    ingredients.
    """
    cfg = cfg or BaselineConfig(method=BaselineMethod.B632)
    kind = Classifier(kind)
    seed = cfg.seed if seed is None else seed
    n = train.n
    priors = (train.n0 / n, train.n1 / n)
    order = [_canonical_order(train, c) for c in (0, 1)]

    full = fit_statistics(train, gamma)
    resub_pred = predict(train.samples, full, kind)
    resub = _per_class_rate(resub_pred != train.labels, train.labels)
    predicted = (float(np.mean(resub_pred == 0)), float(np.mean(resub_pred == 1)))

    wrong_sum = np.zeros(n)
    out_count = np.zeros(n)
    for b in range(cfg.bootstrap_samples):
        rng = make_rng(seed, 2, b)
        picked = _draw_resample(rng, order)
        out = np.ones(n, dtype=bool)
        out[picked] = False
        if not out.any():
            continue
        out_idx = np.flatnonzero(out)
        fit = fit_statistics(train.subset(picked), gamma)
        wrong_sum[out_idx] += _misclassified(fit, kind, train.subset(out_idx))
        out_count[out_idx] += 1
    seen = out_count > 0
    if not all(np.any(seen & (train.labels == c)) for c in (0, 1)):
        raise RdaError("a class never appeared out of bag; increase bootstrap_samples")
    per_point = np.where(seen, wrong_sum / np.maximum(out_count, 1), 0.0)
    oob = tuple(float(np.mean(per_point[seen & (train.labels == c)])) for c in (0, 1))

    resub_total = priors[0] * resub[0] + priors[1] * resub[1]
    oob_total = priors[0] * oob[0] + priors[1] * oob[1]
    g = no_information_rate(priors, predicted)
    _, _, R, w = combine_632(resub_total, oob_total, g)
    plain = [0.368 * r + 0.632 * o for r, o in zip(resub, oob)]
    plus = [(1.0 - w) * r + w * o for r, o in zip(resub, oob)]
    details = dict(resub=resub, oob=oob, no_information=g, relative_overfit=R, weight=w,
                   samples=cfg.bootstrap_samples)
    b632 = ErrorReport.weighted("b632", plain[0], plain[1], priors, kind, **details)
    b632plus = ErrorReport.weighted("b632plus", plus[0], plus[1], priors, kind, **details)
    chosen = b632plus if cfg.method is BaselineMethod.B632PLUS else b632
    chosen.details.update(b632=b632.total, b632plus=b632plus.total)
    return chosen


def plugin_error(fit: FittedDA, kind, priors=None) -> ErrorReport:
    """Deterministic equivalent evaluated at the sample means and covariances."""
    kind = Classifier(kind)
    pi = fit.priors if priors is None else priors
    plugged = ProblemInstance.from_arrays(fit.mu_hat0, fit.sigma_hat0, fit.mu_hat1, fit.sigma_hat1, pi)
    if kind is Classifier.RLDA:
        eq = lda_deterministic_error(plugged, fit.n0, fit.n1, fit.gamma, pi)
    else:
        eq = qda_deterministic_error(plugged, fit.n0, fit.n1, fit.gamma, pi)
    return ErrorReport.weighted("plugin", eq.eps[0], eq.eps[1], pi, kind)
