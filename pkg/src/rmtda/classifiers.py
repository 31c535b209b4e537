"""R-LDA / R-QDA discriminants, empirical test error and conditional error formulas.

Public scores use the unscaled discriminants. The R-QDA error components work
with twice the discriminant (the threshold ``xi`` carries ``2 log(pi1/pi0)``);
that factor never leaks out of this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import ndtr

from .errors import DegenerateVarianceError, DimensionError, RdaError
from .model import Array, Classifier, ErrorReport, FittedDA, ProblemInstance, TrainingSet, resolve_priors

__all__ = [
    "DiscriminantScore",
    "QdaErrorComponents",
    "clt_error_rqda",
    "discriminant_scores",
    "empirical_error",
    "exact_error_rlda",
    "predict",
    "qda_error_components",
    "rlda_scores",
    "rqda_scores",
    "score_rlda",
    "score_rqda",
]


@dataclass(frozen=True)
class DiscriminantScore:
    value: float
    kind: Classifier

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise RdaError(f"non-finite {self.kind.value} score")

    @property
    def label(self) -> int:
        # a zero score goes to class 1 ("otherwise" branch of the rule)
        return 0 if self.value > 0 else 1


def _priors(fit: FittedDA, priors) -> tuple[float, float]:
    return fit.priors if priors is None else resolve_priors(priors, fit.n0, fit.n1)


def _as_columns(x: ArrayLike, p: int) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != p:
        raise DimensionError(f"expected {p} features, got {x.shape[0]}")
    return x


def rlda_scores(x: ArrayLike, fit: FittedDA, priors=None) -> Array:
    """R-LDA discriminant for each column of ``x``."""
    x = _as_columns(x, fit.p)
    pi0, pi1 = _priors(fit, priors)
    w = fit.H @ (fit.mu_hat0 - fit.mu_hat1)
    centre = 0.5 * (fit.mu_hat0 + fit.mu_hat1)
    return (x - centre[:, None]).T @ w - np.log(pi1 / pi0)


def rqda_scores(x: ArrayLike, fit: FittedDA, priors=None) -> Array:
    """R-QDA discriminant for each column of ``x``."""
    x = _as_columns(x, fit.p)
    pi0, pi1 = _priors(fit, priors)
    d0 = x - fit.mu_hat0[:, None]
    d1 = x - fit.mu_hat1[:, None]
    q0 = np.einsum("ij,ij->j", d0, fit.H0 @ d0)
    q1 = np.einsum("ij,ij->j", d1, fit.H1 @ d1)
    return 0.5 * (fit.logdet_H0 - fit.logdet_H1) - 0.5 * q0 + 0.5 * q1 - np.log(pi1 / pi0)


def discriminant_scores(x: ArrayLike, fit: FittedDA, kind, priors=None) -> Array:
    kind = Classifier(kind)
    scores = rlda_scores(x, fit, priors) if kind is Classifier.RLDA else rqda_scores(x, fit, priors)
    if not np.all(np.isfinite(scores)):
        raise RdaError(f"non-finite {kind.value} score")
    return scores


def score_rlda(x: ArrayLike, fit: FittedDA, priors=None) -> DiscriminantScore:
    return DiscriminantScore(float(rlda_scores(np.ravel(x), fit, priors)[0]), Classifier.RLDA)


def score_rqda(x: ArrayLike, fit: FittedDA, priors=None) -> DiscriminantScore:
    return DiscriminantScore(float(rqda_scores(np.ravel(x), fit, priors)[0]), Classifier.RQDA)


def predict(x: ArrayLike, fit: FittedDA, kind, priors=None) -> np.ndarray:
    """Class labels; ties (score exactly 0) go to class 1."""
    return np.where(discriminant_scores(x, fit, kind, priors) > 0, 0, 1)


def empirical_error(fit: FittedDA, kind, test: TrainingSet, priors=None) -> ErrorReport:
    """Per-class misclassification fractions on ``test`` and their prior-weighted sum."""
    if test.n0 == 0 or test.n1 == 0:
        raise DimensionError("test set must contain both classes")
    pi = _priors(fit, priors)
    wrong = predict(test.samples, fit, kind, pi) != test.labels
    eps0 = float(np.mean(wrong[test.labels == 0]))
    eps1 = float(np.mean(wrong[test.labels == 1]))
    return ErrorReport.weighted("empirical", eps0, eps1, pi, kind, n_test=(test.n0, test.n1))


def exact_error_rlda(fit: FittedDA, truth: ProblemInstance, priors=None) -> ErrorReport:
    """Closed-form conditional R-LDA error given the true class distributions."""
    pi0, pi1 = _priors(fit, priors)
    d = fit.mu_hat0 - fit.mu_hat1
    hd = fit.H @ d
    centre = 0.5 * (fit.mu_hat0 + fit.mu_hat1)
    log_ratio = np.log(pi1 / pi0)
    eps = []
    for i in (0, 1):
        spec = truth.cls(i)
        g = float((spec.mean - centre) @ hd)
        var = float(hd @ spec.covariance @ hd)
        if not var > 0:
            raise DegenerateVarianceError(f"class {i}: D = {var:.3e} <= 0")
        sign = (-1) ** i
        eps.append(float(ndtr((-sign * g + sign * log_ratio) / np.sqrt(var))))
    return ErrorReport.weighted("exact", eps[0], eps[1], (pi0, pi1), Classifier.RLDA)


@dataclass(frozen=True)
class QdaErrorComponents:
    """Quadratic-form description of the R-QDA error for one class.

    A class-``i`` point is misclassified when ``(-1)^i (z'Bz + 2z'r - xi) < 0``
    with ``z ~ N(0, I)``.
    """

    class_index: int
    B: Array
    r: Array
    xi: float
    trB: float
    trB2: float
    rNormSq: float

    @property
    def variance(self) -> float:
        return 2.0 * self.trB2 + 4.0 * self.rNormSq

    @property
    def lyapunov_ratio(self) -> float:
        num = 60.0 * self.trB2 + 240.0 * self.trB2 * self.rNormSq + 48.0 * self.rNormSq**2
        return num / self.variance**2


def qda_error_components(fit: FittedDA, truth: ProblemInstance, class_index: int, priors=None) -> QdaErrorComponents:
    i = int(class_index)
    if i not in (0, 1):
        raise ValueError("class_index must be 0 or 1")
    pi0, pi1 = _priors(fit, priors)
    spec = truth.cls(i)
    root = spec.sqrt_covariance
    a0 = spec.mean - fit.mu_hat0
    a1 = spec.mean - fit.mu_hat1
    B = root @ (fit.H1 - fit.H0) @ root
    B = 0.5 * (B + B.T)
    r = root @ (fit.H1 @ a1 - fit.H0 @ a0)
    xi = (
        -(fit.logdet_H0 - fit.logdet_H1)
        + float(a0 @ fit.H0 @ a0)
        - float(a1 @ fit.H1 @ a1)
        + 2.0 * np.log(pi1 / pi0)
    )
    return QdaErrorComponents(i, B, r, float(xi), float(np.trace(B)), float(np.sum(B * B)), float(r @ r))


def clt_error_rqda(components, priors) -> ErrorReport:
    """Gaussian approximation of the conditional R-QDA error from both classes' components."""
    comps = sorted(components, key=lambda c: c.class_index)
    if [c.class_index for c in comps] != [0, 1]:
        raise ValueError("need the components of class 0 and class 1")
    eps = []
    for c in comps:
        if not c.variance > 0:
            raise DegenerateVarianceError(f"class {c.class_index}: zero quadratic-form variance")
        eps.append(float(ndtr((-1) ** c.class_index * (c.xi - c.trB) / np.sqrt(c.variance))))
    return ErrorReport.weighted(
        "clt", eps[0], eps[1], priors, Classifier.RQDA,
        lyapunov_ratio=(comps[0].lyapunov_ratio, comps[1].lyapunov_ratio),
    )
