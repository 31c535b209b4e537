"""Ground-truth Gaussian model, sampling, sample statistics and ridge resolvents.

Observation matrices are stored column-wise: a ``p x n`` array holds ``n``
observations of dimension ``p``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .errors import DimensionError, DomainError, InsufficientDataError, ModelError

__all__ = [
    "Classifier",
    "ErrorReport",
    "FittedDA",
    "GaussianClassSpec",
    "ProblemInstance",
    "TrainingSet",
    "fit_statistics",
    "make_rng",
    "psd_sqrt",
    "resolve_priors",
    "sample_class",
    "sample_training",
]

Array = NDArray[np.float64]

PSD_TOLERANCE = 1e-10


class Classifier(str, enum.Enum):
    RLDA = "rlda"
    RQDA = "rqda"


def make_rng(seed, *stream: int) -> np.random.Generator:
    """Return a Philox-backed generator keyed by ``seed`` and a stream path.

    Philox is counter based, so ``make_rng(s, k)`` for distinct ``k`` gives
    independent streams that are identical across platforms. A generator passed
    as ``seed`` is returned unchanged (``stream`` must then be empty).
    """
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValueError("cannot derive a sub-stream from an existing Generator")
        return seed
    entropy = [int(s) for s in np.atleast_1d(seed)]
    if any(s < 0 for s in entropy) or any(int(s) < 0 for s in stream):
        raise ValueError("seeds must be non-negative integers")
    ss = np.random.SeedSequence(entropy, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def psd_sqrt(cov: ArrayLike) -> Array:
    """Symmetric square root of a positive semidefinite matrix.

    Eigenvalues down to ``-1e-10 * ||cov||`` are treated as round-off and
    clamped to zero; anything more negative raises :class:`ModelError`.
    """
    cov = np.asarray(cov, dtype=float)
    evals, evecs = np.linalg.eigh(cov)
    scale = max(float(np.max(np.abs(evals))) if evals.size else 0.0, 1.0)
    if evals.size and evals[0] < -PSD_TOLERANCE * scale:
        raise ModelError(f"covariance is not positive semidefinite (min eigenvalue {evals[0]:.3e})")
    evals = np.clip(evals, 0.0, None)
    root = (evecs * np.sqrt(evals)) @ evecs.T
    return 0.5 * (root + root.T)


@dataclass(frozen=True)
class GaussianClassSpec:
    """Mean, covariance and prior of one Gaussian class."""

    mean: Array
    covariance: Array
    prior: float = 0.5

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(cov).max(initial=0.0)))):
            raise ModelError("covariance is not symmetric")
        if not 0.0 < self.prior < 1.0:
            raise ModelError(f"prior must lie in (0, 1), got {self.prior}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", 0.5 * (cov + cov.T))
        # validates PSD eagerly
        _ = self.sqrt_covariance

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def sqrt_covariance(self) -> Array:
        return psd_sqrt(self.covariance)


@dataclass(frozen=True)
class ProblemInstance:
    """A pair of Gaussian classes sharing the dimension ``p``."""

    class0: GaussianClassSpec
    class1: GaussianClassSpec

    def __post_init__(self) -> None:
        if self.class0.dim != self.class1.dim:
            raise DimensionError("class dimensions differ")
        if abs(self.class0.prior + self.class1.prior - 1.0) > 1e-12:
            raise ModelError("class priors must sum to one")

    @classmethod
    def from_arrays(cls, mu0, sigma0, mu1, sigma1, priors=(0.5, 0.5)) -> "ProblemInstance":
        return cls(GaussianClassSpec(mu0, sigma0, priors[0]), GaussianClassSpec(mu1, sigma1, priors[1]))

    @property
    def p(self) -> int:
        return self.class0.dim

    @property
    def priors(self) -> tuple[float, float]:
        return (self.class0.prior, self.class1.prior)

    @property
    def mean_difference(self) -> Array:
        return self.class0.mean - self.class1.mean

    def cls(self, i: int) -> GaussianClassSpec:
        return (self.class0, self.class1)[i]


@dataclass(frozen=True)
class TrainingSet:
    """Labelled observations; ``samples`` is ``p x n``, ``labels`` in {0, 1}."""

    samples: Array
    labels: NDArray[np.int_]

    def __post_init__(self) -> None:
        x = np.asarray(self.samples, dtype=float)
        y = np.asarray(self.labels).astype(int).reshape(-1)
        if x.ndim != 2 or x.shape[1] != y.size:
            raise DimensionError(f"samples shape {x.shape} does not match {y.size} labels")
        if not np.all((y == 0) | (y == 1)):
            raise DimensionError("labels must be 0 or 1")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "labels", y)

    @classmethod
    def from_classes(cls, x0: ArrayLike, x1: ArrayLike) -> "TrainingSet":
        x0 = np.asarray(x0, dtype=float)
        x1 = np.asarray(x1, dtype=float)
        return cls(np.hstack([x0, x1]), np.r_[np.zeros(x0.shape[1], int), np.ones(x1.shape[1], int)])

    @property
    def p(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def n0(self) -> int:
        return int(np.count_nonzero(self.labels == 0))

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    def class_samples(self, i: int) -> Array:
        return self.samples[:, self.labels == i]

    def subset(self, index: ArrayLike) -> "TrainingSet":
        index = np.asarray(index)
        return TrainingSet(self.samples[:, index], self.labels[index])


def sample_class(spec: GaussianClassSpec, count: int, seed=0) -> Array:
    """Draw ``count`` columns ``mean + sqrt(cov) @ z`` with ``z ~ N(0, I)``."""
    if count < 1:
        raise DomainError("count must be at least 1")
    rng = make_rng(seed)
    z = rng.standard_normal((spec.dim, count))
    return spec.mean[:, None] + spec.sqrt_covariance @ z


def sample_training(truth: ProblemInstance, n0: int, n1: int, seed=0) -> TrainingSet:
    rng = make_rng(seed)
    return TrainingSet.from_classes(sample_class(truth.class0, n0, rng), sample_class(truth.class1, n1, rng))


def resolve_priors(priors, n0: int, n1: int) -> tuple[float, float]:
    if priors is None:
        n = n0 + n1
        return (n0 / n, n1 / n)
    pi0, pi1 = (float(v) for v in priors)
    if pi0 <= 0 or pi1 <= 0 or abs(pi0 + pi1 - 1.0) > 1e-12:
        raise ModelError(f"invalid priors {priors!r}")
    return (pi0, pi1)


def _ridge_resolvent(sigma: Array, gamma: float) -> tuple[Array, float]:
    """``(I + gamma*sigma)^{-1}`` and its log-determinant via Cholesky."""
    p = sigma.shape[0]
    m = np.eye(p) + gamma * sigma
    factor = linalg.cho_factor(m, lower=True, check_finite=False)
    h = linalg.cho_solve(factor, np.eye(p), check_finite=False)
    logdet = -2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return 0.5 * (h + h.T), logdet


@dataclass(frozen=True)
class FittedDA:
    """Everything computable from a training set at a given ``gamma``.

    The resolvents ``H``, ``H0``, ``H1`` are built on first access so that an
    R-LDA-only workflow never pays for the per-class factorizations.
    """

    mu_hat0: Array
    mu_hat1: Array
    sigma_hat0: Array
    sigma_hat1: Array
    sigma_hat_pooled: Array
    gamma: float
    n0: int
    n1: int
    priors: tuple[float, float]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def p(self) -> int:
        return self.mu_hat0.size

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    def mu_hat(self, i: int) -> Array:
        return (self.mu_hat0, self.mu_hat1)[i]

    def sigma_hat(self, i: int) -> Array:
        return (self.sigma_hat0, self.sigma_hat1)[i]

    def _resolvent(self, key: str, sigma: Array) -> tuple[Array, float]:
        if key not in self._cache:
            self._cache[key] = _ridge_resolvent(sigma, self.gamma)
        return self._cache[key]

    @property
    def H(self) -> Array:
        return self._resolvent("pooled", self.sigma_hat_pooled)[0]

    @property
    def H0(self) -> Array:
        return self._resolvent("c0", self.sigma_hat0)[0]

    @property
    def H1(self) -> Array:
        return self._resolvent("c1", self.sigma_hat1)[0]

    @property
    def logdet_H0(self) -> float:
        return self._resolvent("c0", self.sigma_hat0)[1]

    @property
    def logdet_H1(self) -> float:
        return self._resolvent("c1", self.sigma_hat1)[1]

    def H_class(self, i: int) -> Array:
        return (self.H0, self.H1)[i]

    def logdet_H(self, i: int) -> float:
        return (self.logdet_H0, self.logdet_H1)[i]

    def with_gamma(self, gamma: float) -> "FittedDA":
        """Same sample statistics, new regularization."""
        if gamma <= 0:
            raise DomainError("gamma must be positive")
        return FittedDA(
            self.mu_hat0, self.mu_hat1, self.sigma_hat0, self.sigma_hat1,
            self.sigma_hat_pooled, float(gamma), self.n0, self.n1, self.priors,
        )

    def with_priors(self, priors) -> "FittedDA":
        fit = FittedDA(
            self.mu_hat0, self.mu_hat1, self.sigma_hat0, self.sigma_hat1,
            self.sigma_hat_pooled, self.gamma, self.n0, self.n1, resolve_priors(priors, self.n0, self.n1),
        )
        fit._cache.update(self._cache)
        return fit


def _mean_and_cov(x: Array) -> tuple[Array, Array]:
    mu = x.mean(axis=1)
    xc = x - mu[:, None]
    cov = xc @ xc.T / (x.shape[1] - 1)
    return mu, 0.5 * (cov + cov.T)


def fit_statistics(train: TrainingSet, gamma: float, priors=None) -> FittedDA:
    """Sample means, unbiased covariances, pooled covariance and ridge resolvents.

    Parameters
    ----------
    train : TrainingSet
        Needs at least two observations per class.
    gamma : float
        Ridge regularization, strictly positive.
    priors : pair of float, optional
        Class priors used by the discriminants. Defaults to ``(n0/n, n1/n)``.
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    n0, n1 = train.n0, train.n1
    if n0 < 2 or n1 < 2:
        raise InsufficientDataError(f"need at least 2 samples per class, got n0={n0}, n1={n1}")
    mu0, s0 = _mean_and_cov(train.class_samples(0))
    mu1, s1 = _mean_and_cov(train.class_samples(1))
    pooled = ((n0 - 1) * s0 + (n1 - 1) * s1) / (n0 + n1 - 2)
    return FittedDA(mu0, mu1, s0, s1, pooled, float(gamma), n0, n1, resolve_priors(priors, n0, n1))


@dataclass(frozen=True)
class ErrorReport:
    """Per-class and prior-weighted misclassification rates tagged by method."""

    method: str
    eps0: float
    eps1: float
    total: float
    classifier: str | None = None
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def weighted(cls, method: str, eps0: float, eps1: float, priors, classifier=None, **details) -> "ErrorReport":
        pi0, pi1 = priors
        return cls(method, float(eps0), float(eps1), float(pi0 * eps0 + pi1 * eps1),
                   None if classifier is None else Classifier(classifier).value, details)

    def per_class(self, i: int) -> float:
        return (self.eps0, self.eps1)[i]
