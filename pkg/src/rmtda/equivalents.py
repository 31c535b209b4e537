"""Deterministic equivalents of the R-LDA and R-QDA misclassification rates.

All quantities are evaluated at the finite ``p``, ``n0``, ``n1`` of the problem;
terms that only vanish asymptotically are kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg
from scipy.special import ndtr

from .errors import DegenerateVarianceError, DomainError, SolverError
from .model import Array, ProblemInstance, resolve_priors

__all__ = [
    "CommonCovEquivalents",
    "GrowthDiagnostics",
    "LdaEquivalents",
    "LdaFixedPoint",
    "QdaDelta",
    "QdaEquivalents",
    "Spectrum",
    "check_growth_assumptions",
    "lda_common_cov_error",
    "lda_deterministic_error",
    "resolvent_trace_equivalent",
    "qda_deterministic_error",
    "rqda_equal_cov_error",
    "solve_lda_fixed_point",
    "solve_qda_delta",
]

LDA_TOL = 1e-10
DELTA_TOL = 1e-12
MAX_ITER = 10_000
DAMPING = 0.5


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a PSD matrix, reused across ``gamma`` values."""

    values: Array
    vectors: Array

    @classmethod
    def of(cls, matrix: ArrayLike) -> "Spectrum":
        if isinstance(matrix, Spectrum):
            return matrix
        m = np.asarray(matrix, dtype=float)
        vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
        return cls(np.clip(vals, 0.0, None), vecs)

    @property
    def dim(self) -> int:
        return self.values.size

    def matrix(self) -> Array:
        return (self.vectors * self.values) @ self.vectors.T

    def apply(self, weights: Array) -> Array:
        """``V diag(weights) V'``."""
        return (self.vectors * weights) @ self.vectors.T


def _check_gamma(gamma: float) -> float:
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return float(gamma)


# ---------------------------------------------------------------------------
# R-LDA


@dataclass(frozen=True)
class LdaFixedPoint:
    z: float
    g: tuple[float, float]
    g_tilde: tuple[float, float]
    Q_bar: Array
    iterations: int
    residual: float

    @property
    def g0(self) -> float:
        return self.g[0]

    @property
    def g1(self) -> float:
        return self.g[1]


def _inverse_spd(m: Array) -> Array:
    factor = linalg.cho_factor(m, lower=True, check_finite=False)
    inv = linalg.cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T)


def solve_lda_fixed_point(
    truth: ProblemInstance,
    n0: int,
    n1: int,
    gamma: float,
    *,
    g_tilde_init=(1.0, 1.0),
    tol: float = LDA_TOL,
    max_iter: int = MAX_ITER,
) -> LdaFixedPoint:
    """Solve the coupled two-class system for ``g_i`` and ``Q_bar`` at ``z = -n/(p gamma)``.

    The ``g`` updates are damped by one half. The residual is
    ``max_i |(p/n) g_i + (1/z)/(1 + g~_i)|``; ``g~_i`` is always recomputed
    exactly from ``Q_bar`` so the trace equation holds to round-off.
    """
    gamma = _check_gamma(gamma)
    p = truth.p
    n = n0 + n1
    z = -n / (p * gamma)
    c = np.array([n0 / n, n1 / n])
    sig = (truth.class0.covariance, truth.class1.covariance)
    eye = np.eye(p)

    g_tilde = np.asarray(g_tilde_init, dtype=float).copy()
    g = -(n / p) / z / (1.0 + g_tilde)
    residual = np.inf
    for it in range(1, max_iter + 1):
        q_bar = -_inverse_spd(eye + c[0] * g[0] * sig[0] + c[1] * g[1] * sig[1]) / z
        g_tilde = np.array([np.sum(s * q_bar) / p for s in sig])
        target = -(n / p) / z / (1.0 + g_tilde)
        residual = float(np.max(np.abs((p / n) * (g - target))))
        if residual < tol:
            return LdaFixedPoint(z, (float(g[0]), float(g[1])), (float(g_tilde[0]), float(g_tilde[1])),
                                 q_bar, it, residual)
        g = (1.0 - DAMPING) * g + DAMPING * target
    raise SolverError(f"R-LDA fixed point did not converge in {max_iter} iterations", residual)


@dataclass(frozen=True)
class LdaEquivalents:
    G_bar: tuple[float, float]
    D_bar: tuple[float, float]
    eps: tuple[float, float]
    total: float
    R: tuple[float, float]
    Q_tilde: tuple[Array, Array] = field(repr=False)
    fixed_point: LdaFixedPoint = field(repr=False)

    @property
    def epsBar0(self) -> float:
        return self.eps[0]

    @property
    def epsBar1(self) -> float:
        return self.eps[1]


def lda_deterministic_error(
    truth: ProblemInstance, n0: int, n1: int, gamma: float, priors=None, *, fixed_point: LdaFixedPoint | None = None
) -> LdaEquivalents:
    """Deterministic equivalent of the conditional R-LDA error for distinct covariances.

    ``priors`` are the ones the classifier uses; they default to ``(n0/n, n1/n)``.
    The prior term enters with the orientation ``(-1)^i log(pi1/pi0)``, the same
    as the exact conditional error.
    """
    pi0, pi1 = resolve_priors(priors, n0, n1)
    fp = fixed_point or solve_lda_fixed_point(truth, n0, n1, gamma)
    p = truth.p
    n = n0 + n1
    z = fp.z
    c = (n0 / n, n1 / n)
    sig = (truth.class0.covariance, truth.class1.covariance)
    mu = truth.mean_difference
    q_bar = fp.Q_bar
    A = (sig[0] @ q_bar, sig[1] @ q_bar)
    tr_a0a1 = float(np.sum(A[0] * A[1].T)) / n
    x = (z**2 * c[0] * fp.g[0] ** 2 + z**2 * c[1] * fp.g[1] ** 2) * tr_a0a1
    if not 1.0 - x > 0:
        raise SolverError(f"R-LDA variance denominator 1 - {x:.6g} <= 0")
    R = tuple(z**2 * c[i] * fp.g[i] ** 2 * tr_a0a1 / (1.0 - x) for i in (0, 1))
    mix = R[0] * A[0] + R[1] * A[1]
    mq_mu = float(mu @ q_bar @ mu)
    trace_term = z / (2 * n0) * np.trace(A[0]) - z / (2 * n1) * np.trace(A[1])
    log_ratio = np.log(pi1 / pi0)

    G, D, eps, Qt = [], [], [], []
    for i in (0, 1):
        q_tilde = q_bar @ (A[i] + mix)
        g_bar = (-1) ** (i + 1) / 2 * z * mq_mu + trace_term
        d_bar = z**2 * (
            float(mu @ q_tilde @ mu) + np.sum(sig[0] * q_tilde.T) / n0 + np.sum(sig[1] * q_tilde.T) / n1
        )
        if not d_bar > 0:
            raise SolverError(f"class {i}: D_bar = {d_bar:.3e} <= 0")
        sign = (-1) ** i
        eps.append(float(ndtr((-sign * g_bar + sign * log_ratio) / np.sqrt(d_bar))))
        G.append(float(g_bar))
        D.append(float(d_bar))
        Qt.append(q_tilde)
    return LdaEquivalents(tuple(G), tuple(D), tuple(eps), pi0 * eps[0] + pi1 * eps[1], R, tuple(Qt), fp)


def _solve_delta(evals: Array, n: float, gamma: float, init: float, tol: float = DELTA_TOL,
                 max_iter: int = MAX_ITER) -> tuple[float, int]:
    """Damped iteration for ``delta = (1/n) sum lam / (1 + gamma lam / (1 + gamma delta))``."""
    delta = float(init)
    for it in range(1, max_iter + 1):
        target = float(np.sum(evals / (1.0 + gamma * evals / (1.0 + gamma * delta)))) / n
        if abs(target - delta) < tol * max(1.0, abs(delta)):
            return target, it
        delta = (1.0 - DAMPING) * delta + DAMPING * target
    raise SolverError(f"delta fixed point did not converge in {max_iter} iterations", abs(target - delta))


@dataclass(frozen=True)
class CommonCovEquivalents:
    delta: float
    G_bar: tuple[float, float]
    D_bar: float
    eps: tuple[float, float]
    total: float


def lda_common_cov_error(sigma: ArrayLike, mu: ArrayLike, n0: int, n1: int, gamma: float,
                         priors=None) -> CommonCovEquivalents:
    """Closed-form R-LDA equivalent when both classes share ``sigma``; ``mu = mu0 - mu1``."""
    gamma = _check_gamma(gamma)
    pi0, pi1 = resolve_priors(priors, n0, n1)
    spec = Spectrum.of(sigma)
    lam = spec.values
    n = n0 + n1
    delta, _ = _solve_delta(lam, n, gamma, init=lam.size / n)
    a = gamma / (1.0 + gamma * delta)
    t = 1.0 / (1.0 + a * lam)
    mu_rot = spec.vectors.T @ np.asarray(mu, dtype=float)
    tr_s2t2 = float(np.sum(lam**2 * t**2))
    denom = 1.0 - gamma**2 / (n * (1.0 + gamma * delta) ** 2) * tr_s2t2
    if not denom > 0:
        raise SolverError(f"common-covariance denominator {denom:.3e} <= 0")
    d_bar = (float(np.sum(mu_rot**2 * lam * t**2)) + (1.0 / n0 + 1.0 / n1) * tr_s2t2) / denom
    if not d_bar > 0:
        raise DegenerateVarianceError("common-covariance D_bar <= 0")
    mtm = float(np.sum(mu_rot**2 * t))
    log_ratio = np.log(pi1 / pi0)
    G, eps = [], []
    for i in (0, 1):
        g_bar = (-1) ** i / 2 * mtm - n * delta / 2 * (1.0 / n0 - 1.0 / n1)
        sign = (-1) ** i
        G.append(g_bar)
        eps.append(float(ndtr((-sign * g_bar + sign * log_ratio) / np.sqrt(d_bar))))
    return CommonCovEquivalents(delta, tuple(G), d_bar, tuple(eps), pi0 * eps[0] + pi1 * eps[1])


# ---------------------------------------------------------------------------
# R-QDA


@dataclass(frozen=True)
class QdaDelta:
    delta: float
    t_values: Array
    spectrum: Spectrum = field(repr=False)
    phi: float
    phi_tilde: float
    iterations: int

    @property
    def T(self) -> Array:
        return self.spectrum.apply(self.t_values)

    @property
    def logdet_T(self) -> float:
        return float(np.sum(np.log(self.t_values)))


def solve_qda_delta(sigma, n_i: int, gamma: float) -> QdaDelta:
    """Per-class fixed point ``delta_i`` and the derived ``T_i``, ``phi_i``, ``phi~_i``.

    ``sigma`` may be a matrix or a precomputed :class:`Spectrum`.
    """
    gamma = _check_gamma(gamma)
    if n_i < 1:
        raise DomainError("n_i must be at least 1")
    spec = Spectrum.of(sigma)
    lam = spec.values
    delta, iters = _solve_delta(lam, n_i, gamma, init=lam.size / n_i)
    t = 1.0 / (1.0 + gamma * lam / (1.0 + gamma * delta))
    phi = float(np.sum(lam**2 * t**2)) / n_i
    return QdaDelta(delta, t, spec, phi, 1.0 / (1.0 + gamma * delta) ** 2, iters)


@dataclass(frozen=True)
class QdaEquivalents:
    delta: tuple[float, float]
    phi: tuple[float, float]
    phi_tilde: tuple[float, float]
    xi_bar: tuple[float, float]
    b_bar: tuple[float, float]
    B_bar: tuple[float, float]
    B_simplified: float
    eps: tuple[float, float]
    total: float
    diagnostics: dict
    solutions: tuple[QdaDelta, QdaDelta] = field(repr=False)

    @property
    def T(self) -> tuple[Array, Array]:
        return (self.solutions[0].T, self.solutions[1].T)


def qda_deterministic_error(truth: ProblemInstance, n0: int, n1: int, gamma: float, priors=None,
                            *, spectra=None) -> QdaEquivalents:
    """Deterministic equivalent of the conditional R-QDA error.

    Uses the full (non-simplified) variance term. ``spectra`` may carry
    precomputed :class:`Spectrum` objects of the two covariances.
    """
    gamma = _check_gamma(gamma)
    pi0, pi1 = resolve_priors(priors, n0, n1)
    p = truth.p
    n = (n0, n1)
    if spectra is None:
        spectra = (Spectrum.of(truth.class0.covariance), Spectrum.of(truth.class1.covariance))
    sol = (solve_qda_delta(spectra[0], n0, gamma), solve_qda_delta(spectra[1], n1, gamma))
    sig = (spectra[0].matrix(), spectra[1].matrix())
    T = (sol[0].T, sol[1].T)
    delta = (sol[0].delta, sol[1].delta)
    phi = (sol[0].phi, sol[1].phi)
    phit = (sol[0].phi_tilde, sol[1].phi_tilde)
    contraction = [1.0 - gamma**2 * phi[j] * phit[j] for j in (0, 1)]
    for j in (0, 1):
        if not contraction[j] > 0:
            raise SolverError(f"class {j}: 1 - gamma^2 phi phi~ = {contraction[j]:.3e} <= 0")
    mu = truth.mean_difference
    sp = np.sqrt(p)

    common = (
        -(sol[0].logdet_T - sol[1].logdet_T)
        + n0 * np.log1p(gamma * delta[0]) - n1 * np.log1p(gamma * delta[1])
        + gamma * (n1 * delta[1] / (1 + gamma * delta[1]) - n0 * delta[0] / (1 + gamma * delta[0]))
        + 2.0 * np.log(pi1 / pi0)
    )
    xi, b, B, eps = [], [], [], []
    for i in (0, 1):
        j = 1 - i
        xi.append(float((common + (-1) ** (i + 1) * float(mu @ T[j] @ mu)) / sp))
        b.append(float(np.sum(sig[i] * (T[1] - T[0])) / sp))
        st_j = sig[i] @ T[j]
        tr_si2_tj2 = float(np.sum(st_j * st_j.T))
        cross = float(np.sum(sig[i] * (sig[j] @ T[j] @ T[j]).T)) / n[j]
        st1, st0 = sig[i] @ T[1], sig[i] @ T[0]
        B_i = (
            n[i] / p * phi[i] / contraction[i]
            + tr_si2_tj2 / p
            + n[j] / p * gamma**2 * phit[j] / contraction[j] * cross**2
            - 2.0 / p * float(np.sum(st1 * st0.T))
        )
        if not B_i > 0:
            raise SolverError(f"class {i}: B_bar = {B_i:.3e} <= 0")
        B.append(B_i)
        eps.append(float(ndtr((-1) ** i * (xi[i] - b[i]) / np.sqrt(2.0 * B_i))))

    c = p / (n0 + n1)
    B_simpl = gamma**2 * phi[0] ** 2 * phit[0] / contraction[0] / c
    st0, st1 = sig[0] @ T[0], sig[1] @ T[1]
    diagnostics = {
        "req1": float((n0 * delta[0] / (1 + gamma * delta[0]) - n1 * delta[1] / (1 + gamma * delta[1])) / sp),
        "req2": float((n1 * np.log1p(gamma * delta[1]) - n0 * np.log1p(gamma * delta[0])) / sp),
        "req3": float((sol[0].logdet_T - sol[1].logdet_T) / sp),
        "contraction": float(
            2 * gamma**2 / ((1 + gamma * delta[0]) * (1 + gamma * delta[1])) * np.sum(st0 * st1.T) / (n0 + n1)
        ),
    }
    return QdaEquivalents(
        delta, phi, phit, tuple(xi), tuple(b), tuple(B), float(B_simpl), tuple(eps),
        pi0 * eps[0] + pi1 * eps[1], diagnostics, sol,
    )


def rqda_equal_cov_error(sigma: ArrayLike, mu: ArrayLike, n_per_class: int, gamma: float) -> float:
    """Reduced R-QDA error for a shared covariance, balanced classes and equal priors.

    ``phi``, ``phi~`` and ``T`` are the per-class quantities; the dimension
    ratio is taken per class, ``p / n_per_class``.
    """
    sol = solve_qda_delta(sigma, n_per_class, gamma)
    mu = np.asarray(mu, dtype=float)
    p = mu.size
    ratio = p / n_per_class
    x = gamma**2 * sol.phi * sol.phi_tilde
    if not 1.0 - x > 0:
        raise SolverError(f"1 - gamma^2 phi phi~ = {1 - x:.3e} <= 0")
    mtm = float(mu @ sol.T @ mu)
    return float(ndtr(-mtm / (2 * np.sqrt(p)) * np.sqrt(ratio * (1 - x) / (gamma**2 * sol.phi**2 * sol.phi_tilde))))


def resolvent_trace_equivalent(A: ArrayLike, sigma, n_i: int, gamma: float) -> float:
    """Deterministic equivalent of ``(1/p) tr(A H A H)`` for ``H = (I + gamma S)^{-1}``.

    ``S`` is the unbiased sample covariance of ``n_i`` observations with
    covariance ``sigma``.
    """
    A = np.asarray(A, dtype=float)
    sol = solve_qda_delta(sigma, n_i, gamma)
    p = A.shape[0]
    T = sol.T
    T2 = T @ T
    sig = sol.spectrum.matrix()
    first = float(np.sum((T2 @ A) * A.T)) / p
    inner = float(np.sum(A * (sig @ T2).T)) / n_i
    x = gamma**2 * sol.phi * sol.phi_tilde
    return first + n_i / p * gamma**2 * sol.phi_tilde / (1.0 - x) * inner**2


@dataclass(frozen=True)
class GrowthDiagnostics:
    mean_sq_norm: float
    mean_ratio: float
    sigma_norms: tuple[float, float]
    n_large_eigenvalues: int
    threshold: float
    scaled_abs_eigensum: float
    dimension_ratio: float
    class_size_gap: int


def check_growth_assumptions(truth: ProblemInstance, n0: int, n1: int) -> GrowthDiagnostics:
    """Advisory report on the growth-rate assumptions behind the R-QDA equivalent."""
    p = truth.p
    mu = truth.mean_difference
    diff = np.linalg.eigvalsh(truth.class0.covariance - truth.class1.covariance)
    tau = 1.0 / np.sqrt(p)
    norms = tuple(float(np.linalg.norm(truth.cls(i).covariance, 2)) for i in (0, 1))
    return GrowthDiagnostics(
        mean_sq_norm=float(mu @ mu),
        mean_ratio=float(mu @ mu) / np.sqrt(p),
        sigma_norms=norms,
        n_large_eigenvalues=int(np.count_nonzero(np.abs(diff) > tau)),
        threshold=tau,
        scaled_abs_eigensum=float(np.sum(np.abs(diff))) / np.sqrt(p),
        dimension_ratio=p / (n0 + n1),
        class_size_gap=int(n0 - n1),
    )
