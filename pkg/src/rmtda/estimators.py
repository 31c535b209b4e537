"""Consistent error estimators that use the training data only.

Both functions take a :class:`FittedDA` and the priors of the rule; there is no
way to pass ground truth in, which keeps them honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import EstimatorBreakdownError
from .model import Classifier, ErrorReport, FittedDA, resolve_priors

__all__ = ["GEstimateRLDA", "GEstimateRQDA", "g_estimate", "g_estimate_rlda", "g_estimate_rqda"]


@dataclass(frozen=True)
class GEstimateRLDA:
    theta: tuple[float, float]
    psi: tuple[float, float]
    eps: tuple[float, float]
    total: float
    priors: tuple[float, float]

    def report(self) -> ErrorReport:
        return ErrorReport.weighted("g", self.eps[0], self.eps[1], self.priors, Classifier.RLDA)


@dataclass(frozen=True)
class GEstimateRQDA:
    xi: tuple[float, float]
    delta: tuple[float, float]
    b: tuple[float, float]
    B: tuple[float, float]
    eps: tuple[float, float]
    total: float
    priors: tuple[float, float]

    def report(self) -> ErrorReport:
        return ErrorReport.weighted("g", self.eps[0], self.eps[1], self.priors, Classifier.RQDA)


def _priors(fit: FittedDA, priors) -> tuple[float, float]:
    return fit.priors if priors is None else resolve_priors(priors, fit.n0, fit.n1)


def _tr_prod(a: np.ndarray, b: np.ndarray) -> float:
    """``tr(a @ b)`` without forming the product."""
    return float(np.sum(a * b.T))


def g_estimate_rlda(fit: FittedDA, priors=None) -> GEstimateRLDA:
    """Training-data estimate of the conditional R-LDA error.

    The sample discriminant mean is corrected by ``theta_i`` and its spread is
    inflated by ``psi_i``, both computed from ``tr(S_i H)``.
    """
    pi0, pi1 = _priors(fit, priors)
    gamma, n = fit.gamma, fit.n
    H = fit.H
    d = fit.mu_hat0 - fit.mu_hat1
    hd = H @ d
    centre = 0.5 * (fit.mu_hat0 + fit.mu_hat1)
    log_ratio = np.log(pi1 / pi0)
    theta, psi, eps = [], [], []
    for i in (0, 1):
        s = fit.sigma_hat(i)
        tr_sh = _tr_prod(s, H)
        denom = 1.0 - gamma / (n - 2) * tr_sh
        if not denom > 0:
            raise EstimatorBreakdownError(f"class {i}: 1 - gamma tr(S H)/(n-2) = {denom:.3e} <= 0", denom)
        psi_i = 1.0 / denom
        theta_i = tr_sh / (fit.n0, fit.n1)[i] * psi_i
        g = float((fit.mu_hat(i) - centre) @ hd)
        var = float(hd @ s @ hd)
        if not var > 0:
            raise EstimatorBreakdownError(f"class {i}: sample variance term {var:.3e} <= 0", var)
        sign = (-1) ** i
        arg = (-sign * g + theta_i + sign * log_ratio) / (psi_i * np.sqrt(var))
        theta.append(theta_i)
        psi.append(psi_i)
        eps.append(float(ndtr(arg)))
    return GEstimateRLDA(tuple(theta), tuple(psi), tuple(eps), pi0 * eps[0] + pi1 * eps[1], (pi0, pi1))


def g_estimate_rqda(fit: FittedDA, priors=None) -> GEstimateRQDA:
    """Training-data estimate of the conditional R-QDA error.

    The leading-order quantities are completed with the finite-sample terms
    that vanish only as ``p`` grows:

    * each unbiased class covariance averages ``n_i - 1`` independent outer
      products, so ``n_i - 1`` is the sample count in every resolvent identity;
    * ``xi`` gets back the mean of the quadratic forms in the estimated means;
    * ``tr(Sigma_i H_i)`` carries its leave-one-out correction;
    * the variance includes the linear part ``4 |r_i|^2 / p``.

    Raises
    ------
    EstimatorBreakdownError
        If ``1 - p/m_i + tr(H_i)/m_i <= 0`` (``m_i = n_i - 1``) or the variance
        estimate is not positive.
    """
    pi0, pi1 = _priors(fit, priors)
    gamma, p = fit.gamma, fit.p
    sp = np.sqrt(p)
    sizes = (fit.n0, fit.n1)
    H = (fit.H0, fit.H1)
    d = fit.mu_hat0 - fit.mu_hat1
    common = -(fit.logdet_H0 - fit.logdet_H1) / sp + 2.0 * np.log(pi1 / pi0) / sp

    xi, delta, b, B, eps = [], [], [], [], []
    for i in (0, 1):
        j = 1 - i
        n_i = sizes[i]
        m = n_i - 1
        ratio = np.trace(H[i]) / m
        denom = 1.0 - p / m + ratio
        if not denom > 0:
            raise EstimatorBreakdownError(f"class {i}: 1 - p/m_i + tr(H_i)/m_i = {denom:.3e} <= 0", denom)
        dl = (p / m - ratio) / denom / gamma
        k = 1.0 + gamma * dl
        s = fit.sigma_hat(i)
        sh_i = s @ H[i]
        sh_j = s @ H[j]
        tr_sh_j = float(np.trace(sh_j))
        # (1/p) tr(Sigma_i H_i Sigma_i H_i) and (1/p) tr(Sigma_i H_j Sigma_i H_j)
        same = k**4 * _tr_prod(sh_i, sh_i) / p - m / p * dl**2 * k**2
        cross = _tr_prod(sh_j, sh_j) / p - (tr_sh_j / m) ** 2 * m / p
        tr_own = m * dl + gamma * p * same / (m * k)

        xi_i = (
            common
            + (-1) ** (i + 1) * float(d @ H[j] @ d) / sp
            + (-1) ** i * (tr_own + tr_sh_j) / (n_i * sp)
        )
        b_i = (-1) ** i * tr_sh_j / sp + (-1) ** (i + 1) * tr_own / sp
        B_i = same + cross - 2.0 * k**2 * _tr_prod(sh_i, sh_j) / p + dl * k * 2.0 / p * tr_sh_j
        hd = H[j] @ d
        r_sq = float(hd @ s @ hd) + p / n_i * (same - cross)
        var = 2.0 * B_i + 4.0 * max(r_sq, 0.0) / p
        if not B_i > 0:
            raise EstimatorBreakdownError(f"class {i}: variance estimate {B_i:.3e} <= 0", B_i)
        xi.append(float(xi_i))
        delta.append(float(dl))
        b.append(float(b_i))
        B.append(float(B_i))
        eps.append(float(ndtr((-1) ** i * (xi_i - b_i) / np.sqrt(var))))
    return GEstimateRQDA(tuple(xi), tuple(delta), tuple(b), tuple(B), tuple(eps),
                         pi0 * eps[0] + pi1 * eps[1], (pi0, pi1))


def g_estimate(fit: FittedDA, kind, priors=None) -> ErrorReport:
    kind = Classifier(kind)
    est = g_estimate_rlda(fit, priors) if kind is Classifier.RLDA else g_estimate_rqda(fit, priors)
    return est.report()
