"""Max-stable laws and the limit laws of the k-th largest order statistic.

Every law is written through ``s(x) = -log G(x)``:

* Frechet(alpha): ``s = x**-alpha`` on ``x > 0``
* Weibull(alpha): ``s = (-x)**alpha`` on ``x < 0``
* Gumbel:         ``s = exp(-x)`` on the real line

The k-th extreme law then has distribution ``G * sum_{i<k} s**i / i!`` and
density ``g * s**(k-1) / (k-1)!``.  Densities are assembled in log space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import DomainError, NumericError
from .estimate import EntropyEstimate
from .quadrature import QuadratureResult, integrate, integrate_log_scale, neg_plogp_from_log
from .special import digamma_int, log_gamma


class Family(str, enum.Enum):
    FRECHET = "frechet"
    WEIBULL = "weibull"
    GUMBEL = "gumbel"


@dataclass(frozen=True)
class LimitLaw:
    """One of the three max-stable laws; ``alpha`` is None for Gumbel."""

    family: Family
    alpha: float | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.GUMBEL:
            if self.alpha is not None:
                raise DomainError("the Gumbel law takes no shape parameter")
        else:
            if self.alpha is None or not (self.alpha > 0 and math.isfinite(self.alpha)):
                raise DomainError(f"{fam.value} law needs alpha > 0, got {self.alpha!r}")
            object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def frechet(cls, alpha: float) -> "LimitLaw":
        return cls(Family.FRECHET, alpha)

    @classmethod
    def weibull(cls, alpha: float) -> "LimitLaw":
        return cls(Family.WEIBULL, alpha)

    @classmethod
    def gumbel(cls) -> "LimitLaw":
        return cls(Family.GUMBEL)

    @property
    def support(self) -> tuple[float, float]:
        if self.family is Family.FRECHET:
            return 0.0, math.inf
        if self.family is Family.WEIBULL:
            return -math.inf, 0.0
        return -math.inf, math.inf

    def label(self) -> str:
        if self.family is Family.GUMBEL:
            return "gumbel"
        return f"{self.family.value}(alpha={self.alpha:g})"

    # -- building blocks, all vectorised ------------------------------------

    def _inside(self, x: np.ndarray) -> np.ndarray:
        if self.family is Family.FRECHET:
            return x > 0
        if self.family is Family.WEIBULL:
            return x < 0
        return np.isfinite(x)

    def log_s(self, x: np.ndarray) -> np.ndarray:
        """``log(-log G(x))`` on the open support."""
        if self.family is Family.FRECHET:
            return -self.alpha * np.log(x)
        if self.family is Family.WEIBULL:
            return self.alpha * np.log(-x)
        return -x

    def s(self, x) -> np.ndarray:
        """``-log G(x)``: +inf left of the support, 0 right of it."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        if self.family is Family.GUMBEL:
            with np.errstate(over="ignore"):
                return np.exp(-x)
        inside = self._inside(x)
        with np.errstate(divide="ignore", over="ignore"):
            out[inside] = np.exp(self.log_s(x[inside]))
        if self.family is Family.FRECHET:
            out[~inside] = np.inf
        else:
            out[~inside] = 0.0
        return out

    def x_from_s(self, s: float) -> float:
        """Inverse of :meth:`s` on the support."""
        if self.family is Family.FRECHET:
            return math.inf if s == 0 else s ** (-1.0 / self.alpha)
        if self.family is Family.WEIBULL:
            return -(s ** (1.0 / self.alpha))
        return math.inf if s == 0 else -math.log(s)

    def logpdf(self, x) -> np.ndarray:
        """Log density of the law itself (k = 1)."""
        return KExtremeLaw(self, 1).logpdf(x)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def cdf(self, x) -> np.ndarray:
        return np.exp(-self.s(x))


@dataclass(frozen=True)
class KExtremeLaw:
    """Limit law of the normalised k-th largest observation."""

    law: LimitLaw
    k: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"rank k must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def support(self) -> tuple[float, float]:
        return self.law.support

    def label(self) -> str:
        return f"{self.law.label()}[k={self.k}]"

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(np.isnan(x)):
            raise DomainError("NaN passed to a density")
        law, k = self.law, self.k
        out = np.full(x.shape, -np.inf)
        inside = law._inside(x) & np.isfinite(x)
        xi = x[inside]
        if xi.size:
            ls = law.log_s(xi)
            with np.errstate(over="ignore"):
                s = np.exp(ls)
            if law.family is Family.GUMBEL:
                log_jac = ls  # |ds/dx| = s
            elif law.family is Family.FRECHET:
                log_jac = math.log(law.alpha) + ls - np.log(xi)
            else:
                log_jac = math.log(law.alpha) + ls - np.log(-xi)
            out[inside] = log_jac + (k - 1) * ls - s - log_gamma(k)
        return out

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def cdf(self, x) -> np.ndarray:
        return _poisson_head(self.law.s(x), self.k)

    def quantile(self, p: float) -> float:
        return quantile_k(self, p)

    def entropy(self) -> float:
        return entropy_closed_form(self)


def _poisson_head(s: np.ndarray, k: int) -> np.ndarray:
    """``exp(-s) sum_{i<k} s**i / i!``, summed largest term first with Kahan."""
    s = np.asarray(s, dtype=float)
    flat = s.reshape(-1)
    out = np.zeros_like(flat)
    live = np.isfinite(flat)
    sl = flat[live]
    if sl.size:
        i = np.arange(k, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_terms = -sl[:, None] + i[None, :] * np.log(sl)[:, None] - gammaln(i + 1)[None, :]
        log_terms[:, 0] = -sl
        log_terms[sl == 0, 1:] = -np.inf
        terms = np.sort(np.exp(log_terms), axis=1)[:, ::-1]
        total = np.zeros(sl.shape)
        comp = np.zeros(sl.shape)
        for j in range(k):
            y = terms[:, j] - comp
            t = total + y
            comp = (t - total) - y
            total = t
        out[live] = np.minimum(total, 1.0)
    return out.reshape(s.shape)


def pdf_k(m: KExtremeLaw, x) -> np.ndarray | float:
    """Density of the k-th extreme limit law; 0 outside the support."""
    val = m.pdf(x)
    return float(val) if np.ndim(val) == 0 else val


def cdf_k(m: KExtremeLaw, x) -> np.ndarray | float:
    """Distribution function of the k-th extreme limit law."""
    val = m.cdf(x)
    return float(val) if np.ndim(val) == 0 else val


def quantile_k(m: KExtremeLaw, p: float) -> float:
    """Inverse of :func:`cdf_k`, accurate to 1e-12 in probability.

    The root is found in ``s = -log G`` where the distribution is the
    decreasing Poisson head; the base-law quantile ``s = -log p`` is a lower
    bracket because the head dominates its first term.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs 0 < p < 1, got {p}")
    k = m.k

    def excess(s: float) -> float:
        return float(_poisson_head(np.array(s), k)) - p

    lo = -math.log(p)
    if excess(lo) <= 0.0:
        return m.law.x_from_s(lo)
    hi = lo + k + 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericError("could not bracket quantile", {"p": p, "k": k})
    s = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return m.law.x_from_s(s)


def entropy_closed_form(m: KExtremeLaw) -> float:
    """Shannon entropy of the k-th extreme limit law in closed form.

    With ``psi(k) = -gamma + H_{k-1}``:

    * Frechet: ``-log(alpha/(k-1)!) - (alpha k + 1)/alpha psi(k) + k``
    * Weibull: ``-log(alpha/(k-1)!) - (alpha k - 1)/alpha psi(k) + k``
    * Gumbel:  ``log (k-1)! - k psi(k) + k``
    """
    law, k = m.law, m.k
    psi = digamma_int(k)
    log_fact = log_gamma(k)
    if law.family is Family.GUMBEL:
        return log_fact - k * psi + k
    a = law.alpha
    slope = (a * k + 1.0) / a if law.family is Family.FRECHET else (a * k - 1.0) / a
    return -math.log(a) + log_fact - slope * psi + k


def _shape_points(m: KExtremeLaw) -> list[float]:
    probs = (1e-8, 1e-3, 0.1, 0.5, 0.9, 0.999, 1 - 1e-8)
    return [quantile_k(m, p) for p in probs]


def integrate_law(m: KExtremeLaw, integrand, tol: float = 1e-10) -> QuadratureResult:
    """Integrate ``integrand(x)`` over the support of ``m``.

    Frechet and Weibull supports are handled in log coordinates of ``|x|`` so
    power-law behaviour at 0 and infinity becomes exponential decay.
    """
    fam = m.law.family
    pts = _shape_points(m)
    if fam is Family.GUMBEL:
        res = integrate(integrand, -math.inf, math.inf, tol, points=pts)
    elif fam is Family.FRECHET:
        res = integrate_log_scale(integrand, 0.0, math.inf, tol, points=pts)
    else:
        res = integrate_log_scale(lambda y: integrand(-y), 0.0, math.inf, tol,
                                  points=[-p for p in pts])
    return res


def entropy_quadrature(m: KExtremeLaw, tol: float = 1e-10) -> EntropyEstimate:
    """``-int pdf log pdf`` by adaptive quadrature over the support."""
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    res = integrate_law(m, lambda x: neg_plogp_from_log(m.logpdf(x)), tol)
    if not res.converged:
        raise NumericError(
            f"entropy quadrature did not converge for {m.label()}",
            {"value": res.value, "error_bound": res.error_bound,
             "intervals": res.intervals, "evaluations": res.evaluations},
        )
    return EntropyEstimate(res.value, "quadrature", error=res.error_bound,
                           details={"evaluations": res.evaluations, "intervals": res.intervals})
