"""Finite-sample density and entropy of the normalised k-th largest observation.

For a parent ``F`` with norming constants ``(a_n, b_n)`` the normalised k-th
largest of ``n`` observations has density

    g_n(x) = a f(y) F(y)**(n-k) (1 - F(y))**(k-1) / B(n, k),   y = a x + b,

with ``B(n, k) = (k-1)!(n-k)!/n!``.  Its entropy splits as ``-(I1 + I2)``
where, after substituting ``t = F(y)``, the first part is parent free:

    I1(n) = E[log(T**(n-k) (1-T)**(k-1))] - log B(n, k) - log n,
    I2(n) = int g_n(x) log(n a f(a x + b)) dx,          T ~ Beta(n-k+1, k).

The ``log n`` is carried by ``I2`` so that both parts have finite limits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .errors import DomainError, KextError, NumericError
from .estimate import EntropyEstimate
from .laws import KExtremeLaw, entropy_closed_form
from .parents import (
    DomainTag,
    NormingConstants,
    ParentDistribution,
    classify_domain,
    norming_constants,
)
from .quadrature import QuadratureResult, integrate, integrate_log_scale, neg_plogp_from_log
from .special import EULER_GAMMA, harmonic, log_beta, log_gamma

DEFAULT_SCHEDULE = (100, 1_000, 10_000, 100_000)
_SHAPE_PROBS = (1e-12, 1e-8, 1e-4, 0.01, 0.1, 0.5, 0.9, 0.99, 1 - 1e-4, 1 - 1e-8, 1 - 1e-12)


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """The normalised k-th largest of ``n`` draws from ``parent``."""

    parent: ParentDistribution
    n: int
    k: int
    norm: NormingConstants
    tag: DomainTag

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"need n >= 2, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise DomainError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.norm.n != self.n:
            raise DomainError("norming constants were computed for a different n")

    @classmethod
    def build(cls, parent: ParentDistribution, n: int, k: int,
              tag: DomainTag | None = None, norm: NormingConstants | None = None) -> "FiniteModel":
        n, k = int(n), int(k)
        if tag is None:
            tag = parent.domain if parent.domain is not None else classify_domain(parent)
        if not tag.known:
            raise DomainError(f"{parent.spec}: domain of attraction could not be determined")
        if norm is None:
            if n < 2:
                raise DomainError(f"need n >= 2, got {n}")
            norm = norming_constants(parent, tag, n)
        return cls(parent, n, k, norm, tag)

    @property
    def limit_law(self) -> KExtremeLaw:
        return KExtremeLaw(self.tag.law(), self.k)

    @property
    def support(self) -> tuple[float, float]:
        a, b = self.norm.a, self.norm.b
        return (self.parent.lower - b) / a, (self.parent.upper - b) / a

    def rescaled(self, factor: float) -> "FiniteModel":
        """Same model with ``a_n`` multiplied by ``factor``."""
        norm = NormingConstants(self.norm.a * factor, self.norm.b, self.n)
        return FiniteModel(self.parent, self.n, self.k, norm, self.tag)

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(np.isnan(x)):
            raise DomainError("NaN passed to a density")
        a, b = self.norm.a, self.norm.b
        n, k = self.n, self.k
        y = a * x + b
        out = self.parent.log_pdf(y) + (math.log(a) - log_beta(n, k))
        if n > k:
            out = out + (n - k) * self.parent.log_cdf(y)
        if k > 1:
            out = out + (k - 1) * self.parent.log_sf(y)
        return np.where(np.isnan(out), -np.inf, out)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def quantile_points(self) -> list[float]:
        """Quantiles of the normalised k-th extreme, used as quadrature breakpoints."""
        a, b = self.norm.a, self.norm.b
        pts = []
        # the upper tail probability F-bar(Y) of the k-th largest is Beta(k, n-k+1)
        tails = beta_dist.ppf(_SHAPE_PROBS, self.k, self.n - self.k + 1)
        for q in tails:
            if 0.0 < q < 1.0:
                pts.append((self.parent.tail_quantile(float(q)) - b) / a)
        return sorted({p for p in pts if math.isfinite(p)})


def pdf_gnk(m: FiniteModel, x) -> np.ndarray | float:
    """Density of the normalised k-th largest observation, in log space throughout."""
    val = m.pdf(x)
    return float(val) if np.ndim(val) == 0 else val


def integrate_model(m: FiniteModel, integrand, tol: float = 1e-10) -> QuadratureResult:
    """Integrate ``integrand(x)`` over the normalised support of ``m``.

    The range is cut at quantiles of the k-th extreme; an unbounded right
    tail of a Frechet-domain parent is integrated in log coordinates.
    """
    lo, hi = m.support
    pts = [p for p in m.quantile_points() if lo < p < hi]
    heavy = math.isinf(hi) and m.tag.kind == "frechet"
    if not heavy:
        return integrate(integrand, lo, hi, tol, points=pts)
    cut = next((p for p in pts if p > 0), 1.0)
    cut = max(cut, lo) if lo > 0 else cut
    pieces = []
    if lo < cut:
        pieces.append(integrate(integrand, lo, cut, tol / 2, points=[p for p in pts if p < cut]))
    pieces.append(integrate_log_scale(integrand, cut, math.inf, tol / 2,
                                      points=[p for p in pts if p > cut]))
    return QuadratureResult(
        math.fsum(p.value for p in pieces),
        math.fsum(p.error_bound for p in pieces),
        sum(p.evaluations for p in pieces),
        all(p.converged for p in pieces),
        sum(p.intervals for p in pieces),
    )


def _checked(res: QuadratureResult, what: str, m: FiniteModel) -> QuadratureResult:
    if not res.converged:
        raise NumericError(
            f"{what} quadrature did not converge for {m.parent.spec}, n={m.n}, k={m.k}",
            {"value": res.value, "error_bound": res.error_bound,
             "intervals": res.intervals, "evaluations": res.evaluations},
        )
    return res


def normalization(m: FiniteModel, tol: float = 1e-11) -> QuadratureResult:
    return integrate_model(m, m.pdf, tol)


def entropy_gnk(m: FiniteModel, tol: float = 1e-10) -> EntropyEstimate:
    """Entropy of the normalised k-th extreme by adaptive quadrature."""
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    res = _checked(integrate_model(m, lambda x: neg_plogp_from_log(m.logpdf(x)), tol), "entropy", m)
    return EntropyEstimate(res.value, "quadrature", error=res.error_bound,
                           details={"n": m.n, "k": m.k, "intervals": res.intervals})


def i2_term(m: FiniteModel, tol: float = 1e-10) -> float:
    """``int g_n(x) log(n a f(a x + b)) dx``; test support for the decomposition."""
    a, b, n = m.norm.a, m.norm.b, m.n

    def integrand(x: np.ndarray) -> np.ndarray:
        lg = m.logpdf(x)
        out = np.zeros_like(lg)
        live = lg > -690.0
        y = a * x[live] + b
        out[live] = np.exp(lg[live]) * (math.log(n * a) + m.parent.log_pdf(y))
        return out

    return _checked(integrate_model(m, integrand, tol), "I2", m).value


def i1_exact(n: int, k: int) -> float:
    """Parent-free part of the finite-n entropy decomposition.

    ``log(prod_{i=1..k}(1 - (i-1)/n) / Gamma(k)) - sum_{i=1..k} (n-k)/(n-k+i)
    - (k-1)(H_n - H_{k-1} - log n)``.
    """
    n, k = int(n), int(k)
    if k < 1 or k >= n:
        raise DomainError(f"i1_exact needs 1 <= k <= n-1, got n={n}, k={k}")
    log_prod = math.fsum(math.log1p(-(i - 1) / n) for i in range(1, k + 1))
    ratio_sum = math.fsum((n - k) / (n - k + i) for i in range(1, k + 1))
    tail = harmonic(n) - harmonic(k - 1) - math.log(n)
    return log_prod - log_gamma(k) - ratio_sum - (k - 1) * tail


def i1_limit(k: int) -> float:
    """Large-n limit of :func:`i1_exact`: ``-log Gamma(k) - k - (k-1)(gamma - H_{k-1})``."""
    k = int(k)
    if k < 1:
        raise DomainError(f"i1_limit needs k >= 1, got {k}")
    return -log_gamma(k) - k - (k - 1) * (EULER_GAMMA - harmonic(k - 1))


def default_grid(law: KExtremeLaw, num: int = 201) -> np.ndarray:
    """Compact grid where the base law's distribution lies in [0.01, 0.999]."""
    base = KExtremeLaw(law.law, 1)
    return np.linspace(base.quantile(0.01), base.quantile(0.999), num)


def sup_density_gap(m, law: KExtremeLaw, grid) -> float:
    """``max |g_n(x) - g(x)|`` over ``grid``; ``m`` is anything with a ``pdf``."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise DomainError("empty grid")
    return float(np.max(np.abs(m.pdf(grid) - law.pdf(grid))))


@dataclass
class ConvergenceEntry:
    n: int
    entropy: EntropyEstimate | None
    sup_gap: float | None
    status: str = "ok"
    message: str = ""


@dataclass
class ConvergenceReport:
    """Finite-n entropies and density gaps against the limit law."""

    parent: str
    law: KExtremeLaw
    target: float
    grid: np.ndarray
    entries: list[ConvergenceEntry] = field(default_factory=list)

    @property
    def schedule(self) -> list[int]:
        return [e.n for e in self.entries]

    @property
    def entropies(self) -> list[float | None]:
        return [e.entropy.value if e.entropy else None for e in self.entries]

    @property
    def gaps(self) -> list[float | None]:
        return [abs(h - self.target) if h is not None else None for h in self.entropies]

    @property
    def sup_gaps(self) -> list[float | None]:
        return [e.sup_gap for e in self.entries]

    @property
    def ok(self) -> bool:
        return all(e.status == "ok" for e in self.entries)

    def gaps_decreasing(self) -> bool:
        g = self.gaps
        return self.ok and all(b < a for a, b in zip(g, g[1:]))

    def rows(self) -> list[dict]:
        out = []
        for e, gap in zip(self.entries, self.gaps):
            out.append({
                "n": e.n,
                "h_gnk": e.entropy.value if e.entropy else None,
                "quad_error": e.entropy.error if e.entropy else None,
                "target": self.target,
                "gap": gap,
                "sup_density_gap": e.sup_gap,
                "status": e.status,
            })
        return out


def _entry(parent, k, n, tag, grid, law, tol) -> ConvergenceEntry:
    try:
        m = FiniteModel.build(parent, n, k, tag)
        h = entropy_gnk(m, tol)
        return ConvergenceEntry(n, h, sup_density_gap(m, law, grid))
    except KextError as exc:
        return ConvergenceEntry(n, None, None, "error", str(exc))


def convergence_report(
    parent: ParentDistribution,
    k: int,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    grid=None,
    tol: float = 1e-10,
    *,
    tag: DomainTag | None = None,
    workers: int = 1,
) -> ConvergenceReport:
    """Entropy and sup-norm density gap for each ``n`` in ``schedule``.

    Entries are independent; with ``workers > 1`` they are evaluated in a
    thread pool and still reported in schedule order.  A failing entry is
    recorded with status ``error`` rather than aborting the report.
    """
    schedule = [int(n) for n in schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError("schedule must be non-empty and strictly increasing")
    if tag is None:
        tag = parent.domain if parent.domain is not None else classify_domain(parent)
    if not tag.known:
        raise DomainError(f"{parent.spec}: domain of attraction could not be determined")
    law = KExtremeLaw(tag.law(), k)
    grid = default_grid(law) if grid is None else np.asarray(grid, dtype=float)
    args = [(parent, k, n, tag, grid, law, tol) for n in schedule]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda a: _entry(*a), args))
    else:
        entries = [_entry(*a) for a in args]
    return ConvergenceReport(parent.spec, law, entropy_closed_form(law), grid, entries)
