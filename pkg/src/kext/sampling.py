"""Monte Carlo draws of normalised k-th extremes and spacing entropy estimates.

Random streams use numpy's PCG64 bit generator seeded from
``SeedSequence(seed, spawn_key=(stream,))``; a given (seed, stream) pair
reproduces the same draws for a given numpy release on every platform.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, TieError
from .estimate import EntropyEstimate
from .finite_n import FiniteModel
from .laws import KExtremeLaw, entropy_closed_form
from .parents import DomainTag, ParentDistribution

MIN_MC_COUNT = 10_000
CI_SPLITS = 10


@dataclass(frozen=True)
class RandomStream:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.stream < 0:
            raise DomainError(f"stream id must be non-negative, got {self.stream}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(eq=False)
class SampleBatch:
    values: np.ndarray
    model: FiniteModel | None = None
    normalized: bool = True
    rng: RandomStream | None = None

    def __len__(self) -> int:
        return len(self.values)

    def header(self) -> dict:
        m = self.model
        info = {}
        if m is not None:
            info.update(parent=m.parent.spec, n=m.n, k=m.k, a_n=m.norm.a, b_n=m.norm.b)
        if self.rng is not None:
            info.update(seed=self.rng.seed, stream=self.rng.stream)
        return info


def _tail_probabilities(m: FiniteModel, count: int, gen: np.random.Generator) -> np.ndarray:
    # F-bar at the k-th largest is Beta(k, n-k+1) = G_k / (G_k + G_{n-k+1})
    head = gen.standard_gamma(m.k, size=count)
    rest = gen.standard_gamma(m.n - m.k + 1, size=count)
    return head / (head + rest)


def sample_kth_extreme(m: FiniteModel, count: int, rng: RandomStream) -> SampleBatch:
    """Draw ``count`` normalised k-th largest values, ``(X_{n-k+1:n} - b_n)/a_n``.

    Cost per draw does not depend on ``n``: the upper tail probability at the
    k-th largest is drawn from its Beta law and mapped through the parent's
    upper quantile.
    """
    count = int(count)
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    q = _tail_probabilities(m, count, rng.generator())
    a, b = m.norm.a, m.norm.b
    if m.tag.kind == "weibull":
        values = (m.parent.upper - b - m.parent.gaps_to_upper(q)) / a
    else:
        values = (m.parent.tail_quantiles(q) - b) / a
    return SampleBatch(values, m, True, rng)


def sample_streams(m: FiniteModel, counts: Sequence[int], seed: int, workers: int = 1) -> SampleBatch:
    """Draw one chunk per stream id ``0..len(counts)-1`` and concatenate in stream order."""
    jobs = [(c, RandomStream(seed, i)) for i, c in enumerate(counts)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: sample_kth_extreme(m, *j), jobs))
    else:
        parts = [sample_kth_extreme(m, *j) for j in jobs]
    return SampleBatch(np.concatenate([p.values for p in parts]), m, True, RandomStream(seed, 0))


def brute_force_kth_extreme(m: FiniteModel, count: int, rng: RandomStream) -> np.ndarray:
    """Reference sampler: sort ``n`` parent draws and keep the k-th largest."""
    gen = rng.generator()
    u = gen.random((count, m.n))
    tail = np.sort(1.0 - u, axis=1)[:, m.k - 1]  # k-th smallest upper tail probability
    y = m.parent.tail_quantiles(tail)
    return (y - m.norm.b) / m.norm.a


def default_window(n: int) -> int:
    return max(1, math.isqrt(n))


def vasicek(values, window: int | None = None) -> float:
    """Vasicek m-spacing entropy estimate with indices clamped at the ends."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    m = default_window(n) if window is None else int(window)
    if m < 1 or n < 2 * m + 2:
        raise DomainError(f"need at least 2m+2 = {2 * m + 2} values, got {n}")
    idx = np.arange(n)
    spacing = x[np.minimum(idx + m, n - 1)] - x[np.maximum(idx - m, 0)]
    if np.any(spacing <= 0):
        raise TieError(int(n - np.unique(x).size))
    return float(np.mean(np.log(n / (2.0 * m) * spacing)))


def spacing_entropy(batch, window: int | None = None, level: float = 0.99) -> EntropyEstimate:
    """Spacing entropy estimate with a batch-splitting confidence interval.

    The full sample gives the point estimate (default window ``floor(sqrt(N))``).
    The sample, in draw order, is cut into ten parts whose estimates give a
    standard error; the interval is Student-t with nine degrees of freedom.
    """
    values = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    n = values.size
    m = default_window(n) if window is None else int(window)
    value = vasicek(values, m)
    parts = np.array_split(values, CI_SPLITS)
    sub_window = max(1, round(m / math.sqrt(CI_SPLITS)))
    try:
        subs = np.array([vasicek(p, sub_window) for p in parts])
    except DomainError:
        return EntropyEstimate(value, "spacing-MC", details={"window": m, "size": n})
    se = float(np.std(subs, ddof=1) / math.sqrt(CI_SPLITS))
    half = float(stats.t.ppf(0.5 + level / 2, CI_SPLITS - 1)) * se
    return EntropyEstimate(value, "spacing-MC", error=se, ci=(value - half, value + half),
                           details={"window": m, "size": n, "level": level})


def ks_distance(values, law: KExtremeLaw) -> float:
    """Kolmogorov-Smirnov distance between the sample and ``law``'s distribution."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    cdf = np.asarray(law.cdf(x))
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


@dataclass
class MCReport:
    estimate: EntropyEstimate
    target: float
    inside_ci: bool
    ks_distance: float
    model: FiniteModel = field(repr=False)
    batch: SampleBatch = field(repr=False)

    def row(self) -> dict:
        lo, hi = self.estimate.ci if self.estimate.ci else (None, None)
        return {
            "parent": self.model.parent.spec,
            "n": self.model.n,
            "k": self.model.k,
            "count": len(self.batch),
            "estimate": self.estimate.value,
            "ci_low": lo,
            "ci_high": hi,
            "target": self.target,
            "inside_ci": self.inside_ci,
            "ks_distance": self.ks_distance,
        }


def mc_convergence(
    parent: ParentDistribution,
    k: int,
    n: int,
    count: int,
    rng: RandomStream,
    *,
    window: int | None = None,
    level: float = 0.99,
    tag: DomainTag | None = None,
) -> MCReport:
    """Simulate normalised k-th extremes and compare the spacing estimate to the limit entropy."""
    if count < MIN_MC_COUNT:
        raise DomainError(f"count must be >= {MIN_MC_COUNT}, got {count}")
    m = FiniteModel.build(parent, n, k, tag)
    batch = sample_kth_extreme(m, count, rng)
    est = spacing_entropy(batch, window, level)
    target = entropy_closed_form(m.limit_law)
    inside = est.ci is not None and est.ci[0] <= target <= est.ci[1]
    return MCReport(est, target, inside, ks_distance(batch.values, m.limit_law), m, batch)


def write_batch_csv(batch: SampleBatch, fh: IO[str]) -> None:
    """Single-column CSV; a ``#`` comment line records the provenance."""
    info = batch.header()
    fh.write("# " + ", ".join(f"{k}={_fmt(v)}" for k, v in info.items()) + "\n")
    fh.write("value\n")
    for v in batch.values:
        fh.write(f"{v:.17g}\n")


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, float) else str(v)
