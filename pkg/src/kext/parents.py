"""Parent distributions, their max domains of attraction and norming constants.

Parents are addressed by a small grammar, ``name`` or
``name:param=value,param=value`` (e.g. ``pareto:alpha=2``), which is what
the command line accepts.

Domain classification is a numerical heuristic: the von Mises ratios are
limits, and only a finite probe grid approaching the right endpoint can be
inspected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericError
from .laws import Family, LimitLaw
from .quadrature import integrate, integrate_log_scale

ArrayFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_PROBE_TAILS = tuple(10.0 ** -j for j in range(2, 13))
STABLE_RTOL = 1e-3
GUMBEL_ATOL = 1e-2
_FAR_X = math.exp(700.0)


@dataclass(frozen=True)
class DomainTag:
    """Max domain of attraction: ``frechet``/``weibull`` (with alpha), ``gumbel`` or ``unknown``."""

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("frechet", "weibull", "gumbel", "unknown"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.kind in ("frechet", "weibull") and not (self.alpha and self.alpha > 0):
            raise DomainError(f"{self.kind} domain needs alpha > 0")

    @property
    def known(self) -> bool:
        return self.kind != "unknown"

    def law(self) -> LimitLaw:
        if self.kind == "unknown":
            raise DomainError("no limit law for an unknown domain")
        if self.kind == "gumbel":
            return LimitLaw.gumbel()
        return LimitLaw(Family(self.kind), self.alpha)

    def matches(self, other: "DomainTag", rtol: float = STABLE_RTOL) -> bool:
        if self.kind != other.kind:
            return False
        if self.alpha is None or other.alpha is None:
            return self.alpha == other.alpha
        return abs(self.alpha - other.alpha) <= rtol * abs(other.alpha)

    def __str__(self) -> str:
        return self.kind if self.alpha is None else f"{self.kind}({self.alpha:g})"


@dataclass(frozen=True)
class NormingConstants:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"norming scale must be positive, got {self.a}")


@dataclass(frozen=True, eq=False)
class ParentDistribution:
    """A continuous parent law described through log-density and log-survival.

    ``isf(q)`` is the upper quantile ``F^{-1}(1 - q)``; for a finite right
    endpoint ``upper_gap(q) = r(F) - isf(q)`` may be given to avoid the
    cancellation.  ``aux_u`` is an optional analytic auxiliary function.
    """

    name: str
    params: dict
    logpdf: ArrayFn
    logsf: ArrayFn
    lower: float
    upper: float
    isf: Callable[[float], float] | None = None
    upper_gap: Callable[[float], float] | None = None
    domain: DomainTag | None = None
    aux_u: Callable[[float], float] | None = None
    spec: str = field(default="")

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"{self.name}: empty support [{self.lower}, {self.upper}]")
        if self.isf is None:
            object.__setattr__(self, "isf", self._invert_sf)
        if not self.spec:
            object.__setattr__(self, "spec", format_spec(self.name, self.params))
        _check_regular(self)

    # -- evaluation --------------------------------------------------------

    def _clip(self, y) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        return y, (y > self.lower) & (y < self.upper)

    def log_pdf(self, y) -> np.ndarray:
        y, inside = self._clip(y)
        out = np.full(y.shape, -np.inf)
        out[inside] = self.logpdf(y[inside])
        return out

    def log_sf(self, y) -> np.ndarray:
        y, inside = self._clip(y)
        out = np.where(y >= self.upper, -np.inf, 0.0)
        out[inside] = self.logsf(y[inside])
        return out

    def log_cdf(self, y) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(-np.expm1(self.log_sf(y)))

    def pdf(self, y) -> np.ndarray:
        return np.exp(self.log_pdf(y))

    def sf(self, y) -> np.ndarray:
        return np.exp(self.log_sf(y))

    def cdf(self, y) -> np.ndarray:
        return -np.expm1(self.log_sf(y))

    def quantile(self, p: float) -> float:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile needs 0 < p < 1, got {p}")
        return float(self.isf(1.0 - p))

    def tail_quantile(self, q: float) -> float:
        """``(1/(1-F))^{<-}(1/q)``, i.e. the upper ``q``-quantile."""
        if not 0.0 < q < 1.0:
            raise DomainError(f"tail probability must be in (0, 1), got {q}")
        return float(self.isf(q))

    def tail_quantiles(self, q) -> np.ndarray:
        """Vectorised :meth:`tail_quantile`."""
        q = np.asarray(q, dtype=float)
        try:
            out = np.asarray(self.isf(q), dtype=float)
            if out.shape == q.shape:
                return out
        except TypeError:
            pass
        return np.array([self.isf(float(v)) for v in q.reshape(-1)]).reshape(q.shape)

    def gaps_to_upper(self, q) -> np.ndarray:
        """Vectorised :meth:`gap_to_upper`."""
        q = np.asarray(q, dtype=float)
        if self.upper_gap is not None:
            return np.asarray(self.upper_gap(q), dtype=float) * np.ones_like(q)
        return self.upper - self.tail_quantiles(q)

    def gap_to_upper(self, q: float) -> float:
        """``r(F) - isf(q)`` for a finite right endpoint."""
        if math.isinf(self.upper):
            raise DomainError(f"{self.name} has an infinite right endpoint")
        if self.upper_gap is not None:
            return float(self.upper_gap(q))
        return self.upper - self.tail_quantile(q)

    def _invert_sf(self, q: float) -> float:
        # bracketed inversion of log F-bar for parents registered without a quantile
        target = math.log(q)

        def f(y: float) -> float:
            return float(self.log_sf(np.array(y))) - target

        lo = self.lower if math.isfinite(self.lower) else -1.0
        hi = self.upper if math.isfinite(self.upper) else 1.0
        while not math.isfinite(self.lower) and f(lo) < 0:
            lo = 2 * lo - 1
        while not math.isfinite(self.upper) and f(hi) > 0:
            hi = 2 * hi + 1
        return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)

    def __repr__(self) -> str:
        return f"ParentDistribution({self.spec!r})"


def _check_regular(d: ParentDistribution) -> None:
    """Reject parents whose density is not eventually nonincreasing or that have atoms."""
    qs, ys = [], []
    for q in DEFAULT_PROBE_TAILS:
        y = float(d.isf(q))
        if not d.lower < y < d.upper or (ys and y <= ys[-1]):
            break
        qs.append(q)
        ys.append(y)
    if len(ys) < 3:
        raise DomainError(f"{d.name}: quantile does not resolve the right tail")
    qs, ys = np.array(qs), np.array(ys)
    back = np.exp(d.log_sf(ys))
    resolved = np.abs(d.upper - ys) > 1e-9 * np.maximum(1.0, np.abs(ys))
    if not np.allclose(back[resolved], qs[resolved], rtol=1e-3, atol=0):
        raise DomainError(f"{d.name}: survival function and quantile disagree (atom or bad quantile)")
    lp = d.log_pdf(ys)
    if not np.all(np.isfinite(lp)):
        raise DomainError(f"{d.name}: density is not positive near the right endpoint")
    if np.any(np.diff(lp) > 1e-9 * np.maximum(1.0, np.abs(lp[1:]))):
        raise DomainError(f"{d.name}: density is not nonincreasing near the right endpoint")


# -- catalogue -----------------------------------------------------------------


def pareto(alpha: float = 2.0) -> ParentDistribution:
    """``F(x) = 1 - x**-alpha`` on ``x >= 1``."""
    a = _positive("alpha", alpha)
    return ParentDistribution(
        "pareto", {"alpha": a},
        logpdf=lambda y: math.log(a) - (a + 1) * np.log(y),
        logsf=lambda y: -a * np.log(y),
        lower=1.0, upper=math.inf,
        isf=lambda q: q ** (-1.0 / a),
        domain=DomainTag("frechet", a),
        aux_u=(lambda t: t / (a - 1)) if a > 1 else None,
    )


def uniform() -> ParentDistribution:
    """Uniform on ``(0, 1)``."""
    return ParentDistribution(
        "uniform", {},
        logpdf=lambda y: np.zeros_like(y),
        logsf=lambda y: np.log1p(-y),
        lower=0.0, upper=1.0,
        isf=lambda q: 1.0 - q,
        upper_gap=lambda q: q,
        domain=DomainTag("weibull", 1.0),
        aux_u=lambda t: (1.0 - t) / 2.0,
    )


def beta_power(beta: float = 2.0) -> ParentDistribution:
    """``F(x) = 1 - (1 - x)**beta`` on ``(0, 1)``; needs ``beta >= 1``."""
    b = _positive("beta", beta)
    return ParentDistribution(
        "betapower", {"beta": b},
        logpdf=lambda y: math.log(b) + (b - 1) * np.log1p(-y),
        logsf=lambda y: b * np.log1p(-y),
        lower=0.0, upper=1.0,
        isf=lambda q: 1.0 - q ** (1.0 / b),
        upper_gap=lambda q: q ** (1.0 / b),
        domain=DomainTag("weibull", b),
        aux_u=lambda t: (1.0 - t) / (b + 1.0),
    )


def exponential(rate: float = 1.0) -> ParentDistribution:
    """Exponential with the given rate."""
    lam = _positive("rate", rate)
    return ParentDistribution(
        "exponential", {"rate": lam},
        logpdf=lambda y: math.log(lam) - lam * y,
        logsf=lambda y: -lam * y,
        lower=0.0, upper=math.inf,
        isf=lambda q: -np.log(q) / lam,
        domain=DomainTag("gumbel"),
        aux_u=lambda t: 1.0 / lam,
    )


def logistic(scale: float = 1.0) -> ParentDistribution:
    """Standard logistic law scaled by ``scale``; auxiliary function is numeric."""
    s = _positive("scale", scale)
    return ParentDistribution(
        "logistic", {"scale": s},
        logpdf=lambda y: -y / s - 2.0 * np.logaddexp(0.0, -y / s) - math.log(s),
        logsf=lambda y: -np.logaddexp(0.0, y / s),
        lower=-math.inf, upper=math.inf,
        isf=lambda q: s * (np.log1p(-q) - np.log(q)),
        domain=DomainTag("gumbel"),
    )


REGISTRY: dict[str, Callable[..., ParentDistribution]] = {
    "pareto": pareto,
    "uniform": uniform,
    "betapower": beta_power,
    "exponential": exponential,
    "logistic": logistic,
}
ALIASES = {"exp": "exponential", "beta-power": "betapower", "beta_power": "betapower"}


def catalog() -> list[ParentDistribution]:
    """Parents with analytically known domains of attraction, one or more per domain."""
    return [pareto(2.0), pareto(1.0), uniform(), beta_power(2.0), exponential(1.0), logistic(1.0)]


def format_spec(name: str, params: dict) -> str:
    if not params:
        return name
    return name + ":" + ",".join(f"{k}={v:g}" for k, v in sorted(params.items()))


def parse_parent(spec: str) -> ParentDistribution:
    """Build a parent from ``name`` or ``name:param=value,...``."""
    name, _, rest = spec.strip().partition(":")
    name = ALIASES.get(name.lower(), name.lower())
    if name not in REGISTRY:
        raise DomainError(f"unknown parent {name!r}; known: {', '.join(sorted(REGISTRY))}")
    params: dict[str, float] = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise DomainError(f"malformed parameter {item!r} in {spec!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise DomainError(f"parameter {key!r} is not a number: {value!r}") from None
    try:
        return REGISTRY[name](**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from None


def _positive(label: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{label} must be a positive number, got {value}")
    return value


# -- domain of attraction ----------------------------------------------------


def auxiliary_u(d: ParentDistribution, t: float, *, numeric: bool = False) -> float:
    """Mean-excess style auxiliary function ``int_t^r F-bar(s) ds / F-bar(t)``.

    Uses the registered analytic form unless ``numeric`` is set or none is
    registered; the numeric integral targets 1e-10 relative error.
    """
    t = float(t)
    log_sf_t = float(d.log_sf(np.array(t)))
    if not (t < d.upper and math.isfinite(log_sf_t)):
        raise DomainError(f"auxiliary_u needs F-bar(t) > 0, got t={t}")
    if d.aux_u is not None and not numeric:
        return float(d.aux_u(t))

    def ratio(s: np.ndarray) -> np.ndarray:
        return np.exp(d.log_sf(s) - log_sf_t)

    if math.isfinite(d.upper):
        parts = [integrate(ratio, t, d.upper, 1e-300, rtol=1e-11)]
    elif t > 0:
        parts = [integrate_log_scale(ratio, t, math.inf, 1e-300, rtol=1e-11, limit=4000)]
    else:
        parts = [integrate(ratio, t, 1.0, 1e-300, rtol=1e-11),
                 integrate_log_scale(ratio, 1.0, math.inf, 1e-300, rtol=1e-11, limit=4000)]
    value = math.fsum(p.value for p in parts)
    err = math.fsum(p.error_bound for p in parts)
    if math.isinf(d.upper):
        # the log-scale integrand must have died out before x overflows
        far = float(ratio(np.array(_FAR_X))) * _FAR_X
        if not far <= 1e-12 * abs(value):
            raise NumericError(
                f"auxiliary integral for {d.spec} diverges or has too heavy a tail",
                {"t": t, "integrand_at_far_end": far, "partial_value": value},
            )
    if not all(p.converged for p in parts) and not err <= 1e-10 * abs(value):
        raise NumericError(
            f"auxiliary integral for {d.spec} did not converge (divergent tail?)",
            {"t": t, "value": value, "error_bound": err},
        )
    if not (math.isfinite(value) and value > 0):
        raise NumericError(f"auxiliary integral for {d.spec} is not finite", {"t": t, "value": value})
    return value


def von_mises_ratios(d: ParentDistribution, probe_points) -> dict[str, np.ndarray]:
    """The three von Mises ratios evaluated on ``probe_points``.

    ``frechet``: x f/F-bar; ``weibull``: (r - x) f/F-bar; ``gumbel``: u(x) f/F-bar.
    Ratios that do not apply (finite vs infinite endpoint) are omitted.
    """
    y = np.asarray(probe_points, dtype=float)
    hazard = np.exp(d.log_pdf(y) - d.log_sf(y))
    out: dict[str, np.ndarray] = {}
    if math.isinf(d.upper):
        out["frechet"] = y * hazard
    else:
        out["weibull"] = (d.upper - y) * hazard
    try:
        u = np.array([auxiliary_u(d, yi) for yi in y])
        out["gumbel"] = u * hazard
    except NumericError:
        pass
    return out


def _stable(values: np.ndarray) -> bool:
    last = values[-3:]
    if len(last) < 3 or not np.all(np.isfinite(last)) or last[-1] == 0:
        return False
    return float(np.max(np.abs(np.diff(last)))) < STABLE_RTOL * abs(last[-1])


def default_probes(d: ParentDistribution) -> np.ndarray:
    return np.array([d.tail_quantile(q) for q in DEFAULT_PROBE_TAILS])


def classify_domain(d: ParentDistribution, probe_points=None) -> DomainTag:
    """Guess the max domain of attraction from von Mises ratios near ``r(F)``.

    The probe grid must approach the right endpoint monotonically.  A stable
    power ratio gives Frechet (infinite endpoint) or Weibull (finite
    endpoint) with the limit as ``alpha``; otherwise a ratio stabilising at
    1 in the auxiliary-function criterion gives Gumbel.
    """
    probes = default_probes(d) if probe_points is None else np.asarray(probe_points, dtype=float)
    if probes.size < 3 or not np.all(np.diff(probes) > 0):
        raise DomainError("probe points must increase strictly towards r(F), at least 3 of them")
    with np.errstate(all="ignore"):
        ratios = von_mises_ratios(d, probes)
    for name, vals in ratios.items():
        if not np.all(np.isfinite(vals[-3:])):
            raise NumericError(f"non-finite {name} ratio near r(F) for {d.spec}",
                               {"probes": probes.tolist(), "ratios": vals.tolist()})
    power = "frechet" if "frechet" in ratios else "weibull"
    if _stable(ratios[power]) and ratios[power][-1] > 0:
        return DomainTag(power, float(ratios[power][-1]))
    gum = ratios.get("gumbel")
    if gum is not None and _stable(gum) and abs(gum[-1] - 1.0) < GUMBEL_ATOL:
        return DomainTag("gumbel")
    return DomainTag("unknown")


def norming_constants(d: ParentDistribution, tag: DomainTag, n: int) -> NormingConstants:
    """Norming constants from the upper ``1/n`` quantile.

    Frechet: ``a = x_n, b = 0``; Weibull: ``a = r - x_n, b = r``; Gumbel:
    ``b = x_n, a = u(b)``, where ``x_n = (1/(1-F))^{<-}(n)``.
    """
    n = int(n)
    if n < 2:
        raise DomainError(f"norming constants need n >= 2, got {n}")
    q = 1.0 / n
    if tag.kind == "frechet":
        return NormingConstants(d.tail_quantile(q), 0.0, n)
    if tag.kind == "weibull":
        if math.isinf(d.upper):
            raise DomainError(f"Weibull domain needs a finite right endpoint ({d.spec})")
        return NormingConstants(d.gap_to_upper(q), d.upper, n)
    if tag.kind == "gumbel":
        b = d.tail_quantile(q)
        return NormingConstants(auxiliary_u(d, b), b, n)
    raise DomainError(f"cannot norm a parent with unknown domain ({d.spec})")
