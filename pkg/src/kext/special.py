"""Special functions and constants used by the entropy formulas.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243
"""Euler-Mascheroni constant."""

# zeta(j) for j = 2..31, used by the Taylor series of log Gamma(1 + z).
_ZETA = (
    1.6449340668482264365, 1.2020569031595942854, 1.0823232337111381915,
    1.0369277551433699263, 1.0173430619844491397, 1.0083492773819228268,
    1.0040773561979443394, 1.0020083928260822144, 1.0009945751278180853,
    1.0004941886041194646, 1.0002460865533080483, 1.0001227133475784891,
    1.0000612481350587048, 1.0000305882363070205, 1.0000152822594086519,
    1.0000076371976378998, 1.0000038172932649998, 1.0000019082127165539,
    1.0000009539620338728, 1.0000004769329867878, 1.0000002384505027277,
    1.0000001192199259653, 1.0000000596081890513, 1.0000000298035035147,
    1.0000000149015548284, 1.0000000074507117898, 1.0000000037253340248,
    1.0000000018626597236, 1.0000000009313274325, 1.0000000004656629065,
)

_ROOT_RADIUS = 0.2
_HARMONIC_DIRECT_MAX = 10**7
_LOG_BETA_TERMS = 10_000


def _lgamma1p_series(z: float) -> float:
    # log Gamma(1 + z) = -gamma z + sum_{j>=2} (-1)^j zeta(j) z^j / j,  |z| <= 0.2
    total = 0.0
    power = -z
    for j, zeta in enumerate(_ZETA, start=2):
        power *= -z
        total += zeta * power / j
    return -EULER_GAMMA * z + total


def log_gamma(x: float) -> float:
    """Natural logarithm of the Gamma function for ``x > 0``.

    Near the zeros of log Gamma at 1 and 2 a Taylor series is used so the
    relative error stays below 1e-13; elsewhere ``math.lgamma`` suffices.
    """
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"log_gamma requires a finite x > 0, got {x!r}")
    if abs(x - 1.0) <= _ROOT_RADIUS:
        return _lgamma1p_series(x - 1.0)
    if abs(x - 2.0) <= _ROOT_RADIUS:
        z = x - 2.0
        return math.log1p(z) + _lgamma1p_series(z)
    return math.lgamma(x)


@functools.lru_cache(maxsize=256)
def harmonic(k: int) -> float:
    """Partial harmonic sum ``H_k = 1 + 1/2 + ... + 1/k`` with ``H_0 = 0``.

    Summed directly (smallest terms first) up to ``k = 10**7``; larger ``k``
    use the asymptotic expansion, which is exact to double precision there.
    """
    k = int(k)
    if k < 0:
        raise DomainError(f"harmonic requires k >= 0, got {k}")
    if k == 0:
        return 0.0
    if k <= 64:
        return math.fsum(1.0 / i for i in range(k, 0, -1))
    if k <= _HARMONIC_DIRECT_MAX:
        return float(np.sum(1.0 / np.arange(k, 0, -1, dtype=np.float64)))
    kk = float(k)
    return math.log(kk) + EULER_GAMMA + 1.0 / (2 * kk) - 1.0 / (12 * kk**2) + 1.0 / (120 * kk**4)


def digamma_int(k: int) -> float:
    """``psi(k) = -gamma + H_{k-1}`` for a positive integer ``k``."""
    if k < 1:
        raise DomainError(f"digamma_int requires k >= 1, got {k}")
    return -EULER_GAMMA + harmonic(k - 1)


def a_integral(k: int) -> float:
    """Log-moment of the Gamma(k) kernel, ``int_0^inf u^(k-1) e^-u log u du``.

    Returned in closed form ``(k-1)! (-gamma + H_{k-1})``; ``a_integral(1)`` is
    ``-gamma``.
    """
    k = int(k)
    if k < 1:
        raise DomainError(f"a_integral requires k >= 1, got {k}")
    return math.factorial(k - 1) * digamma_int(k)


def log_beta(n: int, k: int) -> float:
    """``log B(n, k)`` where ``B(n, k) = Beta(n-k+1, k) = (k-1)!(n-k)!/n!``."""
    n, k = int(n), int(k)
    if k < 1 or k > n:
        raise DomainError(f"log_beta requires 1 <= k <= n, got n={n}, k={k}")
    if n <= 170:
        return math.log(math.factorial(k - 1) * math.factorial(n - k) / math.factorial(n))
    # the larger factorial cancels against n!, leaving a short product
    short, big = sorted((k - 1, n - k))
    if short < _LOG_BETA_TERMS:
        return log_gamma(short + 1) - math.fsum(math.log(j) for j in range(big + 1, n + 1))
    return log_gamma(k) + log_gamma(n - k + 1) - log_gamma(n + 1)
