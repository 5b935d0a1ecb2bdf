"""
Large-array asymptotics of the order-statistics bound.

For N i.i.d. gains and fixed L, the sum of the L largest is asymptotically
Gaussian.  Its moments depend on the threshold v with P(x > v) = L/N, and on
the first two partial moments of the gain distribution above v.  For
Gamma(m, rate m) gains (squared Nakagami-m magnitudes) all of these reduce to
regularized upper incomplete gamma functions.

The rate approximations integrate log2(1 + rho beta x) against the Gaussian,
and the deterministic equivalent sum_k log2(1 + rho beta_k (L / m_k) ln N)
captures the double-logarithmic growth in N.
"""

from dataclasses import dataclass
import math
from typing import Callable, Optional
import warnings

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError
from .special_fn import inv_reg_upper_gamma, reg_upper_gamma, std_normal_cdf

__all__ = ['AsymptoticMoments', 'TailDistribution', 'gamma_tail', 'uniform_tail',
           'exponential_tail', 'threshold', 'trimmed_moments', 'lemma1_moments',
           'approx_mean_rate', 'approx_mean_rate_abs', 'negative_mass',
           'deterministic_equivalent']

_Z_SPAN = 10.0
_QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class AsymptoticMoments:
    """Gaussian limit of the sum of the L largest of N Gamma(m, m) gains.

    ``core_variance`` is the per-term variance of the tail mixture and
    ``variance`` the variance of the whole trimmed sum.
    """
    threshold: float
    mean: float
    core_variance: float
    variance: float
    m: float
    l: int
    n: int

    @property
    def std(self):
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class TailDistribution:
    """
    A gain distribution described through the queries the tail-sum limit needs.

    Parameters
    ----------
    cdf : callable
        F(x).
    quantile : callable
        F^-1(p).
    pdf : callable, optional
        Density; used to integrate partial moments when they are not given.
    isf : callable, optional
        Inverse survival function F^-1(1 - q); preferred over ``quantile``
        because it avoids forming 1 - q for small q.
    first_tail_moment, second_tail_moment : callable, optional
        v -> integral of x dF (resp. x^2 dF) over (v, inf).
    upper : float
        Upper end of the support, used for numerical integration.
    """
    cdf: Callable[[float], float]
    quantile: Callable[[float], float]
    pdf: Optional[Callable[[float], float]] = None
    isf: Optional[Callable[[float], float]] = None
    first_tail_moment: Optional[Callable[[float], float]] = None
    second_tail_moment: Optional[Callable[[float], float]] = None
    upper: float = math.inf

    def upper_quantile(self, q):
        if self.isf is not None:
            return self.isf(q)
        return self.quantile(1.0 - q)

    def _partial(self, v, power):
        if self.pdf is None:
            raise DomainError("partial moments need either closed forms or a pdf")
        val, err = integrate.quad(lambda x: x ** power * self.pdf(x), v, self.upper,
                                  epsabs=0.0, epsrel=1e-12, limit=400)
        return val

    def tail_moment(self, v, power):
        """Integral of x^power dF(x) over (v, upper) for power in {1, 2}."""
        fn = {1: self.first_tail_moment, 2: self.second_tail_moment}[power]
        if fn is not None:
            return fn(v)
        return self._partial(v, power)


def gamma_tail(m):
    """Gamma(shape m, rate m) with closed-form partial moments.

    integral_v^inf x^j f(x) dx = Gamma(m + j) Q(m + j, m v) / (m^j Gamma(m)).
    """
    if not m >= 0.5:
        raise DomainError(f"Nakagami shape must be >= 0.5, got {m!r}")
    lg = math.lgamma(m)
    return TailDistribution(
        cdf=lambda x: 1.0 - reg_upper_gamma(m, m * max(x, 0.0)),
        quantile=lambda p: inv_reg_upper_gamma(m, 1.0 - p) / m,
        isf=lambda q: inv_reg_upper_gamma(m, q) / m,
        pdf=lambda x: math.exp(m * math.log(m) + (m - 1) * math.log(x) - m * x - lg)
        if x > 0 else 0.0,
        first_tail_moment=lambda v: reg_upper_gamma(m + 1, m * v),
        second_tail_moment=lambda v: (m + 1) / m * reg_upper_gamma(m + 2, m * v),
    )


def exponential_tail(rate=1.0):
    return TailDistribution(
        cdf=lambda x: -math.expm1(-rate * max(x, 0.0)),
        quantile=lambda p: -math.log1p(-p) / rate,
        isf=lambda q: -math.log(q) / rate,
        pdf=lambda x: rate * math.exp(-rate * x) if x >= 0 else 0.0,
        first_tail_moment=lambda v: (v + 1.0 / rate) * math.exp(-rate * v),
        second_tail_moment=lambda v: (v * v + 2 * v / rate + 2 / rate ** 2) * math.exp(-rate * v),
    )


def uniform_tail(a=0.0, b=1.0):
    width = b - a
    return TailDistribution(
        cdf=lambda x: min(max((x - a) / width, 0.0), 1.0),
        quantile=lambda p: a + p * width,
        isf=lambda q: b - q * width,
        pdf=lambda x: 1.0 / width if a <= x <= b else 0.0,
        first_tail_moment=lambda v: (b * b - v * v) / (2 * width),
        second_tail_moment=lambda v: (b ** 3 - v ** 3) / (3 * width),
        upper=b,
    )


def _check_sizes(l, n):
    if not (0 < l < n):
        raise DomainError(f"need 0 < L < N, got L={l}, N={n}")


def threshold(m, l, n):
    """Gain level v with Q(m, m v) = L / N."""
    _check_sizes(l, n)
    if not m >= 0.5:
        raise DomainError(f"Nakagami shape must be >= 0.5, got {m!r}")
    return inv_reg_upper_gamma(m, l / n) / m


def _assemble(v, mu, second, l, n):
    core = (n / l) * second - (mu / l) ** 2
    total = l * (core + (v - mu / l) ** 2 * (1.0 - l / n))
    return core, total


def trimmed_moments(m, l, n):
    """
    Gaussian parameters of the sum of the L largest of N Gamma(m, m) gains.

    Returns
    -------
    AsymptoticMoments
        threshold v, mean N Upsilon(m+1, m v) / (m Gamma(m)), core variance
        N Upsilon(m+2, m v) / (L m^2 Gamma(m)) - mean^2 / L^2 and the total
        variance L (core + (v - mean / L)^2 (1 - L / N)).
    """
    v = threshold(m, l, n)
    # Upsilon(m + j, x) / (m^j Gamma(m)) == Q(m + j, x) * Gamma(m + j) / (m^j Gamma(m))
    mu = n * reg_upper_gamma(m + 1, m * v)
    second = (m + 1) / m * reg_upper_gamma(m + 2, m * v)
    core, total = _assemble(v, mu, second, l, n)
    return AsymptoticMoments(v, mu, core, total, float(m), int(l), int(n))


def lemma1_moments(dist, l, n):
    """
    Limit mean and variance of the sum of the L largest of N samples of ``dist``.

    Returns
    -------
    (float, float)
        mu_y = N * int_v^inf x dF and
        sigma_y^2 = L (s^2 + (v - mu_y / L)^2 (1 - L / N)) with
        s^2 = (N / L) int_v^inf x^2 dF - mu_y^2 / L^2 and F(v) = 1 - L / N.
    """
    _check_sizes(l, n)
    v = dist.upper_quantile(l / n)
    if v is None or not math.isfinite(v):
        raise DomainError(f"quantile at 1 - L/N is undefined for L={l}, N={n}")
    mu = n * dist.tail_moment(v, 1)
    second = dist.tail_moment(v, 2)
    _, total = _assemble(v, mu, second, l, n)
    return mu, total


def _gauss_expect(fn, mu, sigma, z_lo=-_Z_SPAN, breaks=()):
    """E{fn(mu + sigma Z)} over Z in [z_lo, 10] for Z standard normal."""
    def integrand(z):
        return fn(mu + sigma * z) * math.exp(-0.5 * z * z)

    pts = [z_lo] + sorted(b for b in breaks if z_lo < b < _Z_SPAN) + [_Z_SPAN]
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        # the error estimate is checked below
        warnings.simplefilter('ignore', integrate.IntegrationWarning)
        for a, b in zip(pts[:-1], pts[1:]):
            val, e = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-11, limit=400)
            total += val
            err += e
    total /= math.sqrt(2.0 * math.pi)
    err /= math.sqrt(2.0 * math.pi)
    if not math.isfinite(total) or err > _QUAD_RTOL * max(abs(total), 1e-300):
        raise ConvergenceError(f"Gaussian quadrature did not converge (err={err:g})")
    return total


def _per_user(moments, beta):
    moments = list(moments)
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if len(moments) != beta.size:
        raise ValueError(f"{len(moments)} moment sets but {beta.size} gains")
    for mo in moments:
        if not mo.variance > 0:
            raise DomainError("Gaussian approximation needs a positive variance")
    return zip(moments, beta)


def approx_mean_rate(moments, beta, rho):
    """
    Gaussian approximation of the mean bound: sum_k E{log2(1 + rho beta_k X_k)}.

    X_k ~ N(mu_k, sigma_k^2).  The log argument must stay positive, so each
    integral is truncated at x > -(1 - 1e-12) / (rho beta_k); the Gaussian is
    integrated over mu +- 10 sigma.
    """
    total = 0.0
    for mo, b in _per_user(moments, beta):
        a = rho * b
        sigma = mo.std
        z_lo = -_Z_SPAN
        if a > 0:
            z_pole = (-(1.0 - 1e-12) / a - mo.mean) / sigma
            z_lo = max(z_lo, z_pole)
        total += _gauss_expect(lambda x: math.log2(1.0 + a * x), mo.mean, sigma, z_lo)
    return total


def approx_mean_rate_abs(moments, beta, rho):
    """Same as :func:`approx_mean_rate` with the integrand log2(1 + rho beta |x|)."""
    total = 0.0
    for mo, b in _per_user(moments, beta):
        a = rho * b
        sigma = mo.std
        kink = -mo.mean / sigma
        total += _gauss_expect(lambda x: math.log2(1.0 + a * abs(x)), mo.mean, sigma,
                               breaks=(kink,))
    return total


def negative_mass(mu, sigma):
    """P(X < 0) for X ~ N(mu, sigma^2)."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return std_normal_cdf(-mu / sigma)


def deterministic_equivalent(m, beta, rho, l, n):
    """sum_k log2(1 + rho beta_k (L / m_k) ln N)."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    m = np.broadcast_to(np.asarray(m, dtype=float), beta.shape)
    if n < 2 or l < 1:
        raise DomainError(f"need N >= 2 and L >= 1, got N={n}, L={l}")
    if np.any(m < 0.5):
        raise DomainError("Nakagami shapes must be >= 0.5")
    return float(np.sum(np.log2(1.0 + rho * beta * (l / m) * math.log(n))))
