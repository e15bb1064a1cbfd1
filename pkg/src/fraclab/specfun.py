"""Gamma and two-parameter Mittag-Leffler functions on the real line.

``E[a,b](z) = sum_m z^m / Gamma(a*m + b)`` generalizes the exponential and
governs the linear dynamics of Caputo-fractional evolution equations, so the
solver needs it accurately from small arguments deep into the negative axis.

Evaluation strategy (per call, cheapest certified regime wins):

* Taylor series with compensated summation.  Fine for z >= 0 (positive
  terms) and for mildly negative z; on the negative axis the series cancels
  catastrophically once ``|z|**(1/a)`` is large, so its error estimate
  rejects it there.
* Large-negative expansion ``-sum_k z**(-k) / Gamma(b - a*k)`` truncated at
  the smallest term, plus, for ``1 <= a <= 2``, the exponentially decaying
  cosine contribution that the algebraic series misses.
* A non-oscillatory integral representation on ``(0, inf)`` (0 < a < 1),
  exact for negative arguments and evaluated with adaptive quadrature; this
  covers the band where neither series certifies.  Second parameters above 1
  are reduced with the three-term recurrence before integrating.

Each regime returns a value together with an error estimate; a call fails
loudly (``MLConvergenceError``) rather than return an uncertified number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.integrate import quad

__all__ = [
    "GammaPoleError",
    "MLConvergenceError",
    "MLParams",
    "gamma_fn",
    "mittag_leffler",
    "ml_value_and_error",
    "ml_recurrence_residual",
]

#: relative accuracy target a regime must certify before its value is used
ML_RELTOL = 1e-10

#: tiny values are accepted on an absolute certificate instead: near the
#: order-1 boundary the exponential branch emerges at exactly the algebraic
#: expansion's truncation floor, so relative accuracy on values far below
#: every other scale in a computation is neither reachable nor needed
ML_ABSTOL = 1e-13

#: Taylor/asymptotic handoff point on the negative axis
Z_SWITCH = 5.0

# cancellation exponent |z|**(1/alpha) below which plain double Taylor is safe
_TAYLOR_SAFE_Y = 10.0


class GammaPoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


class MLConvergenceError(ArithmeticError):
    """No evaluation regime certified the requested tolerance."""


def gamma_fn(x: float) -> float:
    """Gamma function with explicit pole errors at 0, -1, -2, ...

    Relative error is a few ulp on (0, 20] (C library Lanczos-class
    implementation underneath).
    """
    if x <= 0.0 and x == math.floor(x):
        raise GammaPoleError(f"gamma pole at x = {x:g}")
    return math.gamma(x)


def _rgamma(w: float) -> float:
    """1/Gamma(w) with the convention 1/Gamma = 0 at the poles."""
    if w > 0.0:
        return 1.0 / math.gamma(w)
    if w == math.floor(w):
        return 0.0
    sgn, logmag = _rgamma_signed_log(w)
    return sgn * math.exp(logmag)


def _rgamma_signed_log(w: float) -> tuple[float, float]:
    """(sign, log|1/Gamma(w)|) for non-pole w, overflow-safe for w << 0."""
    if w > 0.0:
        return 1.0, -math.lgamma(w)
    # reflection 1/Gamma(w) = Gamma(1-w) sin(pi w) / pi, with argument
    # reduction for sin(pi w) so large |w| keeps full precision
    fl = math.floor(w)
    frac = w - fl
    s = math.sin(math.pi * frac)
    if int(fl) % 2 != 0:
        s = -s
    if s == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, s), math.lgamma(1.0 - w) + math.log(abs(s)) - math.log(math.pi)


@dataclass(frozen=True)
class MLParams:
    """Order pair (alpha, beta) of the two-parameter Mittag-Leffler function."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def mittag_leffler(params: MLParams, z: float) -> float:
    """E[alpha, beta](z) for real z, certified to ~1e-10 relative."""
    val, _ = _ml_core(params.alpha, params.beta, float(z))
    return val


def ml_value_and_error(params: MLParams, z: float) -> tuple[float, float]:
    """Value and the evaluating regime's relative error estimate."""
    return _ml_core(params.alpha, params.beta, float(z))


def ml_recurrence_residual(params: MLParams, z: float) -> float:
    """Self-consistency defect E[a,b](z) - z*E[a,a+b](z) - 1/Gamma(b).

    Identically zero in exact arithmetic; the magnitude bounds the internal
    consistency of the two evaluations.
    """
    a, b = params.alpha, params.beta
    lhs = _ml_core(a, b, float(z))[0]
    shifted = _ml_core(a, a + b, float(z))[0]
    return lhs - z * shifted - _rgamma(b)


# ---------------------------------------------------------------------------
# regime implementations; each returns (value, absolute error estimate)


def _ml_taylor(alpha: float, beta: float, z: float, max_terms: int = 300000):
    s = 0.0
    comp = 0.0  # Kahan compensation
    scale = 0.0
    zp = 1.0
    logabsz = math.log(abs(z)) if z != 0.0 else -math.inf
    neg = z < 0.0
    use_log = False
    drift = 0.0
    m = 0
    small_run = 0
    t = 0.0
    while m < max_terms:
        arg = alpha * m + beta
        if not use_log and abs(zp) > 1e280:
            use_log = True
        if use_log:
            logt = m * logabsz - math.lgamma(arg)
            t = 0.0 if logt < -745.0 else math.exp(logt)
            if neg and m % 2:
                t = -t
            drift = max(drift, 2e-15 * abs(t) * 1.0)
        else:
            t = zp * _rgamma(arg)
            zp *= z
        y = t - comp
        tot = s + y
        comp = (tot - s) - y
        s = tot
        at = abs(t)
        if at > scale:
            scale = at
        # safe to stop once terms are decaying (ratio < 1/2) and negligible
        decaying = abs(z) < 0.5 * max(arg, 1.0) ** alpha
        if decaying and at <= 1e-17 * max(scale, abs(s), 1e-300):
            small_run += 1
            if small_run >= 4:
                break
        else:
            small_run = 0
        m += 1
    else:
        return s, math.inf
    est = 4e-16 * scale + drift + 2.0 * abs(t)
    return s, est


def _ml_asymptotic(alpha: float, beta: float, z: float, kmax: int = 400):
    """Large-|z| expansion on the negative axis, optimally truncated."""
    x = -z
    if x <= 1.0:
        return 0.0, math.inf  # divergent immediately
    invz = 1.0 / z
    logabsz = math.log(x)
    s = 0.0
    comp = 0.0
    tail = math.inf
    # individual terms can dip spuriously when beta - alpha*k grazes a Gamma
    # pole (the sin factor), so truncation control uses the smooth envelope
    # |1/Gamma(w)| <= Gamma(1-w)/pi instead of the term magnitudes
    logpi = math.log(math.pi)
    best_env = math.inf
    best_s = 0.0
    for k in range(1, kmax + 1):
        w = beta - alpha * k
        env_log = (math.lgamma(1.0 - w) - logpi) if w < 1.0 else -math.lgamma(w)
        env_log -= k * logabsz
        if env_log < -745.0:
            tail = 0.0
            best_s = s
            break
        if env_log > 690.0:
            break
        env = math.exp(env_log)
        if env > 100.0 * best_env:
            break  # past the optimal truncation point
        if not (w <= 0.0 and w == math.floor(w)):  # skip exact pole zeros
            sgn, logrg = _rgamma_signed_log(w)
            logt = logrg - k * logabsz
            if logt > -745.0:
                t = -sgn * math.exp(logt) * (1.0 if k % 2 == 0 else -1.0)
                y = t - comp
                tot = s + y
                comp = (tot - s) - y
                s = tot
        if env < best_env:
            best_env = env
            best_s = s
        if env <= 1e-18 * max(abs(s), 1e-300):
            tail = env
            best_s = s
            break
    if tail == math.inf:
        tail = best_env if best_env < math.inf else 0.0
    if alpha in (1.0, 2.0) and beta == math.floor(beta):
        # the expansion terminates: every term past k = beta-1 sits on a
        # Gamma pole, and the exponential branch below is exact
        tail = 0.0
        best_s = s
    s = best_s
    est = tail + 4e-16 * abs(s)
    if alpha >= 1.0:
        # exponentially decaying cosine branch present for 1 <= alpha <= 2
        y = x ** (1.0 / alpha)
        coeff = 1.0 if alpha == 1.0 else 2.0 / alpha
        expo = y * math.cos(math.pi / alpha)
        amp = coeff * x ** ((1.0 - beta) / alpha) * math.exp(expo)
        s += amp * math.cos(y * math.sin(math.pi / alpha) + math.pi * (1.0 - beta) / alpha)
        est += 3e-16 * amp
    return s, est


def _ml_band_integral(alpha: float, beta: float, z: float):
    """Integral representation for 0 < alpha < 1, z < 0.

    E[a,b](-x) = (1/pi) * Int_0^inf u^(a-b) e^(-u)
                 * (u^a sin(pi b) + x sin(pi (b-a)))
                 / ((u^a + x cos(pi a))^2 + (x sin(pi a))^2) du
    valid for b <= 1; larger b is reduced through the recurrence
    E[a,b](z) = 1/Gamma(b) + z E[a,a+b](z).
    """
    x = -z
    if beta > 1.0:
        nlift = int(math.ceil((beta - 1.0) / alpha - 1e-12))
        base = beta - nlift * alpha
        val, est = _ml_band_integral(alpha, base, z)
        for i in range(nlift):
            b_i = base + i * alpha
            val = (val - _rgamma(b_i)) / z
            est = est / x + 2e-16 * abs(val)
        return val, est

    s1 = math.sin(math.pi * beta)
    s2 = math.sin(math.pi * (beta - alpha))
    cpa = math.cos(math.pi * alpha)
    spa = math.sin(math.pi * alpha)
    xs2 = (x * spa) ** 2

    def integrand(u: float) -> float:
        ua = u ** alpha
        den = (ua + x * cpa) ** 2 + xs2
        return u ** (alpha - beta) * math.exp(-u) * (ua * s1 + x * s2) / den

    # substitution u = v**p renders the endpoint algebraic factor linear
    p = 2.0 / (1.0 + alpha - beta)

    def near_origin(v: float) -> float:
        if v <= 0.0:
            return 0.0
        return integrand(v ** p) * p * v ** (p - 1.0)

    i1, e1 = quad(near_origin, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    # for alpha > 1/2 the denominator dips near u = (x |cos(pi a)|)^(1/a);
    # hint the adaptive rule at that abscissa
    pieces = []
    if cpa < 0.0:
        u_dip = (x * (-cpa)) ** (1.0 / alpha)
    else:
        u_dip = 0.0
    if u_dip > 1.5:
        mid = max(2.0 * u_dip, 30.0)
        pieces.append(quad(integrand, 1.0, mid, points=[u_dip],
                           epsabs=1e-15, epsrel=1e-13, limit=300))
        pieces.append(quad(integrand, mid, math.inf,
                           epsabs=1e-15, epsrel=1e-13, limit=200))
    else:
        pieces.append(quad(integrand, 1.0, math.inf,
                           epsabs=1e-15, epsrel=1e-13, limit=300))
    val = (i1 + sum(p_[0] for p_ in pieces)) / math.pi
    est = (e1 + sum(p_[1] for p_ in pieces)) / math.pi + 1e-15 * abs(val)
    return val, est


@lru_cache(maxsize=1 << 18)
def _ml_core(alpha: float, beta: float, z: float) -> tuple[float, float]:
    """(value, relative error estimate); raises MLConvergenceError on failure."""
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not abs(z) <= 1e12:
        raise ValueError(f"|z| <= 1e12 required, got {z}")
    if z == 0.0:
        return _rgamma(beta), 1e-16

    if z > 0.0:
        if z ** (1.0 / alpha) > 700.0:
            raise MLConvergenceError(
                f"E[{alpha},{beta}]({z}) overflows double precision")
        val, est = _ml_taylor(alpha, beta, z)
        return val, est / max(abs(val), 1e-300)

    x = -z
    y = x ** (1.0 / alpha)
    attempts: list[str] = []
    if x >= Z_SWITCH:
        attempts.append("asymptotic")
        if y <= _TAYLOR_SAFE_Y + 6.0:
            attempts.append("taylor")
    else:
        if y <= _TAYLOR_SAFE_Y:
            attempts.append("taylor")
        attempts.append("asymptotic")
    if 0.0 < alpha < 1.0:
        attempts.append("band")

    failures = []
    best: tuple[float, float] | None = None
    for regime in attempts:
        if regime == "taylor":
            val, est = _ml_taylor(alpha, beta, z)
        elif regime == "asymptotic":
            val, est = _ml_asymptotic(alpha, beta, z)
        else:
            val, est = _ml_band_integral(alpha, beta, z)
        rel = est / max(abs(val), 1e-300)
        if rel <= ML_RELTOL:
            return val, rel
        if best is None or est < best[1]:
            best = (val, est)
        failures.append(f"{regime}: rel est {rel:.2e}")
    if best is not None and best[1] <= ML_ABSTOL:
        return best[0], best[1] / max(abs(best[0]), 1e-300)
    raise MLConvergenceError(
        f"E[{alpha},{beta}]({z}): no regime certified {ML_RELTOL:g} relative "
        f"or {ML_ABSTOL:g} absolute ({'; '.join(failures)})")
