"""Independent brute-force oracles, intentionally slow and simple.

Nothing here shares code with the fast paths it checks: the Mittag-Leffler
oracle is a straight arbitrary-precision series, the quadratic-form oracle
is a midpoint double sum with exact near-diagonal cell integrals, and the
scalar Volterra oracle discretizes the integral reformulation of the
fractional relaxation problem rather than its derivative form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf

from .solver import LinearModeProblem, ModelKind, TimeMesh
from .spectral import Field, nonlinear_term

__all__ = [
    "OracleTruncationError",
    "OracleConfig",
    "highprec_ml",
    "highprec_ml_feasible",
    "dense_quadratic_form",
    "brute_volterra_solve",
    "classical_etd_reference",
]


class OracleTruncationError(ArithmeticError):
    """The oracle could not certify its truncation bound."""


@dataclass(frozen=True)
class OracleConfig:
    n_dense: int = 1024
    precision: str = "compensated"  # "double" | "compensated"

    def __post_init__(self):
        if self.n_dense < 256:
            raise ValueError("quadrature oracles need n_dense >= 256")
        if self.precision not in ("double", "compensated"):
            raise ValueError(f"unknown precision {self.precision!r}")


def _oracle_digits(alpha: float, z: float) -> int:
    """Working digits: cancellation head e^(|z|^(1/alpha)) plus margin."""
    if z >= 0.0:
        return 35
    y = (-z) ** (1.0 / alpha)
    return 35 + int(0.4343 * y)


def highprec_ml_feasible(alpha: float, z: float, dps_cap: int = 1200) -> bool:
    """Whether the series oracle can certify (alpha, z) within the digit cap."""
    return _oracle_digits(alpha, z) <= dps_cap


def highprec_ml(alpha: float, beta: float, z: float, terms: int = 40000,
                dps_cap: int = 1200) -> float:
    """Arbitrary-precision Taylor value of E[alpha, beta](z), |z| <= 30.

    Working precision absorbs the full cancellation of the alternating
    series; the geometric tail bound is checked rigorously and failure to
    certify 1e-13 raises OracleTruncationError.  Gamma arguments are formed
    in working precision (forming alpha*m in double poisons large-m terms).
    """
    if abs(z) > 30.0:
        raise ValueError("series oracle restricted to |z| <= 30")
    digits = _oracle_digits(alpha, z)
    if digits > dps_cap:
        raise OracleTruncationError(
            f"needs ~{digits} digits, above the {dps_cap} cap")
    with mp.workdps(digits):
        a = mpf(alpha)
        b = mpf(beta)
        zz = mpf(z)
        s = mpf(0)
        zp = mpf(1)
        mx = mpf(0)
        tiny = mpf(10) ** (-(digits - 3))
        tail = None
        for m in range(terms):
            t = zp / mp.gamma(a * m + b)
            s += t
            at = abs(t)
            if at > mx:
                mx = at
            zp *= zz
            # geometric tail: once |z| < (a(m+1)+b)^a / 2, ratio q <= 1/2
            arg = a * (m + 1) + b
            if arg > 1 and abs(zz) < mpf(0.5) * arg ** a and at < tiny * max(mx, mpf(1)):
                q = abs(zz) / arg ** a
                tail = at * q / (1 - q)
                break
        if tail is None:
            raise OracleTruncationError(f"series not converged in {terms} terms")
        bound = float((tail + mx * mpf(10) ** (-digits + 3)) / max(abs(s), mpf(1e-300)))
        if bound > 1e-13:
            raise OracleTruncationError(f"truncation bound {bound:.2e} above 1e-13")
        return float(s)


def dense_quadratic_form(K, f, n: int, singular_alpha: float | None = None) -> float:
    """Direct midpoint double sum of K f f over the lower triangle y < x.

    For kernels of the form smooth(x,y) * (x-y)^(-a), pass singular_alpha=a:
    every cell pair then uses the exact cell integral of the singular factor
    (second difference of u^(2-a)/((1-a)(2-a))) with the smooth factor at
    the cell center, and the diagonal cells their exact triangle integral.
    Plain midpoint loses all accuracy near an integrable singularity.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    w = 1.0 / n
    c = (np.arange(n) + 0.5) * w
    F = np.asarray(f(c), dtype=float)
    X, Y = np.meshgrid(c, c, indexing="ij")
    lower = np.tril(np.ones((n, n), dtype=bool), k=-1)
    with np.errstate(all="ignore"):
        Kv = np.where(lower, np.asarray(K(X, Y), dtype=float), 0.0)
    if singular_alpha is None:
        total = float(np.sum(Kv * np.outer(F, F))) * w * w
        # diagonal half cells, centroid rule
        diag = np.asarray(K(c + w / 6.0, c - w / 6.0), dtype=float)
        if np.all(np.isfinite(diag)):
            total += float(np.sum(diag * F * F)) * 0.5 * w * w
        return total
    a = singular_alpha
    if not 0.0 < a < 1.0:
        raise ValueError("singularity order must lie in (0,1)")

    def prim(u):
        return u ** (2.0 - a) / ((1.0 - a) * (2.0 - a))

    d = np.arange(1, n, dtype=float)
    exact_cell = prim((d + 1.0) * w) - 2.0 * prim(d * w) + prim(np.maximum(d - 1.0, 0.0) * w)
    corr = exact_cell / (w * w * (d * w) ** (-a))
    offsets = (np.arange(n)[:, None] - np.arange(n)[None, :])
    corr_mat = np.zeros((n, n))
    corr_mat[lower] = corr[offsets[lower] - 1]
    total = float(np.sum(Kv * corr_mat * np.outer(F, F))) * w * w
    smooth_diag = np.asarray(K(c + w / 4.0, c - w / 4.0), dtype=float) * (w / 2.0) ** a
    total += float(np.sum(smooth_diag * F * F)) * prim(w)
    return total


def brute_volterra_solve(problem: LinearModeProblem, alpha: float,
                         mesh: TimeMesh) -> np.ndarray:
    """Product-trapezoidal solution of the integral form
    w(t) = w0 + (beta/Gamma(a)) Int_0^t (t-s)^(a-1) w(s) ds.

    Independent of the L1 machinery (which discretizes the derivative
    form); second-order on smooth segments.
    """
    t = mesh.nodes
    N = mesh.steps
    beta = problem.beta_coeff
    ga = math.gamma(alpha)
    w = np.empty(N + 1)
    w[0] = problem.w0
    for n in range(1, N + 1):
        tn = t[n]
        aj = t[:n]
        bj = t[1:n + 1]
        u0 = tn - aj
        u1 = tn - bj
        i0 = (u0 ** alpha - u1 ** alpha) / alpha
        i1 = tn * i0 - (u0 ** (alpha + 1.0) - u1 ** (alpha + 1.0)) / (alpha + 1.0)
        # linear interpolation weights on each cell
        left = (bj * i0 - i1) / (bj - aj)
        right = (i1 - aj * i0) / (bj - aj)
        acc = float(left @ w[:n] + right[:n - 1] @ w[1:n]) if n > 1 else float(left[0] * w[0])
        cn = float(right[-1])
        w[n] = (w[0] + (beta / ga) * acc) / (1.0 - (beta / ga) * cn)
    return w


def classical_etd_reference(model: ModelKind, phi0: Field, T: float, N: int,
                            dealias: bool = True) -> Field:
    """First-order exponential integrator for the classical (order-1) flow.

    phi_{n+1} = e^(hL) phi_n + h phi1(hL) N(phi_n), phi1(z) = (e^z - 1)/z.
    Used as the reference the fractional trajectory must approach as the
    order tends to 1.
    """
    grid = phi0.grid
    ell = model.generator().on_grid(grid)
    h = T / N
    z = h * ell
    ez = np.exp(z)
    phi1 = np.where(np.abs(z) > 1e-12, np.expm1(z) / np.where(z == 0.0, 1.0, z), 1.0)
    ksq = grid.ksq()
    spec = phi0.spectral.copy()
    for _ in range(N):
        cube = nonlinear_term(Field(grid, spectral=spec), dealias).spectral
        nhat = -ksq * cube if model.is_ch else -cube
        spec = ez * spec + h * phi1 * nhat
    return Field(grid, spectral=spec)
