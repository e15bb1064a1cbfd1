"""Kernel positivity toolkit.

Catalog of two-variable kernels on the open unit square minus the diagonal,
evaluated with the convention that the first (weighted) argument is the
larger one, so K(x,y) = K(y,x) by construction.  Around it: Gram matrices
and PSD tests, numerical admissibility checks (sign conditions on the
derivatives of a weighted kernel), singular quadratic forms with
product-integration, the four-term integration-by-parts decomposition that
certifies positivity term by term, and the small zoo of closed-form
positivity identities (sine series of the bridge covariance, cosine
transforms of convex decreasing profiles, the tau/s ratio identity).

Singular kernels never get a diagonal value; where a finite matrix is
required, the shift regularization ``epsilon`` evaluates the larger argument
at x+eps, which keeps the kernel within the admissible class for every
eps > 0 (so its Gram matrices are genuinely PSD, not approximately so).
"""

from __future__ import annotations

import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, quad

__all__ = [
    "KernelDomainError",
    "DuplicatePointsError",
    "AsymmetricMatrixError",
    "KernelEvaluationError",
    "IbpConsistencyError",
    "TailEstimateError",
    "WeightFn",
    "balanced_caputo_weight",
    "KernelSpec",
    "caputo_plain",
    "caputo_time_weight",
    "caputo_end_weight",
    "omega_weighted",
    "ratio_tau_over_s",
    "exp_abs_diff",
    "brownian_bridge",
    "custom_kernel",
    "compose_kernel",
    "kernel_eval",
    "gram_matrix",
    "offdiag_quadratic_form",
    "psd_check",
    "AdmissibilityReport",
    "admissibility_check",
    "singular_quadratic_form",
    "IbpTerms",
    "ibp_decomposition",
    "omega_condition_check",
    "bridge_sine_series",
    "polya_transform_check",
    "ratio_kernel_identity_residual",
]

SINGULAR_KINDS = frozenset(
    {"caputo_plain", "caputo_time_weight", "caputo_end_weight", "omega_weighted"})
BOUNDED_KINDS = frozenset({"ratio_tau_over_s", "exp_abs_diff", "brownian_bridge"})
ALL_KINDS = SINGULAR_KINDS | BOUNDED_KINDS | {"custom"}


class KernelDomainError(ValueError):
    """Kernel evaluated on the diagonal or outside the open unit square."""


class DuplicatePointsError(ValueError):
    pass


class AsymmetricMatrixError(ValueError):
    pass


class KernelEvaluationError(ArithmeticError):
    """Kernel or weight non-finite at a probe point."""


class IbpConsistencyError(ArithmeticError):
    """Four-term decomposition disagrees with direct quadrature."""


class TailEstimateError(ArithmeticError):
    """Oscillatory quadrature tail could not be certified."""


@dataclass(frozen=True)
class WeightFn:
    """Weight on (0,1): nonnegative, integrable when `integrable` is set.

    `jacobi_exponents` = (a, b) declares that fn(t) / (t^a (1-t)^b) is smooth,
    which lets quadratures absorb the endpoint behavior exactly.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    integrable: bool = True
    jacobi_exponents: tuple[float, float] = (0.0, 0.0)

    def __call__(self, theta):
        return self.fn(theta)


def balanced_caputo_weight(alpha: float) -> WeightFn:
    """w(t) = t^(alpha-1) (1-t)^(-alpha); makes w(t) t^(1-alpha) (1-t)^alpha == 1."""
    return WeightFn(lambda t: t ** (alpha - 1.0) * (1.0 - t) ** (-alpha),
                    integrable=True, jacobi_exponents=(alpha - 1.0, -alpha))


@dataclass(frozen=True)
class KernelSpec:
    """Descriptor of a catalog kernel (see module docstring for kinds).

    epsilon > 0 applies the shift regularization: the larger argument of the
    singular factors is moved to x+eps, which preserves admissibility (and
    for the end/omega-weighted kinds carries the exact rebalancing factor),
    and gives the kernel a finite diagonal.
    """

    kind: str
    alpha: float = 0.5
    omega: WeightFn | None = None
    custom_eval: Callable | None = None
    epsilon: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind in SINGULAR_KINDS and not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.kind == "omega_weighted" and self.omega is None:
            raise ValueError("omega_weighted kernel needs a WeightFn")
        if self.kind == "custom" and self.custom_eval is None:
            raise ValueError("custom kernel needs an eval callable")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def is_singular(self) -> bool:
        return self.kind in SINGULAR_KINDS and self.epsilon == 0.0


def caputo_plain(alpha: float, epsilon: float = 0.0) -> KernelSpec:
    return KernelSpec("caputo_plain", alpha=alpha, epsilon=epsilon)


def caputo_time_weight(alpha: float, epsilon: float = 0.0) -> KernelSpec:
    return KernelSpec("caputo_time_weight", alpha=alpha, epsilon=epsilon)


def caputo_end_weight(alpha: float, epsilon: float = 0.0) -> KernelSpec:
    return KernelSpec("caputo_end_weight", alpha=alpha, epsilon=epsilon)


def omega_weighted(omega: WeightFn, alpha: float, epsilon: float = 0.0) -> KernelSpec:
    return KernelSpec("omega_weighted", alpha=alpha, omega=omega, epsilon=epsilon)


def ratio_tau_over_s() -> KernelSpec:
    return KernelSpec("ratio_tau_over_s")


def exp_abs_diff() -> KernelSpec:
    return KernelSpec("exp_abs_diff")


def brownian_bridge() -> KernelSpec:
    return KernelSpec("brownian_bridge")


def custom_kernel(fn: Callable, label: str = "") -> KernelSpec:
    """Custom symmetric kernel; fn(hi, lo) is called with hi >= lo."""
    return KernelSpec("custom", custom_eval=fn, label=label)


def compose_kernel(spec: KernelSpec, h: Callable, label: str = "") -> KernelSpec:
    """Pointwise composition h(K(x,y)); admissibility survives h', h'' >= 0."""
    return custom_kernel(lambda hi, lo: h(_eval_hi_lo(spec, hi, lo)),
                         label=label or f"h({spec.kind})")


def _eval_hi_lo(spec: KernelSpec, hi, lo):
    """Catalog formulas with hi >= lo elementwise; no domain checks."""
    hi = np.asarray(hi, dtype=float)
    lo = np.asarray(lo, dtype=float)
    a = spec.alpha
    eps = spec.epsilon
    kind = spec.kind
    if kind == "caputo_plain":
        return (hi - lo + eps) ** (-a)
    if kind == "caputo_time_weight":
        return (hi + eps) ** a * (hi - lo + eps) ** (-a)
    if kind == "caputo_end_weight":
        return (1.0 - hi) ** (-a) * (hi - lo + eps) ** (-a)
    if kind == "omega_weighted":
        hs = hi + eps
        val = spec.omega(hs) * hs * (hi - lo + eps) ** (-a)
        if eps > 0.0:
            # rebalancing keeps the shifted kernel congruent to an
            # admissible one: ((1-x-eps)/(1-x))^alpha
            val = val * ((1.0 - hs) / (1.0 - hi)) ** a
        return val
    if kind == "ratio_tau_over_s":
        return lo / hi
    if kind == "exp_abs_diff":
        return np.exp(-(hi - lo))
    if kind == "brownian_bridge":
        return lo - lo * hi
    return np.asarray(spec.custom_eval(hi, lo), dtype=float)


def kernel_eval(spec: KernelSpec, x, y):
    """K(x, y) for (x, y) in the open unit square off the diagonal.

    Arguments are reflected so the formula sees (max, min); scalars or
    broadcastable arrays.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= 1.0) or np.any(y <= 0.0) or np.any(y >= 1.0):
        raise KernelDomainError("arguments must lie in the open unit square")
    if np.any(x == y):
        raise KernelDomainError("kernel undefined on the diagonal")
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)
    out = _eval_hi_lo(spec, hi, lo)
    return float(out) if out.ndim == 0 else out


def _diagonal_value(spec: KernelSpec, t: np.ndarray) -> np.ndarray:
    """Diagonal entries: limit values for bounded kinds, the regularized
    formula when epsilon > 0, NaN for genuinely singular kinds."""
    t = np.asarray(t, dtype=float)
    if spec.kind == "ratio_tau_over_s" or spec.kind == "exp_abs_diff":
        return np.ones_like(t)
    if spec.kind == "brownian_bridge":
        return t - t * t
    if spec.kind in SINGULAR_KINDS:
        if spec.epsilon > 0.0:
            return _eval_hi_lo(spec, t, t)
        return np.full_like(t, np.nan)
    # custom: take the formula's own limit if finite
    with np.errstate(all="ignore"):
        vals = _eval_hi_lo(spec, t, t)
    return np.where(np.isfinite(vals), vals, np.nan)


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Matrix K(t_i, t_j) over pairwise-distinct points in (0, 1).

    Diagonal policy: bounded kinds use the diagonal limit; regularized
    kernels (epsilon > 0) use their finite formula value; bare singular
    kinds get NaN since the kernel has no diagonal there, and PSD
    assertions for them must go through `offdiag_quadratic_form` or a
    regularized spec.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ValueError("points must be a nonempty 1-d sequence")
    if np.any(pts <= 0.0) or np.any(pts >= 1.0):
        raise KernelDomainError("points must lie in (0, 1)")
    if np.unique(pts).size != pts.size:
        raise DuplicatePointsError("points must be pairwise distinct")
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    hi = np.maximum(X, Y)
    lo = np.minimum(X, Y)
    with np.errstate(all="ignore"):  # diagonal overwritten below
        M = _eval_hi_lo(spec, hi, lo)
    M[np.diag_indices_from(M)] = _diagonal_value(spec, pts)
    return M


def offdiag_quadratic_form(M: np.ndarray, c: np.ndarray) -> float:
    """sum_{i != j} M_ij c_i c_j (diagonal entries ignored, NaN-safe)."""
    A = np.array(M, dtype=float)
    np.fill_diagonal(A, 0.0)
    c = np.asarray(c, dtype=float)
    return float(c @ A @ c)


def psd_check(M: np.ndarray, tol: float) -> tuple[float, bool]:
    """(min eigenvalue, passed) of a symmetric matrix.

    Passes when min eig >= -tol * max(1, spectral radius).
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    scale = max(1.0, float(np.abs(A).max()))
    if float(np.abs(A - A.T).max()) > 1e-12 * scale:
        raise AsymmetricMatrixError("matrix is not symmetric to 1e-12 relative")
    eig = np.linalg.eigvalsh(0.5 * (A + A.T))
    lo = float(eig[0])
    radius = float(np.abs(eig).max())
    return lo, lo >= -tol * max(1.0, radius)


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    """Worst finite-difference sign margins of the weighted kernel.

    Margins are the most-violating values of -dK/dx, +dK/dy and -d2K/dxdy
    over the probe lattice; all three must be >= -tol for a pass.
    """

    grid_n: int
    delta: float
    min_margin_dx: float
    min_margin_dy: float
    min_margin_dxy: float
    passed: bool
    psi_note: str = ""


def admissibility_check(spec: KernelSpec, psi: Callable, grid_n: int, delta: float,
                        tol: float = 1e-9, psi_note: str = "") -> AdmissibilityReport:
    """Probe the three derivative sign conditions of K(x,y) psi(x) psi(y).

    Central differences with step delta/4 on the lattice
    {(x, y): delta <= y <= x - delta <= 1 - delta}; the standoff keeps every
    stencil point strictly below the diagonal.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    if not 0.0 < delta < 1.0 / grid_n:
        raise ValueError("need 0 < delta < 1/grid_n")
    h = delta / 4.0
    ax = np.linspace(2.0 * delta, 1.0 - delta, grid_n)
    ay = np.linspace(delta, 1.0 - 2.0 * delta, grid_n)
    X, Y = np.meshgrid(ax, ay, indexing="ij")
    keep = Y <= X - delta
    x = X[keep]
    y = Y[keep]

    def ktilde(xx, yy):
        vals = _eval_hi_lo(spec, xx, yy) * psi(xx) * psi(yy)
        if not np.all(np.isfinite(vals)):
            raise KernelEvaluationError("non-finite kernel/psi value at a probe point")
        return vals

    dx = (ktilde(x + h, y) - ktilde(x - h, y)) / (2.0 * h)
    dy = (ktilde(x, y + h) - ktilde(x, y - h)) / (2.0 * h)
    dxy = (ktilde(x + h, y + h) - ktilde(x + h, y - h)
           - ktilde(x - h, y + h) + ktilde(x - h, y - h)) / (4.0 * h * h)
    m_dx = float(np.min(-dx))
    m_dy = float(np.min(dy))
    m_dxy = float(np.min(-dxy))
    passed = min(m_dx, m_dy, m_dxy) >= -tol
    return AdmissibilityReport(grid_n, delta, m_dx, m_dy, m_dxy, passed, psi_note)


def omega_condition_check(omega: WeightFn, alpha: float, n: int = 64,
                          rel_tol: float = 1e-10) -> bool:
    """True iff w(t) t^(1-alpha) (1-t)^alpha is non-increasing on (0,1)."""
    if n < 16:
        raise ValueError("need at least 16 probe points")
    t = np.linspace(0.0, 1.0, n + 2)[1:-1]
    p = omega(t) * t ** (1.0 - alpha) * (1.0 - t) ** alpha
    scale = np.maximum(np.abs(p[:-1]), np.abs(p[1:]))
    return bool(np.all(p[1:] <= p[:-1] + rel_tol * scale + 1e-300))


# ---------------------------------------------------------------------------
# singular quadratic forms


def _pwl_singular_inner(nodes: np.ndarray, fvals: np.ndarray, alpha: float,
                        t: float) -> float:
    """Integral of f(s) (t-s)^(-alpha) over (0, t), exact for piecewise-
    linear f on the given nodes."""
    if t <= nodes[0]:
        return 0.0
    # cells fully below t plus one partial cell
    j_end = int(np.searchsorted(nodes, t, side="left"))
    a = nodes[:j_end - 1] if j_end >= 1 else nodes[:0]
    lo = nodes[: max(j_end - 1, 0)]
    hi = nodes[1:j_end]
    fl = fvals[: max(j_end - 1, 0)]
    fh = fvals[1:j_end]
    segs_a = list(lo)
    segs_b = list(hi)
    segs_fa = list(fl)
    segs_fb = list(fh)
    if j_end >= 1 and nodes[j_end - 1] < t:
        aa = nodes[j_end - 1]
        bb = min(t, nodes[j_end]) if j_end < len(nodes) else t
        fa = fvals[j_end - 1]
        if j_end < len(nodes):
            fb = fvals[j_end - 1] + (fvals[j_end] - fvals[j_end - 1]) * (
                (bb - aa) / (nodes[j_end] - aa))
        else:
            fb = fvals[-1]
        segs_a.append(aa)
        segs_b.append(bb)
        segs_fa.append(fa)
        segs_fb.append(fb)
    a = np.asarray(segs_a)
    b = np.asarray(segs_b)
    fa = np.asarray(segs_fa)
    fb = np.asarray(segs_fb)
    if a.size == 0:
        return 0.0
    u0 = t - a
    u1 = np.maximum(t - b, 0.0)
    om = 1.0 - alpha
    m0 = (u0 ** om - u1 ** om) / om
    m1 = (u0 ** (om + 1.0) - u1 ** (om + 1.0)) / (om + 1.0)
    slope = (fb - fa) / (b - a)
    return float(np.sum((fa + slope * (t - a)) * m0 - slope * m1))


def _resampled(nodes, fvals, t):
    return np.interp(t, nodes, fvals)


def _outer_weight_parts(spec: KernelSpec):
    """(smooth_factor(t), end_exponent) with beta(t) = smooth * (1-t)^(-end)."""
    a = spec.alpha
    if spec.kind == "caputo_plain":
        return (lambda t: np.ones_like(t)), 0.0
    if spec.kind == "caputo_time_weight":
        return (lambda t: t ** a), 0.0
    if spec.kind == "caputo_end_weight":
        return (lambda t: np.ones_like(t)), a
    if spec.kind == "omega_weighted":
        _, b = spec.omega.jacobi_exponents
        end = -b if b < 0.0 else 0.0
        if end >= 1.0:
            raise ValueError("omega end singularity must be integrable")
        return (lambda t: spec.omega(t) * t * (1.0 - t) ** end), end
    raise ValueError(f"quadratic form undefined for kind {spec.kind!r}")


def _sqf_once(spec: KernelSpec, nodes, fvals, n_outer: int) -> float:
    alpha = spec.alpha
    smooth, end = _outer_weight_parts(spec)

    def g_of_t(tq):
        tq = np.clip(tq, 1e-13, 1.0 - 1e-13)  # weights may blow up at 0, 1
        inner = np.array([_pwl_singular_inner(nodes, fvals, alpha, t) for t in tq])
        return inner * _resampled(nodes, fvals, tq) * smooth(tq)

    if end == 0.0:
        # t = u^2 clusters nodes at the weak t^(1-alpha) corner
        u = np.linspace(0.0, 1.0, n_outer + 1)
        tq = u * u
        vals = g_of_t(tq) * 2.0 * u
        return float(np.trapezoid(vals, u))
    # absorb the (1-t)^(-end) weight exactly: u = (1-t)^(1-end),
    # then u = 1 - v^2 to smooth the image of the t=0 corner
    v = np.linspace(0.0, 1.0, n_outer + 1)
    uu = 1.0 - v * v
    tq = 1.0 - uu ** (1.0 / (1.0 - end))
    tq = np.clip(tq, 0.0, 1.0)
    vals = g_of_t(tq) * 2.0 * v / (1.0 - end)
    return float(np.trapezoid(vals, v))


def singular_quadratic_form(spec: KernelSpec, f, n_quad: int,
                            rel_warn: float = 1e-4) -> float:
    """Double integral of f(s) f(t) (t-s)^(-alpha) beta(t) over 0<s<t<1.

    beta(t) is the kind's outer weight (1, t^alpha, (1-t)^(-alpha), or
    omega(t)*t).  f is given as values on the uniform grid i/n_quad
    (callables are sampled), extended piecewise-linearly; the inner
    singular integral uses product integration exact on that extension,
    the outer one composite trapezoid with endpoint substitutions.
    Warns when the n_quad and 2*n_quad evaluations disagree beyond
    `rel_warn` relative.
    """
    nodes = np.linspace(0.0, 1.0, n_quad + 1)
    fvals = np.asarray(f(nodes), dtype=float) if callable(f) else np.asarray(f, dtype=float)
    if fvals.shape != nodes.shape:
        raise ValueError(f"need {n_quad + 1} samples of f, got {fvals.shape}")
    coarse = _sqf_once(spec, nodes, fvals, n_quad)
    nodes2 = np.linspace(0.0, 1.0, 2 * n_quad + 1)
    fvals2 = np.interp(nodes2, nodes, fvals)  # exact for the pwl extension
    fine = _sqf_once(spec, nodes2, fvals2, 2 * n_quad)
    if abs(fine - coarse) > rel_warn * max(abs(fine), 1e-12):
        warnings.warn(
            f"singular_quadratic_form: refinement changed the value by "
            f"{abs(fine - coarse):.3e} (> {rel_warn:g} relative)",
            RuntimeWarning, stacklevel=2)
    return fine


# ---------------------------------------------------------------------------
# integration-by-parts decomposition

IbpTerms = namedtuple(
    "IbpTerms", "boundary_term edge_x_term bulk_term edge_y_term total direct")


def _kernel_callable(K) -> Callable:
    if isinstance(K, KernelSpec):
        return lambda xx, yy: _eval_hi_lo(K, xx, yy)
    return lambda xx, yy: np.asarray(K(xx, yy), dtype=float)


def ibp_decomposition(K, phi: Callable, n: int, check: bool = True,
                      rel_tol: float = 1e-5) -> IbpTerms:
    """Four nonnegative pieces summing to the double form of K against phi.

    With v(x) the primitive of phi (phi vanishing near 0 and 1) and K twice
    differentiable on the closed lower triangle:

        T1 = K(1,0) v(1)^2 / 2
        T2 = Int v(x)^2 (-dK/dx)(x, 0) dx / 2
        T3 = Int Int_{y<x} (-d2K/dxdy) (v(x)-v(y))^2 dy dx / 2
        T4 = Int (dK/dy)(1, y) (v(1)-v(y))^2 dy / 2

    Each is a quadrature of a pointwise-nonnegative integrand when the sign
    conditions hold.  When `check` is set and n >= 256, the sum is compared
    against direct quadrature of the double form and a mismatch beyond
    rel_tol raises IbpConsistencyError.
    """
    kf = _kernel_callable(K)
    m1 = max(4 * n, 1024)  # 1-d quadratures (Simpson)
    m2 = min(max(2 * n, 1024), 1536)  # 2-d cell resolution

    xs = np.linspace(0.0, 1.0, m1 + 1)
    phv = np.asarray(phi(xs), dtype=float)
    v = cumulative_simpson(phv, x=xs, initial=0.0)
    v1 = float(v[-1])

    w = 1.0 / m2
    h = w / 4.0

    t1 = 0.5 * float(kf(np.array(1.0), np.array(0.0))) * v1 * v1

    # edge derivative -dK/dx along y=0 and dK/dy along x=1 (central in the
    # tangential variable, interior quadrature nodes)
    dkdx0 = (kf(xs + h, np.zeros_like(xs)) - kf(xs - h, np.zeros_like(xs))) / (2 * h)
    dkdx0[0] = dkdx0[1]
    dkdx0[-1] = dkdx0[-2]
    integ2 = v * v * (-dkdx0)
    t2 = 0.5 * float(_simpson(integ2, xs))

    dkdy1 = (kf(np.ones_like(xs), xs + h) - kf(np.ones_like(xs), xs - h)) / (2 * h)
    dkdy1[0] = dkdy1[1]
    dkdy1[-1] = dkdy1[-2]
    integ4 = (v1 - v) ** 2 * dkdy1
    t4 = 0.5 * float(_simpson(integ4, xs))

    centers = (np.arange(m2) + 0.5) * w
    vc = np.interp(centers, xs, v)
    t3 = 0.0
    direct = 0.0
    phc = np.interp(centers, xs, phv)
    for i in range(1, m2):
        xi = centers[i]
        yj = centers[:i]
        mixed = (kf(xi + h, yj + h) - kf(xi + h, yj - h)
                 - kf(xi - h, yj + h) + kf(xi - h, yj - h)) / (4 * h * h)
        t3 += float(np.sum((-mixed) * (vc[i] - vc[:i]) ** 2)) * w * w
        if check:
            direct += float(np.sum(kf(xi, yj) * phc[:i])) * phc[i] * w * w
    t3 *= 0.5
    if check:
        # diagonal half-cells of the direct sum, centroid rule
        direct += float(np.sum(kf(centers + w / 6.0, centers - w / 6.0)
                               * phc * phc)) * 0.5 * w * w
    total = t1 + t2 + t3 + t4
    if check and n >= 256:
        if abs(total - direct) > rel_tol * max(abs(direct), 1e-12):
            raise IbpConsistencyError(
                f"decomposition {total:.10g} vs direct {direct:.10g} "
                f"(rel {abs(total - direct) / max(abs(direct), 1e-300):.2e})")
    return IbpTerms(t1, t2, t3, t4, total, direct if check else math.nan)


def _simpson(vals: np.ndarray, xs: np.ndarray) -> float:
    from scipy.integrate import simpson
    return float(simpson(vals, x=xs))


# ---------------------------------------------------------------------------
# closed-form positivity identities


def bridge_sine_series(s: float, t: float, n_terms: int) -> float:
    """Partial sum of 2/(n pi)^2 sin(n pi s) sin(n pi t).

    Converges to min(s,t) - s t; the tail after N terms is below
    2/(pi^2 N).
    """
    n = np.arange(1, n_terms + 1, dtype=float)
    terms = 2.0 / (n * np.pi) ** 2 * np.sin(n * np.pi * s) * np.sin(n * np.pi * t)
    return float(np.sum(terms))


def _cosine_transform(f: Callable, xi: float, tail_tol: float = 1e-9,
                      max_periods: int = 200000) -> tuple[float, float]:
    """Int_0^inf f(x) cos(xi x) dx by per-period adaptive quadrature."""
    period = 2.0 * math.pi / xi
    total = 0.0
    x0 = 0.0
    last = math.inf
    small = 0
    for _ in range(max_periods):
        c, _err = quad(lambda x: f(x) * math.cos(xi * x), x0, x0 + period,
                       epsabs=1e-14, epsrel=1e-12, limit=60)
        total += c
        x0 += period
        last = abs(c)
        f_here = abs(float(f(x0)))
        if last < 1e-14 and f_here * period < 1e-14:
            small += 1
            if small >= 2:
                return total, last + f_here * period
        else:
            small = 0
    tail = last
    if tail > tail_tol:
        raise TailEstimateError(
            f"cosine transform tail {tail:.2e} above {tail_tol:g} after "
            f"{max_periods} periods")
    return total, tail


def polya_transform_check(f: Callable, xi_samples, tol: float = 1e-8
                          ) -> tuple[float, bool]:
    """Half cosine transform of a convex decreasing profile at each xi.

    Returns the minimum transform value and whether all values clear -tol
    (they must, for such profiles, since the transform is a positive
    combination of Fejer-type factors).
    """
    xi_arr = [float(x) for x in xi_samples]
    if any(x == 0.0 for x in xi_arr):
        raise ValueError("xi samples must be nonzero")
    vals = []
    for xi in xi_arr:
        v, tail = _cosine_transform(f, abs(xi))
        if tail > 1e-9:
            raise TailEstimateError(f"tail estimate {tail:.2e} exceeds 1e-9")
        vals.append(v)
    mn = float(min(vals))
    return mn, mn >= -tol


RatioIdentity = namedtuple("RatioIdentity", "residual lhs rhs")


def ratio_kernel_identity_residual(u, n: int) -> RatioIdentity:
    """Both sides of the tau/s positivity identity and their gap.

    LHS = Int_{0<tau<s<1} (tau/s) u(tau) u(s);
    RHS = V(1)^2/2 + Int_0^1 s^(-3) V(s)^2 ds with V(s) = Int_0^s tau u(tau).
    The boundary square makes the identity exact; RHS is a sum of squares,
    so it is nonnegative for any u.
    """
    s = np.linspace(0.0, 1.0, n + 1)
    uv = np.asarray(u(s), dtype=float) if callable(u) else np.asarray(u, dtype=float)
    if uv.shape != s.shape:
        raise ValueError(f"need {n + 1} samples of u")
    V = cumulative_trapezoid(s * uv, s, initial=0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(s > 0.0, V / s, 0.0)
        dens = np.where(s > 0.0, (V / s) ** 2 / s, 0.0)
    lhs = float(np.trapezoid(inner * uv, s))
    rhs = 0.5 * V[-1] ** 2 + float(np.trapezoid(dens, s))
    return RatioIdentity(abs(lhs - rhs), lhs, rhs)
