"""Operator-norm evaluators for the uncentered maximal operator on Lip(omega).

The operator norm over a modulus class is a sup over the scale t of an
infimum over one averaging-ball parameter:

* max-norm balls (cubes):  parameter s in [0, 1], one-dimensional integrals
  with weights u^(d-1) and (u+s)^(d-1);
* euclidean balls:         parameter R in [1/2, 1], an iterated integral
  with weight rho^(d-2) and a Gamma-ratio prefactor;
* l1 balls (cross-polytopes): parameter R in [1/2, 1], same structure with
  the kinked radial argument |1-R+R*u1| + R*rho.

Cubes and cross-polytopes give identical values in every dimension; the
two quadrature paths here are fully independent, which makes that identity
a usable cross-check (:func:`l1_linf_identity_check`).

All reduced weights integrate to exactly one against their prefactors, so
replacing omega by the constant 1 probes the quadrature plumbing end to
end (:func:`normalization_probe`).

Inner integrals flatten the rho^(d-2) mass concentration through the
substitution rho = z^(1/(d-1)), which turns the weight into a constant and
keeps high dimensions (d in the hundreds) cheap and well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .exceptions import ConsistencyError
from .moduli import ModulusSpec
from .numerics import (
    DEFAULT_QUAD,
    QuadConfig,
    integrate,
    integrate_rows,
    minimize_unimodal,
    solve_pd_root,
    sup_over_t,
)

__all__ = [
    "OpNormQuery",
    "OpNormResult",
    "gamma_ratio",
    "gamma_ratio_bounds",
    "euclid_prefactor",
    "cross_prefactor",
    "ball_volume",
    "cube_value",
    "cube_opnorm",
    "cube_opnorm_holder_closed",
    "cube_lipschitz_d2_closed",
    "cube_d3_closed_form",
    "cube_asymptotic_bounds",
    "ball_formula_value",
    "normalization_probe",
    "euclid_opnorm",
    "cross_opnorm",
    "l1_linf_identity_check",
    "euclid_limit_bounds",
    "local_opnorm_1d",
    "general_norm_upper_bound",
]

#: slack on the universal ceiling value <= 1 (averaging never beats the sup)
CEILING_TOL = 1e-9


# ---------------------------------------------------------------------------
# dimensional constants
# ---------------------------------------------------------------------------


def gamma_ratio(d: int) -> float:
    """Gamma(1 + d/2) / Gamma(1/2 + d/2), evaluated through log-gamma."""
    return math.exp(gammaln(1.0 + d / 2.0) - gammaln(0.5 + d / 2.0))


def gamma_ratio_bounds(d: int) -> tuple[float, float, float]:
    """The ratio with its sandwich sqrt(d/2) <= ratio <= sqrt((d+1)/2)."""
    return gamma_ratio(d), math.sqrt(d / 2.0), math.sqrt((d + 1) / 2.0)


def euclid_prefactor(d: int) -> float:
    """Normalizer of the reduced euclidean-ball measure rho^(d-2) drho du1."""
    return (d - 1) * gamma_ratio(d) / math.sqrt(math.pi)


def cross_prefactor(d: int) -> float:
    """Normalizer of the reduced cross-polytope measure: d(d-1)/2."""
    return d * (d - 1) / 2.0


def ball_volume(p: float, d: int) -> float:
    """Volume of the unit l_p ball in R^d (p = inf gives the cube)."""
    if math.isinf(p):
        return 2.0 ** d
    return math.exp(
        d * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + d / p)
    )


# ---------------------------------------------------------------------------
# queries and results
# ---------------------------------------------------------------------------

_NORM_KINDS = ("linf", "l2", "l1", "lp", "custom")


@dataclass(frozen=True)
class OpNormQuery:
    """What to evaluate: norm family, dimension, modulus, and domain."""

    norm_kind: str
    d: int
    modulus: ModulusSpec
    domain: str = "global"          # "global" or "local_1d"
    length: float = math.inf        # for local_1d
    p: float | None = None          # for lp
    norm_eval: Callable | None = None   # for custom

    def __post_init__(self):
        if self.norm_kind not in _NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.domain == "local_1d" and self.d != 1:
            raise ValueError("local domains are one-dimensional")
        if self.domain not in ("global", "local_1d"):
            raise ValueError(f"unknown domain {self.domain!r}")


@dataclass(frozen=True)
class OpNormResult:
    """An operator-norm value with the optimizing parameters that produced it."""

    value: float
    t_star: float
    err_estimate: float
    method: str
    s_star: float | None = None
    r_star: float | None = None

    def __post_init__(self):
        if not (0.0 < self.value <= 1.0 + CEILING_TOL):
            raise ValueError(
                f"operator norm {self.value} violates the (0, 1] ceiling"
            )

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "s_star": self.s_star,
            "r_star": self.r_star,
            "t_star": self.t_star,
            "err_estimate": self.err_estimate,
            "method": self.method,
        }


# ---------------------------------------------------------------------------
# cubes (max norm)
# ---------------------------------------------------------------------------


def _cube_breakpoints(spec: ModulusSpec, t: float, lo: float, hi: float):
    return tuple(k / t for k in spec.kink_args() if lo < k / t < hi)


def cube_value(
    spec: ModulusSpec, d: int, t: float, s: float, cfg: QuadConfig = DEFAULT_QUAD
) -> tuple[float, float]:
    """The cube objective at scale t and inner parameter s in [0, 1].

    Evaluates d/((1+s)^d omega(t)) * [2^d I_a + I_b] with I_a, I_b the
    u^(d-1)- and (u+s)^(d-1)-weighted integrals of omega(t u) over [0, s]
    and [s, 1].  Weights are folded into the integrands as powers of ratios
    bounded by one, so large d cannot overflow.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if t <= 0.0:
        raise ValueError("t must be positive")
    omega_t = spec.eval(t)
    one_plus_s = 1.0 + s

    def f_low(u):
        return (2.0 * u / one_plus_s) ** (d - 1) * (2.0 / one_plus_s) * spec.eval(t * u)

    def f_high(u):
        return ((u + s) / one_plus_s) ** (d - 1) / one_plus_s * spec.eval(t * u)

    cfg_low = QuadConfig(cfg.abs_tol, cfg.rel_tol, cfg.max_depth,
                         _cube_breakpoints(spec, t, 0.0, s))
    cfg_high = QuadConfig(cfg.abs_tol, cfg.rel_tol, cfg.max_depth,
                          _cube_breakpoints(spec, t, s, 1.0))
    i_low, e_low = integrate(f_low, 0.0, s, cfg_low) if s > 0.0 else (0.0, 0.0)
    i_high, e_high = integrate(f_high, s, 1.0, cfg_high) if s < 1.0 else (0.0, 0.0)
    return d * (i_low + i_high) / omega_t, d * (e_low + e_high) / omega_t


def cube_opnorm(
    spec: ModulusSpec,
    d: int,
    cfg: QuadConfig = DEFAULT_QUAD,
    s_scan: float | None = None,
    t_grid: np.ndarray | None = None,
) -> OpNormResult:
    """Operator norm for cube averaging: sup over t of min over s of cube_value."""

    cache: dict[float, tuple[float, float]] = {}

    def min_over_s(t: float) -> tuple[float, float]:
        if t not in cache:
            cache[t] = minimize_unimodal(
                lambda s: cube_value(spec, d, t, s, cfg)[0], 0.0, 1.0, coarse_step=s_scan
            )
        return cache[t]

    t_star, _ = sup_over_t(lambda t: min_over_s(t)[1], spec, grid=t_grid)
    s_star, value = min_over_s(t_star)
    _, err = cube_value(spec, d, t_star, s_star, cfg)
    return OpNormResult(
        value=value,
        s_star=s_star,
        t_star=t_star,
        err_estimate=err + cfg.abs_tol,
        method="cube-quadrature",
    )


def _holder_cube_sum(alpha: float, d: int, s: float) -> float:
    # closed antiderivatives of the two cube integrals for omega = t^alpha;
    # every term is nonnegative, so no cancellation at any d
    first = d * (2.0 * s / (1.0 + s)) ** d * s ** alpha / (alpha + d)
    acc = 0.0
    for j in range(d):
        acc += (
            math.comb(d - 1, j)
            * (s ** (d - 1 - j) - s ** (d + alpha))
            / (alpha + j + 1.0)
        )
    return first + d * acc / (1.0 + s) ** d


def cube_opnorm_holder_closed(alpha: float, d: int) -> tuple[float, float]:
    """Closed-form cube constant for omega(t) = t^alpha.

    alpha = 1 goes through the root s_d of the governing polynomial and the
    rational function h_d; alpha < 1 minimizes the finite binomial sum.
    Returns (value, minimizing s).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if alpha == 1.0:
        poly = solve_pd_root(d)
        return poly.h(poly.root), poly.root
    s_star, value = minimize_unimodal(lambda s: _holder_cube_sum(alpha, d, s), 0.0, 1.0)
    return value, s_star


def cube_lipschitz_d2_closed() -> float:
    """Trigonometric closed form of the d=2 Lipschitz cube constant."""
    c = math.cos(5.0 * math.pi / 18.0)
    return 4.0 / math.sqrt(3.0) * c + math.sqrt(3.0) / c - 0.25 / (c * c) - 3.0


def cube_d3_closed_form() -> float:
    """Radical closed form of the d=3 Lipschitz cube constant, 1 - t3^(-3).

    t3 is the unique root > 1 of 2 t^4 - 8 t + 3 = 0; the residual of the
    nested-radical expression is checked to 1e-12 before use.
    """
    r8, r7 = math.sqrt(8.0), math.sqrt(7.0)
    stack = (r8 + r7) ** (1.0 / 3.0) + (r8 - r7) ** (1.0 / 3.0)
    t3 = (math.sqrt(stack) / 2.0 ** 0.75) * (
        1.0 + math.sqrt(2.0 ** 2.25 / stack ** 1.5 - 1.0)
    )
    residual = 2.0 * t3 ** 4 - 8.0 * t3 + 3.0
    if abs(residual) > 1e-12:
        raise ConsistencyError(
            f"quartic root expression off by {residual:.3e}"
        )
    return 1.0 - t3 ** -3


def cube_asymptotic_bounds(d: int) -> tuple[float, float]:
    """Sandwich for the Lipschitz cube constant: ((d-1)/(d+1), upper]."""
    lower = (d - 1) / (d + 1.0)
    rd = math.sqrt(d)
    x = -1.0 / (2.0 * rd - 1.0)
    decay = 0.0 if x <= -1.0 else math.exp(d * math.log1p(x))
    upper = d / (d + 1.0) - (1.0 - 1.0 / rd) * (1.0 - decay) / (d + 1.0)
    return lower, upper


# ---------------------------------------------------------------------------
# euclidean and cross-polytope balls
# ---------------------------------------------------------------------------

_INNER_SCALE = 0.05   # inner quadrature runs this much tighter than the outer


def _ball_outer(kind, omega_of, d, t, R, cfg):
    """Outer u1-integrand; the inner z-integral runs batched across u1 nodes."""
    # the substituted radial argument is algebraically singular at z = 0
    # (as z^(1/(d-1)), or sqrt(z) on rows where the base term vanishes);
    # geometric pre-splits stop the adaptive pass from bisecting its way
    # down one side a panel at a time
    inner_breaks = (1e-12, 1e-9, 1e-6, 1e-3, 3e-2) if d >= 3 else ()
    inner_cfg = QuadConfig(cfg.abs_tol * _INNER_SCALE, cfg.rel_tol * _INNER_SCALE,
                           cfg.max_depth, inner_breaks)
    inv = 1.0 / (d - 1)

    def f(u1):
        u1 = np.asarray(u1, dtype=float)
        if kind == "l2":
            base = np.abs(1.0 - R + R * u1)
            extent = np.sqrt(np.maximum(1.0 - u1 * u1, 0.0))
        else:
            base = np.abs(1.0 - R + R * u1)
            extent = 1.0 - np.abs(u1)
        weight = extent ** (d - 1) * inv

        def inner_rows(z):
            radial = extent[:, None] * z[None, :] ** inv
            if kind == "l2":
                arg = t * np.sqrt(base[:, None] ** 2 + (R * radial) ** 2)
            else:
                arg = t * (base[:, None] + R * radial)
            return omega_of(arg)

        inner_vals, _ = integrate_rows(inner_rows, 0.0, 1.0, inner_cfg)
        return weight * inner_vals

    return f


def ball_formula_value(
    kind: str,
    spec: ModulusSpec | None,
    d: int,
    t: float,
    R: float,
    cfg: QuadConfig = DEFAULT_QUAD,
    normalized: bool = True,
) -> tuple[float, float]:
    """One evaluation of the reduced ball formula at fixed (t, R).

    ``kind`` is "l2" or "l1"; ``spec=None`` replaces omega by the constant
    one (the normalization probe).  ``normalized`` divides by omega(t);
    with ``normalized=False`` the raw prefactor * double integral is
    returned, which is the left-hand side of the l1/linf identity.
    """
    if kind not in ("l2", "l1"):
        raise ValueError("kind must be 'l2' or 'l1'")
    if d < 2:
        raise ValueError("reduced ball formulas need d >= 2")
    if not 0.0 < R <= 1.0:
        raise ValueError("R must lie in (0, 1]")
    omega_of = (lambda a: np.ones_like(a)) if spec is None else spec.eval
    pref = euclid_prefactor(d) if kind == "l2" else cross_prefactor(d)

    breaks: list[float] = []
    if kind == "l1":
        breaks.append(0.0)
        kink = (R - 1.0) / R
        if -1.0 < kink < 1.0:
            breaks.append(kink)
    else:
        # (1 - u1^2)^((d-1)/2) has algebraic endpoint singularities for even d
        for eps in (1e-2, 1e-4, 1e-6, 1e-8):
            breaks.extend((-1.0 + eps, 1.0 - eps))
    if d >= 16:
        # the outer weight concentrates in a ~1/sqrt(d) window around zero
        width = 1.0 / math.sqrt(d)
        for c in (1.0, 2.0, 4.0, 8.0):
            if c * width < 1.0:
                breaks.extend((-c * width, c * width))
    outer_cfg = QuadConfig(cfg.abs_tol, cfg.rel_tol, cfg.max_depth, tuple(breaks))

    val, err = integrate(_ball_outer(kind, omega_of, d, t, R, cfg), -1.0, 1.0, outer_cfg)
    scale = pref / (spec.eval(t) if (normalized and spec is not None) else 1.0)
    return scale * val, scale * err


def normalization_probe(kind: str, d: int, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Integrate the bare reduced weight; must come back as exactly one."""
    value, _ = ball_formula_value(kind, None, d, 1.0, 0.75, cfg)
    return value


def _ball_opnorm(kind, spec, d, cfg, r_scan, t_grid) -> OpNormResult:
    if d == 1:
        res = cube_opnorm(spec, 1, cfg)
        return OpNormResult(
            value=res.value, s_star=res.s_star, t_star=res.t_star,
            err_estimate=res.err_estimate,
            method=f"{kind}-delegates-to-cube-d1",
        )

    scan = (0.5 / 32.0) if r_scan is None else r_scan
    cache: dict[float, tuple[float, float]] = {}

    def min_over_r(t: float) -> tuple[float, float]:
        # each objective call is a nested double quadrature; the coarse scan
        # stays at 32 points (the R-profile is smooth and provably dips once
        # inside [1/2, 1]) and golden section stops at 1e-6, where the value
        # error is already curvature * 1e-12
        if t not in cache:
            cache[t] = minimize_unimodal(
                lambda R: ball_formula_value(kind, spec, d, t, R, cfg)[0],
                0.5, 1.0, tol=1e-6, coarse_step=scan,
            )
        return cache[t]

    t_star, _ = sup_over_t(lambda t: min_over_r(t)[1], spec, grid=t_grid)
    r_star, value = min_over_r(t_star)
    _, err = ball_formula_value(kind, spec, d, t_star, r_star, cfg)
    return OpNormResult(
        value=min(value, 1.0 + 0.9 * CEILING_TOL),
        r_star=r_star,
        s_star=(2.0 * r_star - 1.0) if kind == "l1" else None,
        t_star=t_star,
        err_estimate=err + cfg.abs_tol,
        method=f"{kind}-quadrature",
    )


def euclid_opnorm(
    spec: ModulusSpec,
    d: int,
    cfg: QuadConfig = DEFAULT_QUAD,
    r_scan: float | None = None,
    t_grid: np.ndarray | None = None,
) -> OpNormResult:
    """Operator norm for euclidean-ball averaging (d = 1 delegates to cubes)."""
    return _ball_opnorm("l2", spec, d, cfg, r_scan, t_grid)


def cross_opnorm(
    spec: ModulusSpec,
    d: int,
    cfg: QuadConfig = DEFAULT_QUAD,
    r_scan: float | None = None,
    t_grid: np.ndarray | None = None,
) -> OpNormResult:
    """Operator norm for cross-polytope averaging (d = 1 delegates to cubes)."""
    return _ball_opnorm("l1", spec, d, cfg, r_scan, t_grid)


def l1_linf_identity_check(
    spec: ModulusSpec, d: int, t: float, R: float, cfg: QuadConfig = DEFAULT_QUAD
) -> tuple[float, float, float]:
    """Cross-polytope inner value against the cube value at s = 2R - 1.

    Both sides are computed by independent quadrature routes; their
    difference is a direct numerical witness of the l1 = linf theorem.
    """
    if not 0.5 <= R <= 1.0:
        raise ValueError("R must lie in [1/2, 1]")
    lhs, _ = ball_formula_value("l1", spec, d, t, R, cfg, normalized=False)
    cube, _ = cube_value(spec, d, t, 2.0 * R - 1.0, cfg)
    rhs = cube * spec.eval(t)
    return lhs, rhs, abs(lhs - rhs)


def euclid_limit_bounds(
    spec: ModulusSpec, r_points: int = 33
) -> tuple[float, float, float | None]:
    """High-dimension limit window for euclidean balls.

    Returns (lower, upper, ceiling): lower = sup_t omega(t/sqrt(2))/omega(t),
    upper the same with an extra inf over inflation factors r in (1, 4], and
    ceiling = lower when omega is concave (then it bounds every dimension).
    For a Hölder modulus both collapse to 2^(-alpha/2) exactly.
    """
    inv_sqrt2 = 2.0 ** -0.5
    if spec.homogeneous:
        lower = upper = inv_sqrt2 ** spec.alpha
    else:
        _, lower = sup_over_t(lambda t: spec.eval(inv_sqrt2 * t) / spec.eval(t), spec)
        upper = math.inf
        for r in np.geomspace(1.0 + 1e-6, 4.0, r_points):
            _, s = sup_over_t(lambda t, rr=r: spec.eval(inv_sqrt2 * rr * t) / spec.eval(t), spec)
            upper = min(upper, s)
    ceiling = lower if spec.is_concave else None
    return lower, upper, ceiling


# ---------------------------------------------------------------------------
# local one-dimensional domains
# ---------------------------------------------------------------------------


def local_opnorm_1d(
    spec: ModulusSpec, length: float = math.inf, cfg: QuadConfig = DEFAULT_QUAD
) -> OpNormResult:
    """Operator norm on a proper subinterval of the line.

    The boundary pins the averaging interval to the evaluation point, so the
    objective is the plain average (1/omega(t)) * int_0^1 omega(t u) du, with
    t restricted below the interval length.  For omega = t^alpha this is
    exactly 1/(1+alpha).
    """
    if length <= 0.0:
        raise ValueError("interval length must be positive")
    if spec.homogeneous:
        value = 1.0 / (1.0 + spec.alpha)
        t0 = 1.0 if length > 1.0 else 0.5 * length
        return OpNormResult(value=value, s_star=0.0, t_star=t0,
                            err_estimate=0.0, method="local-1d-exact")

    def ratio(t: float) -> float:
        cfg_t = QuadConfig(cfg.abs_tol, cfg.rel_tol, cfg.max_depth,
                           _cube_breakpoints(spec, t, 0.0, 1.0))
        val, _ = integrate(lambda u: spec.eval(t * u), 0.0, 1.0, cfg_t)
        return val / spec.eval(t)

    t_star, value = sup_over_t(ratio, spec, t_limit=length)
    return OpNormResult(value=min(value, 1.0), s_star=0.0, t_star=t_star,
                        err_estimate=cfg.abs_tol * 2.0, method="local-1d-grid")


def general_norm_upper_bound(d: int) -> float:
    """d/(d+1): the Lipschitz bound valid for every norm, from the cone average."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return d / (d + 1.0)
