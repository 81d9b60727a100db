"""Quadrature, scalar minimization, supremum search, and the cube root solver.

The quadrature core is an adaptive Gauss-Kronrod (G7, K15) scheme that
evaluates integrands on node *arrays*, so nested double integrals stay
vectorized: the inner integral can be driven for a whole batch of outer
nodes at once (:func:`integrate_rows`).  Declared breakpoints split the
interval before any adaptation happens; the per-panel error is the usual
|K15 - G7| difference and refinement bisects the offending panels until the
summed estimate meets the tolerance or the depth budget is exhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import QuadratureError
from .moduli import ModulusSpec

__all__ = [
    "QuadConfig",
    "integrate",
    "integrate_rows",
    "minimize_unimodal",
    "sup_over_t",
    "default_t_grid",
    "CubePolynomial",
    "solve_pd_root",
]

# Gauss-Kronrod 7-15 rule on [-1, 1]; odd Kronrod indices are the Gauss nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-node layout, symmetric about 0
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # ascending, 15 nodes
_W_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
_w_g_half = np.zeros(8)
_w_g_half[1:8:2] = _WG                                      # Gauss nodes sit at odd indices
_W_G = np.concatenate([_w_g_half[:-1], _w_g_half[::-1]])

_MAX_PANELS = 4096


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and structure hints for adaptive quadrature."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 50
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")


DEFAULT_QUAD = QuadConfig()


def _initial_panels(a: float, b: float, breakpoints: Sequence[float]) -> np.ndarray:
    pts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    return np.array(list(zip(pts[:-1], pts[1:])), dtype=float)


def _panel_rule(f_rows, panels: np.ndarray):
    """Apply G7/K15 on each panel; returns (I_k, err) of shapes (B,P) and (B,P)."""
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    x = mid[:, None] + half[:, None] * _NODES[None, :]      # (P, 15)
    y = np.asarray(f_rows(x.ravel()), dtype=float)
    y = y.reshape(y.shape[:-1] + x.shape)                   # (B, P, 15) or (P, 15)
    if y.ndim == 2:
        y = y[None, :, :]
    i_k = (y * _W_K).sum(axis=-1) * half
    i_g = (y * _W_G).sum(axis=-1) * half
    return i_k, np.abs(i_k - i_g)


def integrate_rows(f_rows, a: float, b: float, cfg: QuadConfig = DEFAULT_QUAD):
    """Adaptive quadrature of a batch of integrands sharing one panel set.

    ``f_rows(x)`` maps an array of abscissae (m,) to values of shape (m,) or
    (B, m); the return is ``(values, errs)`` with shape (B,).  Refinement
    continues until every row meets max(abs_tol, rel_tol * |I_row|).
    """
    if b < a:
        vals, errs = integrate_rows(f_rows, b, a, cfg)
        return -vals, errs
    if a == b:
        y = np.asarray(f_rows(np.array([a])), dtype=float)
        rows = y.shape[0] if y.ndim == 2 else 1
        return np.zeros(rows), np.zeros(rows)

    panels = _initial_panels(a, b, cfg.breakpoints)
    depth = np.zeros(len(panels), dtype=int)
    i_k, err = _panel_rule(f_rows, panels)

    while True:
        total = i_k.sum(axis=1)
        err_total = err.sum(axis=1)
        tol_rows = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(total))
        live = err_total > tol_rows
        if not live.any():
            return total, err_total

        score = err[live].max(axis=0)
        threshold = tol_rows[live].min() / (2.0 * len(panels))
        split = score > threshold
        if not split.any():
            split[int(np.argmax(score))] = True

        if depth[split].max(initial=0) >= cfg.max_depth or len(panels) + split.sum() > _MAX_PANELS:
            raise QuadratureError(
                f"quadrature did not converge (err={float(err_total.max()):.3e}, "
                f"panels={len(panels)})",
                value=total if total.size > 1 else float(total[0]),
                err_estimate=err_total if err_total.size > 1 else float(err_total[0]),
            )

        keep = ~split
        lo, hi = panels[split, 0], panels[split, 1]
        mids = 0.5 * (lo + hi)
        new_panels = np.concatenate(
            [np.stack([lo, mids], axis=1), np.stack([mids, hi], axis=1)]
        )
        new_ik, new_err = _panel_rule(f_rows, new_panels)
        panels = np.concatenate([panels[keep], new_panels])
        depth = np.concatenate([depth[keep], np.tile(depth[split] + 1, 2)])
        i_k = np.concatenate([i_k[:, keep], new_ik], axis=1)
        err = np.concatenate([err[:, keep], new_err], axis=1)


def integrate(f, a: float, b: float, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Integrate a scalar function (vectorized over its argument) on [a, b].

    Returns ``(value, err_estimate)``; raises :class:`QuadratureError`
    carrying the best value when the tolerance cannot be met within the
    depth budget.
    """
    vals, errs = integrate_rows(lambda x: np.asarray(f(x), dtype=float), a, b, cfg)
    return float(vals[0]), float(errs[0])


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_unimodal(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    coarse_step: float | None = None,
) -> tuple[float, float]:
    """Coarse scan followed by golden-section refinement.

    The scan (default step 1e-3 of the interval) guards against plateaus
    and mild multimodality; golden section then contracts the bracketing
    triple to ``tol`` in x.  Golden section alone cannot place a smooth
    minimum better than sqrt(eps), so a guarded parabolic-vertex polish
    follows.  Ties resolve to the smallest x: a constant function
    returns ``a``.
    """
    if not a < b:
        raise ValueError("need a < b")
    step = (b - a) * 1e-3 if coarse_step is None else float(coarse_step)
    n = max(int(math.ceil((b - a) / step)) + 1, 5)
    xs = np.linspace(a, b, n)
    fs = np.array([f(x) for x in xs])
    i0 = int(np.argmin(fs))                      # argmin takes the first (smallest x) on ties

    lo = xs[max(i0 - 1, 0)]
    hi = xs[min(i0 + 1, n - 1)]
    h = hi - lo
    c = hi - _INV_PHI * h
    d = lo + _INV_PHI * h
    fc, fd = f(c), f(d)
    while h > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            h = hi - lo
            c = hi - _INV_PHI * h
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            h = hi - lo
            d = lo + _INV_PHI * h
            fd = f(d)
    x_star, f_star = (c, fc) if fc <= fd else (d, fd)

    # parabolic vertex from a wider stencil beats the sqrt(eps) golden floor
    delta = max(1e-5 * (b - a), 10.0 * tol)
    for _ in range(2):
        xm, xp = x_star - delta, x_star + delta
        if xm < a or xp > b:
            break
        fm, fp = f(xm), f(xp)
        denom = fp - 2.0 * f_star + fm
        if not (denom > 0.0 and math.isfinite(denom)):
            break
        xv = x_star - 0.5 * delta * (fp - fm) / denom
        if not (a <= xv <= b) or abs(xv - x_star) > delta:
            break
        fv = f(xv)
        if fv <= f_star:
            x_star, f_star = xv, fv
        delta *= 0.1

    better = np.nonzero(fs <= f_star)[0]
    if better.size and xs[better[0]] < x_star:
        return float(xs[better[0]]), float(fs[better[0]])
    return float(x_star), float(f_star)


def default_t_grid(
    t_limit: float | None = None,
    lo: float = 1e-4,
    hi: float = 1e4,
    points_per_decade: int = 12,
) -> np.ndarray:
    """Log-spaced search grid for the supremum over t, clipped to t_limit."""
    hi_eff = hi if t_limit is None or not math.isfinite(t_limit) else min(hi, t_limit)
    lo_eff = min(lo, hi_eff / 10.0)
    n = max(int(math.ceil(points_per_decade * math.log10(hi_eff / lo_eff))) + 1, 8)
    return np.geomspace(lo_eff, hi_eff, n)


def sup_over_t(
    ratio: Callable[[float], float],
    spec: ModulusSpec,
    t_limit: float | None = None,
    grid: np.ndarray | None = None,
    refine: bool = True,
) -> tuple[float, float]:
    """Best-effort supremum of ``ratio(t)`` over admissible t.

    For a plain Hölder modulus the ratio is scale-invariant, so a single
    evaluation suffices.  Otherwise the log grid (default 1e-4..1e4,
    clipped below ``t_limit``) is scanned and the best point is polished by
    golden section in log t.  No attainment guarantee is implied; the
    result is the supremum found.
    """
    if spec.homogeneous:
        t0 = 1.0
        if t_limit is not None and math.isfinite(t_limit) and t_limit <= 1.0:
            t0 = 0.5 * t_limit
        return t0, float(ratio(t0))

    ts = default_t_grid(t_limit) if grid is None else np.asarray(grid, dtype=float)
    vals = np.array([ratio(t) for t in ts])
    i0 = int(np.argmax(vals))
    t_star, v_star = float(ts[i0]), float(vals[i0])
    if refine and 0 < i0 < len(ts) - 1:
        lo, hi = math.log(ts[i0 - 1]), math.log(ts[i0 + 1])
        x, neg = minimize_unimodal(lambda u: -ratio(math.exp(u)), lo, hi,
                                   tol=1e-10, coarse_step=(hi - lo) / 8.0)
        if -neg > v_star:
            t_star, v_star = math.exp(x), -neg
    return t_star, v_star


# ---------------------------------------------------------------------------
# The polynomial governing the Lipschitz cube constant.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubePolynomial:
    """p_d(s) = 2^d s^(d+1) - (1+s)^(d+1) + 2^d (d+1) s^d and companions.

    The unique root ``s_d`` in (0, 1) maximizes g_d(s) = s - 2^d s^(d+1) /
    (1+s)^d, and h_d(s_d) = d/(d+1) - g_d(s_d)/(d+1) is the sharp Lipschitz
    constant for the max-norm maximal operator in dimension d.
    """

    d: int
    root: float
    coefficients: tuple[int, ...] = field(repr=False)

    def p(self, s: float) -> float:
        """Exact-coefficient evaluation; overflows for large d, prefer scaled_residual."""
        return float(sum(c * s ** k for k, c in enumerate(self.coefficients)))

    def scaled_residual(self, s: float) -> float:
        return _pd_scaled(self.d, s)

    def g(self, s: float) -> float:
        return _gd(self.d, s)

    def h(self, s: float) -> float:
        return self.d / (self.d + 1.0) - _gd(self.d, s) / (self.d + 1.0)


def _gd(d: int, s: float) -> float:
    if s <= 0.0:
        return 0.0
    return s - math.exp(d * math.log(2.0 * s / (1.0 + s)) + math.log(s))


def _pd_scaled(d: int, s: float) -> float:
    """p_d(s) / (1+s)^(d+1): same root, bounded terms for every d."""
    if s <= 0.0:
        return -1.0
    if d <= 50:
        t1 = 2.0 ** d * s ** (d + 1) / (1.0 + s) ** (d + 1)
        t2 = (d + 1) * 2.0 ** d * s ** d / (1.0 + s) ** (d + 1)
    else:
        base = d * math.log(2.0 * s / (1.0 + s)) - math.log(1.0 + s)
        t1 = math.exp(base + math.log(s))
        t2 = (d + 1) * math.exp(base)
    return t1 + t2 - 1.0


def _pd_scaled_deriv(d: int, s: float) -> float:
    if d <= 50:
        t1 = 2.0 ** d * s ** (d + 1) / (1.0 + s) ** (d + 1)
        t2 = (d + 1) * 2.0 ** d * s ** d / (1.0 + s) ** (d + 1)
    else:
        base = d * math.log(2.0 * s / (1.0 + s)) - math.log(1.0 + s)
        t1 = math.exp(base + math.log(s))
        t2 = (d + 1) * math.exp(base)
    return t1 * (d + 1) * (1.0 / s - 1.0 / (1.0 + s)) + t2 * (d / s - (d + 1) / (1.0 + s))


def solve_pd_root(d: int, residual_tol: float = 1e-14) -> CubePolynomial:
    """Find s_d in (0, 1): bisection on the guaranteed sign bracket, Newton polish.

    p_d(0) = -1 and p_d(1) = 2^d d, so the bracket is structural.  The
    polynomial is evaluated in scaled form (divided by (1+s)^(d+1)), in log
    space for d > 50, keeping every term bounded.  Newton steps falling
    outside the current bracket are replaced by bisection.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    lo, hi = 0.0, 1.0
    flo = -1.0
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        fm = _pd_scaled(d, mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(40):
        fs = _pd_scaled(d, s)
        if abs(fs) <= residual_tol:
            break
        dfs = _pd_scaled_deriv(d, s)
        step = fs / dfs if dfs != 0.0 else 0.0
        cand = s - step
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        if _pd_scaled(d, cand) < 0.0:
            lo = cand
        else:
            hi = cand
        if cand == s:
            break
        s = cand

    coeffs = [-math.comb(d + 1, k) for k in range(d + 2)]
    coeffs[d] += 2 ** d * (d + 1)
    coeffs[d + 1] += 2 ** d
    return CubePolynomial(d=d, root=float(s), coefficients=tuple(coeffs))
