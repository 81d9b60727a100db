"""Brute-force discrete maximal operators and empirical moduli on grids.

These are the independent checks for every closed formula in the package:
sample a function, apply a grid maximal operator by direct enumeration of
averaging windows, and measure moduli of continuity by exact maximization
over grid pairs.

Discrete averages are trapezoid sums over sample-aligned windows (windows
never cross the domain boundary).  With trapezoid sums, the average over
any window containing a point is a convex combination of the two one-sided
averages split at that point, so the max of the left and right one-sided
maximal functions equals the all-windows maximum *exactly* -- the discrete
mirror of the continuum fact that only windows with the evaluation point
on their boundary matter.

Small separations are dominated by window quantization (the optimal
continuum window around a peak is shorter than one grid step), so
Lipschitz/Hölder ratio estimates ignore lags below ``min_lag``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d
from scipy.signal import fftconvolve

__all__ = [
    "GridFunction",
    "grid_max_uncentered_1d",
    "grid_max_centered_1d",
    "mf_point_uncentered_1d",
    "grid_max_box",
    "empirical_modulus",
    "empirical_lip_ratio",
    "random_piecewise_linear",
]

_MAX_CELLS_LINF = {2: 512 ** 2, 3: 80 ** 3}
_MAX_CELLS_MASK = {2: 128 ** 2, 3: 32 ** 3}


@dataclass
class GridFunction:
    """Uniform samples of a function on an interval or a box."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    values: np.ndarray

    def __post_init__(self):
        self.lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        self.hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != len(self.lo):
            raise ValueError("value array rank must match the domain rank")
        if any(n < 2 for n in self.values.shape):
            raise ValueError("need at least two samples per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (n - 1) for a, b, n in zip(self.lo, self.hi, self.values.shape)
        )

    @property
    def step(self) -> float:
        """Grid step of a 1-D grid."""
        if self.ndim != 1:
            raise ValueError("step is for 1-D grids; use h")
        return self.h[0]

    def x(self, axis: int = 0) -> np.ndarray:
        return np.linspace(self.lo[axis], self.hi[axis], self.values.shape[axis])

    @staticmethod
    def sample(f: Callable, lo, hi, n) -> "GridFunction":
        """Sample ``f`` on a uniform grid; 1-D gets f(x), boxes get f(X0, X1, ...)."""
        lo_t = tuple(np.atleast_1d(np.asarray(lo, dtype=float)))
        hi_t = tuple(np.atleast_1d(np.asarray(hi, dtype=float)))
        n_t = tuple(np.atleast_1d(np.asarray(n, dtype=int)))
        axes = [np.linspace(a, b, k) for a, b, k in zip(lo_t, hi_t, n_t)]
        if len(axes) == 1:
            vals = np.asarray(f(axes[0]), dtype=float)
        else:
            mesh = np.meshgrid(*axes, indexing="ij")
            vals = np.asarray(f(*mesh), dtype=float)
        return GridFunction(lo_t, hi_t, vals)

    # -- CSV round trip (1-D), for external plotting --------------------------

    def to_csv(self, path_or_file) -> None:
        if self.ndim != 1:
            raise ValueError("CSV export is defined for 1-D grids")
        own = isinstance(path_or_file, (str, bytes))
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for xv, val in zip(self.x(), self.values):
                w.writerow([repr(float(xv)), repr(float(val))])
        finally:
            if own:
                fh.close()

    @staticmethod
    def from_csv(path_or_file) -> "GridFunction":
        own = isinstance(path_or_file, (str, bytes))
        fh = open(path_or_file, newline="") if own else path_or_file
        try:
            rows = list(csv.reader(fh))
        finally:
            if own:
                fh.close()
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        xs, vals = data[:, 0], data[:, 1]
        h = np.diff(xs)
        if not np.allclose(h, h[0], rtol=1e-9, atol=1e-12):
            raise ValueError("CSV abscissae are not uniformly spaced")
        return GridFunction((xs[0],), (xs[-1],), vals)


def _trapezoid_prefix(values: np.ndarray, h: float) -> np.ndarray:
    av = np.abs(values)
    return np.concatenate([[0.0], np.cumsum(0.5 * h * (av[:-1] + av[1:]))])


def grid_max_uncentered_1d(f: GridFunction) -> GridFunction:
    """Uncentered maximal function: best trapezoid average over windows
    with the evaluation point as an endpoint (which exhausts all windows).

    O(n^2) over lags with O(n) memory; fine up to n ~ 2^14.
    """
    if f.ndim != 1:
        raise ValueError("1-D grids only")
    h = f.step
    av = np.abs(f.values)
    prefix = _trapezoid_prefix(f.values, h)
    out = av.copy()
    n = len(av)
    for lag in range(1, n):
        avg = (prefix[lag:] - prefix[:-lag]) / (lag * h)
        np.maximum(out[: n - lag], avg, out=out[: n - lag])   # window to the right
        np.maximum(out[lag:], avg, out=out[lag:])             # window to the left
    return GridFunction(f.lo, f.hi, out)


def grid_max_centered_1d(f: GridFunction) -> GridFunction:
    """Centered maximal function: symmetric windows only, inside the domain."""
    if f.ndim != 1:
        raise ValueError("1-D grids only")
    h = f.step
    av = np.abs(f.values)
    prefix = _trapezoid_prefix(f.values, h)
    out = av.copy()
    n = len(av)
    for r in range(1, (n - 1) // 2 + 1):
        avg = (prefix[2 * r:] - prefix[:-2 * r]) / (2 * r * h)
        np.maximum(out[r: n - r], avg, out=out[r: n - r])
    return GridFunction(f.lo, f.hi, out)


def mf_point_uncentered_1d(f: GridFunction, idx: int) -> float:
    """Uncentered maximal function at a single grid index, O(n)."""
    h = f.step
    prefix = _trapezoid_prefix(f.values, h)
    n = len(f.values)
    best = abs(float(f.values[idx]))
    if idx < n - 1:
        lags = np.arange(1, n - idx)
        best = max(best, float(((prefix[idx + lags] - prefix[idx]) / (lags * h)).max()))
    if idx > 0:
        lags = np.arange(1, idx + 1)
        best = max(best, float(((prefix[idx] - prefix[idx - lags]) / (lags * h)).max()))
    return best


# ---------------------------------------------------------------------------
# boxes in two and three dimensions
# ---------------------------------------------------------------------------


def _cell_means_linf(av: np.ndarray, k: int) -> np.ndarray:
    out = av
    for ax in range(av.ndim):
        cs = np.cumsum(out, axis=ax)
        pad = np.zeros_like(np.take(cs, [0], axis=ax))
        cs = np.concatenate([pad, cs], axis=ax)
        sl_hi = [slice(None)] * av.ndim
        sl_lo = [slice(None)] * av.ndim
        sl_hi[ax] = slice(k, None)
        sl_lo[ax] = slice(None, -k)
        out = (cs[tuple(sl_hi)] - cs[tuple(sl_lo)]) / k
    return out


def _slide_max_into(canvas_shape, block: np.ndarray, k: int) -> np.ndarray:
    """Max over all placements of a k-window covering each cell (valid-only).

    block[t] is the window with leading corner t; output[i] must see
    t in [i-k+1, i], which under scipy's origin convention is origin
    +((k-1)//2), not the centered default.
    """
    canvas = np.full(canvas_shape, -np.inf)
    canvas[tuple(slice(0, s) for s in block.shape)] = block
    out = canvas
    for ax in range(canvas.ndim):
        out = maximum_filter1d(out, size=k, axis=ax, origin=(k - 1) // 2,
                               mode="constant", cval=-np.inf)
    return out


def _ball_mask(r: int, d: int, norm_kind: str) -> np.ndarray:
    rng = np.arange(-r, r + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    if norm_kind == "l2":
        dist = np.sqrt(sum(g.astype(float) ** 2 for g in grids))
    else:
        dist = sum(np.abs(g) for g in grids)
    return dist <= r + 1e-9


def grid_max_box(f: GridFunction, norm_kind: str = "linf",
                 radii: Sequence[int] | None = None) -> GridFunction:
    """Uncentered maximal function on a 2-D or 3-D box.

    linf windows are cubes of every size, evaluated through summed-area
    cell means plus sliding maxima.  l1/l2 windows are rasterized ball
    masks over a radius set (default: every cell radius up to 16, then
    geometric); mask rasterization and radius granularity contribute an
    O(h) tolerance that callers must budget for.
    """
    d = f.ndim
    if d not in (2, 3):
        raise ValueError("box maximal operator supports d in {2, 3}")
    cap = (_MAX_CELLS_LINF if norm_kind == "linf" else _MAX_CELLS_MASK)[d]
    if f.values.size > cap:
        raise ValueError(
            f"grid of {f.values.size} cells exceeds the {cap}-cell guard for {norm_kind}"
        )
    av = np.abs(f.values)
    out = av.copy()
    n_min = min(av.shape)

    if norm_kind == "linf":
        for k in range(2, n_min + 1):
            means = _cell_means_linf(av, k)
            np.maximum(out, _slide_max_into(av.shape, means, k), out=out)
        return GridFunction(f.lo, f.hi, out)

    if norm_kind not in ("l1", "l2"):
        raise ValueError("norm_kind must be one of linf, l1, l2")
    r_max = (n_min - 1) // 2
    if radii is None:
        radii = list(range(1, min(12, r_max) + 1))
        r = 16
        while r <= r_max:
            radii.append(r)
            r = int(r * 1.4) + 1
    for r in radii:
        if r < 1 or 2 * r + 1 > n_min:
            continue
        mask = _ball_mask(r, d, norm_kind)
        means = fftconvolve(av, mask.astype(float), mode="valid") / mask.sum()
        canvas = np.full(av.shape, -np.inf)
        canvas[tuple(slice(r, s - r) for s in av.shape)] = means
        np.maximum(out, maximum_filter(canvas, footprint=mask,
                                       mode="constant", cval=-np.inf), out=out)
    return GridFunction(f.lo, f.hi, out)


# ---------------------------------------------------------------------------
# empirical moduli of continuity
# ---------------------------------------------------------------------------


def _one_sided_spread(values: np.ndarray, m: int, norm_kind: str) -> float:
    """max over x of (max_{dist(x,y) <= m cells} f(y) - f(x)); exact on the grid."""
    if m <= 0:
        return 0.0
    if norm_kind == "linf" or values.ndim == 1:
        filt = values
        for ax in range(values.ndim):
            filt = maximum_filter1d(filt, size=2 * m + 1, axis=ax,
                                    mode="constant", cval=-np.inf)
    else:
        filt = maximum_filter(values, footprint=_ball_mask(m, values.ndim, norm_kind),
                              mode="constant", cval=-np.inf)
    return float((filt - values).max())


def empirical_modulus(f: GridFunction, t_list: Iterable[float],
                      distance_norm: str = "linf") -> list[tuple[float, float]]:
    """Exact grid modulus of continuity at each requested separation.

    omega(f, t) is maximized over all grid pairs within distance t; the
    anisotropic case requires equal steps per axis.
    """
    hs = f.h
    if max(hs) - min(hs) > 1e-12 * max(hs):
        raise ValueError("empirical modulus needs equal grid steps per axis")
    h = hs[0]
    out = []
    for t in t_list:
        if t <= 0:
            raise ValueError("separations must be positive")
        m = int(math.floor(t / h + 1e-9))
        out.append((float(t), _one_sided_spread(f.values, m, distance_norm)))
    return out


def empirical_lip_ratio(
    f: GridFunction,
    alpha: float = 1.0,
    min_lag: int = 32,
    max_lag: int | None = None,
    distance_norm: str = "linf",
) -> tuple[float, float]:
    """Empirical Hölder-alpha seminorm: max over lags of omega(f, mh)/(mh)^alpha.

    Lags below ``min_lag`` are skipped: there the continuum optimal averaging
    window falls between grid points and the quotient reflects quantization,
    not the function.  Returns (ratio, separation attaining it).
    """
    h = f.h[0]
    n_min = min(f.values.shape)
    if max_lag is None:
        max_lag = n_min - 1
    lags = list(range(min_lag, min(max_lag, 512) + 1))
    m = max(min_lag, 512)
    while m * 2 <= max_lag:
        m *= 2
        lags.append(m)
    if max_lag not in lags and max_lag > min_lag:
        lags.append(max_lag)

    best, best_t = 0.0, 0.0
    for m in lags:
        t = m * h
        ratio = _one_sided_spread(f.values, m, distance_norm) / t ** alpha
        if ratio > best:
            best, best_t = ratio, t
    return best, best_t


def random_piecewise_linear(
    rng: np.random.Generator,
    a: float,
    b: float,
    n_knots: int = 12,
    slope_cap: float = 1.0,
) -> Callable[[np.ndarray], np.ndarray]:
    """A random piecewise-linear function on [a, b] with |slope| <= slope_cap."""
    xs = np.sort(np.concatenate([[a, b], rng.uniform(a, b, size=max(n_knots - 2, 0))]))
    slopes = rng.uniform(-slope_cap, slope_cap, size=len(xs) - 1)
    v0 = rng.uniform(0.0, 1.0)
    vals = np.concatenate([[v0], v0 + np.cumsum(slopes * np.diff(xs))])
    return lambda x: np.interp(x, xs, vals)
