"""Moduli of continuity and the extremal functions built from them.

A modulus of continuity is a nondecreasing, subadditive function
``omega: [0, inf) -> [0, inf)`` with ``omega(0) = 0``.  Three parametric
families are supported:

* ``holder(alpha)``         -- omega(t) = t**alpha, alpha in (0, 1]
* ``capped_holder(alpha,C)``-- omega(t) = min(t**alpha, C)
* ``tabulated(knots)``      -- piecewise-linear through sorted (t, value)
                               knots, constant beyond the last knot

Every bounded modulus has an extremal function ``psi(r) = sup(omega) -
omega(r)`` whose own modulus of continuity reproduces ``omega``; for an
unbounded modulus a single truncation cap stands in (``psi = (cap -
omega)+``), which reproduces ``omega(t)`` for every t below the cap radius.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import ConfigurationError

__all__ = [
    "ModulusSpec",
    "ValidationReport",
    "ExtremalSpec",
    "modulus_eval",
    "modulus_validate",
    "extremal_construct",
    "parse_modulus",
]

#: absolute tolerance for the modulus axioms (documented as configurable
#: through the ``tol`` argument of :func:`modulus_validate`)
AXIOM_TOL = 1e-12


@dataclass(frozen=True)
class ModulusSpec:
    """A modulus of continuity, identified by family and parameters."""

    kind: str
    alpha: float | None = None
    cap: float | None = None
    knots: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind in ("holder", "capped_holder"):
            if self.alpha is None or not (0.0 < self.alpha <= 1.0):
                raise ValueError(f"holder exponent must lie in (0, 1], got {self.alpha}")
            if self.kind == "capped_holder":
                if self.cap is None or self.cap <= 0.0:
                    raise ValueError(f"cap must be positive, got {self.cap}")
        elif self.kind == "tabulated":
            if not self.knots:
                raise ValueError("tabulated modulus needs at least one knot")
            ts = [t for t, _ in self.knots]
            if any(t < 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("tabulated knots must be nonnegative and strictly increasing in t")
            if any(v < 0 for _, v in self.knots):
                raise ValueError("tabulated values must be nonnegative")
        else:
            raise ValueError(f"unknown modulus kind {self.kind!r}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def holder(alpha: float) -> "ModulusSpec":
        return ModulusSpec(kind="holder", alpha=float(alpha))

    @staticmethod
    def capped_holder(alpha: float, cap: float) -> "ModulusSpec":
        return ModulusSpec(kind="capped_holder", alpha=float(alpha), cap=float(cap))

    @staticmethod
    def tabulated(knots: Sequence[tuple[float, float]]) -> "ModulusSpec":
        return ModulusSpec(kind="tabulated", knots=tuple((float(t), float(v)) for t, v in knots))

    # -- queries -----------------------------------------------------------

    @property
    def sup(self) -> float:
        """Omega = sup omega; +inf for a plain Hölder modulus."""
        if self.kind == "holder":
            return math.inf
        if self.kind == "capped_holder":
            return self.cap
        return max(v for _, v in self.knots)

    @property
    def homogeneous(self) -> bool:
        """True when omega(ct) = c**alpha * omega(t): the t-search collapses."""
        return self.kind == "holder"

    @property
    def is_concave(self) -> bool:
        if self.kind in ("holder", "capped_holder"):
            return True  # t**alpha concave for alpha <= 1; min with a constant stays concave
        ts, vs = self._knot_arrays()
        slopes = np.diff(vs) / np.diff(ts)
        return bool(np.all(np.diff(slopes) <= 1e-12))

    def _knot_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ts = np.array([t for t, _ in self.knots], dtype=float)
        vs = np.array([v for _, v in self.knots], dtype=float)
        if ts[0] > 0.0:
            # omega(0) = 0 is definitional; anchor the interpolant there
            ts = np.concatenate(([0.0], ts))
            vs = np.concatenate(([0.0], vs))
        return ts, vs

    def eval(self, t):
        """Evaluate omega(t); t may be a scalar or an ndarray, must be >= 0."""
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ValueError("modulus argument must be nonnegative")
        if self.kind == "holder":
            out = arr ** self.alpha
        elif self.kind == "capped_holder":
            out = np.minimum(arr ** self.alpha, self.cap)
        else:
            ts, vs = self._knot_arrays()
            out = np.interp(arr, ts, vs)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    __call__ = eval

    def kink_args(self) -> list[float]:
        """Arguments where omega is not smooth; used as quadrature breakpoints."""
        if self.kind == "capped_holder":
            return [self.cap ** (1.0 / self.alpha)]
        if self.kind == "tabulated":
            ts, _ = self._knot_arrays()
            return [float(t) for t in ts if t > 0.0]
        return []

    def describe(self) -> str:
        if self.kind == "holder":
            return f"holder:{self.alpha:g}"
        if self.kind == "capped_holder":
            return f"capped:{self.alpha:g}:{self.cap:g}"
        return "tabulated[%d knots]" % len(self.knots)


def modulus_eval(spec: ModulusSpec, t) -> float:
    """Functional form of :meth:`ModulusSpec.eval`."""
    return spec.eval(t)


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


def modulus_validate(spec: ModulusSpec, grid: Sequence[float], tol: float = AXIOM_TOL) -> ValidationReport:
    """Check the modulus axioms on a sample grid.

    Verifies omega(0) = 0, monotonicity along the sorted grid, and
    subadditivity omega(a+b) <= omega(a) + omega(b) + tol over all grid
    pairs.  Violations are reported, never raised.
    """
    g = np.asarray(sorted(set(float(x) for x in grid)), dtype=float)
    if g.size == 0:
        raise ValueError("validation grid must be nonempty")
    if np.any(g < 0):
        raise ValueError("validation grid must be nonnegative")
    violations: list[str] = []

    if abs(spec.eval(0.0)) > tol:
        violations.append(f"omega(0) = {spec.eval(0.0):.3e} != 0")

    vals = spec.eval(g)
    drops = np.nonzero(np.diff(vals) < -tol)[0]
    for i in drops[:8]:
        violations.append(f"monotonicity: omega({g[i + 1]:g}) < omega({g[i]:g})")

    a = g[:, None]
    b = g[None, :]
    lhs = spec.eval((a + b).ravel()).reshape(a.shape[0], b.shape[1])
    excess = lhs - (vals[:, None] + vals[None, :]) - tol
    bad = np.argwhere(excess > 0)
    for i, j in bad[:8]:
        violations.append(
            f"subadditivity: omega({g[i] + g[j]:g}) > omega({g[i]:g}) + omega({g[j]:g})"
        )

    return ValidationReport(ok=not violations, violations=violations)


@dataclass(frozen=True)
class ExtremalSpec:
    """An extremal profile psi realizing a given modulus.

    ``psi`` is a radial profile: callers evaluate it at r = ||x|| under
    whatever norm defines their maximal operator.  On the half-line and on
    intervals the argument is the distance to the left endpoint, and
    negative arguments are rejected.
    """

    base_modulus: ModulusSpec
    domain_kind: str           # "global" | "halfline" | "interval"
    dimension: int = 1
    length: float | None = None
    truncation_cap: float | None = None

    @property
    def height(self) -> float:
        """Peak value Omega (or the truncation cap for unbounded moduli)."""
        if math.isfinite(self.base_modulus.sup):
            return self.base_modulus.sup
        return self.truncation_cap

    def profile(self, r):
        arr = np.asarray(r, dtype=float)
        if self.domain_kind != "global" and np.any(arr < 0):
            raise ValueError("half-line/interval extremal evaluated at negative abscissa")
        arr = np.abs(arr)
        out = np.maximum(self.height - self.base_modulus.eval(arr), 0.0)
        return float(out) if np.isscalar(r) or arr.ndim == 0 else out

    __call__ = profile


def extremal_construct(
    spec: ModulusSpec,
    domain: str = "global",
    cap: float | None = None,
    dimension: int = 1,
    length: float | None = None,
) -> ExtremalSpec:
    """Build the extremal profile for ``spec`` on the requested domain.

    A bounded modulus yields psi(r) = Omega - omega(r) directly.  An
    unbounded modulus needs an explicit ``cap``: psi(r) = (cap - omega(r))+,
    which reproduces omega(t) for all t below the cap radius.
    """
    if domain not in ("global", "halfline", "interval"):
        raise ValueError(f"unknown extremal domain {domain!r}")
    if domain == "interval" and (length is None or length <= 0):
        raise ValueError("interval domain needs a positive length")
    if not math.isfinite(spec.sup) and cap is None:
        raise ConfigurationError(
            "unbounded modulus requires a truncation cap for a desk-scale extremal"
        )
    return ExtremalSpec(
        base_modulus=spec,
        domain_kind=domain,
        dimension=dimension,
        length=length,
        truncation_cap=None if math.isfinite(spec.sup) else float(cap),
    )


def parse_modulus(text: str) -> ModulusSpec:
    """Parse the CLI syntax: ``holder:<a>``, ``capped:<a>:<cap>``, ``file:<path>``.

    A modulus file is CSV with a header line and ``t,omega`` rows.
    """
    parts = text.strip().split(":")
    try:
        if parts[0] == "holder" and len(parts) == 2:
            return ModulusSpec.holder(float(parts[1]))
        if parts[0] == "capped" and len(parts) == 3:
            return ModulusSpec.capped_holder(float(parts[1]), float(parts[2]))
        if parts[0] == "file" and len(parts) >= 2:
            path = ":".join(parts[1:])
            knots = []
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader)
                if header and _looks_numeric(header[0]):
                    knots.append((float(header[0]), float(header[1])))
                for row in reader:
                    if row:
                        knots.append((float(row[0]), float(row[1])))
            return ModulusSpec.tabulated(knots)
    except (ValueError, IndexError, OSError) as exc:
        raise ValueError(f"cannot parse modulus {text!r}: {exc}") from exc
    raise ValueError(f"cannot parse modulus {text!r}")


def _looks_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False
