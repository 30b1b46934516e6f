"""N-functions, their complementary functions, and Orlicz modular/norm tools.

An :class:`NFunction` bundles a nonlinearity ``alpha`` (odd, nondecreasing,
``alpha(0) = 0``) with its potential ``lam(t) = int_0^|t| alpha`` and the
complementary potential ``lam_tilde(t) = int_0^|t| alpha_inv`` where
``alpha_inv(s) = inf{tau > 0 : alpha(tau) > s}`` is the generalized inverse.

Shipped nonlinearities (``power``, ``linear``, ``arctan``, ``zero`` and
piecewise-linear tables) use closed forms; arbitrary callables go through
:func:`nfunction_from_alpha`, which integrates numerically.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    BadParameter,
    EmptyGrid,
    MissingDelta2Constant,
    NoFiniteBracket,
    NonpositiveWeight,
    NonzeroAtOrigin,
    NotMonotone,
    NotOdd,
    WeightMismatch,
)

ArrayFunc = Callable[[np.ndarray], np.ndarray]

SIMPSON_TOL = 1e-10
SIMPSON_REL_FLOOR = 1e-13
RANGE_PROBE = 1e8


@dataclass(frozen=True)
class Interval:
    """Real interval with explicit openness flags; endpoints may be infinite.

    Infinite endpoints are always treated as open.
    """

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise BadParameter(f"empty interval [{self.lo}, {self.hi}]")
        if math.isinf(self.lo):
            object.__setattr__(self, "lo_open", True)
        if math.isinf(self.hi):
            object.__setattr__(self, "hi_open", True)

    @property
    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def scale(self, factor: float) -> Interval:
        if factor < 0:
            return Interval(factor * self.hi, factor * self.lo, self.hi_open, self.lo_open)
        if factor == 0:
            return Interval(0.0, 0.0)
        return Interval(factor * self.lo, factor * self.hi, self.lo_open, self.hi_open)

    def __add__(self, other: Interval) -> Interval:
        # Minkowski sum: an endpoint is open if either summand's endpoint is.
        return Interval(
            self.lo + other.lo,
            self.hi + other.hi,
            self.lo_open or other.lo_open,
            self.hi_open or other.hi_open,
        )

    def contains(self, x: float) -> bool:
        lo_ok = x > self.lo if self.lo_open else x >= self.lo
        hi_ok = x < self.hi if self.hi_open else x <= self.hi
        return lo_ok and hi_ok

    def in_interior(self, x: float) -> bool:
        return self.lo < x < self.hi

    def in_closure(self, x: float) -> bool:
        return self.lo <= x <= self.hi


REAL_LINE = Interval(-math.inf, math.inf, True, True)


@dataclass(frozen=True)
class NFunction:
    """A nonlinearity with its potential and complementary potential.

    All callables accept and return numpy arrays (scalars are fine too).

    ``monotone_constant`` is a constant ``c`` with
    ``(alpha(t) - alpha(s)) (t - s) >= c alpha(t - s) (t - s)`` when one is
    known (``None`` otherwise).
    """

    name: str
    alpha: ArrayFunc
    lam: ArrayFunc
    lam_tilde: ArrayFunc
    alpha_inverse: ArrayFunc
    range: Interval
    delta2_constant: float | None = None
    monotone_constant: float | None = None
    params: dict = field(default_factory=dict)

    def complementary(self) -> NFunction:
        """The Young-conjugate pair with the roles of ``lam`` and ``lam_tilde`` swapped."""
        return NFunction(
            name=f"{self.name}~",
            alpha=self.alpha_inverse,
            lam=self.lam_tilde,
            lam_tilde=self.lam,
            alpha_inverse=self.alpha,
            range=REAL_LINE,
            params=dict(self.params),
        )


# ---------------------------------------------------------------------------
# closed-form families


def power(c: float = 1.0, r: float = 1.0) -> NFunction:
    """``alpha(s) = c |s|^(r-1) s`` with ``c, r > 0``."""
    if not (c > 0 and r > 0):
        raise BadParameter("power nonlinearity needs c > 0 and r > 0")

    def alpha(s):
        s = np.asarray(s, dtype=float)
        return c * np.sign(s) * np.abs(s) ** r

    def lam(t):
        return c * np.abs(np.asarray(t, dtype=float)) ** (r + 1) / (r + 1)

    def alpha_inverse(s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * (np.abs(s) / c) ** (1.0 / r)

    def lam_tilde(t):
        a = np.abs(np.asarray(t, dtype=float))
        return (r / (r + 1)) * c ** (-1.0 / r) * a ** ((r + 1) / r)

    return NFunction(
        name="power",
        alpha=alpha,
        lam=lam,
        lam_tilde=lam_tilde,
        alpha_inverse=alpha_inverse,
        range=REAL_LINE,
        delta2_constant=2.0 ** (r + 1),
        monotone_constant=2.0 ** (1 - r) if r >= 1 else None,
        params={"c": c, "r": r},
    )


def linear(c: float = 1.0) -> NFunction:
    return replace(power(c, 1.0), name="linear", params={"c": c})


def arctan() -> NFunction:
    """``alpha = arctan``; bounded range ``(-pi/2, pi/2)``."""

    def alpha(s):
        return np.arctan(np.asarray(s, dtype=float))

    def lam(t):
        a = np.abs(np.asarray(t, dtype=float))
        # 0.5 log(1 + a^2) without overflow for large a
        with np.errstate(divide="ignore", over="ignore"):
            big = a > 1.0
            log_term = np.where(
                big,
                np.log(np.where(big, a, 1.0)) + 0.5 * np.log1p(1.0 / np.where(big, a, 1.0) ** 2),
                0.5 * np.log1p(np.where(big, 0.0, a) ** 2),
            )
        return a * np.arctan(a) - log_term

    def alpha_inverse(s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) < np.pi / 2
        return np.where(inside, np.tan(np.where(inside, s, 0.0)), np.sign(s) * np.inf)

    def lam_tilde(t):
        a = np.abs(np.asarray(t, dtype=float))
        inside = a < np.pi / 2
        with np.errstate(divide="ignore"):
            return np.where(inside, -np.log(np.cos(np.where(inside, a, 0.0))), np.inf)

    return NFunction(
        name="arctan",
        alpha=alpha,
        lam=lam,
        lam_tilde=lam_tilde,
        alpha_inverse=alpha_inverse,
        range=Interval(-np.pi / 2, np.pi / 2, True, True),
    )


def zero() -> NFunction:
    """``alpha = 0``; the complementary potential is infinite off the origin."""

    def alpha(s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def lam_tilde(t):
        t = np.asarray(t, dtype=float)
        return np.where(t == 0, 0.0, np.inf)

    def alpha_inverse(s):
        # convention: 0 at the origin (d_j = 0 when c_j = 0)
        s = np.asarray(s, dtype=float)
        return np.where(s == 0, 0.0, np.sign(s) * np.inf)

    return NFunction(
        name="zero",
        alpha=alpha,
        lam=alpha,
        lam_tilde=lam_tilde,
        alpha_inverse=alpha_inverse,
        range=Interval(0.0, 0.0),
        monotone_constant=1.0,
    )


def _pl_eval(x, y, slope, X):
    """Piecewise-linear interpolant through (x, y), extended by ``slope`` past x[-1].

    ``x`` may repeat values (jumps); the right-continuous branch is taken.
    """
    X = np.asarray(X, dtype=float)
    i = np.clip(np.searchsorted(x, X, side="right") - 1, 0, len(x) - 2)
    dx = x[i + 1] - x[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(dx > 0, y[i] + (X - x[i]) * (y[i + 1] - y[i]) / np.where(dx > 0, dx, 1.0), y[i + 1])
    return np.where(X >= x[-1], y[-1] + slope * (X - x[-1]), inner)


def _pl_integral(x, y, slope, X):
    """Exact integral from x[0] = 0 to X >= 0 of the interpolant of :func:`_pl_eval`."""
    X = np.asarray(X, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(np.diff(x) * (y[1:] + y[:-1]) / 2)))
    i = np.clip(np.searchsorted(x, X, side="right") - 1, 0, len(x) - 1)
    yX = _pl_eval(x, y, slope, X)
    return cum[i] + (X - x[i]) * (y[i] + yX) / 2


def table(t_values, alpha_values, name: str = "custom-table") -> NFunction:
    """Piecewise-linear nonlinearity from samples ``(t_i, alpha(t_i))`` with ``t_i >= 0``.

    The table is extended oddly to negative arguments and linearly (last
    slope) beyond its last point; a flat last segment gives a bounded,
    closed range. The complementary function integrates the piecewise-linear
    inverse exactly, flats becoming jumps of the inverse.
    """
    t = np.asarray(t_values, dtype=float)
    a = np.asarray(alpha_values, dtype=float)
    if t.ndim != 1 or t.shape != a.shape or len(t) < 2:
        raise BadParameter("table needs two equal-length columns with at least 2 rows")
    if t[0] != 0.0:
        if t[0] < 0:
            raise BadParameter("table arguments must be nonnegative")
        t = np.concatenate(([0.0], t))
        a = np.concatenate(([0.0], a))
    if a[0] != 0.0:
        raise NonzeroAtOrigin("table must have alpha(0) = 0")
    if np.any(np.diff(t) <= 0):
        raise BadParameter("table arguments must be strictly increasing")
    if np.any(np.diff(a) < 0):
        raise NotMonotone("table values must be nondecreasing")
    slope = (a[-1] - a[-2]) / (t[-1] - t[-2])
    bounded = slope == 0
    inv_slope = 0.0 if bounded else 1.0 / slope

    def alpha(s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * _pl_eval(t, a, slope, np.abs(s))

    def lam(x):
        return _pl_integral(t, a, slope, np.abs(np.asarray(x, dtype=float)))

    def alpha_inverse(s):
        s = np.asarray(s, dtype=float)
        m = np.abs(s)
        out = _pl_eval(a, t, inv_slope, m)
        if bounded:
            out = np.where(m >= a[-1], np.inf, out)
        return np.where(m == 0, 0.0, np.sign(s) * out)

    def lam_tilde(x):
        m = np.abs(np.asarray(x, dtype=float))
        if bounded:
            return np.where(m > a[-1], np.inf, _pl_integral(a, t, 0.0, np.minimum(m, a[-1])))
        return _pl_integral(a, t, inv_slope, m)

    if not bounded:
        rng = REAL_LINE
    else:
        rng = Interval(-a[-1], a[-1]) if a[-1] > 0 else Interval(0.0, 0.0)
    return NFunction(
        name=name,
        alpha=alpha,
        lam=lam,
        lam_tilde=lam_tilde,
        alpha_inverse=alpha_inverse,
        range=rng,
        params={"rows": len(t), "t_max": float(t[-1])},
    )


def table_from_csv(path) -> NFunction:
    """Read a two-column CSV ``t,alpha`` (a non-numeric header row is skipped)."""
    ts, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                ts.append(float(row[0]))
                vals.append(float(row[1]))
            except (ValueError, IndexError):
                if ts:
                    raise BadParameter(f"bad table row {row!r} in {path}")
    return table(ts, vals)


# ---------------------------------------------------------------------------
# generic construction by quadrature


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = SIMPSON_TOL,
                     max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``.

    Panels stop refining once the Richardson error estimate is below ``tol``
    (halved per level) or below roundoff relative to the panel value.
    """

    def simpson(fa, fm, fb, h):
        return h * (fa + 4 * fm + fb) / 6

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        # absolute tolerance, floored at roundoff level relative to the panel value
        if depth <= 0 or abs(delta) <= 15 * max(tol, SIMPSON_REL_FLOOR * abs(left + right)) \
                or not math.isfinite(delta):
            return left + right + delta / 15
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


def generalized_inverse(alpha: Callable[[float], float], s: float) -> float:
    """``inf{tau > 0 : alpha(tau) > s}`` for an odd nondecreasing ``alpha``.

    Returns ``+inf`` (``-inf`` for negative ``s``) when ``s`` is at or above
    the supremum of ``alpha``.
    """
    if s < 0:
        return -generalized_inverse(alpha, -s)
    hi = 1.0
    while not alpha(hi) > s:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = 0.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if alpha(mid) > s:
            hi = mid
        else:
            lo = mid
    return hi


def _as_array_func(scalar_func: Callable[[float], float]) -> ArrayFunc:
    vec = np.vectorize(lambda x: float(scalar_func(float(x))), otypes=[float])

    def wrapped(x):
        out = vec(np.asarray(x, dtype=float))
        return out if out.ndim else float(out)

    return wrapped


def _scalarize(func: Callable) -> Callable[[float], float]:
    def scalar(x: float) -> float:
        return float(np.asarray(func(x), dtype=float))

    return scalar


def estimate_range(alpha: Callable[[float], float], probe: float = RANGE_PROBE) -> Interval:
    """Estimate ``R(alpha)`` from samples at ``probe`` and ``probe / 10``.

    A saturating tail is extrapolated as ``a(T) + (a(T) - a(T/10)) / 9``
    (exact for tails decaying like ``1/T``); the endpoint is open when
    ``alpha`` is still increasing there and closed when it is flat.
    """
    a_hi, a_lo = float(alpha(probe)), float(alpha(probe / 10))
    if a_hi == 0.0:
        return Interval(0.0, 0.0)
    if not math.isfinite(a_hi) or a_hi > (1 + 1e-3) * a_lo:
        return REAL_LINE
    if a_hi == a_lo:
        return Interval(-a_hi, a_hi)
    sup = a_hi + (a_hi - a_lo) / 9
    return Interval(-sup, sup, True, True)


def _validation_grid() -> np.ndarray:
    pos = np.concatenate((np.logspace(-6, 6, 121), np.linspace(0.05, 10, 200)))
    return np.unique(pos)


def validate_alpha(alpha: Callable[[float], float], rel_tol: float = 1e-12) -> None:
    """Sampled check that ``alpha`` is odd, nondecreasing and vanishes at 0."""
    a0 = float(alpha(0.0))
    if a0 != 0.0:
        raise NonzeroAtOrigin(f"alpha(0) = {a0!r}")
    t = _validation_grid()
    ap = np.array([float(alpha(x)) for x in t])
    am = np.array([float(alpha(-x)) for x in t])
    scale = np.maximum(1.0, np.abs(ap))
    if np.any(np.abs(ap + am) > rel_tol * scale):
        raise NotOdd("alpha(-t) != -alpha(t) on the sample grid")
    if np.any(np.diff(ap) < -rel_tol * scale[1:]) or np.any(ap < -rel_tol):
        raise NotMonotone("alpha decreases on the sample grid")


def nfunction_from_alpha(alpha: Callable[[float], float], quadrature_step: float = 1.0, *,
                         range: Interval | None = None, delta2_constant: float | None = None,
                         name: str = "custom") -> NFunction:
    """Build an :class:`NFunction` from a scalar nonlinearity by quadrature.

    Parameters
    ----------
    alpha
        Scalar callable, odd, continuous, nondecreasing with ``alpha(0) = 0``.
    quadrature_step
        Panel width used to pre-split ``[0, |t|]`` before adaptive Simpson
        refinement (at most 64 panels).
    range
        Declared ``R(alpha)``; estimated with :func:`estimate_range` if omitted.
    """
    if not quadrature_step > 0:
        raise BadParameter("quadrature_step must be positive")
    a_scalar = _scalarize(alpha)
    validate_alpha(a_scalar)
    rng = range if range is not None else estimate_range(a_scalar)

    def integrate(func, upper):
        if upper == 0.0:
            return 0.0
        if math.isinf(upper):
            return math.inf
        n = int(min(64, max(1, math.ceil(upper / quadrature_step))))
        edges = np.linspace(0.0, upper, n + 1)
        return sum(adaptive_simpson(func, lo, hi, SIMPSON_TOL / n) for lo, hi in zip(edges[:-1], edges[1:]))

    def inv_scalar(s):
        return generalized_inverse(a_scalar, s)

    def lam_scalar(t):
        return integrate(a_scalar, abs(t))

    def lam_tilde_scalar(t):
        a = abs(t)
        sup = rng.hi
        if a > sup or (a == sup and rng.hi_open):
            return math.inf
        return integrate(inv_scalar, a)

    return NFunction(
        name=name,
        alpha=_as_array_func(a_scalar),
        lam=_as_array_func(lam_scalar),
        lam_tilde=_as_array_func(lam_tilde_scalar),
        alpha_inverse=_as_array_func(inv_scalar),
        range=rng,
        delta2_constant=delta2_constant,
    )


# ---------------------------------------------------------------------------
# registry

REGISTRY: dict[str, Callable[..., NFunction]] = {
    "power": power,
    "linear": linear,
    "arctan": arctan,
    "zero": zero,
    "custom-table": lambda path: table_from_csv(path),
}


def make_nfunction(name: str, **params) -> NFunction:
    """Look up a nonlinearity by registry name (``power``, ``arctan``, ...)."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise BadParameter(f"unknown nonlinearity {name!r}; known: {', '.join(REGISTRY)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise BadParameter(f"bad parameters for {name!r}: {exc}") from None


# ---------------------------------------------------------------------------
# growth conditions

DEFAULT_T_GRID = np.logspace(-6, 6, 241)


class Delta2Check(NamedTuple):
    satisfied: bool
    constant: float
    sandwich_c: float  # largest c with c t alpha(t) <= lam(t) on the grid
    sandwich_upper: bool  # lam(t) <= t alpha(t) on the grid


class Nabla2Check(NamedTuple):
    holds: bool
    c_used: float


def _positive_grid(t_grid) -> np.ndarray:
    t = DEFAULT_T_GRID if t_grid is None else np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.size == 0:
        raise EmptyGrid("t_grid is empty")
    if np.any(t <= 0):
        raise BadParameter("t_grid must be strictly positive")
    return np.sort(t)


def check_delta2(nf: NFunction, t_grid=None, cap_tol: float = 0.01) -> Delta2Check:
    """Estimate ``sup lam(2t) / lam(t)`` over a grid and decide the doubling condition.

    The constant counts as finite when including the top two decades of the
    grid raises the supremum by less than ``cap_tol`` (relative).
    """
    t = _positive_grid(t_grid)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        l1 = np.asarray(nf.lam(t), dtype=float)
        l2 = np.asarray(nf.lam(2 * t), dtype=float)
        ratio = np.where(l1 > 0, l2 / np.where(l1 > 0, l1, 1.0), np.where(l2 > 0, np.inf, 1.0))
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    constant = float(np.max(ratio))
    lower = t <= t[-1] / 100
    if np.any(lower) and np.any(~lower):
        sup_low = float(np.max(ratio[lower]))
        satisfied = math.isfinite(constant) and constant <= (1 + cap_tol) * sup_low
    else:
        satisfied = math.isfinite(constant)

    with np.errstate(over="ignore", invalid="ignore"):
        ta = t * np.asarray(nf.alpha(t), dtype=float)
        ok = (ta > 0) & np.isfinite(ta) & np.isfinite(l1)
    if np.any(ok):
        sandwich_c = float(min(1.0, np.min(l1[ok] / ta[ok])))
        upper = bool(np.all(l1[ok] <= ta[ok] * (1 + 1e-12)))
    else:
        sandwich_c, upper = 1.0, True
    return Delta2Check(bool(satisfied), constant, sandwich_c, upper)


def check_nabla2_from_delta2(nf: NFunction, t_grid=None, delta2_constant: float | None = None) -> Nabla2Check:
    """Check ``2c lam_tilde(t) <= lam_tilde(c t)`` with ``c = 2^(C2 - 1)`` on a grid."""
    c2 = delta2_constant if delta2_constant is not None else nf.delta2_constant
    if c2 is None:
        raise MissingDelta2Constant(f"{nf.name}: no doubling constant declared or supplied")
    t = _positive_grid(t_grid)
    c = 2.0 ** (c2 - 1)
    with np.errstate(over="ignore", invalid="ignore"):
        lhs = 2 * c * np.asarray(nf.lam_tilde(t), dtype=float)
        rhs = np.asarray(nf.lam_tilde(c * t), dtype=float)
    holds = bool(np.all((lhs <= rhs * (1 + 1e-12)) | (rhs == np.inf)))
    return Nabla2Check(holds, c)


def young_gap(nf: NFunction, s, t) -> np.ndarray:
    """``lam(s) + lam_tilde(t) - s t``; nonnegative by Young's inequality."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return nf.lam(s) + nf.lam_tilde(t) - s * t


def legendre_defect(nf: NFunction, s) -> np.ndarray:
    """``lam_tilde(alpha(s)) - (s alpha(s) - lam(s))``; zero in exact arithmetic."""
    s = np.asarray(s, dtype=float)
    a = nf.alpha(s)
    return nf.lam_tilde(a) - (s * a - nf.lam(s))


# ---------------------------------------------------------------------------
# modular and Luxemburg norm


@dataclass(frozen=True)
class WeightedSamples:
    """Samples of a function together with the quadrature weights of a measure."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise WeightMismatch(f"{v.size} values vs {w.size} weights")
        if np.any(~(w > 0)):
            raise NonpositiveWeight("quadrature weights must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    def scaled(self, factor: float) -> WeightedSamples:
        return WeightedSamples(self.values * factor, self.weights)


def _modular(values, weights, phi) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sum(weights * np.asarray(phi(values), dtype=float)))


def modular(samples: WeightedSamples, nf: NFunction) -> float:
    """``sum_i w_i lam(v_i)``."""
    return _modular(samples.values, samples.weights, nf.lam)


def _luxemburg(values, weights, phi, rel_tol) -> float:
    if not rel_tol > 0:
        raise BadParameter("rel_tol must be positive")
    top = float(np.max(np.abs(values))) if values.size else 0.0
    if top == 0.0:
        return 0.0

    def small_enough(k):
        m = _modular(values / k, weights, phi)
        return m <= 1.0

    hi = top
    for _ in range(4000):
        if small_enough(hi):
            break
        hi *= 2.0
        if math.isinf(hi):
            break
    else:
        hi = math.inf
    if math.isinf(hi) or not small_enough(hi):
        raise NoFiniteBracket("modular stays above 1 for every tested scale")
    lo = hi / 2
    while small_enough(lo):
        lo /= 2
        if lo == 0.0:
            return 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if small_enough(mid):
            hi = mid
        else:
            lo = mid
    return hi


def luxemburg_norm(samples: WeightedSamples, nf: NFunction, rel_tol: float = 1e-10, *,
                   complementary: bool = False) -> float:
    """``inf{k > 0 : modular(u / k) <= 1}`` by bracketing and bisection.

    The returned value ``k`` always satisfies ``modular(u / k) <= 1`` and is
    within ``rel_tol`` (relative) of the infimum. With ``complementary=True``
    the norm is taken with respect to ``lam_tilde``.
    """
    phi = nf.lam_tilde if complementary else nf.lam
    return _luxemburg(samples.values, samples.weights, phi, rel_tol)


def holder_orlicz(u: WeightedSamples, v: WeightedSamples, nf: NFunction,
                  rel_tol: float = 1e-10) -> tuple[float, float]:
    """Both sides of ``|int u v| <= 2 ||u||_lam ||v||_lam_tilde``."""
    if u.weights.shape != v.weights.shape or not np.array_equal(u.weights, v.weights):
        raise WeightMismatch("u and v must share quadrature weights")
    lhs = abs(float(np.sum(u.weights * u.values * v.values)))
    nu = luxemburg_norm(u, nf, rel_tol)
    if nu == 0.0:
        return lhs, 0.0
    nv = luxemburg_norm(v, nf, rel_tol, complementary=True)
    return lhs, 2.0 * nu * nv
