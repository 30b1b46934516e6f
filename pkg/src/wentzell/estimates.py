"""Truncation and level-set machinery behind the max-norm stability bound.

For two solutions ``U``, ``V`` the truncations
``w_k = (|u - v| - k)^+ sgn(u - v)`` feed a decay recursion for the
level-set size ``psi(k)``; a Stampacchia-type lemma turns that into a
finite level where ``psi`` vanishes.
"""
from __future__ import annotations

import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .domain import DiscreteDomain, FieldPair
from .errors import BadMode, BadParameter, DimensionMismatch, HypothesisViolation
from .forms import Mode, ProblemSpec, bw_constant, form_A
from .solver import check_same_problem, data_difference_norms, solve_perturbed

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# truncation and level sets

def _pair(U, V):
    if isinstance(U, FieldPair) and isinstance(V, FieldPair):
        if U.values.shape != V.values.shape or not np.array_equal(U.boundary_index, V.boundary_index):
            raise DimensionMismatch("fields live on different meshes")
        return U.values, V.values, U.boundary_index
    raise DimensionMismatch("truncate expects two FieldPair arguments")


def truncate(U: FieldPair, V: FieldPair, k: float) -> FieldPair:
    """``(|u - v| - k)^+ sgn(u - v)`` at every node."""
    if k < 0:
        raise BadParameter("truncation level must be nonnegative")
    u, v, bidx = _pair(U, V)
    w = u - v
    return FieldPair(np.maximum(np.abs(w) - k, 0.0) * np.sign(w), bidx)


def level_set_norm(mask: np.ndarray, dom: DiscreteDomain, p_s: float, q_s: float) -> float:
    """Mixed norm of the indicator of a nodal set: ``(sum dx)^(1/p_s) + (sum dsigma)^(1/q_s)``."""
    vol = float(np.sum(dom.dx_weights[mask]))
    area = float(np.sum(dom.dsigma_weights[mask[dom.boundary_nodes]]))
    return vol ** (1.0 / p_s) + area ** (1.0 / q_s)


@dataclass(frozen=True)
class TruncationProfile:
    """``psi(k)`` on an increasing level grid; ``psi`` vanishes for ``k > w_inf``."""

    levels: np.ndarray
    psi: np.ndarray
    w_inf: float

    def rows(self):
        return [(float(k), float(s)) for k, s in zip(self.levels, self.psi)]


PROFILE_CSV_HEADER = ("k", "psi")


def level_profile(U: FieldPair, V: FieldPair, dom: DiscreteDomain, p_s: float, q_s: float,
                  n_levels: int) -> TruncationProfile:
    """Sample ``psi(k)`` for the level sets ``{|u - v| >= k}`` on a uniform grid up to ``max |u - v|``.

    When ``U = V`` the grid spans ``[0, 1]`` instead.
    """
    if n_levels < 2:
        raise BadParameter("n_levels must be at least 2")
    u, v, _ = _pair(U, V)
    if u.shape != (dom.n_nodes,):
        raise DimensionMismatch("fields do not match the domain")
    w = np.abs(u - v)
    w_inf = float(np.max(w))
    levels = np.linspace(0.0, w_inf if w_inf > 0 else 1.0, n_levels)
    psi = np.array([level_set_norm(w >= k, dom, p_s, q_s) for k in levels])
    return TruncationProfile(levels, psi, w_inf)


# ---------------------------------------------------------------------------
# Stampacchia lemma

def _check_stampacchia(psi_k0, c, alpha, delta, k0):
    if psi_k0 < 0 or not c > 0 or not alpha > 0 or not delta > 1 or k0 < 0:
        raise BadParameter("need psi(k0) >= 0, c > 0, alpha > 0, delta > 1, k0 >= 0")


def stampacchia_vanishing_level(psi_k0: float, c: float, alpha: float, delta: float, k0: float = 0.0) -> float:
    """``k0 + d`` with ``d = c^(1/alpha) psi(k0)^((delta-1)/alpha) 2^(delta (delta-1))``."""
    _check_stampacchia(psi_k0, c, alpha, delta, k0)
    d = c ** (1.0 / alpha) * psi_k0 ** ((delta - 1.0) / alpha) * 2.0 ** (delta * (delta - 1.0))
    return k0 + d


def classical_vanishing_level(psi_k0: float, c: float, alpha: float, delta: float, k0: float = 0.0) -> float:
    """``k0 + d`` with ``d^alpha = c psi(k0)^(delta-1) 2^(alpha delta/(delta-1))``."""
    _check_stampacchia(psi_k0, c, alpha, delta, k0)
    d = c ** (1.0 / alpha) * psi_k0 ** ((delta - 1.0) / alpha) * 2.0 ** (delta / (delta - 1.0))
    return k0 + d


def stampacchia_recursion(psi_k0: float, c: float, alpha: float, delta: float, k0: float, d: float,
                          n_steps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Iterate ``psi(k_{n+1}) = c (k_{n+1} - k_n)^(-alpha) psi(k_n)^delta`` on ``k_n = k0 + d (1 - 2^-n)``.

    Stops early once ``psi`` is zero or overflows.
    """
    _check_stampacchia(psi_k0, c, alpha, delta, k0)
    levels, psi = [k0], [psi_k0]
    for n in range(n_steps):
        gap = d * 2.0 ** (-(n + 1))
        try:
            nxt = c * gap ** (-alpha) * psi[-1] ** delta if psi[-1] > 0 else 0.0
        except OverflowError:
            nxt = math.inf
        levels.append(k0 + d * (1.0 - 2.0 ** (-(n + 1))))
        psi.append(float(nxt))
        if nxt == 0.0 or not math.isfinite(nxt):
            break
    return np.array(levels), np.array(psi)


def _reaches(psi_k0, c, alpha, delta, k0, d, threshold, n_steps):
    _, psi = stampacchia_recursion(psi_k0, c, alpha, delta, k0, d, n_steps)
    return bool(np.any(psi < threshold))


def empirical_vanishing_level(psi_k0: float, c: float, alpha: float, delta: float, k0: float = 0.0,
                              threshold: float = 1e-12, n_steps: int = 60, rel_tol: float = 1e-12) -> float:
    """Smallest ``k0 + d`` for which the recursion drives ``psi`` below ``threshold`` within ``n_steps``."""
    _check_stampacchia(psi_k0, c, alpha, delta, k0)
    if psi_k0 < threshold:
        return k0
    hi = max(classical_vanishing_level(psi_k0, c, alpha, delta), 1e-300)
    while not _reaches(psi_k0, c, alpha, delta, 0.0, hi, threshold, n_steps):
        hi *= 2.0
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _reaches(psi_k0, c, alpha, delta, 0.0, mid, threshold, n_steps):
            hi = mid
        else:
            lo = mid
    return k0 + hi


class StampacchiaLevels(NamedTuple):
    formula: float
    classical: float
    empirical: float


def stampacchia_levels(psi_k0, c, alpha, delta, k0=0.0, threshold=1e-12, n_steps=60) -> StampacchiaLevels:
    out = StampacchiaLevels(
        stampacchia_vanishing_level(psi_k0, c, alpha, delta, k0),
        classical_vanishing_level(psi_k0, c, alpha, delta, k0),
        empirical_vanishing_level(psi_k0, c, alpha, delta, k0, threshold, n_steps),
    )
    log.info("vanishing levels: formula %.6g, classical %.6g, empirical %.6g", *out)
    return out


def delta_variants(p_s: float, q_s: float, p3: float, q3: float) -> tuple[float, float]:
    """``(min(p_s/p3, q_s/p3), min(p_s/p3, q_s/q3))``; both must be positive."""
    printed = min(p_s / p3, q_s / p3)
    matched = min(p_s / p3, q_s / q3)
    log.info("delta: %.6g (q_s/p3 variant), %.6g (q_s/q3 variant)", printed, matched)
    if not (printed > 0 and matched > 0):
        raise BadParameter("delta must be positive")
    return printed, matched


# ---------------------------------------------------------------------------
# monotonicity of the truncated form

def calc_star_constant(spec: ProblemSpec) -> float | None:
    """Lower bound ``kappa`` in ``A(U, W_k) - A(V, W_k) >= kappa A(W_k, W_k)``.

    ``min(c_p, c_q)`` times the smallest monotone constant of the
    nonlinearities; ``None`` when a nonlinearity has none.
    """
    if spec.p < 2 or spec.q < 2:
        return None
    mono = [1.0]
    for nf in (spec.alpha1, spec.alpha2):
        if nf.range.is_degenerate:
            continue
        if nf.monotone_constant is None:
            return None
        mono.append(nf.monotone_constant)
    return min(bw_constant(spec.p), bw_constant(spec.q)) * min(mono)


def calc_star_terms(U: FieldPair, V: FieldPair, k: float, spec: ProblemSpec) -> tuple[float, float]:
    """``(A(U, W_k) - A(V, W_k), A(W_k, W_k))``."""
    w = truncate(U, V, k)
    return form_A(U, w, spec) - form_A(V, w, spec), form_A(w, w, spec)


# ---------------------------------------------------------------------------
# stability of the max norm with respect to the data

def check_hypotheses(spec: ProblemSpec, p1: float, q1: float) -> None:
    """Exponent conditions of the max-norm stability bound; raises :class:`HypothesisViolation`."""
    n, p, q = spec.domain.dim, spec.p, spec.q
    if p < 2 or q < 2:
        raise HypothesisViolation(f"need p, q >= 2 (got p={p}, q={q})")
    if not p1 > n / p:
        raise HypothesisViolation(f"need p1 > N/p = {n / p:g} (got {p1:g})")
    q_min = (n - 1) / p if p == q else (n - 1) / (p - 1)
    if not q1 > q_min:
        raise HypothesisViolation(f"need q1 > {q_min:g} (got {q1:g})")
    if p >= n:
        log.info("p >= N: the bound follows from the embedding into continuous functions")


@dataclass(frozen=True)
class StabilityResult:
    lhs: float
    df_norm: float
    dg_norm: float
    c_fit: float
    du_inf: float
    converged: bool

    @property
    def rhs_norms(self) -> tuple[float, float]:
        return self.df_norm, self.dg_norm


def linf_stability_check(spec1: ProblemSpec, spec2: ProblemSpec, p1: float, q1: float, tol: float = 1e-8,
                         max_iter: int = 5000, workers: int = 1) -> StabilityResult:
    """Solve both problems and compare ``max |U1 - U2|^(p-1)`` to the data difference.

    ``C_fit = lhs / (|f1 - f2|_{p1} + |g1 - g2|_{q1})`` (zero when both sides vanish).
    """
    check_same_problem(spec1, spec2)
    if spec1.mode is not Mode.PERTURBED:
        raise BadMode("the stability bound concerns the perturbed problem")
    check_hypotheses(spec1, p1, q1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            r1, r2 = pool.map(lambda s: solve_perturbed(s, tol, max_iter), (spec1, spec2))
    else:
        r1, r2 = solve_perturbed(spec1, tol, max_iter), solve_perturbed(spec2, tol, max_iter)
    du = float(np.max(np.abs(r1.iterate.values - r2.iterate.values)))
    lhs = du ** (spec1.p - 1.0)
    df, dg = data_difference_norms(spec1, spec2, p1, q1)
    total = df + dg
    if total > 0:
        c_fit = lhs / total
    else:
        c_fit = 0.0 if lhs <= (2.0 * tol) ** (spec1.p - 1.0) else math.inf
    return StabilityResult(lhs, df, dg, c_fit, du, r1.converged and r2.converged)


STABILITY_CSV_HEADER = ("epsilon", "lhs", "df_norm", "dg_norm", "C_fit")


def stability_sweep(spec: ProblemSpec, df_dir, dg_dir, epsilons, p1: float, q1: float, tol: float = 1e-8,
                    max_iter: int = 5000, workers: int = 1) -> list[tuple]:
    """One CSV row per ``eps``: the problem against its data perturbed by ``eps * (df_dir, dg_dir)``."""
    df_dir = np.broadcast_to(np.asarray(df_dir, dtype=float), spec.f.shape)
    dg_dir = np.broadcast_to(np.asarray(dg_dir, dtype=float), spec.g.shape)

    def run(eps):
        other = spec.with_data(f=spec.f + eps * df_dir, g=spec.g + eps * dg_dir)
        res = linf_stability_check(spec, other, p1, q1, tol, max_iter)
        return (float(eps), res.lhs, res.df_norm, res.dg_norm, res.c_fit)

    if workers <= 1:
        return [run(e) for e in epsilons]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, epsilons))


def c_fit_bounded(c_fits, factor: float = 100.0) -> bool:
    """No drift: ``max C_fit <= factor * median C_fit``."""
    vals = [float(c) for c in c_fits]
    return bool(vals) and all(math.isfinite(c) for c in vals) and max(vals) <= factor * statistics.median(vals)
