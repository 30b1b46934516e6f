"""Convex minimization of the discrete energies.

The minimizer is a diagonally preconditioned limited-memory BFGS iteration
with a monotone backtracking line search. Every accepted step decreases the
energy (up to roundoff), so the trace is nonincreasing.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .domain import FieldPair
from .errors import BadMode, BadParameter, NonFiniteEnergy, SpecMismatch
from .forms import Mode, ProblemSpec, energy_and_gradient, residual_inf

log = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    MAX_ITERATIONS = "MaxIterations"


class TraceEntry(NamedTuple):
    energy: float
    residual: float
    step: float


@dataclass(frozen=True)
class SolverOptions:
    """Tuning knobs; the defaults suit every problem in the test-suite."""

    tol: float = 1e-8
    max_iter: int = 5000
    ceiling: float = 1e6
    stall_window: int = 50
    stall_reduction: float = 0.01
    memory: int = 10
    precond_floor: float = 1e-8
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.tol > 0:
            raise BadParameter("tol must be positive")
        if self.max_iter < 0:
            raise BadParameter("max_iter must be nonnegative")


@dataclass
class SolveReport:
    """Outcome of a solve. ``solution`` is set only when the verdict is Converged."""

    verdict: Verdict
    iterations: int
    final_residual_inf: float
    final_energy: float
    iterate: FieldPair
    trace: list[TraceEntry] = field(default_factory=list)
    note: str = ""

    @property
    def solution(self) -> FieldPair | None:
        return self.iterate if self.verdict is Verdict.CONVERGED else None

    @property
    def converged(self) -> bool:
        return self.verdict is Verdict.CONVERGED


def _direction(g, pinv, s_hist, y_hist):
    """Two-loop recursion with the scaled diagonal as the initial inverse Hessian."""
    q = g.copy()
    coeffs = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        coeffs.append((rho, a))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        gamma = (s @ y) / (y @ (pinv * y))
    else:
        gamma = 1.0
    r = gamma * pinv * q
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(coeffs)):
        b = rho * (y @ r)
        r += (a - b) * s
    return -r


def _finite(e, g):
    return np.isfinite(e) and np.all(np.isfinite(g))


def minimize(spec: ProblemSpec, u0, options: SolverOptions | None = None) -> SolveReport:
    """Minimize the energy of ``spec`` from the nodal field ``u0``."""
    opts = options or SolverOptions()
    bidx = spec.domain.boundary_nodes
    u = np.array(u0.values if isinstance(u0, FieldPair) else u0, dtype=float)
    e, g, diag = energy_and_gradient(u, spec, want_diag=True)
    trace: list[TraceEntry] = []

    def report(verdict, it, res, note=""):
        return SolveReport(verdict, it, res, float(e), FieldPair(u, bidx), trace, note)

    if not _finite(e, g):
        return report(Verdict.DIVERGED, 0, float("inf"), "non-finite energy at the initial guess")
    res = residual_inf(g, spec)
    trace.append(TraceEntry(float(e), res, 0.0))
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []

    for it in range(opts.max_iter):
        if res <= opts.tol:
            return report(Verdict.CONVERGED, it, res)
        unorm = float(np.max(np.abs(u)))
        if (unorm > opts.ceiling and it >= opts.stall_window
                and res > (1.0 - opts.stall_reduction) * trace[-1 - opts.stall_window].residual):
            return report(Verdict.DIVERGED, it, res, "iterate exceeds the ceiling while the residual stagnates")

        pinv = 1.0 / np.maximum(diag, opts.precond_floor)
        accepted = False
        for attempt in range(2):
            d = _direction(g, pinv, s_hist, y_hist)
            slope = g @ d
            if not (slope < 0 and np.isfinite(slope)):
                s_hist.clear()
                y_hist.clear()
                d = -pinv * g
                slope = g @ d
            if not slope < 0:
                break
            t = min(1.0, max(1.0, unorm) / float(np.max(np.abs(d))))
            for _ in range(opts.max_backtracks):
                un = u + t * d
                en, gn, dn = energy_and_gradient(un, spec, want_diag=True)
                if _finite(en, gn):
                    armijo = en <= e + opts.armijo_c1 * t * slope
                    # convexity: phi'(t) <= c1 phi'(0) implies the Armijo condition
                    certified = gn @ d <= opts.armijo_c1 * slope and en <= e + 1e-12 * (1.0 + abs(e))
                    if armijo or certified:
                        accepted = True
                        break
                t *= opts.backtrack
            if accepted or not s_hist:
                break
            s_hist.clear()
            y_hist.clear()
        if not accepted:
            if not np.all(np.isfinite(u + d)):
                return report(Verdict.DIVERGED, it, res, "non-finite trial iterate")
            return report(Verdict.MAX_ITERATIONS, it, res, "line search failed")

        step, dy = un - u, gn - g
        if step @ dy > 1e-16 * np.sqrt((step @ step) * (dy @ dy)):
            s_hist.append(step)
            y_hist.append(dy)
            if len(s_hist) > opts.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        u, e, g, diag = un, en, gn, dn
        res = residual_inf(g, spec)
        trace.append(TraceEntry(float(e), res, float(t)))

    if res <= opts.tol:
        return report(Verdict.CONVERGED, opts.max_iter, res)
    return report(Verdict.MAX_ITERATIONS, opts.max_iter, res, "iteration limit reached")


def _check_data(spec: ProblemSpec):
    if not (np.all(np.isfinite(spec.f)) and np.all(np.isfinite(spec.g))):
        raise NonFiniteEnergy("data contain non-finite values")


def _options(tol, max_iter, options):
    base = options or SolverOptions()
    return SolverOptions(**{**base.__dict__, "tol": tol, "max_iter": max_iter})


def solve_perturbed(spec: ProblemSpec, tol: float = 1e-8, max_iter: int = 5000, *,
                    initial=None, options: SolverOptions | None = None) -> SolveReport:
    """Unique minimizer of the perturbed (coercive, strictly convex) energy; starts from zero by default."""
    if spec.mode is not Mode.PERTURBED:
        raise BadMode("solve_perturbed needs a perturbed-mode problem")
    _check_data(spec)
    u0 = np.zeros(spec.domain.n_nodes) if initial is None else initial
    return minimize(spec, u0, _options(tol, max_iter, options))


def solve_resonant(spec: ProblemSpec, tol: float = 1e-8, max_iter: int = 5000, *,
                   options: SolverOptions | None = None) -> SolveReport:
    """Minimize the resonant energy starting from the constant suggested by :func:`resonance.split_mean`.

    A mean on the boundary of the solvability interval never yields a
    definite verdict; such runs are reported as MaxIterations.
    """
    from .resonance import Classification, solvability, split_mean

    if spec.mode is not Mode.RESONANT:
        raise BadMode("solve_resonant needs a resonant-mode problem")
    _check_data(spec)
    verdict = solvability(spec)
    start = 0.0
    if verdict.classification is Classification.STRICTLY_SOLVABLE:
        _, _, d1, d2 = split_mean(spec, verdict)
        start = d1 if spec.alpha1.range.half_width > 0 else d2
    u0 = np.full(spec.domain.n_nodes, start)
    rep = minimize(spec, u0, _options(tol, max_iter, options))
    if verdict.classification is Classification.BOUNDARY_CASE:
        rep.note = f"mean on the boundary of the solvability interval (solver said {rep.verdict.value})"
        rep.verdict = Verdict.MAX_ITERATIONS
    return rep


def lumped_norm(values, weights, r: float) -> float:
    """Discrete ``L^r`` norm with nodal quadrature weights."""
    return float(np.sum(weights * np.abs(values) ** r) ** (1.0 / r))


def data_difference_norms(spec1: ProblemSpec, spec2: ProblemSpec, p1: float, q1: float) -> tuple[float, float]:
    dom = spec1.domain
    return (lumped_norm(spec1.f - spec2.f, dom.dx_weights, p1),
            lumped_norm(spec1.g - spec2.g, dom.dsigma_weights, q1))


_CLOSED_FAMILIES = ("power", "linear", "arctan", "zero")


def check_same_problem(spec1: ProblemSpec, spec2: ProblemSpec) -> None:
    """Raise :class:`SpecMismatch` unless the two problems differ only in their data."""
    same = (spec1.domain is spec2.domain and spec1.p == spec2.p and spec1.q == spec2.q
            and spec1.rho == spec2.rho and spec1.mode is spec2.mode)
    for a, b in ((spec1.alpha1, spec2.alpha1), (spec1.alpha2, spec2.alpha2)):
        same = same and (a is b or (a.name in _CLOSED_FAMILIES and a.name == b.name and a.params == b.params))
    for a, b in ((spec1.beta1, spec2.beta1), (spec1.beta2, spec2.beta2)):
        same = same and ((a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b)))
    if not same:
        raise SpecMismatch("problems must differ only in f and g")


def continuous_dependence(spec1: ProblemSpec, spec2: ProblemSpec, tol: float = 1e-8,
                          p1: float = 2.0, q1: float = 2.0, max_iter: int = 5000):
    """Solve two perturbed problems with different data.

    Returns ``(max |U1 - U2|, (|f1 - f2|_{p1}, |g1 - g2|_{q1}))``.
    """
    check_same_problem(spec1, spec2)
    if spec1.mode is not Mode.PERTURBED:
        raise BadMode("continuous dependence is stated for the perturbed problem")
    if spec1.p < 2 or spec1.q < 2:
        raise BadParameter("continuous dependence requires p, q >= 2")
    r1 = solve_perturbed(spec1, tol, max_iter)
    r2 = solve_perturbed(spec2, tol, max_iter)
    for r in (r1, r2):
        if not r.converged:
            log.warning("paired solve ended with %s (residual %.3g)", r.verdict.value, r.final_residual_inf)
    du = float(np.max(np.abs(r1.iterate.values - r2.iterate.values)))
    return du, data_difference_norms(spec1, spec2, p1, q1)
