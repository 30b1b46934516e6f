"""Solvability at resonance: ranges, the mean of the data, and the verdict.

The resonant problem can only be solved when the data mean
``int f dx + int g dsigma/b`` lies in ``I = lam1 R(alpha1) + lam2 R(alpha2)``
and is solvable whenever the mean lies in the interior of ``I``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .domain import integrate_pair, measures
from .errors import BadMode, NotStrictlySolvable
from .forms import Mode, ProblemSpec
from .orlicz import Interval, NFunction, estimate_range

BOUNDARY_BAND = 1e-9
NUDGE = 1e-3


class Classification(str, enum.Enum):
    STRICTLY_SOLVABLE = "StrictlySolvable"
    BOUNDARY_CASE = "BoundaryCase"
    UNSOLVABLE = "Unsolvable"


VERDICT_CSV_HEADER = ("mean_total", "lo", "hi", "lo_open", "hi_open", "classification")


@dataclass(frozen=True)
class SolvabilityVerdict:
    mean_total: float
    interval: Interval
    classification: Classification
    lam1: float
    lam2: float

    def csv_row(self) -> tuple:
        iv = self.interval
        return (self.mean_total, iv.lo, iv.hi, int(iv.lo_open), int(iv.hi_open), self.classification.value)


def range_interval(nf: NFunction) -> Interval:
    """``R(alpha)``: the declared range, or a numerical estimate."""
    if nf.range is not None:
        return nf.range
    return estimate_range(lambda s: float(nf.alpha(s)))


def classify(mean: float, interval: Interval, band: float = BOUNDARY_BAND) -> Classification:
    """Place ``mean`` relative to ``interval``; endpoints within a relative ``band`` count as boundary."""
    for end in (interval.lo, interval.hi):
        if math.isfinite(end) and abs(mean - end) <= band * max(1.0, abs(mean), abs(end)):
            return Classification.BOUNDARY_CASE
    if interval.in_interior(mean):
        return Classification.STRICTLY_SOLVABLE
    if interval.in_closure(mean):
        return Classification.BOUNDARY_CASE
    return Classification.UNSOLVABLE


def solvability_interval(spec: ProblemSpec) -> tuple[Interval, float, float]:
    lam1, lam2 = measures(spec.domain)
    iv = range_interval(spec.alpha1).scale(lam1) + range_interval(spec.alpha2).scale(lam2)
    return iv, lam1, lam2


def solvability(spec: ProblemSpec, band: float = BOUNDARY_BAND) -> SolvabilityVerdict:
    """Classify the data mean of a resonant problem against the solvability interval."""
    if spec.mode is not Mode.RESONANT:
        raise BadMode("solvability is defined for resonant problems")
    iv, lam1, lam2 = solvability_interval(spec)
    mean = integrate_pair(spec.domain, spec.f, spec.g)
    return SolvabilityVerdict(mean, iv, classify(mean, iv, band), lam1, lam2)


def _preimage(nf: NFunction, c: float) -> float:
    if c == 0.0:
        return 0.0
    return float(np.asarray(nf.alpha_inverse(c)))


def _inward(c, lo, hi):
    """Clip ``c`` to the open interval ``(lo, hi)``, keeping a small margin from finite ends."""
    width = hi - lo
    if math.isfinite(width):
        margin = NUDGE * width
    else:
        margin = NUDGE * (1.0 + abs(lo if math.isfinite(lo) else hi))
    if c <= lo:
        return lo + margin
    if c >= hi:
        return hi - margin
    return c


def split_mean(spec: ProblemSpec, verdict: SolvabilityVerdict | None = None):
    """Constants ``c_j`` in ``R(alpha_j)`` with ``lam1 c1 + lam2 c2 = mean`` and preimages ``d_j``.

    The proportional split ``c1 = c2 = mean / (lam1 + lam2)`` is used when it
    is interior to both ranges; otherwise ``c1`` is moved into the feasible
    segment.

    Returns
    -------
    (c1, c2, d1, d2)
    """
    verdict = verdict or solvability(spec)
    if verdict.classification is not Classification.STRICTLY_SOLVABLE:
        raise NotStrictlySolvable(f"mean {verdict.mean_total!r} is not interior to the solvability interval")
    m, lam1, lam2 = verdict.mean_total, verdict.lam1, verdict.lam2
    r1, r2 = range_interval(spec.alpha1), range_interval(spec.alpha2)
    if r1.is_degenerate:
        c1 = r1.lo
        c2 = (m - lam1 * c1) / lam2
    elif r2.is_degenerate:
        c2 = r2.lo
        c1 = (m - lam2 * c2) / lam1
    else:
        c = m / (lam1 + lam2)
        if r1.in_interior(c) and r2.in_interior(c):
            c1 = c2 = c
        else:
            # c1 must satisfy c1 in R1 and (m - lam1 c1) / lam2 in R2
            shifted = r2.scale(-lam2 / lam1)
            lo = max(r1.lo, m / lam1 + shifted.lo)
            hi = min(r1.hi, m / lam1 + shifted.hi)
            c1 = _inward(c, lo, hi)
            c2 = (m - lam1 * c1) / lam2
    return c1, c2, _preimage(spec.alpha1, c1), _preimage(spec.alpha2, c2)


def data_for_mean(spec: ProblemSpec, mean: float, share: float = 0.5) -> ProblemSpec:
    """Constant data with total mean ``mean``; a fraction ``share`` of it comes from ``f``."""
    lam1, lam2 = measures(spec.domain)
    return spec.with_data(f=share * mean / lam1, g=(1.0 - share) * mean / lam2)


def threshold_mean(interval: Interval, multiplier: float) -> float:
    """``center + multiplier * half_width``; an unbounded interval uses center 0 and half-width 1."""
    hw = interval.half_width
    if not math.isfinite(hw):
        return float(multiplier)
    return 0.5 * (interval.lo + interval.hi) + multiplier * hw


class SweepRow(NamedTuple):
    multiplier: float
    classification: str
    solver_verdict: str
    iterations: int
    u_inf: float


SWEEP_CSV_HEADER = SweepRow._fields


def threshold_sweep(spec: ProblemSpec, multipliers, tol: float = 1e-8, max_iter: int = 5000,
                    share: float = 0.5, workers: int = 1, options=None) -> list[SweepRow]:
    """Solvability verdict and resonant solve for each mean multiplier, in input order."""
    from .solver import solve_resonant

    iv, _, _ = solvability_interval(spec)

    def run(m):
        s = data_for_mean(spec, threshold_mean(iv, m), share)
        v = solvability(s)
        rep = solve_resonant(s, tol, max_iter, options=options)
        return SweepRow(float(m), v.classification.value, rep.verdict.value, rep.iterations,
                        float(np.max(np.abs(rep.iterate.values))))

    if workers <= 1:
        return [run(m) for m in multipliers]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, multipliers))
