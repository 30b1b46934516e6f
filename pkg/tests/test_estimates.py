import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wentzell.domain import FieldPair, build_interval, build_rectangle
from wentzell.errors import BadMode, BadParameter, DimensionMismatch, HypothesisViolation, SpecMismatch
from wentzell.estimates import (
    c_fit_bounded, calc_star_constant, calc_star_terms, check_hypotheses, classical_vanishing_level,
    delta_variants, empirical_vanishing_level, level_profile, level_set_norm, linf_stability_check,
    stability_sweep, stampacchia_levels, stampacchia_recursion, stampacchia_vanishing_level, truncate,
)
from wentzell.forms import Mode, ProblemSpec
from wentzell.orlicz import arctan, linear, power, zero


def pair(dom, values):
    return FieldPair.on(dom, np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# truncation

def test_truncate_examples(unit_square, rng):
    u = pair(unit_square, rng.normal(size=unit_square.n_nodes))
    v = pair(unit_square, rng.normal(size=unit_square.n_nodes))
    assert np.array_equal(truncate(u, v, 0.0).values, u.values - v.values)
    big = np.max(np.abs(u.values - v.values))
    assert np.all(truncate(u, v, big).values == 0)
    three = pair(unit_square, v.values + 3)
    assert np.allclose(truncate(three, v, 1.0).values, 2.0, atol=1e-14)
    assert np.allclose(truncate(v, three, 1.0).values, -2.0, atol=1e-14)


def test_truncate_errors(unit_square):
    u = FieldPair.constant(unit_square, 1.0)
    with pytest.raises(BadParameter):
        truncate(u, u, -1.0)
    with pytest.raises(DimensionMismatch):
        truncate(u, FieldPair.constant(build_rectangle(3, 3), 1.0), 0.0)
    with pytest.raises(DimensionMismatch):
        truncate(u.values, u, 0.0)


@settings(max_examples=100, deadline=None)
@given(k1=st.floats(0, 2), k2=st.floats(0, 2), seed=st.integers(0, 2**32 - 1))
def test_truncate_composition(k1, k2, seed):
    dom = build_interval(6)
    r = np.random.default_rng(seed)
    u, v = pair(dom, r.normal(size=7)), pair(dom, r.normal(size=7))
    w1 = truncate(u, v, k1)
    lhs = truncate(u, v, k1 + k2).values
    rhs = truncate(pair(dom, w1.values + v.values), v, k2).values
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-14)


# ---------------------------------------------------------------------------
# level profiles

def test_profile_equal_fields(unit_square):
    u = FieldPair.constant(unit_square, 0.7)
    prof = level_profile(u, u, unit_square, 2, 2, 5)
    assert prof.w_inf == 0
    assert prof.psi[0] > 0 and np.all(prof.psi[1:] == 0)


def test_profile_constant_difference(unit_square):
    v = FieldPair.constant(unit_square, 0.0)
    u = FieldPair.constant(unit_square, 1.0)
    prof = level_profile(u, v, unit_square, 2, 2, 11)
    assert prof.w_inf == 1.0
    assert np.allclose(prof.psi, 3.0, rtol=1e-12)
    assert level_set_norm(np.ones(unit_square.n_nodes, bool), unit_square, 2, 2) == pytest.approx(3.0)
    assert level_set_norm(np.zeros(unit_square.n_nodes, bool), unit_square, 2, 2) == 0.0


def test_profile_monotone(unit_square, rng):
    x, y = unit_square.nodes.T
    for _ in range(10):
        a, b, c = rng.normal(size=3)
        u = pair(unit_square, np.sin(a * x + b * y) + c * x * y)
        prof = level_profile(u, FieldPair.constant(unit_square, 0.0), unit_square, 3.0, 2.5, 40)
        assert np.all(np.diff(prof.psi) <= 0)
        assert prof.levels[-1] == prof.w_inf
        assert len(prof.rows()) == 40


def test_profile_errors(unit_square):
    u = FieldPair.constant(unit_square, 0.0)
    with pytest.raises(BadParameter):
        level_profile(u, u, unit_square, 2, 2, 1)
    with pytest.raises(DimensionMismatch):
        level_profile(u, u, build_rectangle(3, 3), 2, 2, 4)


# ---------------------------------------------------------------------------
# Stampacchia lemma

def test_stampacchia_examples():
    assert stampacchia_vanishing_level(1, 1, 1, 2) == 4.0
    assert stampacchia_vanishing_level(0, 1, 1, 2, k0=0.5) == 0.5
    assert classical_vanishing_level(1, 1, 1, 2) == 4.0
    assert stampacchia_vanishing_level(1, 1, 1, 3) == 64.0
    assert classical_vanishing_level(1, 1, 1, 3) == pytest.approx(2 ** 1.5)


def test_stampacchia_bad_parameters():
    for args in [(-1, 1, 1, 2), (1, 0, 1, 2), (1, 1, 0, 2), (1, 1, 1, 1), (1, 1, 1, 2, -1)]:
        with pytest.raises(BadParameter):
            stampacchia_vanishing_level(*args)


@pytest.mark.parametrize("psi0,c,alpha,delta", [(1, 1, 1, 2), (0.5, 2, 1.5, 1.5), (3, 0.2, 2, 3)])
def test_recursion_vanishes_by_formula_level(psi0, c, alpha, delta):
    k0 = 0.25
    level = stampacchia_vanishing_level(psi0, c, alpha, delta, k0)
    classical = classical_vanishing_level(psi0, c, alpha, delta, k0)
    d = max(level, classical) - k0
    levels, psi = stampacchia_recursion(psi0, c, alpha, delta, k0, d, 60)
    assert np.min(psi) < 1e-12
    assert levels[np.argmax(psi < 1e-12)] <= k0 + d
    emp = empirical_vanishing_level(psi0, c, alpha, delta, k0)
    assert k0 < emp <= k0 + d * (1 + 1e-9)


def test_recursion_overflow_is_inf():
    _, psi = stampacchia_recursion(10.0, 1.0, 1.0, 3.0, 0.0, 1e-3, 60)
    assert math.isinf(psi[-1])


def test_stampacchia_levels_logged(caplog):
    with caplog.at_level(logging.INFO, logger="wentzell.estimates"):
        out = stampacchia_levels(1, 1, 1, 2)
    assert out.formula == 4.0 and out.classical == 4.0
    assert 0 < out.empirical <= 4.0
    assert "vanishing levels" in caplog.text


def test_delta_variants(caplog):
    with caplog.at_level(logging.INFO, logger="wentzell.estimates"):
        printed, matched = delta_variants(6.0, 4.0, 2.0, 1.0)
    assert (printed, matched) == (2.0, 3.0)
    assert "delta" in caplog.text
    with pytest.raises(BadParameter):
        delta_variants(0.0, 1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# truncated monotonicity

def perturbed(dom, p, q, **kw):
    kw.setdefault("alpha1", power(1, 3))
    kw.setdefault("alpha2", linear(2.0))
    return ProblemSpec(dom, p=p, q=q, mode=Mode.PERTURBED, **kw)


def test_calc_star_constant_values(unit_square):
    assert calc_star_constant(perturbed(unit_square, 2, 2)) == pytest.approx(0.25)
    assert calc_star_constant(perturbed(unit_square, 3, 2, alpha2=zero())) == pytest.approx(0.5 * 0.25)
    assert calc_star_constant(perturbed(unit_square, 2, 2, alpha1=zero(), alpha2=zero())) == 1.0
    assert calc_star_constant(perturbed(unit_square, 2, 2, alpha1=arctan())) is None
    assert calc_star_constant(perturbed(unit_square, 1.5, 2)) is None


@pytest.mark.parametrize("p,q", [(2, 2), (3, 3), (4, 2.5)])
def test_calc_star_inequality(unit_square, rng, p, q):
    spec = perturbed(unit_square, p, q, alpha2=power(1, 2))
    kappa = calc_star_constant(spec)
    assert kappa > 0
    for _ in range(100):
        u = pair(unit_square, rng.normal(scale=rng.uniform(0.1, 3), size=unit_square.n_nodes))
        v = pair(unit_square, rng.normal(scale=rng.uniform(0.1, 3), size=unit_square.n_nodes))
        k = rng.uniform(0, 0.5) * np.max(np.abs(u.values - v.values))
        diff, self_term = calc_star_terms(u, v, k, spec)
        assert diff >= kappa * self_term - 1e-12 * (1 + abs(diff))


# ---------------------------------------------------------------------------
# hypotheses and stability

def test_hypotheses(unit_square, caplog):
    check_hypotheses(perturbed(unit_square, 2, 2), 1.5, 0.6)
    with pytest.raises(HypothesisViolation):
        check_hypotheses(perturbed(unit_square, 2, 2), 1.0, 0.6)
    with pytest.raises(HypothesisViolation):
        check_hypotheses(perturbed(unit_square, 2, 2), 1.5, 0.5)
    with pytest.raises(HypothesisViolation):
        check_hypotheses(perturbed(unit_square, 1.5, 2), 5, 5)
    # p != q uses the (N - 1)/(p - 1) threshold
    with pytest.raises(HypothesisViolation):
        check_hypotheses(perturbed(unit_square, 3, 2), 1.0, 0.49)
    check_hypotheses(perturbed(unit_square, 3, 2), 1.0, 0.51)
    with caplog.at_level(logging.INFO, logger="wentzell.estimates"):
        check_hypotheses(perturbed(unit_square, 3, 3), 1.0, 1.0)
    assert "p >= N" in caplog.text


def test_stability_identical_data(unit_square, rng):
    s = perturbed(unit_square, 3, 3, f=rng.uniform(-1, 1, unit_square.n_nodes))
    res = linf_stability_check(s, s.with_data(), 2, 2, tol=1e-8)
    assert res.converged and res.lhs <= (2e-8) ** 2
    assert res.c_fit == 0 and res.rhs_norms == (0.0, 0.0)


def test_stability_errors(unit_square):
    s = perturbed(unit_square, 2, 2)
    with pytest.raises(HypothesisViolation):
        linf_stability_check(s, s.with_data(f=1.0), 0.5, 2)
    with pytest.raises(SpecMismatch):
        linf_stability_check(s, perturbed(unit_square, 3, 2), 2, 2)
    r = ProblemSpec(unit_square)
    with pytest.raises(BadMode):
        linf_stability_check(r, r.with_data(f=1.0), 2, 2)


def test_stability_sweep_homogeneous_scaling(unit_square, rng):
    # zero base data: the difference obeys the exact 1/(p - 1) law, so C_fit is flat in eps
    s = perturbed(unit_square, 3, 3)
    df = rng.uniform(-1, 1, unit_square.n_nodes)
    rows = stability_sweep(s, df, 0.0, [1e-1, 1e-2, 1e-3], 2, 2, workers=2)
    fits = [r[4] for r in rows]
    assert [r[0] for r in rows] == [1e-1, 1e-2, 1e-3]
    assert max(fits) / min(fits) < 50
    assert c_fit_bounded(fits)
    a = linf_stability_check(s, s.with_data(f=1e-2 * df), 2, 2)
    b = linf_stability_check(s, s.with_data(f=2e-2 * df), 2, 2, workers=2)
    assert b.lhs / a.lhs <= 2 ** 1.2


def test_stability_sweep_nonzero_base_does_not_drift(unit_square, rng):
    s = perturbed(unit_square, 3, 3, f=rng.uniform(-1, 1, unit_square.n_nodes))
    df = rng.uniform(-1, 1, unit_square.n_nodes)
    rows = stability_sweep(s, df, 0.5, [1e-1, 1e-2, 1e-3], 2, 2)
    fits = [r[4] for r in rows]
    assert c_fit_bounded(fits)
    # away from zero the response is linear, so C_fit decreases with eps
    assert fits[0] > fits[1] > fits[2]


def test_c_fit_bounded():
    assert c_fit_bounded([1.0, 2.0, 3.0])
    assert not c_fit_bounded([1.0, 1.0, 1000.0])
    assert not c_fit_bounded([1.0, math.inf])
    assert not c_fit_bounded([])
