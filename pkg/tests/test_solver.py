import numpy as np
import pytest

from oracles import CUBIC_ROOT, cubic_energy_1d, grid_search
from wentzell.domain import build_interval, build_rectangle, integrate_pair
from wentzell.errors import BadMode, BadParameter, NonFiniteEnergy, SpecMismatch
from wentzell.forms import Mode, ProblemSpec, energy, form_A, pairing
from wentzell.orlicz import arctan, linear, power
from wentzell.solver import (
    SolverOptions, Verdict, continuous_dependence, minimize, solve_perturbed, solve_resonant,
)

TOL = 1e-8


def assert_monotone_trace(rep):
    e = np.array([t.energy for t in rep.trace])
    assert np.all(np.diff(e) <= 1e-12 * (1 + np.abs(e[:-1])))


def perturbed(dom, rng=None, p=2.0, q=2.0, **kw):
    if rng is not None:
        kw.setdefault("f", rng.uniform(-1, 1, dom.n_nodes))
        kw.setdefault("g", rng.uniform(-1, 1, dom.n_boundary))
    kw.setdefault("alpha1", power(1, 3))
    kw.setdefault("alpha2", arctan())
    return ProblemSpec(dom, p=p, q=q, mode=Mode.PERTURBED, **kw)


# ---------------------------------------------------------------------------
# perturbed problem

def test_zero_data_gives_zero(unit_square):
    rep = solve_perturbed(perturbed(unit_square))
    assert rep.verdict is Verdict.CONVERGED and rep.iterations == 0
    assert np.all(rep.solution.values == 0)


def test_matches_grid_oracle():
    dom = build_interval(4)
    s = ProblemSpec(dom, p=2, q=2, rho=0, mode=Mode.PERTURBED, alpha1=power(1, 3), f=1.0)
    rep = solve_perturbed(s, TOL)
    assert rep.converged
    oracle, spacing = grid_search(cubic_energy_1d, np.full(5, 0.5), 1.0)
    assert spacing < 1e-5
    assert np.max(np.abs(rep.solution.values - oracle)) <= 1e-4
    assert np.max(np.abs(rep.solution.values - CUBIC_ROOT)) <= 1e-7
    # the library energy agrees with the hand-written one
    u = np.random.default_rng(3).normal(size=5)
    assert energy(u, s) == pytest.approx(cubic_energy_1d(u), rel=1e-13)


def test_sign_symmetry(unit_square, rng):
    s = perturbed(unit_square, rng, p=3, q=2.5)
    a = solve_perturbed(s)
    b = solve_perturbed(s.with_data(f=-s.f, g=-s.g))
    assert a.converged and b.converged
    assert np.max(np.abs(a.solution.values + b.solution.values)) <= 1e-7


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_trace_monotone_and_residual(unit_square, rng, p):
    rep = solve_perturbed(perturbed(unit_square, rng, p=p, q=p))
    assert rep.converged and rep.final_residual_inf <= TOL
    assert_monotone_trace(rep)


def test_uniqueness_from_random_starts(unit_square, rng):
    s = perturbed(unit_square, rng, p=3, q=3)
    a = solve_perturbed(s, initial=rng.normal(size=unit_square.n_nodes) * 5)
    b = solve_perturbed(s, initial=rng.normal(size=unit_square.n_nodes) * 5)
    assert a.converged and b.converged
    assert np.max(np.abs(a.solution.values - b.solution.values)) <= 10 * TOL


def test_residual_form_equivalence(unit_square, rng):
    s = perturbed(unit_square, rng, p=2.5, q=3)
    rep = solve_perturbed(s)
    mass = s.node_mass
    for _ in range(20):
        v = rng.normal(size=unit_square.n_nodes)
        assert abs(form_A(rep.solution, v, s) - pairing(s, v)) <= TOL * (mass @ np.abs(v))


def test_perturbed_errors(unit_square):
    with pytest.raises(BadMode):
        solve_perturbed(ProblemSpec(unit_square))
    bad = perturbed(unit_square, f=np.full(unit_square.n_nodes, np.nan))
    with pytest.raises(NonFiniteEnergy):
        solve_perturbed(bad)
    with pytest.raises(BadParameter):
        SolverOptions(tol=0)


def test_max_iterations_verdict(unit_square, rng):
    rep = solve_perturbed(perturbed(unit_square, rng), max_iter=3)
    assert rep.verdict is Verdict.MAX_ITERATIONS and rep.solution is None
    assert rep.iterate is not None and rep.iterations == 3


def test_nonfinite_start_diverges(unit_square):
    s = perturbed(unit_square)
    with np.errstate(over="ignore", invalid="ignore"):
        rep = minimize(s, np.full(unit_square.n_nodes, 1e200))
    assert rep.verdict is Verdict.DIVERGED


# ---------------------------------------------------------------------------
# resonant problem

def test_resonant_zero_data(unit_square):
    rep = solve_resonant(ProblemSpec(unit_square, alpha1=arctan()))
    assert rep.converged and np.all(rep.solution.values == 0)


@pytest.mark.parametrize("alpha2", [None, linear(1.0)], ids=["alpha2_zero", "alpha2_linear"])
def test_universal_solvability(unit_square, rng, alpha2):
    kw = {"alpha2": alpha2} if alpha2 is not None else {}
    for _ in range(5):
        s = ProblemSpec(unit_square, alpha1=power(1, 2), f=rng.uniform(-3, 3, unit_square.n_nodes),
                        g=rng.uniform(-3, 3, unit_square.n_boundary), **kw)
        rep = solve_resonant(s)
        assert rep.converged
        assert_monotone_trace(rep)
        compat = form_A(rep.solution, np.ones(unit_square.n_nodes), s) - integrate_pair(unit_square, s.f, s.g)
        assert abs(compat) <= 10 * TOL


def test_arctan_beyond_threshold_diverges(unit_square):
    s = ProblemSpec(unit_square, alpha1=arctan(), f=1.2 * np.pi / 2)
    rep = solve_resonant(s)
    assert rep.verdict is Verdict.DIVERGED
    norms = [np.max(np.abs(solve_resonant(s, max_iter=k).iterate.values)) for k in (5, 10, 20, 40)]
    assert np.all(np.diff(norms) > 0)


def test_boundary_case_reported_as_max_iterations(unit_square):
    s = ProblemSpec(unit_square, alpha1=arctan(), f=np.pi / 2)
    rep = solve_resonant(s, max_iter=200)
    assert rep.verdict is Verdict.MAX_ITERATIONS and "boundary" in rep.note


def test_resonant_bad_mode(unit_square):
    with pytest.raises(BadMode):
        solve_resonant(perturbed(unit_square))


def test_resonant_general_b(rng):
    dom = build_rectangle(8, 8, b=lambda x, y: 1 + x)
    s = ProblemSpec(dom, p=3, q=2.5, alpha1=arctan(), alpha2=power(1, 2),
                    f=rng.uniform(-1, 1, dom.n_nodes), g=rng.uniform(-1, 1, dom.n_boundary))
    rep = solve_resonant(s)
    assert rep.converged
    compat = form_A(rep.solution, np.ones(dom.n_nodes), s) - integrate_pair(dom, s.f, s.g)
    assert abs(compat) <= 10 * TOL


# ---------------------------------------------------------------------------
# continuous dependence

def test_identical_data(unit_square, rng):
    s = perturbed(unit_square, rng)
    du, (df, dg) = continuous_dependence(s, s.with_data(), TOL)
    assert du <= 2 * TOL and df == 0 and dg == 0


def test_dependence_decreases_and_scales(unit_square, rng):
    s = perturbed(unit_square, rng, p=3, q=3)
    eps = [1e-2, 1e-3, 1e-4]
    res = [continuous_dependence(s, s.with_data(f=s.f + e), TOL) for e in eps]
    du = np.array([r[0] for r in res])
    dF = np.array([r[1][0] + r[1][1] for r in res])
    assert np.all(np.diff(du) < 0)
    k = du[0] / dF[0] ** (1 / (s.p - 1))
    assert np.all(du[1:] <= k * dF[1:] ** (1 / (s.p - 1)) * (1 + 1e-6))


def test_spec_mismatch(unit_square, rng):
    s = perturbed(unit_square, rng)
    with pytest.raises(SpecMismatch):
        continuous_dependence(s, perturbed(unit_square, rng, p=3), TOL)
    with pytest.raises(SpecMismatch):
        continuous_dependence(s, perturbed(build_rectangle(8, 8), rng), TOL)
