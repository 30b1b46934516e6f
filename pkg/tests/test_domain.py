import io

import numpy as np
import pytest

from wentzell.domain import (
    FieldPair, build_interval, build_rectangle, dump_mesh, element_gradients, integrate_pair, load_mesh,
    measures, tangential_derivatives,
)
from wentzell.errors import BadParameter, DimensionMismatch, NonpositiveWeight


def test_interval_totals():
    dom = build_interval(4, 1.0)
    assert dom.dx_weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert dom.dsigma_weights.sum() == 2.0
    assert measures(dom) == pytest.approx((1.0, 2.0))


def test_interval_gradient_of_identity():
    dom = build_interval(5, 2.0)
    g = element_gradients(dom, dom.nodes[:, 0])
    assert np.allclose(g, 1.0, atol=1e-12)


def test_interval_has_no_tangential_operator():
    dom = build_interval(3)
    assert dom.tangential_grad_op.shape[0] == 0


@pytest.mark.parametrize("n", [1, 0])
def test_interval_rejects_too_few_cells(n):
    with pytest.raises(BadParameter):
        build_interval(n)


def test_square_totals():
    dom = build_rectangle(2, 2)
    assert dom.dx_weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert dom.dsigma_weights.sum() == pytest.approx(4.0, rel=1e-12)
    assert measures(dom) == pytest.approx((1.0, 4.0))


def test_square_b_scaling():
    assert measures(build_rectangle(3, 3, b=2.0))[1] == pytest.approx(2.0)
    assert measures(build_rectangle(3, 3, b=4.0)) == pytest.approx((1.0, 1.0))


def test_b_function_and_b0():
    dom = build_rectangle(4, 4, b=lambda x, y: 1 + x)
    assert dom.b0 == pytest.approx(1.0)
    assert np.all(dom.b_values >= dom.b0)
    with pytest.raises(NonpositiveWeight):
        build_rectangle(4, 4, b=lambda x, y: x - 0.5)


def test_affine_gradients_exact(rng):
    dom = build_rectangle(5, 3, lx=2.0, ly=0.7)
    a, b, c = rng.normal(size=3)
    u = a + b * dom.nodes[:, 0] + c * dom.nodes[:, 1]
    g = element_gradients(dom, u)
    assert np.allclose(g, [b, c], atol=1e-12)


def test_operators_annihilate_constants():
    dom = build_rectangle(4, 5)
    assert np.allclose(dom.grad_op @ np.ones(dom.n_nodes), 0.0)
    assert np.allclose(dom.tangential_grad_op @ np.ones(dom.n_boundary), 0.0)


def test_tangential_unit_slope_on_bottom_edge():
    dom = build_rectangle(6, 4)
    d = tangential_derivatives(dom, dom.boundary_coords[:, 0])
    bc = dom.boundary_coords
    seg = dom.segments
    bottom = (bc[seg[:, 0], 1] == 0) & (bc[seg[:, 1], 1] == 0)
    assert bottom.sum() == 6
    assert np.allclose(d[bottom], 1.0, atol=1e-12)


def test_boundary_is_counterclockwise():
    dom = build_rectangle(3, 3)
    p = dom.boundary_coords
    q = np.roll(p, -1, axis=0)
    signed_area = 0.5 * np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])
    assert signed_area == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 4, 16])
def test_measure_totals_independent_of_refinement(n):
    assert measures(build_rectangle(n, n + 1, lx=1.5, ly=0.5)) == pytest.approx((0.75, 4.0), rel=1e-12)


def test_integrate_pair_examples():
    dom = build_rectangle(4, 4)
    assert integrate_pair(dom, np.ones(dom.n_nodes), np.zeros(dom.n_boundary)) == pytest.approx(1.0)
    assert integrate_pair(dom, np.zeros(dom.n_nodes), np.ones(dom.n_boundary)) == pytest.approx(4.0)
    lam1, lam2 = measures(dom)
    g = np.full(dom.n_boundary, -lam1 / lam2)
    assert integrate_pair(dom, np.ones(dom.n_nodes), g) == pytest.approx(0.0, abs=1e-14)


def test_integrate_pair_dimension_mismatch():
    dom = build_rectangle(3, 3)
    with pytest.raises(DimensionMismatch):
        integrate_pair(dom, np.ones(3), np.ones(dom.n_boundary))


def test_fieldpair_trace_consistency():
    dom = build_rectangle(3, 2)
    u = FieldPair.on(dom, np.arange(dom.n_nodes, dtype=float))
    assert np.array_equal(u.trace, u.values[dom.boundary_nodes])
    v = FieldPair.from_parts(dom, u.values, u.trace)
    assert np.array_equal(v.values, u.values)
    with pytest.raises(DimensionMismatch):
        FieldPair.from_parts(dom, u.values, u.trace + 1)
    w = 2 * (u - FieldPair.constant(dom, 1.0))
    assert np.allclose(w.values, 2 * (u.values - 1))


def test_mesh_roundtrip():
    dom = build_rectangle(3, 4, lx=1.3, b=lambda x, y: 1 + x * y)
    buf = io.StringIO()
    dump_mesh(dom, buf)
    buf.seek(0)
    back = load_mesh(buf)
    for name in ("nodes", "elements", "boundary_nodes", "dx_weights", "dsigma_weights", "b_values",
                 "segments"):
        assert np.array_equal(getattr(back, name), getattr(dom, name)), name
    buf2 = io.StringIO()
    dump_mesh(back, buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_interval_roundtrip():
    dom = build_interval(5, b_left=2.0)
    buf = io.StringIO()
    dump_mesh(dom, buf)
    buf.seek(0)
    back = load_mesh(buf)
    assert measures(back) == measures(dom)


def test_build_is_deterministic():
    a, b = build_rectangle(7, 5), build_rectangle(7, 5)
    assert np.array_equal(a.dx_weights, b.dx_weights)
    assert (a.grad_op != b.grad_op).nnz == 0
