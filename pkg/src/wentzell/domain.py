"""Discrete domains: P1 meshes of an interval or a rectangle with lumped measures.

A :class:`DiscreteDomain` carries the interior measure ``dx`` and the boundary
measure ``dsigma`` as nodal (lumped) weights, the boundary weight ``b`` and
two sparse operators: the element gradient ``grad_op`` (nodal values to
per-element constant gradients) and the boundary tangential gradient
``tangential_grad_op`` (boundary nodal values to per-segment arclength
derivatives; an empty map in 1D, where the boundary is two points).

Mesh text format (``dump_mesh`` / ``load_mesh``), one record per line::

    # wentzell-mesh v1
    dim <N>
    nodes <n>
    <index> <x> [<y>] <dx_weight>
    elements <m>
    <index> <node0> <node1> [<node2>]
    boundary <nb>
    <index> <node> <dsigma_weight> <b>
    boundary_elements <nbe>
    <index> <bnode0> [<bnode1>]

Boundary element entries index into the boundary table (not the node table).
Floats are written with 17 significant digits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import BadParameter, DimensionMismatch, NonpositiveWeight


def _frozen(a, dtype=float):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    dim: int
    nodes: np.ndarray  # (n, dim); all mesh nodes, boundary included
    elements: np.ndarray  # (m, dim + 1)
    boundary_nodes: np.ndarray  # (nb,) indices into nodes, counterclockwise in 2D
    boundary_elements: np.ndarray  # (nbe, dim) indices into boundary_nodes
    dx_weights: np.ndarray  # (n,)
    dsigma_weights: np.ndarray  # (nb,)
    b_values: np.ndarray  # (nb,)
    b0: float
    element_measures: np.ndarray  # (m,)
    element_shape_grads: np.ndarray  # (m, dim + 1, dim)
    segment_lengths: np.ndarray  # (ns,) boundary segments carrying a tangential derivative
    segment_shape_grads: np.ndarray  # (ns, 2, 1)
    segments: np.ndarray  # (ns, 2) indices into boundary_nodes
    grad_op: sp.csr_matrix
    tangential_grad_op: sp.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_nodes.shape[0]

    @property
    def boundary_coords(self) -> np.ndarray:
        return self.nodes[self.boundary_nodes]

    @property
    def boundary_mass(self) -> np.ndarray:
        """``dsigma / b`` per boundary node."""
        return self.dsigma_weights / self.b_values

    @property
    def segment_conn(self) -> np.ndarray:
        """Boundary segments as node indices (for element-loop kernels)."""
        return self.boundary_nodes[self.segments]

    def node_mass(self, boundary_weights: np.ndarray | None = None) -> np.ndarray:
        """Lumped mass of the combined measure per node: ``dx`` plus boundary weight."""
        w = self.boundary_mass if boundary_weights is None else boundary_weights
        m = self.dx_weights.copy()
        np.add.at(m, self.boundary_nodes, w)
        return m


class FieldPair:
    """A nodal field ``U = (u, u|boundary)``.

    One array of nodal values is stored; the trace is a view through the
    domain's boundary index map, so trace consistency holds by construction.
    """

    __slots__ = ("values", "boundary_index")

    def __init__(self, values, boundary_index):
        self.values = np.asarray(values, dtype=float)
        self.boundary_index = np.asarray(boundary_index)

    @classmethod
    def on(cls, dom: DiscreteDomain, values) -> FieldPair:
        values = np.asarray(values, dtype=float)
        if values.shape != (dom.n_nodes,):
            raise DimensionMismatch(f"expected {dom.n_nodes} nodal values, got {values.shape}")
        return cls(values.copy(), dom.boundary_nodes)

    @classmethod
    def constant(cls, dom: DiscreteDomain, c: float) -> FieldPair:
        return cls(np.full(dom.n_nodes, float(c)), dom.boundary_nodes)

    @classmethod
    def from_parts(cls, dom: DiscreteDomain, interior, trace) -> FieldPair:
        u = cls.on(dom, interior)
        trace = np.asarray(trace, dtype=float)
        if trace.shape != (dom.n_boundary,):
            raise DimensionMismatch("trace length does not match the boundary")
        if not np.array_equal(u.trace, trace):
            raise DimensionMismatch("trace is not the restriction of the interior field")
        return u

    @property
    def interior(self) -> np.ndarray:
        return self.values

    @property
    def trace(self) -> np.ndarray:
        return self.values[self.boundary_index]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def _wrap(self, values):
        return FieldPair(values, self.boundary_index)

    def __add__(self, other):
        return self._wrap(self.values + np.asarray(other, dtype=float))

    def __sub__(self, other):
        return self._wrap(self.values - np.asarray(other, dtype=float))

    def __neg__(self):
        return self._wrap(-self.values)

    def __mul__(self, k):
        return self._wrap(self.values * k)

    __rmul__ = __mul__

    def __repr__(self):
        return f"FieldPair(n={self.values.size}, nb={self.boundary_index.size})"


# ---------------------------------------------------------------------------
# assembly helpers


def _shape_grads(nodes, elements):
    """Gradients of the P1 barycentric functions, and element measures."""
    dim = nodes.shape[1]
    x = nodes[elements]  # (m, dim+1, dim)
    jac = np.stack([x[:, k + 1] - x[:, 0] for k in range(dim)], axis=-1)  # (m, dim, dim)
    det = np.linalg.det(jac)
    if np.any(det == 0):
        raise BadParameter("degenerate element")
    jinv = np.linalg.inv(jac)
    grads = np.empty((elements.shape[0], dim + 1, dim))
    grads[:, 1:, :] = jinv
    grads[:, 0, :] = -jinv.sum(axis=1)
    fact = 1.0 if dim == 1 else 2.0
    return grads, np.abs(det) / fact


def _grad_matrix(elements, grads, n_cols):
    m, nv, dim = grads.shape
    rows = (np.arange(m)[:, None, None] * dim + np.arange(dim)[None, None, :]).repeat(nv, axis=1)
    cols = np.broadcast_to(elements[:, :, None], grads.shape)
    mat = sp.coo_matrix((grads.ravel(), (rows.ravel(), cols.ravel())), shape=(m * dim, n_cols))
    return mat.tocsr()


def _lumped(elements, measures, n):
    nv = elements.shape[1]
    w = np.zeros(n)
    np.add.at(w, elements.ravel(), np.repeat(measures / nv, nv))
    return w


def _assemble(nodes, elements, boundary_nodes, boundary_elements, b_values,
              dx_weights=None, dsigma_weights=None) -> DiscreteDomain:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    dim = nodes.shape[1]
    if dim not in (1, 2):
        raise BadParameter("only 1D and 2D domains are supported")
    elements = np.asarray(elements, dtype=np.intp)
    boundary_nodes = np.asarray(boundary_nodes, dtype=np.intp)
    boundary_elements = np.asarray(boundary_elements, dtype=np.intp).reshape(-1, dim)
    b_values = np.asarray(b_values, dtype=float)
    if b_values.shape != boundary_nodes.shape:
        raise DimensionMismatch("one b value per boundary node is required")
    if np.any(~(b_values > 0)):
        raise NonpositiveWeight("boundary weight b must be positive")

    grads, measures = _shape_grads(nodes, elements)
    if dx_weights is None:
        dx_weights = _lumped(elements, measures, nodes.shape[0])

    nb = boundary_nodes.shape[0]
    if dim == 2:
        segments = boundary_elements
        xb = nodes[boundary_nodes]
        seg_len = np.linalg.norm(xb[segments[:, 1]] - xb[segments[:, 0]], axis=1)
        if np.any(seg_len == 0):
            raise BadParameter("zero-length boundary segment")
        seg_grads = np.stack([-1.0 / seg_len, 1.0 / seg_len], axis=1)[:, :, None]
        if dsigma_weights is None:
            dsigma_weights = _lumped(segments, seg_len, nb)
        tang = _grad_matrix(segments, seg_grads, nb)
    else:
        segments = np.zeros((0, 2), dtype=np.intp)
        seg_len = np.zeros(0)
        seg_grads = np.zeros((0, 2, 1))
        if dsigma_weights is None:
            dsigma_weights = np.ones(nb)  # unit atoms at the two endpoints
        tang = sp.csr_matrix((0, nb))

    return DiscreteDomain(
        dim=dim,
        nodes=_frozen(nodes),
        elements=_frozen(elements, np.intp),
        boundary_nodes=_frozen(boundary_nodes, np.intp),
        boundary_elements=_frozen(boundary_elements, np.intp),
        dx_weights=_frozen(dx_weights),
        dsigma_weights=_frozen(dsigma_weights),
        b_values=_frozen(b_values),
        b0=float(b_values.min()),
        element_measures=_frozen(measures),
        element_shape_grads=_frozen(grads),
        segment_lengths=_frozen(seg_len),
        segment_shape_grads=_frozen(seg_grads),
        segments=_frozen(segments, np.intp),
        grad_op=_grad_matrix(elements, grads, nodes.shape[0]),
        tangential_grad_op=tang,
    )


# ---------------------------------------------------------------------------
# builders


def build_interval(n_cells: int, length: float = 1.0, b_left: float = 1.0,
                   b_right: float = 1.0) -> DiscreteDomain:
    """Uniform mesh of ``(0, length)``; the boundary is two unit atoms."""
    if int(n_cells) != n_cells or n_cells < 2:
        raise BadParameter("n_cells must be an integer >= 2")
    if not length > 0:
        raise BadParameter("length must be positive")
    if not (b_left > 0 and b_right > 0):
        raise BadParameter("b must be positive at both endpoints")
    n_cells = int(n_cells)
    x = np.linspace(0.0, length, n_cells + 1)
    elements = np.stack([np.arange(n_cells), np.arange(1, n_cells + 1)], axis=1)
    return _assemble(x, elements, [0, n_cells], [[0], [1]], [b_left, b_right])


def build_rectangle(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0,
                    b: float | Callable[[np.ndarray, np.ndarray], np.ndarray] = 1.0) -> DiscreteDomain:
    """Structured right-triangle mesh of ``(0, lx) x (0, ly)``.

    Each cell is split along its ``(i, j) -> (i+1, j+1)`` diagonal. The
    boundary is ordered counterclockwise from the origin and closed
    periodically. ``b`` is a positive constant or a function ``b(x, y)``
    evaluated at boundary nodes.
    """
    for v in (nx, ny):
        if int(v) != v or v < 2:
            raise BadParameter("nx and ny must be integers >= 2")
    if not (lx > 0 and ly > 0):
        raise BadParameter("lx and ly must be positive")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.ravel(), j.ravel()
    n00, n10, n11, n01 = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)

    bottom = [idx(k, 0) for k in range(nx)]
    right = [idx(nx, k) for k in range(ny)]
    top = [idx(k, ny) for k in range(nx, 0, -1)]
    left = [idx(0, k) for k in range(ny, 0, -1)]
    boundary = np.array(bottom + right + top + left, dtype=np.intp)
    nb = boundary.size
    segments = np.column_stack([np.arange(nb), (np.arange(nb) + 1) % nb])

    xb, yb = nodes[boundary, 0], nodes[boundary, 1]
    if callable(b):
        b_values = np.asarray(b(xb, yb), dtype=float) * np.ones(nb)
    else:
        b_values = np.full(nb, float(b))
    if np.any(~(b_values > 0)):
        raise NonpositiveWeight("boundary weight b must be positive")
    return _assemble(nodes, elements, boundary, segments, b_values)


# ---------------------------------------------------------------------------
# measures and integrals


def measures(dom: DiscreteDomain) -> tuple[float, float]:
    """``(lambda1, lambda2) = (|Omega|, int_boundary dsigma / b)``."""
    return float(np.sum(dom.dx_weights)), float(np.sum(dom.boundary_mass))


def integrate_pair(dom: DiscreteDomain, f, g, boundary_weights: np.ndarray | None = None) -> float:
    """``int f dx + int g dsigma / b`` with lumped quadrature.

    ``boundary_weights`` overrides ``dsigma / b`` (e.g. plain ``dsigma``).
    """
    f = np.broadcast_to(np.asarray(f, dtype=float), np.shape(f))
    g = np.asarray(g, dtype=float)
    if f.shape != (dom.n_nodes,):
        raise DimensionMismatch(f"f has shape {f.shape}, expected ({dom.n_nodes},)")
    if g.shape != (dom.n_boundary,):
        raise DimensionMismatch(f"g has shape {g.shape}, expected ({dom.n_boundary},)")
    w = dom.boundary_mass if boundary_weights is None else boundary_weights
    return float(np.sum(dom.dx_weights * f) + np.sum(w * g))


def element_gradients(dom: DiscreteDomain, u) -> np.ndarray:
    """Per-element gradients of a nodal field, shape ``(m, dim)``."""
    return (dom.grad_op @ np.asarray(u, dtype=float)).reshape(-1, dom.dim)


def tangential_derivatives(dom: DiscreteDomain, trace) -> np.ndarray:
    """Per-segment arclength derivatives of a boundary trace."""
    return dom.tangential_grad_op @ np.asarray(trace, dtype=float)


# ---------------------------------------------------------------------------
# text format


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dump_mesh(dom: DiscreteDomain, fh) -> None:
    """Write ``dom`` in the plain-text format described in the module docstring."""
    w = fh.write
    w("# wentzell-mesh v1\n")
    w(f"dim {dom.dim}\n")
    w(f"nodes {dom.n_nodes}\n")
    for k, (x, wt) in enumerate(zip(dom.nodes, dom.dx_weights)):
        w(" ".join([str(k), *map(_fmt, x), _fmt(wt)]) + "\n")
    w(f"elements {dom.elements.shape[0]}\n")
    for k, e in enumerate(dom.elements):
        w(" ".join([str(k), *map(str, e)]) + "\n")
    w(f"boundary {dom.n_boundary}\n")
    for k, (node, ds, bv) in enumerate(zip(dom.boundary_nodes, dom.dsigma_weights, dom.b_values)):
        w(f"{k} {node} {_fmt(ds)} {_fmt(bv)}\n")
    w(f"boundary_elements {dom.boundary_elements.shape[0]}\n")
    for k, be in enumerate(dom.boundary_elements):
        w(" ".join([str(k), *map(str, be)]) + "\n")


def load_mesh(fh) -> DiscreteDomain:
    """Read a mesh written by :func:`dump_mesh`."""
    lines = [ln.split() for ln in fh.read().splitlines() if ln.strip() and not ln.startswith("#")]
    pos = 0

    def header(name):
        nonlocal pos
        if pos >= len(lines) or lines[pos][0] != name:
            raise BadParameter(f"mesh file: expected '{name}' section")
        val = int(lines[pos][1])
        pos += 1
        return val

    def block(count):
        nonlocal pos
        rows = lines[pos:pos + count]
        if len(rows) != count:
            raise BadParameter("mesh file: truncated table")
        pos += count
        return [r[1:] for r in rows]

    dim = header("dim")
    nodes = np.array(block(header("nodes")), dtype=float)
    elements = np.array(block(header("elements")), dtype=np.intp)
    bnd = np.array(block(header("boundary")), dtype=float)
    belems = np.array(block(header("boundary_elements")), dtype=np.intp).reshape(-1, dim)
    return _assemble(
        nodes[:, :dim], elements, bnd[:, 0].astype(np.intp), belems, bnd[:, 2],
        dx_weights=nodes[:, dim], dsigma_weights=bnd[:, 1],
    )
