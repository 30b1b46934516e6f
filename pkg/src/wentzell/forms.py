"""Discrete energies, their gradients, and the weak form.

For a nodal field ``u`` on a :class:`~wentzell.domain.DiscreteDomain` the
energy is ::

    (1/p) int |grad u|^p dx + (rho/q) int |grad_T u|^q dsigma
      + int lam1(u) dx + int lam2(u) dsigma/b - int f u dx - int g u dsigma/b

with, in perturbed mode, the extra terms ``(1/p) int |u|^p dx +
(rho/q) int |u|^q dsigma`` (and ``b = 1``). Gradient terms are integrated
exactly per element; everything else uses nodal (lumped) quadrature.

``form_A(U, V)`` is the weak form without data; its nodal representation is
:func:`operator`, and ``energy_gradient = operator - load``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .domain import DiscreteDomain, FieldPair
from .errors import BadParameter, DimensionMismatch
from .orlicz import NFunction, zero

REG_EPS = 1e-10


class Mode(str, enum.Enum):
    RESONANT = "resonant"
    PERTURBED = "perturbed"


def bw_constant(p: float) -> float:
    """Tabulated ``c_p = 2^(2-p)`` with ``(|a|^(p-2)a - |b|^(p-2)b).(a-b) >= c_p |a-b|^p``, ``p >= 2``."""
    if p < 2:
        raise BadParameter("the lower bound c_p is only available for p >= 2")
    return 2.0 ** (2.0 - p)


def _data_vector(x, n, what):
    if x is None:
        return np.zeros(n)
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise DimensionMismatch(f"{what} has shape {arr.shape}, expected ({n},)")
    return arr.copy()


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Problem data: exponents, mode, nonlinearities, right-hand sides and mesh.

    ``f`` lives on all mesh nodes, ``g`` on boundary nodes; scalars are
    broadcast. ``beta1``/``beta2`` optionally weight the nonlinearities
    pointwise (``alpha_j(x, u) = beta_j(x) alpha_j(u)``).
    """

    domain: DiscreteDomain
    p: float = 2.0
    q: float = 2.0
    rho: int = 1
    mode: Mode = Mode.RESONANT
    alpha1: NFunction = field(default_factory=zero)
    alpha2: NFunction = field(default_factory=zero)
    f: np.ndarray | float | None = None
    g: np.ndarray | float | None = None
    beta1: np.ndarray | None = None
    beta2: np.ndarray | None = None

    def __post_init__(self):
        if not (self.p > 1 and self.q > 1):
            raise BadParameter("p and q must exceed 1")
        if self.rho not in (0, 1):
            raise BadParameter("rho must be 0 or 1")
        object.__setattr__(self, "mode", Mode(self.mode))
        dom = self.domain
        object.__setattr__(self, "f", _data_vector(self.f, dom.n_nodes, "f"))
        object.__setattr__(self, "g", _data_vector(self.g, dom.n_boundary, "g"))
        for name, n in (("beta1", dom.n_nodes), ("beta2", dom.n_boundary)):
            beta = getattr(self, name)
            if beta is not None:
                beta = _data_vector(beta, n, name)
                if np.any(~(beta > 0)):
                    raise BadParameter(f"{name} must be positive")
                object.__setattr__(self, name, beta)
        if self.mode is Mode.PERTURBED and not np.all(dom.b_values == 1.0):
            raise BadParameter("perturbed mode requires b = 1 on the boundary")

    @property
    def boundary_weights(self) -> np.ndarray:
        """Weights of the boundary pairing: ``dsigma / b`` (``dsigma`` when b = 1)."""
        return self.domain.boundary_mass

    @property
    def node_mass(self) -> np.ndarray:
        return self.domain.node_mass(self.boundary_weights)

    def with_data(self, f=None, g=None) -> ProblemSpec:
        return replace(self, f=self.f if f is None else f, g=self.g if g is None else g)


def _nodal(U, spec: ProblemSpec) -> np.ndarray:
    u = U.values if isinstance(U, FieldPair) else np.asarray(U, dtype=float)
    if u.shape != (spec.domain.n_nodes,):
        raise DimensionMismatch(f"field has shape {u.shape}, expected ({spec.domain.n_nodes},)")
    return u


def _signed_power(u, r):
    return np.sign(u) * np.abs(u) ** (r - 1.0)


def _operator(u: np.ndarray, spec: ProblemSpec, regularize: bool, want_diag: bool = False):
    """Data-free energy part, its nodal gradient, and optionally a Hessian-diagonal estimate."""
    dom = spec.domain
    p, q = spec.p, spec.q
    grad = np.zeros(dom.n_nodes)
    diag = np.zeros(dom.n_nodes) if want_diag else None
    eps_p = REG_EPS if (regularize and p < 2) else 0.0
    energy = kernels.gradient_power_term(dom.elements, dom.element_shape_grads, dom.element_measures,
                                         u, p, eps_p, grad, diag)
    if spec.rho and dom.segments.shape[0]:
        eps_q = REG_EPS if (regularize and q < 2) else 0.0
        energy += kernels.gradient_power_term(dom.segment_conn, dom.segment_shape_grads, dom.segment_lengths,
                                              u, q, eps_q, grad, diag)

    bn = dom.boundary_nodes
    ub = u[bn]
    w1 = dom.dx_weights if spec.beta1 is None else dom.dx_weights * spec.beta1
    w2 = spec.boundary_weights if spec.beta2 is None else spec.boundary_weights * spec.beta2
    energy += float(np.sum(w1 * spec.alpha1.lam(u)) + np.sum(w2 * spec.alpha2.lam(ub)))
    grad += w1 * spec.alpha1.alpha(u)
    grad[bn] += w2 * spec.alpha2.alpha(ub)

    if spec.mode is Mode.PERTURBED:
        dx = dom.dx_weights
        energy += float(np.sum(dx * np.abs(u) ** p)) / p
        grad += dx * _signed_power(u, p)
        if want_diag:
            diag += (p - 1.0) * dx * (REG_EPS ** 2 + u * u) ** (0.5 * (p - 2.0))
        if spec.rho:
            ds = dom.dsigma_weights
            energy += float(np.sum(ds * np.abs(ub) ** q)) / q
            grad[bn] += ds * _signed_power(ub, q)
            if want_diag:
                diag[bn] += (q - 1.0) * ds * (REG_EPS ** 2 + ub * ub) ** (0.5 * (q - 2.0))
    return energy, grad, diag


def load_vector(spec: ProblemSpec) -> np.ndarray:
    """Nodal representation of ``<F, .> = int f v dx + int g v dsigma/b``."""
    dom = spec.domain
    rhs = dom.dx_weights * spec.f
    rhs[dom.boundary_nodes] += spec.boundary_weights * spec.g
    return rhs


def pairing(spec: ProblemSpec, V) -> float:
    """``<F, V>`` for the data of ``spec``."""
    return float(load_vector(spec) @ _nodal(V, spec))


def energy_and_gradient(u: np.ndarray, spec: ProblemSpec, want_diag: bool = False):
    """Fused evaluation used by the solver: ``(energy, nodal gradient, diagonal or None)``.

    The energy is exact; the gradient carries the p < 2 regularization.
    """
    rhs = load_vector(spec)
    e_op, grad, diag = _operator(u, spec, regularize=True, want_diag=want_diag)
    return e_op - float(rhs @ u), grad - rhs, diag


def energy(U, spec: ProblemSpec) -> float:
    """Total discrete energy of ``U``."""
    u = _nodal(U, spec)
    e_op, _, _ = _operator(u, spec, regularize=False)
    return e_op - float(load_vector(spec) @ u)


def energy_gradient(U, spec: ProblemSpec) -> FieldPair:
    """Nodal gradient of :func:`energy`, i.e. the weak residual ``A(U, phi_i) - <F, phi_i>``."""
    u = _nodal(U, spec)
    _, grad, _ = energy_and_gradient(u, spec)
    return FieldPair(grad, spec.domain.boundary_nodes)


def operator(U, spec: ProblemSpec) -> np.ndarray:
    """Nodal vector ``A(U, phi_i)`` (unregularized, no data)."""
    return _operator(_nodal(U, spec), spec, regularize=False)[1]


def form_A(U, V, spec: ProblemSpec) -> float:
    """The weak form ``A(U, V)``, nonlinear in ``U`` and linear in ``V``."""
    return float(operator(U, spec) @ _nodal(V, spec))


def monotonicity_gap(U, V, spec: ProblemSpec) -> float:
    """``A(U, U - V) - A(V, U - V)``; nonnegative for a monotone form."""
    u, v = _nodal(U, spec), _nodal(V, spec)
    return float((operator(u, spec) - operator(v, spec)) @ (u - v))


def residual_inf(grad: np.ndarray, spec: ProblemSpec) -> float:
    """Max-norm of the nodal gradient scaled by the inverse lumped mass."""
    return float(np.max(np.abs(grad) / spec.node_mass))
