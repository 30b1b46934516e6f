"""Numpy implementation of the element-loop kernels (fallback for the compiled core)."""
import numpy as np


def gradient_power_term(conn, sgrad, measure, u, p, eps, grad, diag=None):
    """Return ``sum_e measure_e / p |grad u|_e^p`` and accumulate its nodal gradient.

    Same contract as the compiled kernel: ``grad`` and ``diag`` are updated
    in place.
    """
    n = grad.shape[0]
    g = np.einsum("ea,ead->ed", u[conn], sgrad)
    s = np.einsum("ed,ed->e", g, g)
    energy = float(np.sum(measure * s ** (0.5 * p))) / p
    with np.errstate(divide="ignore", invalid="ignore"):
        if eps > 0.0:
            w = (eps * eps + s) ** (0.5 * (p - 2.0))
        else:
            w = np.where(s > 0.0, s ** (0.5 * (p - 2.0)), 1.0 if p == 2.0 else 0.0)
    coef = measure * w
    contrib = np.einsum("ed,ead->ea", coef[:, None] * g, sgrad)
    grad += np.bincount(conn.ravel(), weights=contrib.ravel(), minlength=n)
    if diag is not None:
        sg2 = np.einsum("ead,ead->ea", sgrad, sgrad)
        diag += np.bincount(conn.ravel(), weights=((p - 1.0) * coef[:, None] * sg2).ravel(), minlength=n)
    return energy
