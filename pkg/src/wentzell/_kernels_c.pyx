# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element loop for the gradient-power energy term."""
from libc.math cimport pow


def gradient_power_term(const Py_ssize_t[:, ::1] conn, const double[:, :, ::1] sgrad,
                        const double[::1] measure, const double[::1] u, double p, double eps,
                        double[::1] grad, double[::1] diag=None):
    """Return ``sum_e measure_e / p |grad u|_e^p`` and accumulate its nodal gradient.

    ``grad`` (and ``diag``, the Hessian diagonal estimate, when given) are
    added to in place. ``eps > 0`` regularizes ``|g|^(p-2)`` as
    ``(eps^2 + |g|^2)^((p-2)/2)`` in the gradient only.
    """
    cdef Py_ssize_t m = conn.shape[0], nv = conn.shape[1], dim = sgrad.shape[2]
    cdef Py_ssize_t e, a, d, node
    cdef double g[3]
    cdef double s, w, coef, energy = 0.0, half_pm2 = 0.5 * (p - 2.0)
    cdef double sg2, dcoef
    cdef bint want_diag = diag is not None
    with nogil:
        for e in range(m):
            for d in range(dim):
                g[d] = 0.0
            for a in range(nv):
                node = conn[e, a]
                for d in range(dim):
                    g[d] += sgrad[e, a, d] * u[node]
            s = 0.0
            for d in range(dim):
                s += g[d] * g[d]
            if p == 2.0:
                w = 1.0
                energy += measure[e] * s
            elif s > 0.0:
                # s^(p/2) = s * s^((p-2)/2) saves a pow when unregularized
                w = pow(s, half_pm2)
                energy += measure[e] * s * w
                if eps > 0.0:
                    w = pow(eps * eps + s, half_pm2)
            elif eps > 0.0:
                w = pow(eps * eps, half_pm2)
            else:
                w = 0.0
            coef = measure[e] * w
            dcoef = coef * (p - 1.0)
            for a in range(nv):
                node = conn[e, a]
                sg2 = 0.0
                for d in range(dim):
                    grad[node] += coef * g[d] * sgrad[e, a, d]
                    sg2 += sgrad[e, a, d] * sgrad[e, a, d]
                if want_diag:
                    diag[node] += dcoef * sg2
    return energy / p
