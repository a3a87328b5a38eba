# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled heat-bath sweeps for the multi-group mean-field model."""

from libc.math cimport exp


def heat_bath_sweeps(signed char[::1] spins, int[::1] group, long long[::1] margins,
                     double[:, ::1] K, double[::1] selfc, double[::1] uniforms,
                     long long n_sweeps, long long[:, ::1] out):
    """Run ``n_sweeps`` fixed-order sweeps in place; margins after each sweep go to ``out``.

    ``K[l, m] = J[l, m] / sqrt(N_l N_m)`` and ``selfc[l] = J[l, l] / N_l``;
    ``uniforms`` holds ``n_sweeps * len(spins)`` draws consumed in site order.
    """
    cdef Py_ssize_t n = spins.shape[0]
    cdef Py_ssize_t M = margins.shape[0]
    cdef Py_ssize_t t, i, mu, u_idx = 0
    cdef int lam
    cdef double h, p_up
    cdef signed char old, new
    if uniforms.shape[0] < n_sweeps * n or out.shape[0] < n_sweeps or out.shape[1] != M:
        raise ValueError("buffer sizes do not match n_sweeps")
    with nogil:
        for t in range(n_sweeps):
            for i in range(n):
                lam = group[i]
                h = 0.0
                for mu in range(M):
                    h = h + K[lam, mu] * <double>margins[mu]
                old = spins[i]
                h = h - selfc[lam] * <double>old
                p_up = 1.0 / (1.0 + exp(-2.0 * h))
                if uniforms[u_idx] < p_up:
                    new = 1
                else:
                    new = -1
                u_idx += 1
                if new != old:
                    margins[lam] += new - old
                    spins[i] = new
            for mu in range(M):
                out[t, mu] = margins[mu]
