# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled shot-sampling kernel; mirrors ``_kernels_py.sample_masks``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _pick(const double[:] cdf, double u) nogil:
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t last = cdf.shape[0] - 1
    while i < last and cdf[i] <= u:
        i += 1
    return i


def sample_masks(const double[:] outcome_cdf, const cnp.int64_t[:] n_phi,
                 const cnp.int64_t[:] n_perp, const double[:] phi_cdf,
                 const double[:] perp_cdf, const double[:, :] uniforms):
    cdef Py_ssize_t shots = uniforms.shape[0]
    cdef Py_ssize_t width = uniforms.shape[1]
    cdef cnp.int64_t[:] hist = np.zeros(32, dtype=np.int64)
    cdef Py_ssize_t s, j, o, d
    cdef long a, b, mask
    with nogil:
        for s in range(shots):
            o = _pick(outcome_cdf, uniforms[s, 0])
            a = n_phi[o]
            b = n_perp[o]
            mask = 0
            for j in range(a + b):
                if j + 1 >= width:
                    break
                if j < a:
                    d = _pick(phi_cdf, uniforms[s, 1 + j])
                    if d < 3:
                        mask |= 1 << d
                else:
                    d = _pick(perp_cdf, uniforms[s, 1 + j])
                    if d < 2:
                        mask |= 1 << (3 + d)
            hist[mask] += 1
    return np.asarray(hist)
