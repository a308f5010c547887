# cython: language_level=3
"""Direct 2-D linear convolution of complex coefficient arrays."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def convolve2d(a, b):
    """Full linear convolution ``out[i+k, j+l] += a[i, j] * b[k, l]``.

    Parameters
    ----------
    a, b : ndarray of complex128, shape (p, q) and (r, s)

    Returns
    -------
    ndarray of complex128, shape (p + r - 1, q + s - 1)
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    cdef Py_ssize_t p = a.shape[0], q = a.shape[1]
    cdef Py_ssize_t r = b.shape[0], s = b.shape[1]
    out = np.zeros((p + r - 1, q + s - 1), dtype=np.complex128)
    # interleaved (re, im) views avoid the generic complex helpers
    cdef double[:, ::1] av = a.view(np.float64)
    cdef double[:, ::1] bv = b.view(np.float64)
    cdef double[:, ::1] ov = out.view(np.float64)
    cdef Py_ssize_t i, j, k, l, jo
    cdef double ar, ai, br, bi
    for i in range(p):
        for j in range(q):
            ar = av[i, 2 * j]
            ai = av[i, 2 * j + 1]
            if ar == 0.0 and ai == 0.0:
                continue
            for k in range(r):
                for l in range(s):
                    br = bv[k, 2 * l]
                    bi = bv[k, 2 * l + 1]
                    jo = 2 * (j + l)
                    ov[i + k, jo] += ar * br - ai * bi
                    ov[i + k, jo + 1] += ar * bi + ai * br
    return out
