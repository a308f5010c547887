"""Numpy fallback for :mod:`anelastic._convolve`."""
import numpy as np


def convolve2d(a, b):
    """Full linear convolution ``out[i+k, j+l] += a[i, j] * b[k, l]``.

    Loop order matches the compiled kernel; the two agree to rounding
    (the compiled build may contract multiply-adds).
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    p, q = a.shape
    r, s = b.shape
    out = np.zeros((p + r - 1, q + s - 1), dtype=np.complex128)
    for i in range(p):
        for j in range(q):
            aij = a[i, j]
            if aij == 0:
                continue
            out[i:i + r, j:j + s] += aij * b
    return out
