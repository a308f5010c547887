"""Constant-density references written directly in coefficient space.

They share no code with the solver beyond the basis primitives: the
projection is the closed-form Helmholtz-Leray formula per mode, and the
nonlinear term is built from direct coefficient convolutions.
"""
import numpy as np

from anelastic.basis import SpectralField, differentiate, laplacian, multiply_project


def leray_projection(v, w):
    """Divergence-free part of ``(v, w)`` for unit density.

    Per mode the divergence is ``i pi k1 v + pi k2 w`` and the gradient of a
    cosine pressure is ``(i pi k1 q, -pi k2 q)``; subtracting the gradient
    of ``q = div / (-pi^2 |k|^2)`` removes the compressible part.
    """
    b = v.basis
    k1 = b.k1[:, None]
    k2 = b.k2[None, :].astype(float)
    div = 1j * np.pi * k1 * v.coeffs + np.pi * k2 * w.coeffs
    lam = -np.pi ** 2 * (k1 ** 2 + k2 ** 2)
    q = np.divide(div, lam, out=np.zeros_like(div), where=lam != 0)
    return (
        SpectralField(b, "cos", v.coeffs - 1j * np.pi * k1 * q),
        SpectralField(b, "sin", w.coeffs + np.pi * k2 * q),
    )


def _transport(v, w, m):
    vx, vz = differentiate(v, "x"), differentiate(v, "z")
    wx, wz = differentiate(w, "x"), differentiate(w, "z")
    nv = multiply_project(v, vx, m, "oracle") + multiply_project(w, vz, m, "oracle")
    nw = multiply_project(v, wx, m, "oracle") + multiply_project(w, wz, m, "oracle")
    return nv, nw


def incompressible_rhs(v, w):
    """``P_L (Lap u - (u . grad) u)`` with the closed-form projection."""
    nv, nw = _transport(v, w, v.m)
    return leray_projection(laplacian(v) - nv, laplacian(w) - nw)


def incompressible_rk4(v, w, T, dt):
    """Classical RK4 for the projection-form incompressible Galerkin system."""
    n = int(round(T / dt))
    for _ in range(n):
        k1 = incompressible_rhs(v, w)
        k2 = incompressible_rhs(v + 0.5 * dt * k1[0], w + 0.5 * dt * k1[1])
        k3 = incompressible_rhs(v + 0.5 * dt * k2[0], w + 0.5 * dt * k2[1])
        k4 = incompressible_rhs(v + dt * k3[0], w + dt * k3[1])
        v = v + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        w = w + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return v, w
