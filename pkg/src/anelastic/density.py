"""Degenerate density ``(z + eps)**alpha`` and its symmetric-periodic extension.

On the torus the profile is ``rho(z) = (s(z) + eps)**alpha`` where ``s`` is
the 2-periodic triangle wave ``|z|`` (delta = 0) or a smoothed version of
it (delta > 0). The smoothed wave is the triangle wave convolved with a
periodic Gaussian of width ``delta`` and affinely rescaled so that
``s(0) = 0`` and ``s(+-1) = 1``. It is even, C-infinity, and monotone on
[0, 1], so the lower bound ``inf rho = eps**alpha`` holds for every delta
(the constant in the positivity bound is zero).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import GridSampling, SpectralField, differentiate, make_basis, synthesize
from .quadrature import graded_rule


@dataclass(frozen=True)
class DensityProfile:
    """Parameters of the extended density.

    Attributes
    ----------
    alpha : float
        Exponent; ``alpha = 0`` gives the constant density 1.
    eps : float
        Regularisation, ``0 < eps <= 1``.
    delta : float
        Smoothing width of the extension kinks at z = 0, +-1.
    m_rho : int or None
        Spectral truncation order of the density; ``None`` lets the solver
        pick ``2 m``.
    """

    alpha: float
    eps: float
    delta: float = 0.0
    m_rho: int | None = None

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if self.m_rho is not None and self.m_rho < 0:
            raise ValueError("m_rho must be non-negative")

    @property
    def is_constant(self):
        return self.alpha == 0

    def with_order(self, m_rho):
        return DensityProfile(self.alpha, self.eps, self.delta, int(m_rho))

    def __call__(self, z):
        return eval_density(self, z)


def _wrap(z):
    # leave in-range values untouched so that evenness is exact
    z = np.asarray(z, dtype=float)
    inside = (z >= -1.0) & (z < 1.0)
    return np.where(inside, z, np.mod(z + 1.0, 2.0) - 1.0)


def _smooth_triangle_raw(z, delta):
    jmax = int(np.ceil(9.2 / (np.pi * delta))) + 2
    j = np.arange(1, jmax + 1, 2, dtype=float)
    amp = np.exp(-0.5 * (np.pi * j * delta) ** 2) / j ** 2
    z = np.asarray(z, dtype=float)
    out = np.cos(np.pi * np.multiply.outer(z, j)) @ amp
    return 0.5 - 4.0 / np.pi ** 2 * out


def smooth_abs(z, delta):
    """Even, 2-periodic stand-in for ``|z|`` with kinks smoothed over ``delta``."""
    z = _wrap(z)
    if delta == 0:
        return np.abs(z)
    lo, hi = _smooth_triangle_raw(np.array([0.0, 1.0]), delta)
    return (_smooth_triangle_raw(z, delta) - lo) / (hi - lo)


def eval_density(profile, z):
    """Point values of the extended density (z is wrapped to [-1, 1))."""
    if profile.is_constant:
        return np.ones_like(np.asarray(z, dtype=float))
    return (smooth_abs(z, profile.delta) + profile.eps) ** profile.alpha


def density_bounds(profile):
    """``(inf, sup)`` over the torus."""
    if profile.is_constant:
        return 1.0, 1.0
    return profile.eps ** profile.alpha, (1.0 + profile.eps) ** profile.alpha


@lru_cache(maxsize=64)
def _spectrum_coeffs(alpha, eps, delta, m_rho):
    m = m_rho
    if alpha == 0:
        c = np.zeros(m + 1)
        c[0] = 1.0
        return c
    zq, wq = graded_rule(eps, n=24, n_uniform=max(16, m))
    rho = eval_density(DensityProfile(alpha, eps, delta), zq)
    j = np.arange(m + 1)
    c = 2.0 * (np.cos(np.pi * np.outer(j, zq)) @ (wq * rho))
    c[0] /= 2.0
    c.flags.writeable = False
    return c


def density_spectrum(profile, m_rho=None):
    """Cosine coefficients (k1 = 0 row only) of the extended density."""
    m = profile.m_rho if m_rho is None else m_rho
    if m is None:
        raise ValueError("m_rho is not set on the profile")
    basis = make_basis(m)
    coeffs = np.zeros(basis.shape, dtype=complex)
    coeffs[m, :] = _spectrum_coeffs(float(profile.alpha), float(profile.eps), float(profile.delta), int(m))
    return SpectralField(basis, "cos", coeffs)


def spectrum_error(profile, m_rho=None, n=4001):
    """Max deviation between the truncated spectrum and the point values."""
    field = density_spectrum(profile, m_rho)
    grid = GridSampling(1, n)
    approx = synthesize(field, grid)[0]
    return float(np.max(np.abs(approx - eval_density(profile, grid.z))))


def density_gradient(profile, m_rho=None):
    """Spectral view of d(rho)/dz (sine parity)."""
    return differentiate(density_spectrum(profile, m_rho), "z")


def density_laplacian(profile, m_rho=None):
    return differentiate(density_gradient(profile, m_rho), "z")
