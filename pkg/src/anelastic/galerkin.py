"""Galerkin matrices and the projected transport term in vector coordinates.

Vector layouts (see :mod:`anelastic.basis`): a cosine vector is the
C-ordered ``(2m+1, m+1)`` array of scaled coefficients, a sine vector the
``(2m+1, m)`` array for k2 = 1..m, and a pressure vector is the cosine
vector with the (0, 0) slot removed. Both trig families with k2 >= 1 carry
the same scale, so z-derivatives are plain diagonal multiplications.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import (
    GridSampling,
    SpectralField,
    from_grid,
    make_basis,
    multiply_project,
    to_grid,
)
from .density import density_spectrum


def resolve_profile(profile, m):
    """Fix the density truncation order (default ``2 m``)."""
    return profile if profile.m_rho is not None else profile.with_order(2 * m)


@dataclass(frozen=True, eq=False)
class GalerkinOperators:
    """Discrete operators of order ``m`` for one density profile."""

    basis: object
    profile: object
    rho: SpectralField
    mass_cos: np.ndarray
    mass_sin: np.ndarray
    transport_grid: GridSampling
    rho_on_grid: np.ndarray

    @property
    def m(self):
        return self.basis.m

    @property
    def n_velocity(self):
        return self.basis.n_cos + self.basis.n_sin

    # -- reshaping -------------------------------------------------------

    def split(self, a):
        nc = self.basis.n_cos
        return a[..., :nc], a[..., nc:]

    def cos_array(self, vec):
        return vec.reshape(vec.shape[:-1] + self.basis.shape)

    def sin_array(self, vec):
        m = self.m
        return vec.reshape(vec.shape[:-1] + (2 * m + 1, m))

    def pressure_to_cos(self, b):
        centre = self.m * (self.m + 1)
        return np.insert(b, centre, 0.0, axis=-1)

    def cos_to_pressure(self, c):
        centre = self.m * (self.m + 1)
        return np.delete(c, centre, axis=-1)

    # -- differential operators on vectors -------------------------------

    def dx_cos(self, c):
        k1 = self.basis.k1
        return (self.cos_array(c) * (1j * np.pi * k1)[:, None]).reshape(c.shape)

    def dx_sin(self, s):
        k1 = self.basis.k1
        return (self.sin_array(s) * (1j * np.pi * k1)[:, None]).reshape(s.shape)

    def dz_cos(self, c):
        k2 = self.basis.k2[1:]
        return (self.cos_array(c)[..., 1:] * (-np.pi * k2)).reshape(c.shape[:-1] + (-1,))

    def dz_sin(self, s):
        k2 = self.basis.k2[1:]
        arr = self.sin_array(s) * (np.pi * k2)
        out = np.zeros(arr.shape[:-1] + (self.m + 1,), dtype=complex)
        out[..., 1:] = arr
        return out.reshape(s.shape[:-1] + (-1,))

    @property
    def lap_cos(self):
        b = self.basis
        return (-np.pi ** 2 * (b.k1[:, None] ** 2 + b.k2[None, :] ** 2)).ravel()

    @property
    def lap_sin(self):
        b = self.basis
        return (-np.pi ** 2 * (b.k1[:, None] ** 2 + b.k2[None, 1:] ** 2)).ravel()

    @property
    def lap(self):
        return np.concatenate([self.lap_cos, self.lap_sin])

    def grad(self, b):
        """Gradient of a pressure vector as a velocity vector."""
        c = self.pressure_to_cos(b)
        return np.concatenate([self.dx_cos(c), self.dz_cos(c)], axis=-1)

    def div(self, a):
        """Divergence of a velocity vector as a pressure vector."""
        v, w = self.split(a)
        return self.cos_to_pressure(self.dx_cos(v) + self.dz_sin(w))

    def mass(self, a):
        v, w = self.split(a)
        return np.concatenate([v @ self.mass_cos.T, w @ self.mass_sin.T], axis=-1)

    def dissipation(self, a, b=None):
        """``Re int grad(a) : conj(grad(b))`` over the torus."""
        b = a if b is None else b
        return float(np.real(np.vdot(b, -self.lap * a)))

    # -- fields ------------------------------------------------------------

    def fields(self, a):
        v, w = self.split(a)
        return (self.basis.from_vector(v, "cos"), self.basis.from_vector(w, "sin"))

    def vector(self, v, w):
        return np.concatenate([self.basis.to_vector(v), self.basis.to_vector(w)], axis=-1)

    def pressure_field(self, b):
        return self.basis.from_vector(b, "cos", pressure=True)

    # -- nonlinear term ----------------------------------------------------

    def transport(self, a):
        """Vector of ``P_m[rho (u . grad) u]`` for the velocity vector ``a``."""
        vf, wf = self.fields(a)
        grid = self.transport_grid
        k1 = 1j * np.pi * self.basis.k1[:, None]
        k2 = np.pi * self.basis.k2
        vc, wc = vf.coeffs, wf.coeffs
        v = to_grid(vc, "cos", grid)
        w = to_grid(wc, "sin", grid)
        vx = to_grid(vc * k1, "cos", grid)
        vz = to_grid(-vc * k2, "sin", grid)
        wx = to_grid(wc * k1, "sin", grid)
        wz = to_grid(wc * k2, "cos", grid)
        rho = self.rho_on_grid
        nv = from_grid(rho * (v * vx + w * vz), "cos", self.m)
        nw = from_grid(rho * (v * wx + w * wz), "sin", self.m)
        b = self.basis
        return np.concatenate([
            b.to_vector(SpectralField(b, "cos", nv)),
            b.to_vector(SpectralField(b, "sin", nw)),
        ])


def _galerkin_matrix(basis, rho, parity):
    """Matrix of ``P_m(rho .)`` on the active slots of one parity."""
    n = basis.n_cos if parity == "cos" else basis.n_sin
    units = basis.from_vector(np.eye(n), parity)
    cols = multiply_project(units, rho, basis.m, "exact")
    return basis.to_vector(cols).T


@lru_cache(maxsize=32)
def assemble_operators(m, profile):
    """Assemble (and cache) the Galerkin operators for order ``m``."""
    basis = make_basis(m)
    profile = resolve_profile(profile, m)
    rho = density_spectrum(profile)
    mass_cos = _galerkin_matrix(basis, rho, "cos")
    mass_sin = _galerkin_matrix(basis, rho, "sin")
    # rho * u * grad(u): x-bandwidth 2m, z-bandwidth m_rho + 2m
    grid = GridSampling.for_bandwidth(2 * m, profile.m_rho + 2 * m, m)
    rho_grid = np.real(to_grid(rho.coeffs, "cos", grid))
    for arr in (mass_cos, mass_sin, rho_grid):
        arr.flags.writeable = False
    return GalerkinOperators(basis, profile, rho, mass_cos, mass_sin, grid, rho_grid)


# -- k1-block structure ------------------------------------------------------


def k1_permutation(m):
    """Velocity-vector indices grouped by k1: row ``i`` lists the cosine then sine slots of ``k1 = i - m``."""
    nc = (2 * m + 1) * (m + 1)
    rows = np.arange(2 * m + 1)[:, None]
    cos = rows * (m + 1) + np.arange(m + 1)[None, :]
    sin = nc + rows * m + np.arange(m)[None, :]
    return np.concatenate([cos, sin], axis=1)


@dataclass(frozen=True, eq=False)
class BlockDiagonal:
    """Linear map on velocity vectors that does not couple different k1.

    Every operator built from an x-independent density commutes with
    x-translations, so it is block diagonal over k1 with blocks of size
    ``2m + 1``.
    """

    perm: np.ndarray
    blocks: np.ndarray

    @property
    def size(self):
        return self.perm.size

    def __matmul__(self, x):
        xp = x[..., self.perm]
        y = (self.blocks @ xp[..., None])[..., 0]
        out = np.empty(y.shape[:-2] + (self.size,), dtype=np.result_type(self.blocks, x))
        out[..., self.perm] = y
        return out

    def with_blocks(self, blocks):
        return BlockDiagonal(self.perm, blocks)

    def dense(self):
        out = np.zeros((self.size, self.size), dtype=self.blocks.dtype)
        for idx, blk in zip(self.perm, self.blocks):
            out[np.ix_(idx, idx)] = blk
        return out


def block_operator(apply, m):
    """Blocks of a k1-diagonal linear map given only its action on batches of vectors.

    Column ``p`` of every block is probed at once with the sum of the unit
    vectors at position ``p`` of all blocks, so ``2m + 1`` applications suffice.
    """
    perm = k1_permutation(m)
    nb, s = perm.shape
    probes = np.zeros((s, perm.size), dtype=complex)
    for p in range(s):
        probes[p, perm[:, p]] = 1.0
    images = np.asarray(apply(probes))
    # images[p, perm[b, q]] = block_b[q, p]
    blocks = np.transpose(images[:, perm], (1, 2, 0))
    return BlockDiagonal(perm, np.ascontiguousarray(blocks))
