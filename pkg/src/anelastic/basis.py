"""Trigonometric basis on the extended torus [0, 2) x [-1, 1).

Velocity component v and pressure use ``exp(i pi k1 x) cos(pi k2 z)``;
the vertical velocity w uses ``exp(i pi k1 x) sin(pi k2 z)``, with
-m <= k1 <= m and 0 <= k2 <= m. Coefficients are stored as complex arrays
of shape ``(..., 2m+1, m+1)`` indexed ``[k1 + m, k2]``; leading axes are
batch axes.

Two coordinate systems are used. *Coefficients* are the raw expansion
amplitudes. *Vectors* hold only the active (non-degenerate) slots scaled
by the L2 norm of the corresponding basis function, so that Galerkin
matrices are Hermitian and ``vdot(a, a)`` is the squared L2 norm over
the torus.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import kernels
from .quadrature import graded_rule

PARITIES = ("cos", "sin")
AREA = 4.0  # |[0,2) x [-1,1)|
DEBUG = bool(os.environ.get("ANELASTIC_DEBUG"))


class ResolutionError(ValueError):
    """Grid too coarse for exact quadrature at the requested order."""


@dataclass(frozen=True)
class BasisSpec:
    """Index sets and dimensions of the truncated space of order ``m``."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"truncation order must be a non-negative integer, got {self.m!r}")

    @property
    def shape(self):
        return (2 * self.m + 1, self.m + 1)

    @cached_property
    def k1(self):
        return np.arange(-self.m, self.m + 1)

    @cached_property
    def k2(self):
        return np.arange(self.m + 1)

    @cached_property
    def index_set_velocity(self):
        return [(int(a), int(b)) for a in self.k1 for b in self.k2]

    @cached_property
    def index_set_pressure(self):
        return [k for k in self.index_set_velocity if k != (0, 0)]

    @property
    def formal_dimension(self):
        """Real dimension of the velocity-pressure space, counting the k2 = 0 sine slots."""
        return 3 * (2 * self.m + 1) * (self.m + 1) - 1

    @property
    def n_cos(self):
        return (2 * self.m + 1) * (self.m + 1)

    @property
    def n_sin(self):
        return (2 * self.m + 1) * self.m

    @property
    def n_pressure(self):
        return self.n_cos - 1

    def active_mask(self, parity, pressure=False):
        mask = np.ones(self.shape, dtype=bool)
        if parity == "sin":
            mask[:, 0] = False
        if pressure:
            mask[self.m, 0] = False
        return mask

    def norm_weights(self, parity):
        """Squared torus L2 norm of each basis function."""
        w = np.full(self.shape, AREA / 2)
        if parity == "cos":
            w[:, 0] = AREA
        return w

    def to_vector(self, field, pressure=False):
        if field.basis.m != self.m:
            raise ValueError("field belongs to a different basis")
        mask = self.active_mask(field.parity, pressure)
        scale = np.sqrt(self.norm_weights(field.parity))
        return (field.coeffs * scale)[..., mask]

    def from_vector(self, vec, parity, pressure=False):
        mask = self.active_mask(parity, pressure)
        vec = np.asarray(vec)
        coeffs = np.zeros(vec.shape[:-1] + self.shape, dtype=complex)
        coeffs[..., mask] = vec
        coeffs /= np.sqrt(self.norm_weights(parity))
        return SpectralField(self, parity, coeffs)


@lru_cache(maxsize=None)
def make_basis(m):
    return BasisSpec(int(m))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of one scalar field with declared z-parity."""

    basis: BasisSpec
    parity: str
    coeffs: np.ndarray

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be 'cos' or 'sin', got {self.parity!r}")
        c = np.array(self.coeffs, dtype=complex)
        if c.shape[-2:] != self.basis.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match basis {self.basis.shape}")
        if self.parity == "sin":
            c[..., 0] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self):
        return self.basis.m

    @classmethod
    def zeros(cls, basis, parity):
        return cls(basis, parity, np.zeros(basis.shape, dtype=complex))

    @classmethod
    def mode(cls, basis, parity, k1, k2, amplitude=1.0):
        """Real field ``amplitude * e^{i pi k1 x} trig(pi k2 z) + c.c.`` (no c.c. for k1 = 0)."""
        c = np.zeros(basis.shape, dtype=complex)
        c[k1 + basis.m, k2] += amplitude
        if k1 != 0:
            c[-k1 + basis.m, k2] += np.conj(amplitude)
        return cls(basis, parity, c)

    def hermitian_defect(self):
        c = self.coeffs
        return float(np.max(np.abs(c - np.conj(c[..., ::-1, :])), initial=0.0))

    def is_hermitian(self, tol=1e-12):
        scale = max(float(np.max(np.abs(self.coeffs), initial=0.0)), 1.0)
        return self.hermitian_defect() <= tol * scale

    def _new(self, coeffs, parity=None):
        out = SpectralField(self.basis, parity or self.parity, coeffs)
        if DEBUG and self.is_hermitian() and not out.is_hermitian():
            raise AssertionError("Hermitian symmetry lost")
        return out

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.basis.m != self.m or other.parity != self.parity:
            raise ValueError("fields must share basis order and parity")
        return other

    def __add__(self, other):
        self._check(other)
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return self._new(self.coeffs * scalar)

    __rmul__ = __mul__


def project(field, m):
    """Truncate (or zero-pad) ``field`` onto the order-``m`` space."""
    basis = make_basis(m)
    src, n = field.coeffs, field.m
    out = np.zeros(src.shape[:-2] + basis.shape, dtype=complex)
    r = min(n, m)
    out[..., m - r:m + r + 1, :r + 1] = src[..., n - r:n + r + 1, :r + 1]
    return field._new(out) if m == n else SpectralField(basis, field.parity, out)


def differentiate(field, axis):
    """Exact derivative along ``'x'`` or ``'z'``; z-derivatives swap parity."""
    b = field.basis
    if axis == "x":
        return field._new(field.coeffs * (1j * np.pi * b.k1)[:, None])
    if axis == "z":
        if field.parity == "cos":
            return field._new(field.coeffs * (-np.pi * b.k2), "sin")
        return field._new(field.coeffs * (np.pi * b.k2), "cos")
    raise ValueError(f"axis must be 'x' or 'z', got {axis!r}")


def laplacian_symbol(basis):
    return -np.pi ** 2 * (basis.k1[:, None] ** 2 + basis.k2[None, :] ** 2)


def laplacian(field):
    return field._new(field.coeffs * laplacian_symbol(field.basis))


def inner(f, g):
    """Torus L2 inner product ``int f conj(g)``."""
    if f.parity != g.parity or f.m != g.m:
        raise ValueError("inner product needs matching basis and parity")
    w = f.basis.norm_weights(f.parity)
    return np.sum(f.coeffs * np.conj(g.coeffs) * w, axis=(-2, -1))


def l2_norm(f):
    return float(np.sqrt(np.real(inner(f, f))))


# -- transforms ------------------------------------------------------------


@dataclass(frozen=True)
class GridSampling:
    """Uniform nodes on the torus: ``x_j = 2j/nx``, ``z_l = -1 + 2l/nz``.

    The periodic trapezoid rule on this grid integrates every
    ``exp(i pi q x)`` with ``|q| < nx`` exactly (likewise in z).
    """

    nx: int
    nz: int

    def __post_init__(self):
        if self.nx < 1 or self.nz < 1:
            raise ValueError("grid sizes must be positive")

    @classmethod
    def for_bandwidth(cls, bandwidth_x, bandwidth_z, m_out):
        """Smallest grid analysing a field of the given bandwidths exactly onto order ``m_out``."""
        floor = 2 * m_out + 1
        return cls(int(max(bandwidth_x + m_out + 1, floor)), int(max(bandwidth_z + m_out + 1, floor)))

    @cached_property
    def x(self):
        return 2.0 * np.arange(self.nx) / self.nx

    @cached_property
    def z(self):
        return -1.0 + 2.0 * np.arange(self.nz) / self.nz

    def mesh(self):
        return np.meshgrid(self.x, self.z, indexing="ij")


@lru_cache(maxsize=128)
def _x_matrix(nx, m):
    x = 2.0 * np.arange(nx) / nx
    mat = np.exp(1j * np.pi * np.outer(x, np.arange(-m, m + 1)))
    mat.flags.writeable = False
    return mat


@lru_cache(maxsize=128)
def _z_matrix(nz, m, parity):
    z = -1.0 + 2.0 * np.arange(nz) / nz
    arg = np.pi * np.outer(z, np.arange(m + 1))
    mat = np.cos(arg) if parity == "cos" else np.sin(arg)
    mat.flags.writeable = False
    return mat


def to_grid(coeffs, parity, grid):
    """Complex samples of a (possibly batched, non-Hermitian) coefficient array."""
    m = coeffs.shape[-1] - 1
    ex = _x_matrix(grid.nx, m)
    ez = _z_matrix(grid.nz, m, parity)
    return ex @ coeffs @ ez.T


def from_grid(samples, parity, m):
    """Coefficients of order ``m`` from samples by the trapezoid rule (complex input allowed)."""
    nx, nz = samples.shape[-2:]
    if nx < 2 * m + 1 or nz < 2 * m + 1:
        raise ResolutionError(f"grid {nx}x{nz} cannot resolve order {m}; need at least {2 * m + 1} per direction")
    ex = _x_matrix(nx, m)
    ez = _z_matrix(nz, m, parity)
    g = make_basis(m).norm_weights(parity) / AREA
    return (ex.conj().T @ samples @ ez) / (nx * nz * g)


def synthesize(field, grid):
    """Real samples of a Hermitian field on ``grid``."""
    if not field.is_hermitian(1e-10):
        raise ValueError("synthesize expects a real-valued (Hermitian) field")
    return np.real(to_grid(field.coeffs, field.parity, grid))


def analyze(samples, parity, m):
    """Inverse of :func:`synthesize` on the order-``m`` space.

    Exact when the sampled function has bandwidth ``M`` and each grid
    direction has more than ``M + m`` nodes.
    """
    coeffs = from_grid(np.asarray(samples), parity, m)
    return SpectralField(make_basis(m), parity, coeffs)


def product_parity(p, q):
    return "cos" if p == q else "sin"


def multiply_project(f, g, m, mode="exact"):
    """Galerkin product ``P_m(f g)``.

    ``exact`` multiplies on a grid fine enough for exact quadrature of the
    full product bandwidth; ``oracle`` convolves coefficients directly.
    """
    if not isinstance(f, SpectralField) or not isinstance(g, SpectralField):
        raise TypeError("multiply_project expects SpectralField operands")
    parity = product_parity(f.parity, g.parity)
    if mode == "exact":
        band = f.m + g.m
        grid = GridSampling.for_bandwidth(band, band, m)
        prod = to_grid(f.coeffs, f.parity, grid) * to_grid(g.coeffs, g.parity, grid)
        return SpectralField(make_basis(m), parity, from_grid(prod, parity, m))
    if mode == "oracle":
        return _convolution_product(f, g, m, parity)
    raise ValueError(f"mode must be 'exact' or 'oracle', got {mode!r}")


def _to_exponential(coeffs, parity):
    """Rewrite the z-dependence as ``sum_q c_q e^{i pi q z}``, q = -M..M."""
    n1, n2 = coeffs.shape
    M = n2 - 1
    out = np.zeros((n1, 2 * M + 1), dtype=complex)
    if parity == "cos":
        out[:, M] = coeffs[:, 0]
    if M == 0:
        return out
    half = coeffs[:, 1:] / 2 if parity == "cos" else coeffs[:, 1:] / 2j
    out[:, M + 1:] += half
    out[:, M - 1::-1] += half if parity == "cos" else -half
    return out


def _convolution_product(f, g, m, parity):
    basis = make_basis(m)
    fc, gc = np.asarray(f.coeffs), np.asarray(g.coeffs)
    batch = np.broadcast_shapes(fc.shape[:-2], gc.shape[:-2])
    fc = np.broadcast_to(fc, batch + fc.shape[-2:]).reshape((-1,) + fc.shape[-2:])
    gc = np.broadcast_to(gc, batch + gc.shape[-2:]).reshape((-1,) + gc.shape[-2:])
    out = np.zeros((fc.shape[0],) + basis.shape, dtype=complex)
    K = f.m + g.m  # centre index of the full product in both directions
    r1 = min(m, K)
    for n in range(fc.shape[0]):
        full = kernels.convolve2d(_to_exponential(fc[n], f.parity), _to_exponential(gc[n], g.parity))
        rows = full[K - r1:K + r1 + 1]
        block = out[n, m - r1:m + r1 + 1]
        if parity == "cos":
            block[:, 0] = rows[:, K]
            for q in range(1, r1 + 1):
                block[:, q] = rows[:, K + q] + rows[:, K - q]
        else:
            for q in range(1, r1 + 1):
                block[:, q] = 1j * (rows[:, K + q] - rows[:, K - q])
    return SpectralField(basis, parity, out.reshape(batch + basis.shape))


# -- quadrature analysis of functions on the physical cell ------------------


def analyze_function(func, parity, m, nx=None, scale=0.0):
    """Coefficients of the symmetric extension of ``func(x, z)`` given on z in (0, 1).

    ``parity='cos'`` extends evenly, ``'sin'`` oddly. The z-integral uses
    graded Gauss-Legendre on (0, 1), so kinks of the extension at z = 0, 1
    do not degrade the quadrature; x uses the periodic trapezoid rule.
    ``func`` must accept broadcast arrays and may return a leading batch axis.
    """
    nx = int(nx or 4 * m + 8)
    zq, wq = graded_rule(scale)
    x = 2.0 * np.arange(nx) / nx
    vals = np.asarray(func(x[:, None], zq[None, :]), dtype=float)
    vals = np.broadcast_to(vals, vals.shape[:-2] + (nx, zq.size))
    ex = _x_matrix(nx, m)
    arg = np.pi * np.outer(zq, np.arange(m + 1))
    ez = (np.cos(arg) if parity == "cos" else np.sin(arg)) * wq[:, None]
    basis = make_basis(m)
    # torus integral = 2 * integral over the physical cell for SYM-extended integrands
    g = basis.norm_weights(parity)
    coeffs = 2.0 * (2.0 / nx) * (ex.conj().T @ vals @ ez) / g
    return SpectralField(basis, parity, coeffs)


def z_profiles(coeffs, parity, z):
    """Complex x-Fourier profiles ``f_k1(z)`` at arbitrary nodes, shape ``(..., 2m+1, len(z))``."""
    m = coeffs.shape[-1] - 1
    arg = np.pi * np.outer(np.asarray(z, dtype=float), np.arange(m + 1))
    trig = np.cos(arg) if parity == "cos" else np.sin(arg)
    return coeffs @ trig.T


def evaluate(coeffs, parity, x, z):
    """Point values on the tensor grid ``x`` by ``z`` (complex; real for Hermitian input)."""
    m = coeffs.shape[-1] - 1
    ex = np.exp(1j * np.pi * np.outer(np.asarray(x, dtype=float), np.arange(-m, m + 1)))
    return ex @ z_profiles(coeffs, parity, z)
