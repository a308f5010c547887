"""Numerical check of the weighted Hardy inequalities with shift ``eps``.

For ``k > -1`` the ratio is

    int (z+eps)^k |f|^2  /  int (z+eps)^(k+2) (|f|^2 + |f'|^2),

and for ``k < -1`` it is

    int (z+eps)^k |f - f(0)|^2  /  int (z+eps)^(k+2) |f'|^2,

all integrals over (0, 1). Integrals use graded Gauss-Legendre panels that
resolve the ``eps`` scale near the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from ..quadrature import graded_rule

DEFAULT_EPS = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_K = (1.0, 0.5, -2.0, -3.0)
DEFAULT_BOUND = 2.0


class HardyInputError(ValueError):
    """Unsupported exponent or an inconsistent test function."""


@dataclass(frozen=True)
class ProbeFunction:
    """A test function on [0, 1] with its derivative (both vectorised)."""

    name: str
    f: object
    df: object

    @classmethod
    def from_expression(cls, expr, name=None):
        z = sp.Symbol("z", real=True)
        e = sp.sympify(expr, locals={"z": z, "pi": sp.pi})
        f = sp.lambdify(z, e, "numpy")
        df = sp.lambdify(z, sp.diff(e, z), "numpy")

        def fv(x):
            return np.asarray(f(x), dtype=float) + 0.0 * x

        def dfv(x):
            return np.asarray(df(x), dtype=float) + 0.0 * x

        return cls(name or str(expr), fv, dfv)


BUILTIN_FAMILY = tuple(
    ProbeFunction.from_expression(e, n)
    for n, e in (
        ("1", "1"),
        ("z", "z"),
        ("z^2", "z**2"),
        ("sin(pi z)", "sin(pi*z)"),
        ("1-cos(pi z)", "1 - cos(pi*z)"),
        ("z(1-z)", "z*(1 - z)"),
    )
)


def hardy_terms(f, df, k, eps, quadrature=None):
    """``(lhs, rhs)`` of the inequality for exponent ``k`` and shift ``eps``."""
    if k == -1:
        raise HardyInputError("k = -1 is excluded")
    z, w = quadrature if quadrature is not None else graded_rule(eps, n=30)
    zs = z + eps
    fz, dfz = f(z), df(z)
    if k > -1:
        lhs = np.sum(w * zs ** k * fz ** 2)
        rhs = np.sum(w * zs ** (k + 2) * (fz ** 2 + dfz ** 2))
    else:
        f0 = float(f(np.zeros(1))[0])
        lhs = np.sum(w * zs ** k * (fz - f0) ** 2)
        rhs = np.sum(w * zs ** (k + 2) * dfz ** 2)
    return float(lhs), float(rhs)


def hardy_check(f, df, k, eps, quadrature=None, tol=1e-14):
    """Ratio LHS / RHS; ``0`` when the left side vanishes.

    Raises
    ------
    HardyInputError
        For ``k = -1`` or when the right side vanishes but the left does not.
    """
    lhs, rhs = hardy_terms(f, df, k, eps, quadrature)
    if lhs <= tol * max(rhs, 1.0):
        return 0.0
    if rhs <= 0.0:
        raise HardyInputError(f"right-hand side vanishes while left-hand side is {lhs:.3e}")
    return lhs / rhs


@dataclass
class HardyReport:
    """Ratios of one exponent over an eps sweep, per test function."""

    k: float
    eps: tuple
    ratios: dict = field(default_factory=dict)
    bound: float = DEFAULT_BOUND

    def max_ratio(self, name):
        return float(np.max(self.ratios[name]))

    def spread(self, name):
        """``max / min`` of the ratio over eps (1 for an identically zero ratio)."""
        r = np.asarray(self.ratios[name])
        if np.all(r == 0):
            return 1.0
        lo = r.min()
        return float(r.max() / lo) if lo > 0 else np.inf

    def uniform(self, name):
        return self.spread(name) <= self.bound

    @property
    def passed(self):
        return all(self.uniform(n) for n in self.ratios)

    def summary(self):
        return {
            "k": self.k,
            "eps": list(self.eps),
            "bound": self.bound,
            "functions": {
                n: {
                    "ratios": [float(x) for x in r],
                    "max_ratio": self.max_ratio(n),
                    "spread": self.spread(n),
                    "uniform": self.uniform(n),
                }
                for n, r in self.ratios.items()
            },
            "pass": self.passed,
        }


def hardy_sweep(ks=DEFAULT_K, eps_list=DEFAULT_EPS, family=BUILTIN_FAMILY, bound=DEFAULT_BOUND):
    """One :class:`HardyReport` per exponent in ``ks``."""
    reports = []
    for k in ks:
        rep = HardyReport(float(k), tuple(float(e) for e in eps_list), bound=bound)
        for fn in family:
            rep.ratios[fn.name] = [hardy_check(fn.f, fn.df, k, e) for e in eps_list]
        reports.append(rep)
    return reports
