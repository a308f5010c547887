"""Built-in initial-data families; every family is passed through the constraint correction."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .basis import SpectralField, make_basis, project
from .constraint import anelastic_stream_field, correct_initial_data
from .dynamics import SimState

FAMILIES = ("shear", "stream", "random", "file")
DEFAULT_STREAM = "sin(pi*z)**2*cos(pi*x)"


class InitialData(NamedTuple):
    state: SimState
    correction_norm: float


def shear_fields(m, amplitude=1.0, k2=1):
    """``v = amplitude cos(k2 pi z)``, ``w = 0``."""
    basis = make_basis(m)
    v = SpectralField.mode(basis, "cos", 0, k2, amplitude) if k2 <= m else SpectralField.zeros(basis, "cos")
    return v, SpectralField.zeros(basis, "sin")


def random_fields(m, seed=0, decay=3.0, amplitude=1.0, m_data=16):
    """Seeded random field with coefficients decaying like ``(1 + |k|^2)^(-decay/2)``.

    The coefficients are drawn at order ``m_data`` and then truncated, so
    runs at different ``m`` share the same underlying data.
    """
    rng = np.random.default_rng(seed)
    big = make_basis(max(m_data, m))
    k1, k2 = np.meshgrid(big.k1, big.k2, indexing="ij")
    envelope = amplitude * (1.0 + k1 ** 2 + k2 ** 2) ** (-decay / 2.0)
    out = []
    for parity in ("cos", "sin"):
        c = rng.standard_normal(big.shape) + 1j * rng.standard_normal(big.shape)
        c = 0.5 * (c + np.conj(c[::-1])) * envelope
        out.append(project(SpectralField(big, parity, c), m))
    return tuple(out)


def raw_fields(family, m, density, **params):
    """Uncorrected ``(v, w)`` for a named family."""
    if family == "shear":
        return shear_fields(m, params.get("amplitude", 1.0), int(params.get("k2", 1)))
    if family == "stream":
        expr = params.get("psi", DEFAULT_STREAM)
        v, w = anelastic_stream_field(expr, density, m)
        amp = params.get("amplitude", 1.0)
        return v * amp, w * amp
    if family == "random":
        return random_fields(
            m,
            seed=int(params.get("seed", 0)),
            decay=float(params.get("decay", 3.0)),
            amplitude=float(params.get("amplitude", 1.0)),
            m_data=int(params.get("m_data", 16)),
        )
    if family == "file":
        from .io import read_snapshot

        snap = read_snapshot(params["path"])
        return project(snap.v, m), project(snap.w, m)
    raise ValueError(f"unknown initial-data family {family!r}; expected one of {FAMILIES}")


def initial_state(system, family="random", t0=0.0, **params):
    """Corrected initial state for ``system`` and the size of the correction."""
    v, w = raw_fields(family, system.m, system.density, **params)
    fixed = correct_initial_data(v, w, system.basis, system.density)
    return InitialData(SimState(t0, system.ops.vector(fixed.v, fixed.w)), fixed.correction_norm)
