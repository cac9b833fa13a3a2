"""Penalized Ohta-Kawasaki free energy on a spectral grid.

The energy is

    E[phi] = eps/2 |grad phi|^2 + 1/eps <W(phi), 1>
             + gamma/2 |(-Delta)^{-1/2} (f(phi) - omega)|^2
             + M/2 (<f(phi), 1> - omega |Omega|)^2

with the double well ``W(s) = 18 (s^2 - s)^2`` and the indicator
``f(s) = 6 s^5 - 15 s^4 + 10 s^3``. Both are extended outside ``[0, 1]`` so
that ``W''`` and ``f''`` stay bounded: ``W`` quadratically (C^2 glue at the
wells) and ``f`` by its end values 0 and 1.

The ``indicator="linear"`` choice, ``f(s) = s``, reproduces the classical
model used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .spectral import Grid

Indicator = Literal["quintic", "linear"]
Well = Literal["quartic", "none"]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the penalized flow.

    ``well="none"`` drops the double-well term; it exists so the time-stepping
    machinery can be exercised on a linear problem with a known solution.
    """

    eps: float
    gamma: float
    omega: float = 0.15
    M: float = 1000.0
    indicator: Indicator = "quintic"
    well: Well = "quartic"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")
        if self.indicator not in ("quintic", "linear"):
            raise ValueError(f"unknown indicator {self.indicator!r}")
        if self.well not in ("quartic", "none"):
            raise ValueError(f"unknown well {self.well!r}")


@dataclass(frozen=True)
class PotentialBounds:
    L_W: float
    L_f: float
    L_p: float


@dataclass(frozen=True)
class EnergyBreakdown:
    interface: float
    doublewell: float
    nonlocal_: float
    penalty: float
    volume_residual: float

    @property
    def total(self) -> float:
        return self.interface + self.doublewell + self.nonlocal_ + self.penalty

    def as_dict(self) -> dict[str, float]:
        return {
            "E_total": self.total,
            "E_interface": self.interface,
            "E_doublewell": self.doublewell,
            "E_nonlocal": self.nonlocal_,
            "E_penalty": self.penalty,
            "volume_residual": self.volume_residual,
        }


# -- pointwise potentials ---------------------------------------------------
#
# Each function evaluates the [0, 1] polynomial everywhere, then patches the
# (usually few) points outside the interval with the extension.


def _patch(s, out, below, above):
    lo = s < 0
    hi = s > 1
    if lo.any():
        out[lo] = below(s[lo])
    if hi.any():
        out[hi] = above(s[hi])
    return out


def w_val(s):
    s = np.asarray(s, dtype=float)
    q = s * (s - 1)
    return _patch(s, np.asarray(18.0 * q * q), lambda t: 18.0 * t * t, lambda t: 18.0 * (t - 1) ** 2)


def w_prime(s):
    s = np.asarray(s, dtype=float)
    out = np.asarray(36.0 * s * (s - 1) * (2 * s - 1))
    return _patch(s, out, lambda t: 36.0 * t, lambda t: 36.0 * (t - 1))


def w_second(s):
    s = np.asarray(s, dtype=float)
    out = np.asarray(216.0 * s * (s - 1) + 36.0)
    return _patch(s, out, lambda t: 36.0, lambda t: 36.0)


def f_val(s):
    s = np.asarray(s, dtype=float)
    out = np.asarray(s * s * s * (s * (6.0 * s - 15.0) + 10.0))
    return _patch(s, out, lambda t: 0.0, lambda t: 1.0)


def f_prime(s):
    s = np.asarray(s, dtype=float)
    q = s * (s - 1)
    return _patch(s, np.asarray(30.0 * q * q), lambda t: 0.0, lambda t: 0.0)


def f_second(s):
    s = np.asarray(s, dtype=float)
    out = np.asarray(60.0 * s * (2 * s - 1) * (s - 1))
    return _patch(s, out, lambda t: 0.0, lambda t: 0.0)


def indicator_funcs(p: ModelParams):
    """``(f, f')`` for the configured indicator."""
    if p.indicator == "linear":
        return (lambda s: np.asarray(s, dtype=float)), (lambda s: np.ones_like(s, dtype=float))
    return f_val, f_prime


def well_funcs(p: ModelParams):
    if p.well == "none":
        zero = lambda s: np.zeros_like(s, dtype=float)  # noqa: E731
        return zero, zero
    return w_val, w_prime


def potential_bounds(indicator: Indicator = "quintic") -> PotentialBounds:
    """Closed-form ``sup|W''|``, ``sup|f''|`` and the Lipschitz constant of ``f``.

    ``W''(s) = 216 s^2 - 216 s + 36`` peaks in magnitude at the wells (36) and
    the extension keeps it at 36. ``f'(s) = 30 s^2 (1-s)^2`` peaks at ``s = 1/2``
    with value 15/8, and ``|f''|`` peaks at ``s = (3 +- sqrt 3)/6`` with value
    ``10 sqrt(3) / 3``.
    """
    if indicator == "linear":
        return PotentialBounds(L_W=36.0, L_f=0.0, L_p=1.0)
    return PotentialBounds(L_W=36.0, L_f=10.0 * math.sqrt(3.0) / 3.0, L_p=15.0 / 8.0)


# -- grid-level quantities ------------------------------------------------------


def volume_residual(grid: Grid, phi: np.ndarray, p: ModelParams) -> float:
    f, _ = indicator_funcs(p)
    return grid.integral(f(phi)) - p.omega * grid.spec.area


def energy(grid: Grid, phi: np.ndarray, p: ModelParams) -> EnergyBreakdown:
    phi = grid.check(phi)
    f, _ = indicator_funcs(p)
    W, _ = well_funcs(p)
    fphi = f(phi)
    return energy_from_parts(grid, grid.fft(phi), grid.fft(fphi - p.omega), W(phi), fphi, p)


def energy_from_parts(
    grid: Grid,
    phi_hat: np.ndarray,
    g_hat: np.ndarray,
    w_phi: np.ndarray,
    f_phi: np.ndarray,
    p: ModelParams,
) -> EnergyBreakdown:
    """Energy from precomputed transforms of ``phi`` and ``f(phi) - omega``.

    The interface term uses ``-<Delta_h phi, phi>_h``, which keeps the
    Nyquist mode and is the quantity the scheme dissipates.
    """
    residual = grid.integral(f_phi) - p.omega * grid.spec.area
    return EnergyBreakdown(
        interface=0.5 * p.eps * grid.dirichlet_from_hat(phi_hat),
        doublewell=grid.integral(w_phi) / p.eps,
        nonlocal_=0.5 * p.gamma * grid.inv_sqrt_norm_sq_from_hat(g_hat),
        penalty=0.5 * p.M * residual**2,
        volume_residual=residual,
    )


def forces(grid: Grid, phi: np.ndarray, p: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Surface tension, nonlocal repulsion and volume force at ``phi``.

    Their sum is minus the variational derivative of the energy.
    """
    phi = grid.check(phi)
    f, fp = indicator_funcs(p)
    _, Wp = well_funcs(p)
    fphi = f(phi)
    dfphi = fp(phi)
    tension = p.eps * grid.laplacian(phi) - Wp(phi) / p.eps
    nonlocal_ = -p.gamma * grid.inv_laplacian(fphi - p.omega) * dfphi
    residual = grid.integral(fphi) - p.omega * grid.spec.area
    volume = -p.M * residual * dfphi
    return tension, nonlocal_, volume
