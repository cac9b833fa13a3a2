"""Stabilized linear semi-implicit time stepping for the penalized flow.

One step solves

    ((1/tau + kappa/eps) I - eps Delta_h + gamma beta (-Delta_h)^{-1}) phi^{n+1} = F^n

where every nonlinear and nonlocal term sits in ``F^n`` (see
:meth:`Solver.explicit_rhs`). The operator on the left is diagonal in Fourier
space, so a step is one forward and one inverse FFT plus the work to form
``F^n``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from . import model
from .model import EnergyBreakdown, ModelParams
from .spectral import Grid, GridSpec

log = logging.getLogger(__name__)

# C_2^2 <= 1 + 4 * pi^2/6 + pi^2/2  (discrete Sobolev embedding with s = 2)
SOBOLEV_C2 = math.sqrt(1.0 + 4.0 * math.pi**2 / 6.0 + math.pi**2 / 2.0)


class NonMonotoneEnergy(RuntimeWarning):
    """The discrete energy increased between two steps."""


@dataclass(frozen=True)
class SolverParams:
    tau: float
    kappa_h: float = 2000.0
    beta_h: float = 2.0
    tol: float = 1e-3
    max_steps: int = 100_000
    enforce_stability: bool = True
    report_stride: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.kappa_h < 0 or self.beta_h < 0:
            raise ValueError("stabilization constants must be nonnegative")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps}")
        if self.report_stride < 1:
            raise ValueError("report_stride must be >= 1")


@dataclass(frozen=True)
class StepReport:
    step: int
    time: float
    energy: EnergyBreakdown
    step_change: float
    converged: bool = False


def inv_laplacian_linf_bound(spec: GridSpec) -> float:
    """Uniform bound on ``||(-Delta_h)^{-1}||`` in the discrete max norm.

    ``C_2 sqrt((1 + C_p^4) |Omega|)`` with the Poincare constant taken at its
    upper estimate ``C_p = max(X, Y) / pi``.
    """
    cp = max(spec.X, spec.Y) / math.pi
    return SOBOLEV_C2 * math.sqrt((1.0 + cp**4) * spec.area)


def stability_constants(p: ModelParams, spec: GridSpec) -> tuple[float, float]:
    """Smallest ``(kappa_h, beta_h)`` covered by the energy-stability theorem."""
    b = model.potential_bounds(p.indicator)
    L_W = b.L_W if p.well == "quartic" else 0.0
    skew = max(p.omega, 1.0 - p.omega)
    kappa = L_W / 2 + p.eps * (
        p.gamma * b.L_f / 2 * inv_laplacian_linf_bound(spec) * skew
        + p.M / 2 * spec.area * (b.L_p**2 + b.L_f * skew)
    )
    beta = b.L_p**2 / 2
    return kappa, beta


def precompute_symbol(grid: Grid, p: ModelParams, s: SolverParams) -> np.ndarray:
    """Eigenvalues of the implicit operator, in FFT order.

    The inverse Laplacian drops the zero mode, so the (0, 0) entry carries only
    ``1/tau + kappa/eps``.
    """
    return 1.0 / s.tau + s.kappa_h / p.eps + p.eps * grid.k2 + p.gamma * s.beta_h * grid.inv_k2


class Solver:
    """Time stepper bound to one grid and one parameter set.

    With ``enforce_stability`` set, ``kappa_h`` and ``beta_h`` are raised to
    :func:`stability_constants` if they fall below them.
    """

    def __init__(self, grid: Grid, params: ModelParams, sparams: SolverParams):
        self.grid = grid
        self.params = params
        if sparams.enforce_stability:
            kappa_min, beta_min = stability_constants(params, grid.spec)
            if sparams.kappa_h < kappa_min or sparams.beta_h < beta_min:
                log.info(
                    "clamping stabilizers (kappa_h=%g, beta_h=%g) up to (%g, %g)",
                    sparams.kappa_h, sparams.beta_h, kappa_min, beta_min,
                )
                sparams = replace(
                    sparams,
                    kappa_h=max(sparams.kappa_h, kappa_min),
                    beta_h=max(sparams.beta_h, beta_min),
                )
        self.sparams = sparams
        self.symbol = precompute_symbol(grid, params, sparams)
        self._f, self._fp = model.indicator_funcs(params)
        self._W, self._Wp = model.well_funcs(params)

    def explicit_rhs(self, phi: np.ndarray) -> np.ndarray:
        """``F^n``: everything evaluated at the current state."""
        g, p, s = self.grid, self.params, self.sparams
        phi = g.check(phi)
        fphi = self._f(phi)
        dfphi = self._fp(phi)
        residual = g.integral(fphi) - p.omega * g.spec.area
        return (
            phi / s.tau
            + (s.kappa_h * phi - self._Wp(phi)) / p.eps
            + p.gamma * (s.beta_h * g.inv_laplacian(phi - p.omega) - g.inv_laplacian(fphi - p.omega) * dfphi)
            - p.M * residual * dfphi
        )

    def solve(self, F: np.ndarray) -> np.ndarray:
        """Invert the implicit operator on a right-hand side."""
        return self.grid.ifft_real(self.grid.fft(self.grid.check(F)) / self.symbol)

    def apply_operator(self, phi: np.ndarray) -> np.ndarray:
        """The implicit operator itself, for residual checks."""
        g, p, s = self.grid, self.params, self.sparams
        return (
            (1.0 / s.tau + s.kappa_h / p.eps) * phi
            - p.eps * g.laplacian(phi)
            + p.gamma * s.beta_h * g.inv_laplacian(phi)
        )

    def step(self, phi: np.ndarray) -> np.ndarray:
        return self.solve(self.explicit_rhs(phi))

    def energy(self, phi: np.ndarray) -> EnergyBreakdown:
        return model.energy(self.grid, phi, self.params)

    def _advance(self, phi: np.ndarray, phi_hat: np.ndarray):
        """One step reusing the transform of ``phi``.

        Returns the new state, its transform and the energy of the *old* state
        (which falls out of the same transforms for free).
        """
        g, p, s = self.grid, self.params, self.sparams
        fphi = self._f(phi)
        dfphi = self._fp(phi)
        g_hat = g.fft(fphi - p.omega)
        e_old = model.energy_from_parts(g, phi_hat, g_hat, self._W(phi), fphi, p)
        local = (
            phi / s.tau
            + (s.kappa_h * phi - self._Wp(phi)) / p.eps
            - p.gamma * g.ifft_real(g.inv_k2 * g_hat) * dfphi
            - p.M * e_old.volume_residual * dfphi
        )
        # gamma*beta*(-Delta_h)^{-1}(phi - omega) is linear: add it in Fourier space
        rhs_hat = g.fft(local) + (p.gamma * s.beta_h) * g.inv_k2 * phi_hat
        new_hat = rhs_hat / self.symbol
        return g.ifft_real(new_hat), new_hat, e_old

    def advance(self, phi0: np.ndarray, nsteps: int) -> np.ndarray:
        """Take exactly ``nsteps`` steps, no monitoring or stopping."""
        phi = np.array(self.grid.check(phi0), dtype=float)
        phi_hat = self.grid.fft(phi)
        for _ in range(nsteps):
            phi, phi_hat, _ = self._advance(phi, phi_hat)
        return phi

    def iterate(self, phi0: np.ndarray) -> Iterable[tuple[np.ndarray, StepReport]]:
        """Yield ``(phi^n, report)`` for ``n = 1, 2, ...`` until stopping.

        Each report carries the energy of ``phi^n`` and
        ``||phi^n - phi^{n-1}||_inf / tau``. Iteration ends after the first
        state that meets the tolerance or after ``max_steps``. Intermediate
        reports are emitted every ``report_stride`` steps, one step late,
        because the energy of ``phi^n`` is a by-product of computing
        ``phi^{n+1}``.
        """
        g, s = self.grid, self.sparams
        phi = np.array(g.check(phi0), dtype=float)
        phi_hat = g.fft(phi)
        prev_total = None
        pending = None
        for n in range(1, s.max_steps + 1):
            new, new_hat, e_old = self._advance(phi, phi_hat)
            if prev_total is not None:
                self._check_monotone(n - 1, prev_total, e_old.total)
            prev_total = e_old.total
            if pending is not None:
                yield phi, StepReport(pending[0], pending[0] * s.tau, e_old, pending[1])
                pending = None
            change = float(np.max(np.abs(new - phi))) / s.tau
            phi, phi_hat = new, new_hat
            converged = change <= s.tol
            if converged or n == s.max_steps:
                e_new = self.energy(phi)
                self._check_monotone(n, prev_total, e_new.total)
                yield phi, StepReport(n, n * s.tau, e_new, change, converged)
                return
            if n % s.report_stride == 0:
                pending = (n, change)

    def _check_monotone(self, n: int, before: float, after: float):
        if after > before + 1e-10 * abs(before):
            msg = f"energy rose at step {n}: {before!r} -> {after!r}"
            if self.sparams.enforce_stability:
                warnings.warn(msg, NonMonotoneEnergy, stacklevel=3)
            else:
                log.debug(msg)

    def run(
        self,
        phi0: np.ndarray,
        callbacks: Iterable[Callable[[np.ndarray, StepReport], None]] = (),
    ) -> tuple[np.ndarray, list[StepReport]]:
        phi = np.array(self.grid.check(phi0), dtype=float)
        reports: list[StepReport] = []
        for phi, report in self.iterate(phi0):
            reports.append(report)
            for cb in callbacks:
                cb(phi, report)
        return phi, reports
