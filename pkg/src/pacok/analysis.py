"""Initial conditions and experiment diagnostics.

Covers the disc runs (profile shape and force balance), the temporal
convergence table, and bubble counting with the power-law fit of bubble
count against repulsion strength.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, optimize

from .model import ModelParams
from .solver import Solver, SolverParams
from .spectral import Grid


class DiscTooLarge(ValueError):
    pass


class RatioMismatch(ValueError):
    pass


class DegenerateFit(ValueError):
    pass


class NotRadial(UserWarning):
    pass


@dataclass(frozen=True)
class ConvergenceRow:
    tau: float
    error: float
    rate: float | None = None
    rel_error: float | None = None


@dataclass(frozen=True)
class BubbleCount:
    gamma: float
    count: int
    runs: int
    counts: tuple[int, ...] = ()

    @property
    def unanimous(self) -> bool:
        return len(set(self.counts)) <= 1


# -- initial conditions ---------------------------------------------------------


def disc_radius(grid: Grid, omega: float) -> float:
    return math.sqrt(omega * grid.spec.area / math.pi)


def ic_disc_indicator(grid: Grid, omega: float) -> np.ndarray:
    """Characteristic function of the centred disc of area ``omega |Omega|``."""
    r0 = disc_radius(grid, omega)
    if r0 >= min(grid.spec.X, grid.spec.Y):
        raise DiscTooLarge(f"disc radius {r0:.4f} does not fit in the box")
    X, Y = grid.mesh
    return (X**2 + Y**2 <= r0**2).astype(float)


def ic_tanh_disc(grid: Grid, omega: float, eps: float, r_shift: float = 0.1) -> np.ndarray:
    """Smoothed disc ``0.5 + 0.5 tanh((r0 - r) / (eps/3))``, ``r0`` enlarged by ``r_shift``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    r0 = disc_radius(grid, omega) + r_shift
    X, Y = grid.mesh
    r = np.hypot(X, Y)
    return 0.5 + 0.5 * np.tanh((r0 - r) / (eps / 3))


def ic_block_random(grid: Grid, ratio: int, seed: int) -> np.ndarray:
    """Uniform ``[0, 1)`` noise held constant on ``ratio x ratio`` blocks."""
    Nx, Ny = grid.shape
    if ratio < 1 or Nx % ratio or Ny % ratio:
        raise RatioMismatch(f"ratio {ratio} does not divide grid {Nx}x{Ny}")
    rng = np.random.default_rng(seed)
    coarse = rng.random((Nx // ratio, Ny // ratio))
    return np.repeat(np.repeat(coarse, ratio, axis=0), ratio, axis=1)


# -- temporal convergence ------------------------------------------------------


def _steps_for(T: float, tau: float) -> int:
    n = round(T / tau)
    if n < 1 or abs(n * tau - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not a multiple of tau={tau}")
    return n


def convergence_table(
    simulate: Callable[[float, int], np.ndarray],
    taus: Sequence[float],
    T: float,
    reference: np.ndarray,
    grid: Grid,
) -> list[ConvergenceRow]:
    """Errors against ``reference`` at time ``T`` and successive log2 rates.

    ``simulate(tau, nsteps)`` returns the state after ``nsteps`` steps of size
    ``tau``. Rates compare consecutive rows, so ``taus`` should be halved each
    time for the rate to mean an order.
    """
    ref_norm = grid.l2_norm(reference)
    rows: list[ConvergenceRow] = []
    for tau in taus:
        err = grid.l2_norm(simulate(tau, _steps_for(T, tau)) - reference)
        rate = None
        if rows:
            prev = rows[-1]
            rate = math.log(prev.error / err, prev.tau / tau) if err > 0 else math.inf
        rows.append(ConvergenceRow(tau, err, rate, err / ref_norm if ref_norm else None))
    return rows


def convergence_study(
    grid: Grid,
    params: ModelParams,
    taus: Sequence[float],
    tau_bench: float,
    T: float,
    kappa_h: float = 2000.0,
    beta_h: float = 2.0,
    r_shift: float = 0.1,
) -> list[ConvergenceRow]:
    """Fixed-horizon study from the smoothed disc against a small-step benchmark."""
    if not tau_bench < min(taus):
        raise ValueError("benchmark step must be smaller than every tested step")
    phi0 = ic_tanh_disc(grid, params.omega, params.eps, r_shift)

    def simulate(tau: float, nsteps: int) -> np.ndarray:
        sp = SolverParams(tau=tau, kappa_h=kappa_h, beta_h=beta_h, enforce_stability=False)
        return Solver(grid, params, sp).advance(phi0, nsteps)

    bench = simulate(tau_bench, _steps_for(T, tau_bench))
    return convergence_table(simulate, taus, T, bench, grid)


def halved_taus(start: float = 1e-1, stop: float = 1.5625e-3) -> list[float]:
    taus = [start]
    while taus[-1] / 2 >= stop * (1 - 1e-12):
        taus.append(taus[-1] / 2)
    return taus


# -- disc diagnostics ------------------------------------------------------------


def _row_index(coords: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(coords - value)))


def cross_section(grid: Grid, phi: np.ndarray, axis_value: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Values along the grid line ``y`` nearest ``axis_value``: ``(x, phi(x, y))``."""
    phi = grid.check(phi)
    j = _row_index(grid.y, axis_value)
    return grid.x.copy(), phi[:, j].copy()


def tanh_profile(r: np.ndarray, r_star: float, eps: float) -> np.ndarray:
    return 0.5 + 0.5 * np.tanh((r_star - r) / (eps / 3))


def fit_interface_radius(r: np.ndarray, values: np.ndarray, eps: float) -> tuple[float, float]:
    """Radius minimizing the max misfit to the tanh profile: ``(r_star, misfit)``."""
    mid = (values > 0.02) & (values < 0.98)
    if mid.any():
        # invert the profile point by point for a starting bracket
        guesses = r[mid] + (eps / 3) * np.arctanh(2 * values[mid] - 1)
        lo, hi = guesses.min() - eps, guesses.max() + eps
    else:
        lo, hi = 0.0, float(r.max())

    def misfit(rs: float) -> float:
        return float(np.max(np.abs(values - tanh_profile(r, rs, eps))))

    res = optimize.minimize_scalar(misfit, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    # bounded Brent stops near sqrt(machine eps) relative; polish with golden section
    step = max(1e-6, 1e-6 * abs(res.x))
    a, b, c = res.x - step, res.x, res.x + step
    if misfit(b) < min(misfit(a), misfit(c)):
        res = optimize.minimize_scalar(misfit, bracket=(a, b, c), method="golden", options={"xtol": 1e-15})
    return float(res.x), float(res.fun)


def tanh_profile_deviation(
    grid: Grid, phi: np.ndarray, eps: float, radial_tol: float = 1e-2
) -> tuple[float, float]:
    """Far-field deviation from the pure phases and misfit to a tanh profile.

    Returns ``(far_field_dev, fit_err)``. The interface radius comes from a
    fit of the ``y = 0`` cross-section; the far field is every grid point more
    than ``3 eps`` from that radius, where ``phi`` should be 1 inside and 0
    outside.
    """
    phi = grid.check(phi)
    x, row = cross_section(grid, phi, 0.0)
    col = phi[_row_index(grid.x, 0.0), :]
    if col.shape == row.shape:
        gap = float(np.max(np.abs(row - col)))
        if gap > radial_tol:
            warnings.warn(f"field is not radially symmetric (row/column gap {gap:.2e})", NotRadial)
    r_line = np.abs(x)
    r_star, fit_err = fit_interface_radius(r_line, row, eps)
    X, Y = grid.mesh
    r = np.hypot(X, Y)
    inside = r < r_star - 3 * eps
    outside = r > r_star + 3 * eps
    dev = 0.0
    if inside.any():
        dev = max(dev, float(np.max(np.abs(1.0 - phi[inside]))))
    if outside.any():
        dev = max(dev, float(np.max(np.abs(phi[outside]))))
    return dev, fit_err


# -- bubbles ------------------------------------------------------------------------

_FOUR = ndimage.generate_binary_structure(2, 1)


def count_bubbles(phi: np.ndarray, threshold: float = 0.5) -> int:
    """Connected components of ``{phi > threshold}`` on the periodic grid.

    Components are labelled with 4-connectivity, then labels touching across
    the wrap-around edges are merged with a small union-find.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    mask = np.asarray(phi) > threshold
    labels, n = ndimage.label(mask, structure=_FOUR)
    if n == 0:
        return 0
    parent = list(range(n + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a_edge, b_edge in ((labels[0, :], labels[-1, :]), (labels[:, 0], labels[:, -1])):
        both = (a_edge > 0) & (b_edge > 0)
        for a, b in zip(a_edge[both], b_edge[both]):
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[ra] = rb
    return len({find(k) for k in range(1, n + 1)})


def modal_count(counts: Sequence[int]) -> int:
    """Most frequent count; ties go to the smaller value."""
    tally = Counter(counts)
    best = max(tally.values())
    return min(c for c, k in tally.items() if k == best)


def fit_power_law(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares line through ``(log gamma, log count)``: ``(exponent, prefactor)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points")
    if np.any(pts <= 0):
        raise ValueError("power-law fit needs positive data")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise DegenerateFit("all abscissae are equal")
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(math.exp(intercept))
