"""Independent reference implementations used as test oracles.

Nothing here calls into the FFT paths of the package: transforms are direct
double sums and derivatives come from dense Fourier differentiation matrices
built from their closed forms.
"""

from __future__ import annotations

import numpy as np
import pytest

from pacok.spectral import Grid


def brute_dft(grid: Grid, f: np.ndarray) -> dict[tuple[int, int], complex]:
    """Collocation coefficients by direct O(N^4) summation, keyed by signed mode."""
    Nx, Ny = grid.shape
    X, Y = grid.spec.X, grid.spec.Y
    out = {}
    for k in range(-Nx // 2 + 1, Nx // 2 + 1):
        ex = np.exp(-1j * k * np.pi * grid.x / X)
        for l in range(-Ny // 2 + 1, Ny // 2 + 1):
            ey = np.exp(-1j * l * np.pi * grid.y / Y)
            out[(k, l)] = complex(np.sum(f * ex[:, None] * ey[None, :]) / (Nx * Ny))
    return out


def diff_matrix_1(n: int, half_width: float) -> np.ndarray:
    """First-derivative Fourier matrix on n periodic nodes (Nyquist dropped)."""
    h = 2 * np.pi / n
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        D = 0.5 * (-1.0) ** d / np.tan(d * h / 2)
    D[d == 0] = 0.0
    return D * (np.pi / half_width)


def diff_matrix_2(n: int, half_width: float) -> np.ndarray:
    """Second-derivative Fourier matrix on n periodic nodes (Nyquist kept)."""
    h = 2 * np.pi / n
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        D = -0.5 * (-1.0) ** d / np.sin(d * h / 2) ** 2
    D[d == 0] = -np.pi**2 / (3 * h**2) - 1.0 / 6.0
    return D * (np.pi / half_width) ** 2


class DenseOps:
    """Dense-matrix Laplacian and its pseudo-inverse on a small grid."""

    def __init__(self, grid: Grid):
        Nx, Ny = grid.shape
        self.grid = grid
        self.D1x = diff_matrix_1(Nx, grid.spec.X)
        self.D1y = diff_matrix_1(Ny, grid.spec.Y)
        D2x = diff_matrix_2(Nx, grid.spec.X)
        D2y = diff_matrix_2(Ny, grid.spec.Y)
        # row-major flattening: index i*Ny + j
        self.L = np.kron(D2x, np.eye(Ny)) + np.kron(np.eye(Nx), D2y)
        self.L_pinv = np.linalg.pinv(-self.L)

    def lap(self, f):
        return (self.L @ f.ravel()).reshape(f.shape)

    def inv_lap(self, f):
        g = f - f.mean()
        return (self.L_pinv @ g.ravel()).reshape(f.shape)

    def grad(self, f):
        return self.D1x @ f, f @ self.D1y.T


def smooth_field(grid: Grid, rng: np.random.Generator, modes: int = 3, offset: float = 0.5, amp: float = 0.2):
    """Random trigonometric polynomial with |k|, |l| <= modes (well below Nyquist)."""
    X, Y = grid.mesh
    f = np.full(grid.shape, offset)
    for k in range(modes + 1):
        for l in range(-modes, modes + 1):
            a, b = rng.normal(size=2) * amp / (1 + k * k + l * l)
            arg = np.pi * (k * X / grid.spec.X + l * Y / grid.spec.Y)
            f += a * np.cos(arg) + b * np.sin(arg)
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
