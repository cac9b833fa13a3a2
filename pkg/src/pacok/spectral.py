"""Periodic 2D collocation grid and Fourier spectral operators.

The domain is ``[-X, X) x [-Y, Y)`` sampled at ``x_i = -X + i*h_x`` for
``i = 1..Nx`` (and likewise in y). Grid functions are plain ``numpy`` arrays
of shape ``(Nx, Ny)`` indexed ``[i - 1, j - 1]``.

Fourier coefficients follow the collocation convention

    f_hat[k, l] = 1/(Nx*Ny) * sum_ij f_ij exp(-i k pi x_i / X) exp(-i l pi y_j / Y)

with ``-Nx/2 + 1 <= k <= Nx/2``. Because the nodes start at ``-X + h_x``
rather than 0, these coefficients differ from a raw FFT by a per-mode phase;
:meth:`Grid.dft` and :meth:`Grid.idft` apply it. Every differential operator
is diagonal in Fourier space, so the operators skip the phase and work on the
raw (unnormalized) real FFT directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class GridMismatch(ValueError):
    """Two grid functions (or a grid function and a grid) disagree in shape."""


class SymmetryViolation(ValueError):
    """An inverse transform produced a non-negligible imaginary part."""


IMAG_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Half-widths and resolution of the periodic box."""

    X: float
    Y: float
    Nx: int
    Ny: int

    def __post_init__(self):
        for name in ("Nx", "Ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {n}")
        if not (self.X > 0 and self.Y > 0):
            raise ValueError(f"half-widths must be positive, got X={self.X}, Y={self.Y}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def hx(self) -> float:
        return 2 * self.X / self.Nx

    @property
    def hy(self) -> float:
        return 2 * self.Y / self.Ny

    @property
    def area(self) -> float:
        return 4 * self.X * self.Y


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients of a grid function, stored in FFT order.

    ``coeffs[a, b]`` holds the mode ``(k, l) = (grid.kx_index[a], grid.ly_index[b])``;
    use :meth:`mode` to look up a coefficient by its signed index.
    """

    grid: "Grid"
    coeffs: np.ndarray

    def mode(self, k: int, l: int) -> complex:
        a, b = self.grid.mode_position(k, l)
        return complex(self.coeffs[a, b])


@dataclass(frozen=True)
class Field:
    """A grid function bundled with its grid (used at I/O boundaries)."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatch(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)


def _signed_index(n: int) -> np.ndarray:
    """Signed mode numbers in FFT order, Nyquist taken as +n/2."""
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    idx[n // 2] = n // 2
    return idx


class Grid:
    """Spectral operators on a :class:`GridSpec`.

    Instances cache their wavenumber tables; they hold no mutable state after
    construction, so one ``Grid`` may be shared across threads.
    """

    def __init__(self, spec: GridSpec, workers: int | None = None):
        self.spec = spec
        self.workers = workers
        self.kx_index = _signed_index(spec.Nx)
        self.ly_index = _signed_index(spec.Ny)
        kx = np.pi * self.kx_index / spec.X
        # rfft layout: last axis keeps the nonnegative modes 0..Ny/2 only
        ly = np.pi * np.arange(spec.Ny // 2 + 1) / spec.Y
        # second-derivative symbol keeps the Nyquist mode
        self.k2 = kx[:, None] ** 2 + ly[None, :] ** 2
        self.inv_k2 = np.zeros_like(self.k2)
        nonzero = self.k2 > 0
        self.inv_k2[nonzero] = 1.0 / self.k2[nonzero]
        # first-derivative symbols zero the Nyquist mode to keep results real
        kx_odd = kx.copy()
        kx_odd[spec.Nx // 2] = 0.0
        ly_odd = ly.copy()
        ly_odd[-1] = 0.0
        self.dx_symbol = 1j * kx_odd[:, None] * np.ones((1, ly.size))
        self.dy_symbol = 1j * np.ones((spec.Nx, 1)) * ly_odd[None, :]
        # Parseval weights: interior half-spectrum columns stand for two modes
        self.parseval = np.full(ly.size, 2.0)
        self.parseval[0] = self.parseval[-1] = 1.0
        ix = np.arange(1, spec.Nx + 1)
        jy = np.arange(1, spec.Ny + 1)
        self.x = -spec.X + ix * spec.hx
        self.y = -spec.Y + jy * spec.hy
        # exp(-i k pi x_1 / X) etc.: maps raw FFT coefficients to collocation ones
        phase_x = np.exp(-1j * np.pi * self.kx_index * self.x[0] / spec.X)
        phase_y = np.exp(-1j * np.pi * self.ly_index * self.y[0] / spec.Y)
        self._phase = phase_x[:, None] * phase_y[None, :]

    @classmethod
    def square(cls, N: int, L: float = 1.0, **kwargs) -> "Grid":
        return cls(GridSpec(L, L, N, N), **kwargs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.spec.shape

    @property
    def cell_area(self) -> float:
        return self.spec.hx * self.spec.hy

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def mode_position(self, k: int, l: int) -> tuple[int, int]:
        """Array position of signed mode ``(k, l)`` in FFT order."""
        Nx, Ny = self.shape
        if not (-Nx // 2 < k <= Nx // 2 and -Ny // 2 < l <= Ny // 2):
            raise IndexError(f"mode ({k}, {l}) outside the resolved range")
        return k % Nx, l % Ny

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise GridMismatch(f"array shape {f.shape} != grid shape {self.shape}")
        return f

    # -- raw transforms -------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        """Unnormalized real FFT (half spectrum along y)."""
        return sfft.rfft2(f, workers=self.workers)

    def ifft_real(self, f_hat: np.ndarray) -> np.ndarray:
        return sfft.irfft2(f_hat, s=self.shape, workers=self.workers)

    def _apply(self, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        f = self.check(f)
        return self.ifft_real(symbol * self.fft(f))

    # -- collocation transforms -------------------------------------------

    def dft(self, f: np.ndarray) -> Spectrum:
        f = self.check(f)
        coeffs = sfft.fft2(f, workers=self.workers) * self._phase / (self.shape[0] * self.shape[1])
        return Spectrum(self, coeffs)

    def idft(self, s: Spectrum | np.ndarray) -> np.ndarray:
        coeffs = s.coeffs if isinstance(s, Spectrum) else np.asarray(s)
        if coeffs.shape != self.shape:
            raise GridMismatch(f"spectrum shape {coeffs.shape} != grid shape {self.shape}")
        raw = coeffs / self._phase * (self.shape[0] * self.shape[1])
        out = sfft.ifft2(raw, workers=self.workers)
        residue = np.max(np.abs(out.imag)) if out.size else 0.0
        if residue > IMAG_TOL:
            raise SymmetryViolation(f"imaginary residue {residue:.3e} exceeds {IMAG_TOL}")
        return out.real

    # -- operators ------------------------------------------------------

    def gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        f_hat = self.fft(self.check(f))
        return self.ifft_real(self.dx_symbol * f_hat), self.ifft_real(self.dy_symbol * f_hat)

    def divergence(self, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
        return self._apply(gx, self.dx_symbol) + self._apply(gy, self.dy_symbol)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self._apply(f, -self.k2)

    def inv_laplacian(self, f: np.ndarray) -> np.ndarray:
        """``(-Delta_h)^{-1}`` with the zero mode removed; output has zero mean."""
        return self._apply(f, self.inv_k2)

    # -- inner products and norms -------------------------------------------

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        f, g = self.check(f), self.check(g)
        return float(self.cell_area * np.sum(f * g))

    def integral(self, f: np.ndarray) -> float:
        return float(self.cell_area * np.sum(self.check(f)))

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(self.check(f)))

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f)))

    def linf_norm(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(self.check(f))))

    def norms(self, f: np.ndarray) -> tuple[float, float]:
        return self.l2_norm(f), self.linf_norm(f)

    def hs_norm(self, f: np.ndarray, s: float) -> float:
        """Discrete H^s norm built from integer mode numbers (k, l)."""
        coeffs = self.dft(f).coeffs
        kk = self.kx_index[:, None] ** 2 + self.ly_index[None, :] ** 2
        weight = 1.0 + kk.astype(float) ** s
        return float(np.sqrt(np.sum(weight * np.abs(coeffs) ** 2)))

    def inv_sqrt_laplacian_norm_sq(self, f: np.ndarray) -> float:
        return self.inner(self.inv_laplacian(f), f)

    # Spectral-sum versions used in the hot path. With raw FFT coefficients
    # F, Parseval gives <f, g>_h = cell_area / (Nx Ny) * sum F conj(G).

    def _spectral_weight(self) -> float:
        return self.cell_area / (self.shape[0] * self.shape[1])

    def dirichlet_from_hat(self, f_hat: np.ndarray) -> float:
        """``-<Delta_h f, f>_h`` from the raw FFT of ``f``."""
        return float(self._spectral_weight() * np.sum(self.parseval * self.k2 * np.abs(f_hat) ** 2))

    def inv_sqrt_norm_sq_from_hat(self, f_hat: np.ndarray) -> float:
        """``<(-Delta_h)^{-1} f, f>_h`` from the raw FFT of ``f``."""
        return float(self._spectral_weight() * np.sum(self.parseval * self.inv_k2 * np.abs(f_hat) ** 2))
