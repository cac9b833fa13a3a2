import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DenseOps, brute_dft, smooth_field
from pacok.spectral import Field, Grid, GridMismatch, GridSpec, SymmetryViolation


def rect(Nx, Ny, X=1.0, Y=1.0):
    return Grid(GridSpec(X, Y, Nx, Ny))


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, 1.0, 7, 8)
    with pytest.raises(ValueError):
        GridSpec(1.0, 1.0, 2, 8)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 8, 8)


def test_nodes_and_spacing():
    g = rect(8, 4, X=2.0, Y=0.5)
    assert g.spec.hx == 0.5 and g.spec.hy == 0.25
    assert g.x[0] == pytest.approx(-2.0 + 0.5)
    assert g.x[-1] == pytest.approx(2.0)
    assert g.y[-1] == pytest.approx(0.5)


@pytest.mark.parametrize("shape", [(4, 4), (8, 6), (6, 8)])
def test_dft_matches_direct_sum(shape, rng):
    g = rect(*shape, X=1.3, Y=0.7)
    f = rng.normal(size=g.shape)
    spec = g.dft(f)
    for (k, l), c in brute_dft(g, f).items():
        assert spec.mode(k, l) == pytest.approx(c, abs=1e-13)


def test_cos_mode_coefficients():
    g = Grid.square(16)
    X, _ = g.mesh
    s = g.dft(np.cos(np.pi * X))
    # only the +-1 modes carry energy; Nyquist convention puts no mode at k = -8
    assert s.mode(1, 0) == pytest.approx(0.5, abs=1e-14)
    assert s.mode(-1, 0) == pytest.approx(0.5, abs=1e-14)
    coeffs = s.coeffs.copy()
    coeffs[g.mode_position(1, 0)] = 0
    coeffs[g.mode_position(-1, 0)] = 0
    assert np.max(np.abs(coeffs)) < 1e-14


@pytest.mark.parametrize("N", [8, 16, 64])
def test_round_trip(N, rng):
    g = Grid.square(N)
    f = rng.normal(size=g.shape)
    assert np.max(np.abs(g.idft(g.dft(f)) - f)) < 1e-12
    assert np.max(np.abs(g.ifft_real(g.fft(f)) - f)) < 1e-12


def test_idft_rejects_asymmetric_spectrum():
    g = Grid.square(8)
    c = np.zeros(g.shape, dtype=complex)
    c[g.mode_position(1, 0)] = 1.0
    with pytest.raises(SymmetryViolation):
        g.idft(c)


def test_shape_checks(rng):
    g = Grid.square(8)
    with pytest.raises(GridMismatch):
        g.laplacian(np.zeros((8, 6)))
    with pytest.raises(GridMismatch):
        Field(g.spec, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        Field(g.spec, np.full((8, 8), np.nan))


def test_operators_match_dense_matrices(rng):
    g = rect(12, 8, X=1.0, Y=1.5)
    ops = DenseOps(g)
    f = rng.normal(size=g.shape)
    assert np.max(np.abs(g.laplacian(f) - ops.lap(f))) < 1e-9
    assert np.max(np.abs(g.inv_laplacian(f) - ops.inv_lap(f))) < 1e-11
    gx, gy = g.gradient(f)
    ox, oy = ops.grad(f)
    assert np.max(np.abs(gx - ox)) < 1e-11
    assert np.max(np.abs(gy - oy)) < 1e-11


def test_spectral_accuracy_on_smooth_function():
    g = Grid.square(32)
    X, Y = g.mesh
    f = np.exp(np.sin(np.pi * X) + np.cos(np.pi * Y))
    lap = np.pi**2 * f * (np.cos(np.pi * X) ** 2 - np.sin(np.pi * X) + np.sin(np.pi * Y) ** 2 - np.cos(np.pi * Y))
    assert np.max(np.abs(g.laplacian(f) - lap)) < 1e-8


def test_integration_by_parts(rng):
    g = Grid.square(16)
    f, h = rng.normal(size=(2, *g.shape))
    # <Delta f, h> = <f, Delta h> holds for every grid function
    assert g.inner(g.laplacian(f), h) == pytest.approx(g.inner(f, g.laplacian(h)), rel=1e-12)
    # <Delta f, h> = -<grad f, grad h> needs the Nyquist mode absent
    f, h = smooth_field(g, rng, modes=5), smooth_field(g, rng, modes=5)
    gf, gh = g.gradient(f), g.gradient(h)
    lhs = g.inner(g.laplacian(f), h)
    rhs = -(g.inner(gf[0], gh[0]) + g.inner(gf[1], gh[1]))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    # divergence of gradient is the band-limited Laplacian
    assert np.max(np.abs(g.divergence(*gf) - g.laplacian(f))) < 1e-10


def test_dirichlet_form_keeps_nyquist():
    g = Grid.square(8)
    X, _ = g.mesh
    f = np.cos(4 * np.pi * X)  # the x-Nyquist mode
    gx, _ = g.gradient(f)
    assert np.max(np.abs(gx)) < 1e-12
    assert -g.inner(g.laplacian(f), f) == pytest.approx(16 * np.pi**2 * g.inner(f, f))
    assert g.dirichlet_from_hat(g.fft(f)) == pytest.approx(16 * np.pi**2 * g.inner(f, f))


def test_inv_laplacian_properties(rng):
    g = rect(16, 8, X=1.0, Y=0.5)
    f = rng.normal(size=g.shape)
    u = g.inv_laplacian(f)
    assert abs(g.mean(u)) < 1e-14
    assert np.max(np.abs(-g.laplacian(u) - (f - f.mean()))) < 1e-10
    assert np.max(np.abs(g.inv_laplacian(-g.laplacian(f)) - (f - f.mean()))) < 1e-10
    assert np.max(np.abs(g.inv_laplacian(np.full(g.shape, 3.0)))) < 1e-15


def test_inv_sqrt_norm_of_cos():
    g = Grid.square(32)
    X, _ = g.mesh
    f = np.cos(np.pi * X)
    # (-Delta)^{-1} cos(pi x) = cos(pi x) / pi^2 and ||cos||^2 = 2 on [-1,1]^2
    assert g.inv_sqrt_laplacian_norm_sq(f) == pytest.approx(2 / np.pi**2, rel=1e-13)
    assert g.inv_sqrt_norm_sq_from_hat(g.fft(f)) == pytest.approx(2 / np.pi**2, rel=1e-13)


def test_parseval(rng):
    g = rect(16, 12, X=0.8, Y=1.1)
    f = rng.normal(size=g.shape)
    coeffs = g.dft(f).coeffs
    assert g.inner(f, f) == pytest.approx(g.spec.area * np.sum(np.abs(coeffs) ** 2), rel=1e-12)


def test_hs_norm():
    g = Grid.square(16)
    X, Y = g.mesh
    f = np.cos(np.pi * (2 * X + Y))
    # modes (2,1) and (-2,-1), each with |c|^2 = 1/4 and weight 1 + 5^s
    for s in (0.0, 1.0, 2.0):
        assert g.hs_norm(f, s) == pytest.approx(math.sqrt(0.5 * (1 + 5.0**s)), rel=1e-13)


def test_norms(rng):
    g = Grid.square(8)
    f = rng.normal(size=g.shape)
    l2, linf = g.norms(f)
    assert l2 == pytest.approx(math.sqrt(g.cell_area * np.sum(f * f)))
    assert linf == np.max(np.abs(f))


@settings(max_examples=30, deadline=None)
@given(
    nx=st.sampled_from([4, 6, 8, 10]),
    ny=st.sampled_from([4, 8, 12]),
    X=st.floats(0.2, 5.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_property_round_trip_and_inverse(nx, ny, X, seed):
    g = Grid(GridSpec(X, 1.0, nx, ny))
    f = np.random.default_rng(seed).normal(size=g.shape)
    assert np.max(np.abs(g.idft(g.dft(f)) - f)) < 1e-12
    u = g.inv_laplacian(f)
    assert abs(np.mean(u)) < 1e-12
    resid = -g.laplacian(u) - (f - f.mean())
    assert np.max(np.abs(resid)) < 1e-10 * max(1.0, np.max(np.abs(f)))
    assert g.inner(f, g.laplacian(f)) <= 1e-12
