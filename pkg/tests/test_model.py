import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DenseOps, smooth_field
from pacok import model
from pacok.model import ModelParams
from pacok.spectral import Grid


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(eps=0.0, gamma=1.0)
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, gamma=-1.0)
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, gamma=1.0, omega=1.5)
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, gamma=1.0, M=0.0)
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, gamma=1.0, indicator="cubic")


def test_pointwise_values():
    assert model.w_val(0.5) == pytest.approx(18 / 16)
    assert model.w_val(0.0) == model.w_val(1.0) == 0.0
    assert model.f_val(0.5) == pytest.approx(0.5)
    assert model.f_prime(0.5) == pytest.approx(15 / 8)
    # extensions
    assert model.w_val(-0.5) == pytest.approx(18 * 0.25)
    assert model.w_val(2.0) == pytest.approx(18.0)
    assert model.w_prime(-1.0) == pytest.approx(-36.0)
    assert model.f_val(-3.0) == 0.0 and model.f_val(4.0) == 1.0
    assert model.f_prime(1.5) == 0.0 and model.f_second(-0.1) == 0.0


def test_derivatives_by_finite_differences():
    s = np.linspace(-0.7, 1.7, 2001)
    d = 1e-6
    for val, der in ((model.w_val, model.w_prime), (model.w_prime, model.w_second),
                     (model.f_val, model.f_prime), (model.f_prime, model.f_second)):
        fd = (val(s + d) - val(s - d)) / (2 * d)
        assert np.max(np.abs(fd - der(s))) < 1e-5


def test_extension_is_continuous_at_glue_points():
    for fn in (model.w_val, model.w_prime, model.w_second, model.f_val, model.f_prime, model.f_second):
        for s0 in (0.0, 1.0):
            left, right = fn(s0 - 1e-12), fn(s0 + 1e-12)
            assert float(left) == pytest.approx(float(right), abs=1e-9)


def test_bounds_by_dense_sampling():
    s = np.linspace(-2, 3, 1_000_001)
    b = model.potential_bounds("quintic")
    assert np.max(np.abs(model.w_second(s))) == pytest.approx(b.L_W, rel=1e-9)
    assert np.max(np.abs(model.f_second(s))) == pytest.approx(b.L_f, rel=1e-9)
    assert np.max(np.abs(model.f_prime(s))) == pytest.approx(b.L_p, rel=1e-9)
    assert b.L_p == 15 / 8
    assert b.L_f == pytest.approx(10 * math.sqrt(3) / 3)
    lin = model.potential_bounds("linear")
    assert (lin.L_p, lin.L_f) == (1.0, 0.0)


def test_lipschitz_over_random_pairs(rng):
    a, b = rng.uniform(-1, 2, size=(2, 100_000))
    bounds = model.potential_bounds()
    slack = 1 + 1e-12
    assert np.all(np.abs(model.f_val(a) - model.f_val(b)) <= bounds.L_p * np.abs(a - b) * slack)
    assert np.all(np.abs(model.f_prime(a) - model.f_prime(b)) <= bounds.L_f * np.abs(a - b) * slack)
    assert np.all(np.abs(model.w_prime(a) - model.w_prime(b)) <= bounds.L_W * np.abs(a - b) * slack)


@settings(max_examples=200)
@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_indicator_range_and_monotone(s):
    assert 0.0 <= float(model.f_val(s)) <= 1.0
    assert float(model.f_prime(s)) >= 0.0
    assert float(model.w_val(s)) >= 0.0


def test_energy_of_pure_phases():
    g = Grid.square(16)
    p = ModelParams(eps=0.1, gamma=50.0)
    zero = model.energy(g, np.zeros(g.shape), p)
    # only the penalty survives: M/2 (omega |Omega|)^2 = 500 * 0.6^2
    assert zero.total == pytest.approx(180.0)
    assert zero.volume_residual == pytest.approx(-0.6)
    one = model.energy(g, np.ones(g.shape), p)
    assert one.total == pytest.approx(500 * 3.4**2)
    assert one.nonlocal_ == 0.0 and one.interface == 0.0


def test_energy_matches_dense_oracle(rng):
    g = Grid.square(8)
    ops = DenseOps(g)
    p = ModelParams(eps=0.2, gamma=30.0, omega=0.3, M=50.0)
    phi = rng.uniform(-0.2, 1.2, size=g.shape)
    e = model.energy(g, phi, p)
    lap = ops.lap(phi)
    interface = -0.5 * p.eps * g.cell_area * np.sum(lap * phi)
    well = g.cell_area * np.sum(model.w_val(phi)) / p.eps
    fphi = model.f_val(phi)
    u = ops.inv_lap(fphi - p.omega)
    nonloc = 0.5 * p.gamma * g.cell_area * np.sum(u * (fphi - p.omega))
    resid = g.cell_area * np.sum(fphi) - p.omega * 4.0
    assert e.interface == pytest.approx(interface, rel=1e-11)
    assert e.doublewell == pytest.approx(well, rel=1e-13)
    assert e.nonlocal_ == pytest.approx(nonloc, rel=1e-11)
    assert e.penalty == pytest.approx(0.5 * p.M * resid**2, rel=1e-12)
    assert e.total == pytest.approx(e.interface + e.doublewell + e.nonlocal_ + e.penalty)

    tension, nonlocal_, volume = model.forces(g, phi, p)
    assert np.max(np.abs(tension - (p.eps * lap - model.w_prime(phi) / p.eps))) < 1e-9
    assert np.max(np.abs(nonlocal_ + p.gamma * u * model.f_prime(phi))) < 1e-10
    assert np.max(np.abs(volume + p.M * resid * model.f_prime(phi))) < 1e-10


@pytest.mark.parametrize("indicator", ["quintic", "linear"])
def test_forces_are_minus_energy_gradient(indicator, rng):
    g = Grid.square(16)
    p = ModelParams(eps=0.15, gamma=100.0, indicator=indicator)
    phi = smooth_field(g, rng, modes=3, offset=0.4)
    psi = smooth_field(g, rng, modes=3, offset=0.0)
    t = 1e-6
    e0 = model.energy(g, phi, p).total
    e1 = model.energy(g, phi + t * psi, p).total
    directional = (e1 - e0) / t
    force = sum(model.forces(g, phi, p))
    predicted = -g.inner(force, psi)
    assert directional == pytest.approx(predicted, rel=1e-4)


def test_linear_indicator():
    g = Grid.square(8)
    p = ModelParams(eps=0.1, gamma=1.0, indicator="linear")
    phi = np.full(g.shape, 0.25)
    assert model.volume_residual(g, phi, p) == pytest.approx(0.4)
