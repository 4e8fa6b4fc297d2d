"""Trigonometric-polynomial layer: arithmetic, calculus, difference and
derivative equations along a rotation, payload round trips."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paratori.errors import NonZeroAverage, SmallDivisorUnderflow
from paratori.fourier import (FourierSeries, diophantine_margin, reciprocal,
                              solve_sd_flow, solve_sd_map)

from conftest import GOLDEN


def random_series(rng, dim, cut, n_modes=5, scale=1.0, k_max=None):
    k_max = cut if k_max is None else k_max
    f = FourierSeries.zero(dim, cut)
    for _ in range(n_modes):
        mode = tuple(int(rng.integers(-k_max, k_max + 1)) for _ in range(dim))
        if all(m == 0 for m in mode):
            continue
        z = scale * (rng.standard_normal() + 1j * rng.standard_normal())
        f = f + FourierSeries.from_modes({mode: z}, dim, cut)
    return f


def test_constant_and_average():
    f = FourierSeries.constant(3.5, 2, 4)
    assert f.average() == 3.5
    assert f.oscillatory().coeff_norm() == 0.0
    g = f + FourierSeries.from_modes({(1, 0): 0.25}, 2, 4)
    assert abs(g.average() - 3.5) < 1e-15
    assert abs(g.oscillatory().coeff_norm() - 0.5) < 1e-15


def test_eval_matches_cosine():
    # from_modes with the conjugate completion: {k: a/2} represents a*cos
    f = FourierSeries.from_modes({(3,): 0.5}, 1, 8)
    th = np.array([0.17])
    assert abs(f.eval(th) - np.cos(2 * np.pi * 3 * 0.17)) < 1e-14


def test_grid_round_trip():
    rng = np.random.default_rng(7)
    f = random_series(rng, 2, 6)
    vals = f.values_on_grid(16)
    g = FourierSeries.from_grid(vals, 6)
    assert (f - g).coeff_norm() < 1e-13 * max(1.0, f.coeff_norm())


def test_product_against_grid():
    # mode content kept inside half the box so the product does not truncate
    rng = np.random.default_rng(11)
    f = random_series(rng, 1, 12, k_max=6) + 1.0
    g = random_series(rng, 1, 12, k_max=6) + 2.0
    n = 64
    prod = f * g
    lhs = prod.values_on_grid(n)
    rhs = f.values_on_grid(n) * g.values_on_grid(n)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_from_function_quadrature():
    f = FourierSeries.from_function(
        lambda th: np.exp(np.cos(2 * np.pi * th[..., 0])), 1, 20)
    for t in (0.0, 0.31, 0.77):
        want = np.exp(np.cos(2 * np.pi * t))
        assert abs(f.eval(np.array([t])) - want) < 1e-12


def test_diff_is_exact_on_modes():
    f = FourierSeries.from_modes({(2, -1): 0.3 + 0.1j}, 2, 4)
    df = f.diff(0)
    th = np.array([0.2, 0.6])
    h = 1e-6
    fd = (f.eval(np.array([0.2 + h, 0.6])) - f.eval(np.array([0.2 - h, 0.6]))) / (2 * h)
    assert abs(df.eval(th) - fd) < 1e-7


def test_shift_translates_argument():
    rng = np.random.default_rng(3)
    f = random_series(rng, 1, 8)
    g = f.shift(np.array([GOLDEN]))
    th = np.array([0.41])
    assert abs(g.eval(th) - f.eval(th + GOLDEN)) < 1e-13


def test_eval_accepts_complex_angles():
    f = FourierSeries.from_modes({(1,): 0.5}, 1, 4)
    z = np.array([0.1 + 0.05j])
    want = np.cos(2 * np.pi * z[0])
    assert abs(f.eval(z) - want) < 1e-13


def test_difference_equation_residual():
    # phi(theta + omega) - phi(theta) = h, checked on a fine grid
    rng = np.random.default_rng(23)
    h = random_series(rng, 1, 16)
    h = h - h.average()
    phi = solve_sd_map(h, (GOLDEN,))
    resid = phi.shift(np.array([GOLDEN])) - phi - h
    assert resid.sup_grid(256) < 1e-12 * max(1.0, h.sup_grid(256))


def test_derivative_equation_residual():
    freqs = (GOLDEN, np.sqrt(2))
    rng = np.random.default_rng(29)
    h = random_series(rng, 2, 8)
    h = h - h.average()
    phi = solve_sd_flow(h, freqs)
    resid = phi.diff(0) * freqs[0] + phi.diff(1) * freqs[1] - h
    assert resid.sup_grid(128) < 1e-10 * max(1.0, h.sup_grid(128))


def test_difference_equation_rejects_average():
    h = FourierSeries.constant(0.2, 1, 4)
    with pytest.raises(NonZeroAverage):
        solve_sd_map(h, (GOLDEN,))


def test_resonant_rotation_underflows():
    h = FourierSeries.from_modes({(2,): 0.5}, 1, 4)
    with pytest.raises(SmallDivisorUnderflow) as ei:
        solve_sd_map(h, (0.5,))
    err = ei.value
    assert tuple(err.mode) in ((2,), (-2,))
    assert err.magnitude < err.floor


def test_flow_zero_frequency_mode_underflows():
    # mode orthogonal to the frequency vector: k . freqs = 0
    h = FourierSeries.from_modes({(0, 1): 0.5}, 2, 4)
    with pytest.raises(SmallDivisorUnderflow):
        solve_sd_flow(h, (GOLDEN, 0.0))


def test_diophantine_margin_orders():
    good, _ = diophantine_margin((GOLDEN,), 32, kind="map")
    near, mode = diophantine_margin((0.5 + 1e-9,), 32, kind="map")
    assert good > 1e-3
    assert near < 1e-7
    assert mode[0] % 2 == 0  # an even multiple of the near-half frequency
    margin, _ = diophantine_margin((GOLDEN, np.sqrt(2)), 16, kind="flow")
    assert margin > 0


def test_reciprocal_multiplies_to_one():
    f = FourierSeries.from_modes({(1,): 0.05}, 1, 12) + 1.0
    g = reciprocal(f)
    assert (f * g - FourierSeries.constant(1.0, 1, 12)).sup_grid(64) < 1e-12


def test_payload_round_trip():
    rng = np.random.default_rng(5)
    f = random_series(rng, 2, 5) + 0.7
    p = f.to_payload()
    g = FourierSeries.from_payload(p)
    assert (f - g).coeff_norm() < 1e-15
    assert p["dim"] == 2 and p["cut"] == 5
    # half-spectrum storage: no mode and its negation both present
    seen = {tuple(m[0]) for m in p["modes"]}
    for mode in seen:
        if any(mode):
            assert tuple(-x for x in mode) not in seen


def test_real_series_has_no_symmetry_defect():
    rng = np.random.default_rng(13)
    f = random_series(rng, 1, 6)
    assert f.symmetry_defect() < 1e-15
    vals = f.values_on_grid(32)
    assert np.max(np.abs(vals.imag)) < 1e-13


@given(st.integers(-4, 4), st.integers(-4, 4),
       st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=40, deadline=None)
def test_shift_composes(k1, k2, d1, d2):
    f = FourierSeries.from_modes({(k1, k2): 0.3 + 0.2j}, 2, 4)
    a = f.shift(np.array([d1, d2])).shift(np.array([d2, d1]))
    b = f.shift(np.array([d1 + d2, d1 + d2]))
    assert (a - b).coeff_norm() < 1e-12


@given(st.floats(0.05, 0.95))
@settings(max_examples=25, deadline=None)
def test_difference_solver_is_linear(scale):
    h = FourierSeries.from_modes({(1,): 0.25, (3,): -0.1}, 1, 8)
    a = solve_sd_map(h * scale, (GOLDEN,))
    b = solve_sd_map(h, (GOLDEN,)) * scale
    assert (a - b).coeff_norm() < 1e-13
