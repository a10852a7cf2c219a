import math

import numpy as np
import pytest

from conftest import cosine_source
from passive_isp.continuation import (
    _quadrisect,
    cauchy_riemann_residual,
    characteristic_function,
    contour_winding,
    harmonic_measure,
    harmonic_measure_converged,
    n_h_for_margin,
    resonance_scan,
    sample_F_on_strip,
    shoot,
    strip_grid,
    strip_half_width,
    strip_margin,
    two_constants_check,
)
from passive_isp.exceptions import ContinuationError, SolverError, ValidationError
from passive_isp.forward import solve_helmholtz
from passive_isp.model import Grid, validate_medium, validate_source, well, zero_medium
from passive_isp.stability import eta_exponent


@pytest.fixture(scope="module")
def well_medium():
    return validate_medium(well(Grid(512).nodes, 0.25, 0.75, 3.0, 0.05), 0.5, 1e4)


def test_free_space_characteristic_function():
    medium = zero_medium(1024)
    k = np.array([1.0, 2.0 - 0.5j, 7.5 + 0.3j])
    w, dw = shoot(medium, k)
    assert np.allclose(w, -2j * k * np.exp(-1j * k), rtol=1e-8)
    assert np.allclose(dw, -2j * np.exp(-1j * k) * (1 - 1j * k), rtol=1e-8)
    # scalar path agrees with the batched one
    assert characteristic_function(medium, 1.0) == pytest.approx(complex(w[0]), rel=1e-12)
    with pytest.raises(SolverError):
        shoot(medium, [0.0])


@pytest.mark.parametrize("rect", [(0.5, 20, -1, -0.01), (0.5, 20, 0.01, 1)])
def test_free_space_has_no_resonances(rect):
    assert contour_winding(zero_medium(256), rect) == 0


def test_rectangle_checks():
    with pytest.raises(ValidationError):
        contour_winding(zero_medium(64), (-1, 1, -1, 1))
    with pytest.raises(ValidationError):
        contour_winding(zero_medium(64), (2, 1, -1, 0))


def test_well_resonances_agree_with_heat_map(well_medium):
    scan = resonance_scan(well_medium, (0.5, 6.5, -2, -0.01))
    assert scan.winding == len(scan.zeros) == 2
    for z in scan.zeros:
        assert abs(characteristic_function(well_medium, z)) <= 1e-8
    re, im = np.linspace(0.5, 4.0, 141), np.linspace(-2, -0.01, 80)
    grid = re[None, :] + 1j * im[:, None]
    vals = np.abs(characteristic_function(well_medium, grid) / grid)
    coarse = grid.flat[np.argmin(vals)]
    assert abs(coarse - scan.zeros[0]) < 0.05
    assert scan.strip_half_width_estimate == pytest.approx(abs(scan.zeros[0].imag))
    assert scan.to_dict()["winding"] == 2


@pytest.mark.parametrize("rect", [(0.5, 6.0, -1.7, -0.2), (1.1, 4.9, -1.3, -0.6), (2.0, 9.0, -1.9, 0.4)])
def test_winding_additivity(well_medium, rect):
    whole = contour_winding(well_medium, rect)
    parts = sum(contour_winding(well_medium, r) for r in _quadrisect(rect, 0.47))
    assert whole == parts


def test_strip_margin_matches_nearest_resonance(well_medium):
    first = resonance_scan(well_medium, (0.5, 3.5, -2, -0.01)).zeros[0]
    h_star = strip_margin(well_medium, (0.5, 3.5), 2.0)
    assert h_star <= abs(first.imag) + 1e-2 and abs(h_star - abs(first.imag)) <= 1e-2
    # fewer constraints cannot shrink the strip
    assert strip_margin(well_medium, (0.5, 2.0), 2.0) >= h_star
    with pytest.raises(ValidationError):
        n_h_for_margin(0.0)


def test_strip_conventions():
    assert strip_half_width(2) == pytest.approx(math.pi / 4)
    assert strip_half_width(2, "remark") == pytest.approx(math.pi)
    assert n_h_for_margin(math.pi / 4) == 2 and n_h_for_margin(1.0) == 2
    with pytest.raises(ValidationError):
        strip_half_width(1, "other")


@pytest.fixture(scope="module")
def cos_strip(bump_medium_1024):
    src = cosine_source(1024, 3)
    grid = strip_grid(12.0, 0.5, n_re=60, n_im=5, extra=[3.0, 5.0, 9.0])
    return src, sample_F_on_strip(bump_medium_1024, src, grid)


def test_F_on_real_axis_is_passive_data(bump_medium_1024, cos_strip):
    src, strip = cos_strip
    field = solve_helmholtz(bump_medium_1024, src, 5.0).phi_values
    assert strip.at(5.0) == pytest.approx(field[0].imag + 1j * field[-1].imag, abs=1e-13)
    with pytest.raises(ContinuationError):
        strip.at(5.01)


def test_F_is_odd_and_holomorphic(bump_medium_1024, cos_strip):
    src, strip = cos_strip
    ks = np.linspace(0.3, 9.0, 25)
    both = sample_F_on_strip(bump_medium_1024, src, np.concatenate([ks, -ks])).F_values
    assert np.max(np.abs(both[:25] + both[25:])) <= 1e-10
    F = lambda z: sample_F_on_strip(bump_medium_1024, src, z).F_values  # noqa: E731
    assert np.all(cauchy_riemann_residual(F, [2.0 + 0.3j, 6.0 - 0.2j], 1e-4) <= 1e-4)
    assert np.max(np.abs(strip.F_values)) <= 2 * strip.M_f_estimate


def test_harmonic_measure_field_properties():
    field = harmonic_measure(1.0, 1, 4.0, 4)
    w = field.w_values
    mid = len(field.y) // 2
    slit = (field.x > 0) & (field.x <= 1.0 + 1e-12)
    assert np.all(w[mid, slit] == 1.0)
    assert np.all(w[0] == 0) and np.all(w[-1] == 0) and np.all(w[:, 0] == 0) and np.all(w[:, -1] == 0)
    inner = w[1:-1, 1:-1]
    assert np.all((inner > 0) & (inner <= 1))
    # slits of 3 and 5 cells of size dy = h / 4 give identical grids
    dy = math.pi / 8
    short, long_ = harmonic_measure(3 * dy, 1, 6.0, 4), harmonic_measure(5 * dy, 1, 6.0, 4)
    assert np.array_equal(short.x, long_.x)
    assert np.all(long_.w_values >= short.w_values - 1e-12)
    assert np.any(long_.w_values > short.w_values + 1e-3)
    with pytest.raises(ValidationError):
        harmonic_measure(2.0, 1, 5.0, 4)


def test_harmonic_measure_dominates_lower_bound():
    ks = [1.5, 2.0, 3.0]
    _, w0, history = harmonic_measure_converged(1.0, 1, ks, tol=1e-3)
    assert len(history) >= 3
    for k, v in zip(ks, w0):
        assert v >= eta_exponent(k, 1.0, 1) - 2e-3


def test_two_constants_zero_source(bump_medium_1024):
    src = validate_source(np.zeros(1025), 1.0)
    strip = sample_F_on_strip(bump_medium_1024, src, strip_grid(12.0, 0.5, n_re=40, n_im=3, extra=[5.0]))
    field = harmonic_measure(2.0, 3, 12.0, 4)
    lhs, rhs, ok = two_constants_check(strip, field, 2.0, 5.0)
    assert lhs == 0.0 and rhs == 0.0 and ok


def test_two_constants_limits(cos_strip):
    _, strip = cos_strip
    field = harmonic_measure(2.0, 3, 12.0, 4)
    lhs, rhs, ok = two_constants_check(strip, field, 2.0, 9.0)
    assert ok and lhs <= rhs
    ks, fs = strip.real_axis()
    sup_band = np.max(np.abs(fs[(ks > 0) & (ks <= 2.0)]))
    _, rhs_one, _ = two_constants_check(strip, field, 2.0, 3.0, w0=1.0)
    assert rhs_one == pytest.approx(sup_band)
    with pytest.raises(ContinuationError):
        two_constants_check(strip, field, 2.0, 1.0)
    with pytest.raises(ContinuationError):
        two_constants_check(strip, field, 2.0, 40.0)
