import numpy as np
import pytest

from passive_isp.exceptions import SolverError, ValidationError
from passive_isp.forward import (
    NoiseSpec,
    green_function,
    hk_residual,
    hk_sides,
    imaging_functional,
    solve_helmholtz,
    solve_many,
    synthesize_passive,
)
from passive_isp.model import Grid, PassiveRecord, validate_source, zero_medium


def unit_source(n):
    return validate_source(np.ones(n + 1), 10.0, check_support=False)


def exact_unit_field(x, k):
    """Outgoing solution of phi'' + k^2 phi = 1 on (0, 1)."""
    return (1.0 - 0.5 * np.exp(1j * k * x) - 0.5 * np.exp(1j * k * (1.0 - x))) / k**2


def test_unit_source_boundary_value():
    k = np.pi / 2
    field = solve_helmholtz(zero_medium(1024), unit_source(1024), k)
    # phi(0) = (1 - e^{ik}) / (2k^2) = 2 (1 - i) / pi^2
    exact = 2 * (1 - 1j) / np.pi**2
    assert field.boundary[0].real == pytest.approx(exact.real, abs=1e-7)
    # the imaginary part is reproduced far beyond the O(h^2) truncation error
    assert field.boundary[0].imag == pytest.approx(-0.20264236728467555, abs=1e-10)


def test_unit_source_second_order():
    k = 3.7
    errs = []
    for n in (128, 256, 512, 1024):
        field = solve_helmholtz(zero_medium(n), unit_source(n), k)
        errs.append(np.max(np.abs(field.phi_values - exact_unit_field(Grid(n).nodes, k))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.9) & (orders < 2.1))


def test_residual_reported(bump_medium_1024, bump_source_1024):
    field = solve_helmholtz(bump_medium_1024, bump_source_1024, 2.5 - 0.3j)
    assert field.residual < 1e-8


@pytest.mark.parametrize("k", [1.0, np.pi, 7.3])
def test_conjugate_symmetry(bump_medium_1024, bump_source_1024, k):
    plus = solve_helmholtz(bump_medium_1024, bump_source_1024, k).phi_values
    minus = solve_helmholtz(bump_medium_1024, bump_source_1024, -k).phi_values
    assert np.max(np.abs(minus - np.conj(plus))) <= 1e-12 * max(1.0, np.max(np.abs(plus)))


def test_solve_many_matches_single(bump_medium_1024, bump_source_1024):
    ks = [0.7, 2.0 + 0.5j, 9.1]
    many = solve_many(bump_medium_1024, bump_source_1024.f_values, ks)
    for j, k in enumerate(ks):
        one = solve_helmholtz(bump_medium_1024, bump_source_1024, k).phi_values
        assert np.allclose(many[:, j], one, atol=1e-14)


def test_bad_wavenumbers(free_1024, bump_source_1024):
    with pytest.raises(SolverError) as err:
        solve_helmholtz(free_1024, bump_source_1024, 0.0)
    assert err.value.code == "BAD_K"
    with pytest.raises(SolverError) as err:
        solve_helmholtz(free_1024, bump_source_1024, 1 - 5j)
    assert err.value.code == "BAD_K" and err.value.k == 1 - 5j
    with pytest.raises(ValidationError):
        solve_helmholtz(zero_medium(64), bump_source_1024, 1.0)


def test_free_space_green_function():
    k, z = 2.3, 0.375
    col = green_function(zero_medium(2048), k, z)
    x = Grid(2048).nodes
    exact = np.exp(1j * k * np.abs(x - z)) / (2j * k)
    assert np.max(np.abs(col.g_values - exact)) < 1e-5
    with pytest.raises(ValidationError):
        green_function(zero_medium(64), k, 1.0)


def test_green_reciprocity(bump_medium_1024):
    a = green_function(bump_medium_1024, 3.1, 0.25).g_values
    b = green_function(bump_medium_1024, 3.1, 0.625).g_values
    assert a[640] == pytest.approx(b[256], abs=1e-14)


@pytest.mark.parametrize("k", [0.5, 2.0, 10.0])
def test_hk_identity_free_space(k):
    medium = zero_medium(1024)
    lhs, rhs = hk_sides(medium, k, 0.2, 0.7)
    assert rhs == pytest.approx(np.cos(k * 0.5) / (2 * k), abs=1e-5)
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_hk_identity_in_bump(bump_medium_1024):
    for k in (0.5, 5.0):
        assert hk_residual(bump_medium_1024, k, 0.31, 0.88) < 1e-10


def test_noise_streams_are_per_measurement():
    spec = NoiseSpec("additive_gaussian", 0.1, seed=7)
    assert np.array_equal(spec.draws(5)[:3], spec.draws(3))
    assert np.array_equal(NoiseSpec().draws(4), np.zeros((4, 2)))
    u = NoiseSpec("additive_uniform", 0.2, seed=1).draws(200)
    assert np.all(np.abs(u) <= 0.2)
    with pytest.raises(ValidationError):
        NoiseSpec("multiplicative", 0.1)


def test_synthesize_passive(bump_medium_1024, bump_source_1024):
    recs = synthesize_passive(bump_medium_1024, bump_source_1024, [1.0, 2.0])
    field = solve_helmholtz(bump_medium_1024, bump_source_1024, 2.0)
    assert recs[1].k == 2.0
    assert recs[1].im_phi_0 == pytest.approx(field.phi_values[0].imag, rel=1e-13)
    assert recs[1].im_phi_1 == pytest.approx(field.phi_values[-1].imag, rel=1e-13)
    noisy = synthesize_passive(bump_medium_1024, bump_source_1024, [1.0, 2.0],
                               NoiseSpec("additive_gaussian", 1e-3, 5))
    assert noisy != recs
    assert synthesize_passive(bump_medium_1024, bump_source_1024, []) == []
    with pytest.raises(SolverError):
        synthesize_passive(bump_medium_1024, bump_source_1024, [-1.0])


def test_zero_source_gives_zero_data(bump_medium_1024):
    src = validate_source(np.zeros(1025), 1.0)
    recs = synthesize_passive(bump_medium_1024, src, [0.5, 3.0])
    assert all(r.im_phi_0 == 0 and r.im_phi_1 == 0 for r in recs)


def test_imaging_functional():
    assert imaging_functional(PassiveRecord(2.0, -1.0, 0.5)) == (0.5, -0.25)
