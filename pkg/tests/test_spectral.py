import numpy as np
import pytest

from passive_isp.exceptions import SpectralError, ValidationError
from passive_isp.model import Grid, bump, validate_medium, zero_medium
from passive_isp.spectral import (
    boundary_trace_bound,
    derivative_norm,
    eigenvalue_bounds,
    neumann_eigensystem,
    pencil,
    sturm_count,
    weighted_inner,
)


@pytest.fixture(scope="module")
def free_es():
    return neumann_eigensystem(zero_medium(2048), 60.0)


def test_free_space_frequencies(free_es):
    mus = free_es.mus
    assert mus[0] == 0.0
    assert np.allclose(mus, np.pi * np.arange(len(mus)), rtol=1e-4)
    assert free_es.sturm_count == len(mus) == 20


def test_free_space_modes_and_sign(free_es):
    x = Grid(2048).nodes
    assert np.allclose(free_es.pair(1).phi_values, 1.0)
    assert np.allclose(free_es.pair(3).phi_values, np.sqrt(2) * np.cos(2 * np.pi * x), atol=1e-4)
    assert all(p.boundary_0 > 0 for p in free_es.pairs)
    assert free_es.pair(4).boundary_1 == pytest.approx(-np.sqrt(2), rel=1e-4)


def test_constant_medium_oracle():
    # 1 + q = 4: mu_j = (j - 1) pi / 2, phi_1 = 1/2, phi_j = cos((j-1) pi x) / sqrt 2
    medium = validate_medium(np.full(1025, 3.0), 0.5, 10.0, check_support=False)
    es = neumann_eigensystem(medium, 10.0)
    assert np.allclose(es.mus, 0.5 * np.pi * np.arange(len(es)), rtol=1e-4)
    assert np.allclose(es.pair(1).phi_values, 0.5)
    x = Grid(1024).nodes
    assert np.allclose(es.pair(2).phi_values, np.cos(np.pi * x) / np.sqrt(2), atol=1e-5)


def test_orthonormal_in_weighted_product(bump_medium_1024):
    es = neumann_eigensystem(bump_medium_1024, 30.0)
    gram = np.array([[weighted_inner(bump_medium_1024, a.phi_values, b.phi_values) for b in es.pairs]
                     for a in es.pairs])
    assert np.allclose(gram, np.eye(len(es)), atol=1e-10)


def test_bounds_bracket_bump_frequencies(bump_medium_1024):
    es = neumann_eigensystem(bump_medium_1024, 40.0)
    for p in es.pairs:
        lo, hi = eigenvalue_bounds(bump_medium_1024, p.j)
        slo, shi = eigenvalue_bounds(bump_medium_1024, p.j, sharp=True)
        assert lo <= slo <= p.mu * (1 + 1e-9) and p.mu <= shi * (1 + 1e-9) <= hi * (1 + 1e-9)
    with pytest.raises(ValidationError):
        eigenvalue_bounds(bump_medium_1024, 0)


def test_sturm_count_agrees_with_dense_eigenvalues():
    medium = validate_medium(bump(Grid(64).nodes, 0.1, 0.6, 2.0), 0.5, 1e4)
    d, e, _ = pencil(medium)
    lam = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    for sigma in (0.5, 10.0, 300.0, 5000.0):
        assert sturm_count(d, e, sigma) == np.count_nonzero(lam < sigma)


def test_resolution_guard_and_missing_pair(free_es):
    with pytest.raises(SpectralError) as err:
        neumann_eigensystem(zero_medium(100), 11.0)
    assert err.value.code == "RESOLUTION_EXCEEDED"
    with pytest.raises(SpectralError) as err:
        free_es.pair(21)
    assert err.value.code == "MISSING_PAIR"


def test_trace_bound(free_es):
    medium = zero_medium(2048)
    first = free_es.pair(1)
    # |phi_1(0)| + |phi_1(1)| = 2 exceeds the uncorrected C (mu + 1) = 1
    assert boundary_trace_bound(first, medium) == 1.0
    for p in free_es.pairs:
        assert abs(p.boundary_0) + abs(p.boundary_1) <= boundary_trace_bound(p, medium, corrected=True)


def test_derivative_norm(free_es):
    # ||phi_j'|| = mu_j for the free-space cosines
    p = free_es.pair(5)
    assert derivative_norm(p, Grid(2048)) == pytest.approx(p.mu, rel=1e-5)


def test_flipped_pair(free_es):
    p = free_es.pair(2).flipped()
    assert p.boundary_0 < 0 and np.array_equal(p.phi_values, -free_es.pair(2).phi_values)
