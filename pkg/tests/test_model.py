import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from passive_isp.exceptions import ValidationError
from passive_isp.model import (
    Grid,
    PassiveRecord,
    array_to_records,
    builtin_profile,
    bump,
    discrete_h1_norm,
    load_profile,
    read_profile,
    records_to_array,
    smoothness_surrogate,
    validate_medium,
    validate_source,
    well,
    write_profile,
)


def test_grid_basics():
    g = Grid(16)
    assert g.n_nodes == 17 and g.spacing == 1 / 16
    assert g.integrate(np.ones(17)) == pytest.approx(1.0, abs=1e-15)
    # trapezoid is exact for linear functions
    assert g.integrate(g.nodes) == pytest.approx(0.5, abs=1e-15)
    assert g.nearest_node(0.49) == 8


@pytest.mark.parametrize("n", [0, 15, 16.5, -3])
def test_grid_rejects_small_or_fractional(n):
    with pytest.raises(ValidationError) as err:
        Grid(n)
    assert err.value.code == "BAD_GRID"


def test_medium_arrays_are_read_only(bump_medium_1024):
    with pytest.raises(ValueError):
        bump_medium_1024.q_values[3] = 1.0


def test_validate_medium_rejections():
    x = Grid(64).nodes
    with pytest.raises(ValidationError) as err:
        validate_medium(-0.8 * np.sin(np.pi * x) ** 2, 0.5, 100)
    assert err.value.code == "REJECT_POSITIVITY"
    with pytest.raises(ValidationError) as err:
        validate_medium(np.full(65, 0.1), 0.5, 100)
    assert err.value.code == "REJECT_SUPPORT"
    with pytest.raises(ValidationError) as err:
        validate_medium(bump(x, 0.2, 0.8, 1.0), 0.5, 1.0)
    assert err.value.code == "REJECT_BUDGET"
    with pytest.raises(ValidationError):
        validate_medium(np.zeros(65), 1.5, 1.0)
    with pytest.raises(ValidationError):
        validate_medium(np.zeros((5, 13)), 0.5, 1.0)


def test_smoothness_budget_is_inclusive():
    x = Grid(256).nodes
    q = 0.3 * np.sin(np.pi * x) ** 2
    budget = smoothness_surrogate(q, Grid(256))
    assert validate_medium(q, 0.5, budget).M == budget


def test_validate_source_budget_and_support():
    g = Grid(128)
    f = np.sin(np.pi * g.nodes)
    # ||sin||^2 = 1/2 and ||pi cos||^2 = pi^2/2
    assert discrete_h1_norm(f, g) == pytest.approx(np.sqrt(0.5 + np.pi**2 / 2), rel=1e-4)
    with pytest.raises(ValidationError) as err:
        validate_source(f, 1.0)
    assert err.value.code == "REJECT_BUDGET"
    with pytest.raises(ValidationError) as err:
        validate_source(np.ones(129), 10.0)
    assert err.value.code == "REJECT_SUPPORT"
    assert validate_source(np.ones(129), 10.0, check_support=False).L == 10.0


def test_builtin_profiles():
    x = Grid(64).nodes
    assert np.array_equal(builtin_profile("zero", 64), np.zeros(65))
    assert np.allclose(builtin_profile("cosine(2, 0.5)", 64), 0.5 * np.cos(2 * np.pi * x))
    assert np.allclose(builtin_profile("sine(1,1)", 64), np.sin(np.pi * x))
    b = builtin_profile("bump(0.2,0.8,0.7)", 64)
    assert b.max() == pytest.approx(0.7, rel=1e-12) and b[0] == 0 and b[-1] == 0
    w = well(x, 0.25, 0.75, 3.0, 0.05)
    assert w[32] == 3.0 and w[0] == 0.0
    for bad in ["nope", "bump(1,2)", "cosine"]:
        with pytest.raises(ValidationError):
            builtin_profile(bad, 64)


def test_profile_file_roundtrip(tmp_path):
    q = bump(Grid(32).nodes, 0.1, 0.9, 0.4)
    path = tmp_path / "q.txt"
    write_profile(path, q, "q")
    assert path.read_text().startswith("# x q\n")
    assert np.array_equal(read_profile(path, "q"), q)
    assert np.array_equal(load_profile(str(path), 32, "q"), q)
    with pytest.raises(ValidationError):
        read_profile(path, "f")


def test_record_validation():
    with pytest.raises(ValidationError):
        PassiveRecord(0.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        PassiveRecord(1.0, np.nan, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                min_size=1, max_size=10))
def test_records_array_roundtrip(rows):
    recs = [PassiveRecord(*r) for r in rows]
    assert array_to_records(records_to_array(recs)) == recs
