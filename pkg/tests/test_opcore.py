import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncglab.opcore import (
    Tolerance,
    as_operator,
    commutator,
    coordinate_commutator_norm,
    coordinate_projection,
    is_self_adjoint,
    op_norm,
    singular_values,
    validate_projection,
)

from conftest import random_complex, unit, weighted_shift


def gram_norm(m):
    # independent of the SVD path: sqrt of the top eigenvalue of m* m
    return float(np.sqrt(max(np.linalg.eigvalsh(m.conj().T @ m).max(), 0.0)))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=12)


# ---- commutator


def test_commutator_matrix_units():
    assert np.array_equal(commutator(unit(1, 2, 2), unit(2, 1, 2)), np.diag([1, -1]).astype(complex))


def test_commutator_with_identity_vanishes(rng):
    a = random_complex(rng, 5)
    assert not np.any(commutator(np.eye(5), a))


def test_commutator_matches_double_loop(rng):
    a, b = random_complex(rng, 4), random_complex(rng, 4)
    expected = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            expected[i, j] = sum(a[i, k] * b[k, j] - b[i, k] * a[k, j] for k in range(4))
    assert np.allclose(commutator(a, b), expected, atol=1e-12, rtol=0)


def test_commutator_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        commutator(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_commutator_antisymmetric_exactly(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_complex(rng, n), random_complex(rng, n)
    assert np.array_equal(commutator(a, b), -commutator(b, a))


# ---- norms and singular values


@pytest.mark.parametrize(
    "m, expected",
    [
        (unit(1, 2, 3), 1.0),
        (np.diag([1.0, -3.0, 2.0]), 3.0),
    ],
)
def test_op_norm_trivial(m, expected):
    assert op_norm(m) == pytest.approx(expected, abs=1e-14)


def test_op_norm_weighted_shift():
    m = weighted_shift([1 / 2, 1 / 3, 1 / 4])
    assert gram_norm(m) == pytest.approx(0.5, abs=1e-14)
    assert op_norm(m) == pytest.approx(0.5, abs=1e-14)


def test_singular_values_examples():
    assert np.array_equal(singular_values(np.zeros((3, 3))), np.zeros(3))
    p = coordinate_projection(2, 5)
    assert np.allclose(singular_values(p), [1, 1, 0, 0, 0], atol=1e-15)
    m = weighted_shift([1 / 2, 1 / 3, 1 / 4])
    oracle = np.sqrt(np.clip(np.sort(np.linalg.eigvalsh(m.conj().T @ m))[::-1], 0, None))
    assert np.allclose(oracle, [1 / 2, 1 / 3, 1 / 4, 0], atol=1e-14)
    assert np.allclose(singular_values(m), oracle, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_op_norm_is_top_singular_value(seed, n):
    rng = np.random.default_rng(seed)
    m = random_complex(rng, n)
    s = singular_values(m)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert op_norm(m) == pytest.approx(s[0], rel=1e-12)
    assert np.allclose(np.sort(s**2), np.linalg.eigvalsh(m.conj().T @ m), atol=1e-9 * (1 + s[0] ** 2))


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_op_norm_submultiplicative(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_complex(rng, n), random_complex(rng, n)
    assert op_norm(a @ b) <= op_norm(a) * op_norm(b) + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=10))
def test_singular_values_of_real_diagonal(diag):
    s = singular_values(np.diag(diag))
    assert np.allclose(s, np.sort(np.abs(diag))[::-1], rtol=1e-12, atol=1e-12)


def test_op_norm_ignores_zero_rows_and_columns(rng):
    core = random_complex(rng, 3)
    m = np.zeros((7, 7), dtype=complex)
    m[np.ix_([1, 4, 6], [0, 2, 5])] = core
    assert op_norm(m) == pytest.approx(gram_norm(core), rel=1e-12)
    assert op_norm(np.zeros((4, 4))) == 0.0


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=10), st.data())
def test_coordinate_commutator_norm_matches_explicit(seed, n, data):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    r = data.draw(st.integers(min_value=0, max_value=n))
    explicit = op_norm(commutator(coordinate_projection(r, n), a))
    assert coordinate_commutator_norm(a, r) == pytest.approx(explicit, rel=1e-12, abs=1e-14)


# ---- projections and tolerances


def test_validate_projection_coordinate():
    d = validate_projection(coordinate_projection(2, 4))
    assert d.passed and d.rank == 2
    assert d.idempotency_defect == 0 and d.symmetry_defect == 0


def test_validate_projection_half_identity_fails():
    d = validate_projection(0.5 * np.eye(2))
    assert not d.passed
    assert d.idempotency_defect == pytest.approx(0.25)


def test_validate_projection_rotated(rng):
    q, _ = np.linalg.qr(random_complex(rng, 6))
    p = q @ coordinate_projection(3, 6) @ q.conj().T
    d = validate_projection(p)
    assert d.passed and d.rank == 3


def test_tolerance_must_be_positive():
    Tolerance()
    with pytest.raises(ValueError):
        Tolerance(exact_eq=0)
    with pytest.raises(ValueError):
        Tolerance(bound_slack=-1)


def test_self_adjointness(rng):
    a = random_complex(rng, 5)
    assert is_self_adjoint(a + a.conj().T)
    assert not is_self_adjoint(a)


def test_as_operator_rejects_non_square():
    with pytest.raises(ValueError):
        as_operator(np.zeros((2, 3)))
    assert as_operator([[1]]).dtype == np.complex128
