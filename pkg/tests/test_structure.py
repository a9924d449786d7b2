import json

import numpy as np
import pytest

from structcov.errors import (
    IllConditionedError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
    StructuralRankError,
)
from structcov.linalg import duplication_matrix, vec
from structcov.structure import (
    compound_symmetry,
    custom,
    diagonal,
    load_structure,
    make_structure,
    unstructured,
    variance_components,
)

from conftest import random_pds


def test_unstructured_design_equals_duplication_matrix():
    for k in (1, 2, 3, 4):
        st = unstructured(k)
        np.testing.assert_array_equal(st.stacked, duplication_matrix(k))


def test_compound_symmetry_evaluate():
    st = compound_symmetry(3)
    v = st.evaluate([2.0, 0.5])
    expected = 2.0 * np.eye(3) + 0.5 * (np.ones((3, 3)) - np.eye(3))
    np.testing.assert_array_equal(v, expected)
    assert st.is_valid_theta([2.0, 0.5])
    assert not st.is_valid_theta([1.0, 2.0])


def test_diagonal_structure():
    st = diagonal(3)
    np.testing.assert_array_equal(st.evaluate([1.0, 2.0, 3.0]), np.diag([1.0, 2.0, 3.0]))


def test_variance_components_basis():
    z = np.ones((3, 1))
    st = variance_components(3, [z])
    np.testing.assert_array_equal(st.evaluate([0.5, 1.0]), 0.5 * np.ones((3, 3)) + np.eye(3))


def test_rank_deficient_basis_rejected():
    with pytest.raises(StructuralRankError):
        custom([np.eye(2), 2.0 * np.eye(2)])


def test_too_many_basis_matrices_rejected():
    basis = [np.eye(2), np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])]
    with pytest.raises(StructuralRankError):
        custom(basis)


def test_asymmetric_basis_rejected():
    with pytest.raises(InvalidArgumentError):
        custom([np.array([[0.0, 1.0], [0.0, 0.0]])])


def test_coordinates_roundtrip(rng):
    st = compound_symmetry(4)
    theta = np.array([3.0, 1.2])
    np.testing.assert_allclose(st.coordinates(st.evaluate(theta)), theta, atol=1e-12)


def test_gram_matches_kronecker_form(rng):
    st = compound_symmetry(3)
    sigma = random_pds(3, rng)
    si = np.linalg.inv(sigma)
    explicit = st.stacked.T @ np.kron(si, si) @ st.stacked
    np.testing.assert_allclose(st.gram(sigma), explicit, rtol=1e-10)


def test_projector_is_idempotent_and_fixes_columns(rng):
    st = compound_symmetry(3)
    sigma = st.evaluate_pds([2.0, 0.7])
    p = st.projector(sigma)
    np.testing.assert_allclose(p @ p, p, atol=1e-10)
    np.testing.assert_allclose(p @ st.stacked, st.stacked, atol=1e-10)


def test_projector_fixes_vec_sigma(rng):
    # vec(Sigma) is itself in the column space, so the projector fixes it
    st = compound_symmetry(4)
    sigma = st.evaluate_pds([1.5, -0.2])
    p = st.projector(sigma)
    v = vec(sigma.entries)
    np.testing.assert_allclose(p @ v, v, atol=1e-10)


def test_evaluate_pds_rejects_indefinite():
    st = diagonal(2)
    with pytest.raises(NotPositiveDefiniteError):
        st.evaluate_pds([1.0, -1.0])


def test_gram_condition_limit():
    st = custom([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    sigma = np.diag([1.0, 1e8])
    with pytest.raises(IllConditionedError):
        st.gram(sigma)


def test_make_structure_kinds():
    assert make_structure({"kind": "unstructured", "dim": 2}).nparams == 3
    assert make_structure({"kind": "compound-symmetry", "dim": 3}).nparams == 2
    assert make_structure({"kind": "diagonal", "dim": 4}).nparams == 4
    st = make_structure({"kind": "custom", "basis": [[[1.0, 0.0], [0.0, 1.0]]]})
    assert st.nparams == 1
    with pytest.raises(InvalidArgumentError):
        make_structure({"kind": "nope", "dim": 2})
    with pytest.raises(InvalidArgumentError):
        make_structure({"dim": 2})


def test_load_structure(tmp_path):
    path = tmp_path / "cs.json"
    path.write_text(json.dumps({"kind": "compound-symmetry", "dim": 3}))
    st = load_structure(path)
    assert st.kind == "compound-symmetry"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidArgumentError):
        load_structure(bad)
