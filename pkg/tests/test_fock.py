import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spin1optics import reference
from spin1optics.fock import (
    MAXIMALLY_MIXED,
    SYM_EMBED,
    BosonicBasisState,
    DensityMatrix,
    HermitianOperator,
    PureState,
    ValidationError,
    basis_vector,
    eigenvalues_hermitian,
    expectation,
    lift,
    purity,
    symmetrize,
    trace_distance,
    trace_norm,
)
from spin1optics.source import noon_state

from conftest import random_rho, random_unit_vector

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_symmetrize_basis_examples():
    assert np.allclose(symmetrize([1, 0, 0, 0]), [1, 0, 0])
    anti = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert np.linalg.norm(symmetrize(anti)) < 1e-15
    sym = np.array([0, 1, 1, 0]) / np.sqrt(2)
    assert np.allclose(symmetrize(sym), [0, 1, 0])
    assert np.allclose(symmetrize([0, 0, 0, 1]), [0, 0, 1])


def test_symmetrize_rejects_wrong_dimension():
    with pytest.raises(ValidationError):
        symmetrize([1, 0, 0])


def test_embedding_is_isometry():
    assert np.allclose(SYM_EMBED.conj().T @ SYM_EMBED, np.eye(3), atol=1e-15)


@given(seeds)
def test_symmetrize_preserves_inner_products_on_symmetric_subspace(seed):
    rng = np.random.default_rng(seed)
    a, b = random_unit_vector(rng, 3), random_unit_vector(rng, 3)
    la, lb = lift(a), lift(b)
    assert abs(np.vdot(la, lb) - np.vdot(a, b)) < 1e-12
    assert np.allclose(symmetrize(la), a, atol=1e-12)


@given(seeds)
def test_symmetrize_norm_is_symmetric_weight(seed):
    rng = np.random.default_rng(seed)
    psi = random_unit_vector(rng, 4)
    anti = abs(psi[1] - psi[2]) ** 2 / 2
    assert abs(np.linalg.norm(symmetrize(psi)) ** 2 + anti - 1.0) < 1e-12


def test_bosonic_basis_ordering():
    assert [s.index for s in BosonicBasisState] == [0, 1, 2]
    assert [s.lz for s in BosonicBasisState] == [1, 0, -1]
    assert np.allclose(basis_vector(BosonicBasisState.N11), [0, 1, 0])


def test_pure_state_validation():
    PureState([1, 0, 0])
    with pytest.raises(ValidationError):
        PureState([1, 1, 0])
    with pytest.raises(ValidationError):
        PureState([1, 0, 0, 0, 0], basis="two_color")
    s = PureState.normalized([1, 1j, 0, 0], basis="two_color")
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-15
    with pytest.raises(ValidationError):
        PureState.normalized([0, 0, 0])


def test_density_matrix_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(3))
    with pytest.raises(ValidationError):
        DensityMatrix(np.array([[1, 1, 0], [0, 0, 0], [0, 0, 0]]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(2) / 2)
    # positivity is queried, not enforced
    m = DensityMatrix(np.diag([1.1, 0.0, -0.1]))
    assert not m.is_psd()
    assert MAXIMALLY_MIXED.is_psd()


def test_hermitian_operator_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))
    HermitianOperator(np.eye(4))


def test_eigenvalues_examples():
    assert np.allclose(eigenvalues_hermitian(MAXIMALLY_MIXED), [1 / 3] * 3, atol=1e-14)
    assert np.allclose(eigenvalues_hermitian(noon_state().projector()), [1, 0, 0], atol=1e-14)
    ev = eigenvalues_hermitian(reference.rho_raw())
    assert np.all(np.abs(ev - [1.017, 0.016, -0.033]) <= 0.02)
    with pytest.raises(ValidationError):
        eigenvalues_hermitian(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))


@given(seeds)
def test_eigendecomposition_reconstructs_matrix(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = g + g.conj().T
    ev = eigenvalues_hermitian(h)
    assert np.all(np.diff(ev) <= 0)
    w, v = np.linalg.eigh(h)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)
    assert np.allclose(np.sort(ev), w, atol=1e-12)


def test_trace_norm_examples():
    assert trace_norm(np.zeros((3, 3))) == 0.0
    assert abs(trace_norm(np.diag([0.5, -0.5, 0])) - 1.0) < 1e-15
    pure = noon_state().projector()
    assert abs(trace_norm(np.eye(3) / 3 - pure) - 4 / 3) < 1e-12


def test_published_raw_ml_distance():
    # the quoted value 0.06 is reproduced by the half-trace-norm distance;
    # the plain trace norm of the published difference is about twice that
    raw, ml = reference.rho_raw(), reference.rho_ml()
    assert abs(trace_distance(raw, ml) - 0.06) <= 0.02
    assert abs(trace_norm(raw - ml) - 2 * trace_distance(raw, ml)) < 1e-12


@given(seeds)
def test_trace_norm_is_a_norm(seed):
    rng = np.random.default_rng(seed)
    a, b = random_rho(rng), random_rho(rng)
    c = a - b
    assert trace_norm(a + c) <= trace_norm(a) + trace_norm(c) + 1e-12
    assert abs(trace_norm(-2.5 * c) - 2.5 * trace_norm(c)) < 1e-12
    assert trace_norm(c) >= 0
    assert abs(trace_norm(a) - 1) < 1e-12


def test_purity_examples():
    assert abs(purity(MAXIMALLY_MIXED) - 1 / 3) < 1e-15
    assert abs(purity(noon_state().projector()) - 1) < 1e-15
    expected = float(np.sum(np.square([1.017, 0.016, -0.033])))
    assert abs(purity(reference.rho_raw()) - expected) < 5e-3


@given(seeds)
def test_purity_bounds_for_physical_states(seed):
    rho = random_rho(np.random.default_rng(seed))
    assert 1 / 3 - 1e-12 <= purity(rho) <= 1 + 1e-12


def test_expectation_pure_and_mixed():
    lz = np.diag([1.0, 0.0, -1.0])
    assert expectation(lz, [1, 0, 0]) == 1.0
    assert abs(expectation(lz, MAXIMALLY_MIXED)) < 1e-15


def test_density_matrix_json_round_trip(rng):
    rho = DensityMatrix(random_rho(rng))
    back = DensityMatrix.from_json(rho.to_json())
    assert np.array_equal(back.entries, rho.entries)
    assert set(json.loads(rho.to_json())) == {"re", "im"}


def test_density_matrix_json_errors():
    with pytest.raises(ValidationError):
        DensityMatrix.from_json("{not json")
    with pytest.raises(ValidationError):
        DensityMatrix.from_json('{"re": [[1]]}')
    with pytest.raises(ValidationError):
        DensityMatrix.from_dict({"re": np.eye(3).tolist(), "im": np.zeros((3, 3)).tolist()})
