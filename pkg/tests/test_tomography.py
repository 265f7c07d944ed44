import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from spin1optics import reference
from spin1optics.fock import DensityMatrix, ValidationError, trace_norm
from spin1optics.rng import stream
from spin1optics.source import noon_state
from spin1optics.spin import five_directions, named_direction
from spin1optics.tomography import (
    CountRecord,
    ProbabilityTable,
    RankDeficientWarning,
    TomographyResult,
    consistency_check,
    counts_to_data,
    diagnostics,
    linear_inversion,
    load_tomography_file,
    log_likelihood,
    map_rank,
    matrix_to_params,
    measurement_map,
    mle_reconstruct,
    operator_identity_residuals,
    params_to_matrix,
    parse_tomography_data,
    predicted_probs,
    predicted_table,
    reconstruct,
    table_to_data,
)

from conftest import random_rho

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_trace_one_hermitian(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = g + g.conj().T
    return h - (np.trace(h).real - 1) / 3 * np.eye(3)


def exact_table(rho, allow_negative=False):
    return ProbabilityTable(five_directions(), predicted_table(rho), allow_negative=allow_negative)


def test_predicted_probs_examples():
    assert np.allclose(predicted_probs(np.eye(3) / 3, named_direction("L3")), [1 / 3] * 3)
    assert np.allclose(predicted_probs(noon_state().projector(), (0.0, 0.0, 1.0)), [0.5, 0, 0.5])


@given(seeds)
def test_predicted_probs_sum_to_one(seed):
    rho = random_rho(np.random.default_rng(seed))
    p = predicted_table(rho)
    assert np.allclose(p.sum(axis=1), 1, atol=1e-12)
    assert np.all(p >= -1e-12)


def test_measurement_map_rank():
    assert map_rank(measurement_map(five_directions())) == 9
    assert map_rank(measurement_map([named_direction("L1")])) <= 3
    axes = [named_direction(n) for n in ("Lx", "Ly", "Lz")]
    assert map_rank(measurement_map(axes)) < 9


@given(seeds)
def test_parameterization_round_trip(seed):
    h = random_trace_one_hermitian(np.random.default_rng(seed))
    assert np.allclose(params_to_matrix(matrix_to_params(h)), h, atol=1e-12)


@given(seeds)
def test_linear_inversion_inverts_forward_map(seed):
    h = random_trace_one_hermitian(np.random.default_rng(seed))
    rec = linear_inversion(exact_table(h, allow_negative=True))
    assert np.max(np.abs(rec.entries - h)) < 1e-10


def test_linear_inversion_maximally_mixed():
    rec = linear_inversion(exact_table(np.eye(3) / 3))
    assert np.allclose(rec.entries, np.eye(3) / 3, atol=1e-14)


def test_linear_inversion_published_table_spectrum():
    ev = linear_inversion(reference.tomography_table()).eigenvalues()
    assert np.all(np.abs(ev - [1.017, 0.016, -0.033]) <= 0.02)
    assert ev[-1] < 0


def test_linear_inversion_rank_deficient_warns():
    axes = [named_direction(n) for n in ("Lx", "Ly", "Lz")]
    rho = noon_state().projector()
    table = ProbabilityTable(axes, np.array([predicted_probs(rho, d) for d in axes]))
    with pytest.warns(RankDeficientWarning):
        rec = linear_inversion(table)
    assert abs(np.trace(rec.entries) - 1) < 1e-12
    # the data it did see are reproduced
    assert np.allclose([predicted_probs(rec, d) for d in axes], table.probs, atol=1e-10)


def test_probability_table_validation():
    dirs = five_directions()
    with pytest.raises(ValidationError):
        ProbabilityTable(dirs, np.full((5, 3), 0.4))
    with pytest.raises(ValidationError):
        ProbabilityTable(dirs, np.full((4, 3), 1 / 3))
    bad = np.full((5, 3), 1 / 3)
    bad[0] = [1.2, 0.0, -0.2]
    with pytest.raises(ValidationError):
        ProbabilityTable(dirs, bad)
    with pytest.raises(ValidationError):
        ProbabilityTable.renormalized(dirs, np.full((5, 3), 0.5))


def test_published_table_is_renormalized():
    table = reference.tomography_table()
    assert np.allclose(table.probs.sum(axis=1), 1, atol=1e-12)
    printed = reference.printed_table()
    assert np.max(np.abs(table.probs - printed)) < 0.04


def test_count_record_validation():
    dirs = five_directions()
    with pytest.raises(ValidationError):
        CountRecord(dirs, np.full((5, 3), 1.5))
    with pytest.raises(ValidationError):
        CountRecord(dirs, np.zeros((5, 3)))
    with pytest.raises(ValidationError):
        CountRecord(dirs, -np.ones((5, 3)))


def test_count_record_from_probabilities():
    rec = CountRecord.from_probabilities(reference.tomography_table(), 10_000)
    assert rec.counts.dtype == np.int64
    assert np.all(np.abs(rec.counts.sum(axis=1) - 10_000) <= 2)


def _counts(rho, shots, seed):
    g = stream(seed, 0)
    p = np.clip(predicted_table(rho), 0, None)
    return CountRecord(five_directions(), np.array([g.multinomial(shots, row / row.sum()) for row in p]))


def _likelihood_oracle(counts):
    # independent optimizer: Cholesky parameterization with BFGS
    def unpack(x):
        t = np.zeros((3, 3), dtype=complex)
        idx = np.tril_indices(3)
        t[idx] = x[:6] + 1j * np.r_[0, x[6], 0, x[7], x[8], 0]
        m = t @ t.conj().T
        return m / np.trace(m).real

    def neg(x):
        return -log_likelihood(unpack(x), counts)

    best = min(
        (minimize(neg, x0, method="BFGS", options={"gtol": 1e-10}) for x0 in np.eye(9) + 0.3),
        key=lambda r: r.fun,
    )
    return unpack(best.x)


def test_mle_matches_independent_optimizer():
    counts = _counts(random_rho(np.random.default_rng(3)), 2000, 11)
    ml = mle_reconstruct(counts)
    assert ml.converged
    oracle = _likelihood_oracle(counts)
    assert log_likelihood(ml.rho, counts) >= log_likelihood(oracle, counts) - 1e-5
    assert trace_norm(ml.rho.entries - oracle) < 1e-4


def test_mle_history_is_monotone_and_state_physical():
    counts = CountRecord.from_probabilities(reference.tomography_table(), 10_000)
    ml = mle_reconstruct(counts)
    assert np.all(np.diff(ml.history) >= -1e-9)
    assert ml.rho.is_psd()
    assert abs(np.trace(ml.rho.entries) - 1) < 1e-12


def test_mle_on_degenerate_counts():
    counts = np.full((5, 3), 100)
    counts[1] = [0, 1000, 0]
    ml = mle_reconstruct(CountRecord(five_directions(), counts))
    ev = ml.rho.eigenvalues()
    assert ev[-1] >= -1e-10
    assert abs(np.trace(ml.rho.entries) - 1) < 1e-12
    # the m = 0 eigenvector of Ly is (|2;0> + |0;2>)/sqrt2, not |1;1>
    v = np.array([1, 0, 1]) / np.sqrt(2)
    assert np.vdot(v, ml.rho.entries @ v).real > 0.5


def test_mle_recovers_state_with_many_shots():
    truth = random_rho(np.random.default_rng(5))
    ml = mle_reconstruct(_counts(truth, 10**7, 7))
    assert trace_norm(ml.rho.entries - truth) < 0.01


def test_mle_iteration_cap_is_flagged():
    counts = CountRecord.from_probabilities(reference.tomography_table(), 10_000)
    ml = mle_reconstruct(counts, max_iter=3)
    assert not ml.converged
    assert ml.iterations == 3
    assert ml.rho.is_psd()


def test_mle_argument_checks():
    counts = CountRecord.from_probabilities(reference.tomography_table(), 100)
    with pytest.raises(ValidationError):
        mle_reconstruct(counts, eps=0.0)
    with pytest.raises(ValidationError):
        mle_reconstruct(reference.tomography_table())


def test_operator_identities_are_exact():
    assert max(operator_identity_residuals()) < 1e-12


@given(seeds)
def test_consistency_on_exact_tables(seed):
    rho = random_rho(np.random.default_rng(seed))
    lz = float(np.diag(rho).real @ [1, 0, -1])
    rep = consistency_check(exact_table(rho), lz=lz)
    assert max(rep.residual_L1, rep.residual_L2, rep.residual_Lz) < 1e-12


def test_consistency_on_published_table():
    rep = consistency_check(reference.tomography_table(), lz=0.054)
    assert rep.residual_L1 <= 0.05
    assert rep.residual_L2 <= 0.05
    assert rep.residual_Lz <= 0.05
    assert consistency_check(reference.tomography_table()).residual_Lz == rep.residual_Lz


def test_consistency_lz_as_probabilities():
    rho = random_rho(np.random.default_rng(2))
    lz_probs = predicted_probs(rho, (0.0, 0.0, 1.0))
    assert consistency_check(exact_table(rho), lz=lz_probs).residual_Lz < 1e-12


def test_diagnostics_examples():
    pure = noon_state().projector()
    d = diagnostics(np.eye(3) / 3, pure)
    assert abs(d.trace_norm_distance - 4 / 3) < 1e-12
    assert abs(d.trace_distance - 2 / 3) < 1e-12
    assert diagnostics(pure, pure).trace_norm_distance < 1e-12
    pub = diagnostics(DensityMatrix(reference.rho_raw(), tol=5e-3), DensityMatrix(reference.rho_ml(), tol=5e-3))
    assert abs(pub.trace_distance - 0.06) <= 0.02


def test_reconstruct_both_and_round_trip():
    res = reconstruct(reference.tomography_table(), method="both")
    assert res.converged
    assert res.rho_ml.is_psd()
    back = TomographyResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert np.allclose(back.rho_raw.entries, res.rho_raw.entries)
    assert np.allclose(back.eigenvalues_ml, res.eigenvalues_ml)
    with pytest.raises(ValidationError):
        reconstruct(reference.tomography_table(), method="magic")


def test_table_file_round_trip(tmp_path):
    table = reference.tomography_table()
    path = tmp_path / "t.json"
    path.write_text(json.dumps(table_to_data(table)))
    back = load_tomography_file(path)
    assert np.allclose(back.probs, table.probs)
    assert back.lz_mean == table.lz_mean


def test_counts_file_round_trip(tmp_path):
    rec = CountRecord.from_probabilities(reference.tomography_table(), 500)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(counts_to_data(rec)))
    back = load_tomography_file(path)
    assert np.array_equal(back.counts, rec.counts)


def test_file_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    with pytest.raises(ValidationError):
        load_tomography_file(p)
    with pytest.raises(ValidationError):
        parse_tomography_data({"directions": [{"name": "L1"}]})
    with pytest.raises(ValidationError):
        parse_tomography_data([1, 2])
