"""Exit criteria for the toolkit, shared by the test-suite and ``replicate-paper``.

Each check returns a :class:`Criterion` carrying the computed numbers, the
published numbers they are compared against and the tolerance used.
"""

from dataclasses import dataclass, field
import time

import numpy as np

from . import reference
from .fock import SYM_EMBED, symmetrize, trace_norm, eigenvalues_hermitian
from .harness import default_phis, fit_fringe, simulate_fringe, synthesize_counts, visibility
from .optics import (
    BeamSplitter,
    MziElement,
    PhaseShifter,
    beamsplitter_unitary,
    compose,
)
from .rng import stream
from .source import SourceParams
from .spin import LX, LY, LZ, direction_operator, five_directions
from .tomography import (
    CountRecord,
    ProbabilityTable,
    consistency_check,
    linear_inversion,
    map_rank,
    measurement_map,
    mle_reconstruct,
    operator_identity_residuals,
    predicted_table,
)

DEFAULT_SEED = 20240607


@dataclass
class Criterion:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title}"

    def to_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed, "details": _plain(self.details)}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _complex_list(m):
    m = np.asarray(m)
    return {"re": m.real.round(6).tolist(), "im": m.imag.round(6).tolist()}


def random_density_matrix(rng, psd=True):
    """Random trace-1 Hermitian 3x3 matrix; full-rank PSD unless ``psd`` is False."""
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    if psd:
        m = g @ g.conj().T
    else:
        m = g + g.conj().T
        m = m - (np.trace(m).real - 1.0) / 3.0 * np.eye(3)
        return m
    return m / np.trace(m).real


def criterion_1():
    table = reference.tomography_table()
    t0 = time.perf_counter()
    rho = linear_inversion(table).entries
    elapsed = time.perf_counter() - t0
    err = np.abs(rho - reference.rho_raw())
    tol = 0.015
    return Criterion(
        1,
        "linear inversion of the published table matches the published raw matrix entrywise",
        bool(err.max() <= tol and elapsed < 1.0),
        {
            "computed": _complex_list(rho),
            "published": _complex_list(reference.rho_raw()),
            "max_abs_error": err.max(),
            "worst_entry": list(np.unravel_index(np.argmax(err), err.shape)),
            "tolerance": tol,
            "runtime_s": elapsed,
        },
    )


def criterion_2():
    rho = linear_inversion(reference.tomography_table())
    ev = rho.eigenvalues()
    target = reference.eigenvalues_raw()
    err = np.abs(ev - target)
    tol = 0.02
    return Criterion(
        2,
        "eigenvalues of the raw reconstruction, including one negative value",
        bool(err.max() <= tol and ev[-1] < 0),
        {"computed": ev, "published": target, "max_abs_error": err.max(), "tolerance": tol},
    )


def criterion_3():
    predicted = predicted_table(reference.rho_raw())
    table = np.asarray(reference.tomography_table().probs)
    err = np.abs(predicted - table)
    tol = 0.01
    return Criterion(
        3,
        "forward probabilities of the published raw matrix reproduce the published table",
        bool(err.max() <= tol),
        {
            "predicted": predicted,
            "published_renormalized": table,
            "max_abs_error": err.max(),
            "max_abs_error_vs_printed": np.abs(predicted - reference.printed_table()).max(),
            "worst_cell": [f"L{np.unravel_index(np.argmax(err), err.shape)[0] + 1}", ["P20", "P11", "P02"][np.unravel_index(np.argmax(err), err.shape)[1]]],
            "tolerance": tol,
        },
    )


def criterion_4(shots=10_000):
    table = reference.tomography_table()
    counts = CountRecord.from_probabilities(table, shots)
    ml = mle_reconstruct(counts)
    raw = linear_inversion(table)
    ev = ml.rho.eigenvalues()
    d_pub = trace_norm(ml.rho.entries - reference.rho_ml())
    d_raw = trace_norm(raw.entries - ml.rho.entries)
    ok = (
        ev[-1] >= -1e-10
        and abs(np.trace(ml.rho.entries).real - 1.0) <= 1e-12
        and d_pub <= 0.08
        and abs(d_raw - reference.trace_distance_raw_ml()) <= 0.03
    )
    return Criterion(
        4,
        "maximum-likelihood reconstruction is physical and close to the published one",
        bool(ok),
        {
            "computed": _complex_list(ml.rho.entries),
            "eigenvalues": ev,
            "trace_distance_to_published_ml": d_pub,
            "tolerance_to_published_ml": 0.08,
            "trace_distance_raw_ml": d_raw,
            "half_trace_distance_raw_ml": 0.5 * d_raw,
            "published_matrices_trace_norm": trace_norm(reference.rho_raw() - reference.rho_ml()),
            "published_trace_distance_raw_ml": reference.trace_distance_raw_ml(),
            "tolerance_raw_ml": 0.03,
            "iterations": ml.iterations,
            "converged": ml.converged,
            "shots_per_direction": shots,
        },
    )


def criterion_5(seed=DEFAULT_SEED):
    table = reference.tomography_table()
    rep = consistency_check(table, lz=reference.measured_lz())
    tol = 0.05
    rng = stream(seed, 5)
    model_max = 0.0
    for _ in range(20):
        rho = random_density_matrix(rng)
        probs = predicted_table(rho)
        lz = np.array([rho[0, 0].real, rho[1, 1].real, rho[2, 2].real])
        r = consistency_check(ProbabilityTable(five_directions(), probs), lz=lz)
        model_max = max(model_max, r.residual_L1, r.residual_L2, r.residual_Lz)
    ok = rep.residual_L1 <= tol and rep.residual_L2 <= tol and rep.residual_Lz <= tol and model_max <= 1e-12
    pub = reference.load()["consistency"]
    return Criterion(
        5,
        "internal-consistency residuals of the L1, L2 and Lz relations",
        bool(ok),
        {
            "residual_L1": rep.residual_L1,
            "residual_L2": rep.residual_L2,
            "residual_Lz": rep.residual_Lz,
            "rhs_Lz": rep.rhs_Lz,
            "published": {k: pub[k] for k in ("residual_L1", "residual_L2", "residual_Lz", "rhs_Lz")},
            "tolerance": tol,
            "model_generated_max_residual": model_max,
            "model_tolerance": 1e-12,
        },
    )


def criterion_6():
    out = beamsplitter_unitary(np.pi / 4).matrix @ np.array([0, 1, 0], dtype=complex)
    expected = -1j * np.array([1, 0, 1]) / np.sqrt(2)
    p11 = abs(out[1]) ** 2
    overlap = abs(np.vdot(expected, out))
    ok = p11 <= 1e-12 and abs(overlap - 1.0) <= 1e-12
    return Criterion(
        6,
        "Hong-Ou-Mandel: balanced splitter on |1;1> never yields |1;1>",
        bool(ok),
        {"P11": p11, "overlap_with_expected": overlap, "tolerance": 1e-12},
    )


def criterion_7():
    phis = np.linspace(0, 2 * np.pi, 2001)
    P = simulate_fringe(SourceParams(0.0, 1.0), np.pi / 2, phis)
    shifted = simulate_fringe(SourceParams(0.0, 1.0), np.pi / 2, phis + np.pi)
    period_err = np.abs(P - shifted).max()
    p11 = P[:, 1]
    # extremes sit on the phase grid at multiples of pi/2
    marks = simulate_fringe(SourceParams(0.0, 1.0), np.pi / 2, np.arange(4) * np.pi / 2)[:, 1]
    min_err = abs(marks.min())
    max_err = abs(marks.max() - 1.0)
    vs = np.linspace(0.0, 1.0, 41)
    vis = np.array([visibility(simulate_fringe(SourceParams(0.0, v), np.pi / 2, phis)[:, 1]) for v in vs])
    increasing = bool(np.all(np.diff(vis) > 0))
    ok = period_err <= 1e-10 and min_err <= 1e-10 and max_err <= 1e-10 and p11.min() >= -1e-10 and increasing
    return Criterion(
        7,
        "NOON fringe has period pi, full contrast, and visibility rising with V",
        bool(ok),
        {
            "period_error": period_err,
            "min_error": min_err,
            "max_error": max_err,
            "tolerance": 1e-10,
            "visibility_strictly_increasing": increasing,
            "visibility_at_V0_V1": [vis[0], vis[-1]],
        },
    )


def criterion_8(seed=DEFAULT_SEED, trials=100, n_phi=50):
    ref = reference.fringe()
    V, R = 0.98, ref["R"]
    norms = reference.fringe_norms()
    phis = default_phis(n_phi)
    probs = simulate_fringe(SourceParams(R, V), ref["theta"], phis, phase_offset=0.4)
    hits = 0
    zs = []
    for t in range(trials):
        scan = synthesize_counts(probs, norms, seed, phis=phis, theta=ref["theta"], stream_key=(8, t))
        fit = fit_fringe(scan)
        zv = (fit.V - V) / fit.stderr["V"]
        zr = (fit.R - R) / fit.stderr["R"]
        zs.append((zv, zr))
        hits += int(abs(zv) <= 3 and abs(zr) <= 3)
    zs = np.array(zs)
    return Criterion(
        8,
        "fringe fit recovers V and R within 3 sigma on Poisson data",
        hits >= 95,
        {
            "trials": trials,
            "within_3_sigma": hits,
            "required": 95,
            "true_V": V,
            "true_R": R,
            "norms": norms,
            "z_std": zs.std(axis=0),
            "z_mean": zs.mean(axis=0),
        },
    )


def _random_circuit(rng):
    elements = []
    for _ in range(rng.integers(1, 7)):
        kind = rng.integers(3)
        if kind == 0:
            elements.append(PhaseShifter(rng.uniform(0, 2 * np.pi), "c" if rng.random() < 0.5 else "d"))
        elif kind == 1:
            elements.append(BeamSplitter(rng.uniform(0, 2 * np.pi)))
        else:
            elements.append(MziElement(rng.uniform(0, 2 * np.pi)))
    return elements


def criterion_9(seed=DEFAULT_SEED, trials=100):
    rng = stream(seed, 9)
    worst = 0.0
    for _ in range(trials):
        circuit = _random_circuit(rng)
        psi3 = rng.normal(size=3) + 1j * rng.normal(size=3)
        psi3 /= np.linalg.norm(psi3)
        psi4 = SYM_EMBED @ psi3
        out4 = compose(circuit, "two_color").matrix @ psi4
        out3 = compose(circuit, "spin1").matrix @ symmetrize(psi4)
        worst = max(worst, float(np.max(np.abs(symmetrize(out4) - out3))))
        # the symmetric subspace is invariant: nothing leaks out
        worst = max(worst, float(np.max(np.abs(out4 - SYM_EMBED @ symmetrize(out4)))))
    return Criterion(
        9,
        "two-color simulation projected on the symmetric subspace equals the spin-1 simulation",
        worst <= 1e-12,
        {"trials": trials, "max_abs_difference": worst, "tolerance": 1e-12},
    )


def criterion_10():
    comm = max(
        np.abs(LX @ LY - LY @ LX - 1j * LZ).max(),
        np.abs(LY @ LZ - LZ @ LY - 1j * LX).max(),
        np.abs(LZ @ LX - LX @ LZ - 1j * LY).max(),
    )
    casimir = np.abs(LX @ LX + LY @ LY + LZ @ LZ - 2 * np.eye(3)).max()
    dirs = five_directions() + [(0.0, 0.0, 1.0)]
    spectrum = max(np.abs(eigenvalues_hermitian(direction_operator(d)) - [1, 0, -1]).max() for d in dirs)
    rank = map_rank(measurement_map(five_directions()))
    ident = max(operator_identity_residuals())
    ok = comm <= 1e-12 and casimir <= 1e-12 and spectrum <= 1e-12 and rank == 9 and ident <= 1e-12
    return Criterion(
        10,
        "spin-1 algebra, spectra, measurement-map rank and operator identities",
        bool(ok),
        {
            "commutator_error": comm,
            "casimir_error": casimir,
            "spectrum_error": spectrum,
            "measurement_map_rank": rank,
            "operator_identity_error": ident,
            "tolerance": 1e-12,
        },
    )


def criterion_11(seed=DEFAULT_SEED, trials=100, shots=10**7):
    rng = stream(seed, 11)
    dirs = five_directions()
    worst = 0.0
    for k in range(trials):
        rho = random_density_matrix(rng, psd=bool(k % 2))
        back = linear_inversion(ProbabilityTable(dirs, predicted_table(rho, dirs), allow_negative=True)).entries
        worst = max(worst, float(np.abs(back - rho).max()))
    truth = random_density_matrix(rng)
    p = np.clip(predicted_table(truth, dirs), 0, None)
    counts = np.array([rng.multinomial(shots, row / row.sum()) for row in p])
    ml = mle_reconstruct(CountRecord(dirs, counts))
    dist = trace_norm(ml.rho.entries - truth)
    ok = worst <= 1e-10 and dist <= 0.01
    return Criterion(
        11,
        "linear inversion inverts the forward model; MLE recovers a known state",
        bool(ok),
        {
            "round_trip_max_error": worst,
            "round_trip_tolerance": 1e-10,
            "mle_trace_distance": dist,
            "mle_tolerance": 0.01,
            "shots_per_direction": shots,
            "mle_iterations": ml.iterations,
        },
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}

SEEDED = {5, 8, 9, 11}


def run_all(seed=DEFAULT_SEED):
    out = []
    for number, fn in CRITERIA.items():
        out.append(fn(seed=seed) if number in SEEDED else fn())
    return out
