"""Five-direction spin-1 state tomography.

The state is parametrized by 9 real numbers ``x`` with
``rho = sum_j x_j B_j`` where ``B`` holds the three diagonal units followed by
the symmetric and antisymmetric off-diagonal units for (0,1), (0,2), (1,2).
Each measured probability is linear in ``x``, which gives the measurement map.
"""

from dataclasses import dataclass, field
import json
import logging
import warnings

import numpy as np

from . import _kernels
from .fock import (
    DensityMatrix,
    ValidationError,
    as_matrix,
    eigenvalues_hermitian,
    purity,
    trace_norm,
)
from .spin import (
    DIRECTION_NAMES,
    SpinDirection,
    direction_operator,
    eigenprojectors,
    five_directions,
    named_direction,
)

log = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-6
# Printed three-decimal tables have row sums between 0.962 and 1.015.
RENORMALIZE_TOL = 5e-2
RANK_THRESHOLD = 1e-10


class RankDeficientWarning(UserWarning):
    pass


def _hermitian_basis():
    basis = []
    for i in range(3):
        e = np.zeros((3, 3), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        s = np.zeros((3, 3), dtype=complex)
        s[i, j] = s[j, i] = 1.0
        a = np.zeros((3, 3), dtype=complex)
        a[i, j] = -1j
        a[j, i] = 1j
        basis.extend([s, a])
    return np.array(basis)


HERMITIAN_BASIS = _hermitian_basis()
TRACE_ROW = np.array([1.0, 1.0, 1.0, 0, 0, 0, 0, 0, 0])


def matrix_to_params(rho):
    m = as_matrix(rho)
    out = [m[0, 0].real, m[1, 1].real, m[2, 2].real]
    for i, j in ((0, 1), (0, 2), (1, 2)):
        out.extend([m[i, j].real, -m[i, j].imag])
    return np.array(out)


def params_to_matrix(x):
    return np.tensordot(np.asarray(x, dtype=float), HERMITIAN_BASIS, axes=1)


def _resolve_directions(directions):
    out = []
    for d in directions:
        if isinstance(d, SpinDirection):
            out.append(d)
        elif isinstance(d, str):
            out.append(named_direction(d))
        else:
            out.append(SpinDirection(tuple(np.asarray(d, dtype=float))))
    return out


@dataclass(frozen=True)
class ProbabilityTable:
    """Outcome probabilities ``(P+, P0, P-)`` = ``(P(20), P(11), P(02))`` per direction.

    ``allow_negative`` admits quasi-probabilities, as produced by forward
    evaluation of a non-positive matrix.
    """

    directions: tuple
    probs: np.ndarray
    lz_probs: object = None
    lz_mean: object = None
    allow_negative: bool = False

    def __post_init__(self):
        dirs = tuple(_resolve_directions(self.directions))
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] != len(dirs):
            raise ValidationError(f"probability table must be ({len(dirs)}, 3), got {p.shape}")
        if not np.all(np.isfinite(p)) or (np.any(p < 0) and not self.allow_negative):
            raise ValidationError("probabilities must be finite and non-negative")
        sums = p.sum(axis=1)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            k = int(np.argmax(bad))
            raise ValidationError(f"row {k} sums to {sums[k]!r}; expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "probs", p)
        if self.lz_probs is not None:
            lz = np.array(self.lz_probs, dtype=float)
            if lz.shape != (3,) or abs(lz.sum() - 1.0) > RENORMALIZE_TOL or np.any(lz < 0):
                raise ValidationError("lz probabilities must be a non-negative triple summing to 1")
            object.__setattr__(self, "lz_probs", tuple(lz / lz.sum()))

    @classmethod
    def renormalized(cls, directions, probs, tol=RENORMALIZE_TOL, **kw):
        """Rescale rows to unit sum; rows off by more than ``tol`` are rejected."""
        p = np.array(probs, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValidationError(f"probability rows must be triples, got shape {p.shape}")
        sums = p.sum(axis=1)
        dev = np.abs(sums - 1.0)
        if np.any(dev > tol):
            k = int(np.argmax(dev))
            raise ValidationError(f"row {k} sums to {sums[k]!r}, too far from 1 to renormalize")
        return cls(directions, p / sums[:, None], **kw)

    @property
    def first_moments(self):
        return self.probs[:, 0] - self.probs[:, 2]

    @property
    def second_moments(self):
        return self.probs[:, 0] + self.probs[:, 2]

    def moment(self, name):
        for d, m in zip(self.directions, self.first_moments):
            if d.name == name:
                return float(m)
        raise KeyError(name)

    def measured_lz(self):
        if self.lz_probs is not None:
            return self.lz_probs[0] - self.lz_probs[2]
        return self.lz_mean


@dataclass(frozen=True)
class CountRecord:
    directions: tuple
    counts: np.ndarray
    exposure: object = None

    def __post_init__(self):
        dirs = tuple(_resolve_directions(self.directions))
        c = np.array(self.counts)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] != len(dirs):
            raise ValidationError(f"count table must be ({len(dirs)}, 3), got {c.shape}")
        if not np.all(np.equal(np.mod(c, 1), 0)) or np.any(c < 0):
            raise ValidationError("counts must be non-negative integers")
        c = c.astype(np.int64)
        if np.any(c.sum(axis=1) <= 0):
            raise ValidationError("every direction needs at least one positive count")
        c.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_probabilities(cls, table, shots):
        """Scale a probability table to ``shots`` events per direction (rounded)."""
        return cls(table.directions, np.rint(np.asarray(table.probs) * shots))

    def frequencies(self):
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    def to_table(self):
        return ProbabilityTable(self.directions, self.frequencies())


@dataclass(frozen=True)
class ConsistencyReport:
    residual_L1: float
    residual_L2: float
    residual_Lz: object = None
    rhs_Lz: object = None

    def to_dict(self):
        return {
            "residual_L1": self.residual_L1,
            "residual_L2": self.residual_L2,
            "residual_Lz": self.residual_Lz,
            "rhs_Lz": self.rhs_Lz,
        }


@dataclass
class MLEResult:
    rho: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    history: np.ndarray = field(repr=False)


@dataclass
class TomographyResult:
    rho_raw: object = None
    rho_ml: object = None
    eigenvalues_raw: object = None
    eigenvalues_ml: object = None
    trace_norm_distance: object = None
    trace_distance: object = None
    purity_raw: object = None
    purity_ml: object = None
    log_likelihood_ml: object = None
    iterations: object = None
    converged: object = None

    def to_dict(self):
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, DensityMatrix):
                value = value.to_dict()
            elif isinstance(value, np.ndarray):
                value = value.tolist()
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data):
        kwargs = dict(data)
        for key in ("rho_raw", "rho_ml"):
            if kwargs.get(key) is not None:
                kwargs[key] = DensityMatrix.from_dict(kwargs[key])
        for key in ("eigenvalues_raw", "eigenvalues_ml"):
            if kwargs.get(key) is not None:
                kwargs[key] = np.asarray(kwargs[key], dtype=float)
        return cls(**kwargs)


def predicted_probs(rho, n):
    """(P+, P0, P-) = Tr(rho Pi_m) for the eigenprojectors of ``n . L``."""
    m = as_matrix(rho)
    return np.einsum("kij,ji->k", eigenprojectors(n), m).real


def predicted_table(rho, directions=None):
    dirs = five_directions() if directions is None else _resolve_directions(directions)
    return np.array([predicted_probs(rho, d) for d in dirs])


def _stacked_projectors(directions):
    return np.concatenate([eigenprojectors(d) for d in directions])


def measurement_map(directions):
    """(3k x 9) real matrix mapping the state parameters to stacked probabilities."""
    proj = _stacked_projectors(_resolve_directions(directions))
    return np.einsum("kij,bji->kb", proj, HERMITIAN_BASIS).real


def map_rank(M, threshold=RANK_THRESHOLD):
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > threshold * max(1.0, s[0])))


def linear_inversion(table):
    """Least-squares inversion with the unit trace imposed exactly.

    No positivity is enforced; a slightly negative eigenvalue is the expected
    signature of noisy data. A rank-deficient map yields the minimum-norm
    solution and a :class:`RankDeficientWarning`.
    """
    M = measurement_map(table.directions)
    p = np.asarray(table.probs).ravel()
    rank = map_rank(M)
    # KKT system for min |Mx - p|^2 subject to TRACE_ROW . x = 1
    kkt = np.zeros((10, 10))
    kkt[:9, :9] = M.T @ M
    kkt[:9, 9] = kkt[9, :9] = TRACE_ROW
    rhs = np.concatenate([M.T @ p, [1.0]])
    if rank < 9:
        msg = f"measurement map has rank {rank} < 9; returning the minimum-norm solution"
        log.info(msg)
        warnings.warn(msg, RankDeficientWarning, stacklevel=2)
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    else:
        sol = np.linalg.solve(kkt, rhs)
    rho = params_to_matrix(sol[:9])
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def log_likelihood(rho, counts):
    proj = _stacked_projectors(counts.directions)
    p = np.einsum("kij,ji->k", proj, as_matrix(rho)).real
    n = counts.counts.ravel().astype(float)
    mask = n > 0
    if np.any(p[mask] <= 0):
        return -np.inf
    return float(np.sum(n[mask] * np.log(p[mask])))


def mle_reconstruct(counts, eps=0.2, tol=1e-10, max_iter=100_000, rho0=None):
    """Maximum-likelihood state from multinomial counts.

    Runs the diluted fixed-point map ``rho <- N[(1-eps) rho + eps R rho R]``
    from ``rho0`` (default I/3). The dilution is halved within an iteration
    whenever a full step would lower the likelihood, so the recorded
    likelihood history is non-decreasing. ``tol`` applies to the likelihood
    per measurement setting, i.e. with counts rescaled to unit mean total per
    direction.
    """
    if not isinstance(counts, CountRecord):
        raise ValidationError("mle_reconstruct expects a CountRecord")
    if not (0 < eps <= 1):
        raise ValidationError(f"dilution eps must be in (0, 1], got {eps!r}")
    proj = np.ascontiguousarray(_stacked_projectors(counts.directions))
    n = counts.counts.ravel().astype(float)
    scale = counts.counts.sum(axis=1).mean()
    weights = np.ascontiguousarray(n / scale)
    start = np.eye(3, dtype=complex) / 3.0 if rho0 is None else np.array(as_matrix(rho0), dtype=complex)
    rho, history, iters, converged = _kernels.mle_fixed_point(
        proj, weights, np.ascontiguousarray(start), float(eps), float(tol), int(max_iter)
    )
    if not converged:
        log.warning("MLE stopped after %d iterations without converging", iters)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return MLEResult(
        rho=DensityMatrix(rho),
        log_likelihood=float(history[-1] * scale),
        iterations=int(iters),
        converged=bool(converged),
        history=np.asarray(history) * scale,
    )


_SQ2 = np.sqrt(2.0)


def consistency_check(table, lz=None):
    """Residuals of the linear relations tying L1, L2 and Lz to L3, L4, L5.

    ``lz`` may be a probability triple or a measured mean; if omitted the
    table's own Lz record (if any) is used, otherwise the Lz check is skipped.
    """
    m = {name: table.moment(name) for name in DIRECTION_NAMES}
    r1 = abs(m["L1"] - (m["L3"] - m["L4"] + m["L5"]) / _SQ2)
    r2 = abs(m["L2"] - (m["L3"] + m["L4"] - m["L5"]) / _SQ2)
    rhs_z = (-m["L3"] + m["L4"] + m["L5"]) / _SQ2
    if lz is None:
        lz_value = table.measured_lz()
    elif np.ndim(lz) == 0:
        lz_value = float(lz)
    else:
        p = np.asarray(lz, dtype=float)
        lz_value = float((p[0] - p[2]) / p.sum())
    rz = None if lz_value is None else abs(lz_value - rhs_z)
    return ConsistencyReport(float(r1), float(r2), None if rz is None else float(rz), float(rhs_z))


def operator_identity_residuals():
    """Max-abs entries of L1 - (L3 - L4 + L5)/sqrt2 and the two companion identities."""
    L = [direction_operator(d) for d in five_directions()]
    lz = direction_operator((0.0, 0.0, 1.0))
    return (
        float(np.max(np.abs(L[0] - (L[2] - L[3] + L[4]) / _SQ2))),
        float(np.max(np.abs(L[1] - (L[2] + L[3] - L[4]) / _SQ2))),
        float(np.max(np.abs(lz - (-L[2] + L[3] + L[4]) / _SQ2))),
    )


def diagnostics(rho_raw, rho_ml):
    """Spectra, purities and distances of a raw/ML pair.

    ``trace_norm_distance`` is Tr|raw - ml|; ``trace_distance`` is half of it.
    """
    return TomographyResult(
        rho_raw=rho_raw if isinstance(rho_raw, DensityMatrix) else DensityMatrix(rho_raw),
        rho_ml=rho_ml if isinstance(rho_ml, DensityMatrix) else DensityMatrix(rho_ml),
        eigenvalues_raw=eigenvalues_hermitian(rho_raw),
        eigenvalues_ml=eigenvalues_hermitian(rho_ml),
        trace_norm_distance=trace_norm(as_matrix(rho_raw) - as_matrix(rho_ml)),
        trace_distance=0.5 * trace_norm(as_matrix(rho_raw) - as_matrix(rho_ml)),
        purity_raw=purity(rho_raw),
        purity_ml=purity(rho_ml),
    )


def reconstruct(data, method="both", shots=10_000, **mle_kw):
    """Run linear inversion and/or MLE on a table or count record."""
    if method not in ("linear", "mle", "both"):
        raise ValidationError(f"unknown method {method!r}")
    if isinstance(data, CountRecord):
        counts, table = data, data.to_table()
    else:
        table, counts = data, CountRecord.from_probabilities(data, shots)
    result = TomographyResult()
    if method in ("linear", "both"):
        raw = linear_inversion(table)
        result.rho_raw = raw
        result.eigenvalues_raw = raw.eigenvalues()
        result.purity_raw = raw.purity()
    if method in ("mle", "both"):
        ml = mle_reconstruct(counts, **mle_kw)
        result.rho_ml = ml.rho
        result.eigenvalues_ml = ml.rho.eigenvalues()
        result.purity_ml = ml.rho.purity()
        result.log_likelihood_ml = ml.log_likelihood
        result.iterations = ml.iterations
        result.converged = ml.converged
    if method == "both":
        result.trace_norm_distance = trace_norm(result.rho_raw.entries - result.rho_ml.entries)
        result.trace_distance = 0.5 * result.trace_norm_distance
    return result


# --------------------------------------------------------------------------
# file format
# --------------------------------------------------------------------------


def _direction_from_record(rec):
    if "name" in rec and rec["name"] in DIRECTION_NAMES + ("Lx", "Ly", "Lz"):
        return named_direction(rec["name"])
    if "n" in rec:
        return SpinDirection.normalized(rec["n"], rec.get("name", ""))
    raise ValidationError(f"direction record needs a known 'name' or an 'n' vector: {rec!r}")


def parse_tomography_data(data):
    """Build a ProbabilityTable or CountRecord from the decoded JSON object."""
    if not isinstance(data, dict) or not isinstance(data.get("directions"), list):
        raise ValidationError("tomography file needs a 'directions' list")
    dirs, rows, kind = [], [], None
    for rec in data["directions"]:
        if not isinstance(rec, dict):
            raise ValidationError(f"malformed direction record {rec!r}")
        dirs.append(_direction_from_record(rec))
        key = "counts" if "counts" in rec else "probs" if "probs" in rec else None
        if key is None:
            raise ValidationError(f"direction {rec.get('name')!r} has neither 'probs' nor 'counts'")
        if kind not in (None, key):
            raise ValidationError("cannot mix 'probs' and 'counts' records")
        kind = key
        rows.append(rec[key])
    try:
        rows = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"non-numeric probability/count data: {exc}") from exc
    lz = data.get("lz") or {}
    lz_probs = lz.get("probs")
    lz_mean = lz.get("mean")
    if lz.get("counts") is not None:
        c = np.asarray(lz["counts"], dtype=float)
        lz_probs = c / c.sum()
    if kind == "counts":
        return CountRecord(dirs, rows), (lz_probs, lz_mean)
    table = ProbabilityTable.renormalized(dirs, rows, lz_probs=lz_probs, lz_mean=lz_mean)
    return table, (lz_probs, lz_mean)


def load_tomography_file(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    obj, _ = parse_tomography_data(data)
    return obj


def table_to_data(table):
    out = {"directions": [{"name": d.name, "n": list(d.n), "probs": list(map(float, p))} for d, p in zip(table.directions, table.probs)]}
    if table.lz_probs is not None or table.lz_mean is not None:
        out["lz"] = {}
        if table.lz_probs is not None:
            out["lz"]["probs"] = list(table.lz_probs)
        if table.lz_mean is not None:
            out["lz"]["mean"] = table.lz_mean
    return out


def counts_to_data(record):
    return {"directions": [{"name": d.name, "n": list(d.n), "counts": [int(x) for x in c]} for d, c in zip(record.directions, record.counts)]}
