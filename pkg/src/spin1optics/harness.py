"""Fringe-scan simulation, Poisson count synthesis and fringe fitting.

The analyzer is a phase ``phi`` on mode c followed by MZI(theta); at
``theta = pi/2`` the MZI is a balanced splitter and a NOON input produces
fringes at twice the phase frequency.
"""

from dataclasses import dataclass, field
import csv
import io
import logging

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .fock import ValidationError
from .optics import analyzer_stack, beamsplitter_unitary, mzi_unitary
from .rng import stream
from .source import SourceParams, input_state, noon_state, source_state

log = logging.getLogger(__name__)

COUNT_HEADER = ["phi", "count20", "count11", "count02"]
PROB_HEADER = ["phi", "p20", "p11", "p02"]
PARAM_NAMES = ("V", "R", "N20", "N11", "N02", "phase_offset")


def simulate_fringe(params, theta, phis, phase_offset=0.0):
    """Outcome probabilities ``(P20, P11, P02)`` for each analyzer phase, shape (P, 3)."""
    if not isinstance(params, SourceParams):
        params = SourceParams(*params)
    phis = np.asarray(phis, dtype=float)
    rho = np.ascontiguousarray(source_state(params).entries)
    analyzers = np.ascontiguousarray(analyzer_stack(phis + phase_offset, theta))
    return _kernels.fringe_probs(analyzers, rho)


def fringe_model(V, R, phis, theta, phase_offset=0.0):
    """Same as :func:`simulate_fringe`, via the pure-state shortcut.

    Since the analyzer is unitary, the mixed part contributes (1 - V)/3 to
    every outcome.
    """
    psi = np.ascontiguousarray(input_state(min(max(R, 0.0), 1.0)).amplitudes)
    analyzers = np.ascontiguousarray(analyzer_stack(np.asarray(phis) + phase_offset, theta))
    return V * _kernels.pure_fringe_probs(analyzers, psi) + (1.0 - V) / 3.0


def visibility(curve):
    curve = np.asarray(curve, dtype=float)
    hi, lo = curve.max(axis=0), curve.min(axis=0)
    return (hi - lo) / (hi + lo)


@dataclass(frozen=True)
class FringeScan:
    theta: float
    phis: np.ndarray
    counts: object = None
    probs: object = None

    def __post_init__(self):
        phis = np.array(self.phis, dtype=float)
        if phis.ndim != 1 or phis.size == 0:
            raise ValidationError("phi values must be a non-empty 1-D sequence")
        if np.any(np.diff(phis) <= 0):
            raise ValidationError("phi values must be strictly increasing")
        object.__setattr__(self, "phis", phis)
        for name in ("counts", "probs"):
            data = getattr(self, name)
            if data is None:
                continue
            arr = np.array(data, dtype=float)
            if arr.shape != (phis.size, 3):
                raise ValidationError(f"{name} must have shape ({phis.size}, 3), got {arr.shape}")
            if np.any(arr < -1e-12) or not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} must be finite and non-negative")
            arr = np.clip(arr, 0.0, None)
            object.__setattr__(self, name, arr)
        if self.counts is None and self.probs is None:
            raise ValidationError("a fringe scan needs counts or probabilities")


@dataclass
class FitResult:
    V: float
    R: float
    N20: float
    N11: float
    N02: float
    phase_offset: float
    visibilities: np.ndarray
    residual: float
    covariance: np.ndarray = field(repr=False)
    stderr: dict = field(default_factory=dict)
    visibility_stderr: object = None
    converged: bool = True
    at_boundary: bool = False

    @property
    def norms(self):
        return np.array([self.N20, self.N11, self.N02])

    def to_dict(self):
        return {
            "V": self.V,
            "R": self.R,
            "N20": self.N20,
            "N11": self.N11,
            "N02": self.N02,
            "phase_offset": self.phase_offset,
            "visibilities": list(map(float, self.visibilities)),
            "visibility_stderr": None if self.visibility_stderr is None else list(map(float, self.visibility_stderr)),
            "residual": self.residual,
            "stderr": self.stderr,
            "covariance": np.asarray(self.covariance).tolist(),
            "converged": self.converged,
            "at_boundary": self.at_boundary,
        }


def synthesize_counts(probabilities, norms, seed, phis=None, theta=np.pi / 2, stream_key=()):
    """Poisson counts with mean ``N_xy * P_xy(phi)``; deterministic for a given seed."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValidationError(f"probabilities must have shape (P, 3), got {p.shape}")
    norms = np.asarray(norms, dtype=float)
    if norms.shape != (3,) or np.any(norms <= 0):
        raise ValidationError("norms must be three positive numbers")
    if phis is None:
        phis = np.arange(p.shape[0]) * (2 * np.pi / p.shape[0])
    rng = stream(seed, *stream_key)
    counts = rng.poisson(np.clip(p, 0.0, None) * norms)
    return FringeScan(theta, phis, counts=counts)


class _FringeModel:
    """Fringe counts and their analytic Jacobian for the fit parameters."""

    def __init__(self, phis, theta):
        self.mzi = mzi_unitary(theta).matrix
        self.phis = np.asarray(phis, dtype=float)
        self.split_pair = beamsplitter_unitary(np.pi / 4).matrix[:, 0]
        self.noon = noon_state().amplitudes

    def _state(self, R):
        u = np.sqrt(R) * self.split_pair + np.sqrt(1.0 - R) * self.noon
        r = max(R, 1e-15)
        du = self.split_pair / (2 * np.sqrt(r)) - self.noon / (2 * np.sqrt(max(1.0 - R, 1e-15)))
        norm = np.linalg.norm(u)
        psi = u / norm
        dpsi = du / norm - u * np.vdot(u, du).real / norm**3
        return psi, dpsi

    def evaluate(self, x, jac=False):
        V, R, n20, n11, n02, off = x
        norms = np.array([n20, n11, n02])
        psi, dpsi = self._state(min(max(R, 0.0), 1.0))
        phase = np.exp(-1j * np.outer(self.phis + off, _PHOTONS_C))
        amp = (phase * psi) @ self.mzi.T
        pure = (amp * amp.conj()).real
        curve = V * pure + (1.0 - V) / 3.0
        model = curve * norms
        if not jac:
            return model
        d_amp_r = (phase * dpsi) @ self.mzi.T
        d_amp_off = (phase * psi * (-1j * _PHOTONS_C)) @ self.mzi.T
        J = np.empty(model.shape + (6,))
        J[..., 0] = (pure - 1.0 / 3.0) * norms
        J[..., 1] = 2 * V * (amp.conj() * d_amp_r).real * norms
        J[..., 2:5] = 0.0
        for b in range(3):
            J[:, b, 2 + b] = curve[:, b]
        J[..., 5] = 2 * V * (amp.conj() * d_amp_off).real * norms
        return model, J


_PHOTONS_C = np.array([2.0, 1.0, 0.0])


def _start_grid():
    return [(v, r) for v in (0.7, 0.95) for r in (0.005, 0.05, 0.2, 0.5)]


def fit_fringe(scan, n_offsets=32, ftol=1e-10, max_nfev=2000):
    """Weighted least-squares fit of ``(V, R, N20, N11, N02, phase_offset)``.

    Weights are ``1 / max(count, 1)``. Eight (V, R) starting points are each
    paired with the best of ``n_offsets`` trial phase origins (norms solved
    in closed form) and refined with a bounded trust-region solver; the
    lowest residual wins. Uncertainties come from the inverse of the
    weighted Jacobian normal matrix.
    """
    if scan.counts is None:
        raise ValidationError("fit_fringe needs count data")
    phis, counts, theta = scan.phis, scan.counts, scan.theta
    if phis.size < 8:
        raise ValidationError(f"need at least 8 phase points, got {phis.size}")
    if phis[-1] - phis[0] < np.pi * (1 - 1.0 / phis.size) - 1e-9:
        raise ValidationError("phase points must span at least one fringe period")
    weights = 1.0 / np.maximum(counts, 1.0)
    sqrt_w = np.sqrt(weights)
    offsets = np.arange(n_offsets) * (2 * np.pi / n_offsets)
    model = _FringeModel(phis, theta)

    lower = [0.0, 0.0, 1e-9, 1e-9, 1e-9, -np.inf]
    upper = [1.0, 1.0, np.inf, np.inf, np.inf, np.inf]
    best = None
    for v0, r0 in _start_grid():
        # all trial offsets at once: curves has shape (n_offsets, P, 3)
        shifted = _FringeModel((phis[None, :] + offsets[:, None]).ravel(), theta)
        curves = shifted.evaluate([v0, r0, 1.0, 1.0, 1.0, 0.0]).reshape(n_offsets, phis.size, 3)
        num = np.sum(weights * counts * curves, axis=1)
        den = np.sum(weights * curves * curves, axis=1)
        n_all = np.maximum(num / np.maximum(den, 1e-300), 1e-6)
        costs = np.sum(weights * (curves * n_all[:, None, :] - counts) ** 2, axis=(1, 2))
        k = int(np.argmin(costs))
        off0, n0 = offsets[k], n_all[k]
        x0 = np.array([v0, r0, *n0, off0])
        sol = least_squares(
            lambda x: ((model.evaluate(x) - counts) * sqrt_w).ravel(),
            x0,
            jac=lambda x: (model.evaluate(x, jac=True)[1] * sqrt_w[..., None]).reshape(-1, 6),
            bounds=(lower, upper),
            x_scale="jac",
            ftol=ftol,
            xtol=1e-12,
            gtol=1e-12,
            max_nfev=max_nfev,
        )
        if best is None or sol.cost < best.cost:
            best = sol

    x = best.x.copy()
    x[5] = float(np.mod(x[5], 2 * np.pi))
    J = best.jac
    cov = np.linalg.pinv(J.T @ J)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    at_boundary = bool(x[0] <= 1e-8 or x[0] >= 1 - 1e-8 or x[1] <= 1e-8 or x[1] >= 1 - 1e-8)
    if at_boundary:
        log.warning("fringe fit hit a parameter bound: V=%.6g R=%.6g", x[0], x[1])

    dense = np.linspace(0.0, 2 * np.pi, 721)[:-1]

    dense_model = _FringeModel(dense, theta)

    def vis_of(p):
        return visibility(dense_model.evaluate([p[0], p[1], 1.0, 1.0, 1.0, p[5]]))

    vis = vis_of(x)
    grad = np.zeros((3, 6))
    for k in (0, 1, 5):
        h = 1e-6 * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        xp[:2] = np.clip(xp[:2], 0, 1)
        xm[:2] = np.clip(xm[:2], 0, 1)
        grad[:, k] = (vis_of(xp) - vis_of(xm)) / (xp[k] - xm[k])
    vis_err = np.sqrt(np.clip(np.einsum("ik,kl,il->i", grad, cov, grad), 0.0, None))

    return FitResult(
        V=float(x[0]),
        R=float(x[1]),
        N20=float(x[2]),
        N11=float(x[3]),
        N02=float(x[4]),
        phase_offset=float(x[5]),
        visibilities=vis,
        residual=float(2 * best.cost),
        covariance=cov,
        stderr=dict(zip(PARAM_NAMES, map(float, err))),
        visibility_stderr=vis_err,
        converged=bool(best.status > 0),
        at_boundary=at_boundary,
    )


# --------------------------------------------------------------------------
# CSV format
# --------------------------------------------------------------------------


def format_phi(phi):
    return f"{phi:.9g}"


def fringe_csv_text(scan):
    """Counts as ``phi,count20,count11,count02`` or probabilities as ``phi,p20,p11,p02``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if scan.counts is not None:
        w.writerow(COUNT_HEADER)
        for phi, row in zip(scan.phis, scan.counts):
            w.writerow([format_phi(phi), *(str(int(round(c))) for c in row)])
    else:
        w.writerow(PROB_HEADER)
        for phi, row in zip(scan.phis, scan.probs):
            w.writerow([format_phi(phi), *(repr(float(p)) for p in row)])
    return buf.getvalue()


def parse_fringe_csv(text, theta=np.pi / 2):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValidationError("empty fringe CSV")
    header = [h.strip() for h in rows[0]]
    if header not in (COUNT_HEADER, PROB_HEADER):
        raise ValidationError(f"unexpected fringe CSV header {','.join(header)!r}")
    body = [r for r in rows[1:] if r]
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValidationError(f"non-numeric value in fringe CSV: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 4:
        raise ValidationError("fringe CSV rows must have 4 columns")
    if header == COUNT_HEADER:
        if not np.all(data[:, 1:] == np.round(data[:, 1:])):
            raise ValidationError("fringe counts must be integers")
        return FringeScan(theta, data[:, 0], counts=data[:, 1:].astype(np.int64))
    return FringeScan(theta, data[:, 0], probs=data[:, 1:])


def default_phis(steps=50, start=0.0, end=2 * np.pi):
    """``steps`` equally spaced phases on ``[start, end)``."""
    if steps < 1:
        raise ValidationError("steps must be positive")
    if not end > start:
        raise ValidationError("phi-end must exceed phi-start")
    return start + np.arange(steps) * ((end - start) / steps)
