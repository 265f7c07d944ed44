"""Phase shifters, beamsplitters and MZIs on the spin-1 and two-color spaces.

Conventions:

* phase shifter on mode c: ``exp(-i phi c^dag c)``
* beamsplitter: ``exp(-i eta (c^dag d + c d^dag))``; ``eta = pi/4`` is 50:50
* MZI(theta): beamsplitter(pi/4), then phase theta on mode c, then
  beamsplitter(pi/4)
* analyzer: phase phi on mode c, then MZI(theta), then photon counting

The spin-1 matrices are built from the spin algebra; the two-color matrices
are built as ``u (x) u`` from the single-photon transfer matrix ``u``. The two
routes are independent, which is what the subspace-equivalence tests rely on.
"""

from dataclasses import dataclass
import json

import numpy as np
from scipy.optimize import least_squares, minimize

from .fock import SPIN1, TWO_COLOR, ValidationError
from .spin import LZ, direction_operator, rotation_unitary, SpinDirection

UNITARY_TOL = 1e-12


class NoSolutionError(RuntimeError):
    """No analyzer setting reproduces the requested measurement direction."""


@dataclass(frozen=True)
class CircuitUnitary:
    matrix: np.ndarray
    rep: str

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = {SPIN1: 3, TWO_COLOR: 4}.get(self.rep)
        if d is None:
            raise ValidationError(f"unknown representation {self.rep!r}")
        if m.shape != (d, d):
            raise ValidationError(f"{self.rep} unitary must be {d}x{d}, got {m.shape}")
        err = np.max(np.abs(m.conj().T @ m - np.eye(d)))
        if err > UNITARY_TOL * 10:
            raise ValidationError(f"matrix is not unitary (max |U^H U - I| = {err:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        if isinstance(other, CircuitUnitary):
            if other.rep != self.rep:
                raise ValidationError(f"cannot compose {self.rep} with {other.rep}")
            return CircuitUnitary(self.matrix @ other.matrix, self.rep)
        return self.matrix @ np.asarray(getattr(other, "amplitudes", other))

    @property
    def dagger(self):
        return CircuitUnitary(self.matrix.conj().T, self.rep)


def _check_rep(rep):
    if rep not in (SPIN1, TWO_COLOR):
        raise ValidationError(f"unknown representation {rep!r}")


def _check_mode(mode):
    if mode not in ("c", "d"):
        raise ValidationError(f"mode must be 'c' or 'd', got {mode!r}")


def single_photon_phase(phi, mode="c"):
    _check_mode(mode)
    ph = np.exp(-1j * phi)
    return np.diag([ph, 1.0]) if mode == "c" else np.diag([1.0, ph])


def single_photon_beamsplitter(eta):
    c, s = np.cos(eta), np.sin(eta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def single_photon_mzi(theta):
    bs = single_photon_beamsplitter(np.pi / 4)
    return bs @ single_photon_phase(theta, "c") @ bs


def phase_unitary(phi, mode="c", rep=SPIN1):
    _check_rep(rep)
    _check_mode(mode)
    if rep == TWO_COLOR:
        u = single_photon_phase(phi, mode)
        return CircuitUnitary(np.kron(u, u), rep)
    n_mode = np.array([2, 1, 0]) if mode == "c" else np.array([0, 1, 2])
    return CircuitUnitary(np.diag(np.exp(-1j * phi * n_mode)), rep)


def beamsplitter_unitary(eta, rep=SPIN1):
    _check_rep(rep)
    if rep == TWO_COLOR:
        u = single_photon_beamsplitter(eta)
        return CircuitUnitary(np.kron(u, u), rep)
    # c^dag d + c d^dag = 2 Lx on the two-photon space
    return CircuitUnitary(rotation_unitary((1.0, 0.0, 0.0), 2.0 * eta), rep)


def mzi_unitary(theta, rep=SPIN1):
    bs = beamsplitter_unitary(np.pi / 4, rep)
    return bs @ phase_unitary(theta, "c", rep) @ bs


@dataclass(frozen=True)
class PhaseShifter:
    phi: float
    mode: str = "c"

    def __post_init__(self):
        _check_mode(self.mode)

    def unitary(self, rep=SPIN1):
        return phase_unitary(self.phi, self.mode, rep)

    @property
    def canonical_phi(self):
        return float(np.mod(self.phi, 2 * np.pi))

    def to_dict(self):
        return {"kind": "phase", "param": float(self.phi), "mode": self.mode}


@dataclass(frozen=True)
class BeamSplitter:
    eta: float = np.pi / 4

    def unitary(self, rep=SPIN1):
        return beamsplitter_unitary(self.eta, rep)

    def to_dict(self):
        return {"kind": "bs", "param": float(self.eta)}


@dataclass(frozen=True)
class MziElement:
    theta: float

    def unitary(self, rep=SPIN1):
        return mzi_unitary(self.theta, rep)

    def to_dict(self):
        return {"kind": "mzi", "param": float(self.theta)}


def compose(elements, rep=SPIN1):
    """Unitary of a circuit whose elements are listed in application order."""
    _check_rep(rep)
    elements = list(elements)
    if not elements:
        raise ValidationError("compose needs at least one element")
    d = 3 if rep == SPIN1 else 4
    total = np.eye(d, dtype=complex)
    for el in elements:
        u = el if isinstance(el, CircuitUnitary) else el.unitary(rep)
        if u.rep != rep:
            raise ValidationError(f"cannot compose a {u.rep} element into a {rep} circuit")
        total = u.matrix @ total
    return CircuitUnitary(total, rep)


def circuit_to_json(elements):
    return json.dumps([el.to_dict() for el in elements])


def circuit_from_json(text):
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid circuit JSON: {exc}") from exc
    if not isinstance(items, list):
        raise ValidationError("circuit JSON must be a list of elements")
    out = []
    for item in items:
        try:
            kind = item["kind"]
            param = float(item["param"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed circuit element {item!r}") from exc
        if kind == "phase":
            out.append(PhaseShifter(param, item.get("mode", "c")))
        elif kind == "bs":
            out.append(BeamSplitter(param))
        elif kind == "mzi":
            out.append(MziElement(param))
        else:
            raise ValidationError(f"unknown circuit element kind {kind!r}")
    return out


def analyzer_unitary(phi, theta, rep=SPIN1):
    """Phase phi on mode c followed by MZI(theta)."""
    return mzi_unitary(theta, rep) @ phase_unitary(phi, "c", rep)


def analyzer_stack(phis, theta):
    """Spin-1 analyzer matrices for many phases at a fixed MZI setting, shape (P, 3, 3)."""
    phis = np.asarray(phis, dtype=float)
    mzi = mzi_unitary(theta).matrix
    phase = np.exp(-1j * np.outer(phis, [2.0, 1.0, 0.0]))
    return mzi[None, :, :] * phase[:, None, :]


def _analyzer_grid(phis, thetas):
    bs = beamsplitter_unitary(np.pi / 4).matrix
    inner = np.exp(-1j * np.outer(thetas, [2.0, 1.0, 0.0]))
    mzi = np.einsum("ij,tj,jk->tik", bs, inner, bs)
    outer = np.exp(-1j * np.outer(phis, [2.0, 1.0, 0.0]))
    # A[p, t] = mzi[t] @ diag(outer[p])
    return mzi[None, :, :, :] * outer[:, None, None, :]


def measured_operator(phi, theta):
    """A^dagger Lz A for the analyzer A at (phi, theta)."""
    a = analyzer_unitary(phi, theta).matrix
    return a.conj().T @ LZ @ a


def _settings_residual_vec(x, target):
    diff = measured_operator(x[0], x[1]) - target
    return np.concatenate([diff.real.ravel(), diff.imag.ravel()])


def direction_to_settings(n, grid=256, tol=1e-6):
    """Analyzer phases ``(phi, theta)`` so that photon counting measures ``n . L``.

    A deterministic ``grid x grid`` scan over [0, 2pi)^2 seeds a Nelder-Mead
    refinement, which is then polished by least squares. Raises
    :class:`NoSolutionError` if the final residual exceeds ``tol``.
    """
    if not isinstance(n, SpinDirection):
        n = SpinDirection(tuple(np.asarray(n, dtype=float)))
    target = direction_operator(n)
    axis = np.arange(grid) * (2 * np.pi / grid)
    a = _analyzer_grid(axis, axis)
    measured = np.einsum("ptji,jk,ptkl->ptil", a.conj(), LZ, a, optimize=True)
    cost = np.sqrt(np.sum(np.abs(measured - target) ** 2, axis=(-2, -1)))
    ip, it = np.unravel_index(np.argmin(cost), cost.shape)
    x0 = np.array([axis[ip], axis[it]])

    def frob(x):
        return np.linalg.norm(measured_operator(x[0], x[1]) - target)

    nm = minimize(frob, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    polish = least_squares(_settings_residual_vec, nm.x, args=(target,), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    x = polish.x if frob(polish.x) <= frob(nm.x) else nm.x
    resid = frob(x)
    if resid > tol:
        raise NoSolutionError(f"no analyzer setting reaches direction {n.n}: residual {resid:.3e}")
    return float(np.mod(x[0], 2 * np.pi)), float(np.mod(x[1], 2 * np.pi))


def settings_residual(n, phi, theta):
    return float(np.linalg.norm(measured_operator(phi, theta) - direction_operator(n)))
