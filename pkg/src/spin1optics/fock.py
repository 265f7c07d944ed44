"""Two-photon, two-mode state spaces and the linear algebra shared by the package.

Two bases are used throughout, always in this fixed order:

* spin-1 (symmetric, 3-dim): ``|2;0>, |1;1>, |0;2>`` (photon numbers in modes c; d)
* two-color (4-dim): ``|is;0>, |i;s>, |s;i>, |0;is>`` where ``i``/``s`` are the
  idler and signal photons. Index ``2*m_idler + m_signal`` with mode c = 0 and
  mode d = 1, i.e. the space is ``C^2 (idler) x C^2 (signal)``.
"""

from dataclasses import dataclass
from enum import Enum
import json

import numpy as np

CONSTRUCT_TOL = 1e-12
FILE_TOL = 1e-9

SPIN1 = "spin1"
TWO_COLOR = "two_color"


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class TwoColorBasisState(Enum):
    IS_0 = 0
    I_S = 1
    S_I = 2
    O_IS = 3


class BosonicBasisState(Enum):
    """Occupation ``(n_c, n_d)`` with its Lz eigenvalue as the enum position."""

    N20 = (2, 0)
    N11 = (1, 1)
    N02 = (0, 2)

    @property
    def index(self):
        return 2 - self.value[0]

    @property
    def lz(self):
        return (self.value[0] - self.value[1]) // 2


# Isometry from the spin-1 space into the two-color space.
SYM_EMBED = np.zeros((4, 3), dtype=complex)
SYM_EMBED[0, 0] = 1.0
SYM_EMBED[1, 1] = SYM_EMBED[2, 1] = 1.0 / np.sqrt(2.0)
SYM_EMBED[3, 2] = 1.0

SYM_PROJECTOR = SYM_EMBED @ SYM_EMBED.conj().T


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def as_matrix(x):
    """Return the complex ndarray behind ``x`` (wrapper object or array-like)."""
    return np.asarray(getattr(x, "entries", x), dtype=complex)


def as_vector(x):
    return np.asarray(getattr(x, "amplitudes", x), dtype=complex)


def hermiticity_error(m):
    m = as_matrix(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    basis: str = SPIN1

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        expected = {SPIN1: 3, TWO_COLOR: 4}.get(self.basis)
        if expected is None:
            raise ValidationError(f"unknown basis {self.basis!r}")
        if amps.shape != (expected,):
            raise ValidationError(f"{self.basis} state needs {expected} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm**2 - 1.0) > CONSTRUCT_TOL:
            raise ValidationError(f"state not normalized: |psi|^2 = {norm**2!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes, basis=SPIN1):
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(amps / norm, basis)

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    def projector(self):
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density_matrix(self):
        if self.basis != SPIN1:
            raise ValidationError("density matrices are only defined on the spin-1 space")
        return DensityMatrix(self.projector())


@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray
    tol: float = CONSTRUCT_TOL

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (3, 4):
            raise ValidationError(f"expected a 3x3 or 4x4 matrix, got shape {m.shape}")
        err = hermiticity_error(m)
        if err > self.tol:
            raise ValidationError(f"matrix is not Hermitian (max |A - A^H| = {err:.3e})")
        object.__setattr__(self, "entries", _frozen(m))


@dataclass(frozen=True)
class DensityMatrix:
    """3x3 Hermitian, unit-trace matrix. Positivity is *not* enforced."""

    entries: np.ndarray
    tol: float = CONSTRUCT_TOL

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (3, 3):
            raise ValidationError(f"density matrix must be 3x3, got shape {m.shape}")
        err = hermiticity_error(m)
        if err > self.tol:
            raise ValidationError(f"density matrix is not Hermitian (max |rho - rho^H| = {err:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.tol:
            raise ValidationError(f"density matrix trace is {tr.real:.12g}, expected 1")
        object.__setattr__(self, "entries", _frozen(m))

    def eigenvalues(self):
        return eigenvalues_hermitian(self.entries)

    def is_psd(self, floor=-1e-10):
        return bool(self.eigenvalues()[-1] >= floor)

    def purity(self):
        return purity(self.entries)

    def to_dict(self):
        return {"re": self.entries.real.tolist(), "im": self.entries.imag.tolist()}

    @classmethod
    def from_dict(cls, data, tol=FILE_TOL):
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed density matrix record: {exc}") from exc
        if re.shape != (3, 3) or im.shape != (3, 3):
            raise ValidationError("density matrix 're' and 'im' must both be 3x3")
        return cls(re + 1j * im, tol=tol)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text, tol=FILE_TOL):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data, tol=tol)


MAXIMALLY_MIXED = DensityMatrix(np.eye(3) / 3.0)


def basis_vector(state):
    """Unit vector in the spin-1 basis for a :class:`BosonicBasisState`."""
    v = np.zeros(3, dtype=complex)
    v[state.index] = 1.0
    return v


def symmetrize(state):
    """Project a two-color state onto the symmetric subspace.

    Returns the 3 spin-1 amplitudes. The result is deliberately not
    renormalized: its squared norm is the weight of the symmetric part.
    """
    psi = as_vector(state)
    if psi.shape != (4,):
        raise ValidationError(f"symmetrize expects a 4-dim two-color vector, got shape {psi.shape}")
    return SYM_EMBED.conj().T @ psi


def lift(state):
    """Embed spin-1 amplitudes into the two-color space (inverse of symmetrize on its range)."""
    psi = as_vector(state)
    if psi.shape != (3,):
        raise ValidationError(f"lift expects a 3-dim spin-1 vector, got shape {psi.shape}")
    return SYM_EMBED @ psi


def eigenvalues_hermitian(op, tol=CONSTRUCT_TOL):
    """Real eigenvalues of a Hermitian matrix, sorted in descending order."""
    m = as_matrix(op)
    err = hermiticity_error(m)
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    if err > tol * scale:
        raise ValidationError(f"eigenvalues_hermitian: input is not Hermitian (max |A - A^H| = {err:.3e})")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]


def trace_norm(a):
    """Sum of absolute eigenvalues, Tr|A|, with no factor 1/2."""
    return float(np.sum(np.abs(eigenvalues_hermitian(a, tol=1e-9))))


def trace_distance(a, b):
    """Conventional trace distance, half the trace norm of ``a - b``."""
    return 0.5 * trace_norm(as_matrix(a) - as_matrix(b))


def purity(rho):
    m = as_matrix(rho)
    return float(np.trace(m @ m).real)


def expectation(op, state):
    """<op> for a pure state vector or a density matrix."""
    o = as_matrix(op)
    s = getattr(state, "entries", None)
    if s is None:
        psi = as_vector(state)
        if psi.ndim == 1:
            return float(np.vdot(psi, o @ psi).real)
        s = psi
    return float(np.trace(np.asarray(s) @ o).real)
