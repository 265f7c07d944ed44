"""Spin-1 operator algebra on the symmetric two-photon space."""

from dataclasses import dataclass

import numpy as np

from .fock import ValidationError

_S = 1.0 / np.sqrt(2.0)

LX = _S * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
LY = _S * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
LZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
for _m in (LX, LY, LZ):
    _m.setflags(write=False)

DIRECTION_NAMES = ("L1", "L2", "L3", "L4", "L5")


@dataclass(frozen=True)
class SpinOperatorTriple:
    Lx: np.ndarray
    Ly: np.ndarray
    Lz: np.ndarray

    def __iter__(self):
        return iter((self.Lx, self.Ly, self.Lz))


@dataclass(frozen=True)
class SpinDirection:
    n: tuple
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.n, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValidationError(f"spin direction must be a finite 3-vector, got {self.n!r}")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"spin direction must have unit norm, got |n| = {norm!r}")
        object.__setattr__(self, "n", tuple(float(x) for x in v))

    @classmethod
    def normalized(cls, n, name=""):
        v = np.asarray(n, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)), name)

    @property
    def vector(self):
        return np.array(self.n)

    def operator(self):
        return direction_operator(self)


@dataclass(frozen=True)
class OperatorBasis:
    lambda1: tuple
    lambda2: tuple

    @property
    def all(self):
        return self.lambda1 + self.lambda2


def spin_matrices():
    return SpinOperatorTriple(LX, LY, LZ)


def direction_operator(n):
    """n_x Lx + n_y Ly + n_z Lz for a unit vector ``n``."""
    if not isinstance(n, SpinDirection):
        n = SpinDirection(tuple(np.asarray(n, dtype=float)))
    nx, ny, nz = n.n
    return nx * LX + ny * LY + nz * LZ


def five_directions():
    """The five tomography directions L1..L5 in order."""
    vecs = [
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (_S, _S, 0.0),
        (0.0, _S, _S),
        (_S, 0.0, _S),
    ]
    return [SpinDirection(v, name) for v, name in zip(vecs, DIRECTION_NAMES)]


def named_direction(name):
    """Resolve ``"L1".."L5"``, ``"Lx"``, ``"Ly"`` or ``"Lz"``."""
    if name in DIRECTION_NAMES:
        return five_directions()[DIRECTION_NAMES.index(name)]
    axes = {"Lx": (1.0, 0.0, 0.0), "Ly": (0.0, 1.0, 0.0), "Lz": (0.0, 0.0, 1.0)}
    if name in axes:
        return SpinDirection(axes[name], name)
    raise ValidationError(f"unknown spin direction name {name!r}")


def eigenprojectors(n):
    """Projectors onto the +1, 0, -1 eigenspaces of ``n . L`` (in that order)."""
    w, v = np.linalg.eigh(direction_operator(n))
    order = np.argsort(-w)
    return np.array([np.outer(v[:, k], v[:, k].conj()) for k in order])


def moments_from_probs(p_plus, p_zero, p_minus, tol=1e-6):
    """First and second moments of a spin component from its outcome probabilities.

    Returns ``(<L>, <L^2>) = (P+ - P-, P+ + P-)``.
    """
    p = np.array([p_plus, p_zero, p_minus], dtype=float)
    if np.any(p < 0):
        raise ValidationError(f"probabilities must be non-negative, got {p.tolist()}")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"probabilities must sum to 1, observed sum {total!r}")
    return float(p[0] - p[2]), float(p[0] + p[2])


def _hs(a, b):
    return np.trace(a.conj().T @ b).real


def operator_basis():
    """Traceless Hermitian basis with Tr(a b) = 2 delta_ab.

    First-moment sector: Lx, Ly, Lz. Second-moment sector: Gram-Schmidt
    orthogonalization, in this order, of the anticommutators {Lx,Ly},
    {Ly,Lz}, {Lz,Lx}, then Lx^2 - Ly^2 and 3 Lz^2 - 2I.
    """
    seeds = [
        LX @ LY + LY @ LX,
        LY @ LZ + LZ @ LY,
        LZ @ LX + LX @ LZ,
        LX @ LX - LY @ LY,
        3 * LZ @ LZ - 2 * np.eye(3),
    ]
    quad = []
    for s in seeds:
        v = s.astype(complex)
        for q in quad:
            v = v - _hs(q, v) / 2.0 * q
        v = v * np.sqrt(2.0 / _hs(v, v))
        v.setflags(write=False)
        quad.append(v)
    return OperatorBasis((LX, LY, LZ), tuple(quad))


def expansion_coefficients(rho, basis=None):
    """<lambda_a> for every basis operator, in ``basis.all`` order."""
    basis = basis or operator_basis()
    rho = np.asarray(getattr(rho, "entries", rho))
    return np.array([np.trace(rho @ lam).real for lam in basis.all])


def from_expansion(coeffs, basis=None):
    """rho = I/3 + 1/2 sum_a <lambda_a> lambda_a."""
    basis = basis or operator_basis()
    rho = np.eye(3, dtype=complex) / 3.0
    for c, lam in zip(coeffs, basis.all):
        rho = rho + 0.5 * c * lam
    return rho


def rotation_unitary(axis, angle):
    """exp(-i angle axis . L) for a unit ``axis``."""
    w, v = np.linalg.eigh(direction_operator(axis))
    return (v * np.exp(-1j * angle * w)) @ v.conj().T
