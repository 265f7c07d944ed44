"""Two-photon states injected by the interferometric pair source."""

from dataclasses import dataclass
import json

import numpy as np

from .fock import DensityMatrix, PureState, ValidationError, basis_vector, BosonicBasisState
from .optics import beamsplitter_unitary


@dataclass(frozen=True)
class SourceParams:
    """``R``: fraction of pairs born before the first splitter; ``V``: visibility."""

    R: float = 0.0
    V: float = 1.0

    def __post_init__(self):
        for name in ("R", "V"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {v!r}")

    def to_json(self):
        return json.dumps({"R": self.R, "V": self.V})

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
            return cls(float(data["R"]), float(data["V"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed source parameters: {exc}") from exc


def noon_state():
    return PureState(np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0))


def _check_prob(name, value):
    if not (0.0 <= value <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")


def input_state_unnormalized(R, phase=0.0):
    """sqrt(R) U_BS |2;0> + sqrt(1-R) e^{i phase} |NOON>, before normalization."""
    _check_prob("R", R)
    split_pair = beamsplitter_unitary(np.pi / 4).matrix @ basis_vector(BosonicBasisState.N20)
    return np.sqrt(R) * split_pair + np.sqrt(1.0 - R) * np.exp(1j * phase) * noon_state().amplitudes


def input_state(R, phase=0.0):
    """Source output with a fraction ``R`` of pairs generated upstream of the splitter.

    Normalized numerically; compare with :func:`closed_form_normalization`.
    """
    return PureState.normalized(input_state_unnormalized(R, phase))


def closed_form_normalization(R):
    """The closed-form constant 1/sqrt(1 + 2R(1-R)), kept for comparison only."""
    _check_prob("R", R)
    return 1.0 / np.sqrt(1.0 + 2.0 * R * (1.0 - R))


def numerical_normalization(R, phase=0.0):
    return 1.0 / float(np.linalg.norm(input_state_unnormalized(R, phase)))


def noisy_state(psi, V):
    """V |psi><psi| + (1 - V) I/3."""
    _check_prob("V", V)
    amps = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    if amps.shape != (3,) or abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
        raise ValidationError("noisy_state needs a normalized spin-1 state")
    rho = V * np.outer(amps, amps.conj()) + (1.0 - V) * np.eye(3) / 3.0
    return DensityMatrix(rho)


def source_state(params, phase=0.0):
    return noisy_state(input_state(params.R, phase), params.V)
