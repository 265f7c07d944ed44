"""Bundled published reference values (tables, matrices, fit normalizations)."""

from functools import lru_cache
from importlib import resources
import json

import numpy as np

from .fock import DensityMatrix
from .tomography import parse_tomography_data


@lru_cache(maxsize=None)
def load():
    text = resources.files("spin1optics").joinpath("data/reference.json").read_text()
    return json.loads(text)


def tomography_table():
    """The published five-direction table, rows rescaled to unit sum."""
    table, _ = parse_tomography_data(load()["tomography_table"])
    return table


def printed_table():
    """The published probabilities exactly as printed, shape (5, 3)."""
    return np.array([d["probs"] for d in load()["tomography_table"]["directions"]], dtype=float)


def _matrix(key):
    # printed to three decimals, so the trace is only 1 to within rounding
    m = DensityMatrix.from_dict(load()[key], tol=5e-3)
    return np.array(m.entries)


def rho_raw():
    return _matrix("rho_raw")


def rho_ml():
    return _matrix("rho_ml")


def eigenvalues_raw():
    return np.array(load()["eigenvalues_raw"]["values"])


def trace_distance_raw_ml():
    return float(load()["trace_distance_raw_ml"]["value"])


def measured_lz():
    return float(load()["tomography_table"]["lz"]["mean"])


def fringe():
    return dict(load()["fringe"])


def fringe_norms():
    f = fringe()
    return np.array([f["N20"], f["N11"], f["N02"]], dtype=float)
