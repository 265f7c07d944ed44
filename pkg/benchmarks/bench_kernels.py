"""Compare the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Both variants are called directly, so one process measures both; the
package-level choice between them is made by SPIN1OPTICS_DISABLE_NUMBA.
"""

import argparse
import timeit

import numpy as np

from spin1optics import _kernels
from spin1optics.optics import analyzer_stack
from spin1optics.reference import tomography_table
from spin1optics.spin import five_directions
from spin1optics.tomography import CountRecord, _stacked_projectors


def _cases():
    rng = np.random.default_rng(0)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    psi = np.ascontiguousarray(rng.normal(size=3) + 1j * rng.normal(size=3))
    psi /= np.linalg.norm(psi)
    analyzers = np.ascontiguousarray(analyzer_stack(np.linspace(0, 2 * np.pi, 4096, endpoint=False), np.pi / 2))

    counts = CountRecord.from_probabilities(tomography_table(), 10_000).counts.ravel().astype(float)
    weights = counts / 10_000.0
    proj = np.ascontiguousarray(_stacked_projectors(five_directions()))
    rho0 = np.eye(3, dtype=complex) / 3

    return {
        "fringe_probs (4096 phases)": (
            lambda: _kernels.fringe_probs_np(analyzers, rho),
            lambda: _kernels.fringe_probs_nb(analyzers, rho),
        ),
        "pure_fringe_probs (4096 phases)": (
            lambda: _kernels.pure_fringe_probs_np(analyzers, psi),
            lambda: _kernels.pure_fringe_probs_nb(analyzers, psi),
        ),
        "mle_fixed_point (published table)": (
            lambda: _kernels.mle_fixed_point_np(proj, weights, rho0, 0.2, 1e-10, 100_000),
            lambda: _kernels.mle_fixed_point_nb(proj, weights, rho0, 0.2, 1e-10, 100_000),
        ),
    }


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
    print(f"{'kernel':36s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, (f_np, f_nb) in _cases().items():
        t_np = best_of(f_np, args.repeat, args.number)
        if _kernels.HAVE_NUMBA:
            f_nb()  # compile outside the timed region
            t_nb = best_of(f_nb, args.repeat, args.number)
            print(f"{name:36s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:36s} {1e3 * t_np:11.3f} {'-':>11s} {'-':>8s}")


if __name__ == "__main__":
    main()
