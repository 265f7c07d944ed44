"""Command-line entry point.

Exit status: 0 success, 1 validation error, 2 numerical non-convergence or a
failed replication criterion, 3 I/O error. Errors are reported as one JSON
line on stderr. Each output file is written atomically and accompanied by
``<output>.manifest.json``.
"""

import argparse
from contextlib import contextmanager
import hashlib
import json
import os
import platform
import sys
import tempfile
import time

import numpy as np

from . import __version__, _kernels, acceptance, reference
from .fock import ValidationError
from .harness import (
    FringeScan,
    default_phis,
    fit_fringe,
    fringe_csv_text,
    parse_fringe_csv,
    simulate_fringe,
    synthesize_counts,
)
from .rng import check_seed
from .source import SourceParams
from .tomography import CountRecord, consistency_check, load_tomography_file, reconstruct

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

COMMANDS = ("simulate-fringe", "synth-counts", "fit-fringe", "tomo-reconstruct", "tomo-verify", "replicate-paper")


class NonConvergence(RuntimeError):
    pass


class CriterionFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _seed(text):
    try:
        return check_seed(int(text, 0))
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser():
    p = _Parser(prog="spin1optics", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fringe_args(sp):
        sp.add_argument("--R", type=float, default=0.0)
        sp.add_argument("--V", type=float, default=1.0)
        sp.add_argument("--theta", type=float, default=np.pi / 2)
        sp.add_argument("--phi-start", type=float, default=0.0)
        sp.add_argument("--phi-end", type=float, default=2 * np.pi)
        sp.add_argument("--steps", type=int, default=50)

    sp = sub.add_parser("simulate-fringe", help="outcome probabilities along a phase scan")
    fringe_args(sp)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("synth-counts", help="Poisson counts from a probability CSV or source parameters")
    fringe_args(sp)
    sp.add_argument("--in", dest="inp")
    sp.add_argument("--norms", type=float, nargs=3, metavar=("N20", "N11", "N02"))
    sp.add_argument("--seed", type=_seed, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("fit-fringe", help="fit V, R and normalizations to a count CSV")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--theta", type=float, default=np.pi / 2)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("tomo-reconstruct", help="linear-inversion and/or maximum-likelihood reconstruction")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--method", choices=("linear", "mle", "both"), default="both")
    sp.add_argument("--shots", type=int, default=10_000, help="effective events per direction for probability input")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("tomo-verify", help="consistency residuals of a tomography table")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--lz", type=float, help="measured <Lz> (overrides the file)")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("replicate-paper", help="run every acceptance criterion against the bundled reference values")
    sp.add_argument("--seed", type=_seed, default=acceptance.DEFAULT_SEED)
    sp.add_argument("--out", required=True)
    sp.add_argument("--tolerance-report", help="also write a plain-text pass/fail report here")
    return p


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _versions():
    import scipy

    out = {"spin1optics": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:
        pass
    return out


class _Run:
    def __init__(self, args):
        self.args = args
        self.inputs = []
        self.outputs = []
        self.timings = {}

    def read(self, path):
        with open(path) as fh:
            text = fh.read()
        self.inputs.append({"path": path, "sha256": hashlib.sha256(text.encode()).hexdigest()})
        return text

    @contextmanager
    def timed(self, label):
        t0 = time.perf_counter()
        yield
        self.timings[label] = time.perf_counter() - t0

    def write(self, path, text):
        atomic_write(path, text)
        self.outputs.append(path)

    def manifest(self):
        args = {k: v for k, v in vars(self.args).items() if k != "command"}
        for path in list(self.outputs):
            body = {
                "command": self.args.command,
                "arguments": args,
                "seed": args.get("seed"),
                "inputs": self.inputs,
                "output": {"path": path, "sha256": _sha256(path)},
                "versions": _versions(),
                "kernel_backend": _kernels.BACKEND,
                "timings_s": self.timings,
                "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            }
            atomic_write(path + ".manifest.json", _dump(body))


def _phis(args):
    return default_phis(args.steps, args.phi_start, args.phi_end)


def cmd_simulate_fringe(run):
    a = run.args
    phis = _phis(a)
    with run.timed("simulate"):
        probs = simulate_fringe(SourceParams(a.R, a.V), a.theta, phis)
    run.write(a.out, fringe_csv_text(FringeScan(a.theta, phis, probs=probs)))
    return EXIT_OK


def cmd_synth_counts(run):
    a = run.args
    if a.inp:
        scan = parse_fringe_csv(run.read(a.inp), theta=a.theta)
        if scan.probs is None:
            raise ValidationError(f"{a.inp}: expected a probability CSV (phi,p20,p11,p02)")
        phis, probs = scan.phis, scan.probs
    else:
        phis = _phis(a)
        probs = simulate_fringe(SourceParams(a.R, a.V), a.theta, phis)
    norms = np.array(a.norms) if a.norms else reference.fringe_norms()
    with run.timed("synthesize"):
        scan = synthesize_counts(probs, norms, a.seed, phis=phis, theta=a.theta)
    run.write(a.out, fringe_csv_text(scan))
    return EXIT_OK


def cmd_fit_fringe(run):
    a = run.args
    scan = parse_fringe_csv(run.read(a.inp), theta=a.theta)
    if scan.counts is None:
        raise ValidationError(f"{a.inp}: expected a count CSV (phi,count20,count11,count02)")
    with run.timed("fit"):
        fit = fit_fringe(scan)
    run.write(a.out, _dump(fit.to_dict()))
    if not fit.converged:
        raise NonConvergence("fringe fit did not converge")
    return EXIT_OK


def cmd_tomo_reconstruct(run):
    a = run.args
    run.read(a.inp)
    data = load_tomography_file(a.inp)
    if a.shots <= 0:
        raise ValidationError("--shots must be positive")
    with run.timed("reconstruct"):
        result = reconstruct(data, method=a.method, shots=a.shots)
    run.write(a.out, _dump(result.to_dict()))
    if result.converged is False:
        raise NonConvergence("maximum-likelihood iteration hit the iteration cap")
    return EXIT_OK


def cmd_tomo_verify(run):
    a = run.args
    run.read(a.inp)
    data = load_tomography_file(a.inp)
    table = data.to_table() if isinstance(data, CountRecord) else data
    rep = consistency_check(table, lz=a.lz)
    run.write(a.out, _dump(rep.to_dict()))
    return EXIT_OK


def cmd_replicate_paper(run):
    a = run.args
    results = []
    for number, fn in acceptance.CRITERIA.items():
        with run.timed(f"criterion_{number}"):
            results.append(fn(seed=a.seed) if number in acceptance.SEEDED else fn())
    failed = [c for c in results if not c.passed]
    report = {
        "seed": a.seed,
        "passed": not failed,
        "criteria": [c.to_dict() for c in results],
    }
    run.write(a.out, _dump(report))
    if a.tolerance_report:
        lines = [c.line() for c in results]
        lines.append(f"{len(results) - len(failed)}/{len(results)} criteria passed")
        run.write(a.tolerance_report, "\n".join(lines) + "\n")
    if failed:
        raise CriterionFailure("failed criteria: " + ", ".join(str(c.number) for c in failed))
    return EXIT_OK


HANDLERS = {
    "simulate-fringe": cmd_simulate_fringe,
    "synth-counts": cmd_synth_counts,
    "fit-fringe": cmd_fit_fringe,
    "tomo-reconstruct": cmd_tomo_reconstruct,
    "tomo-verify": cmd_tomo_verify,
    "replicate-paper": cmd_replicate_paper,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}) + "\n")
    return code


def dispatch(args):
    run = _Run(args)
    try:
        code = HANDLERS[args.command](run)
    except (NonConvergence, CriterionFailure) as exc:
        run.manifest()
        return _fail("non_convergence" if isinstance(exc, NonConvergence) else "criterion_failure", exc, EXIT_NUMERIC)
    run.manifest()
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return dispatch(args)
    except ValidationError as exc:
        return _fail("validation", exc, EXIT_VALIDATION)
    except (OSError, UnicodeDecodeError) as exc:
        return _fail("io", exc, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
