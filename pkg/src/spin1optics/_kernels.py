"""Hot numeric loops with a numba path and a pure-numpy fallback.

Set ``SPIN1OPTICS_DISABLE_NUMBA=1`` to force the numpy implementations
(useful for debugging and for the benchmark comparison). Both paths expose
identical signatures and return identical results up to rounding.
"""

import os

import numpy as np

_DISABLE = os.environ.get("SPIN1OPTICS_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)

try:
    if _DISABLE:
        raise ImportError("numba disabled by environment")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# --------------------------------------------------------------------------
# numpy reference implementations
# --------------------------------------------------------------------------


def _loglik_np(projectors, weights, rho):
    probs = np.einsum("kij,ji->k", projectors, rho).real
    mask = weights > 0
    if np.any(probs[mask] <= 0.0):
        return -np.inf, probs
    return float(np.sum(weights[mask] * np.log(probs[mask]))), probs


def mle_fixed_point_np(projectors, weights, rho0, eps, tol, max_iter):
    """Diluted R-rho-R iteration.

    ``weights`` are normalized frequencies (sum over all outcomes equals the
    number of measurement settings); the log-likelihood reported is
    ``sum(weights * log(p))`` in the same units. Returns
    ``(rho, history, n_iter, converged)`` where ``history[:n_iter + 1]``
    holds the log-likelihood of every accepted iterate.
    """
    rho = rho0.copy()
    history = np.empty(max_iter + 1)
    ll, probs = _loglik_np(projectors, weights, rho)
    history[0] = ll
    mask = weights > 0
    it = 0
    converged = False
    while it < max_iter:
        ratio = np.zeros_like(weights)
        ratio[mask] = weights[mask] / probs[mask]
        R = np.einsum("k,kij->ij", ratio, projectors)
        step = eps
        # Halve the dilution until the likelihood does not decrease.
        while True:
            cand = (1.0 - step) * rho + step * (R @ rho @ R)
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.trace(cand).real
            ll_new, probs_new = _loglik_np(projectors, weights, cand)
            if ll_new >= ll or step < 1e-12:
                break
            step *= 0.5
        it += 1
        if ll_new < ll:
            history[it] = ll
            break
        gain = ll_new - ll
        rho, ll, probs = cand, ll_new, probs_new
        history[it] = ll
        if gain < tol:
            converged = True
            break
    return rho, history[: it + 1], it, converged


def fringe_probs_np(analyzers, rho):
    """Diagonal of ``A rho A^dagger`` for a stack of analyzers ``(P, 3, 3)``."""
    return np.einsum("pij,jk,pik->pi", analyzers, rho, analyzers.conj()).real


def pure_fringe_probs_np(analyzers, psi):
    """``|A psi|^2`` for a stack of analyzers; faster than the mixed-state path."""
    out = analyzers @ psi
    return (out * out.conj()).real


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _probs_nb(projectors, rho, probs):
        k_count = projectors.shape[0]
        d = rho.shape[0]
        for k in range(k_count):
            acc = 0.0
            for i in range(d):
                for j in range(d):
                    acc += (projectors[k, i, j] * rho[j, i]).real
            probs[k] = acc

    @njit(cache=True)
    def _loglik_nb(weights, probs):
        ll = 0.0
        for k in range(weights.shape[0]):
            if weights[k] > 0.0:
                if probs[k] <= 0.0:
                    return -np.inf
                ll += weights[k] * np.log(probs[k])
        return ll

    @njit(cache=True)
    def mle_fixed_point_nb(projectors, weights, rho0, eps, tol, max_iter):
        d = rho0.shape[0]
        k_count = projectors.shape[0]
        rho = rho0.copy()
        history = np.empty(max_iter + 1)
        probs = np.empty(k_count)
        probs_new = np.empty(k_count)
        _probs_nb(projectors, rho, probs)
        ll = _loglik_nb(weights, probs)
        history[0] = ll
        R = np.empty((d, d), dtype=np.complex128)
        it = 0
        converged = False
        ll_new = ll
        cand = rho.copy()
        while it < max_iter:
            R[:, :] = 0.0
            for k in range(k_count):
                if weights[k] > 0.0:
                    r = weights[k] / probs[k]
                    for i in range(d):
                        for j in range(d):
                            R[i, j] += r * projectors[k, i, j]
            RrR = R @ rho @ R
            step = eps
            while True:
                for i in range(d):
                    for j in range(d):
                        cand[i, j] = (1.0 - step) * rho[i, j] + step * RrR[i, j]
                for i in range(d):
                    for j in range(i, d):
                        v = 0.5 * (cand[i, j] + np.conj(cand[j, i]))
                        cand[i, j] = v
                        cand[j, i] = np.conj(v)
                tr = 0.0
                for i in range(d):
                    tr += cand[i, i].real
                for i in range(d):
                    for j in range(d):
                        cand[i, j] /= tr
                _probs_nb(projectors, cand, probs_new)
                ll_new = _loglik_nb(weights, probs_new)
                if ll_new >= ll or step < 1e-12:
                    break
                step *= 0.5
            it += 1
            if ll_new < ll:
                history[it] = ll
                break
            gain = ll_new - ll
            rho[:, :] = cand
            probs[:] = probs_new
            ll = ll_new
            history[it] = ll
            if gain < tol:
                converged = True
                break
        return rho, history[: it + 1], it, converged

    @njit(cache=True)
    def fringe_probs_nb(analyzers, rho):
        p_count = analyzers.shape[0]
        d = rho.shape[0]
        out = np.empty((p_count, d))
        for p in range(p_count):
            A = analyzers[p]
            for i in range(d):
                acc = 0.0 + 0.0j
                for j in range(d):
                    for k in range(d):
                        acc += A[i, j] * rho[j, k] * np.conj(A[i, k])
                out[p, i] = acc.real
        return out

    @njit(cache=True)
    def pure_fringe_probs_nb(analyzers, psi):
        p_count = analyzers.shape[0]
        d = psi.shape[0]
        out = np.empty((p_count, d))
        for p in range(p_count):
            for i in range(d):
                acc = 0.0 + 0.0j
                for j in range(d):
                    acc += analyzers[p, i, j] * psi[j]
                out[p, i] = acc.real * acc.real + acc.imag * acc.imag
        return out

    mle_fixed_point = mle_fixed_point_nb
    fringe_probs = fringe_probs_nb
    pure_fringe_probs = pure_fringe_probs_nb
else:
    mle_fixed_point = mle_fixed_point_np
    fringe_probs = fringe_probs_np
    pure_fringe_probs = pure_fringe_probs_np


BACKEND = "numba" if HAVE_NUMBA else "numpy"
