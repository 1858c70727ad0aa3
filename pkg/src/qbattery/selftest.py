"""Quick internal consistency checks for the installed package.

Each check prints one PASS/FAIL line; a non-zero return value (exit code 3
through the CLI) signals a numerical-consistency failure. The checks are a
fast subset of the full test suite: operator algebra sanity, the explicit
ancilla-chain cross-check of the two-register recursion, agreement with the
Markovian master equation, and the qubit ergotropy identities.
"""

from __future__ import annotations

import numpy as np

from .engine import ModelParams, initial_state, run_to_steady, step, step_unitary
from .lindblad import build_liouvillian, steady_state
from .observables import bloch, energy, ergotropy, ergotropy_from_bloch, purity
from .opalg import (
    GROUND,
    SIGMA_Z,
    expm_hermitian,
    kron,
    partial_trace,
    trace_distance,
)


def _random_qubit_states(rng, n):
    g = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    rhos = g @ g.conj().transpose(0, 2, 1)
    return rhos / np.trace(rhos, axis1=1, axis2=2)[:, None, None]


def _chain_states(params: ModelParams, n_collisions: int):
    """Explicit ancilla-chain evolution, one fresh qubit per collision."""
    k = n_collisions
    dims = [2, 2] + [2] * k
    rho = kron(GROUND, GROUND, *([GROUND] * k))
    u = step_unitary(params)
    out = []
    for i in range(k):
        rho = _apply_on_factors(rho, dims, (0, 1, 2 + i), u)
        if i + 1 < k:
            rho = ((1 - params.p) * rho
                   + params.p * _swap_factors(rho, dims, 2 + i, 3 + i))
        out.append(partial_trace(rho, dims, keep=[0, 1]))
    return out


def _apply_on_factors(rho, dims, factors, u):
    n = len(dims)
    t = rho.reshape(dims + dims)
    ut = u.reshape([dims[f] for f in factors] * 2)
    k = len(factors)
    t = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), list(factors)))
    t = np.moveaxis(t, range(k), factors)
    cf = [n + f for f in factors]
    t = np.tensordot(t, ut.conj(), axes=(cf, list(range(k, 2 * k))))
    t = np.moveaxis(t, range(2 * n - k, 2 * n), cf)
    d = int(np.prod(dims))
    return t.reshape(d, d)


def _swap_factors(rho, dims, i, j):
    n = len(dims)
    t = rho.reshape(dims + dims)
    t = np.swapaxes(np.swapaxes(t, i, j), n + i, n + j)
    d = int(np.prod(dims))
    return t.reshape(d, d)


def run() -> int:
    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")
        failures += 0 if ok else 1

    u = expm_hermitian(SIGMA_Z, 0.3)
    check("unitary exponential", np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12))

    rng = np.random.default_rng(42)
    worst = 0.0
    for rho in _random_qubit_states(rng, 200):
        closed = ergotropy_from_bloch(bloch(rho), 1.0)
        general = ergotropy(rho, 0.5 * SIGMA_Z)
        identity = energy(rho, 1.0) + 0.5 * np.sqrt(2 * purity(rho) - 1)
        worst = max(worst, abs(closed - general), abs(closed - identity))
    check("ergotropy identities on random states", worst < 1e-9, f"max dev {worst:.2e}")

    params = ModelParams(g=0.5, alpha=0.545, kappa=1.0, gamma=100.0, p=0.5)
    chain = _chain_states(params, 3)
    state = initial_state(params)
    u = step_unitary(params)
    dev = 0.0
    for n in range(3):
        state = step(state, u, params.p, GROUND)
        two_register = partial_trace(state.chi, [2, 2, 2], keep=[0, 1])
        dev = max(dev, trace_distance(two_register, chain[n]))
    check("two-register recursion vs explicit chain", dev < 1e-10, f"max dev {dev:.2e}")

    point = ModelParams(g=0.5, alpha=0.545, kappa=1.0, gamma=300.0, p=0.0)
    engine_ss = run_to_steady(point, tol=1e-10)
    lindblad_ss = steady_state(build_liouvillian(point))
    gap = trace_distance(engine_ss.system_state, lindblad_ss)
    check("collision engine vs Lindblad steady state",
          engine_ss.converged and gap < 5e-3, f"trace distance {gap:.2e}")

    return 0 if failures == 0 else 3
