"""Markovian benchmark for the battery-charger pair.

Master equation in the interaction picture:

    drho/dt = -i [H_int, rho] + kappa * D[sm_C] rho,
    D[c] rho = c rho c^dag - (c^dag c rho + rho c^dag c) / 2,

with H_int the exchange-plus-drive Hamiltonian of :mod:`qbattery.engine`.
The steady state is obtained from the null space of the vectorized
generator, time evolution from a fixed-step RK4 integrator. Superoperator
matrices use the column-stacking convention of :func:`qbattery.opalg.vec`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .engine import ModelParams, interaction_hamiltonian
from .opalg import (
    IDENTITY_2,
    SIGMA_MINUS,
    kron,
    unvec,
    validate_density_matrix,
    vec,
)

NULL_SPACE_RESIDUAL = 1e-9
DEGENERACY_THRESHOLD = 1e-8  # singular values below this count as null


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian null space has dimension greater than one."""


@dataclass(frozen=True)
class Liouvillian:
    """Vectorized generator acting on column-stacked 4x4 density matrices."""

    matrix: np.ndarray
    params: ModelParams

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def apply_generator(rho: np.ndarray, params: ModelParams) -> np.ndarray:
    """Direct action -i[H, rho] + kappa D[sm_C] rho on a 4x4 matrix."""
    h = interaction_hamiltonian(params)
    c = kron(IDENTITY_2, SIGMA_MINUS)
    anticomm = c.conj().T @ c
    return (-1j * (h @ rho - rho @ h)
            + params.kappa * (c @ rho @ c.conj().T
                              - 0.5 * (anticomm @ rho + rho @ anticomm)))


def build_liouvillian(params: ModelParams) -> Liouvillian:
    """16x16 matrix representation of the generator (p, gamma are ignored)."""
    m = np.empty((16, 16), dtype=complex)
    basis = np.zeros((4, 4), dtype=complex)
    for j in range(16):
        basis[j % 4, j // 4] = 1.0
        m[:, j] = vec(apply_generator(basis, params))
        basis[j % 4, j // 4] = 0.0
    return Liouvillian(matrix=m, params=params)


def steady_state(liouvillian: Liouvillian) -> np.ndarray:
    """Unique normalized PSD null vector of the generator.

    Raises :class:`DegenerateSteadyStateError` when several singular values
    vanish (e.g. g=0, where the battery decouples and any battery marginal
    is stationary).
    """
    m = liouvillian.matrix
    # SVD rather than eigh(L^dag L): squaring the generator would limit the
    # attainable residual to ~sqrt(eps).
    _, s, vh = np.linalg.svd(m)
    scale = max(s[0], 1.0)
    null_count = int(np.sum(s < DEGENERACY_THRESHOLD * scale))
    if null_count == 0:
        raise DegenerateSteadyStateError(
            f"no null vector found (smallest singular value {s[-1]})")
    if null_count > 1:
        raise DegenerateSteadyStateError(
            f"steady state is not unique: {null_count} null singular values")
    rho = unvec(vh[-1].conj(), 4)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(m @ vec(rho)))
    if residual > NULL_SPACE_RESIDUAL:
        raise DegenerateSteadyStateError(
            f"null-space residual {residual} exceeds {NULL_SPACE_RESIDUAL}")
    return validate_density_matrix(rho)


def rk4_evolve(rho0: np.ndarray, params: ModelParams, t_final: float,
               dt: float) -> np.ndarray:
    """Fixed-step RK4 integration of the master equation up to t_final.

    The recommended step obeys dt <= 0.01 / max(g, alpha, kappa); larger
    steps trigger a warning but the integration proceeds.
    """
    rho0 = validate_density_matrix(np.asarray(rho0, dtype=complex))
    if rho0.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-qubit state, got {rho0.shape}")
    if t_final < 0 or dt <= 0:
        raise ValueError("t_final must be non-negative and dt positive")
    fastest = max(params.g, params.alpha, params.kappa)
    if fastest > 0 and dt > 0.01 / fastest:
        warnings.warn(
            f"RK4 step {dt} exceeds the stability guideline {0.01 / fastest}",
            stacklevel=2)
    if t_final == 0:
        return rho0
    n_steps = max(1, round(t_final / dt))
    h = t_final / n_steps
    m = build_liouvillian(params).matrix
    y = vec(rho0).astype(complex)
    for _ in range(n_steps):
        k1 = m @ y
        k2 = m @ (y + 0.5 * h * k1)
        k3 = m @ (y + 0.5 * h * k2)
        k4 = m @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    rho = unvec(y, 4)
    return validate_density_matrix(rho, atol=1e-8)
