"""Energy, ergotropy, purity and Bloch-vector observables for battery states.

The battery is a qubit with Hamiltonian (omega0/2)*sigma_z in the convention
of :mod:`qbattery.opalg`, i.e. ground-state energy -omega0/2. Ergotropy is
the maximum work extractable by a cyclic unitary; the qubit closed form
(omega0/2)(|<sigma>| + <sigma_z>) and the general spectral formula are both
provided and agree to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .opalg import (
    ATOL_STATE,
    DimensionError,
    NumericalConsistencyError,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    eigh_descending,
    require_hermitian,
)

BLOCH_NORM_ATOL = 1e-9
ERGOTROPY_CLAMP = 1e-10


class BlochVector(NamedTuple):
    """Pauli expectation values (<sigma_x>, <sigma_y>, <sigma_z>)."""

    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)


@dataclass(frozen=True)
class BatteryReport:
    """Steady-state or snapshot observables of the battery qubit.

    ``energy`` and ``ergotropy`` are in units of omega0; ``ergotropy`` equals
    energy + (omega0/2)*sqrt(2*purity - 1) up to roundoff.
    """

    energy: float
    ergotropy: float
    purity: float
    bloch: BlochVector


def _require_qubit(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DimensionError(f"expected a qubit state, got shape {rho.shape}")
    return rho


def bloch(rho: np.ndarray) -> BlochVector:
    """Bloch vector of a qubit state."""
    rho = _require_qubit(rho)
    b = BlochVector(
        float(np.trace(SIGMA_X @ rho).real),
        float(np.trace(SIGMA_Y @ rho).real),
        float(np.trace(SIGMA_Z @ rho).real),
    )
    if b.norm > 1.0 + BLOCH_NORM_ATOL:
        raise NumericalConsistencyError(f"Bloch vector norm {b.norm} exceeds 1")
    return b


def energy(rho: np.ndarray, omega0: float) -> float:
    """Mean energy (omega0/2)*<sigma_z> of a qubit state."""
    rho = _require_qubit(rho)
    return 0.5 * omega0 * float(np.trace(SIGMA_Z @ rho).real)


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2]."""
    rho = np.asarray(rho, dtype=complex)
    return float(np.trace(rho @ rho).real)


def ergotropy(rho: np.ndarray, h: np.ndarray) -> float:
    """Maximum cyclic-unitary work extractable from ``rho`` under ``h``.

    Computed as Tr[h*rho] minus the energy of the passive state, i.e. the
    state with the populations of rho sorted decreasingly over the energy
    eigenstates sorted increasingly. For a degenerate ``h`` the passive
    reference depends on the (deterministic) eigenbasis chosen by the
    solver; the value is basis-independent only for non-degenerate spectra.
    """
    rho = np.asarray(rho, dtype=complex)
    h = require_hermitian(h)
    if rho.shape != h.shape:
        raise DimensionError(
            f"state shape {rho.shape} does not match Hamiltonian {h.shape}")
    r, v_rho = eigh_descending(rho)          # populations, descending
    eps, v_h = np.linalg.eigh(h)             # energies, ascending
    overlaps = np.abs(v_rho.conj().T @ v_h) ** 2
    value = float(r @ overlaps @ eps - r @ eps)
    if value < -ERGOTROPY_CLAMP:
        raise NumericalConsistencyError(
            f"ergotropy {value} negative beyond roundoff tolerance")
    return max(value, 0.0)


def ergotropy_from_bloch(b: BlochVector, omega0: float) -> float:
    """Qubit ergotropy closed form (omega0/2)(|<sigma>| + <sigma_z>)."""
    if b.norm > 1.0 + BLOCH_NORM_ATOL:
        raise NumericalConsistencyError(f"Bloch vector norm {b.norm} exceeds 1")
    return 0.5 * omega0 * (b.norm + b.z)


def battery_report(rho: np.ndarray, omega0: float = 1.0,
                   atol: float = ATOL_STATE) -> BatteryReport:
    """Bundle energy, ergotropy, purity and Bloch vector of a battery state."""
    from .opalg import validate_density_matrix

    rho = _require_qubit(rho)
    validate_density_matrix(rho, atol=atol)
    b = bloch(rho)
    return BatteryReport(
        energy=energy(rho, omega0),
        ergotropy=ergotropy_from_bloch(b, omega0),
        purity=purity(rho),
        bloch=b,
    )
