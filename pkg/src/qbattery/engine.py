"""Discrete-time collisional dynamics of the driven battery-charger pair.

One collision lasts dt = 1/gamma. In the interaction picture the joint
battery-charger-ancilla evolution is generated by

    H = g (sm_B sp_C + sp_B sm_C) + alpha sx_C
        + sqrt(kappa*gamma) (sp_C sm_a + sm_C sp_a),

after which consecutive ancillas undergo an incoherent partial swap with
probability p. Because each fresh ancilla is uncorrelated and the swap
channel is the mixture (1-p)*Id + p*Swap, the infinite ancilla chain
collapses exactly onto a two-register recursion for the state chi of
(battery x charger x current ancilla):

    sigma = U chi U^dag
    chi'  = (1-p) * (Tr_ancilla[sigma] (x) eta) + p * sigma.

This file provides the exact reference step, the equivalent one-collision
superoperator used by the compiled hot loops, trajectory generation, and
steady-state detection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .observables import BatteryReport, BlochVector, battery_report
from .opalg import (
    ATOL_EVOLVED,
    GROUND,
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    DimensionError,
    expm_hermitian,
    kron,
    partial_trace,
    unvec,
    validate_density_matrix,
    vec,
)

# Consecutive sub-tolerance collisions required before declaring a steady
# state; guards against slow oscillatory transients at large p.
STEADY_WINDOW = 50
DEFAULT_TOL = 1e-9
DEFAULT_MAX_COLLISIONS = 10_000_000


@dataclass(frozen=True)
class ModelParams:
    """Physical rates of the model; omega0 sets the energy unit.

    g is the battery-charger exchange coupling, alpha the drive amplitude on
    the charger, kappa the charger-environment coupling rate, gamma the
    collision rate (collision duration 1/gamma) and p the ancilla-ancilla
    swap probability. ``memory_rate`` is only set in continuous mode, where
    p is derived as exp(-memory_rate/gamma) and must not be chosen freely.
    """

    omega0: float = 1.0
    g: float = 0.0
    alpha: float = 0.0
    kappa: float = 1.0
    gamma: float = 100.0
    p: float = 0.0
    memory_rate: float | None = None

    def __post_init__(self):
        for name in ("omega0", "g", "alpha", "kappa", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.g < 0 or self.alpha < 0 or self.kappa < 0:
            raise ValueError("rates g, alpha, kappa must be non-negative")
        if self.gamma <= 0:
            raise ValueError(f"collision rate gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"swap probability p must lie in [0, 1], got {self.p}")
        if self.memory_rate is not None:
            if self.memory_rate < 0:
                raise ValueError("memory_rate must be non-negative")
            derived = math.exp(-self.memory_rate / self.gamma)
            if abs(self.p - derived) > 1e-12:
                raise ValueError(
                    "in continuous mode p is fixed to exp(-memory_rate/gamma); "
                    f"got p={self.p}, expected {derived}")

    @property
    def dt(self) -> float:
        return 1.0 / self.gamma


def continuous_mode_params(omega0: float, g: float, alpha: float, kappa: float,
                           gamma: float, memory_rate: float) -> ModelParams:
    """Parameters for the continuous-memory limit, p = exp(-memory_rate/gamma)."""
    if memory_rate < 0:
        raise ValueError("memory_rate must be non-negative")
    if gamma < 10.0 * memory_rate:
        warnings.warn(
            f"continuous mode expects gamma >> memory_rate; got gamma={gamma}, "
            f"memory_rate={memory_rate}", stacklevel=2)
    return ModelParams(omega0=omega0, g=g, alpha=alpha, kappa=kappa,
                       gamma=gamma, p=math.exp(-memory_rate / gamma),
                       memory_rate=memory_rate)


@dataclass(frozen=True)
class EngineState:
    """Two-register state: chi on (battery x charger x ancilla), 8x8."""

    chi: np.ndarray
    n: int
    t: float


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    energy: float
    ergotropy: float
    purity: float
    bloch: BlochVector


@dataclass(frozen=True)
class Trajectory:
    """Columnar per-collision battery observables; indexable as records."""

    t: np.ndarray
    energy: np.ndarray
    ergotropy: np.ndarray
    purity: np.ndarray
    bloch_x: np.ndarray
    bloch_y: np.ndarray
    bloch_z: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            t=float(self.t[i]),
            energy=float(self.energy[i]),
            ergotropy=float(self.ergotropy[i]),
            purity=float(self.purity[i]),
            bloch=BlochVector(float(self.bloch_x[i]), float(self.bloch_y[i]),
                              float(self.bloch_z[i])),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class SteadyStateResult:
    """Outcome of ``run_to_steady``; ``converged`` is never silently faked."""

    report: BatteryReport
    converged: bool
    n_collisions: int
    residual: float
    battery_state: np.ndarray
    system_state: np.ndarray
    params: ModelParams | None = field(repr=False, default=None)


def interaction_hamiltonian(params: ModelParams) -> np.ndarray:
    """g (sm_B sp_C + h.c.) + alpha sx_C on the battery-charger pair."""
    return (params.g * (kron(SIGMA_MINUS, SIGMA_PLUS) + kron(SIGMA_PLUS, SIGMA_MINUS))
            + params.alpha * kron(IDENTITY_2, SIGMA_X))


def step_unitary(params: ModelParams) -> np.ndarray:
    """One-collision unitary exp(-i H / gamma) on battery x charger x ancilla."""
    coupling = math.sqrt(params.kappa * params.gamma)
    h = kron(interaction_hamiltonian(params), IDENTITY_2)
    h = h + coupling * (kron(IDENTITY_2, SIGMA_PLUS, SIGMA_MINUS)
                        + kron(IDENTITY_2, SIGMA_MINUS, SIGMA_PLUS))
    return expm_hermitian(h, params.dt)


def initial_state(params: ModelParams, rho_battery: np.ndarray | None = None,
                  rho_charger: np.ndarray | None = None,
                  eta: np.ndarray | None = None) -> EngineState:
    """chi(0) = rho_B x rho_C x eta; all factors default to the ground state."""
    rho_battery = GROUND if rho_battery is None else np.asarray(rho_battery, complex)
    rho_charger = GROUND if rho_charger is None else np.asarray(rho_charger, complex)
    eta = GROUND if eta is None else np.asarray(eta, complex)
    for factor in (rho_battery, rho_charger, eta):
        validate_density_matrix(factor)
    return EngineState(chi=kron(rho_battery, rho_charger, eta), n=0, t=0.0)


def step(state: EngineState, u: np.ndarray, p: float, eta: np.ndarray,
         dt: float = 0.0) -> EngineState:
    """Exact two-register recursion for one collision.

    Equivalent to appending a fresh ancilla in state eta, applying the
    incoherent partial swap between old and new ancilla, and tracing out the
    old one: since the swap channel is (1-p)*Id + p*Swap and the fresh
    ancilla is uncorrelated, that sequence reduces to
    chi' = (1-p) * (Tr_a[U chi U^dag] (x) eta) + p * U chi U^dag.

    Pass ``dt`` (the collision duration) to advance the time stamp.
    """
    sigma = u @ state.chi @ u.conj().T
    if p == 1.0:
        chi = sigma
    else:
        reduced = partial_trace(sigma, [4, 2], keep=[0])
        chi = (1.0 - p) * np.kron(reduced, eta) + p * sigma
    return EngineState(chi=chi, n=state.n + 1, t=state.t + dt)


def _apply_step(chi: np.ndarray, u: np.ndarray, p: float,
                eta: np.ndarray) -> np.ndarray:
    sigma = u @ chi @ u.conj().T
    reduced = partial_trace(sigma, [4, 2], keep=[0])
    return (1.0 - p) * np.kron(reduced, eta) + p * sigma


def step_superoperator(u: np.ndarray, p: float,
                       eta: np.ndarray | None = None) -> np.ndarray:
    """64x64 matrix of one collision on the column-stacked two-register state.

    The recursion is linear in chi, so it applies unchanged to arbitrary
    operators; the map tomography exploits this.
    """
    eta = GROUND if eta is None else np.asarray(eta, complex)
    d = u.shape[0]
    if u.shape != (8, 8) or eta.shape != (2, 2):
        raise DimensionError("step superoperator expects an 8x8 unitary and a qubit eta")
    m = np.empty((d * d, d * d), dtype=complex)
    basis = np.zeros((d, d), dtype=complex)
    for j in range(d * d):
        basis[j % d, j // d] = 1.0
        m[:, j] = vec(_apply_step(basis, u, p, eta))
        basis[j % d, j // d] = 0.0
    return np.ascontiguousarray(m)


def battery_state_from_entries(b00: complex, b01: complex, b11: complex) -> np.ndarray:
    return np.array([[b00, b01], [np.conj(b01), b11]], dtype=complex)


def _marginals(chi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    system = partial_trace(chi, [4, 2], keep=[0])
    battery = partial_trace(system, [2, 2], keep=[0])
    return battery, system


def run_to_steady(params: ModelParams, tol: float = DEFAULT_TOL,
                  max_collisions: int = DEFAULT_MAX_COLLISIONS,
                  window: int = STEADY_WINDOW,
                  rho_battery: np.ndarray | None = None,
                  rho_charger: np.ndarray | None = None,
                  eta: np.ndarray | None = None) -> SteadyStateResult:
    """Iterate collisions until the battery state stops moving.

    Convergence requires the trace distance between the battery states of
    consecutive collisions to stay below ``tol`` for ``window`` collisions in
    a row. On non-convergence (including the effectively unitary p=1 case)
    the result carries ``converged=False`` and the last residual.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    state0 = initial_state(params, rho_battery, rho_charger, eta)
    u = step_unitary(params)
    m = step_superoperator(u, params.p, eta)
    x = np.ascontiguousarray(vec(state0.chi).astype(complex))
    x, n, residual, status = _kernels.run_to_convergence(
        m, x, tol, window, int(max_collisions))
    if status == _kernels.STATUS_NOT_FINITE:
        raise FloatingPointError(
            f"collision recursion produced non-finite values after {n} steps")
    chi = unvec(x, 8)
    validate_density_matrix(chi, atol=ATOL_EVOLVED)
    battery, system = _marginals(chi)
    return SteadyStateResult(
        report=battery_report(battery, params.omega0, atol=ATOL_EVOLVED),
        converged=status == _kernels.STATUS_CONVERGED,
        n_collisions=n,
        residual=float(residual),
        battery_state=battery,
        system_state=system,
        params=params,
    )


def trajectory(params: ModelParams, n_collisions: int, stride: int = 1,
               rho_battery: np.ndarray | None = None,
               rho_charger: np.ndarray | None = None,
               eta: np.ndarray | None = None) -> Trajectory:
    """Battery observables every ``stride`` collisions, starting at t=0."""
    if n_collisions < 1:
        raise ValueError("n_collisions must be at least 1")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    state0 = initial_state(params, rho_battery, rho_charger, eta)
    u = step_unitary(params)
    m = step_superoperator(u, params.p, eta)
    x = np.ascontiguousarray(vec(state0.chi).astype(complex))
    records, x_final = _kernels.record_battery(m, x, int(n_collisions), int(stride))
    validate_density_matrix(unvec(x_final, 8), atol=ATOL_EVOLVED)

    b00 = records[:, 0].real
    b01 = records[:, 1]
    b11 = records[:, 2].real
    bx = 2.0 * b01.real
    by = -2.0 * b01.imag
    bz = b11 - b00
    norm = np.sqrt(bx ** 2 + by ** 2 + bz ** 2)
    half = 0.5 * params.omega0
    steps = np.arange(len(records)) * stride
    return Trajectory(
        t=steps * params.dt,
        energy=half * bz,
        ergotropy=half * (norm + bz),
        purity=0.5 * (1.0 + norm ** 2),
        bloch_x=bx,
        bloch_y=by,
        bloch_z=bz,
    )
