"""Geometric memory-effect quantifier for battery and battery+charger maps.

The dynamical map after n collisions, with the complementary registers fixed
in their reference (ground) states, acts on generalized Bloch coordinates as
an affine transformation r -> A_n r + q_n. The determinant of A_n measures
the volume of the image of the state set; revivals of that volume signal
information flowing back into the subsystem. The reported measure is the
accumulated positive variation of the volume series, normalized to the
initial volume (A_0 is the identity for the orthonormal generator basis used
here, so no explicit normalization is needed).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .engine import GROUND, ModelParams, run_to_steady, step_superoperator, step_unitary
from .opalg import DimensionError, IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, kron, vec

logger = logging.getLogger(__name__)

# Measure values below this are pure det-roundoff and reported as zero.
NB_NUMERICAL_ZERO = 1e-8
# Single volume increments below this are discarded as roundoff before
# summation, so that long runs cannot accumulate noise into a fake signal.
NB_INCREMENT_FLOOR = 1e-12
# Auto-stop: collisions are propagated until every A entry moves less than
# this per collision (sustained over a full chunk), or the cap is reached.
MAP_STOP_ATOL = 1e-12
DEFAULT_MAP_CAP = 2_000_000
_CHUNK = 2048

SUBSYSTEMS = ("battery", "joint")


def generator_basis(dim: int) -> np.ndarray:
    """Orthonormal Hermitian traceless generators, Tr[G_a G_b] = delta_ab.

    dim=2: Pauli matrices / sqrt(2). dim=4: the fifteen two-qubit Pauli
    products / 2. Orthonormality makes A(0) the identity, so det A is a
    genuine volume-contraction factor.
    """
    paulis = [SIGMA_X, SIGMA_Y, SIGMA_Z]
    if dim == 2:
        return np.array([g / np.sqrt(2.0) for g in paulis])
    if dim == 4:
        singles = [IDENTITY_2] + paulis
        out = [np.kron(a, b) / 2.0
               for i, a in enumerate(singles)
               for j, b in enumerate(singles)
               if (i, j) != (0, 0)]
        return np.array(out)
    raise DimensionError(f"generator basis only defined for dim 2 or 4, got {dim}")


@dataclass(frozen=True)
class AffineMapSeries:
    """Per-collision affine-map data for one subsystem.

    ``volumes`` holds det A_n at every recorded collision. ``maps`` and
    ``offsets`` hold A_n and q_n snapshots at ``map_times``; with
    ``store_maps=True`` these cover every recorded collision, otherwise only
    the first and last (full per-step storage of 15x15 maps over long runs
    is deliberately avoided).
    """

    subsystem: str
    stride: int
    times: np.ndarray
    volumes: np.ndarray
    map_times: np.ndarray
    maps: np.ndarray
    offsets: np.ndarray
    n_collisions: int
    converged: bool


def _embeddings(subsystem: str, eta: np.ndarray):
    """Input columns, output rows and basis size for the tomography."""
    if subsystem == "battery":
        basis = generator_basis(2)
        embed = [kron(g, GROUND, eta) for g in basis]
        embed.append(kron(IDENTITY_2 / 2.0, GROUND, eta))
        rows = [vec(kron(g, IDENTITY_2, IDENTITY_2)).conj() for g in basis]
    elif subsystem == "joint":
        basis = generator_basis(4)
        embed = [kron(g, eta) for g in basis]
        embed.append(kron(np.eye(4, dtype=complex) / 4.0, eta))
        rows = [vec(kron(g, IDENTITY_2)).conj() for g in basis]
    else:
        raise ValueError(f"subsystem must be one of {SUBSYSTEMS}, got {subsystem!r}")
    cols = np.ascontiguousarray(np.stack([vec(e) for e in embed], axis=1))
    return cols, np.ascontiguousarray(np.stack(rows)), len(basis)


def propagate_map(params: ModelParams, subsystem: str,
                  n_collisions: int | None = None, stride: int = 1,
                  store_maps: bool = False,
                  eta: np.ndarray | None = None,
                  max_collisions: int = DEFAULT_MAP_CAP) -> AffineMapSeries:
    """Tomograph the subsystem map along the collision evolution.

    Every generator (plus the maximally mixed operator, which yields the
    affine offset) is pushed through the exact linear collision recursion;
    A_n[a, b] = Tr[G_a Lambda_n[G_b]] is assembled per collision. With
    ``n_collisions=None`` propagation stops once the map has settled (every
    entry of A moving less than MAP_STOP_ATOL per collision) or at
    ``max_collisions``.
    """
    if stride < 1:
        raise ValueError("stride must be at least 1")
    eta = GROUND if eta is None else np.asarray(eta, complex)
    m = step_superoperator(step_unitary(params), params.p, eta)
    cols, rows, nb = _embeddings(subsystem, eta)

    a0 = (rows @ cols).real
    cap = int(n_collisions) if n_collisions is not None else int(max_collisions)
    auto = n_collisions is None
    volume_parts = [np.linalg.det(a0[np.newaxis, :, :nb])]
    map_parts = [a0[np.newaxis]]
    done = 0
    converged = False
    prev_last = a0
    while done < cap:
        steps = min(_CHUNK, cap - done)
        buf = np.empty((steps, nb, nb + 1), dtype=float)
        cols = _kernels.propagate_columns(m, cols, rows, buf)
        done += steps
        volume_parts.append(np.linalg.det(buf[:, :, :nb]))
        if store_maps:
            map_parts.append(buf.copy())
        step_changes = np.abs(np.diff(
            np.concatenate([prev_last[np.newaxis], buf]), axis=0))
        prev_last = buf[-1].copy()
        if auto and steps == _CHUNK and step_changes.max() < MAP_STOP_ATOL:
            converged = True
            break

    volumes = np.concatenate(volume_parts)[::stride]
    times = np.arange(len(volumes)) * stride * params.dt
    if np.max(np.abs(volumes)) > 1.0 + 1e-6:
        logger.info("volume series exceeds the initial volume (max %s) for "
                    "subsystem %s", np.max(np.abs(volumes)), subsystem)
    if store_maps:
        recorded = np.concatenate(map_parts)[::stride]
        map_times = times
        maps = recorded[:, :, :nb]
        offsets = recorded[:, :, nb]
    else:
        map_times = times[[0, -1]]
        maps = np.stack([a0[:, :nb], prev_last[:, :nb]])
        offsets = np.stack([a0[:, nb], prev_last[:, nb]])
    return AffineMapSeries(
        subsystem=subsystem, stride=stride, times=times, volumes=volumes,
        map_times=map_times, maps=maps, offsets=offsets,
        n_collisions=done, converged=converged or not auto)


def nonmarkovianity(series: AffineMapSeries,
                    increment_floor: float = NB_INCREMENT_FLOOR,
                    allow_coarse_stride: bool = False) -> float:
    """Accumulated positive variation of the volume series.

    Requires a per-collision series (stride 1): coarser sampling can step
    over revivals, pass ``allow_coarse_stride=True`` to override. Increments
    below ``increment_floor`` and totals below NB_NUMERICAL_ZERO are treated
    as determinant roundoff and reported as zero.
    """
    if series.stride != 1 and not allow_coarse_stride:
        raise ValueError(
            "measure requires a stride-1 volume series; coarse strides can "
            "miss revivals (use allow_coarse_stride=True to override)")
    if len(series.volumes) < 2:
        raise ValueError("measure needs at least two recorded collisions")
    increments = np.diff(series.volumes)
    total = float(np.sum(increments[increments > increment_floor]))
    return total if total >= NB_NUMERICAL_ZERO else 0.0


@dataclass(frozen=True)
class MeasureRow:
    """One grid point of the swap-probability scan."""

    p: float
    nb_battery: float
    nb_joint: float
    ergotropy_ss: float
    converged: bool


def swap_probability_scan(params: ModelParams, p_values,
                          subsystems=SUBSYSTEMS,
                          tol: float = 1e-9,
                          max_collisions: int = 10_000_000,
                          map_cap: int = DEFAULT_MAP_CAP) -> list[MeasureRow]:
    """Memory measures and steady-state ergotropy over a grid of p values."""
    rows = []
    for p in p_values:
        point = ModelParams(omega0=params.omega0, g=params.g, alpha=params.alpha,
                            kappa=params.kappa, gamma=params.gamma, p=float(p))
        steady = run_to_steady(point, tol=tol, max_collisions=max_collisions)
        measures = {}
        for sub in subsystems:
            series = propagate_map(point, sub, max_collisions=map_cap)
            measures[sub] = nonmarkovianity(series)
        rows.append(MeasureRow(
            p=float(p),
            nb_battery=measures.get("battery", float("nan")),
            nb_joint=measures.get("joint", float("nan")),
            ergotropy_ss=steady.report.ergotropy,
            converged=steady.converged,
        ))
    return rows
