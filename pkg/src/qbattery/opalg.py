"""Dense complex operator algebra for small Hilbert spaces (dim <= 16).

Conventions used throughout the package:

* Basis index 0 is the qubit ground state, index 1 the excited state, so
  ``SIGMA_Z = diag(-1, +1)`` and the free Hamiltonian (omega0/2)*sigma_z has
  ground-state energy -omega0/2.
* ``SIGMA_MINUS = (SIGMA_X + 1j*SIGMA_Y)/2`` annihilates the ground state
  and lowers the excited state.
* Composite systems are ordered battery (factor 0), charger (factor 1),
  ancilla (factor 2); every ``kron`` call follows this order.
* Superoperator matrices act on column-stacked vectorizations, see ``vec``.
"""

from __future__ import annotations

import numpy as np

# Shared numerical tolerances. Tests and the dynamics modules import these
# rather than hard-coding their own.
ATOL_STATE = 1e-10      # Hermiticity / trace / positivity at construction
ATOL_EVOLVED = 1e-9     # same checks after long evolutions
ATOL_UNITARY = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()
IDENTITY_2 = np.eye(2, dtype=complex)
GROUND = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)   # |0><0|
EXCITED = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)  # |1><1|


class DimensionError(ValueError):
    """Operator or state dimensions incompatible with the requested operation."""


class NumericalConsistencyError(RuntimeError):
    """A quantity violated a numerical invariant beyond roundoff tolerance."""


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of one or more operators, left to right."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def partial_trace(rho: np.ndarray, dims: list[int], keep) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    ``dims`` lists the factor dimensions in tensor order and must multiply to
    the matrix dimension. ``keep`` is an iterable of factor indices; the kept
    factors stay in their original order. Works for arbitrary (also
    non-Hermitian) operators, which the map tomography relies on.
    """
    rho = np.asarray(rho)
    d = int(np.prod(dims))
    if rho.shape != (d, d):
        raise DimensionError(
            f"operator shape {rho.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {dims}")
    n = len(dims)
    tensor = rho.reshape(dims + dims)
    # einsum with repeated labels on traced bra/ket axis pairs
    letters = "abcdefghijkl"
    row = [letters[i] for i in range(n)]
    col = [letters[i] if i not in keep else letters[n + i] for i in range(n)]
    out_sub = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    kept_dim = int(np.prod([dims[i] for i in keep])) if keep else 1
    traced = np.einsum("".join(row + col) + "->" + out_sub, tensor)
    return traced.reshape(kept_dim, kept_dim)


def require_hermitian(h: np.ndarray, atol: float = ATOL_STATE) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got {h.shape}")
    if np.max(np.abs(h - h.conj().T)) > atol:
        raise NumericalConsistencyError("matrix is not Hermitian within tolerance")
    return h


def expm_hermitian(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-1j*h*dt) for Hermitian h, via eigendecomposition.

    Exact to roundoff at these dimensions and guarantees a unitary result,
    unlike a truncated series.
    """
    h = require_hermitian(h)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def eigh_descending(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""
    h = require_hermitian(h)
    w, v = np.linalg.eigh(h)
    return w[::-1].copy(), v[:, ::-1].copy()


def det_real(m: np.ndarray) -> float:
    """Determinant of a real square matrix."""
    m = np.asarray(m, dtype=float)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got {m.shape}")
    return float(np.linalg.det(m))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) * trace norm of (a - b) for Hermitian a, b."""
    diff = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: vec(x)[j*d + i] = x[i, j]."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of ``vec`` for a d x d matrix."""
    return np.asarray(v).reshape(d, d, order="F")


def validate_density_matrix(rho: np.ndarray, atol: float = ATOL_STATE) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return rho unchanged."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if rho.shape != (d, d):
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise NumericalConsistencyError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise NumericalConsistencyError(
            f"density matrix trace {np.trace(rho)} differs from 1")
    if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -atol:
        raise NumericalConsistencyError("density matrix has a negative eigenvalue")
    return rho
