"""Numba hot loops for the collision recursion.

All kernels operate on the column-stacked 64-component vectorization of the
8-dimensional two-register state (battery x charger x current ancilla) and on
the precomputed one-collision superoperator matrix. The battery reduced state
entries are read directly off the vectorized state:

    rho_B[a, b] = sum_k chi[4a + k, 4b + k],   chi[i, j] = x[8j + i].
"""

import numba as nb
import numpy as np

STATUS_CONVERGED = 0
STATUS_MAX_STEPS = 1
STATUS_NOT_FINITE = 2


@nb.njit(cache=True)
def _battery_entries(x):
    b00 = 0.0 + 0.0j
    b01 = 0.0 + 0.0j
    b11 = 0.0 + 0.0j
    for k in range(4):
        b00 += x[8 * k + k]
        b01 += x[8 * (4 + k) + k]
        b11 += x[8 * (4 + k) + 4 + k]
    return b00, b01, b11


@nb.njit(cache=True)
def _qubit_trace_distance(a00, a01, a11):
    # eigenvalues of the Hermitian 2x2 difference [[a00, a01], [a01*, a11]]
    tr = a00.real + a11.real
    disc = np.sqrt((a00.real - a11.real) ** 2
                   + 4.0 * (a01.real ** 2 + a01.imag ** 2))
    return 0.5 * (abs(0.5 * (tr + disc)) + abs(0.5 * (tr - disc)))


@nb.njit(cache=True)
def run_to_convergence(m, x, tol, window, max_steps):
    """Iterate x <- m @ x until the battery state settles.

    Stops once the trace distance between the battery states of consecutive
    collisions stays below ``tol`` for ``window`` consecutive collisions.
    Returns (x, n_steps, last_distance, status).
    """
    p00, p01, p11 = _battery_entries(x)
    streak = 0
    n = 0
    dist = np.inf
    while n < max_steps:
        x = np.dot(m, x)
        n += 1
        b00, b01, b11 = _battery_entries(x)
        dist = _qubit_trace_distance(b00 - p00, b01 - p01, b11 - p11)
        if not np.isfinite(dist):
            return x, n, dist, STATUS_NOT_FINITE
        if dist < tol:
            streak += 1
            if streak >= window:
                return x, n, dist, STATUS_CONVERGED
        else:
            streak = 0
        p00, p01, p11 = b00, b01, b11
    return x, n, dist, STATUS_MAX_STEPS


@nb.njit(cache=True)
def record_battery(m, x, n_steps, stride):
    """Propagate n_steps collisions, recording the battery 2x2 state.

    Row k of the output holds (b00, b01, b11) after k*stride collisions,
    starting with the initial state in row 0. Returns (records, x_final).
    """
    n_rec = n_steps // stride + 1
    out = np.empty((n_rec, 3), dtype=np.complex128)
    b00, b01, b11 = _battery_entries(x)
    out[0, 0] = b00
    out[0, 1] = b01
    out[0, 2] = b11
    idx = 1
    for n in range(1, n_steps + 1):
        x = np.dot(m, x)
        if n % stride == 0:
            b00, b01, b11 = _battery_entries(x)
            out[idx, 0] = b00
            out[idx, 1] = b01
            out[idx, 2] = b11
            idx += 1
    return out[:idx], x


@nb.njit(cache=True)
def propagate_columns(m, cols, rows, buf):
    """Advance the operator columns one collision per buffer row.

    ``cols`` is a (64, k) block of vectorized operators, ``rows`` an (r, 64)
    block of trace functionals. For each step i the buffer receives the real
    part of rows @ cols after i+1 collisions. Returns the advanced columns.
    """
    steps = buf.shape[0]
    for i in range(steps):
        cols = np.dot(m, cols)
        proj = np.dot(rows, cols)
        for a in range(proj.shape[0]):
            for b in range(proj.shape[1]):
                buf[i, a, b] = proj[a, b].real
    return cols
