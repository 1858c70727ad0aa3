"""Collisional-model simulator for an open two-qubit quantum battery.

A driven charger qubit feeds a battery qubit while colliding with a stream
of environment ancillas; consecutive ancillas mix through an incoherent
partial swap with probability p, which tunes the environment memory. The
package computes steady-state energy and ergotropy, transient trajectories,
a Markovian master-equation benchmark and the geometric (state-space
volume) memory measure for the battery and the battery+charger maps.
"""

from .engine import (
    EngineState,
    ModelParams,
    SteadyStateResult,
    Trajectory,
    TrajectoryRecord,
    continuous_mode_params,
    initial_state,
    run_to_steady,
    step,
    step_superoperator,
    step_unitary,
    trajectory,
)
from .lindblad import (
    DegenerateSteadyStateError,
    Liouvillian,
    build_liouvillian,
    rk4_evolve,
    steady_state,
)
from .nonmarkov import (
    AffineMapSeries,
    MeasureRow,
    generator_basis,
    nonmarkovianity,
    propagate_map,
    swap_probability_scan,
)
from .observables import (
    BatteryReport,
    BlochVector,
    battery_report,
    bloch,
    energy,
    ergotropy,
    ergotropy_from_bloch,
    purity,
)
from .opalg import (
    DimensionError,
    NumericalConsistencyError,
    eigh_descending,
    expm_hermitian,
    kron,
    partial_trace,
    trace_distance,
)

MAX_ERGOTROPY = (2 ** 0.5 - 1) / 2
"""Steady-state ergotropy ceiling in units of omega0, ~0.2071."""

__version__ = "0.1.0"
