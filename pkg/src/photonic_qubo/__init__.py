"""Digital twin of a 16-channel photonic QUBO solver.

Simulates the chip's MZI-mesh optical vector-matrix multiply with calibrated
readout noise, runs the annealing heuristic against it, and reproduces the
accuracy, stability and timing analyses against an exhaustive oracle.
"""

__version__ = "0.1.0"

from .anneal import AnnealSchedule, ExactEvaluator, FlipLaw, PhotonicEvaluator, anneal
from .harness import ExperimentConfig, generate_problem, run_campaign
from .mesh import (
    MeshTopology,
    ReferenceArm,
    ThermoOpticParams,
    build_topology,
    compose_unitary,
    configure_mesh,
    effective_matrix,
    homodyne_readout,
    mzi_transfer,
    voltages_to_phases,
)
from .noise import NoiseParams, apply_noise, fidelity, scale_factor, snr_and_resolution
from .qubo import (
    QuboProblem,
    brute_force_min,
    cost,
    cost_from_readout,
    decompose,
    problem_from_transform,
)
from .timing import TimingParams, latency_breakdown, propagation_delay, response_time, throughput
