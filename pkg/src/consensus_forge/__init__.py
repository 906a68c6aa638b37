"""Consensus of identical linear agents through directed-spanning-tree edge states.

The package turns the consensus problem into decentralized output
stabilization of the fundamental edge states of a directed spanning tree,
tests the fixed-mode consensus criterion, designs per-agent gains that use
only tree links, and checks the result by eigenvalues and simulation.
"""

from .criterion import CriterionVerdict, criterion, dfm_sample, rank_test, unstable_modes
from .exceptions import (
    BadTargets,
    ConsensusForgeError,
    DimensionMismatch,
    MissingRootPath,
    NoSpanningTree,
    NonFiniteState,
    NonSquareBlocks,
    RootHasNeighbors,
    RootHasNoNeighbors,
    ScenarioError,
    SynthesisFailed,
    Uncontrollable,
)
from .graph import (
    Protocol,
    SpanningTree,
    Topology,
    extract_dst,
    find_roots,
    gamma_vector,
    incidence_matrix,
    info_flow_matrix,
    renumber,
    root_path,
    weighted_flow,
)
from .simulate import (
    SimulationResult,
    consensus_error,
    consensus_verdict,
    integrate_agents,
    integrate_edges,
)
from .synthesis import (
    GershgorinReport,
    default_targets,
    design_theorem2,
    design_theorem3,
    gershgorin_check,
    place_poles,
    spectral_abscissa,
)
from .transform import (
    AgentDynamics,
    GainSet,
    TransformedSystem,
    agent_to_edge,
    assemble_closed_loop,
    assemble_dst_closed_loop,
    build_transformed_system,
    closed_loop_product,
    dst_gains,
)

__version__ = "0.1.0"
