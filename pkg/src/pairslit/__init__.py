"""Two-particle two-slit simulator.

Joint detection statistics straight from |psi|^2 side by side with
pilot-wave trajectory ensembles driven by the phase-gradient guidance law,
plus the two discriminating experiment scenarios built on them.
"""

__version__ = "0.1.0"

from .ensemble import (
    ComOffset,
    ConditioningStarved,
    EnsembleResult,
    IntegratorConfig,
    NoConditioning,
    OppositeSlits,
    SamplerConfig,
    Trajectory,
    TrajectoryStatus,
    equilibrium_density_table,
    integrate_trajectory,
    run_ensemble,
    sample_initial_positions,
)
from .guidance import (
    NodeProximity,
    PairState,
    VelocityPair,
    com_position_closed_form,
    com_velocity,
    com_velocity_parts,
    velocity,
    velocity_field,
)
from .scenarios import (
    ConstraintViolated,
    EnsembleReport,
    ScenarioConfig,
    check_constraints,
    run_scenario,
    run_selective_case,
    run_symmetric_case,
)
from .sqm import (
    DegenerateGeometry,
    ScreenConfig,
    asymmetric_detection_probability,
    com_band_exceedance,
    fringe_spacing,
    joint_density,
    joint_detection_probability,
    marginal_pdf,
    total_probability_mass,
)
from .wavefunction import (
    PhysicalParams,
    overlap_normalization,
    packet_sum,
    pair_wavefunction,
    sigma_t,
    slit_packet,
)
