"""Observer-based boundary control synthesis for an anti-diffusion plant.

The package designs finite-dimensional output-feedback controllers for a
fourth-order parabolic PDE on the unit interval, certifies the closed loop
through affine matrix inequalities solved as semidefinite programs, and
validates the certificates against truncated spectral simulations.
"""

from kse_synth.gains import (
    GainSet,
    ReducedModel,
    build_reduced_model,
    design_gains,
    make_gain_set,
    place_controller_gain,
    place_observer_gain,
    verify_gain_inequality,
)
from kse_synth.lmi import (
    AffineMatrixInequality,
    ClosedLoopMatrices,
    ThetaFamily,
    assemble_gain_lmi,
    assemble_stab_lmi,
    build_closed_loop,
    build_output_map,
    map_zbar_weights,
)
from kse_synth.sdp import (
    FeasibilityCertificate,
    FeasibilityError,
    SolveBudget,
    SweepReport,
    SweepRow,
    Verdict,
    feasibility_tolerance,
    min_feasible_n,
    min_gamma,
    solve_margin,
)
from kse_synth.simulate import (
    CSV_CHANNELS,
    DivergenceError,
    FullGenerator,
    NormChannels,
    SimScenario,
    Sinusoid,
    Trajectory,
    TravelingWave,
    build_full_generator,
    compute_norms,
    fit_decay_rate,
    integrate,
    iss_check,
    lyapunov_samples,
    performance_index,
    project_initial,
    write_trajectory_csv,
)
from kse_synth.spectral import (
    AssumptionError,
    BoundaryRegime,
    PlantConfig,
    SpectralModel,
    actuation_coeff,
    build_spectral_model,
    check_assumption1,
    check_assumption2,
    eigenfunction_value,
    eigenvalue,
    lifting_profile,
    sensing_coeff,
    sobolev_weight,
    tail_bound,
    unstable_mode_count,
)

__all__ = [
    "AffineMatrixInequality",
    "AssumptionError",
    "BoundaryRegime",
    "CSV_CHANNELS",
    "ClosedLoopMatrices",
    "DivergenceError",
    "FeasibilityCertificate",
    "FeasibilityError",
    "FullGenerator",
    "GainSet",
    "NormChannels",
    "PlantConfig",
    "ReducedModel",
    "SimScenario",
    "Sinusoid",
    "SolveBudget",
    "SpectralModel",
    "SweepReport",
    "SweepRow",
    "ThetaFamily",
    "Trajectory",
    "TravelingWave",
    "Verdict",
    "actuation_coeff",
    "assemble_gain_lmi",
    "assemble_stab_lmi",
    "build_closed_loop",
    "build_full_generator",
    "build_output_map",
    "build_reduced_model",
    "build_spectral_model",
    "check_assumption1",
    "check_assumption2",
    "compute_norms",
    "design_gains",
    "eigenfunction_value",
    "eigenvalue",
    "feasibility_tolerance",
    "fit_decay_rate",
    "integrate",
    "iss_check",
    "lifting_profile",
    "lyapunov_samples",
    "make_gain_set",
    "map_zbar_weights",
    "min_feasible_n",
    "min_gamma",
    "performance_index",
    "place_controller_gain",
    "place_observer_gain",
    "project_initial",
    "sensing_coeff",
    "sobolev_weight",
    "solve_margin",
    "tail_bound",
    "unstable_mode_count",
    "verify_gain_inequality",
    "write_trajectory_csv",
]

__version__ = "0.1.0"
