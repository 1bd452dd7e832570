"""Permutationally invariant multiqubit tomography.

Design statistically optimal measurement schemes, reconstruct the
symmetric part of a multiqubit state with error bars from count data,
and bound how much that symmetric part can differ from the true state.
"""

from .basis import (
    BlochVector,
    PiIndex,
    bloch_from_dense,
    dense_from_bloch,
    enumerate_basis,
    expand_setting,
    multiplicity,
    num_classes,
    pi_twirl,
)
from .error_model import VarianceModel, e_total, element_variances, eps_max, setting_variance
from .scheme import Scheme, num_settings, optimize_scheme, scheme_from_directions, solve_coefficients
from .reconstruction import (
    CountData,
    MaxLikelihoodResult,
    class_histogram,
    ml_fit,
    physical_projection,
    reconstruct,
    setting_moment,
)
from .simulate import OutcomeDistribution, StateSpec, outcome_distribution, run_experiment, sample_counts
from .analysis import (
    SymmetryReport,
    dicke_fidelities,
    element_bound,
    fidelity,
    jmoments_from_counts,
    n_subspaces,
    obs2_bound,
    ps_bound_from_counts,
    ps_bound_from_moments,
    strong_bound,
    symmetry_report,
    symmetry_report_from_bloch,
    trace_bound,
    witness_fidelity_bound,
)
from .states import collective_op, dicke_state, maximally_mixed, noisy_dicke, symmetric_projector

__version__ = "0.1.0"
