"""Branched polymers in d = D + 2 dimensions against repulsive gases in D dimensions.

Monte Carlo and exact tools for the order-by-order identity
``a_n = (-1)^(n-1) (2pi)^(1-n) b_n`` between gas pressure coefficients and
polymer partition-function coefficients, plus a numerical check of the
Forest-Root formula.
"""

__version__ = "0.1.0"

from .analysis import (
    DomainError,
    ExponentFit,
    FitError,
    SeriesTable,
    exact_bp_table,
    fit_theta,
    ratio_extrapolate,
    stirling_asymptotic,
    tree_function,
    tree_function_series,
)
from .combinatorics import (
    EnumerationBoundError,
    Partition,
    RootedForest,
    TreeGraph,
    bell_number,
    connected_part,
    connected_parts_from_subsets,
    count_trees,
    enumerate_partitions,
    enumerate_rooted_forests,
    enumerate_trees,
    prufer_decode,
    prufer_encode,
    sample_tree_uniform,
)
from .forestroot import (
    GaussianFamily,
    MissingDerivativeError,
    VertexProduct,
    forest_root_sum,
    forest_root_term,
    localization_check,
)
from .gas import (
    ConnectedPartCheckError,
    GasCoefficient,
    boltzmann,
    exact_gas_coefficient,
    mayer_coefficient_mc,
    pressure_exact,
    series_exact,
    soft_gas_coefficient_mc,
)
from .mc_core import MCEstimate, NonFiniteSampleError, RandomStream, estimate, stream_id, z_score
from .polymer import (
    HARD_CORE,
    BPCoefficient,
    PotentialSpec,
    SamplerError,
    bp_coefficient,
    bp_exact_coefficient,
    gaussian,
    hard_core,
    soft,
    tree_weight,
)
from .reduction import (
    GreenTestFunction,
    ReductionReport,
    exact_identity_defect,
    gaussian_bump,
    mapping_constant,
    raised_cosine,
    verify_green_order,
    verify_order,
    verify_soft_order,
)
