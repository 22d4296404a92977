"""Numerical laboratory for heterogeneous nonlocal diffusion and its local limits."""

from .analysis import (
    DiffusivityMatrix,
    FocusingStudy,
    SteadyPrediction,
    SteadyRegime,
    diffusivity,
    focus,
    limit_study,
    limiting_law,
    material_sign_changes,
    model_diffusivity,
    predict_steady,
    smooth_bump,
    strat_equivalence,
    tail_concentration_index,
    um_rela_residual,
)
from .grid import Grid1D
from .jumpmodel import (
    JumpRateModel,
    Variant,
    food_metric_table,
    homogeneous,
    single_factor,
    stratonovich,
    two_factor,
)
from .kernels import (
    DispersalKernel,
    KernelName,
    kernel_from_expression,
    kernel_from_name,
    kernel_from_table,
    make_gaussian,
    make_heavy_tail,
    make_laplace,
    make_quartic,
    moment,
    quantile,
)
from .local_solver import (
    LocalDiffusionSpec,
    LocalOperator,
    assemble_expanded,
    assemble_local,
    correction_vector,
    evolve_local,
    flux_form,
    step_local,
)
from .nonlocal_solver import (
    NonlocalOperator,
    assemble,
    evolve,
    second_moment,
    solve_steady,
    step,
)
from .profiles import (
    HeterogeneityProfile,
    ProfileName,
    constant,
    exponential,
    from_expression,
    gaussian,
    profile_from_spec,
    quadratic_growth,
    rational_bump,
    two_patch,
)
from .timestepping import Trajectory

__version__ = "0.1.0"
