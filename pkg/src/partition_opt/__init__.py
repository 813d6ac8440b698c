"""Capacity-constrained optimal partition of a discrete consumer population
among agents, with equilibrium prices, individual values, coalition games
and monotonicity experiments."""

from ._cells import TieRule, Variant
from .closed_form import (
    ClosedFormModel,
    ClosedFormSolution,
    band_assignment,
    breakpoints,
    build_model,
    closed_form_game,
    closed_form_solution,
    eval_F_star,
    f_star_csv,
    model_from_instance,
    stability_criterion_n3,
)
from .duality import (
    DualReport,
    Normalization,
    PriceVector,
    dual_objective,
    eval_xi,
    normalize_price,
    solve_dual,
    subgradient_xi,
)
from .games import (
    CoalitionGame,
    CoreCertificate,
    CoreStatus,
    build_game,
    cartel_instance,
    check_superadditive,
    coalition_value,
    core_check,
    core_check_n3,
    mask_of,
    members,
    super_agent,
)
from .measure import (
    AssumptionReport,
    DiscreteMeasure,
    InstanceError,
    ProblemInstance,
    Regime,
    RegimeInfo,
    ZeroWisdomWarning,
    bump_profile,
    check_assumptions,
    classify_regime,
    generate_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    random_positive,
    save_instance,
    uniform_grid_multiplicative,
)
from .monotonicity import (
    MonotonicityReport,
    PerturbationSpec,
    build_sharpness_new,
    build_sharpness_new1,
    perturb,
    verify_decrease_bound,
    verify_general_lower_bound,
    verify_scale_bound,
    verify_shift_equality,
)
from .transport import TransportPlan, brute_force_tiny, transportation_lp
from .values import (
    Partition,
    ValueReport,
    extract_partition,
    individual_values,
    total_profit,
    value_decomposition,
    value_report,
)

__version__ = "0.1.0"
