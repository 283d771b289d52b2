"""Strategy norms, their duals and convex-set discrimination for multi-round quantum interactions.

Operators are dense complex matrices over labeled tensor factors
(:mod:`stratnorm.linalg`).  Strategies and co-strategies are validated by
their ladder constraints (:mod:`stratnorm.strategies`), the norms are solved
as block semidefinite programs (:mod:`stratnorm.sdp`, :mod:`stratnorm.norms`)
and :mod:`stratnorm.discrimination` separates convex sets of strategies.
"""

__version__ = "0.1.0"

from .linalg import (
    FactorError,
    LabeledOperator,
    NotHermitianError,
    extend,
    herm_eig,
    inner,
    kron,
    operator_norm,
    partial_trace,
    permute_factors,
    trace_norm,
)
from .strategies import (
    Channel,
    InteractionShape,
    InvalidStrategyError,
    MeasuringStrategy,
    OperationalCoStrategy,
    OperationalStrategy,
    Role,
    StrategyRep,
    interaction_probability,
    operational_to_choi,
    operational_to_measuring,
    simulate_interaction,
    validate,
    validate_costrategy,
    validate_measuring,
    validate_strategy,
)
from .sdp import SdpSolution, SdpTriple, SolverError, solve, verify_certificates
from .norms import (
    NormBoundError,
    NormResult,
    decompose_unit_ball,
    diamond_norm,
    dual_strategy_norm,
    max_output_probability,
    norm,
    strategy_norm,
)
from .discrimination import (
    ConvexStrategySet,
    DegenerateInstanceError,
    SeparatorResult,
    guessing_game,
    min_distance,
    separator,
)
