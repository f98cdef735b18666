"""coevo: a numerical laboratory for co-evolving network games.

Agents play repeated pairwise games, choosing both a partner and an
action from softmax policies over learned utilities.  The package
simulates the discrete learning process, integrates its replicator-flow
limit (full, factored, and reduced three-agent link systems), and
analyzes rest points and their temperature-dependent stability.
"""

__version__ = "0.1.0"

from .games import (
    GameSpec,
    PayoffTensor,
    RpsParams,
    build_coordination_game,
    build_matrix_game,
    build_rps_game,
    payoff,
)
from .strategy import (
    P_MIN,
    FactoredState,
    JointState,
    PolicyParams,
    QTable,
    boltzmann_policy,
    compose_state,
    factor_state,
    validate_simplex,
)
from .dynamics import (
    IntegratorConfig,
    LinkState3,
    NumericalError,
    Trajectory,
    coordination_link_field,
    factored_rhs,
    full_replicator_rhs,
    integrate,
    link_rhs_coordination,
    link_rhs_rps,
    rps_link_field,
)
from .learning import (
    Encounter,
    LearningParams,
    RewardEstimate,
    compare_to_ode,
    expected_reward,
    q_update,
    run_learning,
    sample_round,
)
from .analysis import (
    CriticalTemperature,
    RestPoint,
    RestPointSearch,
    classify_stability,
    coordination_jacobian_interior,
    critical_temperature,
    eigenvalues,
    find_rest_points,
    numeric_jacobian,
    rps_jacobian_interior,
    verify_critical_temperature,
)

__all__ = [
    "__version__",
    # games
    "GameSpec",
    "PayoffTensor",
    "RpsParams",
    "build_coordination_game",
    "build_matrix_game",
    "build_rps_game",
    "payoff",
    # strategy
    "P_MIN",
    "FactoredState",
    "JointState",
    "PolicyParams",
    "QTable",
    "boltzmann_policy",
    "compose_state",
    "factor_state",
    "validate_simplex",
    # dynamics
    "IntegratorConfig",
    "LinkState3",
    "NumericalError",
    "Trajectory",
    "coordination_link_field",
    "factored_rhs",
    "full_replicator_rhs",
    "integrate",
    "link_rhs_coordination",
    "link_rhs_rps",
    "rps_link_field",
    # learning
    "Encounter",
    "LearningParams",
    "RewardEstimate",
    "compare_to_ode",
    "expected_reward",
    "q_update",
    "run_learning",
    "sample_round",
    # analysis
    "CriticalTemperature",
    "RestPoint",
    "RestPointSearch",
    "classify_stability",
    "coordination_jacobian_interior",
    "critical_temperature",
    "eigenvalues",
    "find_rest_points",
    "numeric_jacobian",
    "rps_jacobian_interior",
    "verify_critical_temperature",
]
