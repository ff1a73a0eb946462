"""Cooperative-game analysis of single-period farmer/distributor supply
chains: coalition profit optimization, profit allocations, and core
stability."""

from .allocations import (
    Allocation,
    CompensationBreakdown,
    allocation_by_rule,
    altruistic_allocation,
    axiom_flags,
    axiom_witnesses,
    fc_allocation,
    mpc_allocation,
)
from .expressions import Expression, ExpressionError, parse_expression
from .game import (
    AssumptionReport,
    CoalitionGame,
    StructureReport,
    build_game,
    check_assumptions,
    farmer_revenue,
    verify_structure,
)
from .optimize import (
    HarvestDepletedError,
    OracleResult,
    SolveResult,
    coop_term,
    coop_value,
    grid_oracle,
    market_term,
    market_value,
    solve_1d,
    solve_with_farmer,
    solve_without_farmer,
)
from .piecewise import PiecewiseFunction, PiecewiseError, ShapeReport, check_shape
from .random_situations import (
    random_game,
    random_games,
    random_situation,
    random_situations,
)
from .situation import (
    BUILTIN_SITUATIONS,
    Coalition,
    Situation,
    SituationError,
    builtin_situation,
    enumerate_coalitions,
    load_situation,
    situation_from_dict,
)
from .stability import (
    CompensationInterval,
    CoreReport,
    MpcCoreCondition,
    SweepPoint,
    check_core,
    compensation_interval,
    mpc_core_condition,
    sweep_bbar,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Allocation",
    "AssumptionReport",
    "BUILTIN_SITUATIONS",
    "Coalition",
    "CoalitionGame",
    "CompensationBreakdown",
    "CompensationInterval",
    "CoreReport",
    "Expression",
    "ExpressionError",
    "HarvestDepletedError",
    "MpcCoreCondition",
    "OracleResult",
    "PiecewiseError",
    "PiecewiseFunction",
    "ShapeReport",
    "Situation",
    "SituationError",
    "SolveResult",
    "StructureReport",
    "SweepPoint",
    "allocation_by_rule",
    "altruistic_allocation",
    "axiom_flags",
    "axiom_witnesses",
    "build_game",
    "builtin_situation",
    "check_assumptions",
    "check_core",
    "check_shape",
    "compensation_interval",
    "coop_term",
    "coop_value",
    "enumerate_coalitions",
    "farmer_revenue",
    "fc_allocation",
    "grid_oracle",
    "load_situation",
    "market_term",
    "market_value",
    "mpc_allocation",
    "mpc_core_condition",
    "parse_expression",
    "random_game",
    "random_games",
    "random_situation",
    "random_situations",
    "situation_from_dict",
    "solve_1d",
    "solve_with_farmer",
    "solve_without_farmer",
    "sweep_bbar",
    "verify_structure",
]
