"""planlab: a propositional plan-space planning laboratory.

Five interchangeable plan-extension generators (total-order, unambiguous
partial-order, their conditional-effect variants, and a deferred-ordering
modal-truth planner) under pluggable search strategies, with exhaustive
tree enumeration and machine-checked correspondence between the
total-order and partial-order search spaces.
"""

from .model import (
    CondEffect,
    Ordering,
    OperatorSchema,
    Plan,
    PlanSizeError,
    Problem,
    Step,
    cond,
    equivalent,
    extend,
    initial_plan,
    is_linearization,
    is_subplan,
    linear_extensions,
    linearizations,
    make_op,
    ordering_relation,
    restrict,
)
from .truth import (
    AmbiguousLastDeleter,
    GoalEntry,
    ModalStatus,
    goal_set,
    interacts,
    is_compact_solution,
    is_solution_plan,
    is_unambiguous,
    last_deleter,
    modal_status,
    true_in_total_order,
)
from .planners import (
    ExtensionCounters,
    ExtensionResult,
    PLANNERS,
    PlannerConfig,
    make_planner,
    mt_children,
    specialize,
    to_children,
    toc_children,
    ua_children,
    uac_children,
)
from .search import (
    SearchOutcome,
    StrategyConfig,
    bfs,
    dfs,
    iterative_broadening,
    iterative_sampling,
    mean_probes_until_solution,
    min_goals_rating,
    rank_children,
    run_search,
    run_trials,
)
from .trees import (
    CorrespondenceMap,
    SearchTree,
    TreeCeilingError,
    build_correspondence,
    cost_ratio,
    enumerate_tree,
    sibling_overlap_violations,
    tree_stats,
    verify_disjointness,
    verify_partition,
    verify_totality,
)
from .domains import (
    BlocksworldSpec,
    ParseError,
    blocksworld_problem,
    d1s1_problem,
    fixture,
    parse_problem,
    serialize_problem,
    standard_suite,
)
from .oracle import minimal_solution_length

__version__ = "0.1.0"
