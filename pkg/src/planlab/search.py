"""Search strategies over the extension generators.

All strategies count a node as expanded when they visit it (the root and
solution nodes included) and record per-depth visit counts.  Randomness
comes only from the run's seed, so identical seeds reproduce identical
counters.  The min-goals heuristic rates a child by how many open goals
it has; ranking sorts children by rating (ties keep their shuffled
order), pruning keeps only the best-rated children, and the weighted
variant biases random descent by 1/(1+rating).
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

from .model import Plan
from .planners import ExtensionResult, Planner

HEURISTICS = ("none", "min_goals_rank", "min_goals_prune", "min_goals_weight")
STRATEGIES = ("bfs", "dfs", "isamp", "ibroad")


@dataclass(frozen=True)
class StrategyConfig:
    strategy: str = "dfs"
    depth_limit: int = 0
    max_iterations: int = 100_000
    heuristic: str = "none"
    seed: int = 0
    trials: int = 1

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if self.depth_limit < 0 or self.trials < 1:
            raise ValueError("depth_limit must be >= 0 and trials >= 1")


@dataclass(frozen=True)
class SearchOutcome:
    solved: bool
    solution: Optional[Plan]
    nodes_expanded: int
    leaves_visited: int
    per_level_counts: tuple[int, ...]
    wall_time: float
    seed: int
    iterations: Optional[int] = None
    final_cutoff: Optional[int] = None

    @property
    def solution_length(self) -> Optional[int]:
        return self.solution.length if self.solution is not None else None


class _Tally:
    def __init__(self, depth_limit: int):
        self.nodes = 0
        self.leaves = 0
        self.levels = [0] * (depth_limit + 1)

    def visit(self, depth: int) -> None:
        self.nodes += 1
        self.levels[depth] += 1


def min_goals_rating(planner: Planner, plan: Plan) -> int:
    """Open-goal count under the planner's own goal semantics."""
    return len(planner.goal_set(plan))


def rank_children(
    result: ExtensionResult,
    mode: str,
    rng: Optional[random.Random] = None,
) -> list[Plan]:
    """Shuffle children, then apply the heuristic mode on the ratings."""
    order = list(range(len(result.children)))
    if rng is not None:
        rng.shuffle(order)
    if mode == "none" or not order:
        return [result.children[i] for i in order]
    ratings = {i: len(result.goals[i]) for i in order}
    if mode == "min_goals_rank":
        order.sort(key=lambda i: ratings[i])  # stable: ties keep shuffle order
    elif mode == "min_goals_prune":
        best = min(ratings[i] for i in order)
        order = [i for i in order if ratings[i] == best]
    elif mode == "min_goals_weight":
        pass  # weighting applies at choice time, not here
    else:
        raise ValueError(f"unknown heuristic {mode!r}")
    return [result.children[i] for i in order]


def bfs(planner: Planner, cfg: StrategyConfig) -> SearchOutcome:
    """Level-by-level exploration; stops at the first solution visited."""
    from collections import deque

    start = time.perf_counter()
    tally = _Tally(cfg.depth_limit)
    queue = deque([(planner.root(), 0)])
    while queue:
        plan, depth = queue.popleft()
        tally.visit(depth)
        if planner.is_solution(plan):
            tally.leaves += 1
            return _outcome(True, plan, tally, start, cfg.seed)
        if depth == cfg.depth_limit:
            tally.leaves += 1
            continue
        result = planner.children(plan)
        if not result.children:
            tally.leaves += 1
            continue
        for child in result.children:
            queue.append((child, depth + 1))
    return _outcome(False, None, tally, start, cfg.seed)


def _descend(
    planner: Planner,
    plan: Plan,
    depth: int,
    cfg: StrategyConfig,
    rng: random.Random,
    cutoff: Optional[int],
    tally: _Tally,
    max_width: list[int],
) -> Optional[Plan]:
    tally.visit(depth)
    if planner.is_solution(plan):
        tally.leaves += 1
        return plan
    if depth == cfg.depth_limit:
        tally.leaves += 1
        return None
    result = planner.children(plan)
    if not result.children:
        tally.leaves += 1
        return None
    kids = rank_children(result, cfg.heuristic, rng)
    max_width[0] = max(max_width[0], len(kids))
    if cutoff is not None:
        kids = kids[:cutoff]
    for child in kids:
        found = _descend(planner, child, depth + 1, cfg, rng, cutoff, tally, max_width)
        if found is not None:
            return found
    return None


def dfs(planner: Planner, cfg: StrategyConfig) -> SearchOutcome:
    """Depth-first with a seeded shuffle at every node; backtracks at the
    depth limit and at dead ends; returns the first solution found."""
    start = time.perf_counter()
    tally = _Tally(cfg.depth_limit)
    rng = random.Random(cfg.seed)
    found = _descend(planner, planner.root(), 0, cfg, rng, None, tally, [0])
    return _outcome(found is not None, found, tally, start, cfg.seed)


def iterative_sampling(planner: Planner, cfg: StrategyConfig) -> SearchOutcome:
    """Memoryless random root-to-leaf probes until a solution leaf."""
    start = time.perf_counter()
    tally = _Tally(cfg.depth_limit)
    rng = random.Random(cfg.seed)
    for iteration in range(1, cfg.max_iterations + 1):
        plan, depth = planner.root(), 0
        while True:
            tally.visit(depth)
            if planner.is_solution(plan):
                tally.leaves += 1
                return _outcome(True, plan, tally, start, cfg.seed, iterations=iteration)
            if depth == cfg.depth_limit:
                tally.leaves += 1
                break
            result = planner.children(plan)
            if not result.children:
                tally.leaves += 1
                break
            plan = _pick(result, cfg.heuristic, rng)
            depth += 1
    return _outcome(False, None, tally, start, cfg.seed, iterations=cfg.max_iterations)


def _pick(result: ExtensionResult, heuristic: str, rng: random.Random) -> Plan:
    indices = list(range(len(result.children)))
    if heuristic == "min_goals_prune":
        best = min(len(g) for g in result.goals)
        indices = [i for i in indices if len(result.goals[i]) == best]
    elif heuristic == "min_goals_weight":
        weights = [1.0 / (1 + len(result.goals[i])) for i in indices]
        return result.children[rng.choices(indices, weights=weights)[0]]
    return result.children[indices[rng.randrange(len(indices))]]


def iterative_broadening(planner: Planner, cfg: StrategyConfig) -> SearchOutcome:
    """Depth-first passes with growing per-node breadth cutoff.

    Every pass reuses the run's seed, so the pass whose cutoff reaches the
    tree's maximum branching visits exactly the plain depth-first node
    set.  The search is complete within the depth bound: it stops once a
    pass ran uncut and found nothing.
    """
    start = time.perf_counter()
    tally = _Tally(cfg.depth_limit)
    cutoff = 1
    while True:
        rng = random.Random(cfg.seed)
        max_width = [0]
        found = _descend(planner, planner.root(), 0, cfg, rng, cutoff, tally, max_width)
        if found is not None:
            return _outcome(True, found, tally, start, cfg.seed, final_cutoff=cutoff)
        if cutoff >= max_width[0]:
            return _outcome(False, None, tally, start, cfg.seed, final_cutoff=cutoff)
        cutoff += 1


def _outcome(
    solved: bool,
    plan: Optional[Plan],
    tally: _Tally,
    start: float,
    seed: int,
    iterations: Optional[int] = None,
    final_cutoff: Optional[int] = None,
) -> SearchOutcome:
    return SearchOutcome(
        solved=solved,
        solution=plan,
        nodes_expanded=tally.nodes,
        leaves_visited=tally.leaves,
        per_level_counts=tuple(tally.levels),
        wall_time=time.perf_counter() - start,
        seed=seed,
        iterations=iterations,
        final_cutoff=final_cutoff,
    )


_STRATEGY_FNS: dict[str, Callable[[Planner, StrategyConfig], SearchOutcome]] = {
    "bfs": bfs,
    "dfs": dfs,
    "isamp": iterative_sampling,
    "ibroad": iterative_broadening,
}


def run_search(planner: Planner, cfg: StrategyConfig) -> SearchOutcome:
    return _STRATEGY_FNS[cfg.strategy](planner, cfg)


def run_trials(
    make_planner: Callable[[int], Planner], cfg: StrategyConfig
) -> list[SearchOutcome]:
    """Run `cfg.trials` independent searches; trial i uses seed+i and a
    fresh planner built by `make_planner(trial_seed)`."""
    outcomes = []
    for trial in range(cfg.trials):
        trial_seed = cfg.seed + trial
        planner = make_planner(trial_seed)
        outcomes.append(run_search(planner, replace(cfg, seed=trial_seed)))
    return outcomes


def mean_probes_until_solution(
    leaves: int, solutions: int, runs: int, seed: int = 0
) -> float:
    """Monte Carlo estimate of how many distinct leaves a uniform scan
    inspects before hitting a solution, averaged over `runs` shuffles."""
    if not 0 < solutions <= leaves:
        raise ValueError("need 0 < solutions <= leaves")
    rng = random.Random(seed)
    arr = [True] * solutions + [False] * (leaves - solutions)
    total = 0
    for _ in range(runs):
        rng.shuffle(arr)
        total += arr.index(True) + 1
    return total / runs
