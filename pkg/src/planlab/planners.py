"""Plan extension generators.

Every planner here maps a plan to its complete, deterministically ordered
list of child plans.  They all share the same pipeline, differing only in
how a child is ordered and which goals count as open:

  1. termination check   (``children`` refuses solved plans)
  2. goal selection      (first open goal, or a seeded choice)
  3. operator selection  (library operators that add the selected goal)
  4. ordering selection  (planner specific, instrumented)
  5. goal updating       (the child's open goals, instrumented)

Planner kinds and their ordering stages:

``to``   totally ordered plans; the new step is inserted at every position
         between the last deleter of the goal and the needing step.
``ua``   partially ordered, unambiguity-preserving; the new step is placed
         after the last deleter and before the needing step, then every
         step that interacts with it is ordered against it, both ways.
``toc``/``uac``  the conditional-effect variants: operator selection also
         instantiates specialized copies of operators that conditionally
         add the goal, interaction detection widens to dependency
         conditions and conditional effects, and a role-selection stage
         branches on marking versus specializing usable conditional adds.
``mt``   deferred ordering driven by exact modal truth: establishers may
         be existing steps or fresh instances, threats are resolved one at
         a time by demotion or white-knight protection, and children may
         be ambiguous.

Cost counters report the most expensive child of each extension call:
``step4_edge_visits`` counts graph-edge traversals during ordering
selection and ``step5_visits`` counts node and edge touches during goal
updating, so growth shapes can be checked against the plan's edge count.
"""

from __future__ import annotations

import random
import weakref
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from .model import (
    FINAL_STEP,
    INIT_STEP,
    CondEffect,
    OperatorSchema,
    Plan,
    Problem,
    Step,
    fresh_label,
    initial_plan,
)
from .truth import (
    GoalEntry,
    ModalStatus,
    false_in_sequence,
    is_unambiguous,
    last_deleter,
    modal_status,
    precondition_entries,
    steps_interact,
)


def specialize(
    op: Union[Step, OperatorSchema],
    deps: Iterable[str],
    strict: bool = False,
) -> Union[Step, OperatorSchema]:
    """Commit conditional effects of `op` whose dependencies are covered.

    The dependency set is promoted into the preconditions; every
    conditional effect whose dependencies are a subset of `deps` becomes
    unconditional; surviving conditional effects keep the residual
    dependencies.  With ``strict=True`` only strict subsets are promoted,
    which leaves an effect conditional even when `deps` equals its
    dependency set exactly.
    """
    deps = frozenset(deps)
    covered = (lambda d: d < deps) if strict else (lambda d: d <= deps)

    adds = set(op.adds)
    dels = set(op.dels)
    cadds: list[CondEffect] = []
    cdels: list[CondEffect] = []
    marked: set[int] = set()
    old_marked = op.marked if isinstance(op, Step) else frozenset()
    for i, ce in enumerate(op.cadds):
        if covered(ce.deps):
            adds.add(ce.effect)
        else:
            if i in old_marked:
                marked.add(len(cadds))
            cadds.append(CondEffect(ce.deps - deps, ce.effect))
    for ce in op.cdels:
        if covered(ce.deps):
            dels.add(ce.effect)
        else:
            cdels.append(CondEffect(ce.deps - deps, ce.effect))

    fields = dict(
        pre=op.pre | deps,
        adds=frozenset(adds),
        dels=frozenset(dels),
        cadds=tuple(cadds),
        cdels=tuple(cdels),
    )
    if isinstance(op, Step):
        return replace(op, marked=frozenset(marked), **fields)
    return replace(op, **fields)


@dataclass(frozen=True)
class ChildCost:
    step4_edge_visits: int
    step5_visits: int


@dataclass(frozen=True)
class ExtensionCounters:
    """Aggregate cost of one extension call; the visit fields carry the
    maximum over the emitted children."""

    step4_edge_visits: int
    step5_visits: int
    children_count: int


@dataclass(frozen=True)
class ExtensionResult:
    children: tuple[Plan, ...]
    costs: tuple[ChildCost, ...]
    goals: tuple[tuple[GoalEntry, ...], ...]
    counters: ExtensionCounters


@dataclass(frozen=True)
class PlannerConfig:
    goal_selection: str = "deterministic"  # or "seeded"
    seed: int = 0


@dataclass(frozen=True)
class _Candidate:
    """An ordering-stage result, before goal updating."""

    steps: tuple[Step, ...]
    edges: frozenset[tuple[int, int]]
    chain: Optional[tuple[int, ...]]
    visits4: int


def _sorted_steps(steps: Iterable[Step]) -> tuple[Step, ...]:
    return tuple(sorted(steps, key=lambda s: s.label))


def _append_step(steps: tuple[Step, ...], new_step: Step) -> tuple[Step, ...]:
    # labels are assigned consecutively, so appending preserves label order
    return steps + (new_step,)


class Planner:
    """Shared extension pipeline; subclasses provide the ordering stage."""

    kind: str = ""
    interaction_mode: str = "basic"
    conditional: bool = False

    def __init__(self, problem: Problem, config: Optional[PlannerConfig] = None):
        self.problem = problem
        self.config = config or PlannerConfig()
        # Weak keys: cached goal sets die with their plans, so long searches
        # do not accumulate memory.
        self._goal_cache: "weakref.WeakKeyDictionary[Plan, tuple[GoalEntry, ...]]" = (
            weakref.WeakKeyDictionary()
        )

    # -- goals ---------------------------------------------------------

    def root(self) -> Plan:
        return initial_plan(self.problem)

    def goal_set(self, plan: Plan) -> tuple[GoalEntry, ...]:
        hit = self._goal_cache.get(plan)
        if hit is not None:
            return hit
        goals = self._compute_goals(plan)[0]
        self._goal_cache[plan] = goals
        return goals

    def _remember(self, plan: Plan, goals: tuple[GoalEntry, ...]) -> None:
        self._goal_cache[plan] = goals

    def is_solution(self, plan: Plan) -> bool:
        return not self.goal_set(plan)

    def _compute_goals(self, plan: Plan) -> tuple[tuple[GoalEntry, ...], int]:
        raise NotImplementedError

    def select_goal(self, plan: Plan, goals: tuple[GoalEntry, ...]) -> GoalEntry:
        if self.config.goal_selection == "seeded":
            key = ",".join(f"{e.needer}:{e.condition}" for e in goals)
            rng = random.Random(f"{self.config.seed}|{plan.depth}|{key}")
            return goals[rng.randrange(len(goals))]
        return goals[0]

    # -- extension -----------------------------------------------------

    def children(self, plan: Plan) -> ExtensionResult:
        goals = self.goal_set(plan)
        if not goals:
            raise ValueError("plan is already solved; nothing to extend")
        goal = self.select_goal(plan, goals)
        candidates = self._ordering_candidates(plan, goal)
        if self.conditional:
            expanded: list[_Candidate] = []
            for cand in candidates:
                expanded.extend(self._role_branches(cand))
            candidates = expanded

        children: list[Plan] = []
        costs: list[ChildCost] = []
        child_goals: list[tuple[GoalEntry, ...]] = []
        for cand in candidates:
            child = Plan(
                steps=cand.steps,
                order=cand.edges,
                parent=plan,
                depth=plan.depth + 1,
            )
            if cand.chain is not None:
                child.__dict__["sequence"] = cand.chain
                child.__dict__["is_total"] = True
            goals_c, visits5 = self._compute_goals(child)
            self._remember(child, goals_c)
            children.append(child)
            costs.append(ChildCost(cand.visits4, visits5))
            child_goals.append(goals_c)

        counters = ExtensionCounters(
            step4_edge_visits=max((c.step4_edge_visits for c in costs), default=0),
            step5_visits=max((c.step5_visits for c in costs), default=0),
            children_count=len(children),
        )
        return ExtensionResult(tuple(children), tuple(costs), tuple(child_goals), counters)

    def _ordering_candidates(self, plan: Plan, goal: GoalEntry) -> list[_Candidate]:
        raise NotImplementedError

    def _role_branches(self, cand: _Candidate) -> list[_Candidate]:
        return [cand]

    # -- operator selection --------------------------------------------

    def _adder_instances(self, c: str, label: int) -> list[Step]:
        """Fresh step instances for every library way of adding c."""
        out = []
        for op in self.problem.library:
            if c in op.adds:
                out.append(Step.from_schema(op, label))
            if self.conditional:
                for ce in op.cadds:
                    if ce.effect == c:
                        out.append(specialize(Step.from_schema(op, label), ce.deps))
        return out


class TotalOrderPlanner(Planner):
    """Key ``to``: keeps every plan totally ordered."""

    kind = "to"

    def _compute_goals(self, plan: Plan) -> tuple[tuple[GoalEntry, ...], int]:
        seq = plan.sequence
        return tuple(false_in_sequence(plan, seq)), len(seq)

    def _ordering_candidates(self, plan: Plan, goal: GoalEntry) -> list[_Candidate]:
        c, needer = goal.condition, goal.needer
        seq = plan.sequence
        deleter = last_deleter(plan, c, needer)
        i, j = seq.index(deleter), seq.index(needer)
        label = fresh_label(plan)
        out: list[_Candidate] = []
        for new_step in self._adder_instances(c, label):
            steps = _append_step(plan.steps, new_step)
            for g in range(j - 1, i - 1, -1):  # positions from the needer backward
                edges = plan.order | {
                    (seq[g], label),
                    (label, seq[g + 1]),
                    (INIT_STEP, label),
                    (label, FINAL_STEP),
                }
                chain = seq[: g + 1] + (label,) + seq[g + 1 :]
                out.append(_Candidate(steps, frozenset(edges), chain, 1))
        return out


class UnambiguousPlanner(Planner):
    """Key ``ua``: partial orders in which every precondition is either
    necessarily true or necessarily false, maintained by ordering every
    step that interacts with the newcomer."""

    kind = "ua"

    def _compute_goals(self, plan: Plan) -> tuple[tuple[GoalEntry, ...], int]:
        # Valid because every plan this planner touches is unambiguous:
        # one linearization decides necessary falsehood.
        seq = _linearize(plan)
        visits = len(plan.order) + 2 * len(plan.steps)
        return tuple(false_in_sequence(plan, seq)), visits

    def _ordering_candidates(self, plan: Plan, goal: GoalEntry) -> list[_Candidate]:
        c, needer = goal.condition, goal.needer
        deleter = last_deleter(plan, c, needer)
        label = fresh_label(plan)
        out: list[_Candidate] = []
        for new_step in self._adder_instances(c, label):
            out.extend(self._resolve_interactions(plan, new_step, deleter, needer))
        return out

    def _resolve_interactions(
        self, plan: Plan, new_step: Step, deleter: int, needer: int
    ) -> list[_Candidate]:
        label = new_step.label
        base = {
            (deleter, label),
            (label, needer),
            (INIT_STEP, label),
            (label, FINAL_STEP),
        }
        edges0 = plan.order | base
        steps = _append_step(plan.steps, new_step)
        labels = [s.label for s in steps]
        succs: dict[int, list[int]] = {lab: [] for lab in labels}
        preds: dict[int, list[int]] = {lab: [] for lab in labels}
        for a, b in edges0:
            succs[a].append(b)
            preds[b].append(a)

        visits = 0
        before: set[int] = set()
        after: set[int] = set()
        for marks, adj in ((before, preds), (after, succs)):
            stack = [label]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    visits += 1
                    if v not in marks:
                        marks.add(v)
                        stack.append(v)
        visits += len(labels)  # scan for unlabeled interacting steps
        cands = sorted(
            lab
            for lab in plan.labels
            if lab not in before
            and lab not in after
            and steps_interact(plan.by_label[lab], new_step, self.interaction_mode)
        )

        out: list[_Candidate] = []

        def spread(marks: set[int], start: int, adj: dict[int, list[int]]) -> int:
            cost = 0
            stack = [start]
            while stack:
                u = stack.pop()
                if u in marks:
                    continue
                marks.add(u)
                for v in adj[u]:
                    cost += 1
                    if v not in marks:
                        stack.append(v)
            return cost

        def branch(
            idx: int,
            before: set[int],
            after: set[int],
            extra: frozenset[tuple[int, int]],
            visits: int,
        ) -> None:
            while idx < len(cands) and (cands[idx] in before or cands[idx] in after):
                idx += 1
            if idx == len(cands):
                out.append(_Candidate(steps, frozenset(edges0) | extra, None, visits))
                return
            s = cands[idx]
            nb = set(before)
            cost_b = spread(nb, s, preds)
            branch(idx + 1, nb, after, extra | {(s, label)}, visits + cost_b)
            na = set(after)
            cost_a = spread(na, s, succs)
            branch(idx + 1, before, na, extra | {(label, s)}, visits + cost_a)

        branch(0, before, after, frozenset(), visits)
        return out


def _linearize(plan: Plan) -> tuple[int, ...]:
    cached = plan.__dict__.get("sequence")
    if cached is not None:
        return cached
    successors = plan.successors
    indeg = {lab: len(plan.predecessors[lab]) for lab in plan.labels}
    ready = sorted((lab for lab, d in indeg.items() if d == 0), reverse=True)
    out: list[int] = []
    while ready:
        lab = ready.pop()
        out.append(lab)
        changed = False
        for s in successors[lab]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
                changed = True
        if changed:
            ready.sort(reverse=True)
    if len(out) != len(indeg):
        raise ValueError("plan ordering contains a cycle")
    return tuple(out)


class _RoleSelectionMixin:
    """Step 4b: branch on marking versus specializing every conditional add
    that a later step could consume."""

    def _role_branches(self, cand: _Candidate) -> list[_Candidate]:
        probe = Plan(steps=cand.steps, order=cand.edges, parent=None, depth=0)
        after = probe.after_sets
        results: list[_Candidate] = []

        def find_trigger(steps_map: dict[int, Step]):
            for lab in sorted(steps_map):
                step = steps_map[lab]
                for idx, ce in enumerate(step.cadds):
                    if idx in step.marked:
                        continue
                    c = ce.effect
                    for ulab in sorted(after[lab]):
                        user = steps_map[ulab]
                        if c not in user.pre:
                            continue
                        blocked = any(
                            c in steps_map[d].dels
                            and d in after[lab]
                            and ulab in after[d]
                            for d in steps_map
                        )
                        if not blocked:
                            return lab, idx, ce
            return None

        def branch(steps_map: dict[int, Step]) -> None:
            trigger = find_trigger(steps_map)
            if trigger is None:
                results.append(
                    _Candidate(
                        _sorted_steps(steps_map.values()),
                        cand.edges,
                        cand.chain,
                        cand.visits4,
                    )
                )
                return
            lab, idx, ce = trigger
            step = steps_map[lab]
            branch({**steps_map, lab: replace(step, marked=step.marked | {idx})})
            branch({**steps_map, lab: specialize(step, ce.deps)})

        branch({s.label: s for s in cand.steps})
        return results


class ConditionalTotalOrderPlanner(_RoleSelectionMixin, TotalOrderPlanner):
    """Key ``toc``: the total-order planner for the conditional language."""

    kind = "toc"
    conditional = True


class ConditionalUnambiguousPlanner(_RoleSelectionMixin, UnambiguousPlanner):
    """Key ``uac``: the unambiguous planner for the conditional language."""

    kind = "uac"
    conditional = True
    interaction_mode = "conditional"


class ModalTruthPlanner(Planner):
    """Key ``mt``: orders only what each establishment requires.

    Goal updating keeps every precondition that is not necessarily true,
    so plans may be ambiguous.  Operator selection considers both existing
    steps possibly before the needer and fresh library instances.  Each
    threatening deleter is resolved once, either by demotion after the
    needer or by protecting the establishment with a white knight.
    """

    kind = "mt"

    def _compute_goals(self, plan: Plan) -> tuple[tuple[GoalEntry, ...], int]:
        out = []
        visits = 0
        for e in precondition_entries(plan):
            visits += len(plan.order)
            if modal_status(plan, e.needer, e.condition) is not ModalStatus.NECESSARILY_TRUE:
                out.append(e)
        return tuple(out), visits

    def _ordering_candidates(self, plan: Plan, goal: GoalEntry) -> list[_Candidate]:
        c, needer = goal.condition, goal.needer
        label = fresh_label(plan)
        out: list[_Candidate] = []
        seen: set = set()
        for s in plan.steps:
            if s.label == needer or c not in s.adds:
                continue
            if plan.before(needer, s.label):
                continue  # necessarily after the needer: not possibly before
            out.extend(
                self._resolve_threats(
                    plan.steps,
                    plan.order | {(s.label, needer)},
                    s.label,
                    c,
                    needer,
                    seen,
                )
            )
        for new_step in self._adder_instances(c, label):
            steps = _append_step(plan.steps, new_step)
            base = plan.order | {
                (label, needer),
                (INIT_STEP, label),
                (label, FINAL_STEP),
            }
            out.extend(self._resolve_threats(steps, base, label, c, needer, seen))
        return out

    def _resolve_threats(
        self,
        steps: tuple[Step, ...],
        edges: frozenset[tuple[int, int]],
        o_add: int,
        c: str,
        needer: int,
        seen: set,
    ) -> list[_Candidate]:
        steps_map = {s.label: s for s in steps}
        out: list[_Candidate] = []

        def closure(edge_set: frozenset) -> dict[int, frozenset[int]]:
            return Plan(steps=steps, order=edge_set, parent=None, depth=0).after_sets

        def branch(edge_set: frozenset, handled: frozenset[int], visits: int) -> None:
            after = closure(edge_set)
            visits += len(edge_set)
            threats = sorted(
                d
                for d, st in steps_map.items()
                if c in st.dels
                and d not in (o_add, needer)
                and d not in handled
                and o_add not in after[d]  # not necessarily before the adder
                and d not in after[needer]  # not necessarily after the needer
            )
            if not threats:
                key = (
                    tuple(s.signature for s in steps),
                    frozenset((a, b) for a in after for b in after[a]),
                )
                if key not in seen:
                    seen.add(key)
                    out.append(_Candidate(steps, edge_set, None, visits))
                return
            d = threats[0]
            if needer not in after[d]:  # demotion stays acyclic
                branch(edge_set | {(needer, d)}, handled | {d}, visits)
            for k in sorted(steps_map):
                st = steps_map[k]
                if k in (d, needer) or c not in st.adds:
                    continue
                if d in after[k] or k in after[needer]:
                    continue  # must be possibly between the deleter and the needer
                branch(edge_set | {(d, k), (k, needer)}, handled | {d}, visits)

        branch(edges, frozenset(), 0)
        return out


PLANNERS: dict[str, type[Planner]] = {
    cls.kind: cls
    for cls in (
        TotalOrderPlanner,
        UnambiguousPlanner,
        ConditionalTotalOrderPlanner,
        ConditionalUnambiguousPlanner,
        ModalTruthPlanner,
    )
}


def make_planner(kind: str, problem: Problem, config: Optional[PlannerConfig] = None) -> Planner:
    try:
        cls = PLANNERS[kind]
    except KeyError:
        raise ValueError(f"unknown planner kind {kind!r}; choose from {sorted(PLANNERS)}") from None
    return cls(problem, config)


def _one_shot(kind: str, plan: Plan, problem: Problem, config: Optional[PlannerConfig]) -> ExtensionResult:
    return make_planner(kind, problem, config).children(plan)


def to_children(plan: Plan, problem: Problem, config: Optional[PlannerConfig] = None) -> ExtensionResult:
    return _one_shot("to", plan, problem, config)


def ua_children(plan: Plan, problem: Problem, config: Optional[PlannerConfig] = None) -> ExtensionResult:
    if not is_unambiguous(plan):
        raise ValueError("the unambiguous planner requires an unambiguous plan")
    return _one_shot("ua", plan, problem, config)


def toc_children(plan: Plan, problem: Problem, config: Optional[PlannerConfig] = None) -> ExtensionResult:
    return _one_shot("toc", plan, problem, config)


def uac_children(plan: Plan, problem: Problem, config: Optional[PlannerConfig] = None) -> ExtensionResult:
    if not is_unambiguous(plan):
        raise ValueError("the conditional unambiguous planner requires an unambiguous plan")
    return _one_shot("uac", plan, problem, config)


def mt_children(plan: Plan, problem: Problem, config: Optional[PlannerConfig] = None) -> ExtensionResult:
    return _one_shot("mt", plan, problem, config)
