"""Heuristic forward search for feasible minimum-travel plans.

A* over grounded world states with an admissible travel-cost heuristic
produces optimal plans; greedy best-first is available for quick feasible
plans on large instances.  Task execution costs no travel, so whenever a
task action is enabled the search commits to the canonically-first one.
This is safe for travel optimality: executing an available task never
changes positions or emptiness and the goal requires it eventually anyway.

The sequential trace is also packed into per-slot parallel lanes.  Actions
dispatch in trace order: an action may start in a slot once every earlier
trace action has started (earlier slot, or earlier in the same slot's scan)
and its preconditions hold; blocked agents get explicit waits.  Gating on
the trace order keeps the packing deadlock-free, which a fixed agent
priority cannot (an agent parked on another's route would stall it forever).
"""

from __future__ import annotations

import heapq
import itertools
import json
import time
from dataclasses import dataclass, field
from typing import Optional

from .errors import NoPlanExists, PlanTimeout
from .spec import ProblemSpec
from .world import (
    Action,
    Do,
    Move,
    Wait,
    WorldState,
    action_from_json,
    action_to_json,
    apply_action,
    enabled_actions,
    initial_state,
    is_goal,
)

STRATEGIES = ("astar", "gbfs")
HEURISTICS = ("blind", "maxmin", "predecessor", "combined")


@dataclass(frozen=True)
class PlannerConfig:
    # the optimisation objective is fixed: minimise total travel distance
    strategy: str = "astar"
    heuristic: str = "combined"
    timeout: float = 120.0
    max_expansions: int = 5_000_000

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy '{self.strategy}'")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic '{self.heuristic}'")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


@dataclass
class Plan:
    """Planner output: sequential trace plus derived per-agent views."""

    total_order: list[Action]
    per_agent: dict[str, list[Action]]
    allocation: dict[str, str]            # task instance -> agent
    travel_cost: float
    timed: dict[str, list[Action]] = field(default_factory=dict)  # lanes incl. waits

    def horizons(self) -> dict[str, int]:
        return {a: len(seq) for a, seq in self.per_agent.items() if seq}

    def makespan(self) -> int:
        return max((len(lane) for lane in self.timed.values()), default=0)

    def active_agents(self) -> list[str]:
        return [a for a, seq in self.per_agent.items() if seq]

    def to_json(self) -> dict:
        return {
            "total_order": [action_to_json(a) for a in self.total_order],
            "per_agent": {a: [action_to_json(x) for x in seq] for a, seq in self.per_agent.items() if seq},
            "allocation": dict(sorted(self.allocation.items())),
            "travel_cost": self.travel_cost,
            "timed": {a: [action_to_json(x) for x in lane] for a, lane in self.timed.items()},
        }

    @staticmethod
    def from_json(doc: dict) -> "Plan":
        return Plan(
            total_order=[action_from_json(a) for a in doc["total_order"]],
            per_agent={a: [action_from_json(x) for x in seq] for a, seq in doc["per_agent"].items()},
            allocation=dict(doc["allocation"]),
            travel_cost=float(doc["travel_cost"]),
            timed={a: [action_from_json(x) for x in lane] for a, lane in doc.get("timed", {}).items()},
        )

    def hash_key(self) -> str:
        import hashlib

        body = json.dumps([action_to_json(a) for a in self.total_order], sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# heuristics


def shortest_path_distances(spec: ProblemSpec) -> dict[str, dict[str, float]]:
    """All-pairs shortest path distances (Dijkstra from every location)."""
    dist: dict[str, dict[str, float]] = {}
    for src in spec.location_ids():
        d = {src: 0.0}
        pq = [(0.0, src)]
        while pq:
            cur, node = heapq.heappop(pq)
            if cur > d.get(node, float("inf")):
                continue
            for nbr in spec.neighbors(node):
                nd = cur + spec.distance(node, nbr)
                if nd < d.get(nbr, float("inf")):
                    d[nbr] = nd
                    heapq.heappush(pq, (nd, nbr))
        dist[src] = d
    return dist


class _Heuristic:
    """Admissible travel lower bounds over undone tasks.

    maxmin: some capable agent must still reach the farthest undone task.
    predecessor: each undone task location is entered by a final leg from
    either an agent position or another undone task location, and those
    legs are disjoint; summing per-location minimal legs is a lower bound.
    combined: max of the two.
    """

    def __init__(self, spec: ProblemSpec, kind: str):
        self.spec = spec
        self.kind = kind
        self.dist = shortest_path_distances(spec)
        gamma = spec.constraints.gamma
        self.capable = {
            t.id: [a.id for a in spec.agents if spec.p_success(a.id, t.id) >= gamma]
            for t in spec.tasks
        }

    def __call__(self, state: WorldState) -> float:
        if self.kind == "blind":
            return 0.0
        spec = self.spec
        undone = [t for t in spec.tasks if t.id in spec.pending and t.id not in state.done]
        if not undone:
            return 0.0
        agent_loc = dict(state.agent_locs)
        inf = float("inf")

        h_max = 0.0
        for t in undone:
            best = inf
            for aid in self.capable[t.id]:
                best = min(best, self.dist.get(agent_loc[aid], {}).get(t.location, inf))
            if best is inf:
                return inf  # some task unreachable by every capable agent
            h_max = max(h_max, best)
        if self.kind == "maxmin":
            return h_max

        locations = sorted({t.location for t in undone})
        agent_positions = sorted(set(agent_loc.values()))
        h_pred = 0.0
        for loc in locations:
            best = inf
            for src in agent_positions:
                best = min(best, self.dist.get(src, {}).get(loc, inf))
            for other in locations:
                if other != loc:
                    best = min(best, self.dist.get(other, {}).get(loc, inf))
            if best is inf:
                return inf
            h_pred += best
        if self.kind == "predecessor":
            return h_pred
        return max(h_max, h_pred)


# ---------------------------------------------------------------------------
# search


def _successors(spec: ProblemSpec, state: WorldState) -> list[Action]:
    """Forced-task pruning: if any task action is enabled, expand only the
    canonically first one; otherwise expand all moves."""
    acts = enabled_actions(spec, state)
    dos = [a for a in acts if isinstance(a, Do)]
    if dos:
        return [dos[0]]
    return acts


def plan_mission(spec: ProblemSpec, cfg: Optional[PlannerConfig] = None) -> Plan:
    """Search for a plan completing every pending task.

    astar returns a travel-optimal plan (admissible heuristic, re-opening
    on cheaper paths); gbfs returns a feasible plan fast.  Raises
    NoPlanExists when the goal is unreachable and PlanTimeout past the
    configured budget.
    """
    cfg = cfg or PlannerConfig()
    h = _Heuristic(spec, cfg.heuristic)
    start = initial_state(spec)
    h0 = h(start)
    if h0 == float("inf"):
        raise NoPlanExists("some pending task is unreachable or unassignable")

    counter = itertools.count()
    start_key = start.key()
    g_best: dict = {start_key: 0.0}
    parent: dict = {start_key: None}
    astar = cfg.strategy == "astar"
    prio0 = (h0, h0) if astar else (h0, 0.0)
    heap = [(prio0, next(counter), start)]
    deadline = time.monotonic() + cfg.timeout
    expansions = 0

    while heap:
        (f, _), _, state = heapq.heappop(heap)
        key = state.key()
        g = state.travel_cost
        if g > g_best.get(key, float("inf")):
            continue  # stale entry
        if is_goal(spec, state):
            return _extract_plan(spec, state, parent)
        expansions += 1
        if expansions % 1024 == 0 and time.monotonic() > deadline:
            raise PlanTimeout(f"planner exceeded {cfg.timeout}s after {expansions} expansions")
        if expansions > cfg.max_expansions:
            raise PlanTimeout(f"planner exceeded {cfg.max_expansions} expansions")
        for action in _successors(spec, state):
            child = apply_action(spec, state, action)
            ckey = child.key()
            if child.travel_cost < g_best.get(ckey, float("inf")):
                g_best[ckey] = child.travel_cost
                parent[ckey] = (key, action, state)
                ch = h(child)
                if ch == float("inf"):
                    continue
                prio = (child.travel_cost + ch, ch) if astar else (ch, 0.0)
                heapq.heappush(heap, (prio, next(counter), child))

    raise NoPlanExists("goal unreachable from the initial configuration")


def _extract_plan(spec: ProblemSpec, goal_state: WorldState, parent: dict) -> Plan:
    actions: list[Action] = []
    key = goal_state.key()
    while parent[key] is not None:
        pkey, action, _ = parent[key]
        actions.append(action)
        key = pkey
    actions.reverse()
    return build_plan(spec, actions)


def build_plan(spec: ProblemSpec, actions: list[Action]) -> Plan:
    """Assemble a Plan from a sequential trace; derives per-agent views,
    allocation and parallel lanes.  Tolerates invalid traces (travel falls
    back to 0 for non-paths, lanes stay empty if packing cannot progress) so
    that validate_plan can report the violations."""
    per_agent: dict[str, list[Action]] = {a.id: [] for a in spec.agents}
    allocation: dict[str, str] = {}
    travel = 0.0
    for act in actions:
        per_agent[act.agent].append(act)
        if isinstance(act, Do):
            allocation[act.task] = act.agent
        elif isinstance(act, Move) and spec.has_path(act.origin, act.dest):
            travel += spec.distance(act.origin, act.dest)
    plan = Plan(list(actions), per_agent, allocation, travel)
    try:
        plan.timed = timed_schedule(spec, plan)
    except RuntimeError:
        plan.timed = {}
    return plan


# ---------------------------------------------------------------------------
# parallel packing


def timed_schedule(spec: ProblemSpec, plan: Plan) -> dict[str, list[Action]]:
    """Pack the sequential trace into per-agent lanes of one action per slot.

    Trace-order gating: an action starts once all earlier trace actions have
    started (same slot allowed, scanned in trace order) and its world
    preconditions hold; otherwise its agent waits that slot.
    """
    order = plan.total_order
    n = len(order)
    started = [False] * n
    lanes: dict[str, list[Action]] = {a: [] for a in plan.per_agent if plan.per_agent[a]}
    state = initial_state(spec)
    dispatched = 0
    guard = 0
    while dispatched < n:
        busy: set[str] = set()
        acted_this_slot: dict[str, Action] = {}
        for i, act in enumerate(order):
            if started[i]:
                continue
            agent = act.agent
            if agent in busy:
                break  # later trace actions must not overtake this one
            try:
                nxt = apply_action(spec, state, act)
            except ValueError:
                break
            state = nxt
            started[i] = True
            dispatched += 1
            busy.add(agent)
            acted_this_slot[agent] = act
        for agent, lane in lanes.items():
            lane.append(acted_this_slot.get(agent, Wait(agent)))
        guard += 1
        if guard > 4 * n + 16:
            raise RuntimeError("parallel packing failed to make progress")
    for lane in lanes.values():
        while lane and isinstance(lane[-1], Wait):
            lane.pop()
    return lanes


# ---------------------------------------------------------------------------
# validation & metrics


@dataclass(frozen=True)
class PlanViolation:
    constraint: str     # C1..C5 or "timed"
    index: int          # trace index or slot
    message: str

    def __str__(self):
        return f"[{self.constraint}] @{self.index}: {self.message}"


def validate_plan(spec: ProblemSpec, plan: Plan) -> list[PlanViolation]:
    """Replay-based check of the mission constraints plus a per-slot
    occupancy check of the timed lanes; empty list means the plan is valid."""
    out: list[PlanViolation] = []
    state = initial_state(spec)
    for i, act in enumerate(plan.total_order):
        if isinstance(act, Move):
            if not spec.has_path(act.origin, act.dest):
                out.append(PlanViolation("C1", i, f"no path {act.origin}->{act.dest}"))
                continue
            if state.location_of(act.agent) != act.origin:
                out.append(PlanViolation("C2", i, f"{act.agent} is not at {act.origin}"))
                continue
            if act.dest not in state.empty:
                out.append(PlanViolation("C3", i, f"{act.dest} is occupied"))
                continue
        elif isinstance(act, Do):
            if state.location_of(act.agent) != act.location or spec.task_location(act.task) != act.location:
                out.append(PlanViolation("C2", i, f"{act.agent} cannot do {act.task} at {act.location}"))
                continue
            if act.task in state.done:
                out.append(PlanViolation("C5", i, f"{act.task} done twice"))
                continue
            if spec.p_success(act.agent, act.task) < spec.constraints.gamma:
                out.append(
                    PlanViolation("C4", i, f"{act.agent} below allocation threshold for {act.task}")
                )
                continue
        state = apply_action(spec, state, act) if _safe_enabled(spec, state, act) else state
    missing = (spec.pending - state.done)
    if missing:
        out.append(PlanViolation("C5", len(plan.total_order), f"unfinished tasks: {sorted(missing)}"))

    # per-slot occupancy over the timed lanes (end-of-slot positions);
    # shared start locations are excluded, matching the seeding semantics
    if plan.timed:
        positions = dict(spec.initial_locations)
        depot = set(spec.initial_locations.values())
        for slot in range(max(len(l) for l in plan.timed.values())):
            for agent, lane in plan.timed.items():
                if slot < len(lane) and isinstance(lane[slot], Move):
                    positions[agent] = lane[slot].dest
            occupied: dict[str, str] = {}
            for agent, loc in positions.items():
                if loc in occupied and loc not in depot:
                    out.append(
                        PlanViolation("timed", slot, f"{agent} and {occupied[loc]} co-located at {loc}")
                    )
                occupied[loc] = agent
    return out


def _safe_enabled(spec, state, act) -> bool:
    from .world import is_enabled

    return is_enabled(spec, state, act)


def plan_metrics(plan: Plan) -> dict:
    return {
        "travel_cost": plan.travel_cost,
        "horizons": plan.horizons(),
        "makespan": plan.makespan(),
    }
