"""Mission specification model: parsing, validation and symbol tables.

The JSON mission file declares locations, paths, task groups with located
instances, agents with per-group capabilities, and the two mission
constraints (success floor and allocation threshold).  Everything downstream
(planner, uncertainty model, synthesis, adaptation) reads the world through
this module's accessors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .errors import SpecError

WORKER = "worker"
ROBOT = "robot"
AGENT_KINDS = (WORKER, ROBOT)


@dataclass(frozen=True)
class Location:
    id: str
    description: Optional[str] = None


@dataclass(frozen=True)
class Path:
    start: str
    end: str
    distance: float
    description: Optional[str] = None


@dataclass(frozen=True)
class TaskInstance:
    id: str
    group: str
    location: str


@dataclass(frozen=True)
class TaskGroup:
    id: str
    members: tuple[str, ...]
    description: Optional[str] = None


@dataclass(frozen=True)
class Capability:
    """Cost / success-probability / retry cap of one agent on one task group."""

    group: str
    cost: float
    p_success: float
    max_retries: int


@dataclass(frozen=True)
class Agent:
    id: str
    kind: str
    start: str
    capabilities: tuple[Capability, ...]

    def capability_for(self, group: str) -> Optional[Capability]:
        for cap in self.capabilities:
            if cap.group == group:
                return cap
        return None


@dataclass(frozen=True)
class MissionConstraints:
    p_succ: float      # mission success floor (C6)
    gamma: float       # minimum competency for allocation (C4)


# the optimisation objectives are fixed for every mission
OBJECTIVES = ("minimize expected_cost", "maximize success_prob")


@dataclass(frozen=True)
class Violation:
    severity: str      # "error" | "warning"
    path: str          # field path into the JSON document
    message: str

    def __str__(self):
        return f"[{self.severity}] {self.path}: {self.message}"


class ProblemSpec:
    """Fully resolved mission specification.

    Immutable after construction; collections are ordered lexicographically
    by id so every downstream stage is deterministic.  The initial
    configuration (agent placement + pending task set) defaults to the
    declared starts and the full task set, but adaptation builds replan
    specs with mid-mission configurations.
    """

    def __init__(
        self,
        locations: Iterable[Location],
        paths: Iterable[Path],
        task_groups: Iterable[TaskGroup],
        tasks: Iterable[TaskInstance],
        agents: Iterable[Agent],
        constraints: MissionConstraints,
        initial_locations: Optional[Mapping[str, str]] = None,
        pending: Optional[Iterable[str]] = None,
        p_overrides: Optional[Mapping[tuple[str, str], float]] = None,
    ):
        self.locations = tuple(sorted(locations, key=lambda l: l.id))
        self.task_groups = tuple(sorted(task_groups, key=lambda g: g.id))
        self.tasks = tuple(sorted(tasks, key=lambda t: t.id))
        self.agents = tuple(sorted(agents, key=lambda a: a.id))
        self.constraints = constraints

        self._location_ids = frozenset(l.id for l in self.locations)
        self._task_by_id = {t.id: t for t in self.tasks}
        self._agent_by_id = {a.id: a for a in self.agents}
        self._group_by_id = {g.id: g for g in self.task_groups}

        # symmetric closure over declared paths
        self._dist: dict[tuple[str, str], float] = {}
        self._neighbors: dict[str, list[str]] = {l.id: [] for l in self.locations}
        self.paths = tuple(
            sorted(paths, key=lambda p: (p.start, p.end))
        )
        for p in self.paths:
            for a, b in ((p.start, p.end), (p.end, p.start)):
                if (a, b) not in self._dist:
                    self._neighbors[a].append(b)
                self._dist[(a, b)] = p.distance
        for lid in self._neighbors:
            self._neighbors[lid].sort()

        if initial_locations is None:
            initial_locations = {a.id: a.start for a in self.agents}
        self.initial_locations = dict(sorted(initial_locations.items()))
        if pending is None:
            pending = [t.id for t in self.tasks]
        self.pending = frozenset(pending)
        self.p_overrides = dict(p_overrides or {})

    # -- symbol tables -------------------------------------------------

    def location(self, lid: str) -> Location:
        for l in self.locations:
            if l.id == lid:
                return l
        raise KeyError(lid)

    def task(self, tid: str) -> TaskInstance:
        return self._task_by_id[tid]

    def agent(self, aid: str) -> Agent:
        return self._agent_by_id[aid]

    def group(self, gid: str) -> TaskGroup:
        return self._group_by_id[gid]

    def location_ids(self) -> frozenset[str]:
        return self._location_ids

    def has_path(self, a: str, b: str) -> bool:
        return (a, b) in self._dist

    def distance(self, a: str, b: str) -> float:
        return self._dist[(a, b)]

    def neighbors(self, lid: str) -> list[str]:
        return self._neighbors.get(lid, [])

    def task_location(self, tid: str) -> str:
        return self._task_by_id[tid].location

    # -- capability accessors (honouring runtime overrides) -------------

    def p_success(self, agent_id: str, task_id: str) -> float:
        """Success probability of an agent on a task instance (0 if incapable)."""
        if (agent_id, task_id) in self.p_overrides:
            return self.p_overrides[(agent_id, task_id)]
        cap = self._agent_by_id[agent_id].capability_for(self._task_by_id[task_id].group)
        return cap.p_success if cap is not None else 0.0

    def task_cost(self, agent_id: str, task_id: str) -> float:
        cap = self._agent_by_id[agent_id].capability_for(self._task_by_id[task_id].group)
        return cap.cost if cap is not None else 0.0

    def max_retries(self, agent_id: str, task_id: str) -> int:
        cap = self._agent_by_id[agent_id].capability_for(self._task_by_id[task_id].group)
        return cap.max_retries if cap is not None else 0

    def capable_agents(self, task_id: str) -> list[str]:
        """Agents eligible for a task under the allocation threshold."""
        gamma = self.constraints.gamma
        return [a.id for a in self.agents if self.p_success(a.id, task_id) >= gamma]

    @property
    def objectives(self) -> tuple[str, str]:
        return OBJECTIVES

    # -- derived copies --------------------------------------------------

    def with_runtime_state(
        self,
        initial_locations: Mapping[str, str],
        pending: Iterable[str],
        p_overrides: Optional[Mapping[tuple[str, str], float]] = None,
        gamma: Optional[float] = None,
        p_succ: Optional[float] = None,
    ) -> "ProblemSpec":
        """Copy of this spec re-rooted at a mid-mission configuration."""
        constraints = MissionConstraints(
            p_succ=self.constraints.p_succ if p_succ is None else p_succ,
            gamma=self.constraints.gamma if gamma is None else gamma,
        )
        merged = dict(self.p_overrides)
        merged.update(p_overrides or {})
        return ProblemSpec(
            self.locations,
            self.paths,
            self.task_groups,
            self.tasks,
            self.agents,
            constraints,
            initial_locations=initial_locations,
            pending=pending,
            p_overrides=merged,
        )

    # -- equality / serialization ----------------------------------------

    def __eq__(self, other):
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return serialize(self) == serialize(other)

    def __repr__(self):
        return (
            f"ProblemSpec(|L|={len(self.locations)}, |paths|={len(self.paths)}, "
            f"|T|={len(self.tasks)}, |A|={len(self.agents)})"
        )


# ---------------------------------------------------------------------------
# parsing


def _require(cond: bool, path: str, message: str, errs: list[Violation]):
    if not cond:
        errs.append(Violation("error", path, message))


def _check_keys(obj: dict, allowed: set[str], required: set[str], path: str, errs: list[Violation]):
    for key in obj:
        if key not in allowed:
            errs.append(Violation("error", path, f"unknown key '{key}'"))
    for key in required:
        if key not in obj:
            errs.append(Violation("error", path, f"missing key '{key}'"))


def parse_problem_spec(text: str) -> ProblemSpec:
    """Parse and fully resolve a JSON mission document.

    Raises SpecError on malformed JSON, unknown references, out-of-range
    probabilities or duplicate ids; every violation names its field path.
    Unknown keys are rejected: specification files are contracts and silent
    typos corrupt missions.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON: {exc}") from exc
    return build_problem_spec(doc)


def build_problem_spec(doc) -> ProblemSpec:
    """Build a ProblemSpec from an already-decoded JSON document."""
    errs: list[Violation] = []
    if not isinstance(doc, dict):
        raise SpecError("top level must be a JSON object")
    _check_keys(
        doc,
        {"locations", "paths", "tasks", "agents", "constraints", "initial", "overrides"},
        {"locations", "paths", "tasks", "agents", "constraints"},
        "$",
        errs,
    )
    if errs:
        raise SpecError("invalid specification", errs)

    locations: list[Location] = []
    seen_loc: set[str] = set()
    for i, raw in enumerate(doc["locations"]):
        path = f"locations[{i}]"
        _check_keys(raw, {"id", "description"}, {"id"}, path, errs)
        lid = raw.get("id")
        if lid is None:
            continue
        _require(lid not in seen_loc, path + ".id", f"duplicate location id '{lid}'", errs)
        seen_loc.add(lid)
        locations.append(Location(lid, raw.get("description")))

    paths: list[Path] = []
    seen_pairs: set[tuple[str, str]] = set()
    for i, raw in enumerate(doc["paths"]):
        ppath = f"paths[{i}]"
        _check_keys(raw, {"start", "end", "distance", "description"}, {"start", "end", "distance"}, ppath, errs)
        start, end = raw.get("start"), raw.get("end")
        dist = raw.get("distance", 1)
        if start is None or end is None:
            continue
        _require(start in seen_loc, ppath + ".start", f"unknown location '{start}'", errs)
        _require(end in seen_loc, ppath + ".end", f"unknown location '{end}'", errs)
        _require(start != end, ppath, "path start and end must differ", errs)
        _require(isinstance(dist, (int, float)) and dist > 0, ppath + ".distance", "distance must be > 0", errs)
        pair = (min(start, end), max(start, end))
        _require(pair not in seen_pairs, ppath, f"duplicate path {start}-{end}", errs)
        seen_pairs.add(pair)
        paths.append(Path(start, end, float(dist), raw.get("description")))

    groups: list[TaskGroup] = []
    tasks: list[TaskInstance] = []
    seen_group: set[str] = set()
    seen_task: set[str] = set()
    for i, raw in enumerate(doc["tasks"]):
        gpath = f"tasks[{i}]"
        _check_keys(raw, {"id", "description", "instances"}, {"id", "instances"}, gpath, errs)
        gid = raw.get("id")
        if gid is None:
            continue
        _require(gid not in seen_group, gpath + ".id", f"duplicate task group id '{gid}'", errs)
        seen_group.add(gid)
        members = []
        instances = raw.get("instances", [])
        _require(len(instances) > 0, gpath + ".instances", "task group has no instances", errs)
        for j, inst in enumerate(instances):
            ipath = f"{gpath}.instances[{j}]"
            _check_keys(inst, {"id", "location"}, {"id", "location"}, ipath, errs)
            tid, loc = inst.get("id"), inst.get("location")
            if tid is None:
                continue
            _require(tid not in seen_task and tid not in seen_group, ipath + ".id", f"duplicate task id '{tid}'", errs)
            seen_task.add(tid)
            _require(loc in seen_loc, ipath + ".location", f"unknown location '{loc}'", errs)
            members.append(tid)
            tasks.append(TaskInstance(tid, gid, loc))
        groups.append(TaskGroup(gid, tuple(sorted(members)), raw.get("description")))

    agents: list[Agent] = []
    seen_agent: set[str] = set()
    for i, raw in enumerate(doc["agents"]):
        apath = f"agents[{i}]"
        _check_keys(raw, {"id", "type", "start", "tasks"}, {"id", "type", "start", "tasks"}, apath, errs)
        aid = raw.get("id")
        if aid is None:
            continue
        _require(aid not in seen_agent, apath + ".id", f"duplicate agent id '{aid}'", errs)
        seen_agent.add(aid)
        kind = raw.get("type")
        _require(kind in AGENT_KINDS, apath + ".type", f"type must be one of {AGENT_KINDS}", errs)
        start = raw.get("start")
        _require(start in seen_loc, apath + ".start", f"unknown start location '{start}'", errs)
        caps: list[Capability] = []
        seen_cap: set[str] = set()
        for j, cap in enumerate(raw.get("tasks", [])):
            cpath = f"{apath}.tasks[{j}]"
            _check_keys(cap, {"id", "cost", "p_success", "retries"}, {"id", "cost", "p_success", "retries"}, cpath, errs)
            gid = cap.get("id")
            _require(gid in seen_group, cpath + ".id", f"unknown task group '{gid}'", errs)
            _require(gid not in seen_cap, cpath + ".id", f"duplicate capability for group '{gid}'", errs)
            seen_cap.add(gid)
            cost = cap.get("cost", 0)
            p = cap.get("p_success", 0)
            retries = cap.get("retries", 0)
            _require(isinstance(cost, (int, float)) and cost >= 0, cpath + ".cost", "cost must be >= 0", errs)
            _require(
                isinstance(p, (int, float)) and 0.0 <= p <= 1.0,
                cpath + ".p_success",
                f"p_success must lie in [0,1], got {p}",
                errs,
            )
            _require(isinstance(retries, int) and retries >= 0, cpath + ".retries", "retries must be an integer >= 0", errs)
            if gid is not None:
                caps.append(Capability(gid, float(cost), float(p), int(retries) if isinstance(retries, int) else 0))
        agents.append(Agent(aid, kind, start, tuple(sorted(caps, key=lambda c: c.group))))

    craw = doc["constraints"]
    _check_keys(
        craw,
        {"mission_probability_of_success", "min_assignment_probability"},
        {"mission_probability_of_success", "min_assignment_probability"},
        "constraints",
        errs,
    )
    p_succ = craw.get("mission_probability_of_success", 1.0)
    gamma = craw.get("min_assignment_probability", 1.0)
    for name, value in (("mission_probability_of_success", p_succ), ("min_assignment_probability", gamma)):
        _require(
            isinstance(value, (int, float)) and 0.0 < value <= 1.0,
            f"constraints.{name}",
            f"must lie in (0,1], got {value}",
            errs,
        )

    initial_locations = None
    pending = None
    if "initial" in doc:
        iraw = doc["initial"]
        _check_keys(iraw, {"locations", "pending"}, set(), "initial", errs)
        if "locations" in iraw:
            initial_locations = dict(iraw["locations"])
            for aid, loc in initial_locations.items():
                _require(aid in seen_agent, f"initial.locations.{aid}", f"unknown agent '{aid}'", errs)
                _require(loc in seen_loc, f"initial.locations.{aid}", f"unknown location '{loc}'", errs)
        if "pending" in iraw:
            pending = list(iraw["pending"])
            for tid in pending:
                _require(tid in seen_task, "initial.pending", f"unknown task '{tid}'", errs)

    p_overrides = {}
    for i, raw in enumerate(doc.get("overrides", [])):
        opath = f"overrides[{i}]"
        _check_keys(raw, {"agent", "task", "p_success"}, {"agent", "task", "p_success"}, opath, errs)
        aid, tid, p = raw.get("agent"), raw.get("task"), raw.get("p_success", 0)
        _require(aid in seen_agent, opath + ".agent", f"unknown agent '{aid}'", errs)
        _require(tid in seen_task, opath + ".task", f"unknown task '{tid}'", errs)
        _require(0.0 <= p <= 1.0, opath + ".p_success", f"p_success must lie in [0,1], got {p}", errs)
        p_overrides[(aid, tid)] = float(p)

    if errs:
        raise SpecError(f"invalid specification ({len(errs)} violations)", errs)

    spec = ProblemSpec(
        locations,
        paths,
        groups,
        tasks,
        agents,
        MissionConstraints(float(p_succ), float(gamma)),
        initial_locations=initial_locations,
        pending=pending,
        p_overrides=p_overrides,
    )
    hard = [v for v in validate(spec) if v.severity == "error"]
    if hard:
        raise SpecError(f"inconsistent specification ({len(hard)} errors)", hard)
    return spec


def validate(spec: ProblemSpec) -> list[Violation]:
    """Cross-reference and consistency checks; empty list iff all invariants hold.

    Errors are structural breakages; a task nobody can perform at the
    allocation threshold is only a warning (the mission may still be edited).
    """
    out: list[Violation] = []
    loc_ids = spec.location_ids()
    for p in spec.paths:
        if p.start not in loc_ids:
            out.append(Violation("error", f"paths[{p.start}->{p.end}].start", f"unknown location '{p.start}'"))
        if p.end not in loc_ids:
            out.append(Violation("error", f"paths[{p.start}->{p.end}].end", f"unknown location '{p.end}'"))
    for t in spec.tasks:
        if t.location not in loc_ids:
            out.append(Violation("error", f"tasks.{t.id}.location", f"unknown location '{t.location}'"))
    for a in spec.agents:
        if a.start not in loc_ids:
            out.append(Violation("error", f"agents.{a.id}.start", f"unknown location '{a.start}'"))
        for cap in a.capabilities:
            if not 0.0 <= cap.p_success <= 1.0:
                out.append(
                    Violation("error", f"agents.{a.id}.tasks.{cap.group}.p_success", f"out of range: {cap.p_success}")
                )
    for aid, loc in spec.initial_locations.items():
        if loc not in loc_ids:
            out.append(Violation("error", f"initial.locations.{aid}", f"unknown location '{loc}'"))
    for t in spec.tasks:
        if t.id in spec.pending and not spec.capable_agents(t.id):
            out.append(
                Violation(
                    "warning",
                    f"tasks.{t.id}",
                    f"no agent reaches the allocation threshold {spec.constraints.gamma} for this task",
                )
            )
    return out


def serialize(spec: ProblemSpec) -> str:
    """Canonical JSON form; parse(serialize(spec)) == spec."""
    doc = {
        "locations": [
            {"id": l.id, **({"description": l.description} if l.description else {})} for l in spec.locations
        ],
        "paths": [
            {
                "start": p.start,
                "end": p.end,
                "distance": p.distance,
                **({"description": p.description} if p.description else {}),
            }
            for p in spec.paths
        ],
        "tasks": [
            {
                "id": g.id,
                **({"description": g.description} if g.description else {}),
                "instances": [
                    {"id": t.id, "location": t.location} for t in spec.tasks if t.group == g.id
                ],
            }
            for g in spec.task_groups
        ],
        "agents": [
            {
                "id": a.id,
                "type": a.kind,
                "start": a.start,
                "tasks": [
                    {"id": c.group, "cost": c.cost, "p_success": c.p_success, "retries": c.max_retries}
                    for c in a.capabilities
                ],
            }
            for a in spec.agents
        ],
        "constraints": {
            "mission_probability_of_success": spec.constraints.p_succ,
            "min_assignment_probability": spec.constraints.gamma,
        },
    }
    default_locs = {a.id: a.start for a in spec.agents}
    default_pending = frozenset(t.id for t in spec.tasks)
    if spec.initial_locations != default_locs or spec.pending != default_pending:
        doc["initial"] = {
            "locations": spec.initial_locations,
            "pending": sorted(spec.pending),
        }
    if spec.p_overrides:
        doc["overrides"] = [
            {"agent": aid, "task": tid, "p_success": p}
            for (aid, tid), p in sorted(spec.p_overrides.items())
        ]
    return json.dumps(doc, indent=2, sort_keys=False)
