import random
from dataclasses import replace

import pytest

from hybridplan.spec import build_problem_spec
from hybridplan.world import (
    Do,
    Move,
    apply_action,
    enabled_actions,
    initial_state,
    is_goal,
    replay,
)


class TestEnabled:
    def test_initial_moves_only(self, vineyard):
        state = initial_state(vineyard)
        acts = enabled_actions(vineyard, state)
        assert Move("w2", "l1", "l4") in acts
        assert not any(isinstance(a, Do) for a in acts)

    def test_do_enabled_at_task_location(self, vineyard):
        state = initial_state(vineyard)
        state = apply_action(vineyard, state, Move("w2", "l1", "l4"))
        acts = enabled_actions(vineyard, state)
        assert Do("w2", "t1l4", "l4") in acts

    def test_do_gated_by_competency(self, vineyard):
        state = initial_state(vineyard)
        state = apply_action(vineyard, state, Move("r1", "l1", "l4"))
        acts = enabled_actions(vineyard, state)
        # robots cannot harvest: zero competency is below the threshold
        assert Do("r1", "t1l4", "l4") not in acts
        assert Do("r1", "t3l4", "l4") in acts

    def test_occupied_destination_blocked(self, vineyard):
        state = initial_state(vineyard)
        state = apply_action(vineyard, state, Move("w2", "l1", "l4"))
        acts = enabled_actions(vineyard, state)
        assert Move("w1", "l1", "l4") not in acts


class TestApply:
    def test_move_effects(self, vineyard):
        state = initial_state(vineyard)
        nxt = apply_action(vineyard, state, Move("w2", "l1", "l4"))
        assert nxt.location_of("w2") == "l4"
        assert "l4" not in nxt.empty
        assert "l1" in nxt.empty  # departing marks the shared start empty
        assert nxt.travel_cost == 1

    def test_move_frame_property(self, vineyard):
        state = initial_state(vineyard)
        nxt = apply_action(vineyard, state, Move("w2", "l1", "l4"))
        changed = set(state.empty) ^ set(nxt.empty)
        assert changed == {"l1", "l4"}
        moved = [a for a, l in nxt.agent_locs if dict(state.agent_locs)[a] != l]
        assert moved == ["w2"]
        assert nxt.done == state.done

    def test_do_frame_property(self, vineyard):
        state = initial_state(vineyard)
        state = apply_action(vineyard, state, Move("w2", "l1", "l4"))
        nxt = apply_action(vineyard, state, Do("w2", "t1l4", "l4"))
        assert nxt.done == {"t1l4"}
        assert nxt.empty == state.empty
        assert nxt.agent_locs == state.agent_locs
        assert nxt.travel_cost == state.travel_cost

    def test_non_enabled_raises(self, vineyard):
        state = initial_state(vineyard)
        with pytest.raises(ValueError):
            apply_action(vineyard, state, Do("w2", "t1l4", "l4"))

    def test_move_to_occupied_raises(self, vineyard):
        state = initial_state(vineyard)
        state = apply_action(vineyard, state, Move("w2", "l1", "l4"))
        with pytest.raises(ValueError):
            apply_action(vineyard, state, Move("w1", "l1", "l4"))


class TestGoal:
    def test_all_done(self, vineyard):
        state = initial_state(vineyard)
        done = frozenset(t.id for t in vineyard.tasks)
        assert is_goal(vineyard, replace(state, done=done))

    def test_nine_of_ten(self, vineyard):
        state = initial_state(vineyard)
        done = frozenset(list(t.id for t in vineyard.tasks)[:9])
        assert not is_goal(vineyard, replace(state, done=done))

    def test_zero_task_mission(self):
        doc = {
            "locations": [{"id": "l1"}],
            "paths": [],
            "tasks": [],
            "agents": [{"id": "a1", "type": "robot", "start": "l1", "tasks": []}],
            "constraints": {
                "mission_probability_of_success": 0.9,
                "min_assignment_probability": 0.5,
            },
        }
        spec = build_problem_spec(doc)
        assert is_goal(spec, initial_state(spec))


class TestInvariants:
    def test_travel_cost_equals_move_distances(self, vineyard):
        state = initial_state(vineyard)
        actions = [Move("w2", "l1", "l4"), Do("w2", "t1l4", "l4"), Move("w2", "l4", "l5")]
        end = replay(vineyard, actions)
        assert end.travel_cost == sum(
            vineyard.distance(a.origin, a.dest) for a in actions if isinstance(a, Move)
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_random_walk_single_occupancy_off_depot(self, vineyard, seed):
        # C3 restated at the state level: absent the shared start, at most one
        # agent per location along any enabled-action walk
        rng = random.Random(seed)
        state = initial_state(vineyard)
        for _ in range(60):
            acts = enabled_actions(vineyard, state)
            if not acts:
                break
            state = apply_action(vineyard, state, rng.choice(acts))
            positions = [loc for _, loc in state.agent_locs if loc != "l1"]
            assert len(positions) == len(set(positions))
