import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colorgrid import (
    Action,
    AStarFollowerPolicy,
    AStarLeaderPolicy,
    EnvConfig,
    FollowerBelief,
    RandomPolicy,
    astar_follower_act,
    astar_leader_act,
    astar_path,
    make_policy,
    reset,
    step,
)
from colorgrid.agents import _plan_route, _wander_action
from conftest import build_state
from oracles import bfs_path_length


def goal_cells(state):
    width = state.config.width
    return {divmod(f, width) for f in state.block_cells[state.goal_color]}


class TestAStarPath:
    def test_straight_line_length(self):
        state = build_state(width=8, height=8, positions=((7, 7), (6, 6)))
        path = astar_path(state, (0, 0), {(0, 5)}, set())
        assert path is not None
        assert len(path) - 1 == 5
        assert path[0] == (0, 0) and path[-1] == (0, 5)

    def test_path_is_4_connected_and_avoids_obstacles(self):
        state = build_state(width=8, height=8, positions=((7, 7), (6, 6)))
        obstacles = {(0, 2), (1, 2), (2, 2)}
        path = astar_path(state, (0, 0), {(0, 4)}, obstacles)
        assert path is not None
        for a, b in zip(path, path[1:]):
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
            assert b not in obstacles
        assert len(path) - 1 == bfs_path_length(8, 8, (0, 0), {(0, 4)}, obstacles)

    def test_walled_target_unreachable(self):
        state = build_state(width=8, height=8, positions=((7, 7), (6, 6)))
        obstacles = {(3, 4), (5, 4), (4, 3), (4, 5)}
        assert astar_path(state, (0, 0), {(4, 4)}, obstacles) is None

    def test_start_on_target(self):
        state = build_state(width=8, height=8)
        assert astar_path(state, (3, 3), {(3, 3)}, set()) == [(3, 3)]

    def test_no_targets(self):
        state = build_state(width=8, height=8)
        assert astar_path(state, (3, 3), set(), set()) is None

    def test_equidistant_targets_scan_order(self):
        state = build_state(width=8, height=8, positions=((7, 7), (6, 6)))
        path = astar_path(state, (2, 2), {(2, 0), (0, 2)}, set())
        assert path[-1] == (0, 2)  # smaller (row, col) wins

    def test_500_random_instances_match_bfs(self):
        rng = random.Random(4242)
        state = build_state(width=8, height=8, positions=((7, 7), (7, 6)))
        for _ in range(500):
            cells = [(r, c) for r in range(8) for c in range(8)]
            rng.shuffle(cells)
            n_obstacles = rng.randrange(0, 30)
            obstacles = set(cells[:n_obstacles])
            start = cells[n_obstacles]
            targets = set(cells[n_obstacles + 1 : n_obstacles + 1 + rng.randrange(1, 5)])
            path = astar_path(state, start, targets, obstacles)
            oracle = bfs_path_length(8, 8, start, targets, obstacles)
            if oracle is None:
                assert path is None
            else:
                assert path is not None and len(path) - 1 == oracle

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_tie_break_matches_declared_rule(self, seed):
        # chosen target is the (row, col)-smallest among minimum-distance targets
        rng = random.Random(seed)
        state = build_state(width=7, height=7, positions=((6, 6), (6, 5)))
        cells = [(r, c) for r in range(7) for c in range(7)]
        rng.shuffle(cells)
        obstacles = set(cells[:10])
        start = cells[10]
        targets = set(cells[11:15])
        path = astar_path(state, start, targets, obstacles)
        dists = {t: bfs_path_length(7, 7, start, {t}, obstacles) for t in targets}
        reachable = {t: d for t, d in dists.items() if d is not None}
        if not reachable:
            assert path is None
            return
        best = min(reachable.values())
        expected_target = min(t for t, d in reachable.items() if d == best)
        assert path is not None
        assert len(path) - 1 == best
        assert path[-1] == expected_target


class TestLeader:
    def test_moves_onto_adjacent_goal_block(self):
        state = build_state(blocks={(2, 3): 0, (0, 0): 1}, positions=((2, 2), (4, 4)), goal=0)
        assert astar_leader_act(state) == Action.RIGHT

    def test_routes_around_incorrect_blocks(self):
        # incorrect blocks are impassable for planning
        blocks = {(1, 2): 1, (2, 3): 1, (3, 2): 1, (2, 1): 0, (0, 4): 0}
        state = build_state(blocks=blocks, positions=((2, 2), (4, 4)), goal=0)
        assert astar_leader_act(state) == Action.LEFT

    def test_wander_when_no_goal_reachable(self):
        # the only goal block is walled off; leader steps to a free neighbor, Up first
        blocks = {(0, 1): 1, (1, 0): 1, (1, 2): 1, (2, 1): 1, (1, 1): 0}
        state = build_state(blocks=blocks, positions=((3, 3), (4, 4)), goal=0)
        assert astar_leader_act(state) == Action.UP

    def test_blocked_fallback_prefers_staying(self):
        # all free neighbors absent: choose a direction that cannot move
        blocks = {(1, 0): 1, (0, 1): 2, (1, 1): 1}
        state = build_state(blocks=blocks, positions=((0, 0), (4, 4)), goal=0)
        action = astar_leader_act(state)
        assert action in (Action.UP, Action.LEFT)  # off-grid, stays put
        _, outcome = step(state, [action, Action.UP])
        assert state.agent_positions[0] == (0, 0)
        assert outcome.collections == []

    def test_planned_target_is_goal_colored_across_episodes(self):
        cfg = EnvConfig(width=16, height=16, block_density=0.15)
        for seed in range(100):
            state = reset(cfg, seed)
            follower_rng = random.Random(seed)
            for _ in range(64):
                action, target = _plan_route(state, 0, state.goal_color)
                planned_goal_cells = goal_cells(state)
                if target is not None:
                    assert target in planned_goal_cells
                _, outcome = step(state, [action, follower_rng.randrange(4)])
                leader_cols = [c for c in outcome.collections if c.agent == 0]
                if leader_cols:
                    assert target is not None
                    assert leader_cols[0].cell == target


class TestFollower:
    def test_wanders_before_first_leader_collection(self):
        state = build_state(blocks={(0, 0): 0}, positions=((4, 4), (2, 2)), goal=0)
        action, belief = astar_follower_act(state, FollowerBelief())
        assert belief.believed_goal is None
        assert action == Action.UP  # all neighbors empty, Up preferred
        _, outcome = step(state, [Action.UP, action])
        assert all(c.agent != 1 for c in outcome.collections)

    def test_belief_updates_on_leader_collection(self):
        from colorgrid import Collection, StepOutcome

        state = build_state(
            blocks={(0, 0): 2, (4, 0): 2}, positions=((4, 4), (2, 2)), goal=2
        )
        prev = StepOutcome(
            base_rewards=[1.0, 0.0],
            shaped_rewards=[1.0, 0.0],
            shared_reward=1.0,
            collections=[Collection(0, (4, 4), 2, True)],
            goal_switched=False,
            new_goal=2,
        )
        action, belief = astar_follower_act(state, FollowerBelief(), prev)
        assert belief.believed_goal == 2
        # routes toward the nearest color-2 block
        path = astar_path(state, (2, 2), {(0, 0), (4, 0)}, {(4, 4)})
        expected = (path[1][0] - 2, path[1][1] - 2)
        assert (Action(action).value) == [(-1, 0), (1, 0), (0, -1), (0, 1)].index(expected)

    def test_belief_tracks_most_recent_collection(self):
        policy = AStarFollowerPolicy()
        policy.reset()
        state = build_state(
            blocks={(0, 0): 1, (0, 4): 2}, positions=((4, 4), (2, 2)), goal=1
        )
        from colorgrid import Collection, StepOutcome

        def outcome_with(color):
            return StepOutcome([0.0, 0.0], [0.0, 0.0], 0.0, [Collection(0, (3, 3), color, True)], False, 1)

        policy.act(state, outcome_with(1))
        assert policy.belief.believed_goal == 1
        policy.act(state, outcome_with(2))
        assert policy.belief.believed_goal == 2

    def test_follower_ignores_its_own_collections(self):
        from colorgrid import Collection, StepOutcome

        prev = StepOutcome([0.0, -1.0], [0.0, -1.0], -1.0, [Collection(1, (2, 3), 0, False)], False, 1)
        state = build_state(blocks={(0, 0): 0}, positions=((4, 4), (2, 2)), goal=1)
        _, belief = astar_follower_act(state, FollowerBelief(), prev)
        assert belief.believed_goal is None

    def test_fallback_to_wander_when_believed_color_unreachable(self):
        blocks = {(0, 1): 1, (1, 0): 1, (1, 2): 1, (2, 1): 1, (1, 1): 0}
        state = build_state(blocks=blocks, positions=((4, 4), (3, 3)), goal=0)
        action, belief = astar_follower_act(state, FollowerBelief(believed_goal=0))
        assert belief.believed_goal == 0
        assert action == Action.UP  # wander


class TestRandomPolicy:
    def test_action_frequencies(self):
        policy = RandomPolicy(seed=3)
        state = build_state()
        n = 100_000
        counts = [0, 0, 0, 0]
        for _ in range(n):
            counts[policy.act(state)] += 1
        for count in counts:
            assert count / n == pytest.approx(0.25, abs=0.01)

    def test_seeded_reproducibility(self):
        state = build_state()
        a = [RandomPolicy(seed=5).act(state) for _ in range(50)]
        b = [RandomPolicy(seed=5).act(state) for _ in range(50)]
        assert a == b


class TestPolicyFactory:
    def test_names(self):
        assert isinstance(make_policy("random", 1), RandomPolicy)
        assert isinstance(make_policy("astar_leader", 1), AStarLeaderPolicy)
        assert isinstance(make_policy("astar_copier", 1), AStarFollowerPolicy)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="astar_copier"):
            make_policy("bogus")

    def test_baseline_trajectories_deterministic(self):
        cfg = EnvConfig(width=12, height=12, block_density=0.2)
        runs = []
        for _ in range(2):
            state = reset(cfg, 31)
            leader, follower = make_policy("astar_leader", 1, 0), make_policy("astar_copier", 2, 1)
            leader.reset(), follower.reset()
            prev = None
            actions_taken = []
            for _ in range(64):
                acts = [leader.act(state, prev), follower.act(state, prev)]
                _, prev = step(state, acts)
                actions_taken.append(tuple(acts))
            runs.append(actions_taken)
        assert runs[0] == runs[1]
