import numpy as np
import pytest

from env.mdp import Action, DronePhase, Mode, TspdEnv
from env.plan import dumps_plan, load_plan, loads_plan, replay, save_plan, verify_plan
from errors import ContractViolationError, IllegalActionError, InstanceFormatError
from schemas.models import Instance, Sortie


def run(env, actions):
    state, _ = env.reset()
    for a_tr, a_dr in actions:
        state = env.step(state, Action(a_tr, a_dr)).state
    return state


def test_reset_mask_on_two_nodes(two_node):
    env = TspdEnv(two_node)
    state, mask = env.reset()
    assert state.drone_phase is DronePhase.MOUNTED
    assert state.visited == frozenset({0})
    assert mask.truck_legal.tolist() == [True, True]
    assert mask.drone_legal.tolist() == [False, True]
    # staying with the truck means launching
    assert env.drone_mask(state, 0).tolist() == [False, True]
    # driving away means riding along
    assert env.drone_mask(state, 1).tolist() == [False, True]


def test_two_node_drone_sortie_costs_five(two_node):
    env = TspdEnv(two_node)
    state, _ = env.reset()
    first = env.step(state, Action(0, 1))
    assert first.cost == pytest.approx(2.5)
    assert first.state.drone_phase is DronePhase.TO_CUSTOMER
    assert first.state.visited == frozenset({0, 1})
    second = env.step(first.state, Action(0, 0))
    assert second.terminal
    assert second.state.elapsed == pytest.approx(5.0)
    assert second.state.drone_phase is DronePhase.MOUNTED


def test_riding_costs_the_truck_tour(two_node):
    env = TspdEnv(two_node)
    state = run(env, [(1, 1), (0, 0)])
    assert env.is_terminal(state)
    assert state.elapsed == pytest.approx(10.0)


def test_waiting_needs_a_moving_partner(two_node):
    env = TspdEnv(two_node)
    state, _ = env.reset()
    with pytest.raises(IllegalActionError) as err:
        env.step(state, Action(0, 0))
    assert err.value.rule.startswith("L5")
    assert err.value.step == 0


def test_mounted_drone_cannot_stay_behind(line3):
    env = TspdEnv(line3)
    state, _ = env.reset()
    assert env.violation(state, 1, 0).startswith("L3")


def test_depot_is_closed_while_customers_remain(line3):
    env = TspdEnv(line3)
    state = run(env, [(1, 1)])
    assert env.violation(state, 0, 0).startswith("L2")
    # open once the drone launches to the last unserved customer
    assert env.violation(state, 0, 2) is None
    assert env.truck_mask(state)[0]


def test_hovering_at_a_rendezvous_does_not_serve_it(line3):
    env = TspdEnv(line3)
    state, _ = env.reset()
    state = env.step(state, Action(2, 1)).state  # truck to 2, drone serves 1
    assert state.elapsed == pytest.approx(5.0)
    assert state.pending_customer is None and 1 in state.visited
    state = env.step(state, Action(2, 2)).state  # drone heads for the truck's target
    assert state.drone_phase is DronePhase.TO_RENDEZVOUS
    assert state.drone_at_node and not state.truck_at_node
    assert 2 not in state.visited
    assert env.drone_mask(state, 2).tolist() == [False, False, True]
    state = env.step(state, Action(2, 2)).state
    assert state.drone_phase is DronePhase.MOUNTED and 2 in state.visited
    state = env.step(state, Action(0, 0)).state
    assert env.is_terminal(state)
    assert state.elapsed == pytest.approx(40.0)


def test_in_transit_vehicles_keep_their_destination(line3):
    env = TspdEnv(line3)
    state = run(env, [(2, 1)])
    assert env.violation(state, 1, 2).startswith("L1")
    assert env.truck_mask(state).tolist() == [False, False, True]


def test_nobody_targets_the_pending_customer():
    inst = Instance.from_points([(0, 0), (10, 0), (40, 0)], alpha=2.0)
    env = TspdEnv(inst)
    state, _ = env.reset()
    state = env.step(state, Action(1, 2)).state  # truck arrives at 1 first
    assert state.truck_at_node and state.pending_customer == 2
    assert env.violation(state, 2, 2).startswith("L2")
    assert env.truck_mask(state).tolist() == [True, True, False]


def test_terminal_state_contract(two_node):
    env = TspdEnv(two_node)
    state = run(env, [(0, 1), (0, 0)])
    with pytest.raises(ContractViolationError):
        env.step(state, Action(0, 0))
    with pytest.raises(ContractViolationError):
        env.truck_mask(state)
    mask = env.legal_actions(state)
    assert not mask.truck_legal.any() and not mask.drone_legal.any()


def test_no_revisit_blocks_visited_customers():
    inst = Instance.from_points([(0, 0), (1, 0), (2, 0), (3, 0)], alpha=2.0)
    env = TspdEnv(inst)
    state = run(env, [(1, 1), (2, 2)])
    with pytest.raises(IllegalActionError) as err:
        env.step(state, Action(1, 1))
    assert err.value.rule.startswith("L2")


def test_revisit_episodes_are_truncated_with_a_penalty():
    inst = Instance.from_points([(0, 0), (1, 0), (2, 0), (3, 0)], alpha=2.0)
    env = TspdEnv(inst, Mode.REVISIT)
    assert env.step_limit == 40
    state, _ = env.reset()
    state = env.step(state, Action(1, 1)).state
    result = None
    for k in range(39):
        target = 2 if k % 2 == 0 else 1
        result = env.step(state, Action(target, target))
        state = result.state
    assert result.terminal and state.truncated
    assert result.cost == pytest.approx(1.0 + 1e4)
    assert state.elapsed == pytest.approx(40.0 + 1e4)
    assert 3 not in state.visited


def test_random_legal_play_always_terminates(make_instance):
    rng = np.random.default_rng(5)
    for seed in range(20):
        inst = make_instance(int(rng.integers(2, 8)), seed)
        env = TspdEnv(inst)
        state, _ = env.reset()
        while not env.is_terminal(state):
            pairs = env.legal_pairs(state)
            assert pairs, "a live state must have a legal action"
            pair = pairs[int(rng.integers(len(pairs)))]
            state = env.step(state, pair).state
        assert state.visited == frozenset(range(inst.n))


# Plans
def test_replay_records_truck_route_and_sorties(two_node):
    plan = replay(two_node, [(0, 1), (0, 0)])
    assert plan.makespan == pytest.approx(5.0)
    assert plan.truck_route == [0, 0]
    assert plan.sorties == [Sortie(launch=0, customer=1, rendezvous=0)]
    assert plan.costs == pytest.approx([2.5, 2.5])
    assert sorted(plan.served_customers()) == [1]


def test_replay_rejects_incomplete_and_overlong_sequences(two_node):
    with pytest.raises(IllegalActionError):
        replay(two_node, [(0, 1)])
    with pytest.raises(IllegalActionError) as err:
        replay(two_node, [(0, 1), (0, 0), (0, 0)])
    assert err.value.step == 2
    with pytest.raises(IllegalActionError) as err:
        replay(two_node, [(0, 0)])
    assert err.value.step == 0


def test_plan_file_uses_one_based_labels(tmp_path, line3):
    plan = replay(line3, [(2, 1), (2, 2), (2, 2), (0, 0)])
    text = dumps_plan(plan)
    assert "truck 1 3 1" in text
    assert "sortie 1 2 3" in text
    assert text.splitlines()[-1] == "action 1 1"
    path = save_plan(plan, tmp_path / "line3.plan")
    loaded = load_plan(path)
    assert loaded.actions == plan.actions
    assert verify_plan(line3, loaded).makespan == pytest.approx(40.0)


def test_plan_parse_errors():
    with pytest.raises(InstanceFormatError) as err:
        loads_plan("makespan 5.0\nbogus 1\n")
    assert err.value.line == 2
    with pytest.raises(InstanceFormatError):
        loads_plan("truck 1 1\n")


def test_verify_plan_catches_a_wrong_makespan(two_node):
    plan = replay(two_node, [(0, 1), (0, 0)])
    with pytest.raises(ContractViolationError):
        verify_plan(two_node, plan.model_copy(update={"makespan": 4.0}))


def play_and_check(inst, rng):
    env = TspdEnv(inst)
    state, _ = env.reset()
    drone_served = 0
    while not env.is_terminal(state):
        pairs = env.legal_pairs(state)
        nxt = env.step(state, pairs[int(rng.integers(len(pairs)))]).state
        assert nxt.truck_at_node or nxt.drone_at_node
        assert nxt.elapsed >= state.elapsed
        added = set(nxt.visited - state.visited)
        if nxt.truck_at_node:
            added.discard(nxt.dest_truck)
        drone_served += len(added)
        if nxt.drone_phase is DronePhase.MOUNTED:
            drone_served = 0
        assert drone_served <= 1
        state = nxt
    assert state.visited == frozenset(range(inst.n))
    assert state.dest_truck == 0 and state.dest_drone == 0
    assert state.truck_at_node and state.drone_at_node
    assert state.step_index <= 4 * inst.n


def test_episode_invariants(make_instance):
    rng = np.random.default_rng(11)
    for seed in range(200):
        play_and_check(make_instance(int(rng.integers(2, 7)), seed), rng)


@pytest.mark.slow
def test_episode_invariants_sweep(make_instance):
    rng = np.random.default_rng(12)
    for seed in range(100_000):
        play_and_check(make_instance(int(rng.integers(2, 7)), seed), rng)
