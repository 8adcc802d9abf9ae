import json

import numpy as np
import pytest

from rtcomm.errors import LimitExceededError
from rtcomm.infostate import BeliefSpace, InfoState1, InfoState2, apply_1Q, initial_info_state
from rtcomm.model import bsc, hamming, make_instance
from rtcomm.solver import (
    Solver,
    SolverLimits,
    bayes_violations,
    enumerate_encoder_rules,
    enumerate_memory_rules,
    optimize_decoder,
    optimize_decoder_naive,
    solve,
    value_at,
)

from .conftest import ORACLE_CORPUS, corpus_instance, noiseless, random_state, uninformative


def _pi1_with_beliefs(k):
    space = BeliefSpace(2, 2, 2, 2)
    ids = [space.m.register([i / (k + 1), 1 - i / (k + 1)]) for i in range(k)]
    return InfoState1({(0, 0, b): 1.0 / k for b in ids}, space)


def test_encoder_rule_counts():
    rules = list(enumerate_encoder_rules(_pi1_with_beliefs(1), 2, 2))
    assert len(rules) == 4
    assert set(rules[0].values()) == {0}
    assert len(list(enumerate_encoder_rules(_pi1_with_beliefs(2), 2, 2))) == 16
    assert len(list(enumerate_encoder_rules(_pi1_with_beliefs(1), 2, 3))) == 9


def test_encoder_rule_order_is_x_major():
    rules = list(enumerate_encoder_rules(_pi1_with_beliefs(2), 2, 2))
    assert list(rules[1]) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert rules[1] == {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 1}


def test_encoder_rule_limit():
    with pytest.raises(LimitExceededError) as info:
        list(enumerate_encoder_rules(_pi1_with_beliefs(2), 2, 2, SolverLimits(max_rules=8)))
    assert info.value.count == 16 and info.value.limit == 8


def test_memory_rules_zero_fill_unreached_cells(space_c):
    rng = np.random.default_rng(0)
    pi3 = random_state(3, space_c, rng)
    assert len(list(enumerate_memory_rules(pi3, 2, 2))) == 16
    sparse = type(pi3)({k: p for k, p in pi3.atoms.items() if k[3] == 0}, space_c)
    rules = list(enumerate_memory_rules(sparse, 2, 2))
    assert len(rules) == 4
    assert all(r[1] == 0 and r[3] == 0 for r in rules)


def test_limits_must_be_positive():
    with pytest.raises(ValueError):
        SolverLimits(max_rules=0)


def test_decoder_examples(inst_c):
    pi1 = initial_info_state(inst_c)
    pi2 = apply_1Q(pi1, {(0, 0): 0, (1, 0): 1}, inst_c.forward_matrix)
    g, cost = optimize_decoder(pi2, hamming(2))
    assert g == (0, 0, 1, 0)
    assert cost == pytest.approx(0.1, abs=1e-15)


def test_decoder_guessing_and_dominant_action():
    space = BeliefSpace(2, 2, 2, 2)
    b = space.ym.register(np.full(4, 0.25))
    pi2 = InfoState2({(x, y, m, b): 0.125 for x in range(2) for y in range(2) for m in range(2)}, space)
    g, cost = optimize_decoder(pi2, hamming(2))
    assert g == (0, 0, 0, 0) and cost == pytest.approx(0.5)
    rho = np.array([[1.0, 0.0, 2.0], [3.0, 0.0, 0.5]])
    g, cost = optimize_decoder(pi2, rho)
    assert g == (1, 1, 1, 1) and cost == 0.0


def test_decoder_matches_naive_search(space_c):
    rng = np.random.default_rng(4)
    for _ in range(20):
        pi2 = random_state(2, space_c, rng)
        rho = rng.random((2, 2))
        assert optimize_decoder(pi2, rho)[1] == pytest.approx(optimize_decoder_naive(pi2, rho)[1], abs=1e-12)


# ----------------------------------------------------------- trivial instances

@pytest.mark.parametrize("horizon", [1, 2, 3])
def test_noiseless_is_free(horizon):
    res = solve(noiseless(horizon))
    assert res.j_star == 0.0


def test_noiseless_T1_sends_source():
    res = solve(noiseless(1))
    c = res.design.stages[0].encoder
    assert c[(0, 0)] != c[(1, 0)]


def test_uninformative_channel():
    assert solve(uninformative(1)).j_star == pytest.approx(0.5, abs=1e-12)
    assert solve(uninformative(2)).j_star == pytest.approx(1.0, abs=1e-12)


def test_single_memory_symbol():
    inst = corpus_instance("C", n_m=1)
    res = solve(inst)
    assert res.design.stages[0].memory == (0, 0)
    assert res.j_star == pytest.approx(0.2, abs=1e-12)


def test_instance_c_value():
    assert solve(corpus_instance("C")).j_star == pytest.approx(0.2, abs=1e-12)


# ----------------------------------------------------------- structure

def test_value_at_terminal_and_initial(inst_c):
    solver = Solver(inst_c)
    pi1 = initial_info_state(inst_c, solver.space)
    assert solver.value_at(pi1, inst_c.horizon + 1) == 0.0
    assert value_at(pi1, 1, inst_c) == solve(inst_c).j_star


def test_values_are_bounded(inst_z):
    solver = Solver(inst_z)
    solver.solve()
    cap = inst_z.horizon * inst_z.rho_max
    for value, _ in solver.cache.table.values():
        assert -1e-12 <= value <= cap + 1e-12


def test_v2_at_horizon_is_myopic(inst_c):
    rng = np.random.default_rng(9)
    solver = Solver(inst_c)
    pi2 = random_state(2, solver.space, rng)
    assert solver.value_at(pi2, 2) == pytest.approx(optimize_decoder(pi2, inst_c.distortion)[1], abs=1e-15)


@pytest.mark.parametrize("name", sorted(ORACLE_CORPUS))
def test_decoders_are_bayes(name):
    inst = corpus_instance(name)
    res = solve(inst)
    assert bayes_violations(res, inst) == []


def test_naive_decoder_search_agrees(inst_z):
    a = solve(inst_z)
    b = solve(inst_z, enumerate_decoders=True)
    assert a.j_star == pytest.approx(b.j_star, abs=1e-12)


def test_solve_is_deterministic(inst_z):
    def dump(res):
        d = res.to_dict(inst_z, include_states=True)
        d.pop("meta")
        return json.dumps(d)
    assert dump(solve(inst_z)) == dump(solve(inst_z))


def test_more_memory_never_hurts():
    assert solve(corpus_instance("C", n_m=4)).j_star <= solve(corpus_instance("C")).j_star + 1e-9


def test_node_limit_reports_statistics(inst_c):
    with pytest.raises(LimitExceededError) as info:
        solve(inst_c, SolverLimits(max_nodes=3))
    assert info.value.stats["cache_entries"] == 3


def test_record_states(inst_c):
    solver = Solver(inst_c, record_states=True)
    solver.solve()
    assert len(solver.visited) == len(solver.cache)
    assert {type(s).__name__ for _, s in solver.visited} == {"InfoState1", "InfoState2", "InfoState3"}


def test_ternary_source_binary_channel():
    t3 = np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    inst = make_instance([0.5, 0.3, 0.2], t3, bsc(0.05), bsc(0.1), hamming(3), 1)
    # with one binary use, at least the least likely symbol is lost
    assert solve(inst).j_star == pytest.approx(0.2 + 0.8 * 0.05, abs=1e-12)
