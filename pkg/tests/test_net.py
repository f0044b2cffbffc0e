import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfreduce.generate import block_net, mutate
from wfreduce.net import (NetError, NotEnabled, build_net, compute_clusters, find_cycle, fire, is_acyclic,
                          is_free_choice_net, is_free_choice_pairwise, unconditionally_enables, validate)


def seq():
    return build_net(["i", "o"], {"t": (["i"], ["o"])})


def test_single_transition_is_valid():
    assert validate(seq()) == []


def test_arc_into_entry_is_reported():
    n = build_net(["i", "p", "o"], {"a": (["i"], ["p"]), "b": (["p"], ["i", "o"])})
    clauses = {v.clause for v in validate(n)}
    assert "i has no incoming arcs" in clauses


def test_arc_out_of_exit_is_reported():
    n = build_net(["i", "p", "o"], {"a": (["i"], ["o"]), "b": (["o"], ["p"]), "c": (["p"], ["o"])})
    assert any(v.clause == "o has no outgoing arcs" for v in validate(n))


def test_unreachable_node_breaks_connectivity():
    n = build_net(["i", "o", "lost"], {"a": (["i"], ["o"])})
    bad = [v for v in validate(n) if "strongly connected" in v.clause]
    assert [v.subject for v in bad] == ["lost"]


def test_unknown_place_in_builder():
    with pytest.raises(NetError, match="unknown node 'q'"):
        build_net(["i", "o"], {"a": (["i"], ["q"])})


def test_duplicate_name_in_builder():
    with pytest.raises(NetError, match="duplicate"):
        build_net(["i", "o", "i"], {})


def test_ids_places_first():
    n = build_net(["i", "p", "o"], {"a": (["i"], ["p"]), "b": (["p"], ["o"])})
    assert sorted(n.places) == [0, 1, 2]
    assert sorted(n.transitions) == [3, 4]
    assert n.next_id == 5


def test_clusters_of_shared_input():
    # p and q both feed b, so they and a, b form one cluster
    n = build_net(["i", "p", "q", "o"], {"a": (["i"], ["p", "q"]), "b": (["p", "q"], ["o"])})
    reps = [sorted(n.name(x) for x in c.nodes) for c in n.clusters]
    assert reps == [["a", "i"], ["b", "p", "q"], ["o"]]
    assert is_free_choice_net(n)


def test_non_free_choice_cluster():
    n = build_net(["i", "p", "q", "o"], {"a": (["i"], ["p", "q"]), "b": (["p", "q"], ["o"]),
                                         "c": (["q"], ["o"])})
    assert not is_free_choice_net(n)
    assert not is_free_choice_pairwise(n)


def test_fire_moves_tokens():
    n = build_net(["i", "p", "q", "o"], {"a": (["i"], ["p", "q"]), "b": (["p", "q"], ["o"])})
    m = fire(n, {n.id("i"): 1}, n.id("a"))
    assert m == {n.id("p"): 1, n.id("q"): 1}
    assert fire(n, m, n.id("b")) == {n.id("o"): 1}


def test_fire_names_the_empty_place():
    n = build_net(["i", "p", "q", "o"], {"a": (["i"], ["p", "q"]), "b": (["p", "q"], ["o"])})
    with pytest.raises(NotEnabled) as err:
        fire(n, {n.id("p"): 1}, n.id("b"))
    assert err.value.place == "q"
    assert err.value.transition == "b"


def test_cycle_detection():
    n = build_net(["i", "p", "o"], {"a": (["i"], ["p"]), "back": (["p"], ["p"]), "b": (["p"], ["o"])})
    cyc = find_cycle(n)
    assert cyc is not None and {n.name(x) for x in cyc} == {"p", "back"}
    assert is_acyclic(seq())


def test_unconditional_enabling():
    n = build_net(["i", "p", "q", "o"], {"a": (["i"], ["p", "q"]), "b": (["p", "q"], ["o"])})
    c = n.cluster_of(n.id("b"))
    assert unconditionally_enables(n, n.id("a"), c)
    assert not unconditionally_enables(n, n.id("b"), c)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10))
def test_block_nets_are_free_choice_workflow_nets(seed, budget):
    n = block_net(random.Random(seed), budget)
    assert validate(n) == []
    assert is_free_choice_net(n)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10))
def test_cluster_and_pairwise_free_choice_agree(seed, budget):
    rng = random.Random(seed)
    n = mutate(block_net(rng, budget), rng) or block_net(rng, budget)
    assert is_free_choice_net(n) == is_free_choice_pairwise(n)
    # clusters partition the nodes
    seen = [x for c in compute_clusters(n) for x in c.nodes]
    assert sorted(seen) == sorted(n.places | n.transitions)
