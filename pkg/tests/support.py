"""Shared helpers for the test suite."""

import networkx as nx

from wfreduce.net import WorkflowNet


def as_graph(net: WorkflowNet, nodes=None) -> nx.DiGraph:
    nodes = set(net.places | net.transitions) if nodes is None else set(nodes)
    g = nx.DiGraph()
    for x in nodes:
        if x == net.entry:
            kind = "i"
        elif x == net.exit:
            kind = "o"
        else:
            kind = "p" if x in net.places else "t"
        g.add_node(x, kind=kind)
    g.add_edges_from((a, b) for a, b in net.arcs if a in nodes and b in nodes)
    return g


def isomorphic(a: WorkflowNet, b: WorkflowNet, a_nodes=None, b_nodes=None) -> bool:
    """Graph isomorphism that keeps places, transitions, i and o apart."""
    return nx.is_isomorphic(as_graph(a, a_nodes), as_graph(b, b_nodes),
                            node_match=lambda x, y: x["kind"] == y["kind"])
