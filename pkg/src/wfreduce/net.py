"""Uncolored workflow-net structure: validation, clusters, free-choice tests
and the token game.

Nodes are small integers.  Places are numbered before transitions when a net
is built from a document, and rule applications draw fresh transition ids from
a monotone counter stored on the net, so ids never collide within one trace.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

NodeId = int
Arc = Tuple[NodeId, NodeId]
Marking = Mapping[NodeId, int]


class NetError(Exception):
    """Raised when a net cannot be built or an operation's precondition fails."""


class NotEnabled(NetError):
    def __init__(self, transition: str, place: str):
        super().__init__(f"transition {transition!r} is not enabled: input place {place!r} is empty")
        self.transition = transition
        self.place = place


@dataclass(frozen=True)
class Violation:
    clause: str
    subject: str

    def __str__(self):
        return f"{self.subject}: {self.clause}"


@dataclass(frozen=True)
class Cluster:
    nodes: FrozenSet[NodeId]
    places: FrozenSet[NodeId]
    transitions: FrozenSet[NodeId]

    @property
    def rep(self) -> NodeId:
        return min(self.nodes)

    def __contains__(self, x):
        return x in self.nodes

    def __lt__(self, other: "Cluster"):
        return self.rep < other.rep


@dataclass(frozen=True)
class WorkflowNet:
    places: FrozenSet[NodeId]
    transitions: FrozenSet[NodeId]
    arcs: FrozenSet[Arc]
    entry: NodeId
    exit: NodeId
    names: Mapping[NodeId, str] = field(compare=True)
    next_id: int = field(default=-1, compare=False)
    title: str = field(default="net", compare=False)

    def __post_init__(self):
        if self.next_id < 0:
            nodes = self.places | self.transitions
            object.__setattr__(self, "next_id", max(nodes) + 1 if nodes else 0)

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def preset(self) -> Dict[NodeId, FrozenSet[NodeId]]:
        pre: Dict[NodeId, set] = {x: set() for x in self.places | self.transitions}
        for src, dst in self.arcs:
            if dst in pre:
                pre[dst].add(src)
        return {x: frozenset(s) for x, s in pre.items()}

    @cached_property
    def postset(self) -> Dict[NodeId, FrozenSet[NodeId]]:
        post: Dict[NodeId, set] = {x: set() for x in self.places | self.transitions}
        for src, dst in self.arcs:
            if src in post:
                post[src].add(dst)
        return {x: frozenset(s) for x, s in post.items()}

    @cached_property
    def ids(self) -> Dict[str, NodeId]:
        return {name: x for x, name in self.names.items()}

    def id(self, name: str) -> NodeId:
        try:
            return self.ids[name]
        except KeyError:
            raise NetError(f"no node named {name!r}") from None

    def name(self, x: NodeId) -> str:
        return self.names.get(x, f"#{x}")

    def pre(self, x: NodeId) -> FrozenSet[NodeId]:
        return self.preset[x]

    def post(self, x: NodeId) -> FrozenSet[NodeId]:
        return self.postset[x]

    def is_place(self, x: NodeId) -> bool:
        return x in self.places

    @property
    def size(self) -> int:
        return len(self.places) + len(self.transitions)

    @cached_property
    def clusters(self) -> List[Cluster]:
        return compute_clusters(self)

    @cached_property
    def cluster_index(self) -> Dict[NodeId, Cluster]:
        return {x: c for c in self.clusters for x in c.nodes}

    def cluster_of(self, x: NodeId) -> Cluster:
        return self.cluster_index[x]


def build_net(places: Iterable[str], transitions: Mapping[str, Tuple[Iterable[str], Iterable[str]]],
              entry: str = "i", exit: str = "o", title: str = "net") -> WorkflowNet:
    """Build a net from names; transitions map to (input places, output places).

    Places get ids in the given order, then transitions.
    """
    names: Dict[NodeId, str] = {}
    ids: Dict[str, NodeId] = {}
    for name in list(places) + list(transitions):
        if name in ids:
            raise NetError(f"duplicate node name {name!r}")
        ids[name] = len(ids)
        names[ids[name]] = name
    arcs = set()
    for t, (ins, outs) in transitions.items():
        for p in ins:
            arcs.add((_lookup(ids, p), ids[t]))
        for p in outs:
            arcs.add((ids[t], _lookup(ids, p)))
    place_ids = frozenset(ids[p] for p in places)
    return WorkflowNet(place_ids, frozenset(ids[t] for t in transitions), frozenset(arcs),
                       _lookup(ids, entry), _lookup(ids, exit), names, title=title)


def _lookup(ids, name):
    if name not in ids:
        raise NetError(f"unknown node {name!r}")
    return ids[name]


def validate(net: WorkflowNet) -> List[Violation]:
    """Return the structural violations of `net`; an empty list means it is a workflow net."""
    out: List[Violation] = []
    nm = net.name
    if net.places & net.transitions:
        for x in sorted(net.places & net.transitions):
            out.append(Violation("places and transitions are disjoint", nm(x)))
    nodes = net.places | net.transitions
    for src, dst in sorted(net.arcs):
        if src not in nodes or dst not in nodes:
            out.append(Violation("arc endpoints are nodes of the net", f"{nm(src)}->{nm(dst)}"))
        elif (src in net.places) == (dst in net.places):
            out.append(Violation("arcs connect a place and a transition", f"{nm(src)}->{nm(dst)}"))
    if net.entry not in net.places:
        out.append(Violation("entry is a place", nm(net.entry)))
    if net.exit not in net.places:
        out.append(Violation("exit is a place", nm(net.exit)))
    if out:
        return out
    if net.entry == net.exit:
        out.append(Violation("entry and exit are distinct", nm(net.entry)))
    for src in sorted(net.pre(net.entry)):
        out.append(Violation("i has no incoming arcs", f"{nm(src)}->{nm(net.entry)}"))
    for dst in sorted(net.post(net.exit)):
        out.append(Violation("o has no outgoing arcs", f"{nm(net.exit)}->{nm(dst)}"))
    for x in _not_strongly_connected(net):
        out.append(Violation("graph with the arc (o, i) added is strongly connected", nm(x)))
    return out


def _not_strongly_connected(net: WorkflowNet) -> List[NodeId]:
    # the closing arc o -> i is added transiently, never stored
    succ = defaultdict(list)
    pred = defaultdict(list)
    for src, dst in net.arcs:
        succ[src].append(dst)
        pred[dst].append(src)
    succ[net.exit].append(net.entry)
    pred[net.entry].append(net.exit)
    nodes = net.places | net.transitions
    fwd = _reach(net.entry, succ)
    bwd = _reach(net.entry, pred)
    return sorted(x for x in nodes if x not in fwd or x not in bwd)


def _reach(start, succ) -> set:
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in succ[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def compute_clusters(net: WorkflowNet) -> List[Cluster]:
    """Partition P and T into clusters, sorted by representative."""
    # union-find over the relation "p ~ t for every arc p -> t"
    parent = {x: x for x in net.places | net.transitions}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for src, dst in net.arcs:
        if src in net.places:
            a, b = find(src), find(dst)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: Dict[NodeId, set] = defaultdict(set)
    for x in parent:
        groups[find(x)].add(x)
    clusters = []
    for nodes in groups.values():
        nodes = frozenset(nodes)
        clusters.append(Cluster(nodes, nodes & net.places, nodes & net.transitions))
    return sorted(clusters)


def is_free_choice_cluster(net: WorkflowNet, c: Cluster) -> bool:
    return all((p, t) in net.arcs for p in c.places for t in c.transitions)


def is_free_choice_net(net: WorkflowNet) -> bool:
    return all(is_free_choice_cluster(net, c) for c in net.clusters)


def is_free_choice_pairwise(net: WorkflowNet) -> bool:
    """The postset formulation: any two places share all or none of their output transitions."""
    posts = [net.post(p) for p in sorted(net.places)]
    for n, a in enumerate(posts):
        for b in posts[n + 1:]:
            if a & b and a != b:
                return False
    return True


def is_free_choice_node(net: WorkflowNet, x: NodeId) -> bool:
    return is_free_choice_cluster(net, net.cluster_of(x))


def find_cycle(net: WorkflowNet, nodes: Optional[FrozenSet[NodeId]] = None) -> Optional[List[NodeId]]:
    """Return one directed cycle of the graph (P u T, F) restricted to `nodes`, or None."""
    if nodes is None:
        nodes = net.places | net.transitions
    WHITE, GREY, BLACK = 0, 1, 2
    color = {x: WHITE for x in nodes}
    for root in sorted(nodes):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(net.post(root) & nodes)))]
        path = [root]
        color[root] = GREY
        while stack:
            x, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[x] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GREY:
                return path[path.index(nxt):]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, iter(sorted(net.post(nxt) & nodes))))
    return None


def is_acyclic(net: WorkflowNet) -> bool:
    return find_cycle(net) is None


def unconditionally_enables(net: WorkflowNet, t: NodeId, c: Cluster) -> bool:
    return bool(c.places) and c.places <= net.post(t)


def enabled(net: WorkflowNet, m: Marking, t: NodeId) -> bool:
    return all(m.get(p, 0) >= 1 for p in net.pre(t))


def fire(net: WorkflowNet, m: Marking, t: NodeId) -> Dict[NodeId, int]:
    """Fire `t` at `m` and return the successor marking (zero entries dropped)."""
    for p in sorted(net.pre(t)):
        if m.get(p, 0) < 1:
            raise NotEnabled(net.name(t), net.name(p))
    out = {p: n for p, n in m.items() if n}
    for p in net.pre(t):
        out[p] -= 1
        if not out[p]:
            del out[p]
    for p in net.post(t):
        out[p] = out.get(p, 0) + 1
    return out


def initial_marking(net: WorkflowNet, k: int = 1) -> Dict[NodeId, int]:
    return {net.entry: k}


def final_marking(net: WorkflowNet, k: int = 1) -> Dict[NodeId, int]:
    return {net.exit: k}
