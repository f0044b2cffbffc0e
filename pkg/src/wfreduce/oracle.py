"""Explicit state-space exploration used as ground truth for small nets."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, List, Mapping, Optional, Set, Tuple

from .colors import (ColorError, ColorValue, ColoredWorkflowNet, Pair, render_value, value_key)
from .net import NodeId, WorkflowNet

DEFAULT_CAP = 100_000
DEFAULT_COLORED_CAP = 250_000

YES = "yes"
NO = "no"
CAP_EXCEEDED = "cap-exceeded"


class CapExceeded(Exception):
    def __init__(self, cap: int):
        super().__init__(f"state space exceeds the cap of {cap} states")
        self.cap = cap


@dataclass
class ReachabilityGraph:
    places: Tuple[NodeId, ...]
    states: List[Hashable]
    edges: List[Tuple[int, NodeId, Optional[Pair], int]]
    cap: int
    complete: bool
    colored: bool
    parent: Dict[int, Tuple[int, NodeId, Optional[Pair]]] = field(default_factory=dict)

    root = 0

    @property
    def cap_exceeded(self) -> bool:
        return not self.complete

    def marking(self, n: int) -> Dict[NodeId, object]:
        state = self.states[n]
        if self.colored:
            return {p: vs for p, vs in zip(self.places, state) if vs}
        return {p: k for p, k in zip(self.places, state) if k}

    def path_to(self, n: int) -> List[Tuple[NodeId, Optional[Pair]]]:
        """A firing sequence from the root to state `n` along BFS parents."""
        steps = []
        while n != self.root:
            src, t, b = self.parent[n]
            steps.append((t, b))
            n = src
        return steps[::-1]

    def fired(self) -> Set[NodeId]:
        return {t for _, t, _, _ in self.edges}

    def can_reach(self, targets: Set[int]) -> Set[int]:
        pred: Dict[int, List[int]] = {}
        for src, _, _, dst in self.edges:
            pred.setdefault(dst, []).append(src)
        seen = set(targets)
        todo = list(targets)
        while todo:
            n = todo.pop()
            for m in pred.get(n, ()):
                if m not in seen:
                    seen.add(m)
                    todo.append(m)
        return seen


def _is_colored_marking(m: Mapping) -> bool:
    return any(not isinstance(v, int) for v in m.values())


def explore(net: WorkflowNet, initial: Mapping, cap: int = DEFAULT_CAP) -> ReachabilityGraph:
    """Breadth-first closure of the firing rule from `initial`, stopping after `cap` states.

    A colored marking (place -> values) explores the colored net over all bindings;
    a plain marking (place -> count) explores the underlying uncolored net.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    places = tuple(sorted(net.places))
    pos = {p: n for n, p in enumerate(places)}
    if _is_colored_marking(initial):
        if not isinstance(net, ColoredWorkflowNet):
            raise ColorError("a colored marking needs a colored net")
        return _explore_colored(net, places, pos, initial, cap)
    return _explore_plain(net, places, pos, initial, cap)


def _explore_plain(net, places, pos, initial, cap) -> ReachabilityGraph:
    moves = [(t, [pos[p] for p in sorted(net.pre(t))], [pos[p] for p in sorted(net.post(t))])
             for t in sorted(net.transitions)]
    root = [0] * len(places)
    for p, k in initial.items():
        root[pos[p]] += k
    return _bfs(places, tuple(root), cap, False, lambda s: _plain_successors(s, moves))


def _plain_successors(state, moves):
    for t, ins, outs in moves:
        if all(state[n] for n in ins):
            nxt = list(state)
            for n in ins:
                nxt[n] -= 1
            for n in outs:
                nxt[n] += 1
            yield t, None, tuple(nxt)


def _explore_colored(net: ColoredWorkflowNet, places, pos, initial, cap) -> ReachabilityGraph:
    moves = []
    for t in sorted(net.transitions):
        lam = net.transformers[t]
        moves.append((t, [pos[p] for p in lam.inputs], [pos[p] for p in lam.outputs], lam.by_input()))
    root: List[List[ColorValue]] = [[] for _ in places]
    for p, vs in initial.items():
        root[pos[p]].extend(vs)
    start = tuple(tuple(sorted(vs, key=value_key)) for vs in root)
    return _bfs(places, start, cap, True, lambda s: _colored_successors(s, moves))


def _colored_successors(state, moves):
    for t, ins, outs, index in moves:
        if not all(state[n] for n in ins):
            continue
        rows = [()]
        for n in ins:
            rows = [r + (v,) for r in rows for v in _distinct(state[n])]
        for row in rows:
            for w in index.get(row, ()):
                nxt = list(state)
                for n, v in zip(ins, row):
                    vals = list(nxt[n])
                    vals.remove(v)
                    nxt[n] = tuple(vals)
                for n, v in zip(outs, w):
                    nxt[n] = tuple(sorted(nxt[n] + (v,), key=value_key))
                yield t, (row, w), tuple(nxt)


def _distinct(vals):
    out = []
    for v in vals:
        if not out or out[-1] != v:
            out.append(v)
    return out


def _bfs(places, root, cap, colored, successors) -> ReachabilityGraph:
    index = {root: 0}
    states = [root]
    edges = []
    parent = {}
    queue = deque([0])
    complete = True
    while queue:
        n = queue.popleft()
        for t, b, nxt in successors(states[n]):
            m = index.get(nxt)
            if m is None:
                if len(states) >= cap:
                    complete = False
                    continue
                m = len(states)
                index[nxt] = m
                states.append(nxt)
                parent[m] = (n, t, b)
                queue.append(m)
            edges.append((n, t, b, m))
    return ReachabilityGraph(places, states, edges, cap, complete, colored, parent)


@dataclass
class OracleVerdict:
    sound: str
    states: int = 0
    stuck_marking: Optional[Dict[NodeId, int]] = None
    stuck_path: Optional[List[NodeId]] = None
    dead_transitions: Tuple[NodeId, ...] = ()

    @property
    def is_sound(self) -> bool:
        return self.sound == YES

    def __bool__(self):
        return self.is_sound


def _final_states(g: ReachabilityGraph, exit_place: NodeId, k: int) -> Set[int]:
    if g.colored:
        return {n for n, s in enumerate(g.states)
                if all((len(vs) == k) if p == exit_place else not vs for p, vs in zip(g.places, s))}
    return {n for n, s in enumerate(g.states)
            if all((c == k) if p == exit_place else not c for p, c in zip(g.places, s))}


def _check_completion(g: ReachabilityGraph, exit_place: NodeId, k: int) -> Optional[int]:
    good = g.can_reach(_final_states(g, exit_place, k))
    bad = [n for n in range(len(g.states)) if n not in good]
    return bad[0] if bad else None


def oracle_is_sound(net: WorkflowNet, cap: int = DEFAULT_CAP) -> OracleVerdict:
    """Both soundness clauses on the uncolored reachability graph from {i: 1}."""
    g = explore(net, {net.entry: 1}, cap)
    if g.cap_exceeded:
        return OracleVerdict(CAP_EXCEEDED, len(g.states))
    stuck = _check_completion(g, net.exit, 1)
    dead = tuple(sorted(net.transitions - g.fired()))
    if stuck is None and not dead:
        return OracleVerdict(YES, len(g.states))
    verdict = OracleVerdict(NO, len(g.states), dead_transitions=dead)
    if stuck is not None:
        verdict.stuck_marking = g.marking(stuck)
        verdict.stuck_path = [t for t, _ in g.path_to(stuck)]
    return verdict


def oracle_is_k_sound(net: WorkflowNet, k: int, cap: int = DEFAULT_CAP) -> OracleVerdict:
    """o^k is reachable from every marking reachable from i^k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    g = explore(net, {net.entry: k}, cap)
    if g.cap_exceeded:
        return OracleVerdict(CAP_EXCEEDED, len(g.states))
    stuck = _check_completion(g, net.exit, k)
    if stuck is None:
        return OracleVerdict(YES, len(g.states))
    return OracleVerdict(NO, len(g.states), stuck_marking=g.marking(stuck),
                         stuck_path=[t for t, _ in g.path_to(stuck)])


Summary = FrozenSet[Tuple[ColorValue, ColorValue]]


def oracle_summary(net: ColoredWorkflowNet, cap: int = DEFAULT_COLORED_CAP) -> Summary:
    """Pairs (v, w) such that {o: w} is reachable from {i: v}."""
    pairs = set()
    for v in net.colorset(net.entry):
        g = explore(net, {net.entry: (v,)}, cap)
        if g.cap_exceeded:
            raise CapExceeded(cap)
        for n in _final_states(g, net.exit, 1):
            marking = g.marking(n)
            pairs.add((v, marking[net.exit][0]))
    return frozenset(pairs)


def summary_of_transformer(net: ColoredWorkflowNet, t: NodeId) -> Summary:
    lam = net.transformers[t]
    if lam.inputs != (net.entry,) or lam.outputs != (net.exit,):
        raise ColorError("the transition does not lead from the entry to the exit place")
    return frozenset((u[0], w[0]) for u, w in lam.pairs)


def render_summary(pairs) -> List[str]:
    return sorted(f"{render_value(v)} => {render_value(w)}" for v, w in pairs)


@dataclass
class EquivalenceReport:
    sound_a: str
    sound_b: str
    only_in_a: List[Tuple[ColorValue, ColorValue]]
    only_in_b: List[Tuple[ColorValue, ColorValue]]

    @property
    def equivalent(self) -> bool:
        return self.sound_a == self.sound_b and not self.only_in_a and not self.only_in_b

    def __bool__(self):
        return self.equivalent

    def describe(self) -> str:
        if self.equivalent:
            return "equivalent"
        lines = ["not equivalent"]
        if self.sound_a != self.sound_b:
            lines.append(f"  soundness differs: {self.sound_a} vs {self.sound_b}")
        for v, w in self.only_in_a:
            lines.append(f"  only in first: {render_value(v)} => {render_value(w)}")
        for v, w in self.only_in_b:
            lines.append(f"  only in second: {render_value(v)} => {render_value(w)}")
        return "\n".join(lines)


def check_equivalence(a: ColoredWorkflowNet, b: ColoredWorkflowNet, cap: int = DEFAULT_CAP,
                      colored_cap: int = DEFAULT_COLORED_CAP) -> EquivalenceReport:
    """Same soundness verdict and same summary; raises CapExceeded if either side is too large."""
    if a.colorset(a.entry) != b.colorset(b.entry) or a.colorset(a.exit) != b.colorset(b.exit):
        raise ColorError("nets have different entry or exit color sets")
    verdicts = []
    for net in (a, b):
        v = oracle_is_sound(net, cap)
        if v.sound == CAP_EXCEEDED:
            raise CapExceeded(cap)
        verdicts.append(v.sound)
    sa, sb = oracle_summary(a, colored_cap), oracle_summary(b, colored_cap)
    key = lambda vw: (value_key(vw[0]), value_key(vw[1]))
    return EquivalenceReport(verdicts[0], verdicts[1], sorted(sa - sb, key=key), sorted(sb - sa, key=key))
