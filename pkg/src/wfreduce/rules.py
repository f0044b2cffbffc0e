"""The merge, iteration, shortcut and d-shortcut rules.

Each rule checks its guard on the current net and returns a new net together
with a `RuleApplication` record.  Nets are never mutated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .colors import (ColoredWorkflowNet, SignatureMismatch, Transformer, compose_transformers,
                     star_transformer, union_transformers)
from .net import Cluster, NetError, NodeId, Violation, is_free_choice_cluster, unconditionally_enables, validate

MERGE = "merge"
ITERATION = "iteration"
SHORTCUT = "shortcut"
D_SHORTCUT = "d-shortcut"
KINDS = (MERGE, ITERATION, SHORTCUT, D_SHORTCUT)


class GuardFailed(NetError):
    def __init__(self, kind: str, reason: str):
        super().__init__(f"{kind} not applicable: {reason}")
        self.kind = kind
        self.reason = reason


class DisconnectedNet(NetError):
    """A rule produced a net that is no longer a workflow net."""

    def __init__(self, violations: List[Violation]):
        super().__init__("rule application broke the workflow-net structure: "
                         + "; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class RuleApplication:
    kind: str
    operands: Tuple[NodeId, ...]
    created: Tuple[NodeId, ...] = ()
    removed: Tuple[NodeId, ...] = ()
    labels: Tuple[str, ...] = field(default=(), compare=False)

    def describe(self) -> str:
        return f"{self.kind}({', '.join(self.labels)})"


@dataclass
class ReductionTrace:
    steps: List[RuleApplication] = field(default_factory=list)
    sizes: List[Tuple[int, int, int]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def record(self, app: RuleApplication, net: ColoredWorkflowNet):
        self.steps.append(app)
        self.sizes.append((len(net.places), len(net.transitions), len(net.clusters)))

    def counts(self) -> Dict[str, int]:
        out = {k: 0 for k in KINDS}
        for s in self.steps:
            out[s.kind] += 1
        return out

    def __len__(self):
        return len(self.steps)


ClusterRef = Union[Cluster, NodeId]


def _cluster(net: ColoredWorkflowNet, c: ClusterRef, kind: str) -> Cluster:
    if isinstance(c, Cluster):
        if c not in net.clusters:
            raise GuardFailed(kind, "the given node set is not a cluster of the net")
        return c
    if c not in net.cluster_index:
        raise GuardFailed(kind, f"node {c} is not in the net")
    return net.cluster_of(c)


def _fresh_name(net: ColoredWorkflowNet, prefix: str, nid: int, taken) -> str:
    name = f"{prefix}{nid}"
    while name in net.ids or name in taken:
        name += "'"
    return name


def _rebuild(net: ColoredWorkflowNet, *, drop: Sequence[NodeId] = (),
             add: Sequence[Tuple[NodeId, str, Transformer]] = (),
             retype: Optional[Dict[NodeId, Transformer]] = None) -> ColoredWorkflowNet:
    gone = set(drop)
    places = net.places - gone
    transitions = (net.transitions - gone) | {nid for nid, _, _ in add}
    arcs = {(a, b) for a, b in net.arcs if a not in gone and b not in gone}
    names = {x: n for x, n in net.names.items() if x not in gone}
    transformers = {t: lam for t, lam in net.transformers.items() if t not in gone}
    for nid, name, lam in add:
        names[nid] = name
        transformers[nid] = lam
        arcs.update((p, nid) for p in lam.inputs)
        arcs.update((nid, p) for p in lam.outputs)
    if retype:
        transformers.update(retype)
    colors = {p: cs for p, cs in net.colors.items() if p not in gone}
    next_id = max([net.next_id] + [nid + 1 for nid, _, _ in add])
    return dataclasses.replace(net, places=frozenset(places), transitions=frozenset(transitions),
                               arcs=frozenset(arcs), names=names, next_id=next_id,
                               colors=colors, transformers=transformers)


def merge_guard(net: ColoredWorkflowNet, t1: NodeId, t2: NodeId) -> Optional[str]:
    if t1 not in net.transitions or t2 not in net.transitions:
        return "operands must be transitions"
    if t1 == t2:
        return "operands must be distinct"
    if net.pre(t1) != net.pre(t2):
        return f"presets of {net.name(t1)} and {net.name(t2)} differ"
    if net.post(t1) != net.post(t2):
        return f"postsets of {net.name(t1)} and {net.name(t2)} differ"
    return None


def apply_merge(net: ColoredWorkflowNet, t1: NodeId, t2: NodeId) -> Tuple[ColoredWorkflowNet, RuleApplication]:
    reason = merge_guard(net, t1, t2)
    if reason:
        raise GuardFailed(MERGE, reason)
    t1, t2 = sorted((t1, t2))
    nid = net.next_id
    lam = union_transformers(net.transformers[t1], net.transformers[t2])
    name = _fresh_name(net, "m", nid, ())
    out = _rebuild(net, drop=(t1, t2), add=[(nid, name, lam)])
    return out, RuleApplication(MERGE, (t1, t2), (nid,), (t1, t2),
                                (net.name(t1), net.name(t2), name))


def iteration_guard(net: ColoredWorkflowNet, t: NodeId) -> Optional[str]:
    if t not in net.transitions:
        return "operand must be a transition"
    c = net.cluster_of(t)
    if not is_free_choice_cluster(net, c):
        return f"cluster of {net.name(t)} is not free choice"
    if net.pre(t) != net.post(t):
        return f"{net.name(t)} is not a self-loop (postset differs from preset)"
    if len(c.transitions) < 2:
        return f"{net.name(t)} is the only transition of its cluster"
    return None


def apply_iteration(net: ColoredWorkflowNet, t: NodeId) -> Tuple[ColoredWorkflowNet, RuleApplication]:
    reason = iteration_guard(net, t)
    if reason:
        raise GuardFailed(ITERATION, reason)
    loop = star_transformer(net.transformers[t])
    others = sorted(net.cluster_of(t).transitions - {t})
    retype = {u: compose_transformers(loop, net.transformers[u]) for u in others}
    out = _rebuild(net, drop=(t,), retype=retype)
    return out, RuleApplication(ITERATION, (t,), (), (t,), (net.name(t),))


def shortcut_guard(net: ColoredWorkflowNet, t: NodeId, c: Cluster, single: bool = False) -> Optional[str]:
    if t not in net.transitions:
        return "operand must be a transition"
    if net.exit in c.nodes:
        return "target cluster is the exit cluster"
    if t in c.nodes:
        return "target cluster is the cluster of the shortcut transition"
    if not is_free_choice_cluster(net, c):
        return "target cluster is not free choice"
    if not unconditionally_enables(net, t, c):
        return f"{net.name(t)} does not unconditionally enable the cluster"
    if single and len(c.transitions) != 1:
        return f"target cluster has {len(c.transitions)} transitions, d-shortcut needs exactly one"
    passed = net.post(t) - c.places
    for u in sorted(c.transitions):
        if passed & net.post(u):
            # ordinary arcs cannot carry the two tokens the combined step would produce
            return f"{net.name(u)} produces on a place that {net.name(t)} also marks"
    return None


def apply_shortcut(net: ColoredWorkflowNet, t: NodeId, c: ClusterRef,
                   _kind: str = SHORTCUT) -> Tuple[ColoredWorkflowNet, RuleApplication]:
    cluster = _cluster(net, c, _kind)
    reason = shortcut_guard(net, t, cluster, single=_kind == D_SHORTCUT)
    if reason:
        raise GuardFailed(_kind, reason)
    lam_t = net.transformers[t]
    added = []
    taken = set()
    nid = net.next_id
    for u in sorted(cluster.transitions):
        try:
            lam = compose_transformers(lam_t, net.transformers[u])
        except SignatureMismatch as exc:
            raise GuardFailed(_kind, str(exc)) from None
        name = _fresh_name(net, "s", nid, taken)
        taken.add(name)
        added.append((nid, name, lam))
        nid += 1
    out = _rebuild(net, drop=(t,), add=added)
    removed = [t]
    if all(not out.pre(p) for p in cluster.places):
        out = _rebuild(out, drop=sorted(cluster.nodes))
        removed.extend(sorted(cluster.nodes))
        problems = validate(out)
        if problems:
            raise DisconnectedNet(problems)
    labels = (net.name(t), net.name(cluster.rep)) + tuple(name for _, name, _ in added)
    return out, RuleApplication(_kind, (t, cluster.rep), tuple(a[0] for a in added), tuple(removed), labels)


def apply_d_shortcut(net: ColoredWorkflowNet, t: NodeId, c: ClusterRef) -> Tuple[ColoredWorkflowNet, RuleApplication]:
    return apply_shortcut(net, t, c, _kind=D_SHORTCUT)


def apply(net: ColoredWorkflowNet, kind: str, operands: Sequence[NodeId]) -> Tuple[ColoredWorkflowNet, RuleApplication]:
    if kind == MERGE:
        return apply_merge(net, *operands)
    if kind == ITERATION:
        return apply_iteration(net, *operands)
    if kind == SHORTCUT:
        return apply_shortcut(net, *operands)
    if kind == D_SHORTCUT:
        return apply_d_shortcut(net, *operands)
    raise ValueError(f"unknown rule kind {kind!r}")


def enumerate_applicable(net: ColoredWorkflowNet, kind: str) -> List[Tuple[NodeId, ...]]:
    """Operand tuples whose guard holds, in ascending order."""
    if kind == MERGE:
        groups: Dict[tuple, List[NodeId]] = {}
        for t in sorted(net.transitions):
            groups.setdefault((net.pre(t), net.post(t)), []).append(t)
        return sorted((a, b) for ts in groups.values() for n, a in enumerate(ts) for b in ts[n + 1:])
    if kind == ITERATION:
        return [(t,) for t in sorted(net.transitions) if net.pre(t) == net.post(t) and not iteration_guard(net, t)]
    if kind in (SHORTCUT, D_SHORTCUT):
        out = []
        for t in sorted(net.transitions):
            seen = set()
            for p in net.post(t):
                c = net.cluster_of(p)
                if c.rep in seen:
                    continue
                seen.add(c.rep)
                if not shortcut_guard(net, t, c, single=kind == D_SHORTCUT):
                    out.append((t, c.rep))
        return sorted(out)
    raise ValueError(f"unknown rule kind {kind!r}")


def replay(net: ColoredWorkflowNet, steps: Sequence[RuleApplication]) -> ColoredWorkflowNet:
    for s in steps:
        net, app = apply(net, s.kind, s.operands)
        if app.created != s.created or app.removed != s.removed:
            raise NetError(f"replay diverged at {s.describe()}")
    return net
