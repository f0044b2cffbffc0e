"""The complete reduction procedure.

While the net is cyclic, pick a minimal fragment, shrink it to its
synchronizers with merges, iterations and d-shortcuts, then cut its cycles by
shortcutting backward transitions under a fixed order of its clusters.  The
acyclic remainder is finished with merges and d-shortcuts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

from .colors import ColoredWorkflowNet, Transformer
from .net import Cluster, NetError, NodeId, WorkflowNet, find_cycle, is_acyclic, is_free_choice_cluster, \
    is_free_choice_net, unconditionally_enables, validate
from .rules import (D_SHORTCUT, ITERATION, MERGE, SHORTCUT, DisconnectedNet, ReductionTrace,
                    apply, enumerate_applicable, shortcut_guard)

COMPLETELY_REDUCED = "completely-reduced"
UNSOUND = "unsound"
IRREDUCIBLE = "irreducible"
MALFORMED = "malformed"


class ReductionStalled(NetError):
    """The rule budget derived from the complexity bound ran out."""


@dataclass(frozen=True)
class Fragment:
    cluster: Cluster
    places: FrozenSet[NodeId]
    transitions: FrozenSet[NodeId]
    exits: FrozenSet[NodeId]

    @property
    def synchronizer(self) -> NodeId:
        return self.cluster.rep

    @property
    def nodes(self) -> FrozenSet[NodeId]:
        return self.places | self.transitions


@dataclass(frozen=True)
class MalformedFragment:
    cluster: Cluster
    transition: NodeId
    reason: str


@dataclass
class Verdict:
    kind: str
    trace: ReductionTrace = field(default_factory=ReductionTrace)
    net: Optional[ColoredWorkflowNet] = None
    summary: Optional[Transformer] = None
    reason: str = ""
    original_size: int = 0

    @property
    def counts(self) -> Dict[str, int]:
        return self.trace.counts()

    @property
    def reduced_by(self) -> float:
        if not self.net or not self.original_size:
            return 0.0
        return 100.0 * (1 - self.net.size / self.original_size)

    @property
    def label(self) -> str:
        return {COMPLETELY_REDUCED: "SOUND", UNSOUND: "UNSOUND", IRREDUCIBLE: "IRREDUCIBLE",
                MALFORMED: "MALFORMED"}[self.kind]


def _forward_marks(net: WorkflowNet, c: Cluster, fc_places: Set[NodeId]) -> Set[NodeId]:
    marked: Set[NodeId] = set()
    fired = set()
    todo = [c]
    while todo:
        x = todo.pop()
        for t in sorted(x.transitions):
            for p in net.post(t):
                if p in fc_places and p not in marked:
                    marked.add(p)
                    cl = net.cluster_of(p)
                    if cl.places <= marked and cl.rep not in fired:
                        fired.add(cl.rep)
                        todo.append(cl)
    return marked


def _fc_places(net: WorkflowNet) -> Set[NodeId]:
    return {p for c in net.clusters if is_free_choice_cluster(net, c) for p in c.places}


def find_potential_synchronizers(net: WorkflowNet) -> List[Cluster]:
    """Clusters whose places can all be re-marked by a forward sweep over free-choice places."""
    fc = _fc_places(net)
    out = []
    for c in net.clusters:
        if c.places and c.places <= fc and c.places <= _forward_marks(net, c, fc):
            out.append(c)
    return out


def compute_fragment(net: WorkflowNet, c: Cluster, synchronizers: Optional[Set[NodeId]] = None
                     ) -> Union[Fragment, MalformedFragment, None]:
    """Collect the fragment of `c` backwards; None when no cycle runs through `c`."""
    fc = _fc_places(net)
    if synchronizers is None:
        synchronizers = {s.rep for s in find_potential_synchronizers(net)}
    marked = _forward_marks(net, c, fc)
    places = set(c.places)
    trans: Set[NodeId] = set()
    changed = True
    while changed:
        changed = False
        for t in sorted(net.transitions - trans):
            if net.post(t) <= places and net.pre(t) <= marked:
                trans.add(t)
                places |= net.pre(t)
                changed = True
    if not trans or find_cycle(net, frozenset(places | trans)) is None:
        return None
    exits = set()
    for t in sorted(net.transitions):
        pre, post = net.pre(t), net.post(t)
        if not pre & places:
            continue
        if not pre <= places:
            return MalformedFragment(c, t, "starts partially inside and partially outside the fragment")
        if post <= places:
            continue
        if post & places:
            return MalformedFragment(c, t, "ends partially inside and partially outside the fragment")
        if net.cluster_of(t).rep not in synchronizers:
            return MalformedFragment(c, t, "leaves the fragment from a cluster without a synchronizer")
        exits.add(t)
    return Fragment(c, frozenset(places), frozenset(trans), frozenset(exits))


def select_minimal_fragment(fragments: Sequence[Fragment]) -> Fragment:
    if not fragments:
        raise ValueError("no fragments to choose from")
    minimal = [f for f in fragments if not any(g.nodes < f.nodes for g in fragments)]
    return min(minimal, key=lambda f: (len(f.nodes), f.synchronizer))


def _ordered(fragments: List[Fragment]) -> List[Fragment]:
    rest, out = list(fragments), []
    while rest:
        f = select_minimal_fragment(rest)
        out.append(f)
        rest.remove(f)
    return out


class _Stop(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Reducer:
    """Drives rule applications on one net and records them."""

    def __init__(self, net: ColoredWorkflowNet, trace: Optional[ReductionTrace] = None, budget: Optional[int] = None):
        self.net = net
        self.trace = trace if trace is not None else ReductionTrace()
        if budget is None:
            budget = rule_budget(net)
        self.budget = budget

    def step(self, kind: str, operands: Tuple[NodeId, ...]):
        if len(self.trace) >= self.budget:
            raise ReductionStalled(f"rule budget of {self.budget} applications exhausted")
        try:
            self.net, app = apply(self.net, kind, operands)
        except DisconnectedNet as exc:
            # a sound net never gets here: rule results of sound nets are sound workflow nets
            raise _Stop(f"{kind} on {', '.join(self.net.name(x) for x in operands)} "
                        f"would leave a non-workflow net ({exc.violations[0]})") from None
        self.trace.record(app, self.net)

    def exhaust(self, kind: str) -> int:
        n = 0
        while True:
            cands = enumerate_applicable(self.net, kind)
            if not cands:
                return n
            self.step(kind, cands[0])
            n += 1

    # -- phase 1 ---------------------------------------------------------
    def to_synchronizers(self, fragment: Fragment) -> None:
        region = set(fragment.places)
        while True:
            region &= self.net.places
            if not self._non_synchronizers(region):
                return
            self.exhaust(MERGE)
            self.exhaust(ITERATION)
            region &= self.net.places
            targets = {c.rep for c in self._non_synchronizers(region)}
            if not targets:
                return
            cands = [(t, c) for t, c in enumerate_applicable(self.net, D_SHORTCUT)
                     if c in targets and self.net.pre(t) <= region]
            if not cands:
                raise _Stop("no d-shortcut removes the remaining non-synchronizers of the fragment")
            self.step(D_SHORTCUT, cands[0])

    def _non_synchronizers(self, region: Set[NodeId]) -> List[Cluster]:
        syncs = {c.rep for c in find_potential_synchronizers(self.net)}
        return [c for c in self.net.clusters if c.places and c.places <= region and c.rep not in syncs]

    # -- phase 2 ---------------------------------------------------------
    def cut_cycles(self, fragment: Fragment) -> None:
        region = set(fragment.places)
        seen = set()
        # clusters are ordered by their least place id; places are never renumbered
        while True:
            region &= self.net.places
            if self._fragment_cycle(region) is None:
                return
            self.exhaust(MERGE)
            self.exhaust(ITERATION)
            region &= self.net.places
            if self._fragment_cycle(region) is None:
                return
            sig = _shape(self.net)
            if sig in seen:
                # the procedure is deterministic, so it would go round forever; sound nets always finish
                raise _Stop("phase two returned to an earlier net without removing the cycle")
            seen.add(sig)
            self.step(SHORTCUT, self._backward_choice(region))

    def _internal(self, region: Set[NodeId]) -> Set[NodeId]:
        net = self.net
        return {t for t in net.transitions if net.pre(t) <= region and net.post(t) <= region}

    def _fragment_cycle(self, region: Set[NodeId]):
        return find_cycle(self.net, frozenset(region | self._internal(region)))

    def _backward_choice(self, region: Set[NodeId]) -> Tuple[NodeId, NodeId]:
        net = self.net
        backward = []
        for t in self._internal(region):
            src = net.cluster_of(t).rep
            for p in net.post(t):
                c = net.cluster_of(p)
                if c.rep < src and unconditionally_enables(net, t, c):
                    backward.append((c.rep, t))
        for rep, t in sorted(set(backward)):
            if not shortcut_guard(net, t, net.cluster_of(rep)):
                return t, rep
        raise _Stop("the fragment is cyclic but no backward transition can be shortcut")

    # -- acyclic completion ---------------------------------------------
    def finish(self) -> None:
        while not completely_reduced(self.net):
            merged = self.exhaust(MERGE)
            cands = enumerate_applicable(self.net, D_SHORTCUT)
            if cands:
                self.step(D_SHORTCUT, cands[0])
            elif not merged:
                raise _Stop("neither merge nor d-shortcut applies to the acyclic net")

    # -- cyclic part -----------------------------------------------------
    def break_cycles(self) -> None:
        while not is_acyclic(self.net):
            syncs = find_potential_synchronizers(self.net)
            if not syncs:
                raise _Stop("cyclic net without synchronizer")
            reps = {c.rep for c in syncs}
            fragments, malformed = [], []
            seen = set()
            for c in syncs:
                f = compute_fragment(self.net, c, reps)
                if isinstance(f, MalformedFragment):
                    malformed.append(f)
                elif f is not None and f.nodes not in seen:
                    seen.add(f.nodes)
                    fragments.append(f)
            if not fragments:
                if malformed:
                    m = malformed[0]
                    raise _Stop(f"malformed fragment at {self.net.name(m.cluster.rep)}: "
                                f"{self.net.name(m.transition)} {m.reason}")
                raise _Stop("no fragment could be computed for the synchronizers")
            self._reduce_some(_ordered(fragments))

    def _reduce_some(self, candidates: List[Fragment]) -> None:
        start_net, start_len = self.net, len(self.trace)
        failures = []
        for n, f in enumerate(candidates):
            try:
                self.to_synchronizers(f)
                self.cut_cycles(f)
            except _Stop as exc:
                failures.append(f"{self.net.name(f.synchronizer)}: {exc.reason}")
                self.net = start_net
                del self.trace.steps[start_len:]
                del self.trace.sizes[start_len:]
                continue
            if len(self.trace) == start_len:
                failures.append(f"{self.net.name(f.synchronizer)}: no rule applied")
                continue
            name = start_net.name(f.synchronizer)
            note = f"fragment of {name} ({len(f.nodes)} nodes) reduced"
            if n:
                note += f" after {n} failed candidate(s): " + "; ".join(failures)
            self.trace.notes.append(note)
            return
        raise _Stop("no fragment could be reduced: " + "; ".join(failures))


def _shape(net: ColoredWorkflowNet):
    """The net up to transition ids: places plus the multiset of (preset, postset, transformer)."""
    return net.places, frozenset(Counter((net.pre(t), net.post(t), net.transformers[t])
                                         for t in net.transitions).items())


def completely_reduced(net: WorkflowNet) -> bool:
    if net.places != {net.entry, net.exit} or len(net.transitions) != 1:
        return False
    (t,) = net.transitions
    return net.pre(t) == {net.entry} and net.post(t) == {net.exit}


def rule_budget(net: WorkflowNet) -> int:
    c, t = len(net.clusters), max(1, len(net.transitions))
    return (c ** 4) * t + c ** 4 + (c ** 2) * t + 4 * c * t + 64


def _stopped(r: Reducer, fc: bool, reason: str, original: ColoredWorkflowNet) -> Verdict:
    kind = UNSOUND if fc else IRREDUCIBLE
    return Verdict(kind, r.trace, r.net, reason=reason, original_size=original.size)


def reduce_fragment_to_synchronizers(net: ColoredWorkflowNet, fragment: Fragment,
                                     trace: Optional[ReductionTrace] = None) -> ColoredWorkflowNet:
    """Phase one on a single fragment; raises GuardFailed-style NetError when stuck."""
    r = Reducer(net, trace)
    try:
        r.to_synchronizers(fragment)
    except _Stop as exc:
        raise NetError(exc.reason) from None
    return r.net


def reduce_synchronizer_only_fragment(net: ColoredWorkflowNet, fragment: Fragment,
                                      trace: Optional[ReductionTrace] = None) -> ColoredWorkflowNet:
    r = Reducer(net, trace)
    try:
        r.cut_cycles(fragment)
    except _Stop as exc:
        raise NetError(exc.reason) from None
    return r.net


def reduce_acyclic(net: ColoredWorkflowNet, trace: Optional[ReductionTrace] = None,
                   free_choice: Optional[bool] = None) -> Verdict:
    if not is_acyclic(net):
        raise NetError("reduce_acyclic needs an acyclic net")
    fc = is_free_choice_net(net) if free_choice is None else free_choice
    r = Reducer(net, trace)
    try:
        r.finish()
    except _Stop as exc:
        return _stopped(r, fc, exc.reason, net)
    (t,) = r.net.transitions
    return Verdict(COMPLETELY_REDUCED, r.trace, r.net, summary=r.net.transformers[t], original_size=net.size)


def reduce(net: ColoredWorkflowNet, budget: Optional[int] = None) -> Verdict:
    """Reduce `net` as far as the rules allow and classify the outcome."""
    problems = validate(net)
    if problems:
        return Verdict(MALFORMED, reason="; ".join(str(v) for v in problems), original_size=net.size)
    fc = is_free_choice_net(net)
    r = Reducer(net, budget=budget)
    try:
        r.break_cycles()
        r.finish()
    except _Stop as exc:
        return _stopped(r, fc, exc.reason, net)
    except ReductionStalled as exc:
        if budget is not None:
            raise
        # sound nets finish within the bound, so running past it is a verdict, not a crash
        return _stopped(r, fc, f"{exc}; sound nets reduce within this bound", net)
    (t,) = r.net.transitions
    return Verdict(COMPLETELY_REDUCED, r.trace, r.net, summary=r.net.transformers[t], original_size=net.size)
