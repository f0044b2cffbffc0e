"""Finite color sets, colored markings and the transformer relation algebra.

A transformer is stored extensionally: a set of (input tuple, output tuple)
pairs whose components line up with the transformer's input and output
places, both kept in ascending place-id order.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Sequence, Tuple, Union

from .net import NetError, NodeId, WorkflowNet

Atom = Union[str, int]
ColorValue = Union[Atom, Tuple[Atom, ...]]
ColorSet = Tuple[ColorValue, ...]
Row = Tuple[ColorValue, ...]
Pair = Tuple[Row, Row]

UNIT = "•"
UNIT_SET: ColorSet = (UNIT,)

STRICT = "strict"
PERMISSIVE = "permissive"


class ColorError(NetError):
    pass


class SignatureMismatch(ColorError):
    pass


class NoMatchingBinding(ColorError):
    pass


def value_key(v: ColorValue):
    if isinstance(v, tuple):
        return (2, tuple(value_key(a) for a in v))
    if isinstance(v, bool):
        raise ColorError(f"boolean color values are not supported: {v!r}")
    if isinstance(v, int):
        return (0, v, "")
    return (1, 0, v)


def row_key(row: Row):
    return tuple(value_key(v) for v in row)


def render_value(v: ColorValue) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(str(a) for a in v) + ")"
    return str(v)


def render_row(row: Row) -> str:
    return " ".join(render_value(v) for v in row)


def make_colorset(values: Iterable[ColorValue]) -> ColorSet:
    """Canonical color set: deduplicated, sorted, nonempty, uniformly shaped."""
    vals = sorted(set(values), key=value_key)
    if not vals:
        raise ColorError("color sets must be nonempty")
    shapes = {len(v) if isinstance(v, tuple) else -1 for v in vals}
    if len(shapes) > 1:
        raise ColorError("color set mixes atoms and tuples, or tuples of different arity")
    for v in vals:
        if isinstance(v, tuple) and any(isinstance(a, tuple) for a in v):
            raise ColorError(f"nested tuple {v!r} in color set")
        value_key(v)
    return tuple(vals)


@dataclass(frozen=True)
class Transformer:
    inputs: Tuple[NodeId, ...]
    outputs: Tuple[NodeId, ...]
    pairs: FrozenSet[Pair]
    in_domain: Tuple[ColorSet, ...] = field(compare=False)
    out_domain: Tuple[ColorSet, ...] = field(compare=False)

    def __post_init__(self):
        if list(self.inputs) != sorted(set(self.inputs)) or list(self.outputs) != sorted(set(self.outputs)):
            raise ColorError("transformer places must be distinct and in ascending order")
        if len(self.in_domain) != len(self.inputs) or len(self.out_domain) != len(self.outputs):
            raise ColorError("transformer domains do not match its places")

    def __len__(self):
        return len(self.pairs)

    def by_input(self) -> Dict[Row, List[Row]]:
        index: Dict[Row, List[Row]] = defaultdict(list)
        for u, w in self.pairs:
            index[u].append(w)
        return index

    def sorted_pairs(self) -> List[Pair]:
        return sorted(self.pairs, key=lambda uw: (row_key(uw[0]), row_key(uw[1])))

    def check_conforms(self) -> List[str]:
        """Pairs with a component outside its place's color set."""
        bad = []
        ins = [set(d) for d in self.in_domain]
        outs = [set(d) for d in self.out_domain]
        for u, w in self.sorted_pairs():
            if len(u) != len(ins) or len(w) != len(outs):
                bad.append(f"{render_row(u)} -> {render_row(w)}: wrong arity")
            elif any(v not in d for v, d in zip(u, ins)) or any(v not in d for v, d in zip(w, outs)):
                bad.append(f"{render_row(u)} -> {render_row(w)}: value outside color set")
        return bad


def make_transformer(inputs: Sequence[NodeId], outputs: Sequence[NodeId], pairs: Iterable[Pair],
                     colors: Mapping[NodeId, ColorSet]) -> Transformer:
    """Build a transformer from rows in the given place order; rows are permuted to ascending place ids."""
    ins, outs = list(inputs), list(outputs)
    if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
        raise ColorError("a place occurs twice on one side of a transformer")
    in_perm = sorted(range(len(ins)), key=lambda n: ins[n])
    out_perm = sorted(range(len(outs)), key=lambda n: outs[n])
    canon = set()
    for u, w in pairs:
        if len(u) != len(ins) or len(w) != len(outs):
            raise ColorError(f"pair {u!r} -> {w!r} does not match the arity of its transition")
        canon.add((tuple(u[n] for n in in_perm), tuple(w[n] for n in out_perm)))
    cin = tuple(ins[n] for n in in_perm)
    cout = tuple(outs[n] for n in out_perm)
    return Transformer(cin, cout, frozenset(canon),
                       tuple(colors[p] for p in cin), tuple(colors[p] for p in cout))


def identity_transformer(places: Sequence[NodeId], colorsets: Sequence[ColorSet]) -> Transformer:
    if len(places) != len(colorsets):
        raise SignatureMismatch("identity needs one color set per place")
    order = sorted(range(len(places)), key=lambda n: places[n])
    ps = tuple(places[n] for n in order)
    cs = tuple(tuple(colorsets[n]) for n in order)
    pairs = frozenset((row, row) for row in itertools.product(*cs))
    return Transformer(ps, ps, pairs, cs, cs)


def union_transformers(a: Transformer, b: Transformer) -> Transformer:
    if a.inputs != b.inputs or a.outputs != b.outputs:
        raise SignatureMismatch(f"cannot unite {a.inputs}->{a.outputs} with {b.inputs}->{b.outputs}")
    return Transformer(a.inputs, a.outputs, a.pairs | b.pairs, a.in_domain, a.out_domain)


def compose_transformers(first: Transformer, second: Transformer) -> Transformer:
    """Sequential composition: `first` then `second`.

    Output places of `first` that `second` does not consume are passed through
    unchanged.  A place both passed through and produced by `second` would
    need two tokens from one arc, so it is rejected.
    """
    if not set(second.inputs) <= set(first.outputs):
        missing = sorted(set(second.inputs) - set(first.outputs))
        raise SignatureMismatch(f"second transformer consumes places {missing} the first does not produce")
    pos = {p: n for n, p in enumerate(first.outputs)}
    through = [p for p in first.outputs if p not in set(second.inputs)]
    clash = set(through) & set(second.outputs)
    if clash:
        raise SignatureMismatch(f"places {sorted(clash)} would receive two tokens")
    outputs = tuple(sorted(through + list(second.outputs)))
    domain = {p: first.out_domain[pos[p]] for p in through}
    domain.update(zip(second.outputs, second.out_domain))
    # slots: where each result component comes from: ("v", index in first row) or ("w", index in second row)
    wpos = {p: n for n, p in enumerate(second.outputs)}
    slots = [(0, pos[p]) if p in pos and p not in wpos else (1, wpos[p]) for p in outputs]
    join = [pos[p] for p in second.inputs]
    index = second.by_input()
    pairs = set()
    for u, v in first.pairs:
        ws = index.get(tuple(v[n] for n in join))
        if not ws:
            continue
        for w in ws:
            src = (v, w)
            pairs.add((u, tuple(src[side][n] for side, n in slots)))
    return Transformer(first.inputs, outputs, frozenset(pairs), first.in_domain,
                       tuple(domain[p] for p in outputs))


def star_transformer(t: Transformer) -> Transformer:
    """Reflexive-transitive closure over the full product of the place color sets."""
    if t.inputs != t.outputs or t.in_domain != t.out_domain:
        raise SignatureMismatch("star needs a transformer from a set of places to itself")
    succ = t.by_input()
    pairs = set()
    for start in itertools.product(*t.in_domain):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in succ.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        pairs.update((start, w) for w in seen)
    return Transformer(t.inputs, t.outputs, frozenset(pairs), t.in_domain, t.out_domain)


def star_by_fixpoint(t: Transformer) -> Tuple[Transformer, int]:
    """R := id; R := id | R.t until stable.  Returns the closure and the number of rounds."""
    r = identity_transformer(t.inputs, t.in_domain)
    rounds = 0
    while True:
        rounds += 1
        nxt = union_transformers(r, _compose_same(r, t))
        if nxt.pairs == r.pairs:
            return r, rounds
        r = nxt


def _compose_same(a: Transformer, b: Transformer) -> Transformer:
    index = b.by_input()
    pairs = {(u, w) for u, v in a.pairs for w in index.get(v, ())}
    return Transformer(a.inputs, b.outputs, frozenset(pairs), a.in_domain, b.out_domain)


def check_left_total(t: Transformer) -> bool:
    return not uncovered_inputs(t, limit=1)


def uncovered_inputs(t: Transformer, limit: int = 0) -> List[Row]:
    lefts = {u for u, _ in t.pairs}
    missing = []
    for row in itertools.product(*t.in_domain):
        if row not in lefts:
            missing.append(row)
            if limit and len(missing) >= limit:
                break
    return missing


@dataclass(frozen=True)
class ColoredWorkflowNet(WorkflowNet):
    colors: Mapping[NodeId, ColorSet] = field(default_factory=dict)
    transformers: Mapping[NodeId, Transformer] = field(default_factory=dict)
    mode: str = PERMISSIVE

    __hash__ = None  # type: ignore[assignment]

    def colorset(self, p: NodeId) -> ColorSet:
        return self.colors.get(p, UNIT_SET)

    def transformer(self, t: NodeId) -> Transformer:
        return self.transformers[t]

    def structure(self) -> WorkflowNet:
        return WorkflowNet(self.places, self.transitions, self.arcs, self.entry, self.exit,
                           self.names, self.next_id, self.title)


def check_colored(net: ColoredWorkflowNet) -> List[str]:
    """Semantic problems of the color annotation (empty means consistent)."""
    problems = []
    for p in sorted(net.places):
        if p not in net.colors:
            problems.append(f"place {net.name(p)}: no color set")
    for t in sorted(net.transitions):
        lam = net.transformers.get(t)
        name = net.name(t)
        if lam is None:
            problems.append(f"transition {name}: no transformer")
            continue
        if set(lam.inputs) != net.pre(t) or set(lam.outputs) != net.post(t):
            problems.append(f"transition {name}: transformer places differ from the arcs")
            continue
        if lam.in_domain != tuple(net.colorset(p) for p in lam.inputs) or \
                lam.out_domain != tuple(net.colorset(p) for p in lam.outputs):
            problems.append(f"transition {name}: transformer domains differ from the place color sets")
        for msg in lam.check_conforms():
            problems.append(f"transition {name}: pair {msg}")
        if net.mode == STRICT:
            missing = uncovered_inputs(lam, limit=1)
            if missing:
                problems.append(f"transition {name}: not left-total, input {render_row(missing[0])} uncovered")
    return problems


def lift(net: WorkflowNet, mode: str = PERMISSIVE) -> ColoredWorkflowNet:
    """Give every place the unit color and every transition its single unit pair."""
    colors = {p: UNIT_SET for p in net.places}
    transformers = {}
    for t in net.transitions:
        ins, outs = sorted(net.pre(t)), sorted(net.post(t))
        transformers[t] = make_transformer(ins, outs, [((UNIT,) * len(ins), (UNIT,) * len(outs))], colors)
    return ColoredWorkflowNet(net.places, net.transitions, net.arcs, net.entry, net.exit, net.names,
                              net.next_id, net.title, colors=colors, transformers=transformers, mode=mode)


# Colored markings map place -> sorted tuple of values (a canonical multiset).
ColoredMarking = Mapping[NodeId, Tuple[ColorValue, ...]]


def colored_marking(tokens: Mapping[NodeId, Iterable[ColorValue]]) -> Dict[NodeId, Tuple[ColorValue, ...]]:
    return {p: tuple(sorted(vs, key=value_key)) for p, vs in tokens.items() if list(vs)}


def bindings(net: ColoredWorkflowNet, m: ColoredMarking, t: NodeId) -> Iterator[Pair]:
    """All pairs of lambda(t) whose input row can be taken from the tokens of `m`."""
    lam = net.transformers[t]
    choices = []
    for p in lam.inputs:
        vals = m.get(p, ())
        if not vals:
            return
        choices.append(sorted(set(vals), key=value_key))
    index = lam.by_input()
    for row in itertools.product(*choices):
        for w in index.get(row, ()):
            yield row, w


def fire_colored(net: ColoredWorkflowNet, m: ColoredMarking, t: NodeId, binding: Pair) -> Dict[NodeId, Tuple[ColorValue, ...]]:
    lam = net.transformers[t]
    u, w = binding
    if binding not in lam.pairs:
        raise NoMatchingBinding(f"{render_row(u)} -> {render_row(w)} is not a pair of {net.name(t)}")
    out = {p: list(vs) for p, vs in m.items()}
    for p, v in zip(lam.inputs, u):
        vals = out.get(p, [])
        if v not in vals:
            raise NoMatchingBinding(f"place {net.name(p)} holds no token {render_value(v)} for {net.name(t)}")
        vals.remove(v)
    for p, v in zip(lam.outputs, w):
        out.setdefault(p, []).append(v)
    return colored_marking(out)


def fire_colored_any(net: ColoredWorkflowNet, m: ColoredMarking, t: NodeId) -> List[Dict[NodeId, Tuple[ColorValue, ...]]]:
    """Every successor of `m` under `t`; raises NoMatchingBinding when none exists."""
    succ = [fire_colored(net, m, t, b) for b in bindings(net, m, t)]
    if not succ:
        raise NoMatchingBinding(f"{net.name(t)} has no binding for the available tokens")
    return succ
