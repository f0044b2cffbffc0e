"""Seeded random workflow nets for differential testing.

Sound free-choice nets are grown from block structures (sequence, exclusive
choice, parallel split/join, loop with a silent exit).  Unsound and non-free-choice
nets come from mismatched split/join blocks and arc mutations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .colors import PERMISSIVE, STRICT, ColoredWorkflowNet, lift, make_colorset, make_transformer
from .net import WorkflowNet, build_net, is_free_choice_net, validate

BLOCKS = ("task", "seq", "xor", "and", "loop", "self")


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.places: List[str] = []
        self.trans: Dict[str, Tuple[List[str], List[str]]] = {}

    def place(self) -> str:
        p = f"p{len(self.places) + 1}"
        self.places.append(p)
        return p

    def transition(self, ins, outs) -> str:
        t = f"t{len(self.trans) + 1}"
        self.trans[t] = (list(ins), list(outs))
        return t

    def block(self, a: str, b: str, budget: int, flaw: List[bool], allow_loop: bool = True) -> None:
        rng = self.rng
        kinds = ["task"]
        if budget >= 1:
            kinds += ["seq", "xor", "seq", "xor"]
            if allow_loop:
                kinds += ["loop", "self"]
        if budget >= 4:
            kinds += ["and", "and"]
        kind = rng.choice(kinds)
        if flaw[0] and kind in ("xor", "and") and rng.random() < 0.5:
            flaw[0] = False
            return self._flawed(a, b, budget, kind, flaw)
        if kind == "task":
            self.transition([a], [b])
        elif kind == "self":
            self.transition([a], [a])
            self.block(a, b, budget - 1, flaw)
        elif kind == "seq":
            m = self.place()
            left = rng.randint(0, budget - 1)
            self.block(a, m, left, flaw, allow_loop)
            self.block(m, b, budget - 1 - left, flaw)
        elif kind == "xor":
            left = rng.randint(0, budget)
            self.block(a, b, left, flaw, allow_loop)
            self.block(a, b, budget - left, flaw, allow_loop)
        elif kind == "loop":
            m = self.place()
            rest = budget - 1
            left = rng.randint(0, rest)
            self.block(a, m, left, flaw, allow_loop)
            self.transition([m], [b])
            self.block(m, a, rest - left, flaw, False)
        else:
            p1, p2, q1, q2 = self.place(), self.place(), self.place(), self.place()
            self.transition([a], [p1, p2])
            rest = budget - 4
            left = rng.randint(0, rest)
            self.block(p1, q1, left, flaw)
            self.block(p2, q2, rest - left, flaw)
            self.transition([q1, q2], [b])

    def _flawed(self, a, b, budget, kind, flaw):
        if kind == "and":
            # parallel split closed by a choice: one branch leaves a token behind
            p1, p2 = self.place(), self.place()
            self.transition([a], [p1, p2])
            self.block(p1, b, (budget - 2) // 2, flaw)
            self.block(p2, b, (budget - 2) - (budget - 2) // 2, flaw)
        else:
            # choice closed by a synchronization: deadlock
            p1, p2 = self.place(), self.place()
            self.transition([a], [p1])
            self.transition([a], [p2])
            self.transition([p1, p2], [b])


def block_net(rng: random.Random, budget: int, unsound: bool = False, title: str = "net") -> WorkflowNet:
    """A block-structured net with about `budget` internal places; free choice by construction."""
    for _ in range(20):
        b = _Builder(rng)
        flaw = [unsound]
        first = b.place()
        b.transition(["i"], [first])
        b.block(first, "o", max(0, budget - 1), flaw)
        if not flaw[0]:
            break
    else:
        b = _Builder(rng)
        first = b.place()
        b.transition(["i"], [first])
        b._flawed(first, "o", max(0, budget - 1), rng.choice(("xor", "and")), [False])
    return build_net(["i"] + b.places + ["o"], b.trans, title=title)


def mutate(net: WorkflowNet, rng: random.Random, tries: int = 50) -> Optional[WorkflowNet]:
    """Add or drop one place/transition arc, keeping the workflow-net structure."""
    places, trans = sorted(net.places), sorted(net.transitions)
    for _ in range(tries):
        arcs = set(net.arcs)
        if rng.random() < 0.5 and len(arcs) > 2:
            arcs.discard(rng.choice(sorted(arcs)))
        else:
            p, t = rng.choice(places), rng.choice(trans)
            arcs.add((p, t) if rng.random() < 0.5 else (t, p))
        cand = WorkflowNet(net.places, net.transitions, frozenset(arcs), net.entry, net.exit, net.names,
                           title=net.title)
        if frozenset(arcs) != net.arcs and not validate(cand) and all(cand.pre(t) and cand.post(t) for t in trans):
            return cand
    return None


def non_free_choice(net: WorkflowNet, rng: random.Random, tries: int = 50) -> Optional[WorkflowNet]:
    for _ in range(tries):
        cand = mutate(net, rng)
        if cand is not None and not is_free_choice_net(cand):
            return cand
    return None


def colorize(net: WorkflowNet, rng: random.Random, max_colors: int = 4, partial: float = 0.2,
             mode: Optional[str] = None) -> ColoredWorkflowNet:
    """Random color sets (1..max_colors values) and random transformers.

    Each transformer maps every input row to one or two outputs; with probability
    `partial` some rows are dropped, giving a partial relation (permissive mode).
    """
    colors = {}
    for p in sorted(net.places):
        k = rng.randint(1, max_colors)
        colors[p] = make_colorset(range(k)) if rng.random() < 0.7 else make_colorset("abcd"[:k])
    lams = {}
    is_partial = False
    for t in sorted(net.transitions):
        ins, outs = sorted(net.pre(t)), sorted(net.post(t))
        rows = [()]
        for p in ins:
            rows = [r + (v,) for r in rows for v in colors[p]]
        drop = rng.random() < partial
        pairs = []
        for r in rows:
            if drop and len(rows) > 1 and rng.random() < 0.3:
                is_partial = True
                continue
            for _ in range(rng.choice((1, 1, 2))):
                pairs.append((r, tuple(rng.choice(colors[p]) for p in outs)))
        lams[t] = make_transformer(ins, outs, pairs, colors)
    if mode is None:
        mode = PERMISSIVE if is_partial else STRICT
    return ColoredWorkflowNet(net.places, net.transitions, net.arcs, net.entry, net.exit, net.names,
                              net.next_id, net.title, colors=colors, transformers=lams, mode=mode)


@dataclass(frozen=True)
class Sample:
    name: str
    net: ColoredWorkflowNet
    intent: str  # "sound", "unsound", "mutant" or "non-fc"


def corpus(seed: int, count: int, max_places: int = 12, colored: bool = False,
           mix=(("sound", 4), ("unsound", 2), ("mutant", 2), ("non-fc", 2))) -> List[Sample]:
    """`count` nets drawn with the given intent weights; reproducible from `seed`."""
    rng = random.Random(seed)
    intents = [k for k, w in mix for _ in range(w)]
    out: List[Sample] = []
    n = 0
    while len(out) < count:
        n += 1
        intent = intents[len(out) % len(intents)]
        name = f"g{seed}-{n}"
        budget = rng.randint(1, max_places - 2)
        base = block_net(rng, budget, unsound=intent == "unsound", title=name)
        if intent == "mutant":
            base = mutate(base, rng)
        elif intent == "non-fc":
            base = non_free_choice(base, rng)
        if base is None or len(base.places) > max_places:
            continue
        net = colorize(base, rng) if colored else lift(base)
        out.append(Sample(name, net, intent))
    return out
