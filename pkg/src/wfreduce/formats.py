"""Reading and writing nets, traces, summaries and batch statistics.

Native format (UTF-8, one record per line, `#` starts a comment)::

    NET insurance
    MODE strict
    PLACE i : (A,1) (A,2) (B,1)
    PLACE c1
    ENTRY i
    EXIT o
    TRANS register : i -> c1 c2
    PAIR register : (A,1) -> • (A,1)

A PLACE without a value list gets the unit color.  PAIR rows list one value
per place, in the order the TRANS record names them.  Node ids follow document
order (places first) unless every PLACE and TRANS name carries an explicit
`@id`; `NEXT n` pins the fresh-id counter.  Both only appear when needed.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import re
import statistics
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .colors import (PERMISSIVE, STRICT, UNIT_SET, ColorError, ColorValue, ColoredWorkflowNet, check_colored, lift,
                     make_colorset, make_transformer)
from .net import NetError, WorkflowNet, build_net, validate
from .rules import ReductionTrace

_TOKEN = re.compile(r"\s*(?:(->)|([():,@])|([^\s():,@]+))")
_INT = re.compile(r"-?\d+")
_KEYWORDS = ("NET", "MODE", "PLACE", "TRANS", "PAIR", "ENTRY", "EXIT", "NEXT")


class FormatError(NetError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


def _tokens(text: str, lineno: int) -> List[Tuple[str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise FormatError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
        tok = m.group(1) or m.group(2) or m.group(3)
        out.append((tok, m.start(m.lastindex) + 1))
        pos = m.end()
    return out


class _Line:
    def __init__(self, toks, lineno):
        self.toks = toks
        self.n = 0
        self.lineno = lineno

    def peek(self) -> Optional[str]:
        return self.toks[self.n][0] if self.n < len(self.toks) else None

    def col(self) -> int:
        if self.n < len(self.toks):
            return self.toks[self.n][1]
        return (self.toks[-1][1] + len(self.toks[-1][0])) if self.toks else 1

    def fail(self, msg):
        raise FormatError(msg, self.lineno, self.col())

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None:
            self.fail(f"expected {expected or 'more input'} at end of line")
        if expected is not None and tok != expected:
            self.fail(f"expected {expected!r}, found {tok!r}")
        self.n += 1
        return tok

    def name(self) -> str:
        tok = self.take()
        if tok in "():,@" or tok == "->":
            self.n -= 1
            self.fail(f"expected a name, found {tok!r}")
        return tok

    def end(self):
        if self.peek() is not None:
            self.fail(f"unexpected {self.peek()!r}")

    def atom(self):
        tok = self.name()
        return int(tok) if _INT.fullmatch(tok) else tok

    def value(self) -> ColorValue:
        if self.peek() != "(":
            return self.atom()
        self.take("(")
        parts = [self.atom()]
        while self.peek() == ",":
            self.take(",")
            parts.append(self.atom())
        self.take(")")
        return tuple(parts)

    def values(self, stop: Optional[str] = None) -> List[ColorValue]:
        out = []
        while self.peek() is not None and self.peek() != stop:
            out.append(self.value())
        return out

    def names(self, stop: Optional[str] = None) -> List[str]:
        out = []
        while self.peek() is not None and self.peek() != stop:
            out.append(self.name())
        return out

    def opt_id(self) -> Optional[int]:
        if self.peek() != "@":
            return None
        self.take("@")
        tok = self.take()
        if not tok.isdigit():
            self.n -= 1
            self.fail(f"expected a node id, found {tok!r}")
        return int(tok)


def parse_native(text: str, check: bool = True) -> ColoredWorkflowNet:
    """Parse a native document; `check=False` skips the workflow-net and color checks."""
    title = "net"
    mode = PERMISSIVE
    places: Dict[str, Tuple[Optional[int], Optional[List[ColorValue]], int]] = {}
    trans: Dict[str, Tuple[Optional[int], List[str], List[str], int]] = {}
    pairs: Dict[str, List[Tuple[list, list, int]]] = {}
    entry = exit_ = None
    next_id = None
    seen_net = False
    for lineno, raw in enumerate(text.split("\n"), 1):
        body = raw.split("#", 1)[0].rstrip("\r")
        toks = _tokens(body, lineno)
        if not toks:
            continue
        ln = _Line(toks, lineno)
        kw = ln.take()
        if kw not in _KEYWORDS:
            ln.n = 0
            ln.fail(f"unknown record {kw!r}, expected one of {', '.join(_KEYWORDS)}")
        if kw == "NET":
            if seen_net:
                ln.n = 0
                ln.fail("second NET record")
            seen_net = True
            title = ln.name()
        elif kw == "MODE":
            mode = ln.name()
            if mode not in (STRICT, PERMISSIVE):
                ln.n -= 1
                ln.fail(f"mode must be {STRICT} or {PERMISSIVE}")
        elif kw in ("ENTRY", "EXIT"):
            nm = ln.name()
            if kw == "ENTRY":
                entry = nm
            else:
                exit_ = nm
        elif kw == "NEXT":
            tok = ln.take()
            if not tok.isdigit():
                ln.n -= 1
                ln.fail("NEXT needs a nonnegative integer")
            next_id = int(tok)
        elif kw == "PLACE":
            nm = ln.name()
            nid = ln.opt_id()
            vals = None
            if ln.peek() == ":":
                ln.take(":")
                vals = ln.values()
                if not vals:
                    ln.fail("empty color set")
            if nm in places or nm in trans:
                raise FormatError(f"duplicate node name {nm!r}", lineno, toks[1][1])
            places[nm] = (nid, vals, lineno)
        elif kw == "TRANS":
            nm = ln.name()
            nid = ln.opt_id()
            ln.take(":")
            ins = ln.names("->")
            ln.take("->")
            outs = ln.names()
            if nm in places or nm in trans:
                raise FormatError(f"duplicate node name {nm!r}", lineno, toks[1][1])
            trans[nm] = (nid, ins, outs, lineno)
        else:
            nm = ln.name()
            ln.take(":")
            u = ln.values("->")
            ln.take("->")
            w = ln.values()
            pairs.setdefault(nm, []).append((u, w, lineno))
        ln.end()
    if not seen_net:
        raise FormatError("missing NET record", 1, 1)
    if entry is None or exit_ is None:
        raise FormatError("missing ENTRY or EXIT record")
    return _assemble(title, mode, places, trans, pairs, entry, exit_, next_id, check)


def _assemble(title, mode, places, trans, pairs, entry, exit_, next_id, check) -> ColoredWorkflowNet:
    for nm, rows in pairs.items():
        if nm not in trans:
            raise FormatError(f"PAIR for unknown transition {nm!r}", rows[0][2], 1)
    for nm, (_, ins, outs, lineno) in trans.items():
        for p in ins + outs:
            if p not in places:
                raise FormatError(f"transition {nm!r} refers to unknown place {p!r}", lineno, 1)
        if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
            raise FormatError(f"transition {nm!r} lists a place twice on one side", lineno, 1)
    for nm in (entry, exit_):
        if nm not in places:
            raise FormatError(f"entry/exit {nm!r} is not a declared place")
    explicit = [v[0] for v in list(places.values()) + list(trans.values())]
    base = build_net(list(places), {t: (v[1], v[2]) for t, v in trans.items()}, entry, exit_, title)
    if any(x is not None for x in explicit):
        if any(x is None for x in explicit):
            raise FormatError("either every node carries an @id or none does")
        if len(set(explicit)) != len(explicit):
            raise FormatError("duplicate @id")
        remap = {base.id(nm): v[0] for nm, v in list(places.items()) + list(trans.items())}
    else:
        remap = {x: x for x in base.names}
    names = {remap[x]: nm for x, nm in base.names.items()}
    arcs = frozenset((remap[a], remap[b]) for a, b in base.arcs)
    pids = {nm: remap[base.id(nm)] for nm in places}
    colors = {}
    for nm, (_, vals, lineno) in places.items():
        try:
            colors[pids[nm]] = make_colorset(vals) if vals is not None else UNIT_SET
        except ColorError as exc:
            raise FormatError(f"place {nm!r}: {exc}", lineno, 1) from None
    transformers = {}
    for nm, (_, ins, outs, lineno) in trans.items():
        rows = []
        for u, w, pl in pairs.get(nm, []):
            if len(u) != len(ins) or len(w) != len(outs):
                raise FormatError(f"pair of {nm!r} has {len(u)} -> {len(w)} values, "
                                  f"the transition needs {len(ins)} -> {len(outs)}", pl, 1)
            for p, v in list(zip(ins, u)) + list(zip(outs, w)):
                if v not in colors[pids[p]]:
                    raise FormatError(f"pair of {nm!r}: value {_render(v)} is not in the color set of {p!r}", pl, 1)
            rows.append((tuple(u), tuple(w)))
        transformers[remap[base.id(nm)]] = make_transformer([pids[p] for p in ins], [pids[p] for p in outs],
                                                            rows, colors)
    net = ColoredWorkflowNet(frozenset(pids.values()), frozenset(remap[base.id(t)] for t in trans), arcs,
                             pids[entry], pids[exit_], names, next_id if next_id is not None else -1, title,
                             colors=colors, transformers=transformers, mode=mode)
    if next_id is not None and net.names and next_id <= max(net.names):
        raise FormatError(f"NEXT {next_id} does not exceed every node id")
    problems = [str(v) for v in validate(net)] + check_colored(net) if check else []
    if problems:
        raise FormatError("not a valid colored workflow net: " + "; ".join(problems))
    return net


def _render(v: ColorValue) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(_atom_text(a) for a in v) + ")"
    return _atom_text(v)


def _atom_text(a) -> str:
    s = str(a)
    if isinstance(a, str) and (_INT.fullmatch(s) or not re.fullmatch(r"[^\s():,@#]+", s) or s == "->"):
        raise FormatError(f"color value {a!r} cannot be written in the native format")
    return s


def _check_name(nm: str) -> str:
    if not re.fullmatch(r"[^\s():,@#]+", nm) or nm == "->" or nm in _KEYWORDS:
        raise FormatError(f"node name {nm!r} cannot be written in the native format")
    return nm


def emit_native(net: ColoredWorkflowNet) -> str:
    places = sorted(net.places)
    trans = sorted(net.transitions)
    default_ids = places == list(range(len(places))) and \
        trans == list(range(len(places), len(places) + len(trans)))
    tag = (lambda x: "") if default_ids else (lambda x: f" @{x}")
    nm = lambda x: _check_name(net.name(x))
    lines = [f"NET {_check_name(net.title)}", f"MODE {net.mode}"]
    if net.next_id != max(places + trans) + 1:
        lines.append(f"NEXT {net.next_id}")
    for p in places:
        cs = net.colorset(p)
        vals = "" if cs == UNIT_SET else " : " + " ".join(_render(v) for v in cs)
        lines.append(f"PLACE {nm(p)}{tag(p)}{vals}")
    lines.append(f"ENTRY {nm(net.entry)}")
    lines.append(f"EXIT {nm(net.exit)}")
    for t in trans:
        lam = net.transformers[t]
        ins = " ".join(nm(p) for p in lam.inputs)
        outs = " ".join(nm(p) for p in lam.outputs)
        lines.append(f"TRANS {nm(t)}{tag(t)} : {ins} -> {outs}")
        for u, w in lam.sorted_pairs():
            lines.append(f"PAIR {nm(t)} : {' '.join(_render(v) for v in u)} -> {' '.join(_render(v) for v in w)}")
    return "\n".join(lines) + "\n"


def import_pnml(text: str, mode: str = PERMISSIVE) -> ColoredWorkflowNet:
    """Read the place/transition/arc skeleton of a PNML document and lift it to unit colors."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise FormatError(f"malformed XML: {exc}", line, col + 1) from None
    places, trans, arcs = [], [], []
    for el in root.iter():
        tag = el.tag.rsplit("}", 1)[-1]
        if tag == "place":
            places.append(el.get("id"))
        elif tag == "transition":
            trans.append(el.get("id"))
        elif tag == "arc":
            arcs.append((el.get("source"), el.get("target")))
    if None in places or None in trans or any(None in a for a in arcs):
        raise FormatError("place, transition or arc element without id/source/target")
    pset, tset = set(places), set(trans)
    if len(pset) != len(places) or len(tset) != len(trans) or pset & tset:
        raise FormatError("duplicate element ids")
    ins: Dict[str, set] = {t: set() for t in trans}
    outs: Dict[str, set] = {t: set() for t in trans}
    has_in, has_out = set(), set()
    for src, dst in arcs:
        if src in pset and dst in tset:
            ins[dst].add(src)
            has_out.add(src)
        elif src in tset and dst in pset:
            outs[src].add(dst)
            has_in.add(dst)
        else:
            raise FormatError(f"arc {src} -> {dst} does not connect a place and a transition")
    sources = [p for p in places if p not in has_in]
    sinks = [p for p in places if p not in has_out]
    if len(sources) != 1:
        raise FormatError(f"expected exactly one source place, found {len(sources)}")
    if len(sinks) != 1:
        raise FormatError(f"expected exactly one sink place, found {len(sinks)}")
    title = "net"
    for el in root.iter():
        if el.tag.rsplit("}", 1)[-1] == "net" and el.get("id"):
            title = el.get("id")
            break
    net = build_net(places, {t: (sorted(ins[t]), sorted(outs[t])) for t in trans}, sources[0], sinks[0], title)
    problems = validate(net)
    if problems:
        raise FormatError("not a workflow net: " + "; ".join(str(v) for v in problems))
    return lift(net, mode)


def load_net(path: str, mode: Optional[str] = None, check: bool = True) -> ColoredWorkflowNet:
    """Load a native (.cwf) or PNML (.pnml/.xml) file; `mode` overrides the document's mode."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith((".pnml", ".xml")):
        net = import_pnml(text, mode or PERMISSIVE)
    else:
        net = parse_native(text, check)
    if mode and net.mode != mode:
        net = dataclasses.replace(net, mode=mode)
        problems = check_colored(net) if check else []
        if problems:
            raise FormatError("; ".join(problems))
    return net


def emit_trace(net: WorkflowNet, trace: ReductionTrace) -> str:
    """JSON rendering of a reduction trace; node ids are those of the input net and its successors."""
    steps = []
    for app, size in zip(trace.steps, trace.sizes):
        steps.append({"rule": app.kind, "operands": list(app.operands), "created": list(app.created),
                      "removed": list(app.removed), "labels": list(app.labels),
                      "places": size[0], "transitions": size[1], "clusters": size[2]})
    doc = {"net": net.title, "steps": steps, "counts": trace.counts(), "notes": list(trace.notes)}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# -- batch statistics ------------------------------------------------------

CLASS_ORDER = ("acyclic FC sound", "acyclic FC unsound", "cyclic FC sound", "cyclic FC unsound",
               "acyclic not FC", "cyclic not FC")
CSV_HEADER = ("class", "nets", "p_avg", "p_med", "p_max", "t_avg", "t_med", "t_max", "reduced_by",
              "rule_applications")
DASH = "—"


@dataclass(frozen=True)
class NetOutcome:
    name: str
    acyclic: bool
    free_choice: bool
    sound: bool
    places: int
    transitions: int
    reduced_by: float
    rule_applications: int

    @property
    def label(self) -> str:
        shape = "acyclic" if self.acyclic else "cyclic"
        if not self.free_choice:
            return f"{shape} not FC"
        return f"{shape} FC {'sound' if self.sound else 'unsound'}"


@dataclass(frozen=True)
class StatsRow:
    label: str
    nets: int
    p_avg: float
    p_med: float
    p_max: int
    t_avg: float
    t_med: float
    t_max: int
    reduced_by: Optional[float]
    rule_applications: float

    def cells(self, percent: bool = True) -> List[str]:
        red = DASH if self.reduced_by is None else f"{self.reduced_by:.1f}" + ("%" if percent else "")
        return [self.label, str(self.nets), f"{self.p_avg:.1f}", _num(self.p_med), str(self.p_max),
                f"{self.t_avg:.1f}", _num(self.t_med), str(self.t_max), red, f"{self.rule_applications:.1f}"]


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def stats_rows(outcomes: Iterable[NetOutcome]) -> List[StatsRow]:
    groups: Dict[str, List[NetOutcome]] = {}
    for o in outcomes:
        groups.setdefault(o.label, []).append(o)
    rows = []
    for label in CLASS_ORDER:
        g = groups.get(label)
        if not g:
            continue
        ps = [o.places for o in g]
        ts = [o.transitions for o in g]
        sound = label.endswith("FC sound")
        rows.append(StatsRow(label, len(g), statistics.mean(ps), statistics.median(ps), max(ps),
                             statistics.mean(ts), statistics.median(ts), max(ts),
                             None if sound else statistics.mean(o.reduced_by for o in g),
                             statistics.mean(o.rule_applications for o in g)))
    return rows


def emit_report(outcomes: Sequence[NetOutcome], fmt: str = "text") -> str:
    rows = stats_rows(outcomes)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.cells(percent=False))
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    head = ["class", "nets", "|P| avg", "med", "max", "|T| avg", "med", "max", "red. by", "# rule appl."]
    table = [head] + [r.cells() for r in rows]
    widths = [max(len(row[n]) for row in table) for n in range(len(head))]
    out = []
    for k, row in enumerate(table):
        out.append("  ".join(c.ljust(w) if n == 0 else c.rjust(w) for n, (c, w) in enumerate(zip(row, widths))))
        if k == 0:
            out.append("-" * len(out[0]))
    return "\n".join(out) + "\n"


def render_pairs(pairs) -> List[str]:
    """Summary pairs as sorted `v => w` lines."""
    return sorted(f"{_render(v)} => {_render(w)}" for v, w in pairs)
