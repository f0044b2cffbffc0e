"""Builders for the worked examples shipped with the package.

* `fig4` - the small S-net with a c1/c2 loop used to illustrate the rules.
* `insurance` - the complaint-handling net with its transformers as written,
  which are partial (permissive mode).
* `insurance_err` - the same net made left-total by adding an ERR value that
  flows to the exit whenever a choice contradicts the data (strict mode).
* `insurance_extended` - the complaint net with the processing loop replaced
  by a concurrent check1/check2 block (unit colors).
"""

from __future__ import annotations

from importlib import resources
from typing import Iterable, Mapping, Sequence, Tuple

from .colors import PERMISSIVE, STRICT, UNIT, UNIT_SET, ColoredWorkflowNet, lift, make_colorset, make_transformer
from .net import build_net

ERR = "ERR"
GROUPS = ("A", "B")
AMOUNTS = range(1, 11)
ANSWERS = ("YES", "NO", "TO")

TransSpec = Tuple[Sequence[str], Sequence[str], Iterable[Tuple[tuple, tuple]]]


def colored_net(title: str, places: Mapping[str, Iterable], transitions: Mapping[str, TransSpec],
                mode: str = PERMISSIVE, entry: str = "i", exit: str = "o") -> ColoredWorkflowNet:
    """Assemble a colored net from names; pair rows follow each transition's listed place order."""
    skel = build_net(list(places), {t: (ins, outs) for t, (ins, outs, _) in transitions.items()},
                     entry, exit, title)
    colors = {skel.id(p): (make_colorset(vs) if vs is not None else UNIT_SET) for p, vs in places.items()}
    lams = {}
    for t, (ins, outs, pairs) in transitions.items():
        lams[skel.id(t)] = make_transformer([skel.id(p) for p in ins], [skel.id(p) for p in outs],
                                            pairs, colors)
    return ColoredWorkflowNet(skel.places, skel.transitions, skel.arcs, skel.entry, skel.exit, skel.names,
                              skel.next_id, title, colors=colors, transformers=lams, mode=mode)


def fig4() -> ColoredWorkflowNet:
    n = build_net(["i", "c1", "c2", "o"],
                  {"t1": (["i"], ["c1"]), "t2": (["c1"], ["c2"]), "t3": (["c1"], ["c2"]),
                   "t4": (["c2"], ["c1"]), "t5": (["c2"], ["o"])}, title="fig4")
    return lift(n)


def _claims():
    return [(x, k) for x in GROUPS for k in AMOUNTS]


def insurance() -> ColoredWorkflowNet:
    ci = _claims()
    c4 = [(x, k, e) for x, k in ci for e in ("PR", "NPR")]
    c7 = [(x, k, q) for x, k in ci for q in ANSWERS]
    c8 = [r + (v,) for r in c7 for v in AMOUNTS]
    c9 = [r + (v,) for r in c7 for v in list(AMOUNTS) + [ERR]]

    def checked(x, k, q, v):
        ok = 4 <= k <= 10 and v == (k if x == "A" else k // 2)
        return (x, k, q, v if ok else ERR)

    places = {"i": ci, "c1": None, "c2": ci, "c3": None, "c4": c4, "c5": ANSWERS, "c6": ci,
              "c7": c7, "c8": c8, "c9": c9, "o": ci}
    trans = {
        "register": (["i"], ["c1", "c2"], [((c,), (UNIT, c)) for c in ci]),
        "send_questionnaire": (["c1"], ["c3"], [((UNIT,), (UNIT,))]),
        "time_out": (["c3"], ["c5"], [((UNIT,), ("TO",))]),
        "process_questionnaire": (["c3"], ["c5"], [((UNIT,), ("YES",)), ((UNIT,), ("NO",))]),
        "evaluate": (["c2"], ["c4"], [(((x, k),), ((x, k, "NPR" if k <= 3 else "PR"),)) for x, k in ci]),
        "no_processing": (["c4", "c5"], ["c6"],
                          [(((x, k, "NPR"), q), ((x, k),)) for x, k in ci if k <= 3 for q in ANSWERS]),
        "processing_required": (["c4", "c5"], ["c7"],
                                [(((x, k, "PR"), q), ((x, k, q),)) for x, k in ci if k >= 4 for q in ANSWERS]),
        "process_complaint": (["c7"], ["c8"],
                              [(((x, k, q),), ((x, k, q, v),)) for x, k, q in c7 if k >= 4 for v in range(1, k + 1)]),
        "check_processing": (["c8"], ["c9"], [((r,), (checked(*r),)) for r in c8]),
        "processing_NOK": (["c9"], ["c7"], [(((x, k, q, ERR),), ((x, k, q),)) for x, k, q in c7 if k >= 4]),
        "processing_OK": (["c9"], ["c6"],
                          [(((x, k, q, v),), ((x, v),)) for x, k, q in c7 if k >= 4 for v in AMOUNTS]),
        "archive": (["c6"], ["o"], [((c,), (c,)) for c in ci]),
    }
    return colored_net("insurance", places, trans, PERMISSIVE)


def insurance_err() -> ColoredWorkflowNet:
    """Left-total variant: a choice that contradicts the data sets an ERR flag that reaches o."""
    ci = _claims()
    co = ci + [(x, ERR) for x in GROUPS]
    flags = ANSWERS + (ERR,)
    c4 = [(x, k, e) for x, k in ci for e in ("PR", "NPR")]
    c7 = [(x, k, q) for x, k in ci for q in flags]
    c8 = [r + (v,) for r in c7 for v in AMOUNTS]
    c9 = [r + (v,) for r in c7 for v in list(AMOUNTS) + [ERR]]

    def checked(x, k, q, v):
        ok = 4 <= k <= 10 and v == (k if x == "A" else k // 2)
        return (x, k, q, v if ok else ERR)

    def nok(x, k, q, v):
        # repeating a processing the check accepted is itself an error
        return (x, k, q) if v == ERR else (x, k, ERR)

    def ok(x, k, q, v):
        good = v != ERR and q != ERR and k >= 4
        return (x, v) if good else (x, ERR)

    places = {"i": ci, "c1": None, "c2": ci, "c3": None, "c4": c4, "c5": ANSWERS, "c6": co,
              "c7": c7, "c8": c8, "c9": c9, "o": co}
    trans = {
        "register": (["i"], ["c1", "c2"], [((c,), (UNIT, c)) for c in ci]),
        "send_questionnaire": (["c1"], ["c3"], [((UNIT,), (UNIT,))]),
        "time_out": (["c3"], ["c5"], [((UNIT,), ("TO",))]),
        "process_questionnaire": (["c3"], ["c5"], [((UNIT,), ("YES",)), ((UNIT,), ("NO",))]),
        "evaluate": (["c2"], ["c4"], [(((x, k),), ((x, k, "NPR" if k <= 3 else "PR"),)) for x, k in ci]),
        "no_processing": (["c4", "c5"], ["c6"],
                          [(((x, k, e), q), ((x, k) if e == "NPR" and k <= 3 else (x, ERR),))
                           for x, k, e in c4 for q in ANSWERS]),
        "processing_required": (["c4", "c5"], ["c7"],
                                [(((x, k, e), q), ((x, k, q) if e == "PR" and k >= 4 else (x, k, ERR),))
                                 for x, k, e in c4 for q in ANSWERS]),
        "process_complaint": (["c7"], ["c8"],
                              [(((x, k, q),), ((x, k, q, v),)) for x, k, q in c7 for v in range(1, k + 1)]),
        "check_processing": (["c8"], ["c9"], [((r,), (checked(*r),)) for r in c8]),
        "processing_NOK": (["c9"], ["c7"], [((r,), (nok(*r),)) for r in c9]),
        "processing_OK": (["c9"], ["c6"], [((r,), (ok(*r),)) for r in c9]),
        "archive": (["c6"], ["o"], [((c,), (c,)) for c in co]),
    }
    return colored_net("insurance-err", places, trans, STRICT)


def expected_insurance_summary() -> frozenset:
    """The claim/payment relation the policy produces: B claims above 3 are halved."""
    a = {(("A", k), ("A", k)) for k in AMOUNTS}
    low = {(("B", k), ("B", k)) for k in range(1, 4)}
    high = {(("B", k), ("B", k // 2)) for k in range(4, 11)}
    return frozenset(a | low | high)


def without_err(pairs) -> frozenset:
    return frozenset((v, w) for v, w in pairs if ERR not in _atoms(v) and ERR not in _atoms(w))


def _atoms(v):
    return v if isinstance(v, tuple) else (v,)


# places are listed so that ascending ids order the loop clusters as c7, [c12,c13], c9
EXTENDED_PLACES = ["i", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c10", "c11", "c12", "c13", "c9", "o"]


def insurance_extended() -> ColoredWorkflowNet:
    n = build_net(EXTENDED_PLACES, {
        "register": (["i"], ["c1", "c2"]),
        "send_questionnaire": (["c1"], ["c3"]),
        "time_out": (["c3"], ["c5"]),
        "process_questionnaire": (["c3"], ["c5"]),
        "evaluate": (["c2"], ["c4"]),
        "no_processing": (["c4", "c5"], ["c6"]),
        "processing_required": (["c4", "c5"], ["c7"]),
        "process": (["c7"], ["c10", "c11"]),
        "check1": (["c10"], ["c12"]),
        "check2": (["c11"], ["c13"]),
        "combine": (["c12", "c13"], ["c9"]),
        "processing_NOK": (["c9"], ["c7"]),
        "processing_OK": (["c9"], ["c6"]),
        "archive": (["c6"], ["o"]),
    }, title="insurance-extended")
    return lift(n)


def pairing() -> ColoredWorkflowNet:
    """Not free choice: sound with one token, but two cases can pair x, g and e so that x is stranded."""
    n = build_net(["i", "x", "g", "e", "o"], {
        "a": (["i"], ["x", "g"]), "b": (["x", "g"], ["o"]),
        "c": (["i"], ["x", "e"]), "d": (["x", "e"], ["o"]),
        "f": (["i"], ["g", "e"]), "h": (["g", "e"], ["o"]),
    }, title="pairing")
    return lift(n)


BUILDERS = {"fig4": fig4, "pairing": pairing, "insurance": insurance, "insurance-err": insurance_err,
            "insurance-extended": insurance_extended}


def fixture_text(name: str) -> str:
    return resources.files("wfreduce").joinpath("fixtures", f"{name}.cwf").read_text(encoding="utf-8")


def load_fixture(name: str) -> ColoredWorkflowNet:
    from .formats import parse_native
    return parse_native(fixture_text(name))
