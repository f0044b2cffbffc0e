import json
import statistics

import pytest

from wfreduce.colors import STRICT, UNIT, lift
from wfreduce.formats import (CSV_HEADER, DASH, FormatError, NetOutcome, emit_native, emit_report, emit_trace,
                              import_pnml, load_net, parse_native, render_pairs, stats_rows)
from wfreduce.generate import corpus
from wfreduce.models import BUILDERS, fixture_text, insurance_extended
from wfreduce.net import build_net, is_acyclic, is_free_choice_net, validate
from wfreduce.reduction import Reducer, find_potential_synchronizers, compute_fragment, reduce


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_fixture_matches_builder_and_round_trips(name):
    text = fixture_text(name)
    net = parse_native(text)
    assert net == BUILDERS[name]()
    assert emit_native(net) == text
    assert parse_native(emit_native(net)) == net


def test_insurance_fixture_shape():
    net = parse_native(fixture_text("insurance"))
    assert len(net.places) == 11  # i, c1..c9, o
    assert net.colorset(net.id("c1")) == net.colorset(net.id("c3")) == (UNIT,)
    assert parse_native(fixture_text("insurance-err")).mode == STRICT


def test_single_transition_round_trip():
    net = lift(build_net(["i", "o"], {"t": (["i"], ["o"])}))
    assert parse_native(emit_native(net)) == net
    assert "@" not in emit_native(net)


def test_mid_trace_residual_round_trips():
    net = insurance_extended()
    f = compute_fragment(net, find_potential_synchronizers(net)[0])
    r = Reducer(net)
    r.to_synchronizers(f)
    text = emit_native(r.net)
    assert "@" in text
    back = parse_native(text)
    assert back == r.net
    assert back.next_id == r.net.next_id


def test_residual_of_unsound_net_round_trips():
    v = reduce(parse_native(fixture_text("pairing")))
    assert parse_native(emit_native(v.net)) == v.net


def test_omitted_colors_default_to_unit():
    net = parse_native("NET t\nPLACE i\nPLACE o\nENTRY i\nEXIT o\nTRANS a : i -> o\nPAIR a : • -> •\n")
    assert all(net.colorset(p) == (UNIT,) for p in net.places)


def test_comments_and_blank_lines_are_ignored():
    net = parse_native("# a net\n\nNET t\nPLACE i : 1 2\nPLACE o : 1 2   # payload\nENTRY i\nEXIT o\n"
                       "TRANS a : i -> o\nPAIR a : 1 -> 2\nPAIR a : 2 -> 1\n")
    assert len(net.transformers[net.id("a")].pairs) == 2


@pytest.mark.parametrize("text, line, column", [
    ("NET t\nPLACE i\nPLACE o\nENTRY i\nEXIT o\nTRANS a i -> o\n", 6, 9),
    ("NET t\nPLACE i : (1,2\n", 2, 15),
    ("NET t\nPLOCE i\n", 2, 1),
])
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(FormatError) as err:
        parse_native(text)
    assert (err.value.line, err.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(err.value)


def test_value_outside_color_set():
    with pytest.raises(FormatError, match=r"value 3 is not in the color set of 'o'") as err:
        parse_native("NET t\nPLACE i : 1\nPLACE o : 1 2\nENTRY i\nEXIT o\nTRANS a : i -> o\nPAIR a : 1 -> 3\n")
    assert err.value.line == 7


def test_strict_mode_names_the_uncovered_input():
    text = "NET t\nMODE strict\nPLACE i : 1 2\nPLACE o\nENTRY i\nEXIT o\nTRANS a : i -> o\nPAIR a : 1 -> •\n"
    with pytest.raises(FormatError, match=r"\(2\)|2"):
        parse_native(text)
    assert parse_native(text.replace("strict", "permissive")).mode == "permissive"


def test_unknown_place_is_rejected():
    with pytest.raises(FormatError, match="unknown place 'x'"):
        parse_native("NET t\nPLACE i\nPLACE o\nENTRY i\nEXIT o\nTRANS a : i -> x\n")


def test_structural_violation_is_rejected_unless_unchecked():
    text = "NET t\nPLACE i\nPLACE o\nPLACE lost\nENTRY i\nEXIT o\nTRANS a : i -> o\nPAIR a : • -> •\n"
    with pytest.raises(FormatError, match="not a valid"):
        parse_native(text)
    assert validate(parse_native(text, check=False))


PNML = """<?xml version="1.0"?>
<pnml xmlns="http://www.pnml.org/version-2009/grammar/pnml">
  <net id="tiny" type="http://www.pnml.org/version-2009/grammar/ptnet">
    <place id="p0"><name><text>start</text></name><initialMarking><text>1</text></initialMarking></place>
    <place id="p1"/>
    <transition id="t0"><graphics><position x="1" y="2"/></graphics></transition>
    <arc id="a0" source="p0" target="t0"/>
    <arc id="a1" source="t0" target="p1"/>
  </net>
</pnml>"""


def test_pnml_minimal():
    net = import_pnml(PNML)
    assert len(net.places) == 2 and len(net.transitions) == 1
    assert net.name(net.entry) == "p0" and net.name(net.exit) == "p1"
    assert net.title == "tiny"
    assert reduce(net).kind == "completely-reduced"


def test_pnml_without_namespace():
    assert import_pnml(PNML.replace(' xmlns="http://www.pnml.org/version-2009/grammar/pnml"', "")) == import_pnml(PNML)


def test_pnml_two_sinks():
    text = PNML.replace('<arc id="a1"', '<place id="p2"/><arc id="a2" source="t0" target="p2"/><arc id="a1"')
    with pytest.raises(FormatError, match="sink"):
        import_pnml(text)


def test_pnml_not_a_workflow_net():
    text = PNML.replace("</net>", '<place id="q"/><transition id="u"/><arc id="a3" source="q" target="u"/>'
                        '<arc id="a4" source="u" target="q"/></net>')
    with pytest.raises(FormatError):
        import_pnml(text)


def test_pnml_bad_xml_has_position():
    with pytest.raises(FormatError) as err:
        import_pnml("<pnml><net>\n<place id='a'>\n</pnml>")
    assert err.value.line >= 1


def test_load_net_by_extension(tmp_path):
    (tmp_path / "n.pnml").write_text(PNML)
    (tmp_path / "n.cwf").write_text(fixture_text("fig4"))
    assert load_net(str(tmp_path / "n.pnml")).title == "tiny"
    assert load_net(str(tmp_path / "n.cwf"), mode=STRICT).mode == STRICT


# -- report --------------------------------------------------------------------

def outcomes():
    out = []
    for s in corpus(3, 40):
        v = reduce(s.net)
        out.append(NetOutcome(s.name, is_acyclic(s.net), is_free_choice_net(s.net),
                              v.kind == "completely-reduced", len(s.net.places), len(s.net.transitions),
                              v.reduced_by, len(v.trace)))
    return out


def test_empty_corpus_gives_header_only():
    assert emit_report([], "csv") == ",".join(CSV_HEADER) + "\n"
    assert len(emit_report([]).splitlines()) == 2
    assert stats_rows([]) == []


def test_sound_rows_show_a_dash():
    sound = [o for o in outcomes() if o.sound]
    assert sound
    rows = stats_rows(sound)
    assert all(r.reduced_by is None and r.cells()[8] == DASH for r in rows)
    assert DASH in emit_report(sound)


def test_report_counts_and_statistics():
    outs = outcomes()
    rows = stats_rows(outs)
    assert sum(r.nets for r in rows) == len(outs)
    for r in rows:
        group = [o for o in outs if o.label == r.label]
        assert r.p_med == statistics.median([o.places for o in group])
        assert r.t_med == statistics.median([o.transitions for o in group])
        assert r.p_max == max(o.places for o in group)
        assert r.rule_applications == pytest.approx(sum(o.rule_applications for o in group) / len(group))
        if r.reduced_by is not None:
            assert 0 <= r.reduced_by <= 100


def test_csv_report_shape():
    text = emit_report(outcomes(), "csv")
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert all(len(line.split(",")) == len(CSV_HEADER) for line in lines)
    assert "%" not in text
    with pytest.raises(ValueError):
        emit_report([], "html")


def test_trace_json():
    net = parse_native(fixture_text("fig4"))
    v = reduce(net)
    doc = json.loads(emit_trace(net, v.trace))
    assert [s["rule"] for s in doc["steps"]] == ["merge", "shortcut", "iteration", "d-shortcut", "d-shortcut"]
    assert doc["counts"] == {"merge": 1, "iteration": 1, "shortcut": 1, "d-shortcut": 2}
    assert doc["steps"][-1]["transitions"] == 1


def test_render_pairs_is_sorted():
    lines = render_pairs({((("B", 2),), (("B", 1),)), ((("A", 10),), (("A", 10),))})
    assert lines == sorted(lines)
