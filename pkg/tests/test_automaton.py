import itertools

import pytest
from hypothesis import given, settings

from kundoku.automaton import (RULES, State, Unit, Z0, MachineConfig, flatten_input, is_accepting, pass_rate, run,
                               step, transduce)
from kundoku.errors import InvalidAnnotationError, SearchLimitExceeded
from kundoku.model import E, RE, AnnotatedChar, AnnotatedSentence, Order, parse_annotated

from oracles import SLOTS, naive_read, sentences

GOLDEN = [
    ("A B_レ C_レ D", "ADCB"),
    ("A_二 B_下 C D_上 E_一", "CDBEA"),
    ("A_二-B C D_一", "CDAB"),
]


def test_fifteen_rules_with_split_branch():
    assert len(RULES) == 16  # d6 is written as its two branches
    assert {"d6a", "d6b"} <= set(RULES)


@pytest.mark.parametrize("text,reading", GOLDEN)
def test_golden(text, reading):
    perm, ordered = transduce(parse_annotated(text))
    assert ordered.reading == reading


def test_flatten_golden_top():
    tape = flatten_input(parse_annotated("A B_レ C_レ D"))
    assert [str(s) for s in tape] == ["A", "E", "B", "レ", "C", "レ", "D", "E"]


def test_flatten_groups_are_one_unit():
    tape = flatten_input(parse_annotated("A_二-B C D_一"))
    assert tape[0] == Unit((0, 1), "AB")
    assert tape[1] == Order(1, 2)
    assert [str(s) for s in tape] == ["AB", "O1,2", "C", "E", "D", "O1,1"]


def test_flatten_single_char_and_silent():
    assert [str(s) for s in flatten_input(parse_annotated("A"))] == ["A", "E"]
    tape = flatten_input(parse_annotated("A 而! B"))
    assert tape.silent == (1,)
    assert [str(s) for s in tape] == ["A", "E", "B", "E"]


def _config(stack, cursor=0, state=State.Q0):
    return MachineConfig(state, (Z0,) + tuple(stack), cursor, ())


def test_step_pushes_re():
    tape = [RE]
    moves = step(_config([Unit((0,), "A")]), tape)
    assert [m.rule for m in moves] == ["d3"]
    assert moves[0].config.stack[-1] == RE and moves[0].emitted is None


def test_step_emits_on_e():
    a = Unit((0,), "A")
    moves = step(_config([a]), [E])
    assert [m.rule for m in moves] == ["d4"]
    assert moves[0].config.state is State.Q1 and moves[0].emitted == a


def test_step_first_order_branches_push_first():
    moves = step(_config([Unit((0,), "A")]), [Order(1, 1)])
    assert [m.rule for m in moves] == ["d6a", "d6b"]
    assert [m.config.state for m in moves] == [State.Q0, State.Q2]


def test_step_char_over_first_order_traps():
    moves = step(_config([Unit((0,), "A"), Order(1, 1)]), [Unit((1,), "B")])
    assert [m.rule for m in moves] == ["d2"]
    assert moves[0].config.state is State.Q3
    assert step(moves[0].config, [Unit((1,), "B")]) == []


def test_accepting_requires_bottom_only():
    tape = []
    assert not is_accepting(_config([Unit((0,), "A")], state=State.Q4), tape)
    assert is_accepting(_config([], state=State.Q4), tape)


def test_run_rejects_with_reason_and_trace():
    r = run(parse_annotated("A_二 B"))
    assert not r.accepted and r.permutation is None
    assert "unresolved" in r.failure_reason
    assert r.trace.steps


def test_verbatim_table_reads_unpaired_ichi():
    # the pop branch of the O(i,1) rule lets a 一 without a partner through
    r = run(parse_annotated("A_一 B"))
    assert r.accepted and r.permutation.order == (0, 1)


def test_trailing_re_rejected():
    # nothing follows to release the レ
    assert not run(parse_annotated("A_一レ")).accepted
    assert not run(parse_annotated("A B_レ")).accepted


def test_transduce_raises_with_trace():
    with pytest.raises(InvalidAnnotationError) as info:
        transduce(parse_annotated("A_レ"))
    assert info.value.trace is not None and not info.value.trace.accepted


def test_transduce_group_expands_in_source_order():
    perm, ordered = transduce(parse_annotated("A_二-B C D_一"))
    assert perm.order == (2, 3, 0, 1)


def test_unmarked_is_identity():
    assert transduce(parse_annotated("ABC"))[0].order == (0, 1, 2)


def test_re_beneath_resolved_group_path():
    # the q2 rule that pops onto a レ is exercised by this sentence
    r = run(parse_annotated("A_レ B_二 C D_一"))
    assert r.accepted and r.ordered.reading == "CDBA"
    assert "d14" in [rule for _, rule, _ in r.trace.steps]


def test_duplicate_glyphs_keep_source_indices():
    perm, ordered = transduce(parse_annotated("之 之_レ 之"))
    assert perm.order == (0, 2, 1)


def test_crossing_orders_rejected():
    assert not run(parse_annotated("A_二 B_上 C_一 D_下")).accepted


def test_pass_rate():
    golden = [parse_annotated(t) for t, _ in GOLDEN]
    assert pass_rate(golden) == 1.0
    assert pass_rate([golden[0], parse_annotated("A_二 B")]) == 0.5
    with pytest.raises(ValueError):
        pass_rate([])


def test_search_limit():
    with pytest.raises(SearchLimitExceeded):
        run(parse_annotated("A B_レ C_レ D"), max_configs=3)


def test_strict_mode_flags_no_ambiguity_on_golden_sentences():
    for text, reading in GOLDEN:
        r = run(parse_annotated(text), strict=True)
        assert r.ambiguous is False and len(r.outputs) == 1


def test_trace_to_dict_is_json_ready():
    import json
    r = run(parse_annotated("A B_レ"))
    d = r.trace.to_dict()
    assert json.loads(json.dumps(d, ensure_ascii=False)) == d
    assert d["steps"][0]["config"]["state"] == "q0"


def test_deterministic():
    s = parse_annotated("A_二 B_下 C D_上 E_一")
    assert {run(s).permutation.order for _ in range(5)} == {(2, 3, 1, 4, 0)}


# --- agreement with the plain-language simulator -----------------------------

def _sentence(slots):
    return AnnotatedSentence(tuple(AnnotatedChar(chr(65 + i), marks=m) for i, m in enumerate(slots)))


def _check_agreement(s):
    r = run(s, strict=True)
    expected = naive_read(s)
    assert (list(r.permutation.order) if r.accepted else None) == expected, s
    if r.accepted:
        assert sorted(r.permutation.order) == [i for i, c in enumerate(s.chars) if not c.silent]
        assert not r.ambiguous


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_agreement_exhaustive(n):
    slots = SLOTS[:10]
    for combo in itertools.product(slots, repeat=n):
        _check_agreement(_sentence(combo))


@settings(max_examples=400, deadline=None)
@given(sentences(min_size=5, max_size=6, distinct=True))
def test_agreement_sampled_with_groups_and_silent(s):
    _check_agreement(s)
