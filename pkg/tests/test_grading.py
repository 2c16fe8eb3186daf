import pytest
from hypothesis import given
from hypothesis import strategies as st

from tttbench.dataset import make_item
from tttbench.engine import GameState
from tttbench.grading import (
    EvalRecord,
    GradingError,
    Report,
    aggregate,
    delta_pass1,
    delta_rows,
    extract_answer,
    read_reference_scores,
    score_item,
    to_csv,
)


@pytest.mark.parametrize(
    "text,want",
    [
        ("so the answer is \\boxed{G}", "G"),
        ("\\boxed{A} ... wait, actually \\boxed{ I }", "I"),
        ("\\boxed{\\text{H}}", "H"),
        ("\\boxed{\\textbf{c}}.", "C"),
        ("$\\boxed{J}$", "J"),
        ("\\boxed{(D)}", "D"),
        ("\\boxed{G, I}", None),
        ("\\boxed{Z}", None),
        ("\\boxed{}", None),
        ("no box here: G", None),
        ("\\boxed{G", None),
        ("\\boxed{E} then \\boxed{F", "E"),
        ("", None),
        (None, None),
    ],
)
def test_extract_answer(text, want):
    assert extract_answer(text) == want


@given(st.text(max_size=200))
def test_extract_never_raises(text):
    out = extract_answer(text)
    assert out is None or (len(out) == 1 and "A" <= out <= "Y")


def _recs(item, answers):
    return [EvalRecord(item.item_id, i + 1, f"\\boxed{{{a}}}" if a else "unsure") for i, a in enumerate(answers)]


def test_pass1_half():
    item = make_item(GameState("dTTT", tuple("IJFLBH")))
    assert score_item(item, _recs(item, ["C"] * 8 + ["A"] * 8)) == 0.5


def test_any_of_credit():
    item = make_item(GameState("oTTT", tuple("ABHC")))
    assert item.solutions == ["G", "I"]
    assert score_item(item, _recs(item, ["G", "I", "E", None])) == 0.5


def test_unparseable_scores_zero():
    item = make_item(GameState("oTTT", tuple("ABHC")))
    recs = [EvalRecord(item.item_id, 1, "I think G"), EvalRecord(item.item_id, 2, "\\boxed{G")]
    assert score_item(item, recs) == 0.0
    assert all(r.extracted_answer is None for r in recs)


def test_score_item_errors():
    item = make_item(GameState("oTTT", tuple("ABHC")))
    with pytest.raises(GradingError):
        score_item(item, [])
    with pytest.raises(GradingError):
        score_item(item, [EvalRecord("other", 1, "")])


def test_aggregate():
    a = make_item(GameState("oTTT", tuple("ABHC")))
    b = make_item(GameState("dTTT", tuple("IJFLBH")), index=1)
    c = make_item(GameState("dTTT", tuple("IGJKDAM")), index=2)
    recs = _recs(a, ["G", "X", "I", "I"]) + _recs(b, ["C", "C", "C", "C"]) + _recs(c, ["A", "B", "C", "D"])
    for r in recs[8:]:
        r.response_tokens = 10 * r.sample_index
    rep = aggregate(recs, [a, b, c], model="m")
    assert rep.items == {a.item_id: 0.75, b.item_id: 1.0, c.item_id: 0.25}
    assert rep.tasks == {"oTTT": 0.75, "dTTT": 0.625}
    assert rep.verdicts["dTTT"] == {"Win": 1.0, "Fork": 0.25}
    assert rep.lengths["dTTT"]["tokens_mean"] == 25.0
    assert rep.lengths["oTTT"]["tokens_mean"] is None
    assert rep.table4_row() == {"model": "m", "oTTT": 75.0, "dTTT": 62.5, "cTTT": None, "sTTT": None}
    assert rep.table5_row()["dTTT/Fork"] == 25.0
    assert Report.from_dict(rep.to_dict()) == rep


def test_aggregate_reports_missing_and_unknown():
    a = make_item(GameState("oTTT", tuple("ABHC")))
    b = make_item(GameState("dTTT", tuple("IJFLBH")), index=1)
    rep = aggregate(_recs(a, ["G"]), [a, b])
    assert rep.missing_items == [b.item_id]
    with pytest.raises(GradingError):
        aggregate([EvalRecord("nope", 1, "")], [a])


def test_self_scoring_is_perfect():
    items = [make_item(GameState(g, tuple(m)), index=i)
             for i, (g, m) in enumerate([("oTTT", "ABCGD"), ("dTTT", "IGJKDAM"), ("cTTT", "ABCIEK"), ("sTTT", "ADBKHU")])]  # fmt: skip
    recs = [EvalRecord(it.item_id, 1, f"\\boxed{{{s}}}") for it in items for s in it.solutions[:1]]
    rep = aggregate(recs, items)
    assert set(rep.items.values()) == {1.0}


def test_reference_table_deltas():
    ref = read_reference_scores()
    assert len(ref) == 26
    qwq = ref["QwQ-32B"]
    d = delta_pass1(qwq, qwq, [("oTTT", "MATH500"), ("oTTT", "AIME2024")])
    assert d[("oTTT", "MATH500")] == pytest.approx(-2.97, abs=0.01)
    assert d[("oTTT", "AIME2024")] == pytest.approx(12.86, abs=0.01)
    with pytest.raises(KeyError):
        delta_pass1(qwq, qwq, [("xTTT", "MATH500")])


def test_reference_table_averages():
    ref = read_reference_scores()
    tasks = ("oTTT", "dTTT", "cTTT", "sTTT")
    task_scores = {m: {t: s[t] for t in tasks} for m, s in ref.items()}
    rows = delta_rows(task_scores, ref)
    math = [r["delta"] for r in rows if r["benchmark"] == "MATH500"]
    assert len(rows) == 26 * 8
    assert sum(math) / len(math) == pytest.approx(-41.36, abs=0.01)


def test_reference_csv_errors(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("model,benchmark,pass1\nm,MATH500,abc\n", encoding="utf-8")
    with pytest.raises(GradingError):
        read_reference_scores(p)


def test_to_csv():
    assert to_csv([]) == ""
    assert to_csv([{"a": 1, "b": None}]) == "a,b\n1,\n"
