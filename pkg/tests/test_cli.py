import json

import pytest

from kundoku.automaton import run
from kundoku.cli import annotate_sentence, main
from kundoku.combinatorics import count_result
from kundoku.corpus import corpus_stats, load_corpus
from kundoku.model import parse_annotated, render_annotated

GOLDEN = "A B_レ C_レ D\nA_下 B_二 C D_一 E_上\nA_二-B C D_一\n"


@pytest.fixture
def golden(tmp_path):
    path = tmp_path / "golden.kmk"
    path.write_text(GOLDEN, encoding="utf-8")
    return path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_transduce_golden(golden, capsys):
    assert main(["transduce", "--in", str(golden)]) == 0
    assert capsys.readouterr().out.splitlines() == ["A D C B", "C D B E A", "C D A B"]


def test_transduce_json_matches_library(golden, capsys):
    assert main(["--json", "transduce", "--in", str(golden)]) == 0
    out = _json(capsys)
    for rec, line in zip(out, GOLDEN.splitlines()):
        result = run(parse_annotated(line))
        assert rec["accepted"] and rec["order"] == list(result.permutation.order)
        assert rec["reading"] == result.ordered.reading


def test_transduce_render_and_variants(capsys):
    text = "子 曰 溫_レ 故 而! 知_レ 新"
    assert main(["transduce", "--render", "--text", text]) == 0
    assert capsys.readouterr().out.strip() == "子 曰 故 溫 新 知\t子曰故温新知"
    assert main(["transduce", "--keep-variants", "--render", "--text", text]) == 0
    assert "溫" in capsys.readouterr().out.split("\t")[1]


def test_jobs_preserve_order(tmp_path, capsys):
    lines = [render_annotated(parse_annotated(GOLDEN.splitlines()[k % 3])) for k in range(40)]
    path = tmp_path / "many.kmk"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["transduce", "--in", str(path)]) == 0
    serial = capsys.readouterr().out
    assert main(["--jobs", "2", "transduce", "--in", str(path)]) == 0
    assert capsys.readouterr().out == serial
    assert main(["transduce", "--jobs", "2", "--in", str(path)]) == 0
    assert capsys.readouterr().out == serial


def test_transduce_trace_and_strict(capsys):
    assert main(["--json", "transduce", "--strict", "--trace", "--text", "A_レ B"]) == 0
    rec = _json(capsys)[0]
    assert rec["ambiguous"] is False and rec["trace"]


def test_validate_bad_file_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.kmk"
    path.write_text("A B_レ C_レ D\nA_二 B\n", encoding="utf-8")
    assert main(["validate", "--in", str(path)]) == 2
    out = capsys.readouterr().out
    assert "L2\tREJECT" in out and "pass rate: 50.00%" in out


def test_validate_json(golden, capsys):
    assert main(["validate", "--json", "--in", str(golden)]) == 0
    out = _json(capsys)
    assert out["pass_rate"] == 100 and out["total"] == 3


def test_malformed_notation_is_format_error_and_lenient_skips(tmp_path, capsys):
    path = tmp_path / "m.kmk"
    path.write_text("A_レ B\nA_?? B\n", encoding="utf-8")
    assert main(["validate", "--in", str(path)]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["--lenient", "validate", "--in", str(path)]) == 0
    captured = capsys.readouterr()
    assert "skipped" in captured.err and "pass rate: 100.00% (1/1)" in captured.out


def test_missing_file_exits_1(tmp_path, capsys):
    assert main(["validate", "--in", str(tmp_path / "nope.kmk")]) == 1
    assert main(["stats", "--in", str(tmp_path / "nope.jsonl")]) == 1


def test_usage_errors_exit_64(capsys):
    for argv in (["frobnicate"], ["count"], ["count", "--n", "3", "--bogus"], []):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 64
    assert "usage" in capsys.readouterr().err
    assert main(["count", "--n", "0"]) == 64
    assert main(["expressible", "0,0"]) == 64


def test_count_table(capsys):
    assert main(["count", "--n", "3", "--table"]) == 0
    last = capsys.readouterr().out.splitlines()[-1].split()
    assert last[:3] == ["3", "5", "6"] and last[-1] == "6"
    assert main(["--json", "count", "--n", "8"]) == 0
    assert _json(capsys) == count_result(8).as_dict()


def test_enumerate(capsys):
    assert main(["enumerate", "--n", "3"]) == 0
    lines = capsys.readouterr().out.split()
    assert len(lines) == 5 and "2,0,1" not in lines
    assert main(["--json", "enumerate", "--n", "3", "--groups"]) == 0
    assert len(_json(capsys)) == 6


def test_expressible(capsys):
    assert main(["expressible", "2,0,1"]) == 0
    assert capsys.readouterr().out.strip() == "2,0,1\texpressible\tA_レ-B C"
    assert main(["expressible", "--no-groups", "2,0,1"]) == 2
    capsys.readouterr()
    assert main(["--json", "expressible", "1,3,0,2"]) == 2
    rec = _json(capsys)[0]
    assert rec["expressible"] is False and len(rec["pattern"]) == 3


def test_align(tmp_path, capsys):
    assert main(["align", "--source", "子曰溫故而知新", "--translation", "子曰、故を温て新を知るは"]) == 0
    out = capsys.readouterr().out
    assert "order:\t子曰故溫新知" in out and "unread:\t而" in out
    kana = tmp_path / "kana.json"
    kana.write_text(json.dumps({"ず": "不"}, ensure_ascii=False), encoding="utf-8")
    assert main(["--json", "align", "--dict", str(kana), "--source", "不知", "--translation", "知らず"]) == 0
    assert _json(capsys)["order"] == [1, 0]
    assert main(["align", "--no-unread", "--source", "而知", "--translation", "知る"]) == 1


def test_annotate_pipeline(tmp_path, capsys):
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("子曰溫故而知新\t子曰、故を温て新を知るは\tanalects\n", encoding="utf-8")
    pos = tmp_path / "pos.jsonl"
    spans = [[0, 1, "PROPN"], [1, 2, "VERB"], [2, 3, "PUNCT"], [3, 4, "NOUN"], [4, 5, "ADP"],
             [5, 7, "VERB"], [7, 8, "NOUN"], [8, 9, "ADP"], [9, 11, "VERB"], [11, 12, "ADP"]]
    pos.write_text(json.dumps({"id": "analects", "spans": spans}) + "\n", encoding="utf-8")
    out = tmp_path / "out.jsonl"
    assert main(["annotate", "--in", str(pairs), "--pos", str(pos), "--out", str(out)]) == 0
    corpus = load_corpus(out)
    s = corpus.sentences[0]
    assert render_annotated(s) == "子 曰 溫_レ 故 而! 知_レ 新"
    lib = annotate_sentence("子曰溫故而知新", "子曰、故を温て新を知るは", pos_spans=spans, id="analects")
    assert s == lib
    result = run(s)
    assert result.ordered.rendered == "子曰故を温て新を知るは"


def test_evaluate_text_and_orders(tmp_path, capsys):
    gold = tmp_path / "gold.txt"
    gold.write_text("學而時習之\n子曰故溫\n", encoding="utf-8")
    assert main(["--json", "evaluate", "--pred", str(gold), "--gold", str(gold)]) == 0
    out = _json(capsys)
    assert out["bleu"] == out["chrf"] == out["rouge_l"] == out["ribes"] == 100
    orders = tmp_path / "o.txt"
    orders.write_text("0,1,2,3\n", encoding="utf-8")
    rev = tmp_path / "r.txt"
    rev.write_text("3,2,1,0\n", encoding="utf-8")
    assert main(["--json", "evaluate", "--orders", "--pred", str(rev), "--gold", str(orders)]) == 0
    out = _json(capsys)
    assert out["kendall_tau"] == -100 and out["pmr"] == 0
    assert main(["evaluate", "--orders", "--tau-normalized", "--pred", str(rev), "--gold", str(orders)]) == 0
    assert "kendall" in capsys.readouterr().out.lower()


def test_evaluate_marks_pass_rate(tmp_path, capsys):
    pred = tmp_path / "pred.kmk"
    pred.write_text("A B_レ C_レ D\nA_二 B\n", encoding="utf-8")
    gold = tmp_path / "gold.txt"
    gold.write_text("0,3,2,1\n0,1\n", encoding="utf-8")
    assert main(["--json", "evaluate", "--marks", "--orders", "--pred", str(pred), "--gold", str(gold)]) == 0
    out = _json(capsys)
    assert out["pass_rate"] == 50 and out["pmr"] == 100


def test_evaluate_mismatched_lengths(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    a.write_text("x\ny\nz\n", encoding="utf-8")
    b.write_text("x\ny\n", encoding="utf-8")
    assert main(["evaluate", "--pred", str(a), "--gold", str(b)]) == 1


def _corpus_file(tmp_path, n=20):
    path = tmp_path / "c.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            glyphs = "字" * (5 + i)
            fh.write(json.dumps({"id": f"s{i}", "source": glyphs,
                                 "okurigana": ["ヲ" if i % 9 else "ヺ"] + [""] * (len(glyphs) - 1)},
                                ensure_ascii=False) + "\n")
    return path


def test_stats_matches_library(tmp_path, capsys):
    path = _corpus_file(tmp_path)
    assert main(["--json", "stats", "--in", str(path)]) == 0
    assert _json(capsys) == corpus_stats(load_corpus(path)).as_dict()
    assert main(["stats", "--in", str(path)]) == 0
    assert "sentences\t20" in capsys.readouterr().out


def test_split(tmp_path, capsys):
    path = _corpus_file(tmp_path)
    out_dir = tmp_path / "splits"
    assert main(["--json", "split", "--in", str(path), "--seed", "1", "--out-dir", str(out_dir)]) == 0
    summary = _json(capsys)
    assert [summary[k]["sentences"] for k in ("train", "val", "test")] == [16, 2, 2]
    ids = [s.id for name in ("train", "val", "test") for s in load_corpus(out_dir / f"{name}.jsonl")]
    assert sorted(ids) == sorted(f"s{i}" for i in range(20))
    with pytest.raises(SystemExit):
        main(["split", "--in", str(path), "--out-dir", str(out_dir)])
    assert main(["split", "--in", str(path), "--seed", "1", "--ratios", "0.5,0.5", "--out-dir", str(out_dir)]) == 64


def test_reduce_labels(tmp_path, capsys):
    path = _corpus_file(tmp_path)
    applied = tmp_path / "applied.jsonl"
    assert main(["reduce-labels", "--in", str(path), "--field", "okurigana", "--apply", str(applied)]) == 0
    out = _json(capsys)
    assert out["okurigana"]["labels_before"] == 2 and out["okurigana"]["labels_after"] == 1
    assert all(s.chars[0].okurigana == "ヲ" for s in load_corpus(applied))


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
