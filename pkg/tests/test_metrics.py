import math
import random
import warnings

import pytest

from kundoku.automaton import transduce
from kundoku.markgen import annotate, reachable_orders
from kundoku.metrics import (EvalPair, MetricOptions, MetricsError, ShortOrderWarning, bleu_char, chrf, clean,
                             evaluate, kendall_tau_order, pmr, ribes, rouge_l_char)
from kundoku.model import Permutation, parse_annotated

from oracles import tau_by_pairs

IDENT = ["子曰故を温て新を知るは", "学びて時に之を習ふ", "朋有り遠方より来たる"]


def test_identity_scores_100():
    for metric in (bleu_char, chrf, rouge_l_char, ribes):
        assert metric(IDENT, IDENT) == pytest.approx(100)


def test_disjoint_scores_0():
    preds, refs = ["abcd"], ["wxyz"]
    assert bleu_char(preds, refs) < 1
    assert chrf(preds, refs) == 0
    assert rouge_l_char(preds, refs) == 0
    assert ribes(preds, refs) == 0


def test_bleu_hand_counts():
    # 1-grams 3/4, 2-grams 2/3, 3-grams 1/2, 4-grams 0/1 smoothed to 1/2, equal lengths
    expected = 100 * (3 / 4 * 2 / 3 * 1 / 2 * 1 / 2) ** 0.25
    assert bleu_char(["abcd"], ["abce"]) == pytest.approx(expected)
    assert round(bleu_char(["abcd"], ["abce"]), 2) == 59.46


def test_bleu_brevity_penalty():
    # all n-grams of "abc" match inside "abcd": precisions 1 except the empty 4-gram order
    got = bleu_char(["abc"], ["abcd"])
    p4 = 1 / 1  # 0 of 0 four-grams, smoothed (0+1)/(0+1)
    expected = 100 * math.exp(1 - 4 / 3) * (1 * 1 * 1 * p4) ** 0.25
    assert got == pytest.approx(expected)


def test_bleu_errors_and_empty_prediction():
    with pytest.raises(MetricsError):
        bleu_char(["a"], [])
    with pytest.raises(MetricsError):
        bleu_char([], [])
    assert bleu_char([""], ["abc"]) == 0


def test_chrf_hand_counts():
    # order 1: P 2/2, R 2/3; order 2: P 1/1, R 1/2; higher orders have no prediction n-grams
    p, r = 1.0, (2 / 3 + 1 / 2) / 2
    expected = 100 * 5 * p * r / (4 * p + r)
    assert chrf(["ab"], ["abc"]) == pytest.approx(expected)
    assert round(chrf(["ab"], ["abc"]), 2) == 63.64


def test_rouge_l():
    assert rouge_l_char(["ACBD"], ["ABCD"]) == pytest.approx(75)
    assert rouge_l_char([""], ["ABCD"]) == 0
    assert rouge_l_char(["AB", "AB"], ["AB", "CD"]) == pytest.approx(50)


def test_ribes_cases():
    assert ribes(["abcd"], ["abcd"]) == pytest.approx(100)
    assert ribes(["dcba"], ["abcd"]) == pytest.approx(0)
    tau = tau_by_pairs([0, 1, 3, 2], [0, 1, 2, 3])
    assert ribes(["abdc"], ["abcd"]) == pytest.approx(100 * (tau + 1) / 2)
    assert round(ribes(["abdc"], ["abcd"]), 2) == 83.33


def test_ribes_precision_and_brevity():
    # "abx" vs "abcd": aligned a, b in order (NKT 1), precision 2/3, BP exp(1 - 4/3)
    expected = 100 * (2 / 3) ** 0.25 * math.exp(1 - 4 / 3) ** 0.10
    assert ribes(["abx"], ["abcd"]) == pytest.approx(expected)


def test_ribes_single_alignment():
    assert ribes(["a"], ["a"]) == pytest.approx(100)
    assert ribes(["ax"], ["ab"]) == 0


def test_kendall_tau():
    assert kendall_tau_order([0, 1, 2, 3], [0, 1, 2, 3]) == 1
    assert kendall_tau_order([3, 2, 1, 0], [0, 1, 2, 3]) == -1
    assert kendall_tau_order([0, 1, 3, 2], [0, 1, 2, 3]) == pytest.approx(4 / 6)
    assert round(100 * kendall_tau_order([0, 1, 3, 2], [0, 1, 2, 3]), 2) == 66.67


def test_kendall_tau_against_pair_oracle():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randint(2, 9)
        gold = list(range(n))
        pred = gold[:]
        rng.shuffle(pred)
        rng.shuffle(gold)
        assert kendall_tau_order(pred, gold) == pytest.approx(tau_by_pairs(pred, gold))


def test_kendall_tau_matches_scipy():
    stats = pytest.importorskip("scipy.stats")
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(2, 10)
        pred = list(range(n))
        rng.shuffle(pred)
        gold_rank = list(range(n))
        pred_rank = [pred.index(x) for x in range(n)]
        assert kendall_tau_order(pred, list(range(n))) == pytest.approx(stats.kendalltau(pred_rank, gold_rank)[0])


def test_kendall_tau_properties():
    rng = random.Random(11)
    for _ in range(100):
        n = rng.randint(2, 8)
        pred, gold = list(range(n)), list(range(n))
        rng.shuffle(pred)
        rng.shuffle(gold)
        relabel = list(range(n))
        rng.shuffle(relabel)
        tau = kendall_tau_order(pred, gold)
        assert kendall_tau_order([relabel[x] for x in pred], [relabel[x] for x in gold]) == pytest.approx(tau)
        assert kendall_tau_order(pred[::-1], gold) == pytest.approx(-tau)


def test_kendall_short_order_warns():
    with pytest.warns(ShortOrderWarning):
        assert kendall_tau_order([0], [0]) == 1
    with pytest.raises(MetricsError):
        kendall_tau_order([0, 1], [0, 2])


def test_pmr():
    assert pmr([([0, 1], [0, 1])] * 4) == 100
    assert pmr([([0, 1], [0, 1]), ([1, 0], [0, 1])]) == 50
    three = [([0, 1], [0, 1]), ([1, 0], [1, 0]), ([1, 0], [0, 1])]
    assert pmr(three) == pytest.approx(66.67, abs=0.01)


def test_punctuation_stripped_by_default():
    assert clean("子曰、故を 温て。") == list("子曰故を温て")
    assert bleu_char(["子曰、故"], ["子曰故"]) == pytest.approx(100)
    assert bleu_char(["子曰、故"], ["子曰故"], keep_punct=True) < 100


def _order_pairs(n, k, seed):
    rng = random.Random(seed)
    pairs = []
    for i in range(k):
        gold = list(range(n))
        pred = gold[:]
        rng.shuffle(pred)
        pairs.append(EvalPair(id=str(i), pred_order=Permutation(tuple(pred)), gold_order=Permutation(tuple(gold))))
    return pairs


def test_evaluate_gold_as_prediction():
    pairs = [EvalPair(id=str(i), prediction=t, reference=t, pred_order=Permutation((0, 1, 2)),
                      gold_order=Permutation((0, 1, 2))) for i, t in enumerate(IDENT)]
    report = evaluate(pairs)
    for name in ("bleu", "chrf", "rouge_l", "ribes", "kendall_tau", "pmr"):
        assert getattr(report, name) == pytest.approx(100), name
    assert report.pass_rate is None and report.bertscore is None
    assert report.counts["bleu"] == 3


def test_evaluate_reversal_tau():
    pairs = [EvalPair(pred_order=Permutation((3, 2, 1, 0)), gold_order=Permutation((0, 1, 2, 3)))]
    report = evaluate(pairs)
    assert report.kendall_tau == pytest.approx(-100)
    assert evaluate(pairs, MetricOptions(tau_normalized=True)).kendall_tau == pytest.approx(0)


def test_evaluate_pass_rate_one_rejected_in_twenty():
    good = [parse_annotated("A B_レ C_レ D", id=str(i)) for i in range(19)]
    bad = parse_annotated("A_二 B", id="bad")
    report = evaluate([EvalPair(annotation=s) for s in good + [bad]])
    assert report.pass_rate == pytest.approx(95)


def test_evaluate_markgen_round_trip_predictions():
    pairs = []
    for i, perm in enumerate(sorted(reachable_orders(5, True))[:60]):
        s = annotate(list("ABCDE"), perm, id=str(i))
        pred = transduce(s)[0]
        pairs.append(EvalPair(id=str(i), pred_order=pred, gold_order=Permutation(perm), annotation=s))
    report = evaluate(pairs)
    assert report.pmr == 100 and report.pass_rate == 100


def test_evaluate_counts_short_orders_and_bertscore():
    pairs = [EvalPair(pred_order=Permutation((0,)), gold_order=Permutation((0,)), bertscore=80.0),
             EvalPair(pred_order=Permutation((1, 0)), gold_order=Permutation((0, 1)), bertscore=60.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        report = evaluate(pairs)
    assert report.short_orders == 1
    assert report.kendall_tau == pytest.approx(0)
    assert report.bertscore == pytest.approx(70)


def test_evaluate_nothing_computable():
    with pytest.raises(MetricsError):
        EvalPair(id="x", prediction="a")
    with pytest.raises(MetricsError):
        evaluate([])


def test_corpus_scores_ignore_sentence_order():
    preds = ["子曰故を温て", "学びて時に習ふ", "朋来たる"]
    refs = ["子曰故を温て新", "学びて時に之を習ふ", "朋有り遠方より来たる"]
    perm = [2, 0, 1]
    for metric in (bleu_char, chrf, rouge_l_char, ribes):
        assert metric(preds, refs) == pytest.approx(metric([preds[i] for i in perm], [refs[i] for i in perm]))


def test_appending_identity_pair_keeps_100():
    for metric in (bleu_char, chrf):
        assert metric(IDENT + ["朋"], IDENT + ["朋"]) == pytest.approx(100)


def test_pmr_bounded_by_perfect_tau():
    pairs = _order_pairs(3, 40, seed=2)
    report = evaluate(pairs)
    perfect = sum(kendall_tau_order(p.pred_order, p.gold_order) == 1 for p in pairs)
    assert report.pmr <= 100 * perfect / len(pairs) + 1e-9


def test_report_formatting():
    report = evaluate([EvalPair(prediction="ab", reference="abc")])
    d = report.as_dict()
    assert d["chrf"] == 63.64
    assert "chrF" in report.table()
