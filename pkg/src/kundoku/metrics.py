"""Character-level scores for translations and reading orders.

String metrics (BLEU, chrF, ROUGE-L, RIBES) compare Japanese sentences
character by character after whitespace and punctuation are removed.  Order
metrics (Kendall's tau, PMR) compare permutations of source indices.  All
corpus scores are on a 0..100 scale except tau, which spans -100..100.
"""

from __future__ import annotations

import math
import unicodedata
import warnings
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

from .errors import KundokuError
from .model import AnnotatedSentence, Permutation, split_glyphs


class MetricsError(KundokuError, ValueError):
    pass


class ShortOrderWarning(UserWarning):
    """Kendall's tau of fewer than two items, scored as a perfect 1."""


@dataclass(frozen=True)
class MetricOptions:
    bleu_max_n: int = 4
    chrf_order: int = 6
    chrf_beta: float = 2.0
    ribes_alpha: float = 0.25
    ribes_beta: float = 0.10
    keep_punct: bool = False
    tau_normalized: bool = False  # report (tau + 1) / 2 instead of raw tau


@dataclass
class EvalPair:
    id: str = ""
    prediction: Optional[str] = None
    reference: Optional[str] = None
    pred_order: Optional[Permutation] = None
    gold_order: Optional[Permutation] = None
    annotation: Optional[AnnotatedSentence] = None  # predicted marks, scored by the automaton
    bertscore: Optional[float] = None  # computed elsewhere, averaged as given

    def __post_init__(self):
        has_text = self.prediction is not None and self.reference is not None
        has_order = self.pred_order is not None and self.gold_order is not None
        if not (has_text or has_order or self.annotation is not None or self.bertscore is not None):
            raise MetricsError(f"pair {self.id!r} has neither a string pair nor an order pair")


@dataclass
class MetricsReport:
    bleu: Optional[float] = None
    chrf: Optional[float] = None
    bertscore: Optional[float] = None
    rouge_l: Optional[float] = None
    ribes: Optional[float] = None
    kendall_tau: Optional[float] = None
    pmr: Optional[float] = None
    pass_rate: Optional[float] = None
    counts: dict = field(default_factory=dict)
    short_orders: int = 0  # sentences whose tau used the n < 2 convention

    SCORES = ("bleu", "chrf", "bertscore", "rouge_l", "ribes", "kendall_tau", "pmr", "pass_rate")

    def as_dict(self, digits: Optional[int] = 2) -> dict:
        out = {}
        for name in self.SCORES:
            v = getattr(self, name)
            out[name] = round(v, digits) if v is not None and digits is not None else v
        out["counts"] = dict(self.counts)
        out["short_orders"] = self.short_orders
        return out

    def table(self) -> str:
        labels = {"bleu": "BLEU", "chrf": "chrF", "bertscore": "BERTScore", "rouge_l": "ROUGE-L",
                  "ribes": "RIBES", "kendall_tau": "Kendall tau", "pmr": "PMR", "pass_rate": "Pass rate"}
        rows = []
        for name in self.SCORES:
            v = getattr(self, name)
            if v is not None:
                rows.append(f"{labels[name]:<12}{v:>8.2f}  (n={self.counts.get(name, 0)})")
        return "\n".join(rows)


# --- preprocessing ----------------------------------------------------------

def _is_punct(ch: str) -> bool:
    return ch.isspace() or unicodedata.category(ch[0]).startswith("P")


def clean(text: str, keep_punct: bool = False) -> list[str]:
    """Glyph list with whitespace and punctuation removed (whitespace only with ``keep_punct``)."""
    glyphs = split_glyphs(text)
    if keep_punct:
        return [g for g in glyphs if not g.isspace()]
    return [g for g in glyphs if not _is_punct(g)]


def _ngrams(chars: Sequence[str], n: int) -> Counter:
    return Counter(tuple(chars[i:i + n]) for i in range(len(chars) - n + 1))


def _check_lists(preds: Sequence, refs: Sequence) -> None:
    if len(preds) != len(refs):
        raise MetricsError(f"{len(preds)} predictions for {len(refs)} references")
    if not refs:
        raise MetricsError("empty corpus")


# --- string metrics ---------------------------------------------------------

def bleu_char(preds: Sequence[str], refs: Sequence[str], max_n: int = 4, keep_punct: bool = False) -> float:
    """Corpus BLEU over character n-grams.

    An order n >= 2 with no matches is smoothed to ``(0 + 1) / (total + 1)``.
    """
    _check_lists(preds, refs)
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for pred, ref in zip(preds, refs):
        h, r = clean(pred, keep_punct), clean(ref, keep_punct)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hg, rg = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum((hg & rg).values())
            totals[n - 1] += sum(hg.values())
    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_p = 0.0
    for n in range(max_n):
        m, t = matches[n], totals[n]
        if m == 0:
            m, t = 1, t + 1
        log_p += math.log(m / t) / max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100 * bp * math.exp(log_p)


def chrf(preds: Sequence[str], refs: Sequence[str], n: int = 6, beta: float = 2.0,
         keep_punct: bool = False) -> float:
    """chrF from corpus-level n-gram counts, orders 1..n.

    Precision and recall are each averaged over the orders for which both
    sides have n-grams, then combined into F-beta.
    """
    _check_lists(preds, refs)
    matches = [0] * n
    hyp_tot = [0] * n
    ref_tot = [0] * n
    for pred, ref in zip(preds, refs):
        h, r = clean(pred, keep_punct), clean(ref, keep_punct)
        for k in range(1, n + 1):
            hg, rg = _ngrams(h, k), _ngrams(r, k)
            matches[k - 1] += sum((hg & rg).values())
            hyp_tot[k - 1] += sum(hg.values())
            ref_tot[k - 1] += sum(rg.values())
    orders = [k for k in range(n) if hyp_tot[k] and ref_tot[k]]
    if not orders:
        return 0.0
    p = sum(matches[k] / hyp_tot[k] for k in orders) / len(orders)
    r = sum(matches[k] / ref_tot[k] for k in orders) / len(orders)
    if p + r == 0:
        return 0.0
    b2 = beta * beta
    return 100 * (1 + b2) * p * r / (b2 * p + r)


def lcs_length(a: Sequence, b: Sequence) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_char(preds: Sequence[str], refs: Sequence[str], keep_punct: bool = False) -> float:
    """Mean sentence-level F1 of the character LCS."""
    _check_lists(preds, refs)
    total = 0.0
    for pred, ref in zip(preds, refs):
        h, r = clean(pred, keep_punct), clean(ref, keep_punct)
        if not h or not r:
            total += 1.0 if h == r else 0.0
            continue
        lcs = lcs_length(h, r)
        if lcs:
            p, rc = lcs / len(h), lcs / len(r)
            total += 2 * p * rc / (p + rc)
    return 100 * total / len(refs)


def _aligned_positions(h: Sequence[str], r: Sequence[str]) -> list[int]:
    """Reference positions of the aligned hypothesis characters, in hypothesis order."""
    from .align import align

    if not h or not r:
        return []
    alignment = align(list(h), "".join(r), fold_variants=False)
    return [pos for _, pos in sorted(alignment.mapping)]


def _tau(seq: Sequence[int]) -> float:
    pairs = len(seq) * (len(seq) - 1) // 2
    concordant = sum(1 for a, b in combinations(seq, 2) if a < b)
    return (2 * concordant - pairs) / pairs


def ribes_sentence(h: Sequence[str], r: Sequence[str], alpha: float = 0.25, beta_exp: float = 0.10) -> float:
    if not h or not r:
        return 1.0 if h == r else 0.0
    positions = _aligned_positions(h, r)
    if len(positions) < 2:
        nkt = 1.0 if list(h) == list(r) else 0.0
    else:
        nkt = (_tau(positions) + 1) / 2
    precision = len(positions) / len(h)
    bp = min(1.0, math.exp(1 - len(r) / len(h)))
    return nkt * precision ** alpha * bp ** beta_exp


def ribes(preds: Sequence[str], refs: Sequence[str], alpha: float = 0.25, beta_exp: float = 0.10,
          keep_punct: bool = False) -> float:
    """Mean sentence RIBES: NKT x unigram precision^alpha x brevity penalty^beta_exp."""
    _check_lists(preds, refs)
    total = sum(ribes_sentence(clean(p, keep_punct), clean(r, keep_punct), alpha, beta_exp)
                for p, r in zip(preds, refs))
    return 100 * total / len(refs)


# --- order metrics ----------------------------------------------------------

def _order(p) -> tuple:
    return tuple(p.order if isinstance(p, Permutation) else p)


def kendall_tau_order(pred, gold) -> float:
    """Kendall's tau between two orderings of the same indices, in [-1, 1]."""
    pred, gold = _order(pred), _order(gold)
    if sorted(pred) != sorted(gold):
        raise MetricsError(f"orders cover different indices: {list(pred)} vs {list(gold)}")
    if len(pred) < 2:
        warnings.warn("Kendall's tau of fewer than 2 items is taken as 1", ShortOrderWarning, stacklevel=2)
        return 1.0
    rank = {x: i for i, x in enumerate(gold)}
    return _tau([rank[x] for x in pred])


def pmr(pairs: Sequence[tuple]) -> float:
    """Percentage of (pred, gold) order pairs that match exactly."""
    if not pairs:
        raise MetricsError("empty corpus")
    return 100 * sum(_order(p) == _order(g) for p, g in pairs) / len(pairs)


def evaluate(pairs: Sequence[EvalPair], options: MetricOptions = MetricOptions()) -> MetricsReport:
    """Every metric whose inputs are present in ``pairs``."""
    report = MetricsReport()
    text = [p for p in pairs if p.prediction is not None and p.reference is not None]
    if text:
        preds = [p.prediction for p in text]
        refs = [p.reference for p in text]
        kp = options.keep_punct
        report.bleu = bleu_char(preds, refs, options.bleu_max_n, kp)
        report.chrf = chrf(preds, refs, options.chrf_order, options.chrf_beta, kp)
        report.rouge_l = rouge_l_char(preds, refs, kp)
        report.ribes = ribes(preds, refs, options.ribes_alpha, options.ribes_beta, kp)
        for name in ("bleu", "chrf", "rouge_l", "ribes"):
            report.counts[name] = len(text)

    orders = [p for p in pairs if p.pred_order is not None and p.gold_order is not None]
    if orders:
        taus = []
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ShortOrderWarning)
            for p in orders:
                taus.append(kendall_tau_order(p.pred_order, p.gold_order))
        report.short_orders = sum(issubclass(w.category, ShortOrderWarning) for w in caught)
        if options.tau_normalized:
            taus = [(t + 1) / 2 for t in taus]
        report.kendall_tau = 100 * sum(taus) / len(taus)
        report.pmr = pmr([(p.pred_order, p.gold_order) for p in orders])
        report.counts["kendall_tau"] = report.counts["pmr"] = len(orders)

    annotated = [p.annotation for p in pairs if p.annotation is not None]
    if annotated:
        from .automaton import pass_rate

        report.pass_rate = 100 * pass_rate(annotated)
        report.counts["pass_rate"] = len(annotated)

    scored = [p.bertscore for p in pairs if p.bertscore is not None]
    if scored:
        report.bertscore = sum(scored) / len(scored)
        report.counts["bertscore"] = len(scored)

    if not report.counts:
        raise MetricsError("no metric can be computed from the given pairs")
    return report
