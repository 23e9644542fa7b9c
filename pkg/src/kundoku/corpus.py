"""Corpus files: loading with per-line diagnostics, statistics, label reduction, splits.

Three input formats are read, one sentence per line:

* ``jsonl``: records with ``id, source, marks, groups, silent, okurigana,
  particle, translation``;
* ``tsv``: ``source<TAB>translation`` with no marks yet;
* ``mark``: mark notation, optionally followed by ``<TAB>translation``.

Splits shuffle with Python's ``random.Random(seed)`` (Mersenne Twister
MT19937) so they reproduce wherever that generator is available.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from rapidfuzz.distance import Levenshtein

from .errors import CorpusError, KundokuError
from .model import (AnnotatedChar, AnnotatedSentence, display_codes, parse_annotated,
                    render_annotated, sentence_from_record, sentence_to_record, split_glyphs)

FORMATS = ("jsonl", "tsv", "mark")
LABEL_FIELDS = ("okurigana", "particle", "kaeriten")
BUCKETS = ((10, "<=10"), (20, "11-20"), (30, "21-30"), (None, ">30"))

# The dataset is not redistributed; users fetch it and point this env var at it.
DATASET_ENV = "KUNDOKU_DATASET"
DATASET_SHA256: Optional[str] = None  # fill in once a canonical release is published


@dataclass
class Corpus:
    sentences: list = field(default_factory=list)
    provenance: str = ""
    diagnostics: list = field(default_factory=list)  # CorpusError per skipped line (lenient mode)

    def __post_init__(self):
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise CorpusError(f"duplicate sentence id {s.id!r}")
            seen.add(s.id)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def label_stats(self) -> dict[str, Counter]:
        return label_counts(self.sentences)


def kaeriten_labels(s: AnnotatedSentence) -> list[str]:
    return ["".join(codes) for codes in display_codes([c.marks for c in s.chars])]


def label_counts(sentences: Iterable[AnnotatedSentence]) -> dict[str, Counter]:
    """Frequencies of non-empty okurigana, particle and Kaeriten labels."""
    stats = {name: Counter() for name in LABEL_FIELDS}
    for s in sentences:
        for c, mark in zip(s.chars, kaeriten_labels(s)):
            if c.okurigana:
                stats["okurigana"][c.okurigana] += 1
            if c.particle:
                stats["particle"][c.particle] += 1
            if mark:
                stats["kaeriten"][mark] += 1
    return stats


# --- reading ----------------------------------------------------------------

def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    if suffix == ".tsv":
        return "tsv"
    return "mark"


def parse_line(line: str, fmt: str, lineno: int) -> Optional[AnnotatedSentence]:
    """One sentence from one line, ``None`` for blank lines and ``#`` comments."""
    text = line.rstrip("\r\n")
    if not text.strip() or (fmt != "jsonl" and text.lstrip().startswith("#")):
        return None
    default_id = f"L{lineno}"
    try:
        if fmt == "jsonl":
            try:
                rec = json.loads(text)
            except json.JSONDecodeError as e:
                raise CorpusError(f"invalid JSON: {e.msg}", lineno) from None
            if not isinstance(rec, dict):
                raise CorpusError("record is not a JSON object", lineno)
            rec.setdefault("id", default_id)
            return sentence_from_record(rec)
        if fmt == "tsv":
            cols = text.split("\t")
            if len(cols) < 2:
                raise CorpusError("expected source<TAB>translation", lineno)
            glyphs = split_glyphs(cols[0].strip())
            if not glyphs:
                raise CorpusError("empty source", lineno)
            sid = cols[2].strip() if len(cols) > 2 and cols[2].strip() else default_id
            return AnnotatedSentence(tuple(AnnotatedChar(g) for g in glyphs), id=sid,
                                     translation=cols[1].strip())
        if fmt == "mark":
            notation, _, translation = text.partition("\t")
            return parse_annotated(notation, id=default_id, translation=translation.strip() or None)
    except CorpusError:
        raise
    except (KundokuError, ValueError, TypeError, KeyError) as e:
        raise CorpusError(str(e), lineno) from None
    raise ValueError(f"unknown corpus format {fmt!r}; expected one of {FORMATS}")


def iter_corpus(lines: Iterable[str], fmt: str = "jsonl", lenient: bool = False,
                errors: Optional[list] = None) -> Iterator[AnnotatedSentence]:
    """Stream sentences; in lenient mode bad lines are appended to ``errors`` and skipped."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {FORMATS}")
    for lineno, line in enumerate(lines, 1):
        try:
            s = parse_line(line, fmt, lineno)
        except CorpusError as e:
            if not lenient:
                raise
            if errors is not None:
                errors.append(e)
            continue
        if s is not None:
            yield s


def load_corpus(path, format: Optional[str] = None, lenient: bool = False) -> Corpus:
    fmt = format or infer_format(path)
    errors: list = []
    with open(path, encoding="utf-8") as fh:
        sentences = list(iter_corpus(fh, fmt, lenient, errors))
    seen: dict[str, int] = {}
    unique = []
    for s in sentences:
        if s.id in seen:
            err = CorpusError(f"duplicate sentence id {s.id!r}")
            if not lenient:
                raise err
            errors.append(err)
            continue
        seen[s.id] = 1
        unique.append(s)
    return Corpus(unique, provenance=f"{path} ({fmt})", diagnostics=errors)


def format_sentence(s: AnnotatedSentence, fmt: str = "jsonl") -> str:
    if fmt == "jsonl":
        return json.dumps(sentence_to_record(s), ensure_ascii=False)
    if fmt == "mark":
        line = render_annotated(s)
        return f"{line}\t{s.translation}" if s.translation else line
    if fmt == "tsv":
        return f"{s.source_text}\t{s.translation or ''}\t{s.id}"
    raise ValueError(f"unknown corpus format {fmt!r}")


def save_corpus(corpus: Union[Corpus, Sequence[AnnotatedSentence]], path, format: str = "jsonl") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(format_sentence(s, format) + "\n")


# --- statistics -------------------------------------------------------------

@dataclass
class StatsReport:
    sentences: int
    characters: int
    buckets: dict
    label_space: dict  # field -> number of distinct labels

    def as_dict(self) -> dict:
        return {"sentences": self.sentences, "characters": self.characters,
                "buckets": dict(self.buckets), "label_space": dict(self.label_space)}


def bucket_of(length: int) -> str:
    for bound, name in BUCKETS:
        if bound is None or length <= bound:
            return name
    raise AssertionError("unreachable")


def corpus_stats(corpus: Iterable[AnnotatedSentence]) -> StatsReport:
    buckets = {name: 0 for _, name in BUCKETS}
    n_sent = n_char = 0
    sentences = list(corpus)
    for s in sentences:
        n_sent += 1
        n_char += len(s.chars)
        buckets[bucket_of(len(s.chars))] += 1
    labels = label_counts(sentences)
    return StatsReport(n_sent, n_char, buckets, {k: len(v) for k, v in labels.items()})


# --- label reduction --------------------------------------------------------

@dataclass(frozen=True)
class LabelMapping:
    pairs: dict
    threshold: int

    def __post_init__(self):
        chained = set(self.pairs) & set(self.pairs.values())
        if chained:
            raise ValueError(f"mapping chains through {sorted(chained)}")

    def apply(self, label: str) -> str:
        return self.pairs.get(label, label)

    def as_dict(self) -> dict:
        return {"threshold": self.threshold, "pairs": dict(self.pairs)}


def reduce_labels(stats: dict, threshold: int = 10) -> LabelMapping:
    """Map every label rarer than ``threshold`` to its nearest frequent label.

    Distance is Levenshtein over code points; ties prefer the more frequent
    target, then the lexicographically smaller one.
    """
    frequent = sorted((lab for lab, c in stats.items() if c >= threshold), key=lambda lab: (-stats[lab], lab))
    rare = [lab for lab, c in stats.items() if c < threshold]
    if not frequent:
        if not rare:
            return LabelMapping({}, threshold)
        raise CorpusError(f"no label reaches frequency {threshold}")
    pairs = {}
    for lab in sorted(rare):
        # frequent is already in tie-break order, so min keeps the first best
        pairs[lab] = min(frequent, key=lambda f: Levenshtein.distance(lab, f))
    return LabelMapping(pairs, threshold)


def apply_mappings(corpus: Iterable[AnnotatedSentence], mappings: dict[str, LabelMapping]) -> list[AnnotatedSentence]:
    """Relabel okurigana, particle and Kaeriten fields with the given mappings."""
    out = []
    for s in corpus:
        rec = sentence_to_record(s)
        for name in ("okurigana", "particle"):
            if name in mappings:
                rec[name] = [mappings[name].apply(v) if v else v for v in rec[name]]
        if "kaeriten" in mappings:
            rec["marks"] = [[mappings["kaeriten"].apply(lab)] if lab else []
                            for lab in ("".join(codes) for codes in rec["marks"])]
        out.append(sentence_from_record(rec))
    return out


# --- splitting --------------------------------------------------------------

def split_sizes(n: int, ratios: Sequence[float] = (0.8, 0.1, 0.1)) -> tuple[int, int, int]:
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {tuple(ratios)}")
    if n < 3:
        raise CorpusError(f"cannot split a corpus of {n} sentences three ways")
    # the epsilon keeps 0.29 * 100 from flooring to 28
    val, test = (math.floor(n * r + 1e-9) for r in ratios[1:])
    return n - val - test, val, test


def split_corpus(corpus: Union[Corpus, Sequence[AnnotatedSentence]], ratios=(0.8, 0.1, 0.1),
                 seed: int = 0) -> tuple[Corpus, Corpus, Corpus]:
    sentences = list(corpus)
    n_train, n_val, _ = split_sizes(len(sentences), ratios)
    order = list(range(len(sentences)))
    random.Random(seed).shuffle(order)
    shuffled = [sentences[i] for i in order]
    parts = (shuffled[:n_train], shuffled[n_train:n_train + n_val], shuffled[n_train + n_val:])
    base = corpus.provenance if isinstance(corpus, Corpus) else "corpus"
    return tuple(Corpus(p, provenance=f"{base} [{name}, seed {seed}]")
                 for p, name in zip(parts, ("train", "val", "test")))


# --- dataset ----------------------------------------------------------------

def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def verify_checksum(path, expected: Optional[str] = DATASET_SHA256) -> bool:
    """True when ``path`` matches ``expected``; always True while no checksum is pinned."""
    if expected is None:
        return True
    return file_sha256(path) == expected.lower()


def fetch_dataset(dest=None):
    """Locate the user-supplied dataset.

    The annotated corpus is not redistributed here.  Obtain it from its
    publisher, then pass its path or set the ``KUNDOKU_DATASET`` variable.
    """
    path = dest or os.environ.get(DATASET_ENV)
    if not path or not Path(path).is_file():
        raise CorpusError(f"dataset not found; download it and set {DATASET_ENV} to its path")
    if not verify_checksum(path):
        raise CorpusError(f"checksum mismatch for {path}")
    return Path(path)
