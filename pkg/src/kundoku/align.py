"""Character alignment between a classical Chinese sentence and its Japanese reading,
kana-to-kanji restoration, and okurigana/particle separation."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import AlignmentError
from .model import Permutation, split_glyphs
from .variants import modern_form

# word classes whose inner kana are okurigana
OKURIGANA_TAGS = frozenset({"VERB", "ADV", "NOUN", "ADJ", "PRON", "DET"})
UD_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART",
    "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})
EXHAUSTIVE_LIMIT = 20000


def is_kana(ch: str) -> bool:
    cp = ord(ch[0])
    return 0x3041 <= cp <= 0x309F or (0x30A0 <= cp <= 0x30FF and cp != 0x30FB)


@dataclass
class KanaDictionary:
    """Kana spellings of characters that surface as kana in readings (ず for 不, これ for 之).

    ``entries`` maps ``(kana, tag)`` to a glyph; a ``None`` tag matches any context.
    """

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for (kana, _tag), glyph in self.entries.items():
            if not kana:
                raise ValueError("empty kana key")
            if len(split_glyphs(glyph)) != 1:
                raise ValueError(f"dictionary value must be one glyph, got {glyph!r}")

    @classmethod
    def from_json(cls, data: Union[dict, list]) -> "KanaDictionary":
        """Accept ``{"ず": "不"}`` or ``[{"kana": "ず", "glyph": "不", "tag": "AUX"}]``."""
        if isinstance(data, dict) and "entries" in data:
            data = data["entries"]
        if isinstance(data, dict):
            return cls({(k, None): v for k, v in data.items()})
        return cls({(e["kana"], e.get("tag")): e["glyph"] for e in data})

    @classmethod
    def load(cls, path) -> "KanaDictionary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def spellings(self, glyph: str) -> list[tuple[str, Optional[str]]]:
        return sorted(k for k, v in self.entries.items() if v == glyph or modern_form(v) == modern_form(glyph))


@dataclass(frozen=True)
class Alignment:
    n: int
    mapping: tuple  # (source index, translation position), by source index
    unread: tuple = ()
    restored: tuple = ()  # ((start, end), glyph)

    def permutation(self) -> Permutation:
        return Permutation(tuple(src for src, _ in sorted(self.mapping, key=lambda m: m[1])))

    def position_of(self) -> dict[int, int]:
        return dict(self.mapping)


def _crossings(assign: dict[int, int]) -> int:
    items = sorted(assign.items())
    return sum(1 for (_, p), (_, q) in itertools.combinations(items, 2) if p > q)


def _class_options(sources: list[int], cands: list[tuple[int, int]]) -> list[tuple]:
    """Injective maps of a glyph class into its candidate spans, matching as many as possible."""
    k = min(len(sources), len(cands))
    if math.comb(len(sources), k) * math.perm(len(cands), k) > EXHAUSTIVE_LIMIT:
        # too many to list: order-preserving windows only (no crossings inside the class)
        if len(sources) <= len(cands):
            return [tuple(zip(sources, cands[o:o + k])) for o in range(len(cands) - k + 1)]
        return [tuple(zip(sources[o:o + k], cands)) for o in range(len(sources) - k + 1)]
    opts = []
    for chosen in itertools.combinations(sources, k):
        for spans in itertools.permutations(cands, k):
            opts.append(tuple(zip(chosen, spans)))
    return opts


def _overlaps(spans: Iterable[tuple[int, int]]) -> bool:
    used: set[int] = set()
    for start, length in spans:
        cells = set(range(start, start + length))
        if used & cells:
            return True
        used |= cells
    return False


def _score(choice: Sequence[tuple]) -> tuple:
    assign = {src: span[0] for opt in choice for src, span in opt}
    ordered = tuple(p for _, p in sorted(assign.items()))
    return (-len(assign), _crossings(assign), ordered)


def align(
    source: Union[str, Sequence[str]],
    translation: str,
    dictionary: Optional[KanaDictionary] = None,
    allow_unread: bool = True,
    fold_variants: bool = True,
) -> Alignment:
    """Map each source glyph to one translation character.

    Traditional and modern glyph forms match each other.  A glyph with no
    literal occurrence may match a kana spelling from ``dictionary``.
    Repeated glyphs are assigned so that crossings are minimal, ties going to
    the leftmost positions.  Glyphs left over are unread.
    ``fold_variants=False`` compares glyphs exactly.
    """
    if not translation:
        raise AlignmentError("empty translation")
    src = split_glyphs(source) if isinstance(source, str) else list(source)
    tgt = split_glyphs(translation)
    form = modern_form if fold_variants else (lambda g: g)
    tgt_folded = [form(ch) for ch in tgt]
    dictionary = dictionary or KanaDictionary()

    classes: dict[str, list[int]] = {}
    for i, g in enumerate(src):
        classes.setdefault(form(g), []).append(i)
    pools: dict[str, list[tuple[int, int]]] = {}
    for glyph in classes:
        literal = [(p, 1) for p, ch in enumerate(tgt_folded) if ch == glyph]
        if literal:
            pools[glyph] = literal
            continue
        spelled = []
        for kana, _tag in dictionary.spellings(glyph):
            kana_glyphs = split_glyphs(kana)
            for p in range(len(tgt) - len(kana_glyphs) + 1):
                if tgt[p:p + len(kana_glyphs)] == kana_glyphs:
                    spelled.append((p, len(kana_glyphs)))
        pools[glyph] = sorted(set(spelled))
    option_lists = [_class_options(srcs, pools[g]) for g, srcs in classes.items() if pools[g]]
    total = math.prod(len(o) for o in option_lists)
    if total <= EXHAUSTIVE_LIMIT:
        best = None
        for choice in itertools.product(*option_lists):
            if _overlaps(span for opt in choice for _, span in opt):
                continue
            score = _score(choice)
            if best is None or score < best[0]:
                best = (score, choice)
        choice = list(best[1]) if best else [() for _ in option_lists]
    else:
        # coordinate descent from the order-preserving assignment
        choice = [opts[0] for opts in option_lists]
        improved = True
        while improved:
            improved = False
            for ci, opts in enumerate(option_lists):
                current = _score(choice)
                for opt in opts:
                    trial = choice[:ci] + [opt] + choice[ci + 1:]
                    if _overlaps(span for o in trial for _, span in o):
                        continue
                    if _score(trial) < current:
                        choice, current, improved = trial, _score(trial), True

    mapping, restored = [], []
    for opt in choice:
        for srcidx, (p, length) in opt:
            mapping.append((srcidx, p))
            if tgt_folded[p] != form(src[srcidx]) or length > 1:
                restored.append(((p, p + length), src[srcidx]))
    matched = {s for s, _ in mapping}
    unread = tuple(i for i in range(len(src)) if i not in matched)
    if unread and not allow_unread:
        raise AlignmentError(f"no translation position for {[src[i] for i in unread]}")
    return Alignment(len(src), tuple(sorted(mapping)), unread, tuple(sorted(restored)))


@dataclass(frozen=True)
class KanaAssignment:
    okurigana: tuple
    particle: tuple
    leading: str = ""  # kana before the first aligned glyph


def _check_tiling(spans: Sequence, length: int) -> list[tuple[int, int, str]]:
    norm = sorted((int(s), int(e), str(t)) for s, e, t in spans)
    cursor = 0
    for s, e, _ in norm:
        if s != cursor or e <= s:
            raise AlignmentError(f"POS spans do not tile the translation at position {cursor}")
        cursor = e
    if cursor != length:
        raise AlignmentError(f"POS spans cover {cursor} of {length} characters")
    return norm


def classify_kana(translation: str, alignment: Alignment, pos_spans: Optional[Sequence] = None) -> KanaAssignment:
    """Split the translation's kana into okurigana and particles per source glyph.

    ``pos_spans`` are ``(start, end, tag)`` words tiling the translation.
    Kana inside a VERB/ADV/NOUN/ADJ/PRON/DET word become okurigana of that
    word's glyph.  Any other kana is a particle of the preceding glyph.
    Without spans, every kana run is okurigana of the glyph before it.
    """
    tgt = split_glyphs(translation)
    if pos_spans is None:
        spans = [(0, len(tgt), "NOUN")]
    else:
        spans = _check_tiling(pos_spans, len(tgt))
    owner = {p: s for s, p in alignment.mapping}
    covered: dict[int, int] = {}
    for (start, end), _glyph in alignment.restored:
        src = owner[start]
        for p in range(start, end):
            covered[p] = src

    okuri = [""] * alignment.n
    part = [""] * alignment.n
    leading = ""
    last = None
    for start, end, tag in spans:
        if tag not in UD_TAGS:
            warnings.warn(f"unknown POS tag {tag!r}; treating its kana as particles", stacklevel=2)
        word_owner = None
        for p in range(start, end):
            if p in covered:
                if owner.get(p) is not None:
                    last = word_owner = covered[p]
                continue
            if p in owner:
                last = word_owner = owner[p]
                continue
            ch = tgt[p]
            if not is_kana(ch):
                continue
            if tag in OKURIGANA_TAGS and word_owner is not None:
                okuri[word_owner] += ch
            elif last is not None:
                part[last] += ch
            else:
                leading += ch
    return KanaAssignment(tuple(okuri), tuple(part), leading)
