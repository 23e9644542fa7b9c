"""Domain types: Kaeriten mark tokens, annotated sentences, reading orders.

Text notation, one sentence per line::

    可_二 以 爲_一レ 師 矣!

Each glyph is optionally followed by ``_`` and its mark codes, ``!`` flags an
unread character and ``-`` bonds adjacent glyphs into a group that the marks
move as one unit (``A_二-B C D_一``).  Whitespace between glyphs is optional.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import ParseError
from .variants import modern_form


@dataclass(frozen=True)
class Empty:
    """The explicit "no mark" symbol E; equivalent to an empty slot."""

    def __str__(self):
        return "E"


@dataclass(frozen=True)
class Re:
    def __str__(self):
        return "レ"


@dataclass(frozen=True)
class Order:
    """一二-like mark: ``level`` 1 is 一二三, 2 上中下, 3 甲乙丙, 4 天地人."""

    level: int
    ordinal: int

    def __post_init__(self):
        if self.level < 1 or self.ordinal < 1:
            raise ValueError(f"Order level and ordinal must be >= 1, got {self.level}.{self.ordinal}")

    def __str__(self):
        return f"O{self.level},{self.ordinal}"


MarkToken = Union[Empty, Re, Order]

E = Empty()
RE = Re()

LEVEL_NAMES = {
    1: "一二三四五六七八九十",
    3: "甲乙丙丁戊己庚辛壬癸",
    4: "天地人",
}
# level 2: 上 is always first, 下 is the last of its group, 中 the middle of three
UPPER, MIDDLE, LOWER = "上", "中", "下"

_NATIVE: dict[str, Order] = {
    ch: Order(level, i + 1) for level, names in LEVEL_NAMES.items() for i, ch in enumerate(names)
}
_NATIVE[UPPER] = Order(2, 1)
_NATIVE[MIDDLE] = Order(2, 2)
_NUMERIC = re.compile(r"(\d+)\.(\d+)")
RESERVED = set("_-!") | set(" \t\r\n")


@dataclass(frozen=True)
class _Lower:
    """Placeholder for 下 until its group size is known."""


def _normalize_slot(marks: Iterable[MarkToken]) -> tuple:
    marks = tuple(marks)
    if any(isinstance(m, Empty) for m in marks):
        if len(marks) > 1:
            raise ParseError(f"E cannot be combined with other marks: {[str(m) for m in marks]}")
        return ()
    res = [m for m in marks if isinstance(m, Re)]
    orders = [m for m in marks if isinstance(m, Order)]
    if len(res) > 1 or len(orders) > 1 or len(res) + len(orders) != len(marks):
        raise ParseError(f"malformed mark slot: {[str(m) for m in marks]}")
    # Order below Re so that Re sits on top of it once pushed
    return tuple(orders) + tuple(res)


@dataclass(frozen=True)
class AnnotatedChar:
    glyph: str
    marks: tuple = ()
    group: Optional[int] = None
    silent: bool = False
    okurigana: str = ""
    particle: str = ""

    def __post_init__(self):
        if not self.glyph:
            raise ParseError("empty glyph")
        object.__setattr__(self, "marks", _normalize_slot(self.marks))
        if self.silent and self.marks:
            raise ParseError(f"unread character {self.glyph!r} cannot carry marks")


@dataclass(frozen=True)
class AnnotatedSentence:
    chars: tuple
    id: str = ""
    translation: Optional[str] = None

    def __post_init__(self):
        chars = tuple(self.chars)
        if not chars:
            raise ParseError("sentence has no characters")
        object.__setattr__(self, "chars", _renumber_groups(chars))
        _check_groups(self.chars)

    @property
    def source_text(self) -> str:
        return "".join(c.glyph for c in self.chars)

    def __len__(self):
        return len(self.chars)

    def group_spans(self) -> list[tuple[int, int]]:
        """Half-open ``(start, end)`` spans of bonded groups, in source order."""
        spans: dict[int, list[int]] = {}
        for i, c in enumerate(self.chars):
            if c.group is not None:
                spans.setdefault(c.group, []).append(i)
        return [(idx[0], idx[-1] + 1) for idx in spans.values()]

    def units(self) -> list[tuple[tuple[int, ...], tuple]]:
        """Reading units in source order: ``(member indices, marks)``.

        Silent characters are dropped; a group becomes one unit whose indices
        are its non-silent members and whose marks are the last member's.
        """
        out = []
        i, n = 0, len(self.chars)
        while i < n:
            c = self.chars[i]
            if c.group is None:
                if not c.silent:
                    out.append(((i,), c.marks))
                i += 1
                continue
            j = i
            while j < n and self.chars[j].group == c.group:
                j += 1
            members = tuple(k for k in range(i, j) if not self.chars[k].silent)
            out.append((members, self.chars[members[-1]].marks))
            i = j
        return out

    def with_chars(self, chars) -> "AnnotatedSentence":
        return AnnotatedSentence(tuple(chars), id=self.id, translation=self.translation)


def _renumber_groups(chars: tuple) -> tuple:
    mapping: dict[int, int] = {}
    out = []
    for c in chars:
        if c.group is not None and c.group not in mapping:
            mapping[c.group] = len(mapping)
        gid = None if c.group is None else mapping[c.group]
        out.append(c if gid == c.group else _replace(c, group=gid))
    return tuple(out)


def _replace(c: AnnotatedChar, **kw) -> AnnotatedChar:
    values = dict(glyph=c.glyph, marks=c.marks, group=c.group, silent=c.silent,
                  okurigana=c.okurigana, particle=c.particle)
    values.update(kw)
    return AnnotatedChar(**values)


def _check_groups(chars: tuple) -> None:
    seen_closed = set()
    prev = None
    members: dict[int, list[int]] = {}
    for i, c in enumerate(chars):
        g = c.group
        if g is not None:
            if g in seen_closed:
                raise ParseError(f"group {g} is not contiguous", i)
            members.setdefault(g, []).append(i)
        if prev is not None and prev != g:
            seen_closed.add(prev)
        prev = g
    for g, idx in members.items():
        if len(idx) < 2:
            raise ParseError(f"group {g} has a single member", idx[0])
        spoken = [i for i in idx if not chars[i].silent]
        if not spoken:
            raise ParseError(f"group {g} has no read member", idx[0])
        for i in idx:
            if i != spoken[-1] and chars[i].marks:
                raise ParseError("marks inside a group must sit on its last member", i)


@dataclass(frozen=True)
class Permutation:
    """Reading order: source indices listed in the order they are read."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if any(i < 0 for i in order) or len(set(order)) != len(order):
            raise ValueError(f"not a permutation: {list(order)}")
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __getitem__(self, i):
        return self.order[i]

    def is_bijection_onto(self, indices: Iterable[int]) -> bool:
        return sorted(self.order) == sorted(indices)

    def positions(self) -> dict[int, int]:
        """Source index -> reading position."""
        return {src: pos for pos, src in enumerate(self.order)}


@dataclass(frozen=True)
class OrderedSentence:
    chars: tuple  # (glyph, okurigana, particle) in reading order
    rendered: str = field(default="")

    @classmethod
    def from_chars(cls, chars: Sequence[AnnotatedChar], modernize: bool = True) -> "OrderedSentence":
        triples = tuple((c.glyph, c.okurigana, c.particle) for c in chars)
        glyph = modern_form if modernize else (lambda g: g)
        return cls(triples, "".join(glyph(g) + o + p for g, o, p in triples))

    @property
    def reading(self) -> str:
        return "".join(g for g, _, _ in self.chars)


# --- glyphs and mark codes -------------------------------------------------

def _is_extender(ch: str) -> bool:
    cp = ord(ch)
    return bool(unicodedata.combining(ch)) or 0xFE00 <= cp <= 0xFE0F or 0xE0100 <= cp <= 0xE01EF


def split_glyphs(text: str) -> list[str]:
    """Split text into glyphs: a base scalar plus any combining marks or variation selectors."""
    out: list[str] = []
    for ch in text:
        if out and _is_extender(ch):
            out[-1] += ch
        else:
            out.append(ch)
    return out


def _parse_code_run(codes: str, position: int) -> list:
    toks: list = []
    i = 0
    while i < len(codes):
        rest = codes[i:]
        if rest.startswith("re"):
            toks.append(RE)
            i += 2
            continue
        m = _NUMERIC.match(rest)
        if m:
            try:
                toks.append(Order(int(m.group(1)), int(m.group(2))))
            except ValueError as exc:
                raise ParseError(str(exc), position + i) from None
            i += m.end()
            continue
        ch = rest[0]
        if ch == "レ":
            toks.append(RE)
        elif ch == "E":
            toks.append(E)
        elif ch == LOWER:
            toks.append(_Lower())
        elif ch in _NATIVE:
            toks.append(_NATIVE[ch])
        else:
            raise ParseError(f"malformed mark code {ch!r}", position + i)
        i += 1
    return toks


def parse_code(code: str) -> list:
    """Parse a single mark-code string (``"一"``, ``"re"``, ``"1.2"``, ``"一レ"``)."""
    return _parse_code_run(code, 0)


def _level2_groups(slots: Sequence[Sequence]) -> list[list[tuple[int, int]]]:
    """Level-2 tokens as ``(slot index, token index)`` split into groups ending at 上."""
    groups: list[list[tuple[int, int]]] = []
    current: list[tuple[int, int]] = []
    for si, slot in enumerate(slots):
        for ti, tok in enumerate(slot):
            if isinstance(tok, _Lower) or (isinstance(tok, Order) and tok.level == 2):
                current.append((si, ti))
                if isinstance(tok, Order) and tok.ordinal == 1:
                    groups.append(current)
                    current = []
    if current:
        groups.append(current)
    return groups


def resolve_slots(slots: Sequence[Sequence]) -> list[tuple]:
    """Replace 下 placeholders by concrete ordinals and normalize every slot."""
    slots = [list(s) for s in slots]
    for group in _level2_groups(slots):
        for k, (si, ti) in enumerate(group):
            if isinstance(slots[si][ti], _Lower):
                slots[si][ti] = Order(2, max(2, len(group) - k))
    return [_normalize_slot(s) for s in slots]


def display_codes(slots: Sequence[Sequence[MarkToken]]) -> list[list[str]]:
    """Canonical native code strings per slot, falling back to ``i.j`` past the names."""
    # only a whole chain of at most three gets 上中下; longer ones are all numeric
    lower_ok: set[tuple[int, int]] = set()
    middle_ok: set[tuple[int, int]] = set()
    upper_ok: set[tuple[int, int]] = set()
    for group in _level2_groups(slots):
        ordinals = [slots[si][ti].ordinal for si, ti in group]
        if len(ordinals) <= 3 and ordinals == list(range(len(ordinals), 0, -1)):
            upper_ok.add(group[-1])
            if len(ordinals) > 1:
                lower_ok.add(group[0])
            if len(ordinals) == 3:
                middle_ok.add(group[1])
    out = []
    for si, slot in enumerate(slots):
        codes = []
        for ti, tok in enumerate(slot):
            if isinstance(tok, Re):
                codes.append("レ")
            elif isinstance(tok, Empty):
                codes.append("E")
            elif tok.level == 2:
                if (si, ti) in upper_ok:
                    codes.append(UPPER)
                elif (si, ti) in lower_ok:
                    codes.append(LOWER)
                elif (si, ti) in middle_ok:
                    codes.append(MIDDLE)
                else:
                    codes.append(f"2.{tok.ordinal}")
            elif tok.level in LEVEL_NAMES and tok.ordinal <= len(LEVEL_NAMES[tok.level]):
                codes.append(LEVEL_NAMES[tok.level][tok.ordinal - 1])
            else:
                codes.append(f"{tok.level}.{tok.ordinal}")
        out.append(codes)
    return out


# --- notation ---------------------------------------------------------------

def parse_annotated(text: str, id: str = "", translation: Optional[str] = None) -> AnnotatedSentence:
    """Parse one line of mark notation into an :class:`AnnotatedSentence`."""
    glyphs: list[str] = []
    slots: list[list] = []
    silent: list[bool] = []
    groups: list[Optional[int]] = []
    next_group = 0
    bond_open = False
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            if bond_open:
                raise ParseError("dangling '-' bond", i)
            i += 1
            continue
        if ch in RESERVED:
            raise ParseError(f"unexpected {ch!r}", i)
        start = i
        i += 1
        while i < n and _is_extender(text[i]):
            i += 1
        glyph = text[start:i]
        slot: list = []
        if i < n and text[i] == "_":
            j = i + 1
            while j < n and text[j] not in RESERVED:
                j += 1
            if j == i + 1:
                raise ParseError("empty mark code after '_'", i)
            slot = _parse_code_run(text[i + 1:j], i + 1)
            i = j
        is_silent = False
        if i < n and text[i] == "!":
            is_silent = True
            i += 1
        if bond_open:
            gid = groups[-1]
            if gid is None:
                gid = next_group
                next_group += 1
                groups[-1] = gid
            groups.append(gid)
        else:
            groups.append(None)
        bond_open = False
        if i < n and text[i] == "-":
            bond_open = True
            i += 1
        glyphs.append(glyph)
        slots.append(slot)
        silent.append(is_silent)
    if bond_open:
        raise ParseError("dangling '-' bond", n)
    if not glyphs:
        raise ParseError("empty sentence")
    resolved = resolve_slots(slots)
    resolved = _move_group_marks(resolved, groups, silent)
    chars = tuple(
        AnnotatedChar(g, marks=m, group=gid, silent=s)
        for g, m, gid, s in zip(glyphs, resolved, groups, silent)
    )
    return AnnotatedSentence(chars, id=id, translation=translation)


def _move_group_marks(slots: list[tuple], groups: list, silent: list[bool]) -> list[tuple]:
    slots = list(slots)
    by_group: dict[int, list[int]] = {}
    for i, g in enumerate(groups):
        if g is not None:
            by_group.setdefault(g, []).append(i)
    for g, idx in by_group.items():
        marked = [i for i in idx if slots[i]]
        if len(marked) > 1:
            raise ParseError("a bonded group may carry only one mark slot", marked[1])
        spoken = [i for i in idx if not silent[i]]
        if marked and spoken:
            src, dst = marked[0], spoken[-1]
            slots[src], slots[dst] = (), slots[src]
    return slots


def render_annotated(s: AnnotatedSentence) -> str:
    """Canonical mark notation; group marks are written after the group's first read member."""
    codes = display_codes([c.marks for c in s.chars])
    home: dict[int, int] = {}
    carrier: dict[int, int] = {}
    for i, c in enumerate(s.chars):
        if c.group is None:
            continue
        if not c.silent and c.group not in carrier:
            carrier[c.group] = i
        if not c.silent:
            home[c.group] = i
    words = []
    for i, c in enumerate(s.chars):
        if c.group is not None:
            slot_codes = codes[home[c.group]] if carrier[c.group] == i else []
        else:
            slot_codes = codes[i]
        text = c.glyph
        if slot_codes:
            text += "_" + "".join(slot_codes)
        if c.silent:
            text += "!"
        if c.group is not None and i + 1 < len(s.chars) and s.chars[i + 1].group == c.group:
            words.append(text + "-")
        else:
            words.append(text + " ")
    return "".join(words).rstrip()


# --- JSON records -----------------------------------------------------------

def sentence_to_record(s: AnnotatedSentence) -> dict:
    return {
        "id": s.id,
        "source": s.source_text,
        "marks": display_codes([c.marks for c in s.chars]),
        "groups": [list(span) for span in s.group_spans()],
        "silent": [i for i, c in enumerate(s.chars) if c.silent],
        "okurigana": [c.okurigana for c in s.chars],
        "particle": [c.particle for c in s.chars],
        "translation": s.translation,
    }


def sentence_from_record(rec: dict) -> AnnotatedSentence:
    try:
        source = rec["source"]
    except (KeyError, TypeError):
        raise ParseError("record has no 'source' field") from None
    glyphs = split_glyphs(source)
    n = len(glyphs)

    def per_char(name, default):
        values = rec.get(name)
        if values is None:
            return [default] * n
        if len(values) != n:
            raise ParseError(f"'{name}' has {len(values)} entries for {n} characters")
        return list(values)

    raw_marks = per_char("marks", [])
    slots = []
    for i, codes in enumerate(raw_marks):
        if isinstance(codes, str):
            codes = [codes] if codes else []
        slot = []
        for code in codes:
            slot.extend(_parse_code_run(code, i))
        slots.append(slot)
    silent_idx = set(rec.get("silent") or [])
    if any(not 0 <= i < n for i in silent_idx):
        raise ParseError("silent index out of range")
    groups: list[Optional[int]] = [None] * n
    for gid, span in enumerate(rec.get("groups") or []):
        start, end = span
        if not (0 <= start < end <= n) or end - start < 2:
            raise ParseError(f"bad group span {span}")
        for k in range(start, end):
            if groups[k] is not None:
                raise ParseError(f"overlapping group span {span}", k)
            groups[k] = gid
    silent = [i in silent_idx for i in range(n)]
    resolved = _move_group_marks(resolve_slots(slots), groups, silent)
    okurigana = per_char("okurigana", "")
    particle = per_char("particle", "")
    chars = tuple(
        AnnotatedChar(glyphs[i], marks=resolved[i], group=groups[i], silent=silent[i],
                      okurigana=okurigana[i] or "", particle=particle[i] or "")
        for i in range(n)
    )
    return AnnotatedSentence(chars, id=str(rec.get("id", "")), translation=rec.get("translation"))
