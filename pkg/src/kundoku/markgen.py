"""Kaeriten generation from a reading order, and the expressibility oracle.

Generation works on reading *units*.  Characters that move together become a
bonded group.  The unit order is then replayed on a stack: each time a unit
is read, a run of stacked units pops after it.  Within a run, a unit popped
right after its source successor gets レ.  Any other pop is chained through
an 一二-like group, and nested groups get strictly higher levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import count
from typing import Iterable, Optional, Sequence

from .errors import InexpressibleError
from .model import RE, AnnotatedChar, AnnotatedSentence, Order, Permutation


@dataclass(frozen=True)
class MarkAssignment:
    marks: tuple  # one slot per source index
    groups: tuple = ()  # half-open spans of bonded characters

    def sentence(self, glyphs: Sequence[str], silent: Iterable[int] = (), id: str = "",
                 translation: Optional[str] = None, okurigana=None, particle=None) -> AnnotatedSentence:
        silent = set(silent)
        group_of = {}
        for gid, (start, end) in enumerate(self.groups):
            for k in range(start, end):
                group_of[k] = gid
        okurigana = okurigana or [""] * len(glyphs)
        particle = particle or [""] * len(glyphs)
        chars = tuple(
            AnnotatedChar(g, marks=self.marks[i], group=group_of.get(i), silent=i in silent,
                          okurigana=okurigana[i], particle=particle[i])
            for i, g in enumerate(glyphs)
        )
        return AnnotatedSentence(chars, id=id, translation=translation)


def _as_order(perm) -> tuple:
    return tuple(perm.order if isinstance(perm, Permutation) else perm)


def _reading_units(order: Sequence[int]) -> list[list[int]]:
    """Coalesce co-moving runs: source-consecutive, read consecutively, and deferred."""
    m = len(order)
    pos = [0] * m
    for p, x in enumerate(order):
        pos[x] = p
    deferred = [False] * m
    seen_max = -1
    for x in order:
        deferred[x] = seen_max > x
        seen_max = max(seen_max, x)
    units: list[list[int]] = []
    for x in range(m):
        if units and deferred[x] and units[-1][-1] == x - 1 and pos[x] == pos[x - 1] + 1:
            units[-1].append(x)
        else:
            units.append([x])
    return units


def _find_312(seq: Sequence[int]) -> Optional[tuple[int, int, int]]:
    """Positions-in-source ``(a, b, c)`` with ``a < b < c`` read as c, a, b."""
    n = len(seq)
    for k in range(n):
        c = seq[k]
        smaller = [x for x in seq[k + 1:] if x < c]
        for i, a in enumerate(smaller):
            for b in smaller[i + 1:]:
                if a < b:
                    return a, b, c
    return None


def generate_marks(n: int, perm, silent: Iterable[int] = ()) -> MarkAssignment:
    """Kaeriten marks and group bonds that make the automaton read ``perm``.

    ``perm`` lists the read (non-silent) source indices of an ``n``-character
    sentence in reading order.  Raises :class:`InexpressibleError` when no
    annotation can produce it.
    """
    order = _as_order(perm)
    silent = set(silent)
    spoken = [i for i in range(n) if i not in silent]
    if sorted(order) != spoken:
        raise ValueError(f"{list(order)} is not a permutation of the read indices {spoken}")
    rank = {src: k for k, src in enumerate(spoken)}
    local = [rank[x] for x in order]

    units = _reading_units(local)
    unit_of = {x: u for u, members in enumerate(units) for x in members}
    unit_order = []
    for x in local:
        if not unit_order or unit_order[-1] != unit_of[x]:
            unit_order.append(unit_of[x])

    # replay on a stack; each run starts with the unit just read
    runs: list[list[int]] = []
    stack: list[int] = []
    k = 0
    for u in range(len(units)):
        stack.append(u)
        run = []
        while stack and k < len(unit_order) and stack[-1] == unit_order[k]:
            run.append(stack.pop())
            k += 1
        if run:
            runs.append(run)
    if stack:
        a, b, c = _find_312(unit_order)
        witness = tuple(spoken[units[u][0]] for u in (a, b, c))
        raise InexpressibleError(
            f"reading order {list(order)} is not expressible: source characters {witness[0]} < {witness[1]} < "
            f"{witness[2]} are read as {witness[2]}, {witness[0]}, {witness[1]} (pattern 312)",
            pattern=witness,
        )

    re_mark = [False] * len(units)
    chain: dict[int, tuple[int, int]] = {}  # unit -> (group id, ordinal)
    group_ids = count()
    for run in runs:
        for prev, cur in zip(run, run[1:]):
            if prev == cur + 1:
                re_mark[cur] = True
            else:
                if prev not in chain:
                    chain[prev] = (next(group_ids), 1)
                gid, ordinal = chain[prev]
                chain[cur] = (gid, ordinal + 1)

    members: dict[int, list[int]] = {}
    for u, (gid, _) in chain.items():
        members.setdefault(gid, []).append(u)
    spans = {gid: (min(us), max(us)) for gid, us in members.items()}
    level: dict[int, int] = {}
    for gid in sorted(spans, key=lambda g: spans[g][1] - spans[g][0]):
        lo, hi = spans[gid]
        inner = [level[h] for h in level if lo <= spans[h][0] and spans[h][1] <= hi]
        level[gid] = 1 + max(inner, default=0)

    marks = [()] * n
    for u, unit in enumerate(units):
        slot = []
        if u in chain:
            gid, ordinal = chain[u]
            slot.append(Order(level[gid], ordinal))
        if re_mark[u]:
            slot.append(RE)
        marks[spoken[unit[-1]]] = tuple(slot)
    groups = tuple((spoken[unit[0]], spoken[unit[-1]] + 1) for unit in units if len(unit) > 1)
    return MarkAssignment(tuple(marks), groups)


def annotate(glyphs: Sequence[str], perm, silent: Iterable[int] = (), **kwargs) -> AnnotatedSentence:
    """Annotated sentence whose Kaeriten reproduce ``perm``."""
    silent = tuple(silent)
    return generate_marks(len(glyphs), perm, silent).sentence(glyphs, silent, **kwargs)


# --- direct stack / stack-of-queues simulator -------------------------------

def _block_sizes(i: int, n: int, allow_groups: bool) -> range:
    return range(1, (n - i if allow_groups else 1) + 1)


def is_expressible(perm, allow_groups: bool = True) -> bool:
    """Whether a stack (or a stack of queues) can turn source order into ``perm``.

    Moves: push the next block of consecutive source characters (size 1
    unless ``allow_groups``), or pop the top block to the output, which then
    emits its characters in source order.
    """
    target = _as_order(perm)
    n = len(target)
    if sorted(target) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {list(target)}")

    @lru_cache(maxsize=None)
    def reach(i: int, stack: tuple) -> bool:
        emitted = i - sum(len(b) for b in stack)
        if emitted == n:
            return True
        if stack:
            top = stack[-1]
            if target[emitted:emitted + len(top)] == top and reach(i, stack[:-1]):
                return True
        for size in _block_sizes(i, n, allow_groups) if i < n else ():
            if reach(i + size, stack + (tuple(range(i, i + size)),)):
                return True
        return False

    return reach(0, ())


def reachable_orders(n: int, allow_groups: bool) -> frozenset:
    """Every output order the simulator can produce from ``0..n-1``."""

    @lru_cache(maxsize=None)
    def suffixes(i: int, stack: tuple) -> frozenset:
        if i == n and not stack:
            return frozenset({()})
        out = set()
        if stack:
            top = stack[-1]
            out.update(top + rest for rest in suffixes(i, stack[:-1]))
        for size in _block_sizes(i, n, allow_groups) if i < n else ():
            out |= suffixes(i + size, stack + (tuple(range(i, i + size)),))
        return frozenset(out)

    return suffixes(0, ())


def round_trip(n: int, perm) -> bool:
    """Generate marks for ``perm`` and check that the automaton reads them back as ``perm``."""
    from .automaton import run

    order = _as_order(perm)
    sentence = annotate([chr(0x4E00 + i) for i in range(n)], order)
    result = run(sentence)
    return result.accepted and result.permutation.order == order
