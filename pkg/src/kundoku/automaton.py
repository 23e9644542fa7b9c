"""Pushdown automaton with transduction for Kaeriten reading.

The input tape alternates reading units and marks, ``(c m)^n``.  A unit is one
character, or a bonded group acting as a single symbol.  Each transition in
:data:`RULES` is one row of the transition table.  The machine is
nondeterministic only where an ``O(i,1)`` mark is read; :func:`run` resolves
that by depth-first search, trying the push branch before the pop branch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .errors import InvalidAnnotationError, SearchLimitExceeded
from .model import (
    AnnotatedSentence,
    E,
    Empty,
    Order,
    OrderedSentence,
    Permutation,
    Re,
)

DEFAULT_MAX_CONFIGS = 10**6


class State(str, enum.Enum):
    Q0 = "q0"
    Q1 = "q1"
    Q2 = "q2"
    Q3 = "q3"  # reject trap
    Q4 = "q4"  # accepting


class _Bottom:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Z0"

    def __reduce__(self):
        return (_Bottom, ())


Z0 = _Bottom()


@dataclass(frozen=True)
class Unit:
    """A character or bonded group on the tape/stack; ``indices`` are source positions."""

    indices: tuple
    text: str

    def __str__(self):
        return self.text


Symbol = Union[Unit, Empty, Re, Order, _Bottom]

# Transition table, in the order it is written down.  ``c`` is a unit,
# ``σ`` any stack symbol; the right column is the emitted unit, if any.
RULES = {
    "d1": "δ(q0, c, σ) = (q0, cσ), σ ≠ O(i,1)",
    "d2": "δ(q0, c, O(i,1)) = (q3, O(i,1))",
    "d3": "δ(q0, レ, σ) = (q0, レσ)",
    "d4": "δ(q0, E, cσ) = (q1, σ) → c",
    "d5": "δ(q0, O(i,j), σ) = (q0, O(i,j)σ), j > 1",
    "d6a": "δ(q0, O(i,1), σ) ∋ (q0, O(i,1)σ)",
    "d6b": "δ(q0, O(i,1), σ) ∋ (q2, O(i,1)σ)",
    "d7": "δ(q1, ε, レcσ) = (q1, σ) → c",
    "d8": "δ(q1, ε, Z0) = (q0, Z0)",
    "d9": "δ(q1, ε, レO(i,1)) = (q2, O(i,1))",
    "d10": "δ(q1, ε, O(i,j)) = (q0, O(i,j))",
    "d11": "δ(q2, ε, O(i,j) c O(i,j+1)) = (q2, O(i,j+1)) → c",
    "d12": "δ(q2, ε, O(i,j) c O(m,n)) = (q0, O(m,n)), i ≠ m → c",
    "d13": "δ(q2, ε, O(i,j) c Z0) = (q0, Z0) → c",
    "d14": "δ(q2, ε, O(i,j) c レ) = (q1, レ) → c",
    "d15": "δ(q0, ε, Z0) = (q4, Z0)",
}


@dataclass(frozen=True)
class Tape:
    symbols: tuple
    silent: tuple = ()

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __iter__(self):
        return iter(self.symbols)


@dataclass(frozen=True)
class MachineConfig:
    state: State
    stack: tuple  # bottom first; Z0 at index 0
    input_cursor: int = 0
    output: tuple = ()

    @classmethod
    def initial(cls) -> "MachineConfig":
        return cls(State.Q0, (Z0,), 0, ())

    def to_dict(self) -> dict:
        return {
            "state": self.state.value,
            "stack": [symbol_name(s) for s in self.stack],
            "input_cursor": self.input_cursor,
            "output": [u.text for u in self.output],
        }


@dataclass(frozen=True)
class Move:
    rule: str
    config: MachineConfig
    emitted: Optional[Unit] = None


@dataclass
class Trace:
    steps: list = field(default_factory=list)  # (config_before, rule, emitted)
    accepted: bool = False
    failure_reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "failure_reason": self.failure_reason,
            "steps": [
                {"config": cfg.to_dict(), "rule": rule, "emitted": None if out is None else out.text}
                for cfg, rule, out in self.steps
            ],
        }


@dataclass
class ValidationResult:
    accepted: bool
    permutation: Optional[Permutation] = None
    ordered: Optional[OrderedSentence] = None
    ambiguous: Optional[bool] = None
    trace: Optional[Trace] = None
    outputs: Optional[list] = None  # distinct accepted orders, strict mode only

    @property
    def failure_reason(self) -> Optional[str]:
        return None if self.trace is None else self.trace.failure_reason


def symbol_name(sym) -> str:
    if isinstance(sym, Unit):
        return sym.text
    if isinstance(sym, Order):
        return f"O({sym.level},{sym.ordinal})"
    return str(sym)


def flatten_input(s: AnnotatedSentence) -> Tape:
    """Alternate units and marks; an empty slot contributes the E symbol."""
    symbols: list = []
    for indices, marks in s.units():
        symbols.append(Unit(indices, "".join(s.chars[i].glyph for i in indices)))
        symbols.extend(marks if marks else (E,))
    silent = tuple(i for i, c in enumerate(s.chars) if c.silent)
    return Tape(tuple(symbols), silent)


def _is_first_order(sym) -> bool:
    return isinstance(sym, Order) and sym.ordinal == 1


def step(config: MachineConfig, tape: Sequence) -> list[Move]:
    """All configurations reachable by one transition, in branch order."""
    state, stack, cur, out = config.state, config.stack, config.input_cursor, config.output
    top = stack[-1]
    moves: list[Move] = []

    if state is State.Q0:
        if cur < len(tape):
            head = tape[cur]
            nxt = cur + 1
            if isinstance(head, Unit):
                if _is_first_order(top):
                    moves.append(Move("d2", MachineConfig(State.Q3, stack, nxt, out)))
                else:
                    moves.append(Move("d1", MachineConfig(State.Q0, stack + (head,), nxt, out)))
            elif isinstance(head, Re):
                moves.append(Move("d3", MachineConfig(State.Q0, stack + (head,), nxt, out)))
            elif isinstance(head, Empty):
                if isinstance(top, Unit):
                    moves.append(Move("d4", MachineConfig(State.Q1, stack[:-1], nxt, out + (top,)), top))
            elif isinstance(head, Order):
                pushed = stack + (head,)
                if head.ordinal > 1:
                    moves.append(Move("d5", MachineConfig(State.Q0, pushed, nxt, out)))
                else:
                    moves.append(Move("d6a", MachineConfig(State.Q0, pushed, nxt, out)))
                    moves.append(Move("d6b", MachineConfig(State.Q2, pushed, nxt, out)))
        if top is Z0:
            moves.append(Move("d15", MachineConfig(State.Q4, stack, cur, out)))

    elif state is State.Q1:
        if isinstance(top, Re) and len(stack) >= 2:
            below = stack[-2]
            if isinstance(below, Unit):
                moves.append(Move("d7", MachineConfig(State.Q1, stack[:-2], cur, out + (below,)), below))
            elif _is_first_order(below):
                moves.append(Move("d9", MachineConfig(State.Q2, stack[:-1], cur, out)))
        elif top is Z0:
            moves.append(Move("d8", MachineConfig(State.Q0, stack, cur, out)))
        elif isinstance(top, Order):
            moves.append(Move("d10", MachineConfig(State.Q0, stack, cur, out)))

    elif state is State.Q2:
        if isinstance(top, Order) and len(stack) >= 3 and isinstance(stack[-2], Unit):
            c, below = stack[-2], stack[-3]
            rest, emitted = stack[:-2], out + (stack[-2],)
            if isinstance(below, Order):
                if below.level == top.level and below.ordinal == top.ordinal + 1:
                    moves.append(Move("d11", MachineConfig(State.Q2, rest, cur, emitted), c))
                elif below.level != top.level:
                    moves.append(Move("d12", MachineConfig(State.Q0, rest, cur, emitted), c))
            elif below is Z0:
                moves.append(Move("d13", MachineConfig(State.Q0, rest, cur, emitted), c))
            elif isinstance(below, Re):
                moves.append(Move("d14", MachineConfig(State.Q1, rest, cur, emitted), c))

    return moves


def is_accepting(config: MachineConfig, tape: Sequence) -> bool:
    return (
        config.state is State.Q4
        and config.input_cursor == len(tape)
        and config.stack == (Z0,)
    )


def _describe_dead_end(config: MachineConfig, tape: Sequence) -> str:
    stack = [symbol_name(s) for s in reversed(config.stack)]
    where = f"at tape position {config.input_cursor}, stack top→bottom {stack}"
    if config.state is State.Q3:
        return f"character read over unresolved O(i,1) {where}"
    if config.state is State.Q4:
        return f"accept state reached with input remaining {where}"
    if config.state is State.Q2:
        return f"O(i,j) mark cannot be resolved against the mark beneath it {where}"
    if config.state is State.Q1:
        return f"レ mark has no character beneath it {where}"
    if config.input_cursor >= len(tape):
        return f"input exhausted with unresolved marks on the stack {where}"
    return f"no transition for {symbol_name(tape[config.input_cursor])} {where}"


def _rebuild(node) -> list:
    steps = []
    while node[3] is not None:
        _, rule, emitted, parent, _ = node
        steps.append((parent[0], rule, emitted))
        node = parent
    steps.reverse()
    return steps


def run(
    s: AnnotatedSentence,
    strict: bool = False,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    modernize: bool = True,
) -> ValidationResult:
    """Run the automaton on ``s``.

    Accepts iff some branch ends in ``q4`` with the input consumed and only
    ``Z0`` left.  The reported output is the first accepting branch in DFS
    order; with ``strict`` every branch is explored and ``ambiguous`` is set
    when accepting branches disagree.
    """
    tape = flatten_input(s)
    # node: (config, rule, emitted, parent, depth)
    todo = [(MachineConfig.initial(), None, None, None, 0)]
    visited = 0
    first_accept = None
    outputs: list[tuple] = []
    deepest, depth_key = None, None

    while todo:
        node = todo.pop()
        visited += 1
        if visited > max_configs:
            raise SearchLimitExceeded(f"more than {max_configs} configurations explored for {s.id or s.source_text!r}")
        config = node[0]
        if is_accepting(config, tape):
            if first_accept is None:
                first_accept = node
            if config.output not in outputs:
                outputs.append(config.output)
            if not strict:
                break
            continue
        moves = step(config, tape)
        d = node[4]
        if not moves:
            key = (config.input_cursor, config.state is not State.Q4, d)
            if depth_key is None or key > depth_key:
                deepest, depth_key = node, key
            continue
        for mv in reversed(moves):
            todo.append((mv.config, mv.rule, mv.emitted, node, d + 1))

    if first_accept is None:
        trace = Trace(_rebuild(deepest) if deepest else [], False,
                      _describe_dead_end(deepest[0], tape) if deepest else "empty tape")
        return ValidationResult(False, trace=trace, ambiguous=False if strict else None)

    trace = Trace(_rebuild(first_accept), True, None)
    units = first_accept[0].output
    order = [i for u in units for i in u.indices]
    ordered = OrderedSentence.from_chars([s.chars[i] for i in order], modernize=modernize)
    return ValidationResult(
        True,
        permutation=Permutation(tuple(order)),
        ordered=ordered,
        ambiguous=(len(outputs) > 1) if strict else None,
        trace=trace,
        outputs=[[i for u in o for i in u.indices] for o in outputs] if strict else None,
    )


def transduce(s: AnnotatedSentence, modernize: bool = True) -> tuple[Permutation, OrderedSentence]:
    """Reading order and rendered Japanese for a validly annotated sentence."""
    result = run(s, modernize=modernize)
    if not result.accepted:
        raise InvalidAnnotationError(f"invalid annotation: {result.failure_reason}", result.trace)
    return result.permutation, result.ordered


def pass_rate(corpus: Sequence[AnnotatedSentence], **kwargs) -> float:
    """Fraction of sentences the automaton accepts."""
    if not corpus:
        raise ValueError("pass rate of an empty corpus is undefined")
    return sum(run(s, **kwargs).accepted for s in corpus) / len(corpus)
